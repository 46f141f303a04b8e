"""Semantic-distance toolkit for knowledge fine-tuning.

Submodules:

- embed_io: interchange formats (SEMB embeddings, SMAT matrices, JSONL datasets)
- semantics: mean pooling, cosine distance, re-weighting coefficient
- metrics: accuracy/generality/locality, deviation analysis, binned reports
- filtering: greedy working-set optimizer and random baseline
- reweight: per-example loss weight emission
- matan: Frobenius/SVD/subspace-projection/PCA diagnostics
- cli: the ``semkit`` command

Submodules are imported lazily so the command-line entry point can configure
threading before any numerical library loads.
"""

from __future__ import annotations

import importlib

__version__ = "0.1.0"

_SUBMODULES = (
    "cli",
    "embed_io",
    "errors",
    "filtering",
    "matan",
    "metrics",
    "reweight",
    "semantics",
)


def __getattr__(name: str):
    if name in _SUBMODULES:
        return importlib.import_module(f".{name}", __name__)
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")


def __dir__():
    return sorted(set(globals()) | set(_SUBMODULES))
