"""Checkpoint-to-file extraction.

Three dump modes, all deterministic for a fixed checkpoint and manifest:

- embeddings: per dataset item, the embedding-layer rows of each answer
  string (target, old, and new when present), one SEMB record per answer,
  keyed "<item_id>#<role>". No pooling happens here; the core toolkit owns
  the distance math.
- matrix:<name>: one named 2-D tensor as SMAT. When <name> is not itself a
  tensor but <name>.lora_B.* / <name>.lora_A.* exist, the low-rank update
  is materialized as the product B @ A.
- features: the final-layer hidden state at the last prompt token, one row
  per item, stacked into an SMAT.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .formats import ExtractionError, read_dataset, write_semb, write_smat

ANSWER_ROLES = ("target", "old", "new")

_LORA_SUFFIX_PAIRS = (
    ("lora_B.weight", "lora_A.weight"),
    ("lora_B.default.weight", "lora_A.default.weight"),
)


@dataclass
class ExtractionManifest:
    """Provenance record written alongside every output file."""

    model: str
    tokenizer: str
    selector: str  # "embeddings" | "matrix:<name>" | "features"
    dataset: str | None
    output: str
    casing: str = "preserved"
    include_special_tokens: bool = False
    notes: str = ""

    def write(self) -> None:
        path = Path(str(self.output) + ".manifest.json")
        path.write_text(
            json.dumps(asdict(self), indent=2, ensure_ascii=False) + "\n",
            encoding="utf-8",
        )


def _load_tokenizer(manifest: ExtractionManifest):
    from transformers import AutoTokenizer

    return AutoTokenizer.from_pretrained(manifest.tokenizer)


def _load_model(manifest: ExtractionManifest):
    import torch
    from transformers import AutoModel

    model = AutoModel.from_pretrained(manifest.model)
    model.eval()
    torch.set_grad_enabled(False)
    return model


def _token_ids(tokenizer, text: str, manifest: ExtractionManifest, what: str):
    ids = tokenizer(text, add_special_tokens=manifest.include_special_tokens)[
        "input_ids"
    ]
    if not ids:
        raise ExtractionError(f"{what}: {text!r} tokenized to zero tokens")
    return ids


def extract_answer_embeddings(manifest: ExtractionManifest) -> None:
    """Write one SEMB record per answer string of each dataset item."""
    import torch

    if manifest.dataset is None:
        raise ExtractionError("embedding extraction needs --dataset")
    items = read_dataset(manifest.dataset)
    tokenizer = _load_tokenizer(manifest)
    model = _load_model(manifest)
    weight = model.get_input_embeddings().weight.detach().cpu()
    matrix = weight.to(torch.float32).numpy()

    records: dict[str, np.ndarray] = {}
    for item in items:
        answers = {"target": item.target, "old": item.old}
        if item.new is not None:
            answers["new"] = item.new
        for role, text in answers.items():
            key = f"{item.id}#{role}"
            ids = _token_ids(tokenizer, text, manifest, f"item {item.id!r} {role}")
            records[key] = matrix[ids]
    write_semb(matrix.shape[1], records, manifest.output)
    manifest.write()


def _load_state_dict(model_path: str) -> dict:
    import torch

    path = Path(model_path)
    if path.is_file():
        return _load_tensor_file(path)
    merged: dict = {}
    for name in (
        "adapter_model.safetensors",
        "adapter_model.bin",
        "model.safetensors",
        "pytorch_model.bin",
    ):
        candidate = path / name
        if candidate.exists():
            merged.update(_load_tensor_file(candidate))
    if merged:
        return merged
    from transformers import AutoModel

    return dict(AutoModel.from_pretrained(model_path).state_dict())


def _load_tensor_file(path: Path) -> dict:
    import torch

    if path.suffix == ".safetensors":
        from safetensors.torch import load_file

        return load_file(str(path))
    return torch.load(str(path), map_location="cpu", weights_only=True)


def _resolve_matrix(state: dict, name: str) -> np.ndarray:
    import torch

    if name in state:
        tensor = state[name]
        if tensor.ndim != 2:
            raise ExtractionError(
                f"tensor {name!r} has {tensor.ndim} dimensions, need 2"
            )
        return tensor.to(torch.float32).numpy()
    for b_suffix, a_suffix in _LORA_SUFFIX_PAIRS:
        b_name, a_name = f"{name}.{b_suffix}", f"{name}.{a_suffix}"
        if b_name in state and a_name in state:
            b = state[b_name].to(torch.float32)
            a = state[a_name].to(torch.float32)
            if b.shape[1] != a.shape[0]:
                raise ExtractionError(
                    f"adapter factors {b_name} {tuple(b.shape)} and "
                    f"{a_name} {tuple(a.shape)} do not conform"
                )
            return (b @ a).numpy()
    available = "\n  ".join(sorted(state))
    raise ExtractionError(
        f"no tensor or adapter pair named {name!r}; available tensors:\n  {available}"
    )


def extract_matrix(manifest: ExtractionManifest, name: str) -> None:
    """Write one named weight matrix (or materialized low-rank update)."""
    state = _load_state_dict(manifest.model)
    write_smat(_resolve_matrix(state, name), manifest.output)
    manifest.write()


def extract_features(manifest: ExtractionManifest) -> None:
    """Stack the final-layer hidden state of each item's prompt."""
    import torch

    if manifest.dataset is None:
        raise ExtractionError("feature extraction needs --dataset")
    items = read_dataset(manifest.dataset)
    if not items:
        raise ExtractionError("dataset has no items")
    tokenizer = _load_tokenizer(manifest)
    model = _load_model(manifest)

    rows = []
    for item in items:
        ids = _token_ids(tokenizer, item.prompt, manifest, f"item {item.id!r} prompt")
        output = model(torch.tensor([ids]))
        rows.append(
            output.last_hidden_state[0, -1].to(torch.float32).cpu().numpy()
        )
    write_smat(np.stack(rows), manifest.output)
    manifest.write()
