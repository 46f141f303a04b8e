"""Writers for the semkit interchange formats and a minimal dataset reader.

Layouts (all integers little-endian u32, floats IEEE float32):

    SEMB  "SEMB" | version = 1 | dim | count
          per record: id_len | id UTF-8 | token_count | token_count*dim floats
    SMAT  "SMAT" | version = 1 | rows | cols | rows*cols floats

Records are emitted in ascending id order so output bytes are deterministic.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class ExtractionError(Exception):
    pass


def write_semb(dim: int, records: dict[str, np.ndarray], path) -> None:
    parts = [b"SEMB", struct.pack("<III", 1, dim, len(records))]
    for rec_id in sorted(records):
        tokens = np.ascontiguousarray(records[rec_id], dtype="<f4")
        if tokens.ndim != 2 or tokens.shape[0] < 1 or tokens.shape[1] != dim:
            raise ExtractionError(
                f"record {rec_id!r} has shape {tokens.shape}, expected T x {dim}"
            )
        raw_id = rec_id.encode("utf-8")
        parts.append(struct.pack("<I", len(raw_id)))
        parts.append(raw_id)
        parts.append(struct.pack("<I", tokens.shape[0]))
        parts.append(tokens.tobytes())
    Path(path).write_bytes(b"".join(parts))


def write_smat(values: np.ndarray, path) -> None:
    arr = np.ascontiguousarray(values, dtype="<f4")
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ExtractionError(f"matrix must be 2-D and non-empty, got {arr.shape}")
    header = b"SMAT" + struct.pack("<III", 1, arr.shape[0], arr.shape[1])
    Path(path).write_bytes(header + arr.tobytes())


@dataclass
class DatasetItem:
    id: str
    prompt: str
    target: str
    old: str
    new: str | None


def read_dataset(path) -> list[DatasetItem]:
    """Light JSONL reader; deep validation belongs to the core toolkit."""
    items: list[DatasetItem] = []
    seen: set[str] = set()
    text = Path(path).read_text(encoding="utf-8")
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as e:
            raise ExtractionError(f"{path}: line {line_no}: invalid JSON: {e.msg}")
        for key in ("id", "prompt", "target", "old"):
            if not isinstance(obj.get(key), str):
                raise ExtractionError(
                    f"{path}: line {line_no}: missing or non-string key {key!r}"
                )
        if obj["id"] in seen:
            raise ExtractionError(f"{path}: line {line_no}: duplicate id {obj['id']!r}")
        seen.add(obj["id"])
        new = obj.get("new")
        if new is not None and not isinstance(new, str):
            raise ExtractionError(f"{path}: line {line_no}: key 'new' must be a string")
        items.append(
            DatasetItem(
                id=obj["id"],
                prompt=obj["prompt"],
                target=obj["target"],
                old=obj["old"],
                new=new,
            )
        )
    return items
