"""Readers and writers for the toolkit's interchange files.

Three formats are supported, all validated exhaustively before any math runs:

SEMB (token embeddings)::

    magic "SEMB" | version u32 LE = 1 | dim u32 LE | count u32 LE
    then per record: id_len u32 LE | id UTF-8 | token_count u32 LE
                     | token_count * dim float32 LE, row-major

SMAT (dense matrix)::

    magic "SMAT" | version u32 LE = 1 | rows u32 LE | cols u32 LE
    | rows * cols float32 LE, row-major

Dataset (JSON Lines): one object per line with required keys
``id``, ``prompt``, ``target``, ``old`` and optional ``new``,
``rephrases`` ([{prompt, answer}]), ``locality_probes``
([{prompt, old_answer, new_answer}]).

Writers are deterministic: the same in-memory value always produces the same
bytes, and write -> read -> write is byte-identical.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    DuplicateId,
    EmptyMatrix,
    FormatError,
    IoFailure,
    MagicMismatch,
    MissingEmbedding,
    MissingField,
    NonFiniteValue,
    ParseError,
    ShapeMismatch,
    TrailingData,
    TruncatedFile,
    UnsupportedVersion,
)

SEMB_MAGIC = b"SEMB"
SMAT_MAGIC = b"SMAT"
FORMAT_VERSION = 1

ANSWER_ROLES = ("target", "old", "new")


def answer_key(item_id: str, role: str) -> str:
    """Embedding-record key for one answer of one dataset item."""
    if role not in ANSWER_ROLES:
        raise ValueError(f"unknown answer role {role!r}")
    return f"{item_id}#{role}"


# --- domain types -------------------------------------------------------------

@dataclass
class EmbeddingRecord:
    """One string's per-token embedding matrix (T x d, T >= 1)."""

    id: str
    tokens: np.ndarray

    def validate(self, dim: int) -> None:
        t = self.tokens
        if t.ndim != 2 or t.shape[0] < 1:
            raise EmptyMatrix(f"record {self.id!r}: token matrix must be T x d with T >= 1")
        if t.shape[1] != dim:
            raise ShapeMismatch(
                f"record {self.id!r}: {t.shape[1]} columns, table dimension is {dim}"
            )
        if not np.isfinite(t).all():
            raise NonFiniteValue(f"record {self.id!r} contains a non-finite value")


@dataclass
class EmbeddingTable:
    """Token-embedding records keyed by id, all sharing one dimension."""

    dim: int
    records: dict[str, EmbeddingRecord] = field(default_factory=dict)

    def validate(self) -> None:
        if self.dim < 1:
            raise ShapeMismatch(f"embedding dimension must be >= 1, got {self.dim}")
        for key, rec in self.records.items():
            if key != rec.id:
                raise DuplicateId(f"record keyed {key!r} carries id {rec.id!r}")
            rec.validate(self.dim)

    def add(self, record: EmbeddingRecord) -> None:
        if record.id in self.records:
            raise DuplicateId(f"duplicate embedding id {record.id!r}")
        self.records[record.id] = record

    def tokens(self, key: str) -> np.ndarray:
        """Token matrix for ``key``, raising MissingEmbedding when absent."""
        rec = self.records.get(key)
        if rec is None:
            raise MissingEmbedding(key)
        return rec.tokens

    def __contains__(self, key: str) -> bool:
        return key in self.records

    def __len__(self) -> int:
        return len(self.records)

    @classmethod
    def from_arrays(cls, dim: int, arrays: dict[str, object]) -> "EmbeddingTable":
        """Build a table from plain arrays or nested lists (convenience)."""
        table = cls(dim=dim)
        for key, value in arrays.items():
            tokens = np.asarray(value, dtype=np.float32)
            if tokens.ndim == 1:
                tokens = tokens.reshape(1, -1)
            table.add(EmbeddingRecord(id=key, tokens=tokens))
        table.validate()
        return table


@dataclass
class DenseMatrix:
    """Row-major dense real matrix with float32 storage."""

    values: np.ndarray

    def __post_init__(self):
        self.values = np.ascontiguousarray(self.values, dtype=np.float32)

    @property
    def rows(self) -> int:
        return int(self.values.shape[0])

    @property
    def cols(self) -> int:
        return int(self.values.shape[1])

    def validate(self) -> None:
        if self.values.ndim != 2:
            raise ShapeMismatch(f"matrix must be 2-D, got {self.values.ndim}-D")
        if self.rows < 1 or self.cols < 1:
            raise ShapeMismatch(f"matrix dimensions must be positive, got {self.values.shape}")
        if not np.isfinite(self.values).all():
            raise NonFiniteValue("matrix contains a non-finite value")


@dataclass
class Rephrase:
    prompt: str
    answer: str


@dataclass
class LocalityProbe:
    prompt: str
    old_answer: str
    new_answer: str


@dataclass
class KnowledgeItem:
    """One knowledge tuple: prompt, target answer, pre-tune answer, and
    optionally the post-tune answer plus rephrase and locality probes."""

    id: str
    prompt: str
    target: str
    old: str
    new: str | None = None
    rephrases: list[Rephrase] = field(default_factory=list)
    locality_probes: list[LocalityProbe] = field(default_factory=list)


# --- binary helpers -----------------------------------------------------------

class _Cursor:
    """Sequential reader over a byte buffer that reports offsets on failure."""

    def __init__(self, data: bytes, what: str):
        self.data = data
        self.pos = 0
        self.what = what

    def take(self, n: int, why: str) -> bytes:
        if self.pos + n > len(self.data):
            raise TruncatedFile(
                f"{self.what}: file ends while reading {why}", offset=self.pos
            )
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def u32(self, why: str) -> int:
        return struct.unpack("<I", self.take(4, why))[0]

    def done(self) -> None:
        if self.pos != len(self.data):
            raise TrailingData(
                f"{self.what}: {len(self.data) - self.pos} unexpected bytes after content",
                offset=self.pos,
            )


def _read_file(path) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as e:
        raise IoFailure(f"cannot read {path}: {e}") from e


def _write_file(path, data: bytes) -> None:
    try:
        Path(path).write_bytes(data)
    except OSError as e:
        raise IoFailure(f"cannot write {path}: {e}") from e


def _check_header(cur: _Cursor, magic: bytes) -> None:
    got = cur.take(4, "magic")
    if got != magic:
        raise MagicMismatch(
            f"{cur.what}: expected magic {magic!r}, found {got!r}", offset=0
        )
    version = cur.u32("version")
    if version != FORMAT_VERSION:
        raise UnsupportedVersion(
            f"{cur.what}: version {version}, this reader supports {FORMAT_VERSION}",
            offset=4,
        )


def _check_finite(raw: np.ndarray, values_offset: int, what: str) -> None:
    finite = np.isfinite(raw)
    if not finite.all():
        idx = int(np.argmin(finite.ravel()))
        raise NonFiniteValue(
            f"{what}: non-finite float32 value", offset=values_offset + 4 * idx
        )


# --- SEMB ---------------------------------------------------------------------

def read_embeddings(path) -> EmbeddingTable:
    """Parse a SEMB file into an EmbeddingTable, validating every field."""
    cur = _Cursor(_read_file(path), "SEMB")
    _check_header(cur, SEMB_MAGIC)
    dim_offset = cur.pos
    dim = cur.u32("dimension")
    if dim < 1:
        raise FormatError("SEMB: dimension must be >= 1", offset=dim_offset)
    count = cur.u32("record count")

    table = EmbeddingTable(dim=dim)
    for i in range(count):
        id_len = cur.u32(f"record {i}: id length")
        id_offset = cur.pos
        raw_id = cur.take(id_len, f"record {i}: id")
        try:
            rec_id = raw_id.decode("utf-8")
        except UnicodeDecodeError as e:
            raise FormatError(
                f"SEMB: record {i}: id is not valid UTF-8", offset=id_offset
            ) from e
        tc_offset = cur.pos
        token_count = cur.u32(f"record {rec_id!r}: token count")
        if token_count < 1:
            raise FormatError(
                f"SEMB: record {rec_id!r}: token count must be >= 1", offset=tc_offset
            )
        values_offset = cur.pos
        raw = cur.take(4 * token_count * dim, f"record {rec_id!r}: values")
        tokens = np.frombuffer(raw, dtype="<f4").reshape(token_count, dim)
        _check_finite(tokens, values_offset, f"SEMB record {rec_id!r}")
        if rec_id in table.records:
            raise DuplicateId(f"SEMB: duplicate record id {rec_id!r} (record {i})")
        table.records[rec_id] = EmbeddingRecord(id=rec_id, tokens=tokens.copy())
    cur.done()
    return table


def write_embeddings(table: EmbeddingTable, path) -> None:
    """Serialize a table as SEMB bytes, records in ascending id order."""
    table.validate()
    parts = [SEMB_MAGIC, struct.pack("<III", FORMAT_VERSION, table.dim, len(table.records))]
    for rec_id in sorted(table.records):
        tokens = table.records[rec_id].tokens
        raw_id = rec_id.encode("utf-8")
        parts.append(struct.pack("<I", len(raw_id)))
        parts.append(raw_id)
        parts.append(struct.pack("<I", tokens.shape[0]))
        parts.append(np.ascontiguousarray(tokens, dtype="<f4").tobytes())
    _write_file(path, b"".join(parts))


# --- SMAT ---------------------------------------------------------------------

def read_matrix(path) -> DenseMatrix:
    """Parse a SMAT file into a DenseMatrix, validating every field."""
    cur = _Cursor(_read_file(path), "SMAT")
    _check_header(cur, SMAT_MAGIC)
    shape_offset = cur.pos
    rows = cur.u32("row count")
    cols = cur.u32("column count")
    if rows < 1 or cols < 1:
        raise FormatError(
            f"SMAT: dimensions must be positive, got {rows} x {cols}", offset=shape_offset
        )
    values_offset = cur.pos
    raw = cur.take(4 * rows * cols, "matrix values")
    values = np.frombuffer(raw, dtype="<f4").reshape(rows, cols)
    _check_finite(values, values_offset, "SMAT")
    cur.done()
    return DenseMatrix(values=values.copy())


def write_matrix(m: DenseMatrix, path) -> None:
    """Serialize a matrix as SMAT bytes."""
    m.validate()
    header = SMAT_MAGIC + struct.pack("<III", FORMAT_VERSION, m.rows, m.cols)
    _write_file(path, header + np.ascontiguousarray(m.values, dtype="<f4").tobytes())


# --- dataset (JSON Lines) -----------------------------------------------------

_ITEM_KEYS = {"id", "prompt", "target", "old", "new", "rephrases", "locality_probes"}
_ITEM_REQUIRED = ("id", "prompt", "target", "old")


def _expect_str(obj: dict, key: str, line: int, where: str) -> str:
    if key not in obj:
        raise MissingField(f"{where} is missing required key {key!r}", line=line)
    value = obj[key]
    if not isinstance(value, str):
        raise ParseError(f"{where}: key {key!r} must be a string", line=line)
    return value


def _parse_pair_list(value, line: int, name: str, keys: tuple[str, ...]):
    if not isinstance(value, list):
        raise ParseError(f"key {name!r} must be an array", line=line)
    out = []
    for i, entry in enumerate(value):
        where = f"{name}[{i}]"
        if not isinstance(entry, dict):
            raise ParseError(f"{where} must be an object", line=line)
        unknown = set(entry) - set(keys)
        if unknown:
            raise ParseError(
                f"{where} has unknown key {sorted(unknown)[0]!r}", line=line
            )
        out.append(tuple(_expect_str(entry, k, line, where) for k in keys))
    return out


def _parse_item(obj: dict, line: int) -> KnowledgeItem:
    if not isinstance(obj, dict):
        raise ParseError("each line must be a JSON object", line=line)
    unknown = set(obj) - _ITEM_KEYS
    if unknown:
        raise ParseError(f"unknown key {sorted(unknown)[0]!r}", line=line)
    fields = {k: _expect_str(obj, k, line, "item") for k in _ITEM_REQUIRED}
    for key in ("target", "old"):
        if fields[key] == "":
            raise ParseError(f"key {key!r} must be a non-empty string", line=line)

    new = None
    if "new" in obj:
        if not isinstance(obj["new"], str):
            raise ParseError("key 'new' must be a string", line=line)
        new = obj["new"]
    rephrases = [
        Rephrase(prompt=p, answer=a)
        for p, a in _parse_pair_list(
            obj.get("rephrases", []), line, "rephrases", ("prompt", "answer")
        )
    ]
    probes = [
        LocalityProbe(prompt=p, old_answer=o, new_answer=n)
        for p, o, n in _parse_pair_list(
            obj.get("locality_probes", []),
            line,
            "locality_probes",
            ("prompt", "old_answer", "new_answer"),
        )
    ]
    return KnowledgeItem(
        new=new, rephrases=rephrases, locality_probes=probes, **fields
    )


def read_dataset(path) -> list[KnowledgeItem]:
    """Parse a JSON Lines dataset, preserving file order and checking ids."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise IoFailure(f"cannot read {path}: {e}") from e
    except UnicodeDecodeError as e:
        raise ParseError(f"dataset is not valid UTF-8: {e}") from e

    items: list[KnowledgeItem] = []
    seen: dict[str, int] = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as e:
            raise ParseError(f"invalid JSON: {e.msg}", line=line_no) from e
        item = _parse_item(obj, line_no)
        if item.id in seen:
            raise DuplicateId(
                f"duplicate item id {item.id!r} on lines {seen[item.id]} and {line_no}"
            )
        seen[item.id] = line_no
        items.append(item)
    return items


def item_to_json_dict(item: KnowledgeItem) -> dict:
    """Canonical JSON object for one item; empty optional fields are omitted."""
    obj: dict = {
        "id": item.id,
        "prompt": item.prompt,
        "target": item.target,
        "old": item.old,
    }
    if item.new is not None:
        obj["new"] = item.new
    if item.rephrases:
        obj["rephrases"] = [
            {"prompt": r.prompt, "answer": r.answer} for r in item.rephrases
        ]
    if item.locality_probes:
        obj["locality_probes"] = [
            {"prompt": p.prompt, "old_answer": p.old_answer, "new_answer": p.new_answer}
            for p in item.locality_probes
        ]
    return obj


def write_dataset(items: list[KnowledgeItem], path) -> None:
    """Serialize items as canonical JSON Lines, one object per item."""
    seen: set[str] = set()
    for item in items:
        if item.id in seen:
            raise DuplicateId(f"duplicate item id {item.id!r}")
        seen.add(item.id)
    lines = [json.dumps(item_to_json_dict(i), ensure_ascii=False) for i in items]
    data = ("\n".join(lines) + "\n") if lines else ""
    try:
        Path(path).write_text(data, encoding="utf-8")
    except OSError as e:
        raise IoFailure(f"cannot write {path}: {e}") from e
