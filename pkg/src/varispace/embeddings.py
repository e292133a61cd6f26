"""Labeled embedding collections, verification trials, and their on-disk
formats (CSV, binary, and whitespace trial lists)."""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError, FormatError

EMBEDDINGS_MAGIC = b"EMB1"
EMBEDDINGS_VERSION = 1


@dataclass(frozen=True)
class EmbeddingSet:
    """Ordered collection of (utterance id, speaker id, vector) records with
    unique utterance ids and a uniform dimension. Vectors are stored as a
    read-only (N, D) float64 matrix."""

    utt_ids: tuple[str, ...]
    spk_ids: tuple[str, ...]
    vectors: np.ndarray

    def __post_init__(self):
        utt_ids = tuple(self.utt_ids)
        spk_ids = tuple(self.spk_ids)
        vectors = np.asarray(self.vectors, dtype=np.float64)
        if vectors.ndim != 2:
            raise DataError(f"vectors must be an (N, D) matrix, got shape {vectors.shape}")
        n, d = vectors.shape
        if n < 1 or d < 1:
            raise DataError("embedding set must contain at least one record and one dimension")
        if len(utt_ids) != n or len(spk_ids) != n:
            raise DataError("id lists and vector rows disagree in length")
        if not np.all(np.isfinite(vectors)):
            raise DataError("embedding set contains a non-finite value")
        seen = set()
        for utt, spk in zip(utt_ids, spk_ids):
            if not utt:
                raise DataError("empty utterance id")
            if not spk:
                raise DataError("empty speaker id")
            if utt in seen:
                raise DataError(f"duplicate utterance id '{utt}'")
            seen.add(utt)
        vectors = vectors.copy()
        vectors.setflags(write=False)
        object.__setattr__(self, "utt_ids", utt_ids)
        object.__setattr__(self, "spk_ids", spk_ids)
        object.__setattr__(self, "vectors", vectors)
        object.__setattr__(self, "_row_of", {u: i for i, u in enumerate(utt_ids)})

    @classmethod
    def from_records(cls, records) -> "EmbeddingSet":
        """Build from an iterable of (utt_id, spk_id, vector) triples."""
        utts, spks, rows = [], [], []
        for utt, spk, vec in records:
            utts.append(utt)
            spks.append(spk)
            rows.append(np.asarray(vec, dtype=np.float64))
        if not rows:
            raise DataError("embedding set must contain at least one record")
        widths = {row.shape for row in rows}
        if len(widths) > 1 or rows[0].ndim != 1:
            raise DataError("all embedding vectors must be 1-D with a shared dimension")
        return cls(tuple(utts), tuple(spks), np.array(rows))

    def __len__(self) -> int:
        return self.vectors.shape[0]

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def vector(self, utt_id: str) -> np.ndarray:
        row = self._row_of.get(utt_id)
        if row is None:
            raise DataError(f"unknown utterance id '{utt_id}'")
        return self.vectors[row]

    def speakers(self) -> tuple[str, ...]:
        """Distinct speaker ids in first-appearance order."""
        seen = {}
        for spk in self.spk_ids:
            seen.setdefault(spk, None)
        return tuple(seen)

    def utterances_of(self, spk_id: str) -> tuple[str, ...]:
        return tuple(u for u, s in zip(self.utt_ids, self.spk_ids) if s == spk_id)

    def records(self):
        for i, (utt, spk) in enumerate(zip(self.utt_ids, self.spk_ids)):
            yield utt, spk, self.vectors[i]


def detect_format(source) -> str:
    """Sniff whether a file is a binary or CSV embedding set."""
    with open(source, "rb") as fh:
        head = fh.read(4)
    return "binary" if head == EMBEDDINGS_MAGIC else "csv"


def load_embeddings(source, format: str = "auto") -> EmbeddingSet:
    """Read an embedding set from ``source`` in the given format
    ("csv", "binary", or "auto" to sniff the magic)."""
    if format == "auto":
        format = detect_format(source)
    if format == "csv":
        return _load_csv(source)
    if format == "binary":
        return _load_binary(source)
    raise DataError(f"unknown embeddings format '{format}'")


def save_embeddings(embeddings: EmbeddingSet, destination, format: str = "csv") -> None:
    if format == "csv":
        _save_csv(embeddings, destination)
    elif format == "binary":
        _save_binary(embeddings, destination)
    else:
        raise DataError(f"unknown embeddings format '{format}'")


def _save_csv(embeddings: EmbeddingSet, destination) -> None:
    d = embeddings.dim
    with open(destination, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["utt_id", "spk_id"] + [f"d{i}" for i in range(1, d + 1)])
        for utt, spk, vec in embeddings.records():
            writer.writerow([utt, spk] + [format(v, ".17g") for v in vec])


def _load_csv(source) -> EmbeddingSet:
    with open(source, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError("embeddings CSV is empty") from None
        if len(header) < 3 or header[:2] != ["utt_id", "spk_id"]:
            raise FormatError("embeddings CSV header must start with utt_id,spk_id,d1,...")
        d = len(header) - 2
        if header[2:] != [f"d{i}" for i in range(1, d + 1)]:
            raise FormatError("embeddings CSV header has bad dimension columns")
        utts, spks, rows = [], [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != d + 2:
                raise FormatError(
                    f"embeddings CSV line {lineno}: expected {d + 2} fields, got {len(row)}"
                )
            utts.append(row[0])
            spks.append(row[1])
            try:
                values = [float(tok) for tok in row[2:]]
            except ValueError as exc:
                raise DataError(f"embeddings CSV line {lineno}: {exc}") from None
            rows.append(values)
    if not rows:
        raise DataError("embeddings CSV contains no records")
    return EmbeddingSet(tuple(utts), tuple(spks), np.array(rows, dtype=np.float64))


def _save_binary(embeddings: EmbeddingSet, destination) -> None:
    d = embeddings.dim
    out = bytearray()
    out += struct.pack("<4sIIQ", EMBEDDINGS_MAGIC, EMBEDDINGS_VERSION, d, len(embeddings))
    for utt, spk, vec in embeddings.records():
        utt_b = utt.encode("utf-8")
        spk_b = spk.encode("utf-8")
        if len(utt_b) > 0xFFFF or len(spk_b) > 0xFFFF:
            raise DataError(f"id too long for binary format: '{utt}'")
        out += struct.pack("<H", len(utt_b))
        out += utt_b
        out += struct.pack("<H", len(spk_b))
        out += spk_b
        out += vec.astype("<f4").tobytes()
    with open(destination, "wb") as fh:
        fh.write(bytes(out))


def _load_binary(source) -> EmbeddingSet:
    with open(source, "rb") as fh:
        blob = fh.read()
    header_size = struct.calcsize("<4sIIQ")
    if len(blob) < header_size:
        raise FormatError(f"embeddings file truncated: {len(blob)} bytes")
    magic, version, d, n = struct.unpack_from("<4sIIQ", blob, 0)
    if magic != EMBEDDINGS_MAGIC:
        raise FormatError(f"bad embeddings magic {magic!r}, expected {EMBEDDINGS_MAGIC!r}")
    if version != EMBEDDINGS_VERSION:
        raise FormatError(f"unsupported embeddings file version {version}")
    if d < 1:
        raise DataError("embeddings file declares dimension 0")
    offset = header_size
    utts, spks, rows = [], [], []
    vec_bytes = 4 * d
    for _ in range(n):
        try:
            (utt_len,) = struct.unpack_from("<H", blob, offset)
            offset += 2
            if offset + utt_len > len(blob):
                raise FormatError("embeddings file truncated inside a record")
            utt = blob[offset : offset + utt_len].decode("utf-8")
            offset += utt_len
            (spk_len,) = struct.unpack_from("<H", blob, offset)
            offset += 2
            if offset + spk_len > len(blob):
                raise FormatError("embeddings file truncated inside a record")
            spk = blob[offset : offset + spk_len].decode("utf-8")
            offset += spk_len
            if offset + vec_bytes > len(blob):
                raise FormatError("embeddings file truncated inside a record")
            vec = np.frombuffer(blob, dtype="<f4", count=d, offset=offset)
            offset += vec_bytes
        except (struct.error, UnicodeDecodeError) as exc:
            raise FormatError(f"embeddings file record corrupt: {exc}") from None
        utts.append(utt)
        spks.append(spk)
        rows.append(vec.astype(np.float64))
    if offset != len(blob):
        raise FormatError(
            f"embeddings file has {len(blob) - offset} trailing bytes after {n} records"
        )
    if not rows:
        raise DataError("embeddings file contains no records")
    return EmbeddingSet(tuple(utts), tuple(spks), np.array(rows, dtype=np.float64))


@dataclass(frozen=True)
class Trial:
    """One verification trial: does ``test_utterance`` belong to
    ``enroll_speaker``? ``line`` keeps the source line for error reports."""

    enroll_speaker: str
    test_utterance: str
    target: bool
    line: int | None = None


@dataclass(frozen=True)
class TrialList:
    entries: tuple[Trial, ...]

    def __post_init__(self):
        entries = tuple(self.entries)
        if not entries:
            raise DataError("trial list is empty")
        object.__setattr__(self, "entries", entries)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    @property
    def n_target(self) -> int:
        return sum(1 for t in self.entries if t.target)

    @property
    def n_nontarget(self) -> int:
        return sum(1 for t in self.entries if not t.target)


def load_trials(source) -> TrialList:
    """Parse a whitespace-separated trial file:
    ``<enroll_spk> <test_utt> <target|nontarget>`` per line."""
    entries = []
    with open(source, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            fields = line.split()
            if len(fields) != 3:
                raise FormatError(
                    f"trials line {lineno}: expected 3 whitespace-separated fields"
                )
            spk, utt, label = fields
            if label not in ("target", "nontarget"):
                raise FormatError(
                    f"trials line {lineno}: label must be 'target' or 'nontarget'"
                )
            entries.append(Trial(spk, utt, label == "target", line=lineno))
    if not entries:
        raise DataError(f"no trials found in {Path(source)}")
    return TrialList(tuple(entries))


def save_trials(trials: TrialList, destination) -> None:
    with open(destination, "w", encoding="utf-8", newline="") as fh:
        for t in trials:
            label = "target" if t.target else "nontarget"
            fh.write(f"{t.enroll_speaker} {t.test_utterance} {label}\n")
