"""Subspace specifications and pseudo-speaker embedding modification.

A subspace is a contiguous block of basis dimensions named by a 1-based
start index, a size, and a span direction. Modification projects an
embedding onto the variability basis, zeroes the coefficients inside the
block, and reconstructs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .embeddings import EmbeddingSet
from .errors import DataError
from .space import VariabilitySpace, project, reconstruct

FORWARD = "+"
BACKWARD = "-"
FAMILIES = ("primary", "secondary", "residual", "custom")

_SPEC_GRAMMAR = "[family:]<start>:<size>:<+|->"


@dataclass(frozen=True)
class SubspaceSpec:
    """Block of basis dimensions: ``size`` dimensions from ``start``
    (1-based) in the given direction. ``family`` is metadata only."""

    start: int
    size: int
    direction: str
    family: str = "custom"

    def __post_init__(self):
        if self.start < 1:
            raise DataError(f"subspace start must be >= 1, got {self.start}")
        if self.size < 0:
            raise DataError(f"subspace size must be >= 0, got {self.size}")
        if self.direction not in (FORWARD, BACKWARD):
            raise DataError(f"subspace direction must be '+' or '-', got '{self.direction}'")
        if self.family not in FAMILIES:
            raise DataError(f"unknown subspace family '{self.family}'")

    def __str__(self) -> str:
        return f"{self.family}:{self.start}:{self.size}:{self.direction}"


def parse_spec(text: str) -> SubspaceSpec:
    """Parse the CLI/config form ``[family:]<start>:<size>:<+|->``."""
    parts = text.split(":")
    if len(parts) == 3:
        family, rest = "custom", parts
    elif len(parts) == 4:
        family, rest = parts[0], parts[1:]
    else:
        raise DataError(f"bad subspace spec '{text}': expected {_SPEC_GRAMMAR}")
    try:
        start = int(rest[0])
        size = int(rest[1])
    except ValueError:
        raise DataError(
            f"bad subspace spec '{text}': start and size must be integers "
            f"({_SPEC_GRAMMAR})"
        ) from None
    try:
        return SubspaceSpec(start=start, size=size, direction=rest[2], family=family)
    except DataError as exc:
        raise DataError(f"bad subspace spec '{text}': {exc} ({_SPEC_GRAMMAR})") from None


def resolve_indices(spec: SubspaceSpec, dim: int) -> tuple[int, ...]:
    """Expand a spec into the ordered 1-based dimension indices it covers.

    Forward spans cover start..start+size-1, backward spans
    start-size+1..start. Empty for size 0.
    """
    if dim < 1:
        raise DataError(f"dimension must be >= 1, got {dim}")
    if spec.start > dim:
        raise DataError(
            f"subspace start {spec.start} exceeds dimension {dim}"
        )
    if spec.size == 0:
        return ()
    if spec.direction == FORWARD:
        first, last = spec.start, spec.start + spec.size - 1
        if last > dim:
            raise DataError(
                f"subspace end {last} exceeds dimension {dim} "
                f"(start {spec.start}, size {spec.size}, forward)"
            )
    else:
        first, last = spec.start - spec.size + 1, spec.start
        if first < 1:
            raise DataError(
                f"subspace start {first} falls below dimension 1 "
                f"(start {spec.start}, size {spec.size}, backward)"
            )
    return tuple(range(first, last + 1))


@dataclass(frozen=True)
class ModificationReport:
    """What a single modification removed: the zeroed 1-based indices, the
    coefficient energy taken out, and the embedding norms before/after."""

    zeroed_indices: tuple[int, ...]
    removed_energy: float
    original_norm: float
    modified_norm: float


def modify(
    space: VariabilitySpace,
    x,
    spec: SubspaceSpec,
    renormalize: bool = False,
) -> tuple[np.ndarray, ModificationReport]:
    """Zero the spec's coefficients of ``x`` in the variability basis.

    Returns the modified embedding and a report. A size-0 spec returns an
    exact copy of the input (no projection round-trip). ``renormalize`` is
    an ablation flag, off by default: it rescales the result to unit length,
    leaving an all-zero result as is.
    """
    indices = resolve_indices(spec, space.dim)
    coeff = project(space, x)
    original_norm = float(np.linalg.norm(x))
    if not indices:
        modified = np.array(x, dtype=np.float64, copy=True)
        return modified, ModificationReport((), 0.0, original_norm, original_norm)
    zero_rows = [i - 1 for i in indices]
    removed = float(np.sum(coeff[zero_rows] ** 2))
    coeff = coeff.copy()
    coeff[zero_rows] = 0.0
    modified = reconstruct(space, coeff)
    if renormalize:
        norm = float(np.linalg.norm(modified))
        if norm > 1e-30:
            modified = modified * (1.0 / norm)
    return modified, ModificationReport(
        zeroed_indices=indices,
        removed_energy=removed,
        original_norm=original_norm,
        modified_norm=float(np.linalg.norm(modified)),
    )


def modify_batch(
    space: VariabilitySpace,
    embeddings: EmbeddingSet,
    spec: SubspaceSpec,
    renormalize: bool = False,
) -> EmbeddingSet:
    """Element-wise :func:`modify` over a whole set; ids and order are
    preserved. The first failing element aborts, naming its utterance id."""
    modified, _ = modify_batch_with_reports(space, embeddings, spec, renormalize)
    return modified


def modify_batch_with_reports(
    space: VariabilitySpace,
    embeddings: EmbeddingSet,
    spec: SubspaceSpec,
    renormalize: bool = False,
) -> tuple[EmbeddingSet, list[ModificationReport]]:
    rows = np.empty_like(embeddings.vectors)
    reports = []
    for i, (utt, _, vec) in enumerate(embeddings.records()):
        try:
            rows[i], report = modify(space, vec, spec, renormalize=renormalize)
        except DataError as exc:
            raise DataError(f"utterance '{utt}': {exc}") from None
        reports.append(report)
    result = EmbeddingSet(embeddings.utt_ids, embeddings.spk_ids, rows)
    return result, reports


