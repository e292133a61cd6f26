"""Fit, persist, and interrogate the embedding variability space.

The space is the eigenbasis of the sample covariance of a set of speaker
embeddings: an orthonormal basis sorted by descending eigenvalue, plus the
training mean. Projection and reconstruction move raw embeddings in and out
of coefficient space; the log-eigenvalue spectrum and its deltas drive
turning-point (knee) detection for choosing modification subspaces.
"""

from __future__ import annotations

import csv
import struct
import warnings
from dataclasses import dataclass, field

import numpy as np

from .embeddings import EmbeddingSet
from .errors import DataError, FormatError
from .linalg import as_matrix, as_vector, covariance, eig_sym

SPACE_MAGIC = b"VSP1"
SPACE_VERSION = 1

ORTHONORMALITY_TOL = 1e-8


@dataclass(frozen=True)
class VariabilitySpace:
    """Immutable fitted variability space.

    ``basis`` is (D, D) with eigenvector columns; ``eigenvalues`` is (D,)
    sorted descending and non-negative; ``mean`` is the training sample mean.
    """

    mean: np.ndarray
    basis: np.ndarray
    eigenvalues: np.ndarray

    def __post_init__(self):
        mean = as_vector(self.mean, "mean")
        basis = as_matrix(self.basis, "basis")
        eigenvalues = as_vector(self.eigenvalues, "eigenvalues")
        d = mean.size
        if basis.shape != (d, d):
            raise DataError(
                f"basis shape {basis.shape} inconsistent with dimension {d}"
            )
        if eigenvalues.size != d:
            raise DataError(
                f"eigenvalues length {eigenvalues.size} inconsistent with dimension {d}"
            )
        gram_err = float(np.max(np.abs(basis.T @ basis - np.eye(d))))
        if gram_err > ORTHONORMALITY_TOL:
            raise DataError(
                f"basis columns are not orthonormal: max deviation {gram_err:.3e}"
            )
        if np.any(np.diff(eigenvalues) > 0.0):
            raise DataError("eigenvalues must be sorted in descending order")
        if eigenvalues[-1] < 0.0:
            raise DataError("eigenvalues must be non-negative")
        for name, arr in (("mean", mean), ("basis", basis), ("eigenvalues", eigenvalues)):
            arr = arr.copy()
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def dim(self) -> int:
        return self.mean.size


@dataclass(frozen=True)
class DeltaSpectrum:
    """Consecutive differences of the floored log-eigenvalue spectrum
    (length D-1), plus the eigenvalue floor that was applied before logs."""

    values: np.ndarray
    floor_epsilon: float

    def __post_init__(self):
        values = as_vector(self.values, "delta values")
        values = values.copy()
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class TurningCandidate:
    """Outcome of the three turning-point checks at one delta index."""

    index: int
    tail_monotone: bool
    window_stable: bool
    breaks_out: bool

    @property
    def accepted(self) -> bool:
        return self.tail_monotone and self.window_stable and self.breaks_out


@dataclass(frozen=True)
class TurningPoint:
    """Detected turning dimension. ``weak`` marks the fallback answer (start
    of the longest monotone-magnitude suffix) used when no index satisfies
    all checks. Always a candidate for human confirmation, never a verdict."""

    index: int
    weak: bool
    trace: tuple[TurningCandidate, ...] = field(repr=False)


def fit(embeddings: EmbeddingSet) -> VariabilitySpace:
    """Fit the variability space from an embedding set.

    Eigendecomposes the unbiased sample covariance; warns when the set has
    fewer observations than dimensions (rank-deficient fit).
    """
    data = embeddings.vectors
    n, d = data.shape
    if 2 <= n < d:
        warnings.warn(
            f"fitting {d} dimensions from only {n} embeddings; "
            "eigenvalues beyond the sample rank will be zero",
            stacklevel=2,
        )
    basis, lam = eig_sym(covariance(data))
    lam = np.maximum(lam, 0.0)
    return VariabilitySpace(mean=data.mean(axis=0), basis=basis, eigenvalues=lam)


def project(space: VariabilitySpace, x, centered: bool = False) -> np.ndarray:
    """Coefficients of ``x`` in the space's basis.

    Applied to the raw embedding by default; ``centered=True`` subtracts the
    training mean first (ablation mode).
    """
    vec = as_vector(x, "embedding")
    if vec.size != space.dim:
        raise DataError(f"embedding dimension {vec.size} != space dimension {space.dim}")
    if centered:
        vec = vec - space.mean
    return space.basis.T @ vec


def reconstruct(space: VariabilitySpace, coefficients) -> np.ndarray:
    """Embedding synthesized from a coefficient vector: basis @ coefficients."""
    coeff = as_vector(coefficients, "coefficients")
    if coeff.size != space.dim:
        raise DataError(
            f"coefficient dimension {coeff.size} != space dimension {space.dim}"
        )
    return space.basis @ coeff


def floor_epsilon(eigenvalues: np.ndarray) -> float:
    """Eigenvalue floor applied before taking logarithms: 1e-12 times the
    largest eigenvalue, or 1e-300 for an all-zero spectrum."""
    top = float(eigenvalues[0])
    return 1e-12 * top if top > 0.0 else 1e-300


def log_spectrum(space: VariabilitySpace) -> np.ndarray:
    """Natural log of the (floored) eigenvalues, length D."""
    eps = floor_epsilon(space.eigenvalues)
    return np.log(np.maximum(space.eigenvalues, eps))


def delta_spectrum(space: VariabilitySpace) -> DeltaSpectrum:
    """Differences of consecutive log-eigenvalues, length D-1.

    Entry i (1-based) is log(lambda_{i+1}) - log(lambda_i); non-positive up
    to ties since eigenvalues are sorted descending.
    """
    if space.dim < 2:
        raise DataError("delta spectrum requires dimension >= 2")
    logs = log_spectrum(space)
    return DeltaSpectrum(
        values=np.diff(logs), floor_epsilon=floor_epsilon(space.eigenvalues)
    )


def detect_turning(
    deltas: DeltaSpectrum,
    window: int = 10,
    oscillation_tol: float = 0.05,
    mode: str = "magnitude",
) -> TurningPoint:
    """Locate the candidate turning dimension in a delta spectrum.

    An index t qualifies when (a) the delta tail from t on is monotone
    (non-decreasing in magnitude by default; ``mode="signed"`` tests the
    signed values instead), (b) the up-to-``window`` preceding values stay
    within ``oscillation_tol`` of their local mean, and (c) the value at t
    breaks out of that oscillation corridor. t=1 qualifies whenever the whole
    sequence is monotone. The smallest qualifying index is returned; if none
    qualifies, the start of the longest monotone suffix is returned with the
    ``weak`` flag set. The result is a candidate only and callers must allow
    a manual override.
    """
    if mode not in ("magnitude", "signed"):
        raise DataError(f"unknown turning-point mode '{mode}'")
    if window < 1:
        raise DataError("window must be >= 1")
    if not oscillation_tol > 0.0:
        raise DataError("oscillation tolerance must be positive")
    values = deltas.values
    m = values.size
    if m < window + 2:
        raise DataError(
            f"spectrum too short for turning-point detection: {m} deltas, "
            f"need at least window + 2 = {window + 2}"
        )
    profile = np.abs(values) if mode == "magnitude" else values

    tail_ok = np.empty(m, dtype=bool)
    tail_ok[m - 1] = True
    for i in range(m - 2, -1, -1):
        tail_ok[i] = tail_ok[i + 1] and profile[i] <= profile[i + 1]

    trace = []
    accepted_index = 0
    for t in range(1, m + 1):
        if t == 1:
            window_stable = True
            breaks_out = True
        else:
            w_eff = min(window, t - 1)
            local = values[t - 1 - w_eff : t - 1]
            local_mean = float(np.mean(local))
            window_stable = float(np.max(np.abs(local - local_mean))) <= oscillation_tol
            breaks_out = abs(float(values[t - 1]) - local_mean) > oscillation_tol
        cand = TurningCandidate(
            index=t,
            tail_monotone=bool(tail_ok[t - 1]),
            window_stable=window_stable,
            breaks_out=breaks_out,
        )
        trace.append(cand)
        if cand.accepted and accepted_index == 0:
            accepted_index = t
    if accepted_index:
        return TurningPoint(index=accepted_index, weak=False, trace=tuple(trace))
    fallback = int(np.argmax(tail_ok)) + 1
    return TurningPoint(index=fallback, weak=True, trace=tuple(trace))


def save_space(space: VariabilitySpace, destination) -> None:
    """Write a space file: magic, version, dimension, mean, eigenvalues, and
    the basis row-major, all little-endian."""
    d = space.dim
    payload = bytearray()
    payload += struct.pack("<4sII", SPACE_MAGIC, SPACE_VERSION, d)
    payload += space.mean.astype("<f8").tobytes(order="C")
    payload += space.eigenvalues.astype("<f8").tobytes(order="C")
    payload += np.ascontiguousarray(space.basis).astype("<f8").tobytes(order="C")
    with open(destination, "wb") as fh:
        fh.write(bytes(payload))


def load_space(source) -> VariabilitySpace:
    """Read a space file written by :func:`save_space`."""
    with open(source, "rb") as fh:
        blob = fh.read()
    header_size = struct.calcsize("<4sII")
    if len(blob) < header_size:
        raise FormatError(f"space file truncated: {len(blob)} bytes")
    magic, version, d = struct.unpack_from("<4sII", blob, 0)
    if magic != SPACE_MAGIC:
        raise FormatError(f"bad space file magic {magic!r}, expected {SPACE_MAGIC!r}")
    if version != SPACE_VERSION:
        raise FormatError(f"unsupported space file version {version}")
    if d < 1:
        raise DataError("space file declares dimension 0")
    expected = header_size + 8 * (2 * d + d * d)
    if len(blob) != expected:
        raise FormatError(
            f"space file length {len(blob)} inconsistent with declared "
            f"dimension {d} (expected {expected})"
        )
    offset = header_size
    mean = np.frombuffer(blob, dtype="<f8", count=d, offset=offset).astype(np.float64)
    offset += 8 * d
    lam = np.frombuffer(blob, dtype="<f8", count=d, offset=offset).astype(np.float64)
    offset += 8 * d
    basis = (
        np.frombuffer(blob, dtype="<f8", count=d * d, offset=offset)
        .astype(np.float64)
        .reshape(d, d)
    )
    return VariabilitySpace(mean=mean, basis=basis, eigenvalues=lam)


def write_spectrum_csv(space: VariabilitySpace, destination) -> None:
    """Emit the plotting CSV: one row per dimension with the log-eigenvalue
    and the delta to the next dimension (empty on the last row)."""
    logs = log_spectrum(space)
    deltas = np.diff(logs)
    with open(destination, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["index", "log_eigenvalue", "delta"])
        for i, value in enumerate(logs, start=1):
            delta = format(deltas[i - 1], ".17g") if i - 1 < deltas.size else ""
            writer.writerow([i, format(value, ".17g"), delta])


def read_spectrum_csv(source) -> tuple[np.ndarray, np.ndarray]:
    """Parse a spectrum CSV back into (log_eigenvalues, deltas)."""
    with open(source, "r", encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != ["index", "log_eigenvalue", "delta"]:
        raise FormatError("spectrum CSV has a bad header")
    body = rows[1:]
    logs = []
    deltas = []
    for lineno, row in enumerate(body, start=2):
        if len(row) != 3:
            raise FormatError(f"spectrum CSV line {lineno}: expected 3 fields")
        index, log_value, delta = row
        if int(index) != lineno - 1:
            raise FormatError(f"spectrum CSV line {lineno}: index out of order")
        logs.append(float(log_value))
        last = lineno - 1 == len(body)
        if last != (delta == ""):
            raise FormatError(
                f"spectrum CSV line {lineno}: delta must be empty on the last row only"
            )
        if not last:
            deltas.append(float(delta))
    return np.array(logs), np.array(deltas)
