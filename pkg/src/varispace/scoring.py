"""Machine-perception evaluation at embedding level: enrollment averaging,
cosine trial scoring, pooled equal-error-rate computation, and subspace-size
sweeps that tabulate EER against the removed block size."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .embeddings import EmbeddingSet, TrialList
from .errors import DataError, FormatError
from .space import VariabilitySpace
from .subspace import BACKWARD, FORWARD, SubspaceSpec, modify_batch, resolve_indices

SWEEP_FAMILIES = ("primary", "secondary", "residual")

_ZERO_NORM = 1e-30


def build_enrollment(embeddings: EmbeddingSet, speaker: str) -> np.ndarray:
    """Length-normalized mean of a speaker's embeddings."""
    utts = embeddings.utterances_of(speaker)
    if not utts:
        raise DataError(f"unknown speaker '{speaker}'")
    rows = np.array([embeddings.vector(u) for u in utts])
    mean = rows.mean(axis=0)
    norm = float(np.linalg.norm(mean))
    if norm <= _ZERO_NORM:
        raise DataError(f"speaker '{speaker}' has a zero-mean enrollment model")
    return mean / norm


def cosine(a, b) -> float:
    """Cosine similarity, clamped to [-1, 1]. Both vectors must be nonzero."""
    va = np.asarray(a, dtype=np.float64)
    vb = np.asarray(b, dtype=np.float64)
    if va.shape != vb.shape:
        raise DataError(f"cosine dimension mismatch: {va.shape} vs {vb.shape}")
    na = float(np.linalg.norm(va))
    nb = float(np.linalg.norm(vb))
    if na <= _ZERO_NORM or nb <= _ZERO_NORM:
        raise DataError("cosine of a zero vector is undefined")
    return float(np.clip(float(va @ vb) / (na * nb), -1.0, 1.0))


@dataclass(frozen=True)
class ScoredTrials:
    """Per-trial cosine scores with their target/nontarget labels."""

    scores: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        scores = np.asarray(self.scores, dtype=np.float64)
        labels = np.asarray(self.labels, dtype=bool)
        if scores.ndim != 1 or labels.shape != scores.shape:
            raise DataError("scores and labels must be 1-D and equal length")
        if scores.size < 1:
            raise DataError("scored trials are empty")
        if not np.all(np.isfinite(scores)):
            raise DataError("scores contain a non-finite value")
        if np.any(scores < -1.0 - 1e-9) or np.any(scores > 1.0 + 1e-9):
            raise DataError("scores fall outside [-1, 1]")
        scores = scores.copy()
        labels = labels.copy()
        scores.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, "scores", scores)
        object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        return self.scores.size


def score_trials(
    enrollments: Mapping[str, np.ndarray],
    test_set: EmbeddingSet,
    trials: TrialList,
) -> ScoredTrials:
    """Cosine score every trial against its enrollment model, order
    preserved. Unresolvable ids abort, naming the trial's source line."""
    scores = np.empty(len(trials))
    labels = np.empty(len(trials), dtype=bool)
    for i, trial in enumerate(trials):
        where = trial.line if trial.line is not None else i + 1
        model = enrollments.get(trial.enroll_speaker)
        if model is None:
            raise DataError(
                f"trial {where}: no enrollment for speaker '{trial.enroll_speaker}'"
            )
        try:
            test_vec = test_set.vector(trial.test_utterance)
        except DataError:
            raise DataError(
                f"trial {where}: unknown test utterance '{trial.test_utterance}'"
            ) from None
        scores[i] = cosine(model, test_vec)
        labels[i] = trial.target
    return ScoredTrials(scores=scores, labels=labels)


@dataclass(frozen=True)
class EerResult:
    eer_percent: float
    threshold_at_eer: float
    n_target: int
    n_nontarget: int


def compute_eer(scored: ScoredTrials) -> EerResult:
    """Pooled equal error rate under the accept-iff-score>=threshold rule.

    Operating points are taken at every distinct score (ascending) plus a
    final reject-everything point. The false-acceptance and false-rejection
    rates are linearly interpolated between the two adjacent points that
    bracket the sign change of their difference; the crossing value is the
    EER, reported in percent.
    """
    target = np.sort(scored.scores[scored.labels])
    nontarget = np.sort(scored.scores[~scored.labels])
    if target.size == 0 or nontarget.size == 0:
        raise DataError("EER needs at least one target and one nontarget trial")
    thresholds = np.unique(scored.scores)
    far = (nontarget.size - np.searchsorted(nontarget, thresholds, side="left")) / nontarget.size
    frr = np.searchsorted(target, thresholds, side="left") / target.size
    far = np.append(far, 0.0)
    frr = np.append(frr, 1.0)
    thresholds = np.append(thresholds, thresholds[-1])
    diff = far - frr
    k = int(np.argmax(diff <= 0.0))
    if diff[k] == 0.0:
        eer = far[k]
        threshold = float(thresholds[k])
    else:
        d0, d1 = diff[k - 1], diff[k]
        frac = d0 / (d0 - d1)
        eer = far[k - 1] + frac * (far[k] - far[k - 1])
        threshold = float(thresholds[k - 1] + frac * (thresholds[k] - thresholds[k - 1]))
    return EerResult(
        eer_percent=float(100.0 * eer),
        threshold_at_eer=threshold,
        n_target=int(target.size),
        n_nontarget=int(nontarget.size),
    )


@dataclass(frozen=True)
class SweepRow:
    family: str
    start: int
    size: int
    direction: str
    eer_percent: float
    n_target: int
    n_nontarget: int


@dataclass(frozen=True)
class SweepResult:
    rows: tuple[SweepRow, ...]


def _family_spec(family: str, size: int, dim: int, turning_dim: int | None) -> SubspaceSpec:
    if family == "primary":
        return SubspaceSpec(start=1, size=size, direction=FORWARD, family="primary")
    if family == "secondary":
        return SubspaceSpec(
            start=turning_dim, size=size, direction=BACKWARD, family="secondary"
        )
    return SubspaceSpec(start=dim, size=size, direction=BACKWARD, family="residual")


def run_sweep(
    space: VariabilitySpace,
    embeddings: EmbeddingSet,
    trials: TrialList,
    family: str,
    k_values,
    turning_dim: int | None = None,
    clean_enrollment: bool = False,
) -> SweepResult:
    """EER as a function of removed-block size for one subspace family.

    For each size K the whole set is modified, enrollment models are rebuilt
    from the modified embeddings (or the originals with
    ``clean_enrollment``), all trials are rescored, and one row is emitted.
    K=0 rows are the unmodified baseline.
    """
    if family not in SWEEP_FAMILIES:
        raise DataError(f"unknown sweep family '{family}'")
    if embeddings.dim != space.dim:
        raise DataError(
            f"embedding dimension {embeddings.dim} != space dimension {space.dim}"
        )
    if family == "secondary":
        if turning_dim is None:
            raise DataError("secondary-family sweeps require the turning dimension")
        if not 1 <= turning_dim <= space.dim:
            raise DataError(
                f"turning dimension {turning_dim} outside [1, {space.dim}]"
            )
    sizes = [int(k) for k in k_values]
    if not sizes:
        raise DataError("sweep needs at least one size")
    specs = []
    for k in sizes:
        if k < 0:
            raise DataError(f"sweep size {k} is negative")
        spec = _family_spec(family, k, space.dim, turning_dim)
        try:
            resolve_indices(spec, space.dim)
        except DataError as exc:
            raise DataError(f"size {k} unresolvable: {exc}") from None
        specs.append(spec)

    needed_speakers = {t.enroll_speaker for t in trials}
    rows = []
    for k, spec in zip(sizes, specs):
        modified = modify_batch(space, embeddings, spec)
        enroll_source = embeddings if clean_enrollment else modified
        available = set(enroll_source.speakers())
        enrollments = {
            s: build_enrollment(enroll_source, s)
            for s in sorted(needed_speakers & available)
        }
        result = compute_eer(score_trials(enrollments, modified, trials))
        rows.append(
            SweepRow(
                family=family,
                start=spec.start,
                size=k,
                direction=spec.direction,
                eer_percent=result.eer_percent,
                n_target=result.n_target,
                n_nontarget=result.n_nontarget,
            )
        )
    return SweepResult(rows=tuple(rows))


SWEEP_HEADER = ["family", "start", "size", "direction", "eer_percent", "n_target", "n_nontarget"]


def write_sweep_csv(result: SweepResult, destination) -> None:
    with open(destination, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SWEEP_HEADER)
        for row in result.rows:
            writer.writerow(
                [
                    row.family,
                    row.start,
                    row.size,
                    row.direction,
                    format(row.eer_percent, ".17g"),
                    row.n_target,
                    row.n_nontarget,
                ]
            )


def read_sweep_csv(source) -> SweepResult:
    with open(source, "r", encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != SWEEP_HEADER:
        raise FormatError("sweep CSV has a bad header")
    parsed = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(SWEEP_HEADER):
            raise FormatError(f"sweep CSV line {lineno}: expected {len(SWEEP_HEADER)} fields")
        parsed.append(
            SweepRow(
                family=row[0],
                start=int(row[1]),
                size=int(row[2]),
                direction=row[3],
                eer_percent=float(row[4]),
                n_target=int(row[5]),
                n_nontarget=int(row[6]),
            )
        )
    return SweepResult(rows=tuple(parsed))
