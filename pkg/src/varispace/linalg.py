"""Dense double-precision numeric substrate: input validation, sample
covariance estimation, and a deterministic symmetric eigensolver.

Vectors are 1-D float64 arrays, matrices 2-D float64 arrays. All functions
are pure; returned arrays never alias their inputs.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import DataError, NumericalError

# Relative asymmetry accepted by eig_sym before a matrix is rejected.
SYMMETRY_RTOL = 1e-9


def as_vector(values, name: str = "vector") -> np.ndarray:
    """Coerce to a finite 1-D float64 array of length >= 1."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise DataError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if arr.size < 1:
        raise DataError(f"{name} must have at least one entry")
    if not np.all(np.isfinite(arr)):
        raise DataError(f"{name} contains a non-finite entry")
    return arr


def as_matrix(values, name: str = "matrix") -> np.ndarray:
    """Coerce to a finite 2-D float64 array with rows, cols >= 1."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 2:
        raise DataError(f"{name} must be two-dimensional, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise DataError(f"{name} must have at least one row and one column")
    if not np.all(np.isfinite(arr)):
        raise DataError(f"{name} contains a non-finite entry")
    return arr


def covariance(vectors) -> np.ndarray:
    """Unbiased sample covariance of a collection of equal-length vectors.

    Parameters
    ----------
    vectors:
        Sequence of N 1-D arrays of shared dimension D, or a single (N, D)
        array whose rows are the observations. N >= 2 is required.

    Returns
    -------
    (D, D) float64 array, exactly symmetric and positive semidefinite up to
    round-off.
    """
    if isinstance(vectors, np.ndarray) and vectors.ndim == 2:
        data = as_matrix(vectors, "observations")
    else:
        rows = [as_vector(v, f"observation {i}") for i, v in enumerate(vectors)]
        if len(rows) < 2:
            raise DataError(
                f"covariance requires at least 2 observations, got {len(rows)}"
            )
        dim = rows[0].size
        for i, row in enumerate(rows):
            if row.size != dim:
                raise DataError(
                    f"observation {i} has dimension {row.size}, expected {dim}"
                )
        data = np.array(rows, dtype=np.float64)
    n = data.shape[0]
    if n < 2:
        raise DataError(f"covariance requires at least 2 observations, got {n}")
    centered = data - data.mean(axis=0)
    cov = centered.T @ centered / (n - 1)
    # BLAS accumulation order may differ across the diagonal; make symmetry exact.
    return 0.5 * (cov + cov.T)


def _off_diag_mass(a: np.ndarray) -> float:
    # summed directly, not as total minus diagonal: that difference cancels
    # catastrophically once the matrix is nearly diagonal
    off = a.copy()
    np.fill_diagonal(off, 0.0)
    return math.sqrt(float(np.sum(off * off)))


def _diag_mass(a: np.ndarray) -> float:
    return math.sqrt(float(np.sum(np.diag(a) ** 2)))


def fix_eigvec_signs(basis: np.ndarray) -> None:
    """Flip each column so its largest-magnitude entry (lowest index on
    ties) is positive. In-place."""
    for j in range(basis.shape[1]):
        col = basis[:, j]
        k = int(np.argmax(np.abs(col)))
        if col[k] < 0.0:
            # plain assignment, not np.negative(col, out=col): some SIMD numpy
            # builds mis-handle aliased out= on strided column views
            basis[:, j] = -col


def eig_sym(
    matrix,
    max_sweeps: int = 100,
    rel_tol: float = 1e-12,
) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Sweeps run until the Frobenius mass of the off-diagonal part drops below
    ``rel_tol`` times the on-diagonal mass (checked before each sweep, so an
    already-diagonal matrix performs no rotations), capped at ``max_sweeps``.

    Returns
    -------
    (basis, eigenvalues):
        ``basis`` is (D, D) with orthonormal eigenvector columns,
        ``eigenvalues`` is (D,) sorted descending. The order of exactly tied
        eigenvalues follows a stable sort of the converged diagonal. Each
        eigenvector is signed so its largest-magnitude entry is positive.

    Raises
    ------
    DataError
        If the input is not symmetric within ``SYMMETRY_RTOL`` relative
        asymmetry.
    NumericalError
        If the off-diagonal mass has not met the target after ``max_sweeps``
        sweeps.
    """
    s = as_matrix(matrix, "matrix")
    d = s.shape[0]
    if s.shape[1] != d:
        raise DataError(f"matrix must be square, got shape {s.shape}")
    scale = float(np.max(np.abs(s)))
    asym = float(np.max(np.abs(s - s.T)))
    if asym > SYMMETRY_RTOL * scale:
        raise DataError(
            f"matrix is not symmetric: asymmetry {asym:.3e} exceeds "
            f"{SYMMETRY_RTOL:.0e} relative to max |entry| {scale:.3e}"
        )

    a = 0.5 * (s + s.T)
    v = np.eye(d)
    converged = False
    for _ in range(max_sweeps):
        on_mass = _diag_mass(a)
        if _off_diag_mass(a) <= rel_tol * on_mass:
            converged = True
            break
        # Rotations below this leave at most a tenth of the target mass behind,
        # so skipping them cannot stall convergence.
        skip = rel_tol * on_mass / (10.0 * d)
        for p in range(d - 1):
            for q in range(p + 1, d):
                apq = a[p, q]
                if abs(apq) <= skip:
                    continue
                diff = a[q, q] - a[p, p]
                if abs(apq) < 1e-36 * abs(diff):
                    t = apq / diff
                else:
                    theta = diff / (2.0 * apq)
                    t = 1.0 / (abs(theta) + math.sqrt(theta * theta + 1.0))
                    if theta < 0.0:
                        t = -t
                c = 1.0 / math.sqrt(t * t + 1.0)
                sn = t * c
                ap = a[p, :].copy()
                aq = a[q, :].copy()
                t1 = c * ap - sn * aq
                t2 = sn * ap + c * aq
                t1p = c * t1[p] - sn * t1[q]
                t2q = sn * t2[p] + c * t2[q]
                t1[p] = t1p
                t1[q] = 0.0
                t2[p] = 0.0
                t2[q] = t2q
                a[p, :] = t1
                a[:, p] = t1
                a[q, :] = t2
                a[:, q] = t2
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - sn * vq
                v[:, q] = sn * vp + c * vq
    else:
        converged = _off_diag_mass(a) <= rel_tol * _diag_mass(a)
    if not converged:
        raise NumericalError(
            f"jacobi sweep limit ({max_sweeps}) reached; off-diagonal mass "
            f"{_off_diag_mass(a):.3e} vs target {rel_tol * _diag_mass(a):.3e}"
        )

    lam = np.diag(a).copy()
    order = np.argsort(-lam, kind="stable")
    lam = lam[order]
    v = np.ascontiguousarray(v[:, order])
    fix_eigvec_signs(v)
    return v, lam
