"""QUBO problems, cost functions, and the spectral mapping to transform matrices.

A problem is a real symmetric weight matrix K over binary states s in {0,1}^n
with cost C(s) = -1/2 s^T K s.  A positive semi-definite K factors as K = A^T A
with A = sqrt(D) Q from the eigendecomposition K = Q^T D Q, which is what lets
the cost be evaluated from a matrix-vector product.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    BudgetExceededError,
    DimensionMismatchError,
    NotPositiveSemidefiniteError,
)

SYMMETRY_TOL = 1e-12
# Eigen-solvers leave tiny negative dust on PSD inputs; accept and clamp it.
PSD_REL_TOL = 1e-9
BRUTE_FORCE_MAX_BITS = 24


@dataclass(frozen=True)
class QuboProblem:
    """Symmetric weight matrix and its dimension."""

    k: np.ndarray
    n: int

    @classmethod
    def from_matrix(cls, k) -> "QuboProblem":
        k = np.asarray(k, dtype=float)
        if k.ndim != 2 or k.shape[0] != k.shape[1]:
            raise DimensionMismatchError(f"weight matrix must be square, got {k.shape}")
        if k.shape[0] < 1:
            raise DimensionMismatchError("weight matrix must be at least 1x1")
        scale = max(1.0, float(np.max(np.abs(k))))
        if np.max(np.abs(k - k.T)) > SYMMETRY_TOL * scale:
            raise ValueError("weight matrix must be symmetric")
        k = 0.5 * (k + k.T)
        k.flags.writeable = False
        return cls(k=k, n=k.shape[0])


@dataclass(frozen=True)
class SpectralData:
    """Eigendecomposition K = Q^T D Q with eigenvalues in descending order."""

    eigenvalues: np.ndarray
    q: np.ndarray


@dataclass(frozen=True)
class Decomposition:
    """Spectral data plus the transform matrix A = sqrt(D) Q.

    ``shift`` is nonzero only when the input matrix was not PSD and shift mode
    lifted it by ``shift * I``; costs evaluated against A must then be corrected
    by ``+ shift/2 * sum(s)`` (exact for binary variables, where a diagonal
    shift is a linear term).
    """

    spectral: SpectralData
    a: np.ndarray
    shift: float = 0.0


@dataclass(frozen=True)
class GroundTruth:
    """Global minimizer found by exhaustive enumeration."""

    s_min: np.ndarray
    c_min: float


def as_binary_state(s, n: int | None = None) -> np.ndarray:
    """Validate and return s as a float array of exact 0/1 entries."""
    s = np.asarray(s)
    if s.ndim != 1:
        raise DimensionMismatchError(f"state must be a vector, got shape {s.shape}")
    if n is not None and s.shape[0] != n:
        raise DimensionMismatchError(f"state length {s.shape[0]} != problem dimension {n}")
    out = s.astype(float)
    if not np.all((out == 0.0) | (out == 1.0)):
        raise ValueError("state entries must be exactly 0 or 1")
    return out


def cost(p: QuboProblem, s) -> float:
    """Exact cost C(s) = -1/2 s^T K s."""
    s = as_binary_state(s, p.n)
    return -0.5 * float(s @ p.k @ s)


def cost_from_readout(i_bpd) -> float:
    """Experimental cost from balanced-detector signals: -1/2 sum_i r_i^2."""
    r = np.asarray(i_bpd, dtype=float)
    return -0.5 * float(r @ r)


def decompose(p: QuboProblem, allow_shift: bool = False) -> Decomposition:
    """Factor K into A = sqrt(D) Q with A^T A = K.

    Requires a non-negative spectrum.  Tiny negative eigenvalues (within
    ``PSD_REL_TOL`` of the spectral scale) are clamped to zero.  With
    ``allow_shift`` a genuinely indefinite K is lifted to K + shift*I and the
    shift returned for digital cost correction; otherwise it raises
    :class:`NotPositiveSemidefiniteError`.
    """
    evals, evecs = np.linalg.eigh(p.k)  # ascending; columns are eigenvectors
    lam_max = float(evals[-1])
    lam_min = float(evals[0])
    tol = PSD_REL_TOL * max(1.0, abs(lam_max))
    shift = 0.0
    if lam_min < -tol:
        if not allow_shift:
            raise NotPositiveSemidefiniteError(lam_min)
        shift = -lam_min
        evals = evals + shift
    evals = np.clip(evals, 0.0, None)

    order = np.argsort(evals)[::-1]  # descending
    evals = evals[order]
    q = evecs[:, order].T  # rows of Q are eigenvectors: K = Q^T D Q
    a = np.sqrt(evals)[:, None] * q
    for arr in (evals, q, a):
        arr.flags.writeable = False
    return Decomposition(spectral=SpectralData(eigenvalues=evals, q=q), a=a, shift=shift)


def problem_from_transform(a) -> QuboProblem:
    """Weight matrix induced by a transform matrix: K = A^T A (always PSD)."""
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatchError(f"transform matrix must be square, got {a.shape}")
    return QuboProblem.from_matrix(a.T @ a)


def shifted_cost_correction(shift: float, s) -> float:
    """Linear correction recovering C(K) from C(K + shift*I) on binary s."""
    return 0.5 * shift * float(np.sum(np.asarray(s, dtype=float)))


def enumerate_states(n: int) -> np.ndarray:
    """All 2^n binary states as a (2^n, n) array, in lexicographic order of
    (s_0, ..., s_{n-1})."""
    idx = np.arange(1 << n, dtype=np.uint32)
    shifts = np.arange(n - 1, -1, -1, dtype=np.uint32)  # s_0 is the most significant bit
    return ((idx[:, None] >> shifts[None, :]) & 1).astype(float)


def brute_force_min(p: QuboProblem, max_bits: int = BRUTE_FORCE_MAX_BITS) -> GroundTruth:
    """Exhaustive ground truth over all 2^n states.

    Ties break to the lexicographically smallest state.  Chunked so the n=24
    worst case stays within a modest memory footprint.
    """
    if p.n > max_bits:
        raise BudgetExceededError(
            f"n={p.n} exceeds the enumeration budget of {max_bits} bits"
        )
    n_states = 1 << p.n
    chunk = min(n_states, 1 << 16)
    shifts = np.arange(p.n - 1, -1, -1, dtype=np.uint32)
    best_cost = np.inf
    best_index = 0
    for start in range(0, n_states, chunk):
        idx = np.arange(start, min(start + chunk, n_states), dtype=np.uint32)
        states = ((idx[:, None] >> shifts[None, :]) & 1).astype(float)
        costs = -0.5 * np.einsum("ij,ij->i", states @ p.k, states)
        local = int(np.argmin(costs))
        if costs[local] < best_cost:
            best_cost = float(costs[local])
            best_index = start + local
    s_min = ((best_index >> shifts) & 1).astype(float)
    s_min.flags.writeable = False
    # Re-evaluate through cost() so c_min is bit-identical to the scalar path.
    return GroundTruth(s_min=s_min, c_min=cost(p, s_min))


def save_problem(p: QuboProblem, path) -> None:
    """Write the problem file: {"n": int, "k": row-major array}."""
    payload = {"n": p.n, "k": [float(x) for x in p.k.ravel()]}
    Path(path).write_text(json.dumps(payload, sort_keys=True) + "\n", encoding="utf-8")


def load_problem(path) -> QuboProblem:
    """Read a problem file written by :func:`save_problem`."""
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    try:
        n = int(payload["n"])
        flat = np.asarray(payload["k"], dtype=float)
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed problem file {path}: {exc}") from exc
    if flat.size != n * n:
        raise DimensionMismatchError(
            f"problem file {path}: expected {n * n} weights, got {flat.size}"
        )
    return QuboProblem.from_matrix(flat.reshape(n, n))
