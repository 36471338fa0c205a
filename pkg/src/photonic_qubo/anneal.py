"""Simulated-annealing-style search driving an exact or photonic cost evaluator.

Each iteration flips m randomly chosen bits of the current state, measures the
cost of the proposal, and accepts it with probability min[1, exp(beta * dC)]
where dC is the improvement (previous cost minus proposed cost, so improving
moves always pass).  The inverse-temperature beta ramps up over the run and
also shrinks the typical flip count m, narrowing the search around the
incumbent.  Iteration 0 measures the random initial state itself, mirroring a
hardware loop that needs a first reference measurement.

Measured costs carry an arbitrary optical power factor, so acceptance scales
dC by a cost magnitude estimated from a short warm-up unless an explicit
scale (or none) is requested.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .mesh import ConfiguredMesh
from .noise import NoiseParams, apply_noise
from .qubo import QuboProblem

MIN_COST_SCALE = 1e-30


@dataclass(frozen=True)
class AnnealSchedule:
    """Nondecreasing inverse-temperature ramp over a fixed iteration budget.

    Defaults are calibrated on 16-dim mesh-generated instances so that, with
    warm-up cost normalization, the success curves saturate by roughly
    iteration 400 of 1000 while keeping enough early exploration to locate
    the optimum basin.
    """

    beta_start: float = 2.0
    beta_end: float = 1.0e7
    n_iterations: int = 1000
    ramp: str = "geometric"

    def __post_init__(self):
        if self.beta_start <= 0 or self.beta_end < self.beta_start:
            raise ValueError("need 0 < beta_start <= beta_end")
        if self.n_iterations < 1:
            raise ValueError("n_iterations must be positive")
        if self.ramp not in ("geometric", "linear"):
            raise ValueError(f"unknown ramp {self.ramp!r}")

    def beta_values(self) -> np.ndarray:
        t = self.n_iterations
        if t == 1:
            return np.array([self.beta_start])
        x = np.arange(t) / (t - 1)
        if self.ramp == "geometric":
            return self.beta_start * (self.beta_end / self.beta_start) ** x
        return self.beta_start + (self.beta_end - self.beta_start) * x


@dataclass(frozen=True)
class FlipLaw:
    """Distribution of the per-iteration flip count m, biased low as beta grows.

    The default scale keeps multi-bit proposals occasionally available at
    mid-schedule beta, which lets runs hop out of Hamming-2 traps via a
    downhill pair flip instead of two uphill singles.
    """

    law: str = "geometric-truncated"
    scale: float = 0.3

    def __post_init__(self):
        if self.scale <= 0:
            raise ValueError("flip law scale must be positive")
        if self.law not in ("geometric-truncated", "exponential-mean"):
            raise ValueError(f"unknown flip law {self.law!r}")


def sample_flip_count(beta: float, law: FlipLaw, n: int, rng: np.random.Generator) -> int:
    """Draw m in [1, n]; the mean is nonincreasing in beta and -> 1 as beta grows."""
    if beta <= 0:
        raise ValueError("beta must be positive")
    if n == 1:
        return 1
    if law.law == "exponential-mean":
        mean_extra = (n - 1) * math.exp(-beta * law.scale)
        if mean_extra < 1e-12:
            return 1
        x = rng.exponential(mean_extra)
        return 1 + min(n - 1, int(x))
    # geometric-truncated: m = 1 + X, X ~ Geometric(p) conditioned on X <= n-1,
    # with success probability p = 1 - exp(-beta*scale).
    q = math.exp(-beta * law.scale)  # failure probability
    u = rng.random()
    if q == 0.0:
        return 1
    if q > 1.0 - 1e-12:
        return 1 + int(u * n)  # p -> 0 limit: uniform on [0, n-1]
    z = 1.0 - q**n
    x = math.ceil(math.log1p(-u * z) / math.log(q)) - 1
    return 1 + min(max(x, 0), n - 1)


def propose(s: np.ndarray, m: int, rng: np.random.Generator) -> np.ndarray:
    """Toggle exactly m distinct positions, chosen uniformly."""
    n = s.shape[0]
    if not 1 <= m <= n:
        raise ValueError(f"flip count {m} out of range [1, {n}]")
    out = s.copy()
    if m == 1:
        j = int(rng.integers(n))
        out[j] = 1.0 - out[j]
    else:
        idx = rng.choice(n, size=m, replace=False)
        out[idx] = 1.0 - out[idx]
    return out


def accept(delta_c: float, beta: float, rng: np.random.Generator) -> bool:
    """Metropolis rule on the improvement delta_c = C_prev - C_new.

    Always consumes one uniform draw so paired runs keep aligned streams.
    """
    u = rng.random()
    if delta_c >= 0.0:
        return True
    return u < math.exp(beta * delta_c)


@dataclass(frozen=True)
class Measurement:
    """One cost evaluation: measured and theoretical cost plus readout metrics."""

    cost: float
    cost_theoretical: float
    fidelity: float
    scale: float


class ExactEvaluator:
    """Evaluates the cost function directly from the weight matrix."""

    kind = "exact"

    def __init__(self, problem: QuboProblem):
        self.problem = problem

    @property
    def n(self) -> int:
        return self.problem.n

    def measure(self, s: np.ndarray, rng: np.random.Generator) -> Measurement:
        c = -0.5 * float(s @ self.problem.k @ s)
        return Measurement(cost=c, cost_theoretical=c, fidelity=1.0, scale=1.0)


class PhotonicEvaluator:
    """Evaluates the cost through the simulated optical readout path.

    The bound problem is the one the mesh realizes, K = A^T A, optionally
    shifted down by ``shift * I`` with the exact linear correction added back
    digitally (shift mode for indefinite source problems).
    """

    def __init__(self, mesh: ConfiguredMesh, noise: NoiseParams | None = None,
                 shift: float = 0.0):
        if mesh.a is None:
            raise ValueError("mesh must be configured with zero reference phases")
        self.mesh = mesh
        self.noise = None if (noise is not None and noise.is_ideal) else noise
        self.shift = float(shift)
        k = mesh.a.T @ mesh.a
        if shift:
            k = k - shift * np.eye(mesh.n)
        self.problem = QuboProblem.from_matrix(k)

    @property
    def kind(self) -> str:
        return "photonic-noisy" if self.noise is not None else "photonic-noiseless"

    @property
    def n(self) -> int:
        return self.mesh.n

    def measure(self, s: np.ndarray, rng: np.random.Generator) -> Measurement:
        r_t = self.mesh.a @ s
        correction = 0.5 * self.shift * float(np.sum(s)) if self.shift else 0.0
        tt = float(r_t @ r_t)
        theo = -0.5 * tt + correction
        if self.noise is None:
            return Measurement(cost=theo, cost_theoretical=theo, fidelity=1.0, scale=1.0)
        r_m = apply_noise(r_t, self.noise, rng)
        mm = float(r_m @ r_m)
        if tt == 0.0:
            fid, scale = math.nan, math.nan
        else:
            fid = min(1.0, abs(float(r_m @ r_t)) / math.sqrt(mm * tt)) if mm > 0.0 else math.nan
            scale = mm / tt
        return Measurement(
            cost=-0.5 * mm + correction, cost_theoretical=theo, fidelity=fid, scale=scale
        )


def make_evaluator(kind: str, problem: QuboProblem | None = None,
                   mesh: ConfiguredMesh | None = None,
                   noise: NoiseParams | None = None):
    """Evaluator factory keyed by kind: exact | photonic-noiseless | photonic-noisy."""
    if kind == "exact":
        if problem is None:
            raise ValueError("exact evaluator needs a problem")
        return ExactEvaluator(problem)
    if kind in ("photonic-noiseless", "photonic-noisy"):
        if mesh is None:
            raise ValueError("photonic evaluator needs a configured mesh")
        return PhotonicEvaluator(mesh, noise if kind == "photonic-noisy" else None)
    raise ValueError(f"unknown evaluator kind {kind!r}")


@dataclass
class RunRecord:
    """Full trace of one annealing run (column-major over iterations)."""

    n: int
    evaluator_kind: str
    proposed: np.ndarray  # (T, n) uint8
    accepted: np.ndarray  # (T,) bool
    measured_cost: np.ndarray
    theoretical_cost: np.ndarray  # of the proposed state
    state_cost: np.ndarray  # theoretical cost of the accepted state after each iteration
    beta: np.ndarray
    m: np.ndarray
    fidelity_trace: np.ndarray
    scale_trace: np.ndarray
    best_state: np.ndarray
    best_cost_measured: float
    best_cost_theoretical: float
    cost_scale: float
    seed: int | None = None
    wall_clock_s: float = 0.0  # informational only; excluded from exports

    @property
    def n_iterations(self) -> int:
        return self.accepted.shape[0]

    def accepted_states(self) -> np.ndarray:
        """Reconstruct the accepted-state sequence from the trace."""
        out = np.empty_like(self.proposed)
        current = self.proposed[0]
        for t in range(self.n_iterations):
            if self.accepted[t]:
                current = self.proposed[t]
            out[t] = current
        return out


def estimate_cost_scale(evaluator, rng: np.random.Generator, n_samples: int) -> float:
    """Warm-up estimate of the cost magnitude, used to normalize beta."""
    worst = 0.0
    for _ in range(n_samples):
        s = rng.integers(0, 2, size=evaluator.n).astype(float)
        worst = max(worst, abs(evaluator.measure(s, rng).cost))
    return max(worst, MIN_COST_SCALE)


def anneal(
    evaluator,
    schedule: AnnealSchedule,
    flip_law: FlipLaw,
    rng: np.random.Generator,
    cost_scale: float | str | None = "auto",
    warmup_samples: int = 32,
    initial_state: np.ndarray | None = None,
    seed: int | None = None,
) -> RunRecord:
    """Run one annealing search and record every iteration.

    ``cost_scale="auto"`` estimates the normalization from ``warmup_samples``
    extra measurements before iteration 0; a float fixes it; None disables
    normalization (beta applies to raw cost units).
    """
    t_start = time.perf_counter()
    n = evaluator.n
    t_total = schedule.n_iterations
    betas = schedule.beta_values()

    if cost_scale == "auto":
        scale = estimate_cost_scale(evaluator, rng, warmup_samples)
    elif cost_scale is None:
        scale = 1.0
    else:
        scale = float(cost_scale)
        if scale <= 0:
            raise ValueError("cost_scale must be positive")

    proposed = np.zeros((t_total, n), dtype=np.uint8)
    accepted = np.zeros(t_total, dtype=bool)
    measured = np.zeros(t_total)
    theoretical = np.zeros(t_total)
    state_cost = np.zeros(t_total)
    m_trace = np.zeros(t_total, dtype=np.int16)
    fid_trace = np.zeros(t_total)
    scl_trace = np.zeros(t_total)

    if initial_state is not None:
        current = np.asarray(initial_state, dtype=float).copy()
        if current.shape != (n,):
            raise ValueError(f"initial state must have length {n}")
    else:
        current = rng.integers(0, 2, size=n).astype(float)

    meas0 = evaluator.measure(current, rng)
    proposed[0] = current
    accepted[0] = True
    measured[0] = meas0.cost
    theoretical[0] = meas0.cost_theoretical
    state_cost[0] = meas0.cost_theoretical
    m_trace[0] = 0
    fid_trace[0] = meas0.fidelity
    scl_trace[0] = meas0.scale

    current_meas = meas0.cost
    current_theo = meas0.cost_theoretical
    best_cost = meas0.cost
    best_theo = meas0.cost_theoretical
    best_state = current.copy()

    for t in range(1, t_total):
        beta = float(betas[t])
        m = sample_flip_count(beta, flip_law, n, rng)
        prop = propose(current, m, rng)
        try:
            meas = evaluator.measure(prop, rng)
        except Exception as exc:
            raise RuntimeError(f"evaluator failed at iteration {t}") from exc
        ok = accept((current_meas - meas.cost) / scale, beta, rng)

        proposed[t] = prop
        accepted[t] = ok
        measured[t] = meas.cost
        theoretical[t] = meas.cost_theoretical
        m_trace[t] = m
        fid_trace[t] = meas.fidelity
        scl_trace[t] = meas.scale
        if ok:
            current = prop
            current_meas = meas.cost
            current_theo = meas.cost_theoretical
        state_cost[t] = current_theo
        if meas.cost < best_cost:
            best_cost = meas.cost
            best_theo = meas.cost_theoretical
            best_state = prop.copy()

    return RunRecord(
        n=n,
        evaluator_kind=evaluator.kind,
        proposed=proposed,
        accepted=accepted,
        measured_cost=measured,
        theoretical_cost=theoretical,
        state_cost=state_cost,
        beta=betas,
        m=m_trace,
        fidelity_trace=fid_trace,
        scale_trace=scl_trace,
        best_state=best_state,
        best_cost_measured=float(best_cost),
        best_cost_theoretical=float(best_theo),
        cost_scale=float(scale),
        seed=seed,
        wall_clock_s=time.perf_counter() - t_start,
    )
