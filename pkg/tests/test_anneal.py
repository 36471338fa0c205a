"""Tests for the annealing heuristic, its primitives, and the cost evaluators."""

import math

import numpy as np
import pytest

from photonic_qubo.anneal import (
    AnnealSchedule,
    ExactEvaluator,
    FlipLaw,
    PhotonicEvaluator,
    accept,
    anneal,
    make_evaluator,
    propose,
    sample_flip_count,
)
from photonic_qubo.mesh import ReferenceArm, build_topology, configure_mesh, random_drive_voltages
from photonic_qubo.noise import NoiseParams
from photonic_qubo.qubo import QuboProblem, brute_force_min, cost


def rng_of(seed):
    return np.random.Generator(np.random.PCG64(seed))


class TestSchedule:
    def test_geometric_endpoints_and_monotone(self):
        sched = AnnealSchedule(beta_start=0.5, beta_end=100.0, n_iterations=250)
        betas = sched.beta_values()
        assert betas[0] == pytest.approx(0.5)
        assert betas[-1] == pytest.approx(100.0)
        assert np.all(np.diff(betas) >= 0)

    def test_linear_ramp(self):
        sched = AnnealSchedule(beta_start=1.0, beta_end=5.0, n_iterations=5, ramp="linear")
        assert np.allclose(sched.beta_values(), [1, 2, 3, 4, 5])

    def test_single_iteration(self):
        sched = AnnealSchedule(beta_start=2.0, beta_end=9.0, n_iterations=1)
        assert np.allclose(sched.beta_values(), [2.0])

    def test_validation(self):
        with pytest.raises(ValueError):
            AnnealSchedule(beta_start=0.0)
        with pytest.raises(ValueError):
            AnnealSchedule(beta_start=2.0, beta_end=1.0)
        with pytest.raises(ValueError):
            AnnealSchedule(ramp="sigmoid")


class TestFlipCount:
    def test_high_beta_limit(self):
        rng = rng_of(0)
        law = FlipLaw(scale=1.0)
        draws = [sample_flip_count(1e9, law, 16, rng) for _ in range(2000)]
        assert all(m == 1 for m in draws)

    def test_low_beta_spreads_out(self):
        rng = rng_of(1)
        law = FlipLaw(scale=1.0)
        n = 16
        draws = np.array([sample_flip_count(0.01, law, n, rng) for _ in range(100_000)])
        assert draws.min() >= 1 and draws.max() <= n
        assert draws.mean() > n / 4

    def test_single_variable(self):
        rng = rng_of(2)
        assert sample_flip_count(0.01, FlipLaw(), 1, rng) == 1

    def test_mean_nonincreasing_in_beta(self):
        law = FlipLaw(scale=1.0)
        means = []
        for beta in [0.05, 0.2, 0.8, 3.0, 12.0]:
            rng = rng_of(3)
            draws = [sample_flip_count(beta, law, 16, rng) for _ in range(20_000)]
            means.append(np.mean(draws))
        assert all(a >= b - 0.02 for a, b in zip(means, means[1:]))

    def test_bounds_always_hold(self):
        rng = rng_of(4)
        for law in (FlipLaw("geometric-truncated", 0.3), FlipLaw("exponential-mean", 0.3)):
            for beta in (1e-6, 0.1, 1.0, 50.0, 1e8):
                for n in (1, 2, 7, 16):
                    m = sample_flip_count(beta, law, n, rng)
                    assert 1 <= m <= n

    def test_truncated_geometric_distribution_shape(self):
        # Against the closed-form pmf: P(X=k) proportional to q^k on [0, n-1].
        beta, scale, n = 0.7, 1.0, 8
        q = math.exp(-beta * scale)
        pmf = np.array([q**k for k in range(n)])
        pmf /= pmf.sum()
        rng = rng_of(5)
        draws = np.array([sample_flip_count(beta, FlipLaw(scale=scale), n, rng)
                          for _ in range(200_000)]) - 1
        freq = np.bincount(draws, minlength=n) / draws.size
        assert np.max(np.abs(freq - pmf)) < 0.005

    def test_invalid_law(self):
        with pytest.raises(ValueError):
            FlipLaw(law="uniform")
        with pytest.raises(ValueError):
            FlipLaw(scale=0.0)


class TestPropose:
    def test_full_flip_is_complement(self):
        rng = rng_of(6)
        s = rng.integers(0, 2, 10).astype(float)
        flipped = propose(s, 10, rng)
        assert np.array_equal(flipped, 1.0 - s)

    def test_single_flip_uniform(self):
        rng = rng_of(7)
        s = np.zeros(4)
        counts = np.zeros(4)
        for _ in range(100_000):
            out = propose(s, 1, rng)
            counts[np.argmax(out)] += 1
        freq = counts / counts.sum()
        assert np.max(np.abs(freq - 0.25)) < 0.01

    def test_hamming_distance_is_m(self):
        rng = rng_of(8)
        s = rng.integers(0, 2, 16).astype(float)
        for m in (1, 3, 8, 16):
            out = propose(s, m, rng)
            assert int(np.sum(out != s)) == m

    def test_double_toggle_is_involution(self):
        rng = rng_of(9)
        s = rng.integers(0, 2, 12).astype(float)
        out = propose(s, 5, rng)
        flipped_at = np.nonzero(out != s)[0]
        back = out.copy()
        back[flipped_at] = 1.0 - back[flipped_at]
        assert np.array_equal(back, s)

    def test_m_out_of_range(self):
        rng = rng_of(10)
        with pytest.raises(ValueError):
            propose(np.zeros(4), 0, rng)
        with pytest.raises(ValueError):
            propose(np.zeros(4), 5, rng)


class TestAccept:
    def test_zero_delta_always_accepts(self):
        rng = rng_of(11)
        assert all(accept(0.0, 1.0, rng) for _ in range(1000))

    def test_improvement_always_accepts(self):
        rng = rng_of(12)
        assert all(accept(5.0, 2.0, rng) for _ in range(1000))

    def test_boltzmann_statistics(self):
        rng = rng_of(13)
        trials = 1_000_000
        hits = sum(accept(-1.0, 1.0, rng) for _ in range(trials))
        assert hits / trials == pytest.approx(math.exp(-1.0), rel=0.01)

    def test_monotone_in_penalty(self):
        rates = []
        for delta in (-0.5, -1.0, -2.0):
            rng = rng_of(14)
            rates.append(np.mean([accept(delta, 1.0, rng) for _ in range(100_000)]))
        assert rates[0] > rates[1] > rates[2]

    def test_extreme_penalty_never_overflows(self):
        rng = rng_of(15)
        assert not accept(-1e9, 10.0, rng)
        assert accept(1e9, 10.0, rng)


class TestEvaluators:
    @staticmethod
    def mesh16(seed, e_ref=0.5):
        rng = rng_of(seed)
        topo = build_topology(16)
        return configure_mesh(topo, random_drive_voltages(topo, rng),
                              ref=ReferenceArm(e_ref=e_ref))

    def test_exact_matches_cost_function(self):
        rng = rng_of(16)
        k = rng.standard_normal((6, 6))
        p = QuboProblem.from_matrix(k + k.T)
        ev = ExactEvaluator(p)
        for _ in range(10):
            s = rng.integers(0, 2, 6).astype(float)
            meas = ev.measure(s, rng)
            assert meas.cost == pytest.approx(cost(p, s), abs=1e-12)
            assert meas.cost == meas.cost_theoretical
            assert meas.fidelity == 1.0 and meas.scale == 1.0

    def test_photonic_noiseless_agrees_with_exact_up_to_constant(self):
        mesh = self.mesh16(17, e_ref=1.0)  # 2*e_ref = 2, so factor 4 vs Re(U)^T Re(U)
        ev = PhotonicEvaluator(mesh)
        k_bare = np.real(mesh.u).T @ np.real(mesh.u)
        p_bare = QuboProblem.from_matrix(k_bare)
        rng = rng_of(18)
        for _ in range(20):
            s = rng.integers(0, 2, 16).astype(float)
            meas = ev.measure(s, rng)
            assert meas.cost == pytest.approx(4.0 * cost(p_bare, s), rel=1e-12)

    def test_photonic_noisy_reports_readout_metrics(self):
        mesh = self.mesh16(19)
        ev = PhotonicEvaluator(mesh, NoiseParams(detector_sigma=0.05))
        assert ev.kind == "photonic-noisy"
        rng = rng_of(20)
        s = np.ones(16)
        meas = ev.measure(s, rng)
        assert meas.cost != meas.cost_theoretical
        assert 0.0 <= meas.fidelity <= 1.0
        assert meas.scale > 0.0

    def test_zero_state_metrics_are_nan_under_noise(self):
        mesh = self.mesh16(21)
        ev = PhotonicEvaluator(mesh, NoiseParams(detector_sigma=0.05))
        meas = ev.measure(np.zeros(16), rng_of(22))
        assert math.isnan(meas.fidelity) and math.isnan(meas.scale)

    def test_shift_correction_identity(self):
        mesh = self.mesh16(23)
        shift = 0.3
        ev = PhotonicEvaluator(mesh, shift=shift)
        k_user = mesh.a.T @ mesh.a - shift * np.eye(16)
        rng = rng_of(24)
        for _ in range(20):
            s = rng.integers(0, 2, 16).astype(float)
            expected = -0.5 * float(s @ k_user @ s)
            assert ev.measure(s, rng).cost == pytest.approx(expected, abs=1e-10)

    def test_factory(self):
        mesh = self.mesh16(25)
        p = QuboProblem.from_matrix(np.eye(4))
        assert make_evaluator("exact", problem=p).kind == "exact"
        assert make_evaluator("photonic-noiseless", mesh=mesh).kind == "photonic-noiseless"
        noisy = make_evaluator("photonic-noisy", mesh=mesh,
                               noise=NoiseParams(detector_sigma=0.1))
        assert noisy.kind == "photonic-noisy"
        with pytest.raises(ValueError):
            make_evaluator("exact")
        with pytest.raises(ValueError):
            make_evaluator("quantum")


class TestAnneal:
    def test_flat_landscape(self):
        p = QuboProblem.from_matrix(np.zeros((8, 8)))
        rec = anneal(ExactEvaluator(p), AnnealSchedule(n_iterations=100), FlipLaw(), rng_of(26))
        assert rec.best_cost_theoretical == 0.0

    def test_easy_landscape_reaches_all_ones(self):
        p = QuboProblem.from_matrix(2.0 * np.eye(8))
        truth = brute_force_min(p)
        assert np.all(truth.s_min == 1.0) and truth.c_min == -8.0
        hits = 0
        sched = AnnealSchedule(n_iterations=500)
        for i in range(100):
            rec = anneal(ExactEvaluator(p), sched, FlipLaw(), rng_of(1000 + i))
            hits += rec.best_cost_theoretical == truth.c_min
        assert hits >= 99

    def test_iteration_zero_records_initial_state(self):
        p = QuboProblem.from_matrix(np.eye(6))
        rec = anneal(ExactEvaluator(p), AnnealSchedule(n_iterations=50), FlipLaw(), rng_of(27))
        assert rec.accepted[0]
        assert rec.m[0] == 0
        assert rec.state_cost[0] == rec.theoretical_cost[0]

    def test_trace_consistency(self):
        p = QuboProblem.from_matrix(np.eye(10))
        rec = anneal(ExactEvaluator(p), AnnealSchedule(n_iterations=300), FlipLaw(), rng_of(28))
        states = rec.accepted_states()
        current = rec.proposed[0]
        for t in range(rec.n_iterations):
            if rec.accepted[t]:
                current = rec.proposed[t]
            assert np.array_equal(states[t], current)
            assert rec.state_cost[t] == pytest.approx(
                -0.5 * float(current.astype(float) @ p.k @ current.astype(float)), abs=1e-12
            )
        # Hamming distance of proposals matches the recorded flip count.
        prev = rec.proposed[0]
        for t in range(1, rec.n_iterations):
            assert int(np.sum(rec.proposed[t] != prev)) == rec.m[t]
            if rec.accepted[t]:
                prev = rec.proposed[t]

    def test_best_so_far_monotone(self):
        p = QuboProblem.from_matrix(np.eye(10))
        rec = anneal(ExactEvaluator(p), AnnealSchedule(n_iterations=200), FlipLaw(), rng_of(29))
        running = np.minimum.accumulate(rec.measured_cost)
        assert np.all(np.diff(running) <= 0)
        assert rec.best_cost_measured == running[-1]

    def test_reproducibility(self):
        rng = rng_of(30)
        k = rng.standard_normal((8, 8))
        p = QuboProblem.from_matrix(k.T @ k)
        a = anneal(ExactEvaluator(p), AnnealSchedule(n_iterations=150), FlipLaw(), rng_of(31))
        b = anneal(ExactEvaluator(p), AnnealSchedule(n_iterations=150), FlipLaw(), rng_of(31))
        assert np.array_equal(a.proposed, b.proposed)
        assert np.array_equal(a.accepted, b.accepted)
        assert np.array_equal(a.measured_cost, b.measured_cost)
        assert a.best_cost_measured == b.best_cost_measured
        assert a.cost_scale == b.cost_scale

    def test_evaluator_equivalence_exact_vs_photonic(self):
        # With e_ref = 1.0 the photonic cost is 4x the bare-Re(U) cost; the
        # auto scale normalization absorbs the constant, so both evaluators
        # make the same decisions on the same stream.
        rng = rng_of(32)
        topo = build_topology(16)
        mesh = configure_mesh(topo, random_drive_voltages(topo, rng),
                              ref=ReferenceArm(e_ref=1.0))
        photonic = PhotonicEvaluator(mesh)
        exact = ExactEvaluator(photonic.problem)
        sched = AnnealSchedule(n_iterations=400)
        rec_p = anneal(photonic, sched, FlipLaw(), rng_of(33))
        rec_e = anneal(exact, sched, FlipLaw(), rng_of(33))
        assert np.array_equal(rec_p.accepted, rec_e.accepted)
        assert np.array_equal(rec_p.proposed, rec_e.proposed)

    def test_evaluator_failure_carries_iteration(self):
        class Broken:
            kind = "exact"
            n = 4

            def __init__(self):
                self.calls = 0

            def measure(self, s, rng):
                self.calls += 1
                if self.calls > 10:
                    raise RuntimeError("detector saturated")
                from photonic_qubo.anneal import Measurement
                return Measurement(0.0, 0.0, 1.0, 1.0)

        with pytest.raises(RuntimeError, match="iteration"):
            anneal(Broken(), AnnealSchedule(n_iterations=50), FlipLaw(), rng_of(34),
                   cost_scale=None)

    def test_explicit_and_disabled_cost_scale(self):
        p = QuboProblem.from_matrix(np.eye(4))
        rec = anneal(ExactEvaluator(p), AnnealSchedule(n_iterations=20), FlipLaw(),
                     rng_of(35), cost_scale=2.5)
        assert rec.cost_scale == 2.5
        rec = anneal(ExactEvaluator(p), AnnealSchedule(n_iterations=20), FlipLaw(),
                     rng_of(36), cost_scale=None)
        assert rec.cost_scale == 1.0
        with pytest.raises(ValueError):
            anneal(ExactEvaluator(p), AnnealSchedule(n_iterations=20), FlipLaw(),
                   rng_of(37), cost_scale=-1.0)

    def test_fixed_initial_state(self):
        p = QuboProblem.from_matrix(np.eye(5))
        s0 = np.array([1.0, 0.0, 1.0, 0.0, 1.0])
        rec = anneal(ExactEvaluator(p), AnnealSchedule(n_iterations=10), FlipLaw(),
                     rng_of(38), initial_state=s0)
        assert np.array_equal(rec.proposed[0].astype(float), s0)
