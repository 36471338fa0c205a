"""Experiment orchestration: problem generation, multi-run campaigns,
success-probability curves, stability analysis, and plot-ready exports.

A campaign solves one problem ``runs`` times with independently seeded
annealing runs, brute-forces the ground truth once, and judges each iteration
against tolerance thresholds: an iteration succeeds under tolerance eta if the
theoretical cost of its accepted state is below eta * C_min.  Per-run seeds
derive deterministically from the master seed, so a campaign is reproducible
byte-for-byte.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .anneal import (
    AnnealSchedule,
    ExactEvaluator,
    FlipLaw,
    PhotonicEvaluator,
    RunRecord,
    anneal,
)
from .errors import DegenerateProblemError, UnsupportedConfigurationError
from .mesh import (
    ConfiguredMesh,
    ReferenceArm,
    ThermoOpticParams,
    build_topology,
    configure_mesh,
    mesh_state_dict,
    random_drive_voltages,
)
from .noise import (
    NoiseParams,
    StabilityReport,
    calibrate_detector_sigma,
    quantize_voltages,
    snr_and_resolution,
    wrong_acceptance_fraction,
)
from .qubo import (
    GroundTruth,
    QuboProblem,
    brute_force_min,
    load_problem,
    problem_from_transform,
)
from .serialize import dump_json, json_line, state_to_string, write_csv

MASK64 = (1 << 64) - 1
PROBLEM_STREAM = 1 << 62
CALIBRATION_STREAM = (1 << 62) + 1
DEFAULT_ETA_GRID = (0.96, 0.97, 0.98, 0.99)
WRONG_ACCEPT_WINDOW = (400, 600)


def splitmix64(z: int) -> int:
    """One step of the splitmix64 mixer (the run-seed derivation primitive)."""
    z = (z + 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive_seed(master_seed: int, stream: int) -> int:
    """Seed for a derived stream: splitmix64 of master xor mixed stream id."""
    return splitmix64((master_seed & MASK64) ^ splitmix64(stream & MASK64))


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to rerun a campaign."""

    problem_source: str = "random-mesh-voltages"  # random-mesh-voltages | random-psd | file
    problem_path: str | None = None
    n: int = 16
    runs: int = 100
    iterations: int = 1000
    eta_grid: tuple[float, ...] = DEFAULT_ETA_GRID
    evaluator: str = "photonic-noisy"  # exact | photonic-noiseless | photonic-noisy
    noise: NoiseParams = field(default_factory=NoiseParams)
    target_snr_db: float | None = None
    schedule: AnnealSchedule = field(default_factory=AnnealSchedule)
    flip_law: FlipLaw = field(default_factory=FlipLaw)
    master_seed: int = 0
    e_ref: float = 0.5
    thermo: ThermoOpticParams = field(default_factory=ThermoOpticParams)
    cost_scale: float | str | None = "auto"
    warmup_samples: int = 32
    wrong_accept_window: tuple[int, int] = WRONG_ACCEPT_WINDOW

    def __post_init__(self):
        if self.runs < 1:
            raise ValueError("runs must be at least 1")
        if not all(0.0 < e <= 1.0 for e in self.eta_grid):
            raise ValueError("eta values must lie in (0, 1]")
        if self.problem_source not in ("random-mesh-voltages", "random-psd", "file", "inline"):
            raise ValueError(f"unknown problem source {self.problem_source!r}")
        if self.evaluator not in ("exact", "photonic-noiseless", "photonic-noisy"):
            raise ValueError(f"unknown evaluator kind {self.evaluator!r}")
        if self.problem_source == "file" and not self.problem_path:
            raise ValueError("problem source 'file' needs problem_path")
        if self.evaluator != "exact" and self.problem_source != "random-mesh-voltages":
            raise UnsupportedConfigurationError(
                "photonic evaluators need a mesh-generated problem; the butterfly "
                "mesh cannot be programmed to an arbitrary transform matrix"
            )

    def schedule_for_run(self) -> AnnealSchedule:
        return replace(self.schedule, n_iterations=self.iterations)

    def to_dict(self) -> dict:
        return {
            "problem_source": self.problem_source,
            "problem_path": self.problem_path,
            "n": self.n,
            "runs": self.runs,
            "iterations": self.iterations,
            "eta_grid": list(self.eta_grid),
            "evaluator": self.evaluator,
            "noise": {
                "detector_sigma": self.noise.detector_sigma,
                "laser_rel_sigma": self.noise.laser_rel_sigma,
                "adc_bits": self.noise.adc_bits,
                "adc_full_scale": self.noise.adc_full_scale,
                "dac_bits": self.noise.dac_bits,
                "seed": self.noise.seed,
            },
            "target_snr_db": self.target_snr_db,
            "schedule": {
                "beta_start": self.schedule.beta_start,
                "beta_end": self.schedule.beta_end,
                "n_iterations": self.iterations,
                "ramp": self.schedule.ramp,
            },
            "flip_law": {"law": self.flip_law.law, "scale": self.flip_law.scale},
            "master_seed": self.master_seed,
            "e_ref": self.e_ref,
            "thermo": {
                "phase_per_volt_sq": self.thermo.phase_per_volt_sq,
                "v_max": self.thermo.v_max,
            },
            "cost_scale": self.cost_scale,
            "warmup_samples": self.warmup_samples,
            "wrong_accept_window": list(self.wrong_accept_window),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        noise = d.get("noise") or {}
        sched = d.get("schedule") or {}
        flip = d.get("flip_law") or {}
        thermo = d.get("thermo") or {}
        kwargs = dict(
            problem_source=d.get("problem_source", "random-mesh-voltages"),
            problem_path=d.get("problem_path"),
            n=int(d.get("n", 16)),
            runs=int(d.get("runs", 100)),
            iterations=int(d.get("iterations", 1000)),
            eta_grid=tuple(float(e) for e in d.get("eta_grid", DEFAULT_ETA_GRID)),
            evaluator=d.get("evaluator", "photonic-noisy"),
            noise=NoiseParams(
                detector_sigma=float(noise.get("detector_sigma", 0.0)),
                laser_rel_sigma=float(noise.get("laser_rel_sigma", 0.0)),
                adc_bits=noise.get("adc_bits"),
                adc_full_scale=float(noise.get("adc_full_scale", 8.0)),
                dac_bits=noise.get("dac_bits"),
                seed=noise.get("seed"),
            ),
            target_snr_db=d.get("target_snr_db"),
            schedule=AnnealSchedule(
                beta_start=float(sched.get("beta_start", 2.0)),
                beta_end=float(sched.get("beta_end", 1.0e7)),
                n_iterations=int(d.get("iterations", 1000)),
                ramp=sched.get("ramp", "geometric"),
            ),
            flip_law=FlipLaw(
                law=flip.get("law", "geometric-truncated"),
                scale=float(flip.get("scale", 0.3)),
            ),
            master_seed=int(d.get("master_seed", 0)),
            e_ref=float(d.get("e_ref", 0.5)),
            thermo=ThermoOpticParams(
                phase_per_volt_sq=float(
                    thermo.get("phase_per_volt_sq", ThermoOpticParams().phase_per_volt_sq)
                ),
                v_max=float(thermo.get("v_max", ThermoOpticParams().v_max)),
            ),
            cost_scale=d.get("cost_scale", "auto"),
            warmup_samples=int(d.get("warmup_samples", 32)),
        )
        if d.get("wrong_accept_window"):
            kwargs["wrong_accept_window"] = tuple(int(x) for x in d["wrong_accept_window"])
        return cls(**kwargs)


def generate_problem(
    mode: str,
    n: int,
    rng: np.random.Generator,
    e_ref: float = 0.5,
    thermo: ThermoOpticParams | None = None,
    problem_path=None,
    dac_bits: int | None = None,
) -> tuple[QuboProblem, ConfiguredMesh | None]:
    """Produce a problem instance, plus the realizing mesh when one exists.

    ``random-mesh-voltages`` replicates the experimental protocol: one random
    drive voltage per MZI, all other shifters at zero; the problem is the one
    the resulting chip state natively computes, K = A^T A.
    """
    thermo = thermo or ThermoOpticParams()
    if mode == "random-mesh-voltages":
        topo = build_topology(n)
        v = random_drive_voltages(topo, rng, thermo.v_max)
        if dac_bits is not None:
            v = quantize_voltages(v, dac_bits, thermo.v_max)
        mesh = configure_mesh(topo, v, thermo, ReferenceArm(e_ref=e_ref))
        return problem_from_transform(mesh.a), mesh
    if mode == "random-psd":
        b = rng.standard_normal((n, n))
        return problem_from_transform(b), None
    if mode == "file":
        return load_problem(problem_path), None
    raise ValueError(f"unknown problem source {mode!r}")


def success_curve(state_costs: np.ndarray, c_min: float, eta: float) -> np.ndarray:
    """Per-iteration success probability under one tolerance coefficient.

    ``state_costs`` is (runs, iterations): theoretical cost of the accepted
    state.  An iteration succeeds when that cost reaches eta*C_min; the
    comparison is inclusive so that eta = 1 counts exact-optimum hits.
    """
    if c_min == 0.0:
        raise DegenerateProblemError(
            "minimum cost is zero: every tolerance threshold is vacuous"
        )
    if c_min > 0.0:
        raise ValueError("success curves need a negative minimum cost")
    return np.mean(state_costs <= eta * c_min, axis=0)


def success_curves(state_costs: np.ndarray, c_min: float, eta_grid) -> dict[float, np.ndarray]:
    return {float(eta): success_curve(state_costs, c_min, eta) for eta in eta_grid}


def _report_from_traces(fid: np.ndarray, scl: np.ndarray, wrong_accept: float) -> dict:
    fid = fid[np.isfinite(fid)]
    scl_finite = scl[np.isfinite(scl)]
    if scl_finite.size >= 2:
        snr_db, resolution = snr_and_resolution(scl_finite)
    else:
        snr_db, resolution = math.inf, 0.0
    return {
        "mean_fidelity": float(np.mean(fid)) if fid.size else math.nan,
        "fidelity_std": float(np.std(fid)) if fid.size else math.nan,
        "mean_scale": float(np.mean(scl_finite)) if scl_finite.size else math.nan,
        "scale_std": float(np.std(scl_finite)) if scl_finite.size else math.nan,
        "snr_db": snr_db,
        "resolution": resolution,
        "wrong_accept_fraction": wrong_accept,
    }


def relative_cost_increases(
    state_costs: np.ndarray, proposed_costs: np.ndarray, c_min: float,
    window: tuple[int, int],
) -> np.ndarray:
    """C_r per sampled transition in the window, pooled over runs.

    C_r = (C_prev - C_sampled) / C_min with theoretical costs; positive values
    are worsening proposals, the ones a noisy measurement can wrongly accept.
    """
    if c_min == 0.0:
        raise DegenerateProblemError(
            "minimum cost is zero: relative cost increases are undefined"
        )
    t_total = state_costs.shape[1]
    lo = max(1, window[0])
    hi = min(t_total, window[1])
    if hi <= lo:
        return np.empty(0)
    prev = state_costs[:, lo - 1:hi - 1]
    sampled = proposed_costs[:, lo:hi]
    return ((prev - sampled) / c_min).ravel()


def stability_analysis(
    fidelity_traces: np.ndarray,
    scale_traces: np.ndarray,
    state_costs: np.ndarray,
    proposed_costs: np.ndarray,
    c_min: float,
    window: tuple[int, int] = WRONG_ACCEPT_WINDOW,
) -> dict:
    """Per-run and aggregate stability metrics from campaign traces.

    The aggregate SNR averages the per-run dB values (each run's scale-factor
    spread measured separately); the aggregate wrong-acceptance pools all
    window transitions and uses the aggregate resolution.
    """
    n_runs = fidelity_traces.shape[0]
    per_run = []
    for i in range(n_runs):
        c_r = relative_cost_increases(
            state_costs[i:i + 1], proposed_costs[i:i + 1], c_min, window
        )
        rep = _report_from_traces(fidelity_traces[i], scale_traces[i], math.nan)
        if c_r.size:
            rep["wrong_accept_fraction"] = wrong_acceptance_fraction(c_r, rep["resolution"])
        per_run.append(rep)

    fid_all = fidelity_traces.ravel()
    scl_all = scale_traces.ravel()
    snr_dbs = np.array([r["snr_db"] for r in per_run])
    snr_dbs = snr_dbs[np.isfinite(snr_dbs)]
    agg = _report_from_traces(fid_all, scl_all, math.nan)
    if snr_dbs.size:
        agg["snr_db"] = float(np.mean(snr_dbs))
        agg["resolution"] = 10.0 ** (-agg["snr_db"] / 20.0)
    c_r_all = relative_cost_increases(state_costs, proposed_costs, c_min, window)
    if c_r_all.size:
        agg["wrong_accept_fraction"] = wrong_acceptance_fraction(c_r_all, agg["resolution"])
    return {"per_run": per_run, "aggregate": agg, "window": list(window)}


def aggregate_report(analysis: dict) -> StabilityReport:
    a = analysis["aggregate"]
    return StabilityReport(**a)


@dataclass
class CampaignResult:
    """Everything a campaign produced; self-contained for re-plotting."""

    config: dict
    problem: QuboProblem
    ground_truth: GroundTruth
    mesh: ConfiguredMesh | None
    noise_effective: NoiseParams
    records: list[RunRecord]
    curves: dict[float, np.ndarray]
    stability: dict
    code_version: str = __version__

    def state_cost_matrix(self) -> np.ndarray:
        return np.stack([r.state_cost for r in self.records])

    def to_dict(self, include_iterations: bool = True) -> dict:
        runs = []
        for i, rec in enumerate(self.records):
            entry = {
                "run": i,
                "seed": rec.seed,
                "evaluator": rec.evaluator_kind,
                "cost_scale": rec.cost_scale,
                "best_state": state_to_string(rec.best_state),
                "best_cost_measured": rec.best_cost_measured,
                "best_cost_theoretical": rec.best_cost_theoretical,
            }
            if include_iterations:
                entry["iterations"] = [
                    {
                        "iter": t,
                        "proposed": state_to_string(rec.proposed[t]),
                        "accepted": bool(rec.accepted[t]),
                        "measured": float(rec.measured_cost[t]),
                        "theoretical": float(rec.theoretical_cost[t]),
                        "state_cost": float(rec.state_cost[t]),
                        "beta": float(rec.beta[t]),
                        "m": int(rec.m[t]),
                        "fidelity": float(rec.fidelity_trace[t]),
                        "scale": float(rec.scale_trace[t]),
                    }
                    for t in range(rec.n_iterations)
                ]
            runs.append(entry)
        return {
            "code_version": self.code_version,
            "config": self.config,
            "problem": {"n": self.problem.n, "k": [float(x) for x in self.problem.k.ravel()]},
            "ground_truth": {
                "s_min": state_to_string(self.ground_truth.s_min),
                "c_min": self.ground_truth.c_min,
            },
            "mesh_state": mesh_state_dict(self.mesh) if self.mesh else None,
            "noise_effective": {
                "detector_sigma": self.noise_effective.detector_sigma,
                "laser_rel_sigma": self.noise_effective.laser_rel_sigma,
                "adc_bits": self.noise_effective.adc_bits,
                "adc_full_scale": self.noise_effective.adc_full_scale,
                "dac_bits": self.noise_effective.dac_bits,
            },
            "runs": runs,
            "success_curves": {repr(eta): curve for eta, curve in self.curves.items()},
            "stability": self.stability,
        }


def run_campaign(cfg: ExperimentConfig, problem: QuboProblem | None = None) -> CampaignResult:
    """Solve one problem ``cfg.runs`` times and collect all analyses.

    ``problem`` supplies the instance directly for source "inline" (the
    service's wire-level equivalent of a problem file).
    """
    if cfg.problem_source == "inline":
        if problem is None:
            raise ValueError("problem source 'inline' needs an explicit problem")
        mesh = None
    else:
        problem_rng = make_rng(derive_seed(cfg.master_seed, PROBLEM_STREAM))
        problem, mesh = generate_problem(
            cfg.problem_source, cfg.n, problem_rng,
            e_ref=cfg.e_ref, thermo=cfg.thermo, problem_path=cfg.problem_path,
            dac_bits=cfg.noise.dac_bits if cfg.evaluator == "photonic-noisy" else None,
        )
    truth = brute_force_min(problem)

    noise = cfg.noise
    if cfg.evaluator == "photonic-noisy" and cfg.target_snr_db is not None:
        calib_rng = make_rng(derive_seed(cfg.master_seed, CALIBRATION_STREAM))
        sigma = calibrate_detector_sigma(
            mesh.a, cfg.target_snr_db, calib_rng,
            laser_rel_sigma=noise.laser_rel_sigma,
        )
        noise = replace(noise, detector_sigma=sigma)

    if cfg.evaluator == "exact":
        evaluator = ExactEvaluator(problem)
    elif cfg.evaluator == "photonic-noiseless":
        evaluator = PhotonicEvaluator(mesh)
    else:
        evaluator = PhotonicEvaluator(mesh, noise)

    schedule = cfg.schedule_for_run()
    records = []
    for i in range(cfg.runs):
        seed = derive_seed(cfg.master_seed, i)
        rec = anneal(
            evaluator, schedule, cfg.flip_law, make_rng(seed),
            cost_scale=cfg.cost_scale, warmup_samples=cfg.warmup_samples, seed=seed,
        )
        records.append(rec)

    state_costs = np.stack([r.state_cost for r in records])
    proposed_costs = np.stack([r.theoretical_cost for r in records])
    curves = success_curves(state_costs, truth.c_min, cfg.eta_grid)
    stability = stability_analysis(
        np.stack([r.fidelity_trace for r in records]),
        np.stack([r.scale_trace for r in records]),
        state_costs, proposed_costs, truth.c_min, cfg.wrong_accept_window,
    )
    return CampaignResult(
        config=cfg.to_dict(),
        problem=problem,
        ground_truth=truth,
        mesh=mesh,
        noise_effective=noise,
        records=records,
        curves=curves,
        stability=stability,
    )


def export_campaign(result: dict, out_dir) -> list[Path]:
    """Write all campaign files to a directory; returns the written paths.

    Operates on the dict form of a campaign result (the wire format), so local
    results and ones fetched from the service export identically.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    config_echo = {
        "code_version": result["code_version"],
        "config": result["config"],
        "noise_effective": result["noise_effective"],
    }
    dump_json(out / "config.json", config_echo)
    written.append(out / "config.json")

    dump_json(out / "problem.json", result["problem"], indent=None)
    written.append(out / "problem.json")

    dump_json(out / "ground_truth.json", result["ground_truth"])
    written.append(out / "ground_truth.json")

    if result.get("mesh_state"):
        dump_json(out / "mesh_state.json", result["mesh_state"], indent=None)
        written.append(out / "mesh_state.json")

    lines = []
    for run in result["runs"]:
        for it in run.get("iterations", []):
            lines.append(json_line({"run": run["run"], **it}))
    (out / "runs.jsonl").write_text(
        "\n".join(lines) + ("\n" if lines else ""), encoding="utf-8", newline="\n"
    )
    written.append(out / "runs.jsonl")

    summary_header = [
        "run", "seed", "evaluator", "cost_scale", "best_state",
        "best_cost_measured", "best_cost_theoretical",
        "mean_fidelity", "fidelity_std", "mean_scale", "scale_std",
        "snr_db", "resolution", "wrong_accept_fraction",
    ]
    per_run = result["stability"]["per_run"]
    rows = []
    for run, rep in zip(result["runs"], per_run):
        rows.append([
            run["run"], run["seed"], run["evaluator"], run["cost_scale"],
            run["best_state"], run["best_cost_measured"], run["best_cost_theoretical"],
            rep["mean_fidelity"], rep["fidelity_std"], rep["mean_scale"],
            rep["scale_std"], rep["snr_db"], rep["resolution"],
            rep["wrong_accept_fraction"],
        ])
    write_csv(out / "runs_summary.csv", summary_header, rows)
    written.append(out / "runs_summary.csv")

    curve_rows = []
    for eta_key in sorted(result["success_curves"], key=float):
        for t, prob in enumerate(result["success_curves"][eta_key]):
            curve_rows.append([float(eta_key), t, prob])
    write_csv(out / "success_curves.csv", ["eta", "iteration", "probability"], curve_rows)
    written.append(out / "success_curves.csv")

    c_min = result["ground_truth"]["c_min"]
    evo_rows = []
    if c_min != 0.0:
        for run in result["runs"]:
            for it in run.get("iterations", []):
                evo_rows.append([run["run"], it["iter"], it["state_cost"] / abs(c_min)])
    write_csv(out / "evolution.csv", ["run", "iteration", "normalized_cost"], evo_rows)
    written.append(out / "evolution.csv")

    dump_json(out / "stability.json", result["stability"])
    written.append(out / "stability.json")
    return written


def load_runs_jsonl(path) -> dict:
    """Parse a runs.jsonl export back into per-run trace arrays."""
    import json as _json

    by_run: dict[int, list[dict]] = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        rec = _json.loads(line)
        by_run.setdefault(int(rec["run"]), []).append(rec)
    runs = sorted(by_run)
    for items in by_run.values():
        items.sort(key=lambda r: r["iter"])

    def matrix(key, fill=math.nan):
        return np.array([
            [rec[key] if rec[key] is not None else fill for rec in by_run[r]]
            for r in runs
        ])

    return {
        "runs": runs,
        "state_costs": matrix("state_cost"),
        "proposed_costs": matrix("theoretical"),
        "measured_costs": matrix("measured"),
        "fidelity": matrix("fidelity"),
        "scale": matrix("scale"),
        "accepted": np.array([[bool(rec["accepted"]) for rec in by_run[r]] for r in runs]),
    }
