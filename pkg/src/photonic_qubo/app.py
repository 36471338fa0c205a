"""FastAPI service exposing the photonic solver twin.

The service wraps the core package: mesh state and readout simulation, QUBO
utilities with the exhaustive oracle, the timing model, campaign execution,
and re-analysis of recorded traces.  Validation errors from the core surface
as 422 responses with the original message.
"""

from __future__ import annotations

import math

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from . import __version__, schemas
from .anneal import AnnealSchedule, FlipLaw
from .harness import (
    ExperimentConfig,
    generate_problem,
    make_rng,
    run_campaign,
    stability_analysis,
    success_curves,
)
from .mesh import (
    ReferenceArm,
    ThermoOpticParams,
    build_topology,
    configure_mesh,
    homodyne_readout,
    mesh_state_dict,
    random_drive_voltages,
)
from .noise import NoiseParams, apply_noise
from .qubo import (
    QuboProblem,
    brute_force_min,
    cost,
    cost_from_readout,
    decompose,
)
from .serialize import state_from_string, state_to_string, to_jsonable
from .timing import TimingParams, timing_report

app = FastAPI(
    title="photonic-qubo-twin",
    version=__version__,
    description="Digital twin of a 16-channel photonic QUBO solver",
)


@app.exception_handler(ValueError)
async def value_error_handler(request: Request, exc: ValueError):
    return JSONResponse(status_code=422, content={"detail": str(exc)})


def _noise_params(model: schemas.NoiseModel | None) -> NoiseParams:
    if model is None:
        return NoiseParams()
    return NoiseParams(
        detector_sigma=model.detector_sigma,
        laser_rel_sigma=model.laser_rel_sigma,
        adc_bits=model.adc_bits,
        adc_full_scale=model.adc_full_scale,
        dac_bits=model.dac_bits,
        seed=model.seed,
    )


def _thermo_params(phase_per_volt_sq: float | None, v_max: float | None) -> ThermoOpticParams:
    defaults = ThermoOpticParams()
    return ThermoOpticParams(
        phase_per_volt_sq=phase_per_volt_sq or defaults.phase_per_volt_sq,
        v_max=v_max or defaults.v_max,
    )


def _build_mesh(req: schemas.MeshStateRequest, phi_ref=None):
    topo = build_topology(req.n_ports)
    thermo = _thermo_params(req.phase_per_volt_sq, req.v_max)
    if req.voltages is not None:
        v = np.asarray(req.voltages, dtype=float)
    else:
        v = random_drive_voltages(topo, make_rng(req.seed), thermo.v_max)
    ref = ReferenceArm(e_ref=req.e_ref) if phi_ref is None else ReferenceArm(
        e_ref=req.e_ref, phi_ref=np.asarray(phi_ref, dtype=float)
    )
    return configure_mesh(topo, v, thermo, ref)


def _problem(model: schemas.ProblemModel) -> QuboProblem:
    k = np.asarray(model.k, dtype=float).reshape(model.n, model.n)
    return QuboProblem.from_matrix(k)


@app.get("/health", response_model=schemas.HealthResponse)
def health():
    return {"status": "ok", "version": __version__}


@app.post("/timing/report", response_model=schemas.TimingResponse)
def timing(req: schemas.TimingRequest):
    overrides = req.model_dump(exclude_none=True)
    dac = overrides.pop("dac_latency_s", None)
    adc = overrides.pop("adc_latency_s", None)
    sig_figs = overrides.pop("sig_figs", None)
    params = TimingParams(**overrides)
    return timing_report(params, dac, adc, sig_figs=sig_figs)


@app.post("/mesh/state", response_model=schemas.MeshStateResponse)
def mesh_state(req: schemas.MeshStateRequest):
    return mesh_state_dict(_build_mesh(req))


@app.post("/mesh/readout", response_model=schemas.ReadoutResponse)
def mesh_readout(req: schemas.ReadoutRequest):
    mesh = _build_mesh(req.mesh, phi_ref=req.phi_ref)
    s = state_from_string(req.state)
    ro = homodyne_readout(mesh.u, s, mesh.ref)
    measured = ro.i_bpd
    if req.noise is not None:
        params = _noise_params(req.noise)
        seed = params.seed if params.seed is not None else req.noise_seed
        measured = apply_noise(ro.i_bpd, params, make_rng(seed))
    return {
        "i_plus": ro.i_plus.tolist(),
        "i_minus": ro.i_minus.tolist(),
        "i_bpd": ro.i_bpd.tolist(),
        "i_bpd_measured": np.asarray(measured).tolist(),
        "cost_exp": cost_from_readout(measured),
    }


@app.post("/problems/generate", response_model=schemas.GenerateResponse)
def problems_generate(req: schemas.GenerateRequest):
    problem, mesh = generate_problem(req.mode, req.n, make_rng(req.seed), e_ref=req.e_ref)
    out = {
        "problem": {"n": problem.n, "k": problem.k.ravel().tolist()},
        "mesh_state": mesh_state_dict(mesh) if mesh else None,
        "ground_truth": None,
    }
    if req.with_ground_truth:
        gt = brute_force_min(problem)
        out["ground_truth"] = {"s_min": state_to_string(gt.s_min), "c_min": gt.c_min}
    return out


@app.post("/qubo/cost", response_model=schemas.CostResponse)
def qubo_cost(req: schemas.CostRequest):
    return {"cost": cost(_problem(req.problem), state_from_string(req.state))}


@app.post("/qubo/cost-from-readout", response_model=schemas.CostResponse)
def qubo_cost_from_readout(req: schemas.ReadoutCostRequest):
    return {"cost": cost_from_readout(req.i_bpd)}


@app.post("/qubo/decompose", response_model=schemas.DecomposeResponse)
def qubo_decompose(req: schemas.DecomposeRequest):
    dec = decompose(_problem(req.problem), allow_shift=req.allow_shift)
    return {
        "eigenvalues": dec.spectral.eigenvalues.tolist(),
        "q": dec.spectral.q.ravel().tolist(),
        "a": dec.a.ravel().tolist(),
        "shift": dec.shift,
    }


@app.post("/qubo/brute-force", response_model=schemas.GroundTruthModel)
def qubo_brute_force(req: schemas.BruteForceRequest):
    gt = brute_force_min(_problem(req.problem))
    return {"s_min": state_to_string(gt.s_min), "c_min": gt.c_min}


@app.post("/campaigns/run")
def campaigns_run(req: schemas.CampaignRequest):
    cfg = ExperimentConfig(
        problem_source="inline" if req.problem is not None else req.problem_source,
        problem_path=None,
        n=req.n,
        runs=req.runs,
        iterations=req.iterations,
        eta_grid=tuple(req.eta_grid),
        evaluator=req.evaluator,
        noise=_noise_params(req.noise),
        target_snr_db=req.target_snr_db,
        schedule=AnnealSchedule(
            beta_start=req.schedule.beta_start,
            beta_end=req.schedule.beta_end,
            n_iterations=req.iterations,
            ramp=req.schedule.ramp,
        ),
        flip_law=FlipLaw(law=req.flip_law.law, scale=req.flip_law.scale),
        master_seed=req.master_seed,
        e_ref=req.e_ref,
        thermo=_thermo_params(req.thermo.phase_per_volt_sq, req.thermo.v_max),
        cost_scale=req.cost_scale,
        warmup_samples=req.warmup_samples,
        wrong_accept_window=req.wrong_accept_window,
    )
    problem = _problem(req.problem) if req.problem is not None else None
    result = run_campaign(cfg, problem=problem)
    payload = to_jsonable(result.to_dict(include_iterations=req.include_iterations))
    return JSONResponse(content=payload)


@app.post("/analysis/stability", response_model=schemas.StabilityResponse)
def analysis_stability(req: schemas.StabilityRequest):
    def matrix(rows):
        return np.array(
            [[math.nan if v is None else float(v) for v in row] for row in rows]
        )

    analysis = stability_analysis(
        matrix(req.fidelity),
        matrix(req.scale),
        matrix(req.state_costs),
        matrix(req.proposed_costs),
        req.c_min,
        tuple(req.window),
    )
    return to_jsonable(analysis)


@app.post("/analysis/curves", response_model=schemas.CurvesResponse)
def analysis_curves(req: schemas.CurvesRequest):
    curves = success_curves(np.asarray(req.state_costs), req.c_min, req.eta_grid)
    return {"curves": {repr(eta): curve.tolist() for eta, curve in curves.items()}}
