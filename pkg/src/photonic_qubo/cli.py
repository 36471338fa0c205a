"""Command-line client for the photonic solver twin.

Every subcommand talks to the service API: in-process by default, or a remote
instance via --server / PQUBO_SERVER.  File handling (problem files, campaign
exports, trace re-analysis) stays on the client side.
"""

from __future__ import annotations

import json
from pathlib import Path

import click

from . import __version__
from .client import ServiceClient, ServiceError
from .harness import load_runs_jsonl
from .serialize import dump_json, to_jsonable, write_csv


@click.group()
@click.option("--server", envvar="PQUBO_SERVER", default=None, metavar="URL",
              help="Base URL of a running twin service; default runs in-process.")
@click.version_option(version=__version__)
@click.pass_context
def main(ctx, server):
    """Desk-scale digital twin of a 16-channel photonic QUBO solver."""
    ctx.obj = ServiceClient(server)


def _client(ctx) -> ServiceClient:
    return ctx.obj


def _fail(exc: ServiceError):
    raise click.ClickException(exc.detail)


@main.command()
@click.option("--mode", type=click.Choice(["random-mesh-voltages", "random-psd"]),
              default="random-mesh-voltages", show_default=True)
@click.option("--n", default=16, show_default=True, help="Problem dimension.")
@click.option("--seed", default=0, show_default=True)
@click.option("--e-ref", default=0.5, show_default=True, help="Reference beam amplitude.")
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), required=True,
              help="Problem file to write ({n, k} JSON).")
@click.option("--mesh-out", type=click.Path(dir_okay=False, path_type=Path), default=None,
              help="Also dump the generated mesh state.")
@click.option("--ground-truth-out", type=click.Path(dir_okay=False, path_type=Path),
              default=None, help="Also brute-force and write the ground truth.")
@click.pass_context
def gen(ctx, mode, n, seed, e_ref, out, mesh_out, ground_truth_out):
    """Generate a problem instance (and optionally its mesh and ground truth)."""
    try:
        resp = _client(ctx).post("/problems/generate", {
            "mode": mode, "n": n, "seed": seed, "e_ref": e_ref,
            "with_ground_truth": ground_truth_out is not None,
        })
    except ServiceError as exc:
        _fail(exc)
    dump_json(out, resp["problem"], indent=None)
    click.echo(f"wrote {out}")
    if mesh_out is not None:
        dump_json(mesh_out, resp["mesh_state"], indent=None)
        click.echo(f"wrote {mesh_out}")
    if ground_truth_out is not None:
        dump_json(ground_truth_out, resp["ground_truth"])
        click.echo(f"wrote {ground_truth_out}")


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True, path_type=Path),
              default=None, help="Campaign config JSON (flags override it).")
@click.option("--problem", "problem_path", type=click.Path(exists=True, path_type=Path),
              default=None, help="Solve this problem file instead of generating one.")
@click.option("--source", type=click.Choice(["random-mesh-voltages", "random-psd"]),
              default=None, help="Problem source when no --problem is given.")
@click.option("--n", type=int, default=None)
@click.option("--runs", type=int, default=None)
@click.option("--iterations", type=int, default=None)
@click.option("--seed", "master_seed", type=int, default=None, help="Master seed.")
@click.option("--evaluator", type=click.Choice(["exact", "photonic-noiseless", "photonic-noisy"]),
              default=None)
@click.option("--eta", "eta_grid", type=float, multiple=True,
              help="Tolerance coefficient (repeatable).")
@click.option("--detector-sigma", type=float, default=None)
@click.option("--laser-sigma", type=float, default=None)
@click.option("--target-snr-db", type=float, default=None,
              help="Calibrate detector noise to this cost-function SNR.")
@click.option("--beta-start", type=float, default=None)
@click.option("--beta-end", type=float, default=None)
@click.option("--ramp", type=click.Choice(["geometric", "linear"]), default=None)
@click.option("--flip-scale", type=float, default=None)
@click.option("--e-ref", type=float, default=None)
@click.option("--out", "out_dir", type=click.Path(file_okay=False, path_type=Path),
              envvar="PQUBO_OUT_DIR", default="campaign_out", show_default=True,
              help="Export directory (env PQUBO_OUT_DIR).")
@click.pass_context
def solve(ctx, config_path, problem_path, source, n, runs, iterations, master_seed,
          evaluator, eta_grid, detector_sigma, laser_sigma, target_snr_db,
          beta_start, beta_end, ramp, flip_scale, e_ref, out_dir):
    """Run a solving campaign and export records, curves, and stability files."""
    payload = {}
    if config_path is not None:
        payload = json.loads(config_path.read_text(encoding="utf-8"))
    if problem_path is not None:
        payload["problem"] = json.loads(problem_path.read_text(encoding="utf-8"))
    if source is not None:
        payload["problem_source"] = source
    for key, value in [("n", n), ("runs", runs), ("iterations", iterations),
                       ("master_seed", master_seed), ("evaluator", evaluator),
                       ("target_snr_db", target_snr_db), ("e_ref", e_ref)]:
        if value is not None:
            payload[key] = value
    if eta_grid:
        payload["eta_grid"] = list(eta_grid)
    noise = payload.setdefault("noise", {})
    if detector_sigma is not None:
        noise["detector_sigma"] = detector_sigma
    if laser_sigma is not None:
        noise["laser_rel_sigma"] = laser_sigma
    schedule = payload.setdefault("schedule", {})
    for key, value in [("beta_start", beta_start), ("beta_end", beta_end), ("ramp", ramp)]:
        if value is not None:
            schedule[key] = value
    if flip_scale is not None:
        payload.setdefault("flip_law", {})["scale"] = flip_scale

    try:
        result = _client(ctx).post("/campaigns/run", payload)
    except ServiceError as exc:
        _fail(exc)

    from .harness import export_campaign

    written = export_campaign(result, out_dir)
    c_min = result["ground_truth"]["c_min"]
    best = min(r["best_cost_theoretical"] for r in result["runs"])
    click.echo(f"ground truth c_min = {c_min:.6g}; best found = {best:.6g}")
    for eta_key in sorted(result["success_curves"], key=float):
        curve = result["success_curves"][eta_key]
        click.echo(f"success probability (eta={eta_key}): final {curve[-1]:.3f}")
    agg = result["stability"]["aggregate"]
    if agg["mean_fidelity"] is not None:
        snr = "inf" if agg["snr_db"] is None else f"{agg['snr_db']:.1f}"
        wa = agg.get("wrong_accept_fraction")
        click.echo(
            f"stability: mean fidelity {agg['mean_fidelity']:.4f}, "
            f"SNR {snr} dB, resolution {agg['resolution']:.4%}"
            + (f", wrong acceptance {wa:.2%}" if wa is not None else "")
        )
    click.echo(f"exported {len(written)} files to {out_dir}")


def _records_paths(records: Path) -> tuple[Path, Path | None]:
    if records.is_dir():
        gt = records / "ground_truth.json"
        return records / "runs.jsonl", gt if gt.exists() else None
    return records, None


def _resolve_c_min(c_min, gt_path: Path | None) -> float:
    if c_min is not None:
        return c_min
    if gt_path is None:
        raise click.ClickException(
            "no ground_truth.json found next to the records; pass --c-min"
        )
    return float(json.loads(gt_path.read_text(encoding="utf-8"))["c_min"])


@main.command()
@click.option("--records", type=click.Path(exists=True, path_type=Path), required=True,
              help="Campaign export directory or a runs.jsonl file.")
@click.option("--c-min", type=float, default=None, help="Ground-truth minimum cost.")
@click.option("--window", nargs=2, type=int, default=(400, 600), show_default=True,
              help="Iteration window for the wrong-acceptance analysis.")
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), default=None,
              help="Write the report here instead of stdout.")
@click.pass_context
def stability(ctx, records, c_min, window, out):
    """Recompute stability metrics from recorded run traces."""
    jsonl, gt_path = _records_paths(records)
    arrays = load_runs_jsonl(jsonl)
    payload = to_jsonable({
        "fidelity": arrays["fidelity"],
        "scale": arrays["scale"],
        "state_costs": arrays["state_costs"],
        "proposed_costs": arrays["proposed_costs"],
        "c_min": _resolve_c_min(c_min, gt_path),
        "window": list(window),
    })
    try:
        report = _client(ctx).post("/analysis/stability", payload)
    except ServiceError as exc:
        _fail(exc)
    if out is not None:
        dump_json(out, report)
        click.echo(f"wrote {out}")
    else:
        click.echo(json.dumps(to_jsonable(report), indent=2, sort_keys=True))


@main.command()
@click.option("--records", type=click.Path(exists=True, path_type=Path), required=True,
              help="Campaign export directory or a runs.jsonl file.")
@click.option("--c-min", type=float, default=None, help="Ground-truth minimum cost.")
@click.option("--eta", "eta_grid", type=float, multiple=True,
              default=(0.96, 0.97, 0.98, 0.99), show_default=True)
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), default=None,
              help="CSV output path; default prints to stdout.")
@click.pass_context
def curves(ctx, records, c_min, eta_grid, out):
    """Re-derive success-probability curves from recorded run traces."""
    jsonl, gt_path = _records_paths(records)
    arrays = load_runs_jsonl(jsonl)
    payload = to_jsonable({
        "state_costs": arrays["state_costs"],
        "c_min": _resolve_c_min(c_min, gt_path),
        "eta_grid": list(eta_grid),
    })
    try:
        resp = _client(ctx).post("/analysis/curves", payload)
    except ServiceError as exc:
        _fail(exc)
    rows = []
    for eta_key in sorted(resp["curves"], key=float):
        for t, prob in enumerate(resp["curves"][eta_key]):
            rows.append([float(eta_key), t, prob])
    if out is not None:
        write_csv(out, ["eta", "iteration", "probability"], rows)
        click.echo(f"wrote {out}")
    else:
        click.echo("eta,iteration,probability")
        for row in rows:
            click.echo(",".join(str(v) for v in row))


@main.command()
@click.option("--clock-hz", type=float, default=None)
@click.option("--mod-bandwidth-hz", type=float, default=None)
@click.option("--pd-bandwidth-hz", type=float, default=None)
@click.option("--path-length-m", type=float, default=None)
@click.option("--group-index", type=float, default=None)
@click.option("--rx-latency-cycles", type=int, default=None)
@click.option("--iter-time-s", type=float, default=None)
@click.option("--n", type=int, default=None)
@click.option("--chip-area-mm2", type=float, default=None)
@click.option("--dac-latency-s", type=float, default=None,
              help="What-if substitute DAC latency.")
@click.option("--adc-latency-s", type=float, default=None,
              help="What-if substitute ADC latency.")
@click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default="json",
              show_default=True)
@click.option("--raw", is_flag=True, help="Full precision instead of 4 significant figures.")
@click.pass_context
def timing(ctx, fmt, raw, **overrides):
    """Latency breakdown and throughput of the sampling loop."""
    payload = {k: v for k, v in overrides.items() if v is not None}
    payload["sig_figs"] = None if raw else 4
    try:
        report = _client(ctx).post("/timing/report", payload)
    except ServiceError as exc:
        _fail(exc)
    if fmt == "json":
        click.echo(json.dumps(report, indent=2, sort_keys=True))
    else:
        keys = sorted(report)
        click.echo(",".join(keys))
        click.echo(",".join(repr(report[k]) for k in keys))


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True)
def serve(host, port):
    """Run the twin service with uvicorn."""
    import uvicorn

    uvicorn.run("photonic_qubo.app:app", host=host, port=port)


if __name__ == "__main__":
    main()
