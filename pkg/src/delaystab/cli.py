"""Command-line thin client over the service handlers.

Each command builds a typed request, calls the service (in-process by
default, over HTTP when --server is given), and writes the results as
CSV/JSON files plus a manifest. Exit codes: 0 success, 2 input/validation
error, 3 numerical failure. CSV bodies are deterministic: RFC-4180 style,
header row first, 17 significant digits, no locale dependence.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import os
import sys
import time
from pathlib import Path

import click
import httpx
from pydantic import ValidationError

from . import __version__
from .service import api
from .service import schemas as sc

_FMT = "%.17g"


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return _FMT % value
    return str(value)


class ServiceClient:
    """Dispatches requests in-process or to a remote service URL."""

    _local = {"analyze": (api.analyze, sc.AnalyzeRequest),
              "design": (api.design, sc.DesignRequest),
              "region": (api.region, sc.RegionRequest),
              "simulate": (api.simulate, sc.RunConfigFile),
              "oracle": (api.oracle, sc.OracleRequest)}
    _responses = {"analyze": sc.AnalyzeResponse, "design": sc.DesignResponse,
                  "region": sc.RegionResponse, "simulate": sc.SimulateResponse,
                  "oracle": sc.OracleResponse}

    def __init__(self, server: str | None):
        self.server = server.rstrip("/") if server else None

    def call(self, endpoint: str, request):
        if self.server is None:
            handler, _ = self._local[endpoint]
            return handler(request)
        reply = httpx.post(f"{self.server}/{endpoint}",
                           json=request.model_dump(mode="json"), timeout=600.0)
        if 400 <= reply.status_code < 500:
            raise ValueError(f"service rejected request: {reply.text}")
        if reply.status_code >= 500:
            raise RuntimeError(f"service failure: {reply.text}")
        return self._responses[endpoint].model_validate(reply.json())


class Manifest:
    """Run manifest: written last, only on success."""

    def __init__(self, command: str, request, seed: int | None):
        payload = json.dumps(request.model_dump(mode="json"), sort_keys=True)
        self.data = {
            "command": command,
            "input_sha256": hashlib.sha256(payload.encode()).hexdigest(),
            "tool_version": __version__,
            "seed": seed,
            "outputs": [],
            "details": {},
        }
        self._t0 = time.monotonic()

    def add_output(self, path: Path, rows: int):
        self.data["outputs"].append({"file": path.name, "rows": rows})

    def write(self, out_dir: Path):
        self.data["wall_clock_seconds"] = time.monotonic() - self._t0
        path = out_dir / "manifest.json"
        path.write_text(json.dumps(self.data, indent=2, sort_keys=True) + "\n")


def _write_csv(path: Path, header: list[str], rows) -> int:
    count = 0
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
            count += 1
    return count


def _write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _out_dir(ctx_out: str | None, config_dir: str | None = None) -> Path:
    chosen = ctx_out or config_dir or os.environ.get("DELAYSTAB_OUT") or "."
    path = Path(chosen)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _echo(ctx, message: str):
    if not ctx.obj["quiet"]:
        click.echo(message)


def _run(ctx, command: str, request, writer) -> None:
    """Shared command body: call the service, write outputs, then the manifest."""
    client = ServiceClient(ctx.obj["server"])
    manifest = Manifest(command, request, ctx.obj["seed"])
    try:
        response = client.call(command, request)
        out = writer(response, manifest)
        manifest.write(out)
    except (ValidationError, ValueError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    except RuntimeError as exc:
        click.echo(f"numerical failure: {exc}", err=True)
        sys.exit(3)


@click.group()
@click.option("--out", type=click.Path(), default=None,
              help="Output directory (default: $DELAYSTAB_OUT or '.').")
@click.option("--seed", type=int, default=None,
              help="Seed recorded in the manifest for randomized harnesses.")
@click.option("--quiet", is_flag=True, help="Suppress progress output.")
@click.option("--server", default=None,
              help="Base URL of a running service; default runs in-process.")
@click.version_option(version=__version__)
@click.pass_context
def main(ctx, out, seed, quiet, server):
    """Delay-induced stabilization toolkit for the 1-D wave equation."""
    ctx.ensure_object(dict)
    ctx.obj.update(out=out, seed=seed, quiet=quiet, server=server)


@main.command()
@click.option("--n", type=int, required=True, help="Mode index (>= 1).")
@click.option("--ell", type=float, required=True, help="String length.")
@click.option("--tau", type=float, required=True, help="Delay (>= 0).")
@click.option("--alpha", type=float, default=0.0, show_default=True,
              help="Potential gain (0 = undelayed baseline).")
@click.option("--re-min", type=float, default=None)
@click.option("--re-max", type=float, default=None)
@click.option("--im-min", type=float, default=None)
@click.option("--im-max", type=float, default=None)
@click.option("--grid-density", type=int, default=64, show_default=True)
@click.pass_context
def analyze(ctx, n, ell, tau, alpha, re_min, re_max, im_min, im_max, grid_density):
    """Locate the closed-loop spectrum and spectral abscissa.

    Writes spectrum.csv (re, im, residual; conjugates implied) and
    abscissa.json.
    """
    rect = None
    corners = (re_min, re_max, im_min, im_max)
    if any(v is not None for v in corners):
        if any(v is None for v in corners):
            click.echo("error: give all four of --re-min/--re-max/--im-min/--im-max",
                       err=True)
            sys.exit(2)
        rect = dict(re_min=re_min, re_max=re_max, im_min=im_min, im_max=im_max)
    try:
        request = sc.AnalyzeRequest(n=n, ell=ell, tau=tau, alpha=alpha, rect=rect,
                                    grid_density=grid_density)
    except ValidationError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)

    def writer(resp: sc.AnalyzeResponse, manifest: Manifest) -> Path:
        out = _out_dir(ctx.obj["out"])
        rows = [(r.re, r.im, r.residual) for r in resp.roots]
        n_rows = _write_csv(out / "spectrum.csv", ["re", "im", "residual"], rows)
        manifest.add_output(out / "spectrum.csv", n_rows)
        _write_json(out / "abscissa.json", {"abscissa": resp.abscissa,
                                            "rhp_bound": resp.rhp_bound})
        manifest.add_output(out / "abscissa.json", 1)
        manifest.data["details"]["abscissa"] = resp.abscissa
        _echo(ctx, f"{len(resp.roots)} roots, abscissa {resp.abscissa:.6g} -> {out}")
        return out

    _run(ctx, "analyze", request, writer)


@main.command()
@click.option("--n", type=int, required=True)
@click.option("--ell", type=float, required=True)
@click.option("--tau", type=float, default=None, help="Single delay to certify.")
@click.option("--alpha", type=float, default=None,
              help="Gain to test against the admissible interval (single tau only).")
@click.option("--tau-start", type=float, default=None)
@click.option("--tau-stop", type=float, default=None)
@click.option("--tau-step", type=float, default=None)
@click.pass_context
def design(ctx, n, ell, tau, alpha, tau_start, tau_stop, tau_step):
    """Admissible stabilizing gains per delay.

    Writes design.csv (tau, k, alpha_lo, alpha_hi, is_empty); with --tau and
    --alpha also prints the stabilization certificate.
    """
    sweep = (tau_start, tau_stop, tau_step)
    tau_range = None
    if any(v is not None for v in sweep):
        if any(v is None for v in sweep):
            click.echo("error: give all of --tau-start/--tau-stop/--tau-step", err=True)
            sys.exit(2)
        tau_range = dict(start=tau_start, stop=tau_stop, step=tau_step)
    try:
        request = sc.DesignRequest(n=n, ell=ell, tau=tau, tau_range=tau_range, alpha=alpha)
    except ValidationError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)

    def writer(resp: sc.DesignResponse, manifest: Manifest) -> Path:
        out = _out_dir(ctx.obj["out"])
        rows = [(r.tau, r.k, r.alpha_lo, r.alpha_hi, r.is_empty) for r in resp.rows]
        n_rows = _write_csv(out / "design.csv",
                            ["tau", "k", "alpha_lo", "alpha_hi", "is_empty"], rows)
        manifest.add_output(out / "design.csv", n_rows)
        if resp.certificate is not None:
            cert = resp.certificate
            manifest.data["details"]["certificate"] = cert.model_dump()
            _echo(ctx, f"satisfied={str(cert.satisfied).lower()} k={cert.k} "
                       f"interval=({_fmt(cert.alpha_lo)}, {_fmt(cert.alpha_hi)})")
        else:
            _echo(ctx, f"{n_rows} rows -> {out}")
        return out

    _run(ctx, "design", request, writer)


@main.command()
@click.option("--beta-min", type=float, default=0.0, show_default=True)
@click.option("--beta-max", type=float, default=9.0 * math.pi**2,
              show_default="9*pi^2")
@click.option("--alpha-min", type=float, default=-4.0 * math.pi**2,
              show_default="-4*pi^2")
@click.option("--alpha-max", type=float, default=4.0 * math.pi**2,
              show_default="4*pi^2")
@click.option("--resolution", type=int, default=200, show_default=True)
@click.option("--workers", type=int, default=None,
              help="Parallel worker processes for cell evaluation.")
@click.pass_context
def region(ctx, beta_min, beta_max, alpha_min, alpha_max, resolution, workers):
    """Chart unstable-root counts over the scaled parameter plane.

    Writes region.csv (beta_tilde, alpha_tilde, count, analytic_stable) and
    region_boundaries.csv with the analytic lobe boundary lines. Exits 3 when
    more than 1% of cells fail to certify.
    """
    try:
        request = sc.RegionRequest(beta_range=(beta_min, beta_max),
                                   alpha_range=(alpha_min, alpha_max),
                                   resolution=resolution, workers=workers)
    except ValidationError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)

    def writer(resp: sc.RegionResponse, manifest: Manifest) -> Path:
        if resp.invalid_fraction > 0.01:
            raise RuntimeError(f"{100 * resp.invalid_fraction:.2f}% of cells "
                               "failed to certify (root-crossing boundary)")
        out = _out_dir(ctx.obj["out"])

        def rows():
            for i, b in enumerate(resp.beta_axis):
                for j, a in enumerate(resp.alpha_axis):
                    if resp.valid[i][j]:
                        yield (b, a, resp.counts[i][j], resp.analytic_stable[i][j])

        n_rows = _write_csv(out / "region.csv",
                            ["beta_tilde", "alpha_tilde", "count", "analytic_stable"],
                            rows())
        manifest.add_output(out / "region.csv", n_rows)
        n_lines = _write_csv(out / "region_boundaries.csv",
                             ["family", "k", "sign", "beta_tilde", "alpha_tilde"],
                             ((p.family, p.k, p.sign, p.beta_tilde, p.alpha_tilde)
                              for p in resp.boundaries))
        manifest.add_output(out / "region_boundaries.csv", n_lines)
        manifest.data["details"]["invalid_fraction"] = resp.invalid_fraction
        _echo(ctx, f"{n_rows} cells -> {out}")
        return out

    _run(ctx, "region", request, writer)


@main.command()
@click.argument("config_file", type=click.Path(exists=True, dir_okay=False))
@click.pass_context
def simulate(ctx, config_file):
    """Run the finite-difference simulation described by a JSON config file.

    Writes energy.csv (t, field_energy, weighted_energy), snapshots.csv
    (t, x, u), decay_fit.json, and the run manifest.
    """
    try:
        payload = json.loads(Path(config_file).read_text())
        request = sc.RunConfigFile.model_validate(payload)
    except (json.JSONDecodeError, ValidationError) as exc:
        click.echo(f"error: invalid config: {exc}", err=True)
        sys.exit(2)

    def writer(resp: sc.SimulateResponse, manifest: Manifest) -> Path:
        out = _out_dir(ctx.obj["out"], request.outputs.directory)
        n_rows = _write_csv(out / "energy.csv",
                            ["t", "field_energy", "weighted_energy"],
                            zip(resp.times, resp.field_energy, resp.weighted_energy))
        manifest.add_output(out / "energy.csv", n_rows)

        def snap_rows():
            for t, frame in zip(resp.snapshots.times, resp.snapshots.frames):
                for x, u in zip(resp.snapshots.x, frame):
                    yield (t, x, u)

        n_snap = _write_csv(out / "snapshots.csv", ["t", "x", "u"], snap_rows())
        manifest.add_output(out / "snapshots.csv", n_snap)
        fit = resp.decay_fit
        _write_json(out / "decay_fit.json",
                    {"rate": fit.rate, "r_squared": fit.r_squared,
                     "window_start": fit.window_start, "window_end": fit.window_end,
                     "n_peaks": fit.n_peaks})
        manifest.add_output(out / "decay_fit.json", 1)
        manifest.data["details"].update(
            dominant_energy_rate=resp.dominant_energy_rate,
            time_scale=resp.time_scale, delay_steps=resp.delay_steps,
            delay_rounding=resp.delay_rounding, courant=resp.courant, dt=resp.dt)
        _echo(ctx, f"{n_rows} energy rows, fit rate {fit.rate} -> {out}")
        return out

    _run(ctx, "simulate", request, writer)


@main.command()
@click.option("--n", type=int, required=True)
@click.option("--ell", type=float, required=True)
@click.option("--tau", type=float, required=True)
@click.option("--alpha", type=float, required=True)
@click.option("--zeta0", type=float, default=1.0, show_default=True)
@click.option("--zeta1", type=float, default=0.0, show_default=True)
@click.option("--dt", type=float, required=True)
@click.option("--t-final", type=float, required=True)
@click.pass_context
def oracle(ctx, n, ell, tau, alpha, zeta0, zeta1, dt, t_final):
    """Integrate the modal delay ODE as an independent reference.

    Writes modal.csv (t, y, ydot, energy); the delay-aligned (snapped) dt is
    recorded in the manifest.
    """
    try:
        request = sc.OracleRequest(n=n, ell=ell, tau=tau, alpha=alpha, zeta0=zeta0,
                                   zeta1=zeta1, dt=dt, t_final=t_final)
    except ValidationError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)

    def writer(resp: sc.OracleResponse, manifest: Manifest) -> Path:
        out = _out_dir(ctx.obj["out"])
        n_rows = _write_csv(out / "modal.csv", ["t", "y", "ydot", "energy"],
                            zip(resp.times, resp.y, resp.ydot, resp.energy))
        manifest.add_output(out / "modal.csv", n_rows)
        manifest.data["details"]["dt_snapped"] = resp.dt
        manifest.data["details"]["decay_fit"] = resp.decay_fit.model_dump()
        _echo(ctx, f"{n_rows} rows, dt snapped to {resp.dt:.9g} -> {out}")
        return out

    _run(ctx, "oracle", request, writer)


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
def serve(host, port):
    """Run the HTTP service that backs the other commands."""
    import uvicorn

    from .service.app import app

    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
