"""Service handlers: typed request model in, typed response model out.

These are plain functions so the CLI can call them in-process; the FastAPI
app in app.py exposes the same handlers over HTTP. Domain validation errors
surface as ValueError subclasses, numerical failures as RuntimeError
subclasses; the transport layers map those to exit codes / status codes.
"""

from __future__ import annotations

import math

import numpy as np

from .. import fdtd, modal, quasipoly, stability
from ..stability import ControlParams, ModeSpec
from . import schemas as sc


def analyze(req: sc.AnalyzeRequest) -> sc.AnalyzeResponse:
    """Locate the spectrum in a rectangle and compute the spectral abscissa.

    Default rectangle: [-3, rhp_bound] x [0, 3*rhp_bound] (roots come in
    conjugate pairs, so the lower half-plane is implied).
    """
    mode = ModeSpec(n=req.n, ell=req.ell)
    q = quasipoly.ModalQuasipolynomial(beta=modal.beta_of_mode(mode),
                                       alpha=req.alpha, tau=req.tau)
    bound = quasipoly.rhp_root_bound(q)
    if req.rect is not None:
        rect = quasipoly.Rectangle(req.rect.re_min, req.rect.re_max,
                                   req.rect.im_min, req.rect.im_max)
    else:
        rect = quasipoly.Rectangle(-3.0, bound, 0.0, 3.0 * bound)
    roots = quasipoly.find_roots(q, rect, req.grid_density)
    roots.sort(key=lambda r: (-r.value.real, r.value.imag))
    abscissa = quasipoly.spectral_abscissa(q)
    return sc.AnalyzeResponse(
        roots=[sc.SpectrumRoot(re=r.value.real, im=r.value.imag,
                               residual=r.residual, certified=r.certified)
               for r in roots],
        abscissa=abscissa, rhp_bound=bound)


def _design_row(mode: ModeSpec, tau: float) -> sc.DesignRow:
    k = stability.k_index(mode, tau)
    interval = stability.admissible_alpha_interval(mode, tau)
    if interval is None:
        return sc.DesignRow(tau=tau, k=k, alpha_lo=None, alpha_hi=None, is_empty=True)
    return sc.DesignRow(tau=tau, k=k, alpha_lo=interval[0], alpha_hi=interval[1],
                        is_empty=False)


def design(req: sc.DesignRequest) -> sc.DesignResponse:
    """Admissible-gain intervals over one delay or a swept delay range."""
    mode = ModeSpec(n=req.n, ell=req.ell)
    if req.tau is not None:
        taus = [req.tau]
    else:
        r = req.tau_range
        count = int(math.floor((r.stop - r.start) / r.step + 1e-9)) + 1
        taus = [r.start + i * r.step for i in range(count)]
    rows = [_design_row(mode, t) for t in taus]

    certificate = None
    if req.alpha is not None:
        cert = stability.check_stabilizing(mode, ControlParams(tau=req.tau, alpha=req.alpha))
        lo, hi = cert.alpha_interval if cert.alpha_interval else (None, None)
        certificate = sc.CertificateModel(k=cert.k, alpha_lo=lo, alpha_hi=hi,
                                          satisfied=cert.satisfied)
    return sc.DesignResponse(rows=rows, certificate=certificate)


def region(req: sc.RegionRequest) -> sc.RegionResponse:
    """Right-half-plane root counts over the scaled parameter plane."""
    grid = stability.region_grid(tuple(req.beta_range), tuple(req.alpha_range),
                                 req.resolution, workers=req.workers)
    boundaries = [sc.BoundaryLinePoint(family=f, k=k, sign=s, beta_tilde=b, alpha_tilde=a)
                  for f, k, s, b, a in
                  stability.boundary_lines(tuple(req.beta_range), tuple(req.alpha_range))]
    invalid = 1.0 - float(grid.valid.mean())
    return sc.RegionResponse(
        beta_axis=[float(b) for b in grid.beta_tilde_axis],
        alpha_axis=[float(a) for a in grid.alpha_tilde_axis],
        counts=grid.counts.tolist(),
        analytic_stable=grid.analytic_stable.tolist(),
        valid=grid.valid.tolist(),
        boundaries=boundaries,
        invalid_fraction=invalid)


def _fit_or_none(trace, window: tuple[float, float]) -> sc.DecayFitModel:
    """Peak fit over the window, widening to the whole trace if too few peaks;
    a trace too short for any fit reports rate None rather than failing."""
    for win in (window, (float(trace.times[0]), float(trace.times[-1]))):
        try:
            fit = modal.decay_rate_fit(trace, win)
            return sc.DecayFitModel(rate=fit.rate, r_squared=fit.r_squared,
                                    window_start=fit.window_start,
                                    window_end=fit.window_end, n_peaks=fit.n_peaks)
        except modal.InsufficientPeaks:
            continue
    return sc.DecayFitModel(rate=None, r_squared=None, window_start=window[0],
                            window_end=window[1], n_peaks=0)


def simulate(req: sc.RunConfigFile) -> sc.SimulateResponse:
    """Closed-loop (or uncontrolled) finite-difference run with energy traces.

    Initial data is the quasimode shape sin(n*pi*x/L) with unit amplitude and
    zero velocity on the simulation grid.
    """
    mode = ModeSpec(n=req.mode.n, ell=req.mode.ell)
    kwargs = dict(ell=req.mode.ell, tau=req.control.tau, alpha=req.control.alpha,
                  dx=req.discretization.dx, dt=req.discretization.dt,
                  t_final=req.discretization.t_final,
                  snap_dt=req.discretization.snap_dt)
    if req.physical is not None:
        kwargs.update(l=req.physical.l, c=req.physical.c)
    config = fdtd.make_config(**kwargs)

    grid = config.grid()
    shape = np.sin(mode.n * math.pi * grid / config.length)
    shape[0] = shape[-1] = 0.0
    u0, u1 = shape, np.zeros_like(shape)

    trace, snaps, _ = fdtd.run(config, u0, u1,
                               snapshot_times=req.outputs.snapshot_times,
                               energy_stride=req.outputs.energy_stride)

    window = (min(2.0 * config.tau_eff, 0.5 * config.t_final), config.t_final)
    fit = _fit_or_none(trace, window)
    try:
        sel = trace.times >= window[0]
        dominant = modal.dominant_decay_rate(trace.times[sel], trace.field_energy[sel],
                                             rate_cap=1.0)
    except ValueError:
        dominant = None

    return sc.SimulateResponse(
        times=trace.times.tolist(),
        field_energy=trace.field_energy.tolist(),
        weighted_energy=trace.weighted_energy.tolist(),
        snapshots=sc.SnapshotsModel(times=snaps.times.tolist(), x=grid.tolist(),
                                    frames=snaps.frames.tolist()),
        decay_fit=fit,
        dominant_energy_rate=dominant,
        time_scale=config.time_scale,
        delay_steps=config.delay_steps,
        delay_rounding=config.delay_rounding,
        courant=config.courant,
        dt=config.dt)


def oracle(req: sc.OracleRequest) -> sc.OracleResponse:
    """Modal delay-ODE reference trace with zero pre-history."""
    mode = ModeSpec(n=req.n, ell=req.ell)
    beta = modal.beta_of_mode(mode)
    trace = modal.dde_integrate(beta, req.alpha, req.tau, req.zeta0, req.zeta1,
                                modal.HistoryFunction.zero(), req.dt, req.t_final)
    energy = modal.modal_energy(trace.y, trace.ydot, beta, mode.ell)
    window = (0.5 * float(trace.times[-1]), float(trace.times[-1]))
    fit = _fit_or_none(trace, window)
    return sc.OracleResponse(dt=trace.dt, times=trace.times.tolist(),
                             y=trace.y.tolist(), ydot=trace.ydot.tolist(),
                             energy=np.asarray(energy).tolist(), decay_fit=fit)
