"""Explicit finite-difference simulation of the delayed wave equation.

Solves u_tt - c^2 u_xx = -alpha_eff * u(x, t - tau_eff) on (0, length) with
homogeneous Dirichlet ends, zero pre-history for the delayed term, a leapfrog
interior update, and a ring buffer holding the last M+1 displacement frames
(M = delay steps) so the delayed field costs O(1) per step.

Physical string runs (length l, speed c) are mapped onto the dimensionless
analysis through t_phys = d * t_dimensionless with d = l/(c*ell): the delay
becomes d*tau and the gain alpha/d^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class CflViolation(ValueError):
    """Courant number c*dt/dx exceeds 1: the explicit scheme is unstable."""


class DelayTooSmall(ValueError):
    """Effective delay is below one time step."""


class ShapeMismatch(ValueError):
    """Initial field arrays have the wrong length or violate the Dirichlet ends."""


class HistoryIncomplete(ValueError):
    """Ring buffer does not yet span the full delay window."""


class NumericalBlowUp(RuntimeError):
    """Displacement magnitude exceeded the blow-up guard."""


BLOWUP_GUARD = 1e6


@dataclass(frozen=True)
class SimConfig:
    """Discretization and effective parameters of one simulation.

    alpha_eff and tau_eff are in simulation units (alpha/d^2 and d*tau for a
    physical run; alpha and tau verbatim for a dimensionless one).
    energy_weight is the history weight xi in the weighted energy, defaulting
    to 2*|alpha_eff|*tau_eff. time_scale is d (1 for dimensionless runs).
    """

    length: float
    wave_speed: float
    alpha_eff: float
    tau_eff: float
    dx: float
    dt: float
    t_final: float
    energy_weight: float
    time_scale: float = 1.0

    @property
    def nx(self) -> int:
        return int(round(self.length / self.dx))

    @property
    def courant(self) -> float:
        return self.wave_speed * self.dt / self.dx

    @property
    def delay_steps(self) -> int:
        return int(round(self.tau_eff / self.dt))

    @property
    def delay_rounding(self) -> float:
        """|tau_eff - M*dt|: delay discretization error, zero when dt is snapped."""
        return abs(self.tau_eff - self.delay_steps * self.dt)

    @property
    def n_steps(self) -> int:
        return int(round(self.t_final / self.dt))

    def grid(self) -> np.ndarray:
        return np.linspace(0.0, self.length, self.nx + 1)


def make_config(*, ell: float, tau: float, alpha: float, dx: float, dt: float,
                t_final: float, l: float | None = None, c: float | None = None,
                energy_weight: float | None = None, snap_dt: bool = False) -> SimConfig:
    """Build and validate a SimConfig.

    Dimensionless mode (l, c omitted): domain length ell, unit speed,
    parameters pass through. Physical mode (both l and c given): domain
    length l, speed c, d = l/(c*ell), tau_eff = d*tau, alpha_eff = alpha/d^2.
    snap_dt lowers dt so the delay is an exact multiple of it (used by the
    oracle-equivalence tests); otherwise M = round(tau_eff/dt) and the
    rounding error is reported by the config.
    """
    if (l is None) != (c is None):
        raise ValueError("physical mode needs both l and c")
    for name, value in (("ell", ell), ("tau", tau), ("dx", dx), ("dt", dt),
                        ("t_final", t_final)):
        if not (math.isfinite(value) and value > 0):
            raise ValueError(f"{name} must be finite and > 0, got {value}")
    if not math.isfinite(alpha):
        raise ValueError("alpha must be finite")

    if l is not None:
        d = l / (c * ell)
        length, speed = l, c
        tau_eff, alpha_eff = d * tau, alpha / (d * d)
    else:
        d = 1.0
        length, speed = ell, 1.0
        tau_eff, alpha_eff = tau, alpha

    nx = round(length / dx)
    if nx < 4 or abs(nx * dx - length) > 1e-9 * length:
        raise ValueError(f"dx={dx} must divide the domain length {length} (nx >= 4)")
    if tau_eff < dt:
        raise DelayTooSmall(f"effective delay {tau_eff} is below dt={dt}")
    if snap_dt:
        dt = tau_eff / math.ceil(tau_eff / dt - 1e-12)
    if speed * dt / dx > 1.0 + 1e-12:
        raise CflViolation(f"Courant number {speed * dt / dx:.6g} exceeds 1")
    if energy_weight is None:
        energy_weight = 2.0 * abs(alpha_eff) * tau_eff
    elif energy_weight < 0:
        raise ValueError("energy_weight must be >= 0")
    return SimConfig(length=length, wave_speed=speed, alpha_eff=alpha_eff,
                     tau_eff=tau_eff, dx=dx, dt=dt, t_final=t_final,
                     energy_weight=energy_weight, time_scale=d)


@dataclass
class DelayedWaveState:
    """Current frames plus the delay ring buffer.

    ring[m % (M+1)] holds the displacement at step m for the most recent M+1
    steps; u_curr/u_prev view the two newest slots. u_prev2 is one extra
    stored frame (step-2) kept so the energy can use a centered time
    difference. Boundary entries are exactly zero at every step.
    """

    ring: np.ndarray
    step: int
    u_prev2: np.ndarray | None = None

    @property
    def u_curr(self) -> np.ndarray:
        return self.ring[self.step % self.ring.shape[0]]

    @property
    def u_prev(self) -> np.ndarray:
        return self.ring[(self.step - 1) % self.ring.shape[0]]


def init_state(config: SimConfig, u0, u1) -> DelayedWaveState:
    """State holding u at steps 0 and 1 from the initial displacement/velocity.

    The first step is the second-order Taylor start
    u^1 = u^0 + dt*u1 + (dt^2/2) * (c^2 D2 u^0 - alpha_eff * h) with h the
    (zero) delayed field, preserving second-order accuracy from step one.
    The ring starts zero-filled, which is exactly the zero pre-history.
    """
    u0 = np.asarray(u0, dtype=float)
    u1 = np.asarray(u1, dtype=float)
    n = config.nx + 1
    if u0.shape != (n,) or u1.shape != (n,):
        raise ShapeMismatch(f"initial fields must have shape ({n},)")
    if u0[0] != 0.0 or u0[-1] != 0.0 or u1[0] != 0.0 or u1[-1] != 0.0:
        raise ShapeMismatch("Dirichlet ends require zero initial values at x=0, L")

    m = config.delay_steps
    ring = np.zeros((m + 1, n))
    ring[0] = u0
    c2 = (config.wave_speed * config.dt / config.dx) ** 2
    first = u0.copy()
    first[1:-1] = (u0[1:-1] + config.dt * u1[1:-1]
                   + 0.5 * c2 * (u0[2:] - 2.0 * u0[1:-1] + u0[:-2]))
    first[0] = first[-1] = 0.0
    ring[1 % (m + 1)] = first
    return DelayedWaveState(ring=ring, step=1)


def step(state: DelayedWaveState, config: SimConfig) -> DelayedWaveState:
    """Advance one time step in place (and return the state).

    Interior: u^(m+1) = 2u^m - u^(m-1) + (c dt/dx)^2 D2 u^m
                        - dt^2 * alpha_eff * u^(m-M), boundaries forced to 0.
    The delayed frame is read from the ring slot about to be overwritten,
    which is exactly frame m-M (or the zero pre-history while m < M).
    """
    m = state.step
    slots = state.ring.shape[0]
    u_curr = state.ring[m % slots]
    u_prev = state.ring[(m - 1) % slots]
    delayed = state.ring[(m + 1) % slots]  # frame m - M; zero until written
    c2 = (config.wave_speed * config.dt / config.dx) ** 2
    coupling = config.dt * config.dt * config.alpha_eff

    u_next = np.empty_like(u_curr)
    u_next[0] = u_next[-1] = 0.0
    u_next[1:-1] = (2.0 * u_curr[1:-1] - u_prev[1:-1]
                    + c2 * (u_curr[2:] - 2.0 * u_curr[1:-1] + u_curr[:-2])
                    - coupling * delayed[1:-1])
    state.u_prev2 = u_prev.copy()  # survives ring rotation even when M = 1
    state.ring[(m + 1) % slots] = u_next
    state.step = m + 1
    return state


def _energy_from_fields(u_t: np.ndarray, u_spatial: np.ndarray, config: SimConfig) -> float:
    """(1/2) integral of u_t^2 + c^2 u_x^2: trapezoid for u_t^2 on the nodes,
    forward differences averaged to cell centers (midpoint rule) for u_x^2."""
    ux = np.diff(u_spatial) / config.dx
    kinetic = np.trapezoid(u_t * u_t, dx=config.dx)
    elastic = config.wave_speed**2 * np.sum(ux * ux) * config.dx
    return 0.5 * float(kinetic + elastic)


def field_energy(state: DelayedWaveState, config: SimConfig) -> float:
    """Discrete field energy of the state.

    u_t is the centered difference (u^(m+1) - u^(m-1)) / (2 dt) evaluated at
    the previous step's time (the extra stored frame makes this possible);
    right after init only the one-sided difference at the first step exists.
    """
    if state.u_prev2 is None:
        u_t = (state.u_curr - state.u_prev) / config.dt
        return _energy_from_fields(u_t, state.u_curr, config)
    u_t = (state.u_curr - state.u_prev2) / (2.0 * config.dt)
    return _energy_from_fields(u_t, state.u_prev, config)


def _slot_square_integrals(state: DelayedWaveState, config: SimConfig) -> np.ndarray:
    return np.trapezoid(state.ring * state.ring, dx=config.dx, axis=1)


def _history_square_integral(state: DelayedWaveState, config: SimConfig,
                             slot_integrals: np.ndarray | None = None) -> float:
    """Trapezoid over rho in [0,1] of the x-integral of u(x, t - tau*rho)^2.

    rho = j/M maps to frame step-j, i.e. ring slot (step-j) mod (M+1); slots
    not yet written still hold the zero pre-history, so the slot contents are
    the delayed fields verbatim. Evaluated at the newest frame's time.
    """
    m = config.delay_steps
    if slot_integrals is None:
        slot_integrals = _slot_square_integrals(state, config)
    order = (state.step - np.arange(m + 1)) % (m + 1)
    return float(np.trapezoid(slot_integrals[order], dx=1.0 / m))


def weighted_energy(state: DelayedWaveState, config: SimConfig) -> float:
    """Field energy plus the history term (xi/2) * double integral of z^2.

    Requires the ring to span the full delay window (step >= M). The history
    term is evaluated at the newest frame; the field part is centered one
    step earlier, an O(dt) offset that does not affect decay rates.
    """
    if state.step < config.delay_steps:
        raise HistoryIncomplete(
            f"step {state.step} < delay steps {config.delay_steps}")
    return field_energy(state, config) + 0.5 * config.energy_weight * \
        _history_square_integral(state, config)


@dataclass(frozen=True)
class EnergyTrace:
    """Sampled field and weighted energies; times refer to the field part."""

    times: np.ndarray
    field_energy: np.ndarray
    weighted_energy: np.ndarray
    sample_stride: int


@dataclass(frozen=True)
class SnapshotSet:
    """Displacement frames at (step-snapped) requested times."""

    times: np.ndarray
    frames: np.ndarray  # (len(times), nx+1)


def run(config: SimConfig, u0, u1, snapshot_times=(), energy_stride: int = 1,
        ) -> tuple[EnergyTrace, SnapshotSet, DelayedWaveState]:
    """Advance to t_final recording energies and snapshots.

    Energy rows are written every energy_stride steps; the t = 0 row uses the
    given initial velocity directly (exact), later rows the centered
    difference. Snapshot times snap to the nearest step. Raises
    NumericalBlowUp when max|u| exceeds the guard (unstable parameters).
    """
    if energy_stride < 1:
        raise ValueError("energy_stride must be >= 1")
    state = init_state(config, u0, u1)
    u0 = np.asarray(u0, dtype=float)
    u1 = np.asarray(u1, dtype=float)
    m = config.delay_steps
    slots = m + 1

    snap_steps = sorted({min(config.n_steps, max(0, int(round(t / config.dt))))
                         for t in snapshot_times})
    snap_frames: list[np.ndarray] = []
    snap_times: list[float] = []
    for s in [s for s in snap_steps if s <= 1]:
        snap_times.append(s * config.dt)
        snap_frames.append(u0.copy() if s == 0 else state.u_curr.copy())
    snap_remaining = {s for s in snap_steps if s > 1}

    # Running x-integrals of the squared ring frames, one update per step,
    # keep the weighted-energy sampling O(M) instead of O(M * nx).
    slot_sq = np.zeros(slots)
    slot_sq[0] = np.trapezoid(u0 * u0, dx=config.dx)
    slot_sq[1 % slots] = np.trapezoid(state.u_curr * state.u_curr, dx=config.dx)

    e_times = [0.0]
    e_field = [_energy_from_fields(u1, u0, config)]
    # At t = 0 only the rho = 0 endpoint of the history integral is nonzero.
    hist0 = float(np.trapezoid(np.concatenate([[slot_sq[0]], np.zeros(m)]), dx=1.0 / m))
    e_weighted = [e_field[0] + 0.5 * config.energy_weight * hist0]

    while state.step < config.n_steps:
        step(state, config)
        f = state.step
        u_new = state.u_curr
        if np.max(np.abs(u_new)) > BLOWUP_GUARD:
            raise NumericalBlowUp(f"|u| exceeded {BLOWUP_GUARD:g} at step {f}")
        slot_sq[f % slots] = np.trapezoid(u_new * u_new, dx=config.dx)
        if f > 1 and (f - 1) % energy_stride == 0:
            e_times.append((f - 1) * config.dt)
            e_field.append(field_energy(state, config))
            order = (f - np.arange(slots)) % slots
            hist = float(np.trapezoid(slot_sq[order], dx=1.0 / m))
            e_weighted.append(e_field[-1] + 0.5 * config.energy_weight * hist)
        if f in snap_remaining:
            snap_times.append(f * config.dt)
            snap_frames.append(u_new.copy())

    trace = EnergyTrace(times=np.array(e_times), field_energy=np.array(e_field),
                        weighted_energy=np.array(e_weighted),
                        sample_stride=energy_stride)
    snaps = SnapshotSet(times=np.array(snap_times),
                        frames=np.array(snap_frames) if snap_frames
                        else np.empty((0, config.nx + 1)))
    return trace, snaps, state
