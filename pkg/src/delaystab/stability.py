"""Parameter-plane stabilization criterion, crossing frequencies, region chart.

For mode n on a string of length ell, the gain alpha and delay tau stabilize
the modal quasipolynomial exactly when, with k = floor(n*tau/ell) and
n*tau/ell not an integer,

    0 < (-1)^(k+1) * ell^2 * tau^2 * alpha
      < min{n^2 pi^2 tau^2 - k^2 ell^2 pi^2, (k+1)^2 ell^2 pi^2 - n^2 pi^2 tau^2}.

Under the scaling z = s*tau this is the classic lobe criterion for
z^2 + beta~ + alpha~ * e^(-z) with beta~ = tau^2 n^2 pi^2 / ell^2 and
alpha~ = tau^2 alpha; the region chart enumerates the right-half-plane root
count of that scaled quasipolynomial over a (beta~, alpha~) window.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .quasipoly import (BoundaryRootError, ModalQuasipolynomial, NonConvergence,
                        Rectangle, count_roots_perturbed, rhp_root_bound)

_PI2 = math.pi * math.pi
_RESONANCE_RTOL = 1e-12  # relative tolerance for the n*tau/ell integer test


@dataclass(frozen=True)
class ModeSpec:
    """Mode index n >= 1 on a string of dimensionless length ell > 0."""

    n: int
    ell: float

    def __post_init__(self):
        if not (isinstance(self.n, int) and self.n >= 1):
            raise ValueError(f"mode index must be an integer >= 1, got {self.n}")
        if not (math.isfinite(self.ell) and self.ell > 0):
            raise ValueError(f"ell must be finite and > 0, got {self.ell}")


@dataclass(frozen=True)
class ControlParams:
    """Delay tau > 0 and gain alpha != 0 of the delayed potential."""

    tau: float
    alpha: float

    def __post_init__(self):
        if not (math.isfinite(self.tau) and self.tau > 0):
            raise ValueError(f"tau must be finite and > 0, got {self.tau}")
        if not (math.isfinite(self.alpha) and self.alpha != 0):
            raise ValueError(f"alpha must be finite and nonzero, got {self.alpha}")


@dataclass(frozen=True)
class StabilityCertificate:
    """Result of the design test for one (mode, tau, alpha).

    k is floor(n*tau/ell) when that ratio is not a positive integer and None
    otherwise (resonant delay: no stabilizing gain exists, interval empty).
    alpha_interval is the open interval of stabilizing gains, None when empty.
    """

    k: int | None
    alpha_interval: tuple[float, float] | None
    satisfied: bool


@dataclass(frozen=True)
class CrossingData:
    """Imaginary-axis crossing frequencies and their critical delays.

    omega_plus = sqrt(beta + |alpha|) always exists; omega_minus =
    sqrt(beta - |alpha|) exists iff alpha^2 < beta^2. The delay lists hold
    the smallest positive delays at which Q(i*omega) = 0, in ascending order.
    """

    omega_plus: float
    omega_minus: float | None
    critical_delays_plus: tuple[float, ...] = ()
    critical_delays_minus: tuple[float, ...] = ()


@dataclass(frozen=True)
class RegionGrid:
    """Right-half-plane root counts over the scaled (beta~, alpha~) plane.

    counts[i, j] is the multiplicity-weighted RHP root count at
    (beta_tilde_axis[i], alpha_tilde_axis[j]); analytic_stable is the lobe
    criterion at the same points; valid flags cells where the winding count
    converged (boundary cells on the root-crossing locus may not).
    """

    beta_tilde_axis: np.ndarray
    alpha_tilde_axis: np.ndarray
    counts: np.ndarray
    analytic_stable: np.ndarray
    valid: np.ndarray


def k_index(mode: ModeSpec, tau: float) -> int | None:
    """floor(n*tau/ell), or None when n*tau/ell is a positive integer.

    At resonance (integer ratio) no admissible interval exists; the integer
    test uses relative tolerance 1e-12 so exact-resonance inputs are caught
    despite floating-point arithmetic.
    """
    if not tau > 0:
        raise ValueError("tau must be > 0")
    ratio = mode.n * tau / mode.ell
    nearest = round(ratio)
    if nearest >= 1 and abs(ratio - nearest) <= _RESONANCE_RTOL * max(1.0, ratio):
        return None
    return math.floor(ratio)


def admissible_alpha_interval(mode: ModeSpec, tau: float) -> tuple[float, float] | None:
    """Open interval of stabilizing gains for this mode and delay, or None.

    With k = k_index, m = min{n^2 pi^2 tau^2 - k^2 ell^2 pi^2,
    (k+1)^2 ell^2 pi^2 - n^2 pi^2 tau^2} (positive by construction of k), the
    interval is (0, m/(ell^2 tau^2)) for odd k and (-m/(ell^2 tau^2), 0) for
    even k, i.e. exactly the alpha with 0 < (-1)^(k+1) ell^2 tau^2 alpha < m.
    """
    k = k_index(mode, tau)
    if k is None:
        return None
    n2p2t2 = mode.n * mode.n * _PI2 * tau * tau
    ell2p2 = mode.ell * mode.ell * _PI2
    m = min(n2p2t2 - k * k * ell2p2, (k + 1) * (k + 1) * ell2p2 - n2p2t2)
    if m <= 0:  # only reachable within the resonance tolerance band
        return None
    hi = m / (mode.ell * mode.ell * tau * tau)
    return (0.0, hi) if k % 2 == 1 else (-hi, 0.0)


def check_stabilizing(mode: ModeSpec, params: ControlParams) -> StabilityCertificate:
    """Certificate stating whether (tau, alpha) stabilizes the given mode."""
    k = k_index(mode, params.tau)
    interval = admissible_alpha_interval(mode, params.tau)
    satisfied = interval is not None and interval[0] < params.alpha < interval[1]
    return StabilityCertificate(k=k, alpha_interval=interval, satisfied=satisfied)


def crossing_frequencies(beta: float, alpha: float) -> CrossingData:
    """Frequencies omega > 0 with Q(i*omega) = 0 for some delay.

    Solves the real quartic omega^4 - 2*beta*omega^2 - (alpha^2 - beta^2) = 0
    as a quadratic in omega^2, keeps the positive roots, and cross-checks them
    against the closed forms sqrt(beta +- |alpha|) to 1e-12 relative.
    """
    if not (math.isfinite(beta) and beta > 0):
        raise ValueError("beta must be > 0")
    if not (math.isfinite(alpha) and alpha != 0):
        raise ValueError("alpha must be nonzero")
    squares = np.roots([1.0, -2.0 * beta, -(alpha * alpha - beta * beta)])
    squares = sorted(float(x.real) for x in squares)
    scale = beta + abs(alpha)
    positive = [x for x in squares if x > 1e-12 * scale]
    omegas = sorted(math.sqrt(x) for x in positive)

    w_plus = math.sqrt(beta + abs(alpha))
    w_minus = math.sqrt(beta - abs(alpha)) if alpha * alpha < beta * beta else None
    expected = ([w_minus] if w_minus is not None else []) + [w_plus]
    if len(omegas) != len(expected) or any(
            abs(a - b) > 1e-12 * b for a, b in zip(omegas, expected)):
        raise NonConvergence(
            f"quartic roots {omegas} disagree with closed forms {expected}")
    return CrossingData(omega_plus=w_plus, omega_minus=w_minus)


def critical_delays(beta: float, alpha: float, max_count: int) -> CrossingData:
    """Crossing frequencies together with their first max_count critical delays.

    At a crossing frequency, e^(-i*omega*tau) = (omega^2 - beta)/alpha = +-1:
    the delays are 2*j*pi/omega (right side +1, j >= 1; tau = 0 is excluded)
    or (2*j+1)*pi/omega (right side -1, j >= 0), ascending.
    """
    if max_count < 1:
        raise ValueError("max_count must be >= 1")
    data = crossing_frequencies(beta, alpha)

    def delays(omega: float, phase_sign: float) -> tuple[float, ...]:
        if phase_sign > 0:
            return tuple(2.0 * j * math.pi / omega for j in range(1, max_count + 1))
        return tuple((2.0 * j + 1.0) * math.pi / omega for j in range(max_count))

    sign_alpha = 1.0 if alpha > 0 else -1.0
    plus = delays(data.omega_plus, sign_alpha)  # omega_+^2 - beta = +|alpha|
    minus = ()
    if data.omega_minus is not None:  # omega_-^2 - beta = -|alpha|
        minus = delays(data.omega_minus, -sign_alpha)
    return CrossingData(omega_plus=data.omega_plus, omega_minus=data.omega_minus,
                        critical_delays_plus=plus, critical_delays_minus=minus)


def scaled_stability_criterion(beta_tilde: float, alpha_tilde: float) -> tuple[bool, int | None]:
    """Lobe criterion for the scaled quasipolynomial z^2 + beta~ + alpha~ e^(-z).

    Tests 0 < (-1)^(k+1) alpha~ < min{beta~ - k^2 pi^2, (k+1)^2 pi^2 - beta~}
    over k = 0 .. ceil(sqrt(beta~)/pi) + 1; returns (holds, witness k).
    """
    if beta_tilde <= 0:
        return False, None
    k_max = math.ceil(math.sqrt(beta_tilde) / math.pi) + 1
    for k in range(k_max + 1):
        signed = alpha_tilde if k % 2 == 1 else -alpha_tilde
        bound = min(beta_tilde - k * k * _PI2, (k + 1) * (k + 1) * _PI2 - beta_tilde)
        if 0.0 < signed < bound:
            return True, k
    return False, None


def boundary_lines(beta_range: tuple[float, float], alpha_range: tuple[float, float],
                   samples_per_line: int = 128) -> list[tuple[str, int, int, float, float]]:
    """Sampled analytic boundary lines of the region chart within the window.

    Emits (family, k, sign, beta_tilde, alpha_tilde) rows for the two line
    families alpha~ = sign*(beta~ - k^2 pi^2) and
    alpha~ = sign*((k+1)^2 pi^2 - beta~), clipped to the window.
    """
    b_lo, b_hi = beta_range
    a_lo, a_hi = alpha_range
    k_max = math.ceil(math.sqrt(max(b_hi, 0.0)) / math.pi) + 1
    betas = np.linspace(b_lo, b_hi, samples_per_line)
    rows = []
    for k in range(k_max + 1):
        for sign in (1, -1):
            for family, values in (
                    ("beta_minus_k2pi2", sign * (betas - k * k * _PI2)),
                    ("k1sq_pi2_minus_beta", sign * ((k + 1) * (k + 1) * _PI2 - betas))):
                keep = (values >= a_lo) & (values <= a_hi)
                rows.extend((family, k, sign, float(b), float(a))
                            for b, a in zip(betas[keep], values[keep]))
    return rows


def distance_to_boundary(beta_tilde: float, alpha_tilde: float) -> float:
    """Euclidean distance to the nearest analytic boundary line.

    Lines considered: alpha~ = +-(beta~ - m^2 pi^2) for integer m (slope +-1,
    point distance |expr|/sqrt(2)) and the vertical pinch lines
    beta~ = m^2 pi^2. Used to exclude boundary-straddling cells from
    count-versus-criterion comparisons.
    """
    m_max = math.ceil(math.sqrt(max(beta_tilde, 0.0)) / math.pi) + 2
    d = abs(alpha_tilde)  # alpha~ = 0 axis (degenerate member of the locus)
    for m in range(m_max + 1):
        offset = beta_tilde - m * m * _PI2
        d = min(d, abs(alpha_tilde - offset) / math.sqrt(2.0),
                abs(alpha_tilde + offset) / math.sqrt(2.0), abs(offset))
    return d


def _region_cell(beta_tilde: float, alpha_tilde: float,
                 boundary_samples: int) -> tuple[int, bool]:
    """(count, valid) for one grid cell; invalid on persistent boundary roots."""
    q = ModalQuasipolynomial(beta=beta_tilde, alpha=alpha_tilde, tau=1.0)
    radius = rhp_root_bound(q)
    box = Rectangle(0.0, radius + 0.5, -radius - 0.5, radius + 0.5)
    try:
        count, _ = count_roots_perturbed(q, box, boundary_samples)
        return count, True
    except (BoundaryRootError, NonConvergence):
        return 0, False


def _region_row(args) -> list[tuple[int, bool]]:
    beta_tilde, alpha_axis, boundary_samples = args
    return [_region_cell(beta_tilde, a, boundary_samples) for a in alpha_axis]


def region_grid(beta_tilde_range: tuple[float, float],
                alpha_tilde_range: tuple[float, float], resolution: int, *,
                boundary_samples: int = 128, workers: int | None = None) -> RegionGrid:
    """RHP root counts and the analytic criterion on a resolution^2 cell grid.

    Axes are cell centers. Each cell's count is the argument-principle count
    over the right-half-plane bounding box of the scaled quasipolynomial
    (tau = 1, beta = beta~, alpha = alpha~); cells whose count cannot be
    certified (root-crossing locus) are flagged invalid rather than guessed.
    Cells are independent; pass workers > 1 to spread rows over processes.
    """
    if resolution < 8:
        raise ValueError("resolution must be >= 8")
    b_lo, b_hi = beta_tilde_range
    a_lo, a_hi = alpha_tilde_range
    if not (b_hi > b_lo and a_hi > a_lo):
        raise ValueError("parameter ranges must be nonempty")
    beta_axis = b_lo + (np.arange(resolution) + 0.5) * ((b_hi - b_lo) / resolution)
    alpha_axis = a_lo + (np.arange(resolution) + 0.5) * ((a_hi - a_lo) / resolution)

    jobs = [(float(b), alpha_axis, boundary_samples) for b in beta_axis]
    if workers is not None and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_region_row, jobs, chunksize=max(1, resolution // (4 * workers))))
    else:
        rows = [_region_row(job) for job in jobs]

    counts = np.array([[c for c, _ in row] for row in rows], dtype=int)
    valid = np.array([[v for _, v in row] for row in rows], dtype=bool)
    analytic = np.array([[scaled_stability_criterion(float(b), float(a))[0]
                          for a in alpha_axis] for b in beta_axis], dtype=bool)
    return RegionGrid(beta_tilde_axis=beta_axis, alpha_tilde_axis=alpha_axis,
                      counts=counts, analytic_stable=analytic, valid=valid)
