"""Modal characteristic quasipolynomial Q(s) = s^2 + beta + alpha*e^(-s*tau).

Roots of Q are the modal eigenvalues of the delayed wave equation. This module
evaluates Q, counts its roots inside rectangles by the argument principle,
locates and certifies them by damped Newton refinement, and computes the
spectral abscissa (rightmost root real part). Everything is plain float/complex
arithmetic on top of numpy; all functions are pure.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

# Default tolerances: comfortably above double-precision noise for the
# magnitudes involved here (|s| up to ~1e2, |Q| up to ~1e4).
ROOT_TOLERANCE = 1e-10
BOUNDARY_TOLERANCE = 1e-8
CLUSTER_RADIUS = 1e-7
ABSCISSA_TOLERANCE = 1e-6

_PERTURB_FACTOR = 1e-4  # outward shift per boundary-root retry, times diameter
_MAX_PERTURB_RETRIES = 5
_MAX_DENSITY_DOUBLINGS = 3
_NEWTON_MAX_ITER = 60
_NEWTON_MAX_HALVINGS = 20


class BoundaryRootError(RuntimeError):
    """A boundary sample of |Q| fell below the boundary tolerance.

    The winding number is then undefined; the caller must perturb the
    rectangle (see :func:`count_roots_perturbed`).
    """


class NonConvergence(RuntimeError):
    """An iterative procedure exhausted its budget without converging."""


class CertificationMismatch(RuntimeError):
    """Refined-root count disagrees with the winding count after retries.

    Signals multiple roots or insufficient seeding density. The roots found
    so far and the winding count are attached for callers that can proceed
    with partial information.
    """

    def __init__(self, message, roots=None, winding_count=None):
        super().__init__(message)
        self.roots = roots if roots is not None else []
        self.winding_count = winding_count


@dataclass(frozen=True)
class ModalQuasipolynomial:
    """Parameter triple (beta, alpha, tau) of one modal characteristic function.

    beta is the squared modal frequency n^2 pi^2 / ell^2 (> 0), alpha the
    potential gain, tau the delay (>= 0). alpha == 0 is permitted only for
    undelayed baseline checks.
    """

    beta: float
    alpha: float
    tau: float

    def __post_init__(self):
        if not (math.isfinite(self.beta) and self.beta > 0):
            raise ValueError(f"beta must be finite and > 0, got {self.beta}")
        if not math.isfinite(self.alpha):
            raise ValueError(f"alpha must be finite, got {self.alpha}")
        if not (math.isfinite(self.tau) and self.tau >= 0):
            raise ValueError(f"tau must be finite and >= 0, got {self.tau}")


@dataclass(frozen=True)
class Rectangle:
    """Axis-aligned open rectangle in the complex plane."""

    re_min: float
    re_max: float
    im_min: float
    im_max: float

    def __post_init__(self):
        if not (self.re_min < self.re_max and self.im_min < self.im_max):
            raise ValueError(f"degenerate rectangle {self}")

    @property
    def width(self) -> float:
        return self.re_max - self.re_min

    @property
    def height(self) -> float:
        return self.im_max - self.im_min

    @property
    def diameter(self) -> float:
        return math.hypot(self.width, self.height)

    def contains(self, s: complex, margin: float = 0.0) -> bool:
        return (self.re_min - margin < s.real < self.re_max + margin
                and self.im_min - margin < s.imag < self.im_max + margin)

    def expanded(self, delta: float) -> "Rectangle":
        """All four boundaries shifted outward by delta."""
        return Rectangle(self.re_min - delta, self.re_max + delta,
                         self.im_min - delta, self.im_max + delta)


@dataclass(frozen=True)
class Root:
    """A refined root of Q with its residual |Q(value)|.

    certified is set when the winding count of the enclosing rectangle equals
    the number of refined roots found in it (multiplicity 1 assumed).
    """

    value: complex
    residual: float
    certified: bool


def evaluate(q: ModalQuasipolynomial, s: complex) -> complex:
    """Q(s) = s^2 + beta + alpha * e^(-s*tau)."""
    s = complex(s)
    return s * s + q.beta + q.alpha * cmath.exp(-q.tau * s)


def evaluate_derivative(q: ModalQuasipolynomial, s: complex) -> complex:
    """Q'(s) = 2s - alpha * tau * e^(-s*tau)."""
    s = complex(s)
    return 2.0 * s - q.alpha * q.tau * cmath.exp(-q.tau * s)


def _evaluate_array(q: ModalQuasipolynomial, s: np.ndarray) -> np.ndarray:
    return s * s + q.beta + q.alpha * np.exp(-q.tau * s)


def rhp_root_bound(q: ModalQuasipolynomial) -> float:
    """Radius of a disk containing every root with nonnegative real part.

    For Re s >= 0, |s|^2 = |beta + alpha*e^(-s*tau)| <= beta + |alpha|, so
    all such roots lie in the closed disk of radius sqrt(beta + |alpha|).
    """
    return math.sqrt(q.beta + abs(q.alpha))


def strip_root_bound(q: ModalQuasipolynomial, re_lo: float) -> float:
    """Radius bound for roots with Re s >= re_lo (re_lo may be negative).

    |s|^2 <= beta + |alpha| * e^(-re_lo * tau) on that half-plane.
    """
    return math.sqrt(q.beta + abs(q.alpha) * math.exp(-re_lo * q.tau))


def _boundary_path(rect: Rectangle, n_samples: int, tau: float) -> np.ndarray:
    """Counterclockwise boundary samples; all four corners are included so
    midpoint refinement between consecutive samples stays on the boundary.

    Where e^(-s*tau) dominates Q, the phase rate along the boundary is tau per
    unit arc length; sample spacing is capped at pi/(3*tau) so a wrapped phase
    step can never hide a full turn from the refinement criterion (aliasing).
    """
    w, h = rect.width, rect.height
    per = 2.0 * (w + h)
    n_w = max(8, int(round(n_samples * w / per)))
    n_h = max(8, int(round(n_samples * h / per)))
    if tau > 0:
        n_w = max(n_w, int(math.ceil(w * 3.0 * tau / math.pi)))
        n_h = max(n_h, int(math.ceil(h * 3.0 * tau / math.pi)))
    bottom = rect.re_min + np.arange(n_w) * (w / n_w)
    right = rect.im_min + np.arange(n_h) * (h / n_h)
    top = rect.re_max - np.arange(n_w) * (w / n_w)
    left = rect.im_max - np.arange(n_h) * (h / n_h)
    return np.concatenate([
        bottom + 1j * rect.im_min,
        rect.re_max + 1j * right,
        top + 1j * rect.im_max,
        rect.re_min + 1j * left,
    ])


def count_roots_in_rectangle(q: ModalQuasipolynomial, rect: Rectangle,
                             boundary_samples: int = 256, *,
                             boundary_tolerance: float = BOUNDARY_TOLERANCE,
                             max_samples: int = 200_000) -> int:
    """Multiplicity-weighted number of roots strictly inside rect.

    Computed as the winding number of Q along the rectangle boundary by phase
    continuation: whenever the wrapped phase step between two consecutive
    samples exceeds pi/2, a midpoint sample is inserted, until all steps are
    resolved or the sample budget is exhausted.

    Raises BoundaryRootError when |Q| < boundary_tolerance at any sample
    (a root is on or numerically on the boundary), and NonConvergence when
    refinement exceeds max_samples or the accumulated phase fails to close
    on an integer multiple of 2*pi.
    """
    pts = _boundary_path(rect, boundary_samples, q.tau)
    if len(pts) > max_samples:
        raise NonConvergence(f"alias-safe sampling of {rect} needs {len(pts)} "
                             f"samples, budget is {max_samples}")
    vals = _evaluate_array(q, pts)
    if np.min(np.abs(vals)) < boundary_tolerance:
        raise BoundaryRootError(f"|Q| below {boundary_tolerance} on boundary of {rect}")
    while True:
        phase = np.angle(vals)
        steps = np.diff(np.concatenate([phase, phase[:1]]))
        steps = (steps + np.pi) % (2.0 * np.pi) - np.pi
        coarse = np.abs(steps) > 0.5 * np.pi
        if not coarse.any():
            turns = steps.sum() / (2.0 * np.pi)
            k = int(round(turns))
            if abs(turns - k) > 0.25:
                raise NonConvergence(f"phase continuation did not close: {turns} turns")
            return k
        if len(pts) > max_samples:
            raise NonConvergence(f"winding refinement exceeded {max_samples} samples")
        idx = np.nonzero(coarse)[0]
        mids = 0.5 * (pts[idx] + pts[(idx + 1) % len(pts)])
        mid_vals = _evaluate_array(q, mids)
        if np.min(np.abs(mid_vals)) < boundary_tolerance:
            raise BoundaryRootError(f"|Q| below {boundary_tolerance} on boundary of {rect}")
        pts = np.insert(pts, idx + 1, mids)
        vals = np.insert(vals, idx + 1, mid_vals)


def count_roots_perturbed(q: ModalQuasipolynomial, rect: Rectangle,
                          boundary_samples: int = 256, **kwargs) -> tuple[int, Rectangle]:
    """Count with the standard boundary-root retry policy.

    On BoundaryRootError the rectangle boundaries are shifted outward by
    1e-4 * diameter, at most 5 times. Returns (count, rectangle actually
    counted) so callers can keep seeding and counting consistent.
    """
    delta = _PERTURB_FACTOR * rect.diameter
    current = rect
    for attempt in range(_MAX_PERTURB_RETRIES + 1):
        try:
            return count_roots_in_rectangle(q, current, boundary_samples, **kwargs), current
        except BoundaryRootError:
            if attempt == _MAX_PERTURB_RETRIES:
                raise
            current = current.expanded(delta)
    raise AssertionError("unreachable")


def _grid_seeds(q: ModalQuasipolynomial, rect: Rectangle, density: int) -> np.ndarray:
    """Seed points: centers of grid cells where both Re Q and Im Q change sign.

    Sign-change cells of the two zero-level curves approximate their
    intersections, which are the roots.
    """
    re = np.linspace(rect.re_min, rect.re_max, density + 1)
    im = np.linspace(rect.im_min, rect.im_max, density + 1)
    grid = re[None, :] + 1j * im[:, None]
    vals = _evaluate_array(q, grid)

    def sign_change(part):
        c = np.stack([part[:-1, :-1], part[:-1, 1:], part[1:, :-1], part[1:, 1:]])
        return (c.max(axis=0) >= 0.0) & (c.min(axis=0) <= 0.0)

    cells = sign_change(vals.real) & sign_change(vals.imag)
    ii, jj = np.nonzero(cells)
    return 0.25 * (grid[ii, jj] + grid[ii, jj + 1] + grid[ii + 1, jj] + grid[ii + 1, jj + 1])


def _newton_refine(q: ModalQuasipolynomial, seed: complex,
                   root_tolerance: float) -> complex | None:
    """Damped Newton iteration; step is halved while |Q| fails to decrease.

    Returns the refined root or None when the budget runs out (spurious
    seeds are expected and simply dropped; certification catches real losses).
    """
    z = complex(seed)
    fz = abs(evaluate(q, z))
    for _ in range(_NEWTON_MAX_ITER):
        if fz <= root_tolerance:
            return z
        d = evaluate_derivative(q, z)
        if d == 0:  # stationary point: nudge off it
            z += root_tolerance * 1j + root_tolerance
            fz = abs(evaluate(q, z))
            continue
        step = evaluate(q, z) / d
        for _ in range(_NEWTON_MAX_HALVINGS):
            trial = z - step
            f_trial = abs(evaluate(q, trial))
            if f_trial < fz:
                break
            step *= 0.5
        else:
            return None
        z, fz = trial, f_trial
    return z if fz <= root_tolerance else None


def _cluster(points: list[complex], radius: float) -> list[complex]:
    merged: list[complex] = []
    for z in sorted(points, key=lambda w: (w.real, w.imag)):
        if not any(abs(z - w) <= radius for w in merged):
            merged.append(z)
    return merged


def find_roots(q: ModalQuasipolynomial, rect: Rectangle, grid_density: int = 64,
               root_tolerance: float = ROOT_TOLERANCE, *,
               boundary_samples: int = 256) -> list[Root]:
    """All roots of Q strictly inside rect, Newton-refined and winding-certified.

    Seeds are sign-change cells of the zero-level curves of Re Q and Im Q on a
    grid_density x grid_density grid; each seed is refined by damped Newton
    until |Q| <= root_tolerance, duplicates within the cluster radius are
    merged, and the count is certified against the argument-principle count.
    On a count mismatch the grid density is doubled (up to 3 times), after
    which CertificationMismatch is raised carrying the roots found and the
    winding count.

    Boundary-root rectangles are retried with the standard outward
    perturbation, so the returned roots refer to the (slightly) expanded
    rectangle in that case.
    """
    if grid_density < 16:
        raise ValueError("grid_density must be >= 16")
    winding, region = count_roots_perturbed(q, rect, boundary_samples)

    density = grid_density
    roots: list[complex] = []
    for attempt in range(_MAX_DENSITY_DOUBLINGS + 1):
        refined = []
        for seed in _grid_seeds(q, region, density):
            z = _newton_refine(q, seed, root_tolerance)
            if z is not None and region.contains(z):
                refined.append(z)
        roots = _cluster(refined, CLUSTER_RADIUS)
        if len(roots) == winding:
            return [Root(z, abs(evaluate(q, z)), certified=True) for z in roots]
        density *= 2
    found = [Root(z, abs(evaluate(q, z)), certified=False) for z in roots]
    raise CertificationMismatch(
        f"found {len(roots)} roots but winding count is {winding} in {region}",
        roots=found, winding_count=winding)


def spectral_abscissa(q: ModalQuasipolynomial,
                      abscissa_tolerance: float = ABSCISSA_TOLERANCE, *,
                      strip_width: float = 0.5, max_strips: int = 60,
                      grid_density: int = 48) -> float:
    """max{Re s : Q(s) = 0}, accurate to well within abscissa_tolerance.

    The right half-plane box from rhp_root_bound is checked first; if empty,
    vertical strips are swept leftward, each tall enough (strip_root_bound)
    to contain every root whose real part falls in it. The first nonempty
    strip contains the rightmost root, whose refined real part is returned;
    Newton residuals at ROOT_TOLERANCE locate it far more tightly than the
    requested tolerance. The retarded spectrum always has a rightmost root,
    so exhausting max_strips raises NonConvergence (a numerical failure,
    not absence).
    """
    regions = [Rectangle(0.0, rhp_root_bound(q) + 1.0, -rhp_root_bound(q) - 1.0,
                         rhp_root_bound(q) + 1.0)]
    x_hi = 0.0
    for _ in range(max_strips):
        x_lo = x_hi - strip_width
        bound = strip_root_bound(q, x_lo) + 1.0
        regions.append(Rectangle(x_lo, x_hi, -bound, bound))
        x_hi = x_lo

    for region in regions:
        count, counted = count_roots_perturbed(q, region)
        if count == 0:
            continue
        try:
            roots = find_roots(q, counted, grid_density)
        except CertificationMismatch as exc:
            # Multiple/clustered roots: the located ones still bound the
            # abscissa provided at least one representative was refined.
            if not exc.roots:
                raise
            roots = exc.roots
        best = max(roots, key=lambda r: r.value.real).value
        # Final polish at a much tighter residual: at a simple root the
        # position error is residual/|Q'|; at a double root it scales like
        # sqrt(residual/|Q''|), so 1e-13 keeps even that case inside the
        # default tolerance.
        polished = _newton_refine(q, best, 1e-13)
        return (polished if polished is not None else best).real
    raise NonConvergence(f"no root found in {max_strips} strips left of 0; "
                         "numerical failure for a retarded quasipolynomial")
