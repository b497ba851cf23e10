"""Reflection machinery for closed curves on the 2-sphere.

The sphere sits in R^3 with distinguished pole e = (0, 0, 1).  A curve
stored as a radial graph rho(theta) about e is also a height graph
f = pi/2 - rho over the equator.  For a unit vector V the linear map

    R_V(x) = x - 2 <x, V> V

reflects across the hyperplane V-perp; delta_V = arcsin<V, -e> is the
signed angle V makes with the equatorial plane.  `one_sided_reflects`
compares the reflected upper half-graph against the lower half-graph on
the overlap of their projections; `alpha_threshold` probes how large a
C^1 perturbation of the equator can get before that comparison fails.

Height comparisons evaluate the original graph at the azimuths of the
reflected nodes through trigonometric interpolation, which is spectrally
accurate for the smooth graphs produced by the solvers.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import PoleMarginError
from .fourier import periodic_grid, trig_interpolate, wrap_signed

E_POLE = np.array([0.0, 0.0, 1.0])
DEFAULT_MARGIN_EPS = 1e-10
DEFAULT_N_DELTA = 64
DEFAULT_N_AZIMUTH = 32


def reflection_vector(delta, azimuth=0.0):
    """Unit vector V with arcsin<V, -e> = delta and the given equatorial azimuth."""
    return np.array([np.cos(delta) * np.cos(azimuth),
                     np.cos(delta) * np.sin(azimuth),
                     -np.sin(delta)])


def reflect_points(points, V):
    return points - 2.0 * (points @ V)[:, None] * V


def embed_graph(theta, rho):
    """Points (sin rho cos theta, sin rho sin theta, cos rho) on the unit sphere."""
    s = np.sin(rho)
    return np.column_stack([s * np.cos(theta), s * np.sin(theta), np.cos(rho)])


@dataclass
class ReflectionSetup:
    """A curve paired with a reflection vector; caches the embedding."""

    curve: object  # anything with .theta and .rho
    V: np.ndarray

    def __post_init__(self):
        self.V = np.asarray(self.V, dtype=float)
        self.V = self.V / np.linalg.norm(self.V)
        self.delta_V = float(np.arcsin(np.clip(-self.V[2], -1.0, 1.0)))
        self.points = embed_graph(self.curve.theta, self.curve.rho)
        self.f_M = np.pi / 2 - self.curve.rho

    @classmethod
    def from_angles(cls, curve, delta, azimuth=0.0):
        return cls(curve=curve, V=reflection_vector(delta, azimuth))


@dataclass
class ReflectedGraph:
    star_shaped: bool
    reason: str
    theta: Optional[np.ndarray] = None
    f: Optional[np.ndarray] = None
    pole_clearance: float = np.nan


def reflect_graph(setup, pole_tol=1e-12):
    """Reflect the curve and test star-shapedness about the pole.

    Star-shapedness of the image asks that (i) no image point hits a pole,
    (ii) the image azimuths wind monotonically exactly once, and (iii) the
    reflected enclosed region still contains the pole e (the reflected
    image of the pole must stay inside the original graph).  When all hold
    the reflected height graph is returned resampled onto the standard
    angular grid.
    """
    y = reflect_points(setup.points, setup.V)
    heights = y[:, 2]
    clearance = float(1.0 - np.abs(heights).max())
    if clearance < pole_tol:
        return ReflectedGraph(False, "pole_hit", pole_clearance=clearance)
    beta = np.arctan2(y[:, 1], y[:, 0])
    dbeta = wrap_signed(np.diff(np.concatenate([beta, beta[:1]])))
    if not (np.all(dbeta > 0) or np.all(dbeta < 0)):
        return ReflectedGraph(False, "azimuth_not_monotone", pole_clearance=clearance)
    if abs(abs(dbeta.sum()) - 2.0 * np.pi) > 1e-9:
        return ReflectedGraph(False, "winding", pole_clearance=clearance)

    # pole-side test: R_V(e) must lie inside the original enclosed region
    w = E_POLE - 2.0 * (E_POLE @ setup.V) * setup.V
    rho_w = float(np.arccos(np.clip(w[2], -1.0, 1.0)))
    az_w = float(np.arctan2(w[1], w[0]))
    rho_at = float(trig_interpolate(setup.curve.rho, np.array([az_w]))[0])
    if rho_w >= rho_at:
        return ReflectedGraph(False, "pole_outside", pole_clearance=clearance)

    order = np.argsort(np.mod(beta, 2.0 * np.pi))
    bs = np.mod(beta, 2.0 * np.pi)[order]
    hs = np.arcsin(np.clip(heights, -1.0, 1.0))[order]
    grid = periodic_grid(setup.points.shape[0])
    bs_ext = np.concatenate([bs[-1:] - 2.0 * np.pi, bs, bs[:1] + 2.0 * np.pi])
    hs_ext = np.concatenate([hs[-1:], hs, hs[:1]])
    f_res = np.interp(grid, bs_ext, hs_ext)
    return ReflectedGraph(True, "ok", theta=grid, f=f_res, pole_clearance=clearance)


@dataclass
class OneSidedResult:
    verdict: bool
    min_margin: float
    n_compared: int
    vacuous: bool


def one_sided_reflects(setup, eps_margin=DEFAULT_MARGIN_EPS):
    """Does the reflected upper half-graph dominate the lower half-graph?

    For every node of the curve strictly on the positive side of V-perp,
    its reflection is compared at the same azimuth against the original
    graph, counting only azimuths whose original point lies strictly on
    the negative side.  Verdict is true when the minimum signed margin
    stays above -eps_margin.  Empty overlap is vacuously true and flagged.
    """
    side = setup.points @ setup.V
    upper = side > 0.0
    if not upper.any():
        return OneSidedResult(True, np.inf, 0, True)
    y = reflect_points(setup.points[upper], setup.V)
    beta = np.arctan2(y[:, 1], y[:, 0])
    h_reflected = np.arcsin(np.clip(y[:, 2], -1.0, 1.0))

    rho_at = trig_interpolate(setup.curve.rho, beta)
    target = embed_graph(beta, rho_at)
    in_lower = (target @ setup.V) < 0.0
    if not in_lower.any():
        return OneSidedResult(True, np.inf, 0, True)
    margins = h_reflected[in_lower] - (np.pi / 2 - rho_at[in_lower])
    min_margin = float(margins.min())
    return OneSidedResult(min_margin >= -eps_margin, min_margin,
                          int(in_lower.sum()), False)


def _delta_grid(delta1, delta0, n):
    return np.linspace(delta1, delta0, n)


def sweep_one_sided(curve, delta1, delta0, n_delta=DEFAULT_N_DELTA,
                    n_azimuth=DEFAULT_N_AZIMUTH, eps_margin=DEFAULT_MARGIN_EPS,
                    require_star=True):
    """Minimum one-sided margin of `curve` over a grid of reflection vectors.

    Returns (all_pass, min_margin, worst) where worst identifies the
    (delta, azimuth) attaining the minimum.  Vacuous comparisons are
    skipped.  With require_star, a non-star-shaped reflection fails the
    sweep outright.
    """
    worst = {"delta": None, "azimuth": None}
    min_margin = np.inf
    all_pass = True
    for az in np.linspace(0.0, 2.0 * np.pi, n_azimuth, endpoint=False):
        for delta in _delta_grid(delta1, delta0, n_delta):
            setup = ReflectionSetup.from_angles(curve, delta, az)
            if require_star and not reflect_graph(setup).star_shaped:
                return False, -np.inf, {"delta": delta, "azimuth": az,
                                        "failure": "not_star_shaped"}
            res = one_sided_reflects(setup, eps_margin=eps_margin)
            if res.vacuous:
                continue
            if res.min_margin < min_margin:
                min_margin = res.min_margin
                worst = {"delta": float(delta), "azimuth": float(az)}
            if not res.verdict:
                all_pass = False
    return all_pass, float(min_margin), worst


def single_mode_generator(n=128, mode=1):
    """Height perturbations f = A (1 + cos(mode * theta)) / 2 of the equator.

    Nonnegative by construction; for mode 1 the resulting curve stays
    convex for small amplitudes.  The azimuth degree of freedom is covered
    by sweeping the reflection vector instead of rotating the curve.
    """
    from .curve_flow import RadialCurve

    theta = periodic_grid(n)

    def make(amplitude):
        f = amplitude * (1.0 + np.cos(mode * theta)) / 2.0
        return RadialCurve(np.pi / 2 - f)

    return make


def c1_norm_of_height(curve):
    """Discrete C^1 norm of the height graph f = pi/2 - rho."""
    f = np.pi / 2 - curve.rho
    return float(np.abs(f).max() + np.abs(curve.rho_theta).max())


@dataclass
class AlphaResult:
    alpha: float
    amplitude: float
    delta0: float
    delta1: float
    bounded_by_generator: bool


def alpha_threshold(delta0, delta1, generator=None, n_delta=DEFAULT_N_DELTA,
                    n_azimuth=DEFAULT_N_AZIMUTH, amp_cap=1.2, bisect_iters=24,
                    eps_margin=DEFAULT_MARGIN_EPS):
    """Empirical largest C^1 bound under which one-sided reflection holds.

    Bisects over the generator amplitude: a perturbation passes when every
    sampled V with delta_V in [delta1, delta0] yields a star-shaped
    reflection and a nonnegative one-sided margin.  Returns the C^1 norm of
    the largest passing perturbation (positive whenever any amplitude
    passes).
    """
    if not (0.0 < delta1 <= delta0 < np.pi / 4):
        raise ValueError("need 0 < delta1 <= delta0 < pi/4")
    if generator is None:
        generator = single_mode_generator()

    def passes(amp):
        curve = generator(amp)
        ok, _, _ = sweep_one_sided(curve, delta1, delta0, n_delta=n_delta,
                                   n_azimuth=n_azimuth, eps_margin=eps_margin)
        return ok

    lo = 0.0
    hi = 0.02
    while hi <= amp_cap and passes(hi):
        lo = hi
        hi *= 2.0
    if hi > amp_cap:
        curve = generator(lo)
        return AlphaResult(alpha=c1_norm_of_height(curve), amplitude=lo,
                           delta0=delta0, delta1=delta1, bounded_by_generator=True)
    for _ in range(bisect_iters):
        mid = 0.5 * (lo + hi)
        if passes(mid):
            lo = mid
        else:
            hi = mid
    curve = generator(lo)
    return AlphaResult(alpha=c1_norm_of_height(curve), amplitude=lo,
                       delta0=delta0, delta1=delta1, bounded_by_generator=False)


@dataclass
class RoundnessReport:
    rho_spread: float
    c1_norm: float
    best_fit_sphere_residual: float
    best_fit_radius: float
    best_fit_center_offset: float


def roundness(state):
    """How close a star-shaped graph is to a geodesic sphere.

    Works for curves (graphs over theta) and for axisymmetric profiles
    (graphs over psi; pass the profile view).  The best-fit sphere's center
    is optimized along the axis through the pole and the mass centroid of
    the embedded nodes; the residual is half the spread of geodesic
    distances to that center.
    """
    theta = state.theta
    rho = state.rho
    pts = embed_graph(theta, rho)
    spread = float(rho.max() - rho.min())
    f = np.pi / 2 - rho
    c1 = float(np.abs(f).max() + np.abs(state.rho_theta).max())

    centroid = pts.mean(axis=0)
    horiz = np.linalg.norm(centroid[:2])
    az = np.arctan2(centroid[1], centroid[0]) if horiz > 1e-14 else 0.0
    axis = np.array([np.cos(az), np.sin(az), 0.0])

    def half_spread(dd):
        center = np.cos(dd) * E_POLE + np.sin(dd) * axis
        dist = np.arccos(np.clip(pts @ center, -1.0, 1.0))
        return 0.5 * (dist.max() - dist.min())

    res = minimize_scalar(half_spread, bounds=(-1.5, 1.5), method="bounded",
                          options={"xatol": 1e-12})
    dd = float(res.x)
    center = np.cos(dd) * E_POLE + np.sin(dd) * axis
    dist = np.arccos(np.clip(pts @ center, -1.0, 1.0))
    return RoundnessReport(
        rho_spread=spread,
        c1_norm=c1,
        best_fit_sphere_residual=float(0.5 * (dist.max() - dist.min())),
        best_fit_radius=float(dist.mean()),
        best_fit_center_offset=dd,
    )


def margin_monitor(record, delta_max=np.pi / 8, n_delta=16, n_azimuth=8,
                   require_nonnegative_height=True):
    """Minimum one-sided margin over a run's snapshots and a V-grid.

    Snapshots whose height graph dips below zero are skipped when
    require_nonnegative_height is set (the comparison is only meaningful
    for graphs on one side of the equator).  Vacuous comparisons (late,
    small curves entirely on one side of V-perp) are skipped.
    """
    from .curve_flow import RadialCurve

    overall = np.inf
    worst = None
    checked = 0
    for snap in record.snapshots:
        curve = RadialCurve(snap["rho"], t=float(snap["t"]))
        if require_nonnegative_height and (np.pi / 2 - curve.rho).min() < -1e-12:
            continue
        for az in np.linspace(0.0, 2.0 * np.pi, n_azimuth, endpoint=False):
            for delta in np.linspace(delta_max / n_delta, delta_max, n_delta):
                res = one_sided_reflects(ReflectionSetup.from_angles(curve, delta, az))
                if res.vacuous:
                    continue
                checked += 1
                if res.min_margin < overall:
                    overall = res.min_margin
                    worst = {"t": float(snap["t"]), "delta": float(delta),
                             "azimuth": float(az)}
    return {"min_margin": float(overall), "comparisons": checked, "worst": worst}
