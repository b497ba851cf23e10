"""Closed convex curves on the 2-sphere as periodic radial graphs.

A curve is stored as radii rho(theta) about a fixed pole on a uniform
periodic grid.  Its geodesic curvature is

    kappa = (-rho'' sin(rho) + 2 rho'^2 cos(rho) + cos(rho) sin^2(rho))
            / (sin^2(rho) + rho'^2)^(3/2),

positive for convex curves around the pole (a centered circle of radius
rho0 has kappa = cot rho0).  Three evolutions are supported:

* geometric(F):      d rho/dt = -F(kappa) * v,
* angenent_oval:     d rho/dt = -kappa * v * (sin^2 rho + rho'^2)
                                 / (tan^2 rho + (tan rho)'^2),
* ellipse:           d (tan rho)/dt = -kappa^(1/3) * v,

with the graph factor v = sqrt(sin^2 rho + rho'^2) / sin rho.  The last
two are the gnomonic pushforwards of planar curve shortening and of the
planar affine normal flow; they are anisotropic on the sphere and are
kept here, not in `speeds`.

Time stepping is explicit RK4 under a parabolic CFL restriction

    dt = c * dtheta^2 / max(|dF/dkappa| * (1 + max kappa^2), 1).
"""

import time as _time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from numba import njit

from . import quantities as _quant
from .errors import ConvexityLostError, NumericalBlowupError, PoleMarginError
from .fourier import fd4_derivatives, periodic_grid, spectral_derivatives
from .speeds import SpeedFunction

POLE_MARGIN = 1e-3


@njit(cache=True)
def _core_arrays(rho, d, dd):
    """Fused curvature/arclength pass: sin, cos, W, kappa, v in one loop."""
    n = rho.size
    s = np.empty(n)
    c = np.empty(n)
    W = np.empty(n)
    kappa = np.empty(n)
    v = np.empty(n)
    for i in range(n):
        si = np.sin(rho[i])
        ci = np.cos(rho[i])
        di = d[i]
        w2 = si * si + di * di
        wi = np.sqrt(w2)
        s[i] = si
        c[i] = ci
        W[i] = wi
        kappa[i] = (ci * (2.0 * di * di + si * si) - dd[i] * si) / (w2 * wi)
        v[i] = wi / si
    return s, c, W, kappa, v


@njit(cache=True)
def _rhs_linear_H(kappa, v):
    n = kappa.size
    out = np.empty(n)
    kmin = kappa[0]
    kmax = kappa[0]
    for i in range(n):
        out[i] = -kappa[i] * v[i]
        if kappa[i] < kmin:
            kmin = kappa[i]
        if kappa[i] > kmax:
            kmax = kappa[i]
    return out, kmin, kmax


@njit(cache=True)
def _curve_sums(kappa, W, c, dtheta):
    """(length, total curvature, enclosed area) in one pass."""
    L = 0.0
    tot = 0.0
    area = 0.0
    for i in range(kappa.size):
        L += W[i]
        tot += kappa[i] * W[i]
        area += 1.0 - c[i]
    return L * dtheta, tot * dtheta, area * dtheta


@dataclass
class StopRules:
    """Positive thresholds that end a run cleanly."""

    max_kappa: float = 1e6
    min_length: float = 1e-4
    max_time: float = np.inf
    pole_margin: float = POLE_MARGIN

    def __post_init__(self):
        for name in ("max_kappa", "min_length", "max_time", "pole_margin"):
            if getattr(self, name) <= 0:
                raise ValueError(f"stop rule {name} must be positive")


@dataclass
class FlowSpec:
    """What to evolve and how: flow kind, speed, resolution, stepping, stops."""

    kind: str = "geometric"  # geometric | angenent_oval | ellipse
    speed: Optional[SpeedFunction] = None
    resolution: int = 256
    cfl: float = 0.2
    fixed_dt: Optional[float] = None
    derivative: str = "spectral"  # spectral | fd4
    stops: StopRules = field(default_factory=StopRules)

    def __post_init__(self):
        if self.kind not in ("geometric", "angenent_oval", "ellipse"):
            raise ValueError(f"unknown flow kind {self.kind!r}")
        if self.kind == "geometric" and self.speed is None:
            raise ValueError("geometric flow requires a speed function")
        if self.speed is not None and self.speed.n != 1:
            raise ValueError("curve flows use speeds with n = 1")


class RadialCurve:
    """Periodic radial graph with derived curvature and arclength data.

    Derived arrays are computed once at construction: rho_theta,
    rho_thetatheta, kappa, the arclength weights ds_weight and the graph
    factor v_factor.  States are treated as immutable.
    """

    __slots__ = ("rho", "t", "derivative", "theta", "dtheta", "rho_theta",
                 "rho_thetatheta", "kappa", "ds_weight", "v_factor",
                 "sin_rho", "cos_rho", "W")

    def __init__(self, rho, t=0.0, derivative="spectral"):
        rho = np.asarray(rho, dtype=float)
        if rho.ndim != 1 or rho.size < 16:
            raise ValueError("rho must be a 1-d array with at least 16 nodes")
        if np.any(rho <= 0.0) or np.any(rho >= np.pi):
            raise PoleMarginError("radii must lie strictly inside (0, pi)")
        self.rho = rho
        self.t = float(t)
        self.derivative = derivative
        n = rho.size
        self.theta = periodic_grid(n)
        self.dtheta = 2.0 * np.pi / n
        d, dd, s, c, W2, W, kappa, v = _curve_pieces(rho, self.dtheta, derivative)
        self.rho_theta = d
        self.rho_thetatheta = dd
        self.sin_rho = s
        self.cos_rho = c
        self.W = W
        self.kappa = kappa
        self.v_factor = v
        self.ds_weight = W * self.dtheta

    @property
    def resolution(self):
        return self.rho.size

    @property
    def is_convex(self):
        return bool(self.kappa.min() > 0.0)

    def length(self):
        return float(self.ds_weight.sum())

    def pole_clearance(self):
        return float(min(self.rho.min(), np.pi - self.rho.max()))


def _curve_pieces(rho, dtheta, mode):
    if mode == "spectral":
        d, dd = spectral_derivatives(rho)
    elif mode == "fd4":
        d, dd = fd4_derivatives(rho, dtheta)
    else:
        raise ValueError(f"unknown derivative mode {mode!r}")
    s, c, W, kappa, v = _core_arrays(rho, d, dd)
    return d, dd, s, c, W * W, W, kappa, v


def radial_curve(rho, t=0.0, derivative="spectral"):
    return RadialCurve(rho, t=t, derivative=derivative)


def circle_curve(rho0, n=256, derivative="spectral"):
    """Geodesic circle of radius rho0 centered at the pole."""
    return RadialCurve(np.full(n, float(rho0)), derivative=derivative)


def perturbed_circle_curve(rho0, amplitude, mode, n=256, phase=0.0, derivative="spectral"):
    """rho0 + amplitude * cos(mode * theta + phase)."""
    th = periodic_grid(n)
    return RadialCurve(rho0 + amplitude * np.cos(mode * th + phase), derivative=derivative)


def fourier_curve(rho0, cos_coeffs=(), sin_coeffs=(), n=256, derivative="spectral"):
    """rho0 plus a finite cosine/sine series, lowest mode first."""
    th = periodic_grid(n)
    rho = np.full(n, float(rho0))
    for m, a in enumerate(cos_coeffs, start=1):
        rho += a * np.cos(m * th)
    for m, b in enumerate(sin_coeffs, start=1):
        rho += b * np.sin(m * th)
    return RadialCurve(rho, derivative=derivative)


def offset_circle_curve(radius, offset, n=256, derivative="spectral"):
    """Graph of a geodesic circle whose center sits `offset` from the pole.

    Closed form from the spherical law of cosines; requires offset < radius
    so the pole stays enclosed.
    """
    if not (0.0 <= offset < radius):
        raise ValueError("need 0 <= offset < radius for a radial graph")
    th = periodic_grid(n)
    phi = np.arctan2(np.sin(offset) * np.cos(th), np.cos(offset))
    big_r = np.sqrt(np.cos(offset) ** 2 + (np.sin(offset) * np.cos(th)) ** 2)
    rho = phi + np.arccos(np.clip(np.cos(radius) / big_r, -1.0, 1.0))
    return RadialCurve(rho, derivative=derivative)


def curvature_of_graph(curve, pole_margin=POLE_MARGIN):
    """Per-node geodesic curvature of the radial graph."""
    if curve.pole_clearance() < pole_margin:
        raise PoleMarginError(
            f"graph within {pole_margin:g} of a pole; curvature untrustworthy")
    return curve.kappa


def _rhs_from_pieces(pieces, spec, t=None, need_dcoef=True):
    """Right-hand side (and the CFL coefficient when requested)."""
    d, dd, s, c, W2, W, kappa, v = pieces
    if spec.kind == "geometric":
        speed = spec.speed
        if speed.name == "H" and speed.n == 1:
            # identity speed: skip the generic evaluation machinery
            rhs, _, _ = _rhs_linear_H(kappa, v)
            dmax = 1.0
        else:
            if not speed.boundary_continuous and kappa.min() <= 0.0:
                raise ConvexityLostError(int(np.argmin(kappa)), t=t, kappa=float(kappa.min()))
            kcol = kappa[:, None]
            fval = speed.evaluate(kcol)
            rhs = -fval * v
            dmax = float(np.abs(speed.gradient(kcol)).max()) if need_dcoef else 0.0
    elif spec.kind == "angenent_oval":
        q2 = (s * c) ** 2 + d * d
        m = (c ** 4) * W2 / q2
        rhs = -kappa * v * m
        dmax = float(m.max()) if need_dcoef else 0.0
    else:  # ellipse
        if kappa.min() <= 0.0:
            raise ConvexityLostError(int(np.argmin(kappa)), t=t, kappa=float(kappa.min()))
        cb = np.cbrt(kappa)
        rhs = -cb * v * (c * c)
        dmax = float(((c * c) / (3.0 * cb * cb)).max()) if need_dcoef else 0.0
    if not need_dcoef:
        return rhs, None
    kmax2 = float(np.max(kappa * kappa))
    dcoef = max(dmax * (1.0 + kmax2), 1.0)
    return rhs, dcoef


def rhs(curve, spec):
    """Per-node time derivative of rho under the given flow."""
    pieces = (curve.rho_theta, curve.rho_thetatheta, curve.sin_rho, curve.cos_rho,
              curve.W * curve.W, curve.W, curve.kappa, curve.v_factor)
    out, _ = _rhs_from_pieces(pieces, spec, t=curve.t)
    if not np.all(np.isfinite(out)):
        raise NumericalBlowupError("non-finite right-hand side", last_state=curve)
    return out


def _rk4(rho, dt, dtheta, spec, t):
    mode = spec.derivative
    k1, dcoef = _rhs_from_pieces(_curve_pieces(rho, dtheta, mode), spec, t)
    k2, _ = _rhs_from_pieces(_curve_pieces(rho + 0.5 * dt * k1, dtheta, mode), spec, t, need_dcoef=False)
    k3, _ = _rhs_from_pieces(_curve_pieces(rho + 0.5 * dt * k2, dtheta, mode), spec, t, need_dcoef=False)
    k4, _ = _rhs_from_pieces(_curve_pieces(rho + dt * k3, dtheta, mode), spec, t, need_dcoef=False)
    return rho + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4), dcoef


def _cfl_dt(spec, dtheta, dcoef):
    if spec.fixed_dt is not None:
        return spec.fixed_dt
    return spec.cfl * dtheta * dtheta / dcoef


def step(curve, spec):
    """One explicit RK4 step; dt from the CFL policy at the current state."""
    pieces = _curve_pieces(curve.rho, curve.dtheta, spec.derivative)
    _, dcoef = _rhs_from_pieces(pieces, spec, t=curve.t)
    dt = _cfl_dt(spec, curve.dtheta, dcoef)
    new_rho, _ = _rk4(curve.rho, dt, curve.dtheta, spec, curve.t)
    if not np.all(np.isfinite(new_rho)):
        raise NumericalBlowupError(f"blow-up at t={curve.t:.6g}", last_state=curve)
    return RadialCurve(new_rho, t=curve.t + dt, derivative=spec.derivative)


def _check_stop(rho, kappa, length, t, stops):
    if min(rho.min(), np.pi - rho.max()) < stops.pole_margin:
        return "pole_margin"
    if np.abs(kappa).max() > stops.max_kappa:
        return "max_kappa"
    if length < stops.min_length:
        return "collapse"
    if t >= stops.max_time:
        return "max_time"
    return None


def run(initial, spec, qset=None, snapshot_every=None, out_dir=None, max_steps=10**8):
    """Evolve until a stop rule fires, recording diagnostics and snapshots.

    Returns a RunRecord; the run loop works on raw arrays and only builds
    curve objects at snapshot times.  A numerical blow-up or a convexity
    loss under a cone-restricted speed ends the run with the corresponding
    stop reason recorded (step() raises instead; run() records).
    """
    if qset is None:
        qset = _quant.QuantitySet.curve_default(with_speed=spec.speed is not None)
    qset.validate_for("curve", has_speed=spec.speed is not None or spec.kind != "geometric")
    wall0 = _time.perf_counter()
    mode = spec.derivative
    rho = initial.rho.copy()
    dtheta = initial.dtheta
    t = initial.t
    record = _quant.RunRecord.fresh(
        geometry="curve",
        columns=["t"] + list(qset.enabled),
        manifest={
            "flow_kind": spec.kind,
            "speed": None if spec.speed is None else {
                "name": spec.speed.name, "n": spec.speed.n},
            "resolution": int(rho.size),
            "derivative": mode,
            "cfl": spec.cfl,
            "fixed_dt": spec.fixed_dt,
            "stops": {"max_kappa": spec.stops.max_kappa,
                      "min_length": spec.stops.min_length,
                      "max_time": spec.stops.max_time,
                      "pole_margin": spec.stops.pole_margin},
            "cadence": qset.cadence,
        },
    )
    prev_field = None
    stop_reason = None
    convexity_flag = False
    steps_done = 0
    for istep in range(max_steps):
        pieces = _curve_pieces(rho, dtheta, mode)
        kappa, W = pieces[6], pieces[5]
        length = float(W.sum()) * dtheta
        if kappa.min() <= 0.0:
            convexity_flag = True
        stop_reason = _check_stop(rho, kappa, length, t, spec.stops)
        record_now = (istep % qset.cadence == 0) or stop_reason is not None
        if record_now:
            row, prev_field = _quant.curve_row(
                t, rho, pieces, dtheta, spec.speed, qset, prev_field, mode)
            record.append_row(row)
        if snapshot_every is not None and (istep % snapshot_every == 0 or stop_reason):
            record.add_snapshot({"t": t, "theta": periodic_grid(rho.size),
                                 "rho": rho.copy(), "kappa": kappa.copy()})
        if stop_reason is not None:
            break
        try:
            rhs_vec, dcoef = _rhs_from_pieces(pieces, spec, t)
            dt = _cfl_dt(spec, dtheta, dcoef)
            dt = min(dt, max(spec.stops.max_time - t, 1e-15))
            k2, _ = _rhs_from_pieces(_curve_pieces(rho + 0.5 * dt * rhs_vec, dtheta, mode), spec, t, need_dcoef=False)
            k3, _ = _rhs_from_pieces(_curve_pieces(rho + 0.5 * dt * k2, dtheta, mode), spec, t, need_dcoef=False)
            k4, _ = _rhs_from_pieces(_curve_pieces(rho + dt * k3, dtheta, mode), spec, t, need_dcoef=False)
        except ConvexityLostError:
            stop_reason = "convexity_lost"
            break
        new_rho = rho + (dt / 6.0) * (rhs_vec + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(new_rho)):
            stop_reason = "blowup"
            break
        if np.any(new_rho <= 0.0) or np.any(new_rho >= np.pi):
            stop_reason = "pole_margin"
            break
        rho = new_rho
        t += dt
        steps_done += 1
    else:
        stop_reason = "max_steps"

    record.manifest["stop_reason"] = stop_reason
    record.manifest["steps"] = steps_done
    record.manifest["final_time"] = t
    record.manifest["convexity_lost_flag"] = convexity_flag
    record.manifest["wall_time_s"] = _time.perf_counter() - wall0
    if out_dir is not None:
        record.save(out_dir)
    return record
