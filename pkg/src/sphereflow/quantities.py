"""Monotone / conserved / bounded diagnostics attached to flow runs.

For a closed curve with per-node curvature kappa and arclength weights ds:

* L            = sum ds
* total_kappa  = sum kappa ds
* area         = sum (1 - cos rho) dtheta   (region enclosed around the pole)
* q            = total_kappa^2 + L^2
* gauss_bonnet_residual = total_kappa + area - 2*pi

q is non-increasing under curve shortening with floor 4*pi^2, attained
exactly on geodesic circles.  The Harnack monitor tracks the per-node
quantity dF/dt - F_s^2 / kappa (one-sided time difference at recording
cadence, arclength derivative in space), which is nonnegative along
eternal strictly convex solutions of convex 1-homogeneous flows.

Rows that cannot be computed (e.g. Harnack data on a non-convex snapshot)
are recorded as NaN and count as "missing".
"""

import json
import os
import time as _time
from dataclasses import dataclass, field

import numpy as np

from .fourier import fd4_derivatives, spectral_first_derivative
from . import reflection as _reflection

CURVE_COLUMNS = ("L", "total_kappa", "q", "area", "gauss_bonnet_residual",
                 "kappa_min", "kappa_max", "rho_c1_norm", "harnack_min")
CURVE_SPEED_EXTRA = ("w_min", "w_max", "F_min", "F_max")
AXISYM_COLUMNS = ("H_max", "kappa_min", "kappa_max", "kappa1_min", "kappa2_min",
                  "w_min", "w_max", "F_min", "F_max", "harnack_min", "rho_c1_norm")
BACKWARD_COLUMNS = ("L", "kappa_min", "kappa_max", "H_max", "rho_c1_norm",
                    "roundness_residual", "total_kappa", "q", "area",
                    "gauss_bonnet_residual")

_VALID = {
    "curve": set(CURVE_COLUMNS) | set(CURVE_SPEED_EXTRA)
    | {"H_max", "roundness_residual", "c1_distance_to_equator"},
    "axisym": set(AXISYM_COLUMNS) | {"roundness_residual"},
}
_NEEDS_SPEED = {"w_min", "w_max", "F_min", "F_max", "harnack_min"}


@dataclass
class QuantitySet:
    """Which diagnostics to record and how often."""

    enabled: tuple
    cadence: int = 1

    def __post_init__(self):
        self.enabled = tuple(self.enabled)
        if self.cadence < 1:
            raise ValueError("cadence must be >= 1")
        if "harnack_min" in self.enabled:
            # the Harnack quantity is a pointwise-in-time object
            self.cadence = 1

    @classmethod
    def curve_default(cls, with_speed=True, cadence=1):
        cols = CURVE_COLUMNS + (CURVE_SPEED_EXTRA if with_speed else ())
        return cls(enabled=cols, cadence=cadence)

    @classmethod
    def axisym_default(cls, cadence=1):
        return cls(enabled=AXISYM_COLUMNS, cadence=cadence)

    @classmethod
    def backward_default(cls):
        return cls(enabled=BACKWARD_COLUMNS, cadence=1)

    def validate_for(self, geometry, has_speed=True):
        valid = _VALID[geometry]
        for name in self.enabled:
            if name not in valid:
                raise ValueError(f"quantity {name!r} not valid for {geometry} runs")
            if name in _NEEDS_SPEED and not has_speed:
                raise ValueError(f"quantity {name!r} requires an attached speed")


@dataclass
class RunRecord:
    """Persisted time series of diagnostics plus snapshots and a manifest."""

    geometry: str
    columns: list
    manifest: dict
    rows: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)

    @classmethod
    def fresh(cls, geometry, columns, manifest):
        man = {"schema_version": 1, "geometry": geometry,
               "created_unix": _time.time(), "columns": list(columns)}
        man.update(manifest)
        return cls(geometry=geometry, columns=list(columns), manifest=man)

    def append_row(self, row):
        if self.rows and row[0] <= self.rows[-1][0]:
            raise ValueError("series timestamps must be strictly increasing")
        self.rows.append(np.asarray(row, dtype=float))

    def add_snapshot(self, snap):
        self.snapshots.append(snap)

    def series(self):
        return np.vstack(self.rows) if self.rows else np.empty((0, len(self.columns)))

    def column(self, name):
        return self.series()[:, self.columns.index(name)]

    def save(self, outdir):
        os.makedirs(outdir, exist_ok=True)
        self.manifest["columns"] = list(self.columns)
        self.manifest["n_snapshots"] = len(self.snapshots)
        with open(os.path.join(outdir, "manifest.json"), "w") as fh:
            json.dump(_jsonable(self.manifest), fh, indent=2, sort_keys=True)
            fh.write("\n")
        write_csv(os.path.join(outdir, "series.csv"), self.columns, self.series())
        if self.snapshots:
            snapdir = os.path.join(outdir, "snapshots")
            os.makedirs(snapdir, exist_ok=True)
            for i, snap in enumerate(self.snapshots):
                keys = [k for k in snap if k != "t"]
                data = np.column_stack([snap[k] for k in keys])
                write_csv(os.path.join(snapdir, f"snap_{i:04d}.csv"), keys, data,
                          preamble=f"# t = {snap['t']:.16e}")
        return outdir

    @classmethod
    def load(cls, outdir):
        with open(os.path.join(outdir, "manifest.json")) as fh:
            manifest = json.load(fh)
        columns, series = read_csv(os.path.join(outdir, "series.csv"))
        rec = cls(geometry=manifest.get("geometry", "curve"), columns=columns,
                  manifest=manifest)
        rec.rows = [series[i] for i in range(series.shape[0])]
        snapdir = os.path.join(outdir, "snapshots")
        if os.path.isdir(snapdir):
            for name in sorted(os.listdir(snapdir)):
                keys, data, preamble = read_csv(os.path.join(snapdir, name),
                                                with_preamble=True)
                snap = {k: data[:, j] for j, k in enumerate(keys)}
                if preamble.startswith("# t ="):
                    snap["t"] = float(preamble.split("=")[1])
                rec.snapshots.append(snap)
        return rec


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, float) and np.isinf(obj):
        return "inf" if obj > 0 else "-inf"
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return obj


def write_csv(path, header, data, preamble=None):
    lines = []
    if preamble:
        lines.append(preamble)
    lines.append(",".join(header))
    for row in np.atleast_2d(data):
        lines.append(",".join("%.16e" % x for x in row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_csv(path, with_preamble=False):
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    preamble = ""
    if lines and lines[0].startswith("#"):
        preamble = lines.pop(0)
    header = lines[0].split(",")
    data = np.array([[float(x) for x in ln.split(",")] for ln in lines[1:]]) \
        if len(lines) > 1 else np.empty((0, len(header)))
    if with_preamble:
        return header, data, preamble
    return header, data


class _GraphView:
    """Minimal star-shaped-graph view used by the roundness fitter."""

    __slots__ = ("theta", "rho", "rho_theta")

    def __init__(self, theta, rho, rho_theta):
        self.theta = theta
        self.rho = rho
        self.rho_theta = rho_theta


def curve_row(t, rho, pieces, dtheta, speed, qset, prev_field, mode):
    """Assemble one diagnostics row for a curve state; returns (row, prev)."""
    d, dd, s, c, W2, W, kappa, v = pieces
    ds = W * dtheta
    values = {}
    length = float(ds.sum())
    total = float((kappa * ds).sum())
    area = float(((1.0 - c) * dtheta).sum())
    values["L"] = length
    values["total_kappa"] = total
    values["area"] = area
    values["q"] = total * total + length * length
    values["gauss_bonnet_residual"] = total + area - 2.0 * np.pi
    values["kappa_min"] = float(kappa.min())
    values["kappa_max"] = float(kappa.max())
    values["H_max"] = values["kappa_max"]
    c1 = float(np.abs(np.pi / 2 - rho).max() + np.abs(d).max())
    values["rho_c1_norm"] = c1
    values["c1_distance_to_equator"] = c1

    fnow = None
    if speed is not None:
        if speed.name == "H" and speed.n == 1:
            fnow = kappa
        elif speed.boundary_continuous or kappa.min() > 0.0:
            fnow = np.asarray(speed.evaluate(kappa[:, None]), dtype=float)
    if fnow is not None:
        values["F_min"] = float(fnow.min())
        values["F_max"] = float(fnow.max())
        if np.all(fnow > 0.0):
            values["w_min"] = float((kappa / fnow).min())
            values["w_max"] = float((kappa / fnow).max())
        else:
            values["w_min"] = values["w_max"] = np.nan
    else:
        values["F_min"] = values["F_max"] = np.nan
        values["w_min"] = values["w_max"] = np.nan

    harnack = np.nan
    if fnow is not None and prev_field is not None and kappa.min() > 0.0:
        t_prev, f_prev = prev_field
        if t > t_prev:
            ft = (fnow - f_prev) / (t - t_prev)
            if mode == "spectral":
                dF = spectral_first_derivative(fnow)
            else:
                dF = fd4_derivatives(fnow, dtheta)[0]
            fs = dF / W
            harnack = float((ft - fs * fs / kappa).min())
    values["harnack_min"] = harnack

    if "roundness_residual" in qset.enabled:
        from .fourier import periodic_grid
        view = _GraphView(periodic_grid(rho.size), rho, d)
        values["roundness_residual"] = _reflection.roundness(view).best_fit_sphere_residual

    row = [t] + [values.get(name, np.nan) for name in qset.enabled]
    prev = (t, fnow) if fnow is not None else prev_field
    return np.asarray(row, dtype=float), prev


def axisym_row(t, u, pieces, dpsi, speed, qset, prev_field, mode, n):
    """One diagnostics row for an axisymmetric state; returns (row, prev)."""
    d, dd, s, c, W, kappa1, kappa2, v = pieces
    values = {}
    kmin = np.minimum(kappa1, kappa2)
    kmax = np.maximum(kappa1, kappa2)
    H = kappa1 + (n - 1) * kappa2
    values["H_max"] = float(H.max())
    values["kappa_min"] = float(kmin.min())
    values["kappa_max"] = float(kmax.max())
    values["kappa1_min"] = float(kappa1.min())
    values["kappa2_min"] = float(kappa2.min())
    values["rho_c1_norm"] = float(np.abs(np.pi / 2 - u).max() + np.abs(d).max())

    fnow = None
    if speed is not None and (speed.boundary_continuous or kmin.min() > 0.0):
        kvec = np.column_stack([kappa1] + [kappa2] * (n - 1))
        fnow = np.asarray(speed.evaluate(kvec), dtype=float)
    if fnow is not None:
        values["F_min"] = float(fnow.min())
        values["F_max"] = float(fnow.max())
        if np.all(fnow > 0.0):
            values["w_min"] = float((kmin / fnow).min())
            values["w_max"] = float((kmax / fnow).max())
        else:
            values["w_min"] = values["w_max"] = np.nan
    else:
        values["F_min"] = values["F_max"] = np.nan
        values["w_min"] = values["w_max"] = np.nan

    harnack = np.nan
    if fnow is not None and prev_field is not None and kmin.min() > 0.0:
        t_prev, f_prev = prev_field
        if t > t_prev:
            ft = (fnow - f_prev) / (t - t_prev)
            from .fourier import even_fd4_derivatives, even_spectral_derivatives
            if mode == "spectral":
                dF = even_spectral_derivatives(fnow)[0]
            else:
                dF = even_fd4_derivatives(fnow, dpsi)[0]
            fs = dF / W
            harnack = float((ft - fs * fs / kappa1).min())
    values["harnack_min"] = harnack

    row = [t] + [values.get(name, np.nan) for name in qset.enabled]
    prev = (t, fnow) if fnow is not None else prev_field
    return np.asarray(row, dtype=float), prev


def eval_quantities(state, speed, qset, prev_field=None):
    """Evaluate the enabled quantities on a single state.

    Returns (values dict, prev_field') where prev_field carries the last
    (t, per-node F) pair needed by the Harnack monitor.
    """
    from .curve_flow import RadialCurve
    if isinstance(state, RadialCurve):
        pieces = (state.rho_theta, state.rho_thetatheta, state.sin_rho,
                  state.cos_rho, state.W * state.W, state.W, state.kappa,
                  state.v_factor)
        row, prev = curve_row(state.t, state.rho, pieces, state.dtheta, speed,
                              qset, prev_field, state.derivative)
    else:  # AxisymGraph
        pieces = (state.u_psi, state.u_psipsi, state.sin_u, state.cos_u,
                  state.W, state.kappa1, state.kappa2, state.v_factor)
        row, prev = axisym_row(state.t, state.u, pieces, state.dpsi, speed,
                               qset, prev_field, state.derivative, state.n)
    values = dict(zip(["t"] + list(qset.enabled), row))
    return values, prev


def harnack_monitor(record, speed=None):
    """Global minimum of harnack_min over the recorded series, plus its trend.

    The inequality holds for eternal solutions of convex 1-homogeneous
    flows; for finite runs this reports rather than asserts.
    """
    col = record.column("harnack_min")
    t = record.column("t")
    good = np.isfinite(col)
    if not good.any():
        raise ValueError("series has no usable consecutive F snapshots")
    overall = float(col[good].min())
    slope, r2 = loglinear_trend(t[good], np.maximum(col[good], 1e-300))
    return {"min": overall, "trend_slope": slope, "trend_r2": r2,
            "n_rows": int(good.sum())}


def loglinear_trend(t, y):
    """Least-squares slope of log(y) against t, with R^2."""
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    keep = np.isfinite(y) & (y > 0.0)
    if keep.sum() < 3:
        return np.nan, 0.0
    x = t[keep]
    ly = np.log(y[keep])
    slope, intercept = np.polyfit(x, ly, 1)
    fit = slope * x + intercept
    ss_res = float(((ly - fit) ** 2).sum())
    ss_tot = float(((ly - ly.mean()) ** 2).sum())
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(r2)


def backwards_limit_report(record, sphere_tol=1e-6, r2_gate=0.9):
    """Classify the early-time behavior of a series as one of
    {equator_like, lune_like, sphere_like, inconclusive}.

    Trends are fitted linearly in log-space over the earliest third of the
    rows; verdicts require R^2 >= 0.9 or fall back to inconclusive.
    """
    series = record.series()
    if series.shape[0] < 10:
        raise ValueError("series too short for a backwards-limit report (< 10 rows)")
    t = record.column("t")
    c1 = record.column("rho_c1_norm")
    hmax = record.column("H_max")
    n_win = max(4, series.shape[0] // 3)
    tw, c1w, hw = t[:n_win], c1[:n_win], hmax[:n_win]

    roundness = None
    if "roundness_residual" in record.columns:
        roundness = record.column("roundness_residual")

    slope_c1, r2_c1 = loglinear_trend(tw, c1w)
    slope_h, r2_h = loglinear_trend(tw, np.abs(hw))

    verdict = "inconclusive"
    if roundness is not None and np.nanmax(roundness) < sphere_tol:
        verdict = "sphere_like"
    elif r2_c1 >= r2_gate and slope_c1 > 0 and slope_h >= -0.1 * abs(slope_c1):
        verdict = "equator_like"
    elif r2_h >= r2_gate and slope_h < 0:
        verdict = "lune_like"
    return {
        "verdict": verdict,
        "c1_trend": {"slope": slope_c1, "r2": r2_c1},
        "H_max_trend": {"slope": slope_h, "r2": r2_h},
        "window_rows": int(n_win),
        "roundness_max": None if roundness is None else float(np.nanmax(roundness)),
        "roundness_min": None if roundness is None else float(np.nanmin(roundness)),
    }
