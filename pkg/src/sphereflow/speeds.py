"""Curvature speed functions on the positive cone.

A speed is a symmetric, monotone, positive function F of the n principal
curvatures, normalized for the built-in families so that F(1,...,1) = n.
Speeds drive the contracting flows in the rest of the package; this module
also provides numerical certificates (homogeneity, monotonicity, shape)
so that user-supplied speeds can be validated before use.
"""

from dataclasses import dataclass
from math import comb
from typing import Callable, Optional

import numpy as np

from .errors import ConeDomainError, SpeedEvaluationError

FD_STEP = 1e-6  # central-difference step for non-analytic gradients


def _as_points(kappa, n):
    k = np.asarray(kappa, dtype=float)
    if k.ndim == 0:
        k = k.reshape(1)
    if k.shape[-1] != n:
        raise ValueError(f"expected curvature vectors of length {n}, got shape {k.shape}")
    return k


@dataclass(frozen=True)
class SpeedFunction:
    """A curvature function F with evaluation and gradient.

    Built-ins carry analytic gradients and are rescaled at construction so
    that F(1,...,1) = n.  `boundary_continuous` marks speeds whose formula
    extends continuously to the closed cone; all others reject curvature
    vectors with a non-positive component.
    """

    name: str
    n: int
    declared_homogeneity: Optional[float]
    declared_shape: str  # convex | concave | linear | none
    boundary_continuous: bool
    normalization_constant: float
    raw_evaluate: Callable
    raw_gradient: Optional[Callable] = None

    def evaluate(self, kappa):
        """F at one or many curvature vectors; shape (..., n) -> (...)."""
        k = _as_points(kappa, self.n)
        if not self.boundary_continuous and np.any(k <= 0.0):
            bad = np.argwhere(k <= 0.0)[0]
            raise ConeDomainError(
                f"{self.name}: curvature vector outside the open positive cone at index {tuple(bad)}"
            )
        val = self.normalization_constant * self.raw_evaluate(k)
        if not np.all(np.isfinite(val)):
            bad = np.asarray(val).reshape(-1)
            idx = int(np.flatnonzero(~np.isfinite(bad))[0])
            raise SpeedEvaluationError(
                f"{self.name}: non-finite value at sample {idx}", point=k.reshape(-1, self.n)[idx]
            )
        return val

    def gradient(self, kappa):
        """dF/dkappa_i, analytic when available, else central differences."""
        k = _as_points(kappa, self.n)
        if self.raw_gradient is not None:
            return self.normalization_constant * self.raw_gradient(k)
        g = np.empty_like(k)
        for i in range(self.n):
            hi = k.copy()
            lo = k.copy()
            hi[..., i] += FD_STEP
            lo[..., i] -= FD_STEP
            g[..., i] = (self.evaluate(hi) - self.evaluate(lo)) / (2.0 * FD_STEP)
        return g

    def diagonal(self, x):
        """F(x, ..., x) for scalars or arrays x > 0 (umbilic evaluation)."""
        x = np.asarray(x, dtype=float)
        k = np.stack([x] * self.n, axis=-1)
        return self.evaluate(k)

    def value_at_one(self):
        return float(self.diagonal(1.0))


def _sigma_elementary(k, order):
    """Elementary symmetric polynomial e_order over the last axis."""
    if order == 0:
        return np.ones(k.shape[:-1])
    n = k.shape[-1]
    es = [np.ones(k.shape[:-1])] + [np.zeros(k.shape[:-1]) for _ in range(order)]
    for i in range(n):
        xi = k[..., i]
        for j in range(min(order, i + 1), 0, -1):
            es[j] = es[j] + xi * es[j - 1]
    return es[order]


_FAMILY_ALIASES = {
    "H": "H",
    "mean_curvature": "H",
    "H^p": "H^p",
    "power_of_mean": "H^p",
    "norm_A": "norm_A",
    "norm_of_A": "norm_A",
    "sqrt_n_norm_A": "norm_A",
    "power_mean": "power_mean",
    "sigma_k_root": "sigma_k_root",
}


def make_builtin(family, parameters=(), n=1):
    """Construct a built-in speed, normalized so F(1,...,1) = n.

    Families: 'H' (mean curvature), 'H^p' with parameter p > 0,
    'norm_A' (sqrt(n)|A|), 'power_mean' with order q != 0, and
    'sigma_k_root' with integer 1 <= k <= n.
    """
    if n < 1:
        raise ValueError("dimension n must be a positive integer")
    key = _FAMILY_ALIASES.get(family)
    if key is None:
        raise ValueError(f"unknown speed family {family!r}")
    params = tuple(float(p) for p in parameters)

    if key == "H":
        raw = lambda k: k.sum(axis=-1)
        grad = lambda k: np.ones_like(k)
        spec = dict(name="H", declared_homogeneity=1.0, declared_shape="linear",
                    boundary_continuous=True)
    elif key == "H^p":
        if len(params) != 1:
            raise ValueError("H^p takes exactly one parameter p")
        p = params[0]
        if p <= 0.0:
            raise ValueError(f"H^p requires p > 0, got {p}")
        raw = lambda k, p=p: k.sum(axis=-1) ** p
        grad = lambda k, p=p: p * (k.sum(axis=-1) ** (p - 1.0))[..., None] * np.ones_like(k)
        shape = "concave" if p < 1.0 else ("linear" if p == 1.0 else "convex")
        spec = dict(name=f"H^{p:g}", declared_homogeneity=p, declared_shape=shape,
                    boundary_continuous=p >= 1.0)
    elif key == "norm_A":
        root_n = np.sqrt(float(n))
        raw = lambda k, c=root_n: c * np.sqrt((k * k).sum(axis=-1))
        grad = lambda k, c=root_n: c * k / np.sqrt((k * k).sum(axis=-1))[..., None]
        spec = dict(name="norm_A", declared_homogeneity=1.0, declared_shape="convex",
                    boundary_continuous=False)
    elif key == "power_mean":
        if len(params) != 1:
            raise ValueError("power_mean takes exactly one parameter q")
        q = params[0]
        if q == 0.0:
            raise ValueError("power_mean requires q != 0")
        raw = lambda k, q=q: ((k ** q).mean(axis=-1)) ** (1.0 / q)
        grad = lambda k, q=q: (((k ** q).mean(axis=-1)) ** (1.0 / q - 1.0))[..., None] \
            * (k ** (q - 1.0)) / k.shape[-1]
        shape = "concave" if q < 1.0 else ("linear" if q == 1.0 else "convex")
        spec = dict(name=f"power_mean_{q:g}", declared_homogeneity=1.0,
                    declared_shape=shape, boundary_continuous=False)
    else:  # sigma_k_root
        if len(params) != 1:
            raise ValueError("sigma_k_root takes exactly one parameter k")
        kk = int(params[0])
        if kk < 1 or kk > n or kk != params[0]:
            raise ValueError(f"sigma_k_root requires integer 1 <= k <= n, got {params[0]}")
        cnk = float(comb(n, kk))

        def raw(k, kk=kk, cnk=cnk):
            return (_sigma_elementary(k, kk) / cnk) ** (1.0 / kk)

        def grad(k, kk=kk, cnk=cnk):
            base = (_sigma_elementary(k, kk) / cnk) ** (1.0 / kk - 1.0) / (kk * cnk)
            g = np.empty_like(k)
            for i in range(k.shape[-1]):
                rest = np.delete(k, i, axis=-1)
                g[..., i] = base * _sigma_elementary(rest, kk - 1)
            return g

        spec = dict(name=f"sigma_{kk}_root", declared_homogeneity=1.0,
                    declared_shape="concave" if kk > 1 else "linear",
                    boundary_continuous=False)

    ones = np.ones(n)
    scale = n / float(raw(ones))
    return SpeedFunction(
        name=spec["name"],
        n=n,
        declared_homogeneity=spec["declared_homogeneity"],
        declared_shape=spec["declared_shape"],
        boundary_continuous=spec["boundary_continuous"],
        normalization_constant=scale,
        raw_evaluate=raw,
        raw_gradient=grad,
    )


def from_callable(name, func, n, gradient=None, homogeneity=None, shape="none",
                  boundary_continuous=False):
    """Wrap a user-supplied curvature function; gradient defaults to finite differences."""
    return SpeedFunction(
        name=name,
        n=n,
        declared_homogeneity=homogeneity,
        declared_shape=shape,
        boundary_continuous=boundary_continuous,
        normalization_constant=1.0,
        raw_evaluate=lambda k: np.asarray(func(k), dtype=float),
        raw_gradient=gradient,
    )


@dataclass(frozen=True)
class SpeedCertificate:
    """Numerical validation record for a speed function."""

    homogeneity_estimate: float
    is_symmetric: bool
    is_monotone: bool
    shape_verdict: str  # convex | concave | indefinite | linear
    comparison_bound: float  # empirical inf of n F / H over the samples
    samples: int
    segments: int
    seed: int


def certify(speed, samples=1000, seed=0, segments=1000):
    """Sample-based certificate: homogeneity fit, symmetry, monotonicity, shape.

    Deterministic given the seed.  Shape is decided by midpoint tests along
    random segments inside the cone; the certificate records how many were
    used so callers can demand more.
    """
    if samples < 100:
        raise ValueError("certify requires samples >= 100")
    rng = np.random.default_rng(seed)
    n = speed.n
    pts = 10.0 ** rng.uniform(-1.0, 1.0, size=(samples, n))
    vals = speed.evaluate(pts)

    lam = 10.0 ** rng.uniform(-1.0, 1.0, size=samples)
    scaled = speed.evaluate(pts * lam[:, None])
    hom = float(np.mean((np.log(scaled) - np.log(vals)) / np.log(lam)))

    perm_ok = True
    for _ in range(8):
        perm = rng.permutation(n)
        diff = np.abs(speed.evaluate(pts[:, perm]) - vals)
        if np.any(diff > 1e-12 * np.abs(vals)):
            perm_ok = False
            break

    grads = speed.gradient(pts)
    monotone = bool(np.all(grads >= -1e-10))

    a = 10.0 ** rng.uniform(-1.0, 1.0, size=(segments, n))
    b = 10.0 ** rng.uniform(-1.0, 1.0, size=(segments, n))
    fmid = speed.evaluate(0.5 * (a + b))
    favg = 0.5 * (speed.evaluate(a) + speed.evaluate(b))
    scale = np.abs(speed.evaluate(a)) + np.abs(speed.evaluate(b))
    gap = fmid - favg
    tol = 1e-9 * scale
    below = np.any(gap < -tol)
    above = np.any(gap > tol)
    if not below and not above:
        verdict = "linear"
    elif below and not above:
        verdict = "convex"
    elif above and not below:
        verdict = "concave"
    else:
        verdict = "indefinite"

    hsum = pts.sum(axis=1)
    comparison = float(np.min(n * vals / hsum))

    return SpeedCertificate(
        homogeneity_estimate=hom,
        is_symmetric=perm_ok,
        is_monotone=monotone,
        shape_verdict=verdict,
        comparison_bound=comparison,
        samples=samples,
        segments=segments,
        seed=seed,
    )


def gradient_check(speed, point):
    """Max abs discrepancy between the attached gradient and central differences."""
    k = _as_points(point, speed.n)
    if np.any(k <= FD_STEP):
        raise ConeDomainError("gradient_check requires components > 1e-6 inside the cone")
    g = speed.gradient(k)
    fd = np.empty_like(k)
    for i in range(speed.n):
        hi = k.copy()
        lo = k.copy()
        hi[..., i] += FD_STEP
        lo[..., i] -= FD_STEP
        fd[..., i] = (speed.evaluate(hi) - speed.evaluate(lo)) / (2.0 * FD_STEP)
    return float(np.max(np.abs(g - fd)))


def parse_speed_spec(spec):
    """Build a SpeedFunction from {'family': str, 'params': [...], 'n': int}."""
    family = spec["family"]
    params = spec.get("params", [])
    n = int(spec.get("n", 1))
    return make_builtin(family, params, n=n)


def speed_spec(speed_or_family, params=(), n=None):
    """Normalize CLI-style speed arguments into a config dictionary."""
    if isinstance(speed_or_family, SpeedFunction):
        raise TypeError("speed_spec expects a family name")
    return {"family": speed_or_family, "params": list(params), "n": int(n or 1)}
