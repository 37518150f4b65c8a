"""Variational p-means of weighted samples, balls, spheres and heat balls.

The p-mean of ``u`` on a measure space ``(X, nu)`` is the constant closest to
``u`` in ``L^p(X, nu)``: the median for ``p = 1``, the average for ``p = 2`` and
the min-max mean for ``p = inf``.  For ``1 < p < inf`` it is the unique root of

    g(lam) = int |u - lam|^(p-2) (u - lam) dnu,

which is continuous and strictly decreasing, so bracketing methods always
converge.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, minimize, minimize_scalar

from .fibers import FiberFunction, fiber_samples
from .measure import (
    DomainKind,
    QuadratureRule,
    householder,
    stencil,
    unit_sphere_rule,
)

__all__ = [
    "ExponentKind",
    "Exponent",
    "WeightedSamples",
    "PMeanResult",
    "char_residual",
    "weighted_median",
    "p_mean",
    "p_mean_batch",
    "p_mean_fibered",
    "p_mean_ball",
    "p_mean_sphere",
    "p_mean_heat",
    "ball_extrema",
    "alt_mean_mpr",
    "alt_mean_hr1",
    "alt_mean_hr2",
    "mpr_mean_samples",
    "LARGE_P_CUTOFF",
]

LARGE_P_CUTOFF = 64.0
MAX_BISECTIONS = 200
BRACKET_RTOL = 1e-14
RESIDUAL_RTOL = 1e-12


class ExponentKind(str, enum.Enum):
    ONE = "One"
    TWO = "Two"
    INFINITY = "Infinity"
    FINITE = "Finite"


@dataclass(frozen=True)
class Exponent:
    """The exponent ``p``.

    ``One``, ``Two`` and ``Infinity`` have closed-form means; ``Finite(p)`` with
    ``p > 1`` goes through the characterization equation (``Finite(2.0)`` is
    allowed and must agree with ``Two``).
    """

    kind: ExponentKind
    p: float

    @classmethod
    def one(cls) -> "Exponent":
        return cls(ExponentKind.ONE, 1.0)

    @classmethod
    def two(cls) -> "Exponent":
        return cls(ExponentKind.TWO, 2.0)

    @classmethod
    def infinity(cls) -> "Exponent":
        return cls(ExponentKind.INFINITY, math.inf)

    @classmethod
    def finite(cls, p: float) -> "Exponent":
        p = float(p)
        if not (p > 1.0 and math.isfinite(p)):
            raise ValueError(f"Finite exponent needs 1 < p < inf, got {p}")
        return cls(ExponentKind.FINITE, p)

    @classmethod
    def coerce(cls, value) -> "Exponent":
        """Accept an Exponent, a number or a string such as ``"inf"``."""
        if isinstance(value, Exponent):
            return value
        if isinstance(value, str):
            text = value.strip().lower()
            if text in ("inf", "infinity", "oo"):
                return cls.infinity()
            value = float(text)
        p = float(value)
        if p == 1.0:
            return cls.one()
        if p == 2.0:
            return cls.two()
        if math.isinf(p) and p > 0:
            return cls.infinity()
        return cls.finite(p)

    @property
    def is_infinite(self) -> bool:
        return self.kind is ExponentKind.INFINITY

    def __str__(self) -> str:
        return "inf" if self.is_infinite else f"{self.p:g}"


@dataclass(frozen=True, eq=False)
class WeightedSamples:
    """Function values with positive weights: a discretized measure space."""

    values: np.ndarray
    weights: np.ndarray

    def __init__(self, values, weights=None):
        v = np.atleast_1d(np.asarray(values, dtype=float)).ravel()
        w = np.ones_like(v) if weights is None else np.atleast_1d(np.asarray(weights, dtype=float)).ravel()
        if v.size == 0:
            raise ValueError("samples must not be empty")
        if v.shape != w.shape:
            raise ValueError(f"{v.size} values but {w.size} weights")
        if not np.all(np.isfinite(v)):
            raise ValueError("sample values must be finite")
        if not np.all(np.isfinite(w)) or np.any(w <= 0.0):
            raise ValueError("sample weights must be positive")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "weights", w)

    def __len__(self) -> int:
        return self.values.size

    @property
    def range(self) -> float:
        return float(self.values.max() - self.values.min())


@dataclass(frozen=True)
class PMeanResult:
    mean: float
    residual: float
    iterations: int
    bracket_width: float


def _h(d, p):
    # |d|^(p-2) d, zero at d = 0 for every p >= 1.
    if p == 1.0:
        return np.sign(d)
    return np.sign(d) * np.abs(d) ** (p - 1.0)


def char_residual(s: WeightedSamples, p, lam: float) -> float:
    """``sum_i w_i |u_i - lam|^(p-2) (u_i - lam)``; non-increasing in ``lam``."""
    p = Exponent.coerce(p)
    if p.is_infinite:
        raise ValueError("the p = inf mean has no characterization residual")
    return float(np.dot(s.weights, _h(s.values - lam, p.p)))


def _median_rows(values: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Weighted median of each row; midpoint of the optimal interval on ties."""
    order = np.argsort(values, axis=1, kind="stable")
    v = np.take_along_axis(values, order, axis=1)
    w = np.take_along_axis(np.broadcast_to(weights, values.shape), order, axis=1)
    cum = np.cumsum(w, axis=1)
    half = 0.5 * cum[:, -1:]
    tol = 1e-12 * cum[:, -1:]
    # The optimal interval runs from the first value reaching half the weight
    # to the first value passing it; both ends use the same slack so that
    # mirrored data give a mirrored median.
    lo = np.argmax(cum >= half - tol, axis=1)
    hi = np.argmax(cum > half + tol, axis=1)
    rows = np.arange(values.shape[0])
    return 0.5 * (v[rows, lo] + v[rows, hi])


def weighted_median(s: WeightedSamples) -> float:
    """Minimizer of ``sum_i w_i |u_i - lam|``.

    When a whole interval of values minimizes (even splits of the weight), the
    midpoint of that interval is returned.
    """
    return float(_median_rows(s.values[None, :], s.weights)[0])


def _solve_rows(values, weights, p, initial=None, method="bisect", rtol=BRACKET_RTOL):
    """Vectorized root of the normalized characterization residual per row.

    Returns (means, residuals, iterations, bracket widths) in normalized units.
    """
    lo = values.min(axis=1)
    hi = values.max(axis=1)
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    flat = half <= 0.0
    scale = np.where(flat, 1.0, half)
    u = (values - mid[:, None]) / scale[:, None]
    w = np.broadcast_to(weights, values.shape)
    wsum = w.sum(axis=1)

    a = np.full(values.shape[0], -1.0)
    b = np.full(values.shape[0], 1.0)
    if initial is None:
        lam = np.zeros(values.shape[0])
    else:
        lam = np.clip((np.asarray(initial, dtype=float) - mid) / scale, -1.0, 1.0)
    # Normalized range is 2, so the residual threshold is 1e-12 * W * 2^(p-1).
    gtol = RESIDUAL_RTOL * wsum * 2.0 ** (p - 1.0)
    btol = rtol * 2.0
    g = np.zeros_like(lam)
    active = ~flat
    it = 0
    while it < MAX_BISECTIONS and np.any(active):
        it += 1
        d = u - lam[:, None]
        g = np.sum(w * _h(d, p), axis=1)
        pos = g > 0
        a = np.where(pos, lam, a)
        b = np.where(pos, b, lam)
        if method == "newton":
            with np.errstate(divide="ignore", invalid="ignore"):
                dg = -(p - 1.0) * np.sum(w * np.abs(d) ** (p - 2.0), axis=1)
                cand = lam - g / dg
            ok = np.isfinite(cand) & (cand > a) & (cand < b)
            new = np.where(ok, cand, 0.5 * (a + b))
            converged = np.abs(new - lam) <= btol
        else:
            new = 0.5 * (a + b)
            converged = (b - a) <= btol
        converged |= np.abs(g) <= gtol
        lam = np.where(active, np.where(np.abs(g) <= gtol, lam, new), lam)
        active &= ~converged
    lam = np.where(flat, 0.0, lam)
    means = mid + scale * lam
    return means, g * np.where(flat, 0.0, scale ** (p - 1.0)), it, (b - a) * scale


def p_mean_batch(values, weights, p, initial=None, method: str = "bisect") -> np.ndarray:
    """p-means of many sample sets at once.

    ``values`` has shape (M, K); ``weights`` is (K,) or (M, K).  ``method`` is
    ``"bisect"`` or ``"newton"`` (bisection-safeguarded, useful with a good
    ``initial`` guess).
    """
    p = Exponent.coerce(p)
    values = np.atleast_2d(np.asarray(values, dtype=float))
    weights = np.asarray(weights, dtype=float)
    if p.kind is ExponentKind.FINITE and p.p > LARGE_P_CUTOFF:
        warnings.warn(f"p = {p.p} > {LARGE_P_CUTOFF:g} treated as p = inf", RuntimeWarning,
                      stacklevel=2)
        p = Exponent.infinity()
    if p.kind is ExponentKind.ONE:
        return _median_rows(values, np.broadcast_to(weights, values.shape))
    if p.kind is ExponentKind.TWO:
        w = np.broadcast_to(weights, values.shape)
        avg = np.sum(w * values, axis=1) / np.sum(w, axis=1)
        return np.clip(avg, values.min(axis=1), values.max(axis=1))
    if p.is_infinite:
        return 0.5 * (values.min(axis=1) + values.max(axis=1))
    return _solve_rows(values, weights, p.p, initial, method)[0]


def p_mean(s: WeightedSamples, p) -> PMeanResult:
    """The p-mean of a weighted sample set.

    Finite ``p`` uses bisection on ``[min u, max u]`` after mapping the values
    affinely onto ``[-1, 1]``; the result is mapped back before returning.
    """
    p = Exponent.coerce(p)
    if p.kind is ExponentKind.FINITE and p.p > LARGE_P_CUTOFF:
        warnings.warn(f"p = {p.p} > {LARGE_P_CUTOFF:g} treated as p = inf", RuntimeWarning,
                      stacklevel=2)
        p = Exponent.infinity()
    if p.kind is ExponentKind.ONE:
        mu = weighted_median(s)
        return PMeanResult(mu, char_residual(s, p, mu), 0, 0.0)
    if p.kind is ExponentKind.TWO:
        mu = float(np.dot(s.weights, s.values) / s.weights.sum())
        mu = min(max(mu, float(s.values.min())), float(s.values.max()))
        return PMeanResult(mu, char_residual(s, p, mu), 0, 0.0)
    if p.is_infinite:
        mu = 0.5 * float(s.values.min() + s.values.max())
        return PMeanResult(mu, 0.0, 0, 0.0)
    means, g, it, width = _solve_rows(s.values[None, :], s.weights, p.p)
    return PMeanResult(float(means[0]), float(g[0]), it, float(width[0]))


def p_mean_fibered(ff: FiberFunction, p) -> PMeanResult:
    """p-mean of a function reconstructed along the fibers of a fibered rule.

    The characterization residual is integrated fiber by fiber with the
    singularity at ``u = lam`` resolved, and its root found by Brent's method.
    For ``p = inf`` this returns the min-max mean of the interpolants.
    """
    p = Exponent.coerce(p)
    lo, hi = ff.minimum, ff.maximum
    if p.is_infinite or p.p > LARGE_P_CUTOFF:
        return PMeanResult(0.5 * (lo + hi), 0.0, 0, 0.0)
    if p.kind is ExponentKind.TWO:
        mu = ff.integrate(0.0, 1.0, True) / ff.integrate(0.0, 0.0, False)
        return PMeanResult(mu, 0.0, 0, 0.0)
    span = hi - lo
    if span <= 1e-15 * (1.0 + abs(hi)):
        return PMeanResult(0.5 * (lo + hi), 0.0, 0, 0.0)
    gamma = p.p - 1.0
    counter = [0]

    def g(lam):
        counter[0] += 1
        return ff.integrate(lam, gamma, True)

    mu = brentq(g, lo, hi, xtol=1e-15 * span, rtol=4.0 * np.finfo(float).eps, maxiter=MAX_BISECTIONS)
    return PMeanResult(float(mu), g(mu), counter[0], 1e-15 * span)


# ---------------------------------------------------------------------------
# extrema over balls, spheres and heat balls


def _tangent_basis(z):
    q = householder(z)
    return q[:, 1:]


def _polish_sphere(fun, z0, step):
    """Minimize ``fun`` over the unit sphere starting at the unit vector ``z0``."""
    n = z0.shape[0]
    basis = _tangent_basis(z0)

    def point(v):
        y = z0 + basis @ np.atleast_1d(v)
        return y / np.linalg.norm(y)

    if n == 2:
        res = minimize_scalar(lambda v: fun(point(v)), bounds=(-step, step), method="bounded",
                              options={"xatol": 1e-13})
        return point(res.x), float(res.fun)
    res = minimize(lambda v: fun(point(v)), np.zeros(n - 1), method="Nelder-Mead",
                   options={"xatol": 1e-12, "fatol": 1e-18, "maxiter": 4000,
                            "initial_simplex": np.vstack([np.zeros(n - 1), step * np.eye(n - 1)])})
    return point(res.x), float(res.fun)


def _polish_ball(fun, z0, step):
    """Minimize ``fun`` over the closed unit ball, starting from ``z0``."""
    n = z0.shape[0]

    def project(z):
        r = np.linalg.norm(z)
        return z / r if r > 1.0 else z

    res = minimize(lambda z: fun(project(z)), z0, method="Nelder-Mead",
                   options={"xatol": 1e-12, "fatol": 1e-18, "maxiter": 4000,
                            "initial_simplex": np.vstack([z0, z0 + step * np.eye(n)])})
    return project(res.x), float(res.fun)


def _sweep_rule(n: int) -> QuadratureRule:
    return unit_sphere_rule(n, 127 if n == 2 else 31)


def ball_extrema(u, x, eps: float, rule: QuadratureRule | None = None,
                 sphere_rule: QuadratureRule | None = None, polish: bool = True,
                 closed_ball: bool = True):
    """(min, max) of ``u`` over the closed ball (or sphere) ``B_eps(x)``.

    Candidates come from the ball rule nodes and a boundary sweep; with
    ``polish`` the best candidates are refined by local optimization over the
    ball and over its boundary sphere.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    n = x.shape[0]
    sphere_rule = sphere_rule or _sweep_rule(n)
    zs = [sphere_rule.points]
    if closed_ball and rule is not None:
        zs.append(rule.points)
    z = np.vstack(zs)
    vals = np.asarray(u(x[None, :] + eps * z), dtype=float)
    on_sphere = np.zeros(vals.shape[0], dtype=bool)
    on_sphere[: sphere_rule.points.shape[0]] = True
    out = []
    for sign in (1.0, -1.0):
        fun = lambda zz, s=sign: s * float(u(x[None, :] + eps * zz[None, :])[0])
        sv = sign * vals
        best = float(sv.min())
        if polish:
            step = 2.0 * np.pi / max(8, int(round(sphere_rule.points.shape[0] ** (1.0 / max(n - 1, 1)))))
            i = int(np.argmin(np.where(on_sphere, sv, np.inf)))
            zb = z[i] / np.linalg.norm(z[i])
            best = min(best, _polish_sphere(fun, zb, step)[1])
            if closed_ball and rule is not None:
                j = int(np.argmin(np.where(on_sphere, np.inf, sv)))
                best = min(best, _polish_ball(fun, z[j].copy(), 0.1)[1])
        out.append(sign * best)
    return out[0], out[1]


def _heat_boundary(n, tau, omega):
    sigma = np.exp(-tau) / (4.0 * np.pi)
    r = np.sqrt(2.0 * n * sigma * tau)
    return r * omega, sigma


def heat_extrema(u, x, t, eps: float, rule: QuadratureRule, polish: bool = True):
    """(min, max) of ``u`` over the closed heat ball ``E_eps(x, t)``."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    n = x.shape[0]
    omega = _sweep_rule(n).points
    taus = np.linspace(0.02, 6.0, 120)
    zb = (np.sqrt(2.0 * n * np.exp(-taus) / (4 * np.pi) * taus)[:, None, None] * omega[None]).reshape(-1, n)
    sb = np.repeat(np.exp(-taus) / (4 * np.pi), omega.shape[0])
    tb = np.repeat(taus, omega.shape[0])
    ob = np.tile(omega, (taus.shape[0], 1))
    z = np.vstack([zb, rule.points])
    s = np.concatenate([sb, rule.sigma])
    vals = np.asarray(u(x[None, :] + eps * z, t - eps**2 * s), dtype=float)
    nb = zb.shape[0]
    out = []
    for sign in (1.0, -1.0):
        sv = sign * vals
        best = float(sv.min())
        if polish:
            i = int(np.argmin(sv[:nb]))
            tau0, om0 = tb[i], ob[i]
            basis = _tangent_basis(om0)

            def fun(v, sign=sign, om0=om0, basis=basis):
                om = om0 + basis @ v[1:]
                om = om / np.linalg.norm(om)
                zz, ss = _heat_boundary(n, abs(v[0]), om)
                return sign * float(u(x[None, :] + eps * zz[None, :], np.array([t - eps**2 * ss]))[0])

            start = np.concatenate([[tau0], np.zeros(n - 1)])
            simplex = np.vstack([start, start + np.diag(np.concatenate([[0.2], np.full(n - 1, 0.1)]))])
            res = minimize(fun, start, method="Nelder-Mead",
                           options={"xatol": 1e-12, "fatol": 1e-18, "maxiter": 6000,
                                    "initial_simplex": simplex})
            best = min(best, float(res.fun))
        out.append(sign * best)
    return out[0], out[1]


# ---------------------------------------------------------------------------
# geometric means


def _axis_rotation(u, x, axis):
    if axis is None:
        return None
    if isinstance(axis, str):
        if axis != "auto":
            raise ValueError(f"unknown axis option {axis!r}")
        grad = getattr(u, "gradient", None)
        if grad is None:
            return None
        axis = grad(x)
    axis = np.asarray(axis, dtype=float)
    if not np.any(axis):
        return None
    return householder(axis)


def _mean_from_values(values, rule: QuadratureRule, p: Exponent) -> PMeanResult:
    if rule.fibers is not None:
        return p_mean_fibered(fiber_samples(rule, values), p)
    return p_mean(WeightedSamples(values, rule.weights), p)


def p_mean_ball(u, x, eps: float, p, rule: QuadratureRule,
                sphere_rule: QuadratureRule | None = None, polish: bool = True,
                axis="auto") -> PMeanResult:
    """``mu_p(eps, u)(x)``: the p-mean of ``u`` over ``B_eps(x)``.

    ``u`` maps an (M, N) array of points to M values.  For fibered rules the
    fibers are aligned with ``axis`` (by default the field's gradient at ``x``
    when the field exposes one).  For ``p = inf`` the extrema are refined on a
    boundary sphere sweep and by local optimization.
    """
    if rule.domain_kind is not DomainKind.BALL:
        raise ValueError("p_mean_ball needs a Ball rule")
    p = Exponent.coerce(p)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    rotation = _axis_rotation(u, x, axis) if rule.fibers is not None else None
    st = stencil(rule, x, eps, rotation=rotation)
    values = st.evaluate(u)
    if p.is_infinite or (p.kind is ExponentKind.FINITE and p.p > LARGE_P_CUTOFF):
        lo, hi = ball_extrema(u, x, eps, rule, sphere_rule, polish)
        lo, hi = min(lo, values.min()), max(hi, values.max())
        return PMeanResult(0.5 * (lo + hi), 0.0, 0, 0.0)
    return _mean_from_values(values, rule, p)


def p_mean_sphere(u, x, eps: float, p, rule: QuadratureRule, polish: bool = True,
                  axis="auto") -> PMeanResult:
    """Spherical p-mean of ``u`` over ``partial B_eps(x)``."""
    if rule.domain_kind is not DomainKind.SPHERE:
        raise ValueError("p_mean_sphere needs a Sphere rule")
    p = Exponent.coerce(p)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    rotation = _axis_rotation(u, x, axis) if rule.fibers is not None else None
    values = stencil(rule, x, eps, rotation=rotation).evaluate(u)
    if p.is_infinite or (p.kind is ExponentKind.FINITE and p.p > LARGE_P_CUTOFF):
        lo, hi = ball_extrema(u, x, eps, None, rule if rule.fibers is None else None, polish,
                              closed_ball=False)
        lo, hi = min(lo, values.min()), max(hi, values.max())
        return PMeanResult(0.5 * (lo + hi), 0.0, 0, 0.0)
    return _mean_from_values(values, rule, p)


def p_mean_heat(u, x, t: float, eps: float, p, rule: QuadratureRule, polish: bool = True,
                axis="auto") -> PMeanResult:
    """``pi_p(eps, u)(x, t)``: the p-mean over the heat ball with caloric weights.

    ``u`` maps (points (M, N), times (M,)) to M values; it is sampled at
    ``(x + eps z, t - eps^2 sigma)``.
    """
    if rule.domain_kind is not DomainKind.HEAT_BALL:
        raise ValueError("p_mean_heat needs a HeatBall rule")
    p = Exponent.coerce(p)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    rotation = None
    if rule.fibers is not None:
        if isinstance(axis, str) and axis == "auto" and hasattr(u, "gradient"):
            axis = u.gradient(x, t)
        rotation = _axis_rotation(u, x, None if isinstance(axis, str) else axis)
    st = stencil(rule, x, eps, t, rotation=rotation)
    values = st.evaluate(u)
    if p.is_infinite or (p.kind is ExponentKind.FINITE and p.p > LARGE_P_CUTOFF):
        lo, hi = heat_extrema(u, x, t, eps, rule, polish)
        lo, hi = min(lo, values.min()), max(hi, values.max())
        return PMeanResult(0.5 * (lo + hi), 0.0, 0, 0.0)
    return _mean_from_values(values, rule, p)


# ---------------------------------------------------------------------------
# alternative means used for comparison


def _sphere_values(u, x, eps, sphere_rule):
    return stencil(sphere_rule, np.atleast_1d(np.asarray(x, dtype=float)), eps).evaluate(u)


def alt_mean_mpr(u, x, eps: float, p, rule: QuadratureRule,
                 sphere_rule: QuadratureRule | None = None, polish: bool = True) -> float:
    """Convex combination of the ball average and the min-max mean.

    Coefficients ``(N+2)/(N+p)`` and ``(p-2)/(N+p)``; ``p = inf`` gives the
    min-max mean alone.
    """
    p = Exponent.coerce(p)
    if not p.p > 1.0:
        raise ValueError("this mean needs p > 1")
    n = rule.dimension
    lo, hi = ball_extrema(u, x, eps, rule, sphere_rule, polish)
    if p.is_infinite:
        return 0.5 * (lo + hi)
    avg = p_mean_ball(u, x, eps, Exponent.two(), rule).mean
    return (n + 2.0) / (n + p.p) * avg + 0.5 * (p.p - 2.0) / (n + p.p) * (lo + hi)


def _check_hr(p: float) -> float:
    p = float(p)
    if not p >= 1.0 or math.isinf(p):
        raise ValueError(f"this mean needs 1 <= p < inf, got {p}")
    return p


def alt_mean_hr1(u, x, eps: float, p: float, sphere_rule: QuadratureRule,
                 ball_rule: QuadratureRule | None = None, polish: bool = True) -> float:
    """``median over the sphere / p + (p-1)/(2p) * (min + max over the ball)``."""
    p = _check_hr(p)
    med = p_mean(WeightedSamples(_sphere_values(u, x, eps, sphere_rule), sphere_rule.weights),
                 Exponent.one()).mean
    lo, hi = ball_extrema(u, x, eps, ball_rule, sphere_rule, polish, closed_ball=ball_rule is not None)
    return med / p + (p - 1.0) / (2.0 * p) * (lo + hi)


def alt_mean_hr2(u, x, eps: float, p: float, sphere_rule: QuadratureRule) -> float:
    """``(2-p)/p * spherical median + 2(p-1)/p * spherical average``."""
    p = _check_hr(p)
    s = WeightedSamples(_sphere_values(u, x, eps, sphere_rule), sphere_rule.weights)
    med = p_mean(s, Exponent.one()).mean
    avg = p_mean(s, Exponent.two()).mean
    return (2.0 - p) / p * med + 2.0 * (p - 1.0) / p * avg


def mpr_mean_samples(values, weights, p: float, n: int) -> np.ndarray:
    """Discrete counterpart of :func:`alt_mean_mpr` for rows of samples."""
    values = np.atleast_2d(np.asarray(values, dtype=float))
    w = np.broadcast_to(np.asarray(weights, dtype=float), values.shape)
    avg = np.sum(w * values, axis=1) / np.sum(w, axis=1)
    mm = values.min(axis=1) + values.max(axis=1)
    if math.isinf(p):
        return 0.5 * mm
    return (n + 2.0) / (n + p) * avg + 0.5 * (p - 2.0) / (n + p) * mm
