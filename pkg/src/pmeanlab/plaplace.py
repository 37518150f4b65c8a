"""The normalized p-Laplacian and the eps^2 coefficients of the p-means.

For a C^2 function with nonzero gradient ``xi`` and Hessian ``A`` at ``x``,

    Delta_p^n u(x) = tr A + (p - 2) <A xi, xi> / |xi|^2        (p finite)
    Delta_inf^n u(x) = <A xi, xi> / |xi|^2

and the p-means expand as ``u(x) + coefficient * eps^2 + o(eps^2)`` with the
coefficients returned by :func:`elliptic_coefficient` and
:func:`parabolic_coefficient`.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .measure import householder, unit_ball_rule
from .pmean import Exponent

__all__ = [
    "ZeroGradientError",
    "FiniteDifferenceWarning",
    "QuadraticProbe",
    "SmoothField",
    "normalized_p_laplacian",
    "elliptic_coefficient",
    "parabolic_coefficient",
    "case_one_coefficient",
    "case_one_coefficient_quadrature",
    "probe_field",
    "random_probe",
]

_MACHINE_EPS = np.finfo(float).eps
FD_STEP = _MACHINE_EPS ** (1.0 / 3.0)
FD_HESSIAN_STEP = _MACHINE_EPS ** 0.25
FD_RTOL = 1e-6


class ZeroGradientError(ValueError):
    """The coefficient is undefined because the gradient vanishes."""


class FiniteDifferenceWarning(RuntimeWarning):
    """A finite-difference derivative failed its step-halving check."""


@dataclass(frozen=True, eq=False)
class QuadraticProbe:
    """``q(y, s) = value + xi.(y - x) + a (s - t) + <A (y - x), y - x> / 2``."""

    value: float
    gradient: np.ndarray
    hessian: np.ndarray
    time_slope: float = 0.0

    def __post_init__(self):
        xi = np.atleast_1d(np.asarray(self.gradient, dtype=float)).copy()
        a = np.atleast_2d(np.asarray(self.hessian, dtype=float)).copy()
        if a.shape != (xi.size, xi.size):
            raise ValueError(f"hessian shape {a.shape} does not match gradient size {xi.size}")
        if np.max(np.abs(a - a.T), initial=0.0) > 1e-14 * max(1.0, np.max(np.abs(a))):
            raise ValueError("hessian must be symmetric")
        xi.setflags(write=False)
        a.setflags(write=False)
        object.__setattr__(self, "gradient", xi)
        object.__setattr__(self, "hessian", a)
        object.__setattr__(self, "value", float(self.value))
        object.__setattr__(self, "time_slope", float(self.time_slope))

    @property
    def dimension(self) -> int:
        return self.gradient.size


def random_probe(rng: np.random.Generator, n: int, parabolic: bool = False) -> QuadraticProbe:
    """A random probe in the small-radius regime of unit-scale sweeps.

    ``|xi|`` is uniform on [1, 2] and the spectral norm of ``A`` uniform on
    [0.5, 1], so ``eps |A| / |xi| <= eps``.
    """
    xi = rng.standard_normal(n)
    xi *= rng.uniform(1.0, 2.0) / np.linalg.norm(xi)
    b = rng.standard_normal((n, n))
    a = 0.5 * (b + b.T)
    a *= rng.uniform(0.5, 1.0) / np.linalg.norm(a, 2)
    return QuadraticProbe(float(rng.standard_normal()), xi, a,
                          float(rng.uniform(-1.0, 1.0)) if parabolic else 0.0)


@dataclass(frozen=True, eq=False)
class SmoothField:
    """A C^2 scalar field with optional analytic derivatives.

    ``func`` maps points of shape (M, N) to M values, or ``(points, times)``
    to M values when ``parabolic``.  Missing derivatives are replaced by central
    finite differences, checked against a halved step.
    """

    func: Callable
    dimension: int
    grad: Optional[Callable] = None
    hess: Optional[Callable] = None
    dt: Optional[Callable] = None
    parabolic: bool = False
    name: str = "field"
    domain: Optional[Callable] = field(default=None, repr=False)
    clearance: Optional[Callable] = field(default=None, repr=False)

    def __call__(self, points, times=None):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if self.parabolic:
            if times is None:
                raise ValueError(f"{self.name} is parabolic and needs times")
            return np.asarray(self.func(pts, np.broadcast_to(np.asarray(times, float), pts.shape[:1])),
                              dtype=float)
        return np.asarray(self.func(pts), dtype=float)

    def value(self, x, t=None) -> float:
        return float(self(np.atleast_1d(np.asarray(x, float))[None, :],
                          None if t is None else np.array([t]))[0])

    def contains(self, points) -> np.ndarray:
        """Whether the points lie where the field is defined."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if self.domain is None:
            return np.ones(pts.shape[0], dtype=bool)
        return np.asarray(self.domain(pts), dtype=bool)

    def reaches_singularity(self, x, radius: float) -> bool:
        """Whether the closed ball of ``radius`` around ``x`` meets the set where
        the field fails to be C^2 (only known when ``clearance`` is given)."""
        if self.clearance is None:
            return False
        return float(self.clearance(np.asarray(x, dtype=float))) <= radius

    # -- derivatives --------------------------------------------------------

    def _scalar(self, t):
        if self.parabolic:
            return lambda pts: self(pts, np.full(pts.shape[0], t))
        return self

    def gradient(self, x, t=None) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if self.grad is not None:
            return np.asarray(self.grad(x) if not self.parabolic else self.grad(x, t), dtype=float)
        f = self._scalar(t)
        h = FD_STEP * (1.0 + np.linalg.norm(x))
        return _checked(lambda hh: _fd_gradient(f, x, hh), h, "gradient", self.name)

    def hessian(self, x, t=None) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if self.hess is not None:
            return np.asarray(self.hess(x) if not self.parabolic else self.hess(x, t), dtype=float)
        f = self._scalar(t)
        h = FD_HESSIAN_STEP * (1.0 + np.linalg.norm(x))
        return _checked(lambda hh: _fd_hessian(f, x, hh), h, "hessian", self.name)

    def time_derivative(self, x, t) -> float:
        if not self.parabolic:
            return 0.0
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if self.dt is not None:
            return float(self.dt(x, t))
        h = FD_STEP * (1.0 + abs(t))

        def est(hh):
            up = self(x[None, :], np.array([t + hh]))[0]
            dn = self(x[None, :], np.array([t - hh]))[0]
            return np.array([(up - dn) / (2.0 * hh)])

        return float(_checked(est, h, "time derivative", self.name)[0])


def _fd_gradient(f, x, h):
    n = x.size
    e = h * np.eye(n)
    vals = f(np.vstack([x + e, x - e]))
    return (vals[:n] - vals[n:]) / (2.0 * h)


def _fd_hessian(f, x, h):
    n = x.size
    e = h * np.eye(n)
    pts = [x]
    for i in range(n):
        for j in range(n):
            pts += [x + e[i] + e[j], x + e[i] - e[j], x - e[i] + e[j], x - e[i] - e[j]]
    vals = f(np.vstack(pts))
    quads = vals[1:].reshape(n, n, 4)
    hess = (quads[..., 0] - quads[..., 1] - quads[..., 2] + quads[..., 3]) / (4.0 * h * h)
    return 0.5 * (hess + hess.T)


def _checked(estimate, h, what, name):
    full = estimate(h)
    half = estimate(0.5 * h)
    scale = max(np.max(np.abs(half)), 1.0)
    if np.max(np.abs(full - half)) > FD_RTOL * scale:
        warnings.warn(f"finite-difference {what} of {name} is unreliable at this point "
                      f"(step-halving mismatch {np.max(np.abs(full - half)):.2e})",
                      FiniteDifferenceWarning, stacklevel=3)
    # Richardson combination of the two second-order estimates.
    return (4.0 * half - full) / 3.0


def _rayleigh(a, xi) -> float:
    xi = np.asarray(xi, dtype=float)
    norm2 = float(np.dot(xi, xi))
    if norm2 == 0.0:
        raise ZeroGradientError("the normalized p-Laplacian needs a nonzero gradient")
    return float(xi @ np.asarray(a, dtype=float) @ xi) / norm2


def normalized_p_laplacian(a, xi, p) -> float:
    """``tr A + (p-2) <A xi, xi>/|xi|^2``; the Rayleigh quotient alone for ``p = inf``."""
    p = Exponent.coerce(p)
    ray = _rayleigh(a, xi)
    if p.is_infinite:
        return ray
    return float(np.trace(np.asarray(a, dtype=float))) + (p.p - 2.0) * ray


def _probe_data(probe):
    if isinstance(probe, QuadraticProbe):
        return probe.hessian, probe.gradient, probe.time_slope
    a, xi, *rest = probe
    return np.asarray(a, float), np.asarray(xi, float), float(rest[0]) if rest else 0.0


def elliptic_coefficient(probe: QuadraticProbe, p, n: int | None = None,
                         geometry: str = "Ball") -> float:
    """Coefficient of ``eps^2`` in the ball or sphere p-mean of the probe.

    Ball: ``Delta_p^n / (2 (N + p))``.  Sphere: ``Delta_p^n / (2 (N + p - 2))``.
    For ``p = inf`` both are the limit ``<A xi, xi> / (2 |xi|^2)``.
    """
    a, xi, _ = _probe_data(probe)
    n = xi.size if n is None else int(n)
    p = Exponent.coerce(p)
    geometry = str(getattr(geometry, "value", geometry))
    if geometry not in ("Ball", "Sphere"):
        raise ValueError(f"unknown geometry {geometry!r}")
    if p.is_infinite:
        return 0.5 * _rayleigh(a, xi)
    shift = 0.0 if geometry == "Ball" else 2.0
    denom = n + p.p - shift
    if denom <= 0.0:
        raise ValueError(f"no spherical coefficient for N={n}, p={p}")
    return normalized_p_laplacian(a, xi, p) / (2.0 * denom)


def parabolic_coefficient(probe: QuadraticProbe, p, n: int | None = None) -> float:
    """Coefficient of ``eps^2`` in the heat-ball p-mean of the probe.

    ``(1/4pi) (1 - 2/(N+p))^(1+(N+p)/2) {-a + N/(N+p-2) Delta_p^n}``; for
    ``p = inf`` the limit ``(1/(4 pi e)) (-a + N <A xi, xi>/|xi|^2)``.
    """
    a, xi, slope = _probe_data(probe)
    n = xi.size if n is None else int(n)
    p = Exponent.coerce(p)
    if p.is_infinite:
        return (-slope + n * _rayleigh(a, xi)) / (4.0 * math.pi * math.e)
    if n + p.p - 2.0 <= 0.0:
        raise ValueError(f"no parabolic coefficient for N={n}, p={p}")
    s = n + p.p
    factor = (1.0 - 2.0 / s) ** (1.0 + 0.5 * s) / (4.0 * math.pi)
    return factor * (-slope + n / (s - 2.0) * normalized_p_laplacian(a, xi, p))


def case_one_coefficient(probe: QuadraticProbe) -> float:
    """The ``p = 1`` ball coefficient computed in rotated coordinates.

    With ``R e_1 = xi/|xi|`` and ``C = R^T A R`` this is
    ``(tr C - C_11) / (2 (N + 1))``, an independent route to the value of
    :func:`elliptic_coefficient` at ``p = 1``.
    """
    a, xi, _ = _probe_data(probe)
    if not np.any(xi):
        raise ZeroGradientError("the coefficient needs a nonzero gradient")
    r = householder(xi)
    c = r.T @ a @ r
    return float(np.trace(c) - c[0, 0]) / (2.0 * (xi.size + 1))


def case_one_coefficient_quadrature(probe: QuadraticProbe, order: int = 4) -> float:
    """Same value as :func:`case_one_coefficient`, as the average of
    ``<C z', z'>/2`` over the unit ball of the hyperplane orthogonal to ``xi``."""
    a, xi, _ = _probe_data(probe)
    if not np.any(xi):
        raise ZeroGradientError("the coefficient needs a nonzero gradient")
    n = xi.size
    r = householder(xi)
    c = (r.T @ a @ r)[1:, 1:]
    rule = unit_ball_rule(n - 1, order)
    z = rule.points
    vals = 0.5 * np.einsum("ij,jk,ik->i", z, c, z)
    return rule.integrate(vals) / rule.total_weight


def probe_field(probe: QuadraticProbe, center, t0: float | None = None) -> SmoothField:
    """The probe as an evaluable field with exact derivatives.

    With ``t0`` the field is parabolic and includes the ``a (s - t0)`` term.
    """
    x0 = np.atleast_1d(np.asarray(center, dtype=float)).copy()
    c, xi, a, slope = probe.value, probe.gradient, probe.hessian, probe.time_slope
    if x0.size != xi.size:
        raise ValueError("center and probe dimensions differ")

    def spatial(pts):
        d = pts - x0
        return c + d @ xi + 0.5 * np.einsum("ij,jk,ik->i", d, a, d)

    if t0 is None:
        return SmoothField(spatial, xi.size, grad=lambda x: xi + a @ (x - x0),
                           hess=lambda x: a.copy(), name="probe")
    t0 = float(t0)
    return SmoothField(lambda pts, s: spatial(pts) + slope * (s - t0), xi.size,
                       grad=lambda x, t: xi + a @ (x - x0), hess=lambda x, t: a.copy(),
                       dt=lambda x, t: slope, parabolic=True, name="probe")
