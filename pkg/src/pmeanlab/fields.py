"""Catalog of built-in test fields with analytic derivatives.

Every field is a :class:`~pmeanlab.plaplace.SmoothField`.  The catalog is the
single registry shared by the command line, the tests and the examples; fields
are looked up by name with optional ``name:arg`` parameters, e.g. ``const:7``,
``linear:1,2`` or ``normpow:200``.
"""

from __future__ import annotations

import math

import numpy as np

from .plaplace import QuadraticProbe, SmoothField, probe_field

__all__ = [
    "constant",
    "linear",
    "quadratic",
    "norm_power",
    "radial_p_harmonic",
    "aronsson",
    "caloric",
    "harmonic_polynomial",
    "FIELD_NAMES",
    "make_field",
]


def constant(n: int, c: float = 0.0, parabolic: bool = False) -> SmoothField:
    c = float(c)
    zero = np.zeros(n)
    if parabolic:
        return SmoothField(lambda y, s: np.full(y.shape[0], c), n, grad=lambda x, t: zero.copy(),
                           hess=lambda x, t: np.zeros((n, n)), dt=lambda x, t: 0.0,
                           parabolic=True, name=f"const:{c:g}")
    return SmoothField(lambda y: np.full(y.shape[0], c), n, grad=lambda x: zero.copy(),
                       hess=lambda x: np.zeros((n, n)), name=f"const:{c:g}")


def linear(n: int, xi=None, parabolic: bool = False) -> SmoothField:
    """``xi . y``; ``xi`` defaults to ``e_1``."""
    xi = np.eye(n)[0] if xi is None else np.asarray(xi, dtype=float)
    if xi.shape != (n,):
        raise ValueError(f"linear field needs {n} coefficients, got {xi.size}")
    if parabolic:
        return SmoothField(lambda y, s: y @ xi, n, grad=lambda x, t: xi.copy(),
                           hess=lambda x, t: np.zeros((n, n)), dt=lambda x, t: 0.0,
                           parabolic=True, name="linear")
    return SmoothField(lambda y: y @ xi, n, grad=lambda x: xi.copy(),
                       hess=lambda x: np.zeros((n, n)), name="linear")


def quadratic(n: int, parabolic: bool = False) -> SmoothField:
    """The probe ``y_1 + |y|^2 / 2`` (identity Hessian, gradient ``e_1`` at 0)."""
    probe = QuadraticProbe(0.0, np.eye(n)[0], np.eye(n), 1.0 if parabolic else 0.0)
    f = probe_field(probe, np.zeros(n), 0.0 if parabolic else None)
    return f


def norm_power(n: int, k: float = 2.0) -> SmoothField:
    """``|y|^k``; smooth away from the origin (everywhere for even integer k)."""
    k = float(k)

    def grad(x):
        r = np.linalg.norm(x)
        return k * r ** (k - 2.0) * x if r > 0 else np.zeros(n)

    def hess(x):
        r = np.linalg.norm(x)
        if r == 0.0:
            if k == 2.0:
                return 2.0 * np.eye(n)
            raise ValueError("Hessian of |y|^k at the origin is undefined")
        u = x / r
        return k * r ** (k - 2.0) * (np.eye(n) + (k - 2.0) * np.outer(u, u))

    name = "normsq" if k == 2.0 else f"normpow:{k:g}"
    return SmoothField(lambda y: np.linalg.norm(y, axis=1) ** k if k != 2.0 else np.sum(y * y, axis=1),
                       n, grad=grad, hess=hess, name=name)


def radial_p_harmonic(n: int, p: float) -> SmoothField:
    """The radial solution of the normalized p-Laplace equation away from 0.

    ``|y|^((p-N)/(p-1))`` for ``p != N``, ``log |y|`` for ``p = N`` and ``|y|``
    for ``p = inf``.
    """
    p = float(p)
    if math.isinf(p):
        k = 1.0
    elif p == n:
        k = 0.0
    else:
        k = (p - n) / (p - 1.0)

    def value(y):
        r = np.linalg.norm(y, axis=1)
        return np.log(r) if k == 0.0 else r**k

    def grad(x):
        r = np.linalg.norm(x)
        return (1.0 if k == 0.0 else k) * r ** (k - 2.0) * x

    def hess(x):
        r = np.linalg.norm(x)
        u = x / r
        c = 1.0 if k == 0.0 else k
        return c * r ** (k - 2.0) * (np.eye(n) + (k - 2.0) * np.outer(u, u))

    return SmoothField(value, n, grad=grad, hess=hess, name=f"radial:{p:g}",
                       domain=lambda y: np.linalg.norm(y, axis=1) > 0.0,
                       clearance=lambda x: float(np.linalg.norm(x)))


def aronsson(n: int = 2) -> SmoothField:
    """``|y_1|^(4/3) - |y_2|^(4/3)``: infinity-harmonic, C^2 off the axes."""
    if n != 2:
        raise ValueError("the Aronsson field is two-dimensional")
    c = 4.0 / 3.0

    def grad(x):
        return c * np.array([np.sign(x[0]) * abs(x[0]) ** (1 / 3), -np.sign(x[1]) * abs(x[1]) ** (1 / 3)])

    def hess(x):
        if x[0] == 0.0 or x[1] == 0.0:
            raise ValueError("the Aronsson field is not C^2 on the axes")
        return (4.0 / 9.0) * np.diag([abs(x[0]) ** (-2 / 3), -abs(x[1]) ** (-2 / 3)])

    return SmoothField(lambda y: np.abs(y[:, 0]) ** c - np.abs(y[:, 1]) ** c, 2,
                       grad=grad, hess=hess, name="aronsson",
                       domain=lambda y: (y[:, 0] != 0.0) & (y[:, 1] != 0.0),
                       clearance=lambda x: float(min(abs(x[0]), abs(x[1]))))


def caloric(n: int) -> SmoothField:
    """``|y|^2 / (2N) + s``, a solution of the heat equation."""
    return SmoothField(lambda y, s: np.sum(y * y, axis=1) / (2.0 * n) + s, n,
                       grad=lambda x, t: x / n, hess=lambda x, t: np.eye(n) / n,
                       dt=lambda x, t: 1.0, parabolic=True, name="caloric")


def harmonic_polynomial(n: int) -> SmoothField:
    """``y_1^2 - y_2^2``."""
    if n < 2:
        raise ValueError("the harmonic polynomial needs N >= 2")

    def grad(x):
        g = np.zeros(n)
        g[0], g[1] = 2.0 * x[0], -2.0 * x[1]
        return g

    hess = np.zeros((n, n))
    hess[0, 0], hess[1, 1] = 2.0, -2.0
    return SmoothField(lambda y: y[:, 0] ** 2 - y[:, 1] ** 2, n, grad=grad,
                       hess=lambda x: hess.copy(), name="harmonic")


FIELD_NAMES = ("const", "linear", "quadratic", "normsq", "normpow", "radial",
               "aronsson", "caloric", "harmonic")


def _floats(arg: str):
    return [float(v) for v in arg.split(",") if v.strip()]


def make_field(name: str, n: int, p: float | None = None, parabolic: bool = False) -> SmoothField:
    """Build a catalog field from ``name`` or ``name:arg``.

    ``radial`` uses the exponent ``p`` unless an explicit ``radial:p`` is given.
    """
    base, _, arg = name.partition(":")
    base = base.strip().lower()
    if base == "const":
        return constant(n, float(arg) if arg else 0.0, parabolic)
    if base == "linear":
        return linear(n, _floats(arg) if arg else None, parabolic)
    if base in ("quadratic", "probe"):
        return quadratic(n, parabolic)
    if base == "normsq":
        return norm_power(n, 2.0)
    if base == "normpow":
        return norm_power(n, float(arg) if arg else 2.0)
    if base == "radial":
        q = float(arg) if arg else p
        if q is None:
            raise ValueError("radial field needs an exponent")
        return radial_p_harmonic(n, q)
    if base == "aronsson":
        return aronsson(n)
    if base == "caloric":
        return caloric(n)
    if base == "harmonic":
        return harmonic_polynomial(n)
    raise ValueError(f"unknown field {name!r}; choose from {', '.join(FIELD_NAMES)}")
