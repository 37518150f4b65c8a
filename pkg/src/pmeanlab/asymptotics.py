"""Empirical eps^2 coefficients of the p-means and comparison with theory.

For a sweep of radii the normalized defect

    delta_eps = (mean(eps) - u(x)) / eps^2

is computed and extrapolated to ``eps -> 0``.  The limit is compared with the
closed-form coefficient of the normalized p-Laplacian.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .measure import (
    DomainKind,
    QuadratureRule,
    heat_ball_rule,
    stencil,
    unit_ball_rule,
    unit_sphere_rule,
)
from .plaplace import (
    QuadraticProbe,
    SmoothField,
    ZeroGradientError,
    elliptic_coefficient,
    parabolic_coefficient,
    probe_field,
)
from .pmean import Exponent, ExponentKind, p_mean_ball, p_mean_heat, p_mean_sphere

__all__ = [
    "DEFAULT_EPSILONS",
    "StencilDomainError",
    "FitResult",
    "AsymptoticReport",
    "default_rule",
    "delta_curve",
    "extrapolate",
    "fit_limit",
    "verify_elliptic",
    "verify_parabolic",
    "amvp_residual_sweep",
]

DEFAULT_EPSILONS = (0.2, 0.1, 0.05, 0.025)
REL_FLOOR = 1e-12
ESCALATION_TOL = 1e-8
ELLIPTIC_ORDERS = (16, 24, 32)
HEAT_ORDERS = (24, 32, 48)
# |delta_eps| may grow by round-off, roughly machine epsilon * |u| / eps^2.
MONOTONE_SLACK = 1e-12


class StencilDomainError(ValueError):
    """A stencil point falls outside the field's domain."""


# ---------------------------------------------------------------------------
# fitting


@dataclass(frozen=True)
class FitResult:
    limit: float
    coefficients: tuple
    residual: float
    richardson: float
    model: str


def _design(eps, model):
    if model == "linear":
        return np.vstack([np.ones_like(eps), eps]).T
    if model == "even":
        cols = [np.ones_like(eps), eps**2]
        if eps.size >= 3:
            cols.append(eps**4)
        return np.vstack(cols).T
    raise ValueError(f"unknown fit model {model!r}")


def fit_limit(epsilons, deltas, model: str = "even") -> FitResult:
    """Least-squares extrapolation of ``delta_eps`` to ``eps = 0``.

    ``model="linear"`` fits ``d0 + c eps``.  ``model="even"`` fits
    ``d0 + c1 eps^2 + c2 eps^4``: ball, sphere and heat-ball means are odd under
    ``z -> -z`` combined with ``u -> -u``, so ``delta_eps`` of a smooth field is
    an even function of ``eps``.  The Richardson value uses the two smallest
    radii with the leading correction of the chosen model.
    """
    eps = np.asarray(epsilons, dtype=float)
    d = np.asarray(deltas, dtype=float)
    if eps.size < 3:
        raise ValueError("extrapolation needs at least 3 sweep points")
    if eps.shape != d.shape:
        raise ValueError("epsilons and deltas differ in length")
    design = _design(eps, model)
    coef, *_ = np.linalg.lstsq(design, d, rcond=None)
    resid = float(np.linalg.norm(design @ coef - d))
    order = np.argsort(eps)
    e1, e2 = eps[order[0]], eps[order[1]]
    d1, d2 = d[order[0]], d[order[1]]
    k = 1.0 if model == "linear" else 2.0
    rich = float((e2**k * d1 - e1**k * d2) / (e2**k - e1**k))
    return FitResult(float(coef[0]), tuple(float(c) for c in coef), resid, rich, model)


def extrapolate(epsilons, deltas, model: str = "linear") -> float:
    """Fitted ``delta_0`` of the sweep (least squares, default ``d0 + c eps``)."""
    return fit_limit(epsilons, deltas, model).limit


# ---------------------------------------------------------------------------
# reports


@dataclass(frozen=True)
class AsymptoticReport:
    """One eps-sweep with its fitted limit and the theoretical coefficient."""

    kind: str
    geometry: str
    p: str
    dimension: int
    x: tuple
    t: float | None
    epsilons: tuple
    deltas: tuple
    fitted_limit: float
    theoretical: float
    abs_error: float
    rel_error: float
    fit_diagnostics: dict = field(default_factory=dict)
    rule_order: int = 0

    @property
    def monotone(self) -> bool:
        """Whether ``|delta_eps|`` is non-increasing as ``eps`` decreases."""
        mags = np.abs(np.asarray(self.deltas))
        return bool(np.all(mags[1:] <= mags[:-1] + MONOTONE_SLACK))

    def passed(self, rel_tol: float) -> bool:
        return self.rel_error <= rel_tol

    def to_dict(self) -> dict:
        data = asdict(self)
        data["x"] = list(self.x)
        data["epsilons"] = list(self.epsilons)
        data["deltas"] = list(self.deltas)
        data["monotone"] = self.monotone
        return data

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["row", "epsilon", "delta", "fitted_limit", "theoretical", "abs_error", "rel_error"])
        for e, d in zip(self.epsilons, self.deltas):
            w.writerow(["sweep", repr(e), repr(d), "", "", "", ""])
        w.writerow(["summary", "", "", repr(self.fitted_limit), repr(self.theoretical),
                    repr(self.abs_error), repr(self.rel_error)])
        return buf.getvalue()


def _errors(fitted, theoretical):
    abs_err = abs(fitted - theoretical)
    return abs_err, abs_err / max(abs(theoretical), REL_FLOOR)


# ---------------------------------------------------------------------------
# rules


def default_rule(geometry: str, n: int, p, order: int | None = None) -> QuadratureRule:
    """The rule used by the sweeps for a geometry and exponent.

    ``p = 2`` and ``p = inf`` only need moments or extrema, so they get the
    polynomial-exact spherical layout; other exponents get the fibered layout,
    which resolves the kink of ``|u - lam|^(p-2)(u - lam)`` along each fiber.
    """
    p = Exponent.coerce(p)
    geometry = _geometry(geometry)
    layout = "spherical" if p.kind in (ExponentKind.TWO, ExponentKind.INFINITY) else "fibered"
    if geometry == "HeatBall":
        return heat_ball_rule(n, order or HEAT_ORDERS[0], layout=layout)
    order = order or ELLIPTIC_ORDERS[0]
    if geometry == "Ball":
        return unit_ball_rule(n, order, layout=layout)
    return unit_sphere_rule(n, order, layout=layout)


def _geometry(geometry) -> str:
    g = str(getattr(geometry, "value", geometry))
    aliases = {"ball": "Ball", "sphere": "Sphere", "heatball": "HeatBall", "heat": "HeatBall"}
    g = aliases.get(g.lower(), g)
    if g not in ("Ball", "Sphere", "HeatBall"):
        raise ValueError(f"unknown geometry {geometry!r}")
    return g


def _mean(field_, x, t, eps, p, rule):
    kind = rule.domain_kind
    if kind is DomainKind.BALL:
        return p_mean_ball(field_, x, eps, p, rule).mean
    if kind is DomainKind.SPHERE:
        return p_mean_sphere(field_, x, eps, p, rule).mean
    return p_mean_heat(field_, x, t, eps, p, rule).mean


# ---------------------------------------------------------------------------
# sweeps


def _as_field(field_or_probe, x, t=None):
    if isinstance(field_or_probe, QuadraticProbe):
        return probe_field(field_or_probe, x, t), field_or_probe.value
    f = field_or_probe
    return f, f.value(x, t)


def _check_epsilons(epsilons):
    eps = tuple(float(e) for e in epsilons)
    if any(e <= 0 for e in eps):
        raise ValueError("radii must be positive")
    if any(b >= a for a, b in zip(eps, eps[1:])):
        raise ValueError("radii must be strictly decreasing")
    return eps


def delta_curve(field_, x, p, geometry="Ball", rule: QuadratureRule | None = None,
                epsilons=DEFAULT_EPSILONS, t: float | None = None, value: float | None = None):
    """``delta_eps = (mean(eps) - u(x)) / eps^2`` for each radius."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    eps = _check_epsilons(epsilons)
    geometry = _geometry(geometry)
    if rule is None:
        rule = default_rule(geometry, x.size, p)
    grad = field_.gradient(x, t) if field_.parabolic else field_.gradient(x)
    if not np.any(grad):
        raise ZeroGradientError(f"gradient of {field_.name} vanishes at {x.tolist()}")
    st = stencil(rule, x, eps[0], t)
    reach = eps[0]
    if geometry == "HeatBall":
        # widest spatial section of the heat ball, at sigma = 1/(4 pi e)
        reach = eps[0] * np.sqrt(x.size / (2.0 * np.pi * np.e))
    if not np.all(field_.contains(st.evaluation_points)) or _reaches(field_, x, reach):
        raise StencilDomainError(f"the radius-{eps[0]} stencil at {x.tolist()} leaves the domain "
                                 f"of {field_.name}")
    u0 = field_.value(x, t) if value is None else value
    shifted = _Shifted(field_, u0)
    return [_mean(shifted, x, t, e, p, rule) / e**2 for e in eps]


def _escalated(field_, x, t, p, geometry, eps, orders, value):
    """Raise the rule order until ``delta`` at the largest radius settles.

    Returns the last rule tried and whether the change fell below the
    escalation tolerance before the orders ran out.
    """
    n = x.size
    prev = None
    for order in orders:
        rule = default_rule(geometry, n, p, order)
        d = _mean(field_, x, t, eps[0], p, rule) / eps[0] ** 2
        if prev is not None and abs(d - prev) < ESCALATION_TOL:
            return rule, True
        prev = d
    return rule, False


def _reaches(field_, x, radius):
    check = getattr(field_, "reaches_singularity", None)
    return bool(check(x, radius)) if check is not None else False


class _Shifted:
    """``u - c`` with the derivatives of ``u``; keeps round-off of large
    values out of the differences ``mean - u(x)``."""

    def __init__(self, f, c):
        self.f, self.c = f, c
        self.gradient = f.gradient
        self.parabolic = f.parabolic

    def __call__(self, points, times=None):
        return self.f(points, times) - self.c if self.parabolic else self.f(points) - self.c


def _sweep(kind, field_or_probe, x, t, p, geometry, rule, epsilons, theoretical_fn, model):
    x = np.atleast_1d(np.asarray(x, dtype=float))
    p = Exponent.coerce(p)
    eps = _check_epsilons(epsilons)
    f, u0 = _as_field(field_or_probe, x, t)
    escalation = None
    if rule is None:
        orders = HEAT_ORDERS if geometry == "HeatBall" else ELLIPTIC_ORDERS
        rule, escalation = _escalated(_Shifted(f, u0), x, t, p, geometry, eps, orders, u0)
    deltas = delta_curve(f, x, p, geometry, rule, eps, t, u0)
    fit = fit_limit(eps, deltas, model)
    linear = fit_limit(eps, deltas, "linear")
    theoretical = theoretical_fn(f, x, t, p)
    abs_err, rel_err = _errors(fit.limit, theoretical)
    diagnostics = {
        "model": fit.model,
        "coefficients": list(fit.coefficients),
        "residual": fit.residual,
        "richardson": fit.richardson,
        "linear_model_limit": linear.limit,
        "linear_model_residual": linear.residual,
        "escalation_converged": escalation,
    }
    return AsymptoticReport(kind, geometry, str(p), x.size, tuple(x.tolist()), t, eps,
                            tuple(float(d) for d in deltas), fit.limit, float(theoretical),
                            abs_err, rel_err, diagnostics, rule.order)


def _derivatives(f: SmoothField, x, t):
    if isinstance(f, SmoothField) and f.parabolic:
        return f.gradient(x, t), f.hessian(x, t), f.time_derivative(x, t)
    return f.gradient(x), f.hessian(x), 0.0


def verify_elliptic(field_or_probe, x, p, geometry="Ball", rule: QuadratureRule | None = None,
                    epsilons=DEFAULT_EPSILONS, model: str = "even") -> AsymptoticReport:
    """Compare the fitted ``delta_0`` of a ball or sphere sweep with
    ``Delta_p^n u(x) / (2 (N + p))`` (ball) or ``/ (2 (N + p - 2))`` (sphere).

    Without ``rule`` the order is escalated until ``delta`` at the largest
    radius changes by less than 1e-8.
    """
    geometry = _geometry(geometry)
    if geometry == "HeatBall":
        raise ValueError("use verify_parabolic for heat balls")

    def theory(f, x, t, p):
        xi, a, _ = _derivatives(f, x, t)
        return elliptic_coefficient((a, xi), p, x.size, geometry)

    return _sweep("elliptic", field_or_probe, x, None, p, geometry, rule, epsilons, theory, model)


def verify_parabolic(field_or_probe, x, t: float, p, rule: QuadratureRule | None = None,
                     epsilons=DEFAULT_EPSILONS, model: str = "even") -> AsymptoticReport:
    """Compare the fitted ``delta_0`` of a heat-ball sweep with the parabolic
    coefficient ``(1/4pi)(1-2/(N+p))^(1+(N+p)/2) {-u_t + N/(N+p-2) Delta_p^n u}``."""

    def theory(f, x, t, p):
        xi, a, slope = _derivatives(f, x, t)
        return parabolic_coefficient((a, xi, slope), p, x.size)

    return _sweep("parabolic", field_or_probe, x, float(t), p, "HeatBall", rule, epsilons,
                  theory, model)


def amvp_residual_sweep(field_, x, p, geometry="Ball", rule: QuadratureRule | None = None,
                        epsilons=DEFAULT_EPSILONS, t: float | None = None,
                        model: str = "even") -> AsymptoticReport:
    """Sweep for a field expected to satisfy the asymptotic mean value property.

    The theoretical value is 0; judge the report by ``abs_error`` (= |delta_0|)
    and :attr:`AsymptoticReport.monotone`.
    """
    geometry = _geometry(geometry)
    kind = "amvp-parabolic" if geometry == "HeatBall" else "amvp"
    return _sweep(kind, field_, x, t, p, geometry, rule, epsilons,
                  lambda f, x, t, p: 0.0, model)
