"""Closed-form integrals used as ground truth for quadrature and coefficients.

All ratios are weighted by ``|xi . y|^(p-2)`` on the unit sphere, the unit ball
or the unit heat ball (with the caloric measure ``|z|^2/sigma^2 dz dsigma``).
"""

from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .fibers import fiber_samples
from .measure import (
    HEAT_BALL_MASS,
    DomainKind,
    QuadratureRule,
    heat_ball_rule,
    householder,
    sphere_area,
    unit_ball_rule,
    unit_sphere_rule,
)

__all__ = [
    "FormulaId",
    "OracleRangeError",
    "OracleValue",
    "Discrepancy",
    "sphere_ratio",
    "ball_ratio",
    "heat_star",
    "heat_sigma_ratio",
    "heat_quadratic_ratio",
    "sphere_monomial",
    "ball_monomial",
    "oracle",
    "quadrature_vs_oracle",
    "discrepancy_csv",
    "SuiteSettings",
    "SuiteResult",
    "random_spd",
    "run_oracle_suite",
]


class FormulaId(str, enum.Enum):
    INT1 = "Int1"
    INT2 = "Int2"
    C_ALPHA_BETA = "CAlphaBeta"
    INT1_PARABOLIC = "Int1Parabolic"
    INT2_PARABOLIC = "Int2Parabolic"


class OracleRangeError(ValueError):
    """Parameters outside the validity range of a closed form."""


@dataclass(frozen=True)
class OracleValue:
    value: float
    formula_id: FormulaId
    parameters: dict = field(default_factory=dict)


def _check_p(p) -> float:
    p = float(p)
    if not (1.0 < p < math.inf):
        raise OracleRangeError(f"closed form holds for 1 < p < inf, got p={p}")
    return p


def _bracket(a, xi, p: float) -> float:
    a = np.asarray(a, dtype=float)
    xi = np.asarray(xi, dtype=float)
    norm2 = float(xi @ xi)
    if norm2 == 0.0:
        raise OracleRangeError("xi must be nonzero")
    return float(np.trace(a)) + (p - 2.0) * float(xi @ a @ xi) / norm2


def sphere_ratio(a, xi, p, n: int | None = None) -> float:
    """``int_S |xi.y|^(p-2) <Ay,y> dS / int_S |xi.y|^(p-2) dS``
    ``= {tr A + (p-2) <A xi,xi>/|xi|^2} / (N+p-2)``."""
    p = _check_p(p)
    n = np.asarray(xi).size if n is None else n
    return _bracket(a, xi, p) / (n + p - 2.0)


def ball_ratio(a, xi, p, n: int | None = None) -> float:
    """Same ratio over the unit ball: ``{...} / (N+p)``."""
    p = _check_p(p)
    n = np.asarray(xi).size if n is None else n
    return _bracket(a, xi, p) / (n + p)


def heat_star(alpha: float, beta: float, n: int) -> float:
    """``int_{E*} r^(2 alpha - 1) sigma^(-beta) dr dsigma`` over
    ``E* = {0 < r < sqrt(-2 N sigma log(4 pi sigma)), 0 < sigma < 1/(4 pi)}``."""
    alpha, beta = float(alpha), float(beta)
    if not alpha > 0.0:
        raise OracleRangeError(f"alpha must be positive, got {alpha}")
    if not beta < alpha + 1.0:
        raise OracleRangeError(f"the integral diverges for beta >= alpha + 1 ({beta} >= {alpha + 1})")
    k = alpha - beta + 1.0
    return (2.0 ** (2 * beta - alpha - 3) * math.pi ** (beta - alpha - 1) * n**alpha
            * math.gamma(alpha + 1.0) / (alpha * k ** (alpha + 1.0)))


def heat_sigma_ratio(p, n: int) -> float:
    """``int_E |xi.z|^(p-2) sigma dnu / int_E |xi.z|^(p-2) dnu``."""
    p = _check_p(p)
    s = n + p
    return ((s - 2.0) / s) ** (1.0 + 0.5 * s) / (4.0 * math.pi)


def heat_quadratic_ratio(a, xi, p, n: int | None = None) -> float:
    """``int_E |xi.z|^(p-2) <Az,z> dnu / int_E |xi.z|^(p-2) dnu``."""
    p = _check_p(p)
    n = np.asarray(xi).size if n is None else n
    s = n + p
    return (n / (s - 2.0)) * ((s - 2.0) / s) ** (1.0 + 0.5 * s) * _bracket(a, xi, p) / (2.0 * math.pi)


def sphere_monomial(exponents) -> float:
    """``int_{S^{N-1}} prod y_i^(k_i) dS``, zero unless every ``k_i`` is even."""
    k = np.asarray(exponents, dtype=int)
    if np.any(k % 2):
        return 0.0
    b = (k + 1) / 2.0
    return 2.0 * math.exp(sum(math.lgamma(v) for v in b) - math.lgamma(float(b.sum())))


def ball_monomial(exponents) -> float:
    """``int_B prod y_i^(k_i) dy`` = sphere moment / (|k| + N)."""
    k = np.asarray(exponents, dtype=int)
    return sphere_monomial(k) / (k.sum() + k.size)


def oracle(formula_id, parameters: dict) -> OracleValue:
    """Closed-form value for a formula and its parameters.

    Parameters: ``A``, ``xi``, ``p`` (Int1, Int2, Int2Parabolic), ``p`` and
    ``N`` (Int1Parabolic), ``alpha``, ``beta``, ``N`` (CAlphaBeta).
    """
    fid = FormulaId(formula_id)
    prm = dict(parameters)
    if fid is FormulaId.INT1:
        v = sphere_ratio(prm["A"], prm["xi"], prm["p"])
    elif fid is FormulaId.INT2:
        v = ball_ratio(prm["A"], prm["xi"], prm["p"])
    elif fid is FormulaId.C_ALPHA_BETA:
        v = heat_star(prm["alpha"], prm["beta"], prm["N"])
    elif fid is FormulaId.INT1_PARABOLIC:
        v = heat_sigma_ratio(prm["p"], prm.get("N", np.asarray(prm.get("xi", [0, 0])).size))
    else:
        v = heat_quadratic_ratio(prm["A"], prm["xi"], prm["p"])
    return OracleValue(float(v), fid, prm)


# ---------------------------------------------------------------------------
# quadrature side


@dataclass(frozen=True)
class Discrepancy:
    formula_id: FormulaId
    parameters: dict
    quadrature: float
    oracle: float
    abs_gap: float
    rel_gap: float

    def row(self) -> dict:
        prm = {k: (np.asarray(v).tolist() if isinstance(v, np.ndarray) else v)
               for k, v in self.parameters.items()}
        return {"formula": self.formula_id.value, "parameters": prm,
                "quadrature": self.quadrature, "oracle": self.oracle,
                "abs_gap": self.abs_gap, "rel_gap": self.rel_gap}


_RULE_KIND = {
    FormulaId.INT1: DomainKind.SPHERE,
    FormulaId.INT2: DomainKind.BALL,
    FormulaId.C_ALPHA_BETA: DomainKind.HEAT_BALL,
    FormulaId.INT1_PARABOLIC: DomainKind.HEAT_BALL,
    FormulaId.INT2_PARABOLIC: DomainKind.HEAT_BALL,
}


def _weighted_ratio(rule: QuadratureRule, xi, p: float, numerator) -> float:
    """``int |xi.y|^(p-2) g / int |xi.y|^(p-2)`` with the rule.

    ``numerator(points, sigma)`` gives ``g`` at the nodes.  On fibered rules the
    nodes are first rotated so that the fibers run along ``xi``; the weight's
    kink or singularity on ``xi.y = 0`` is then integrated exactly on every
    fiber.  Other rules use the plain node sum.
    """
    xi = np.asarray(xi, dtype=float)
    sigma = rule.sigma if rule.domain_kind is DomainKind.HEAT_BALL else None
    if rule.fibers is not None:
        pts = rule.points @ householder(xi).T
        ff = fiber_samples(rule, pts @ xi)
        g = fiber_samples(rule, numerator(pts, sigma))
        gamma = p - 2.0
        return ff.integrate(0.0, gamma, odd=False, weight=g) / ff.integrate(0.0, gamma, odd=False)
    pts = rule.points
    lin = pts @ xi
    with np.errstate(divide="ignore"):
        w = np.where(lin != 0.0, np.abs(lin) ** (p - 2.0), 0.0 if p < 2.0 else float(p == 2.0))
    return rule.integrate(w * numerator(pts, sigma)) / rule.integrate(w)


def quadrature_vs_oracle(rule: QuadratureRule, formula_id, parameters: dict) -> Discrepancy:
    """Evaluate the left-hand side of a closed form with ``rule`` and compare."""
    fid = FormulaId(formula_id)
    if rule.domain_kind is not _RULE_KIND[fid]:
        raise ValueError(f"{fid.value} needs a {_RULE_KIND[fid].value} rule, "
                         f"got {rule.domain_kind.value}")
    prm = dict(parameters)
    n = rule.dimension
    if fid is FormulaId.C_ALPHA_BETA:
        prm.setdefault("N", n)
        if prm["N"] != n:
            raise ValueError("rule and parameter dimensions differ")
        alpha, beta = float(prm["alpha"]), float(prm["beta"])
        r = np.linalg.norm(rule.points, axis=1)
        # dnu = r^(N+1) sigma^(-2) dr dS dsigma, so divide the density back out.
        vals = r ** (2.0 * alpha - n - 2.0) * rule.sigma ** (2.0 - beta)
        q = rule.integrate(vals) / sphere_area(n)
    else:
        p = _check_p(prm["p"])
        xi = np.asarray(prm.get("xi", np.eye(n)[0]), dtype=float)
        if xi.size != n:
            raise ValueError("rule and parameter dimensions differ")
        if fid is FormulaId.INT1_PARABOLIC:
            prm.setdefault("N", n)

            def numer(pts, sigma):
                return sigma
        else:
            a = np.asarray(prm["A"], dtype=float)

            def numer(pts, sigma):
                return np.einsum("ij,jk,ik->i", pts, a, pts)
        q = _weighted_ratio(rule, xi, p, numer)
    ref = oracle(fid, prm).value
    gap = abs(q - ref)
    return Discrepancy(fid, prm, float(q), ref, gap, gap / max(abs(ref), 1e-300))


def discrepancy_csv(reports) -> str:
    """Flat CSV table, one row per discrepancy report."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["formula", "N", "p", "alpha", "beta", "quadrature", "oracle", "abs_gap", "rel_gap"])
    for r in reports:
        prm = r.parameters
        n = prm.get("N", np.asarray(prm.get("xi", [])).size or "")
        w.writerow([r.formula_id.value, n, prm.get("p", ""), prm.get("alpha", ""),
                    prm.get("beta", ""), repr(r.quadrature), repr(r.oracle),
                    f"{r.abs_gap:.3e}", f"{r.rel_gap:.3e}"])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# the full comparison matrix


@dataclass(frozen=True)
class SuiteSettings:
    dimensions: tuple = (2, 3)
    exponents: tuple = (1.5, 2.0, 3.0, 4.0)
    pairs: int = 20
    seed: int = 0
    order: int = 16
    heat_order: int = 32
    heat_radial_nodes: int = 16
    elliptic_tol: float = 1e-8
    heat_tol: float = 1e-6
    mass_tol: float = 1e-6


@dataclass(frozen=True)
class SuiteResult:
    settings: SuiteSettings
    reports: tuple
    masses: tuple

    def threshold(self, report: Discrepancy) -> float:
        if report.formula_id in (FormulaId.INT1, FormulaId.INT2):
            return self.settings.elliptic_tol
        return self.settings.heat_tol

    @property
    def failures(self) -> list:
        bad = [r for r in self.reports if not r.rel_gap <= self.threshold(r)]
        return bad

    @property
    def passed(self) -> bool:
        mass_ok = all(abs(m - HEAT_BALL_MASS) <= self.settings.mass_tol for _, m in self.masses)
        return mass_ok and not self.failures

    def worst(self) -> dict:
        out = {}
        for r in self.reports:
            key = r.formula_id.value
            out[key] = max(out.get(key, 0.0), r.rel_gap)
        return out


def random_spd(rng: np.random.Generator, n: int) -> np.ndarray:
    """Symmetric positive definite matrix; keeps the weighted brackets away from 0."""
    b = rng.standard_normal((n, n))
    return b.T @ b / n + 0.1 * np.eye(n)


def _golden_pairs(n: int, exponents) -> list:
    pairs = [(1.0, 1.0), (1.5, 2.0), (2.0, 2.0), (1.0, 0.0)]
    pairs += [(0.5 * (n + p), 2.0) for p in exponents]
    return pairs


def run_oracle_suite(settings: SuiteSettings = SuiteSettings()) -> SuiteResult:
    """Every closed form against its quadrature over seeded random ``(A, xi)``.

    Sphere and ball ratios use fibered rules of ``settings.order``; the heat
    ratios use a fibered heat-ball rule and the ``C(alpha, beta)`` values and
    the total mass use the spherical heat-ball rule.
    """
    rng = np.random.default_rng(settings.seed)
    reports, masses = [], []
    for n in settings.dimensions:
        rules = {
            FormulaId.INT1: unit_sphere_rule(n, settings.order, layout="fibered"),
            FormulaId.INT2: unit_ball_rule(n, settings.order, layout="fibered"),
        }
        heat = heat_ball_rule(n, settings.heat_order, layout="fibered",
                              radial_nodes=settings.heat_radial_nodes)
        rules[FormulaId.INT1_PARABOLIC] = heat
        rules[FormulaId.INT2_PARABOLIC] = heat
        plain_heat = heat_ball_rule(n, settings.heat_order)
        masses.append((n, plain_heat.total_weight))
        for p in settings.exponents:
            for _ in range(settings.pairs):
                xi = rng.standard_normal(n)
                a = random_spd(rng, n)
                for fid, rule in rules.items():
                    reports.append(quadrature_vs_oracle(rule, fid, {"A": a, "xi": xi, "p": float(p)}))
        for alpha, beta in _golden_pairs(n, settings.exponents):
            reports.append(quadrature_vs_oracle(plain_heat, FormulaId.C_ALPHA_BETA,
                                                {"alpha": alpha, "beta": beta, "N": n}))
    return SuiteResult(settings, tuple(reports), tuple(masses))
