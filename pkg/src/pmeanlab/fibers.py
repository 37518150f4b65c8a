"""Singularity-aware integration along the fibers of a fibered rule.

A function sampled on a fibered rule is reconstructed on each fiber by its
Legendre interpolant ``P_j(s)``.  Integrals of the form

    sum_j outer_j * int_{-1}^{1} phi(P_j(s) - lam) * Q_j(s) * rho_j(s) ds,

with ``phi(r) = |r|^gamma`` or ``sign(r) |r|^gamma``, are then evaluated by
splitting every fiber at the points where ``P_j = lam`` and using Gauss-Jacobi
rules whose weight matches the ``|s - root|^gamma`` behaviour at those points.
This keeps the error spectral even when ``gamma`` is negative (integrable
singularity) or zero (the jump of ``sign``), where a fixed node set would only
converge algebraically.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from numpy.polynomial import legendre as L
from scipy.special import roots_jacobi

from .measure import FiberLayout, QuadratureRule

__all__ = ["FiberFunction", "fiber_samples"]

_SUBNODES = 16
_CHECK_FACTOR = 4


@lru_cache(maxsize=None)
def _reference_rule(gamma: float, end: int, m: int = _SUBNODES):
    """Nodes on [0, 1] and weights for ``int_0^1 f`` when ``f`` behaves like
    ``|x - end|^gamma`` at ``end`` (0 or 1); ``end = -1`` means no singularity."""
    if end < 0 or gamma == 0.0:
        x, w = roots_jacobi(m, 0.0, 0.0)
        return 0.5 * (x + 1.0), 0.5 * w
    if end == 1:
        x, w = roots_jacobi(m, gamma, 0.0)
    else:
        x, w = roots_jacobi(m, 0.0, gamma)
    t = 0.5 * (x + 1.0)
    dist = (1.0 - t) if end == 1 else t
    # Divide the Jacobi weight back out: the rule then integrates f itself.
    return t, 0.5 * w / (2.0 * dist) ** gamma


@lru_cache(maxsize=None)
def _legendre_transform(n: int):
    """Matrix mapping values at the n Gauss-Legendre nodes to Legendre coefficients."""
    x, w = L.leggauss(n)
    vander = L.legvander(x, n - 1)                # (n nodes, n degrees)
    scale = (2.0 * np.arange(n) + 1.0) / 2.0
    return (vander * w[:, None]).T * scale[:, None]


def _bracketed_root(coef, dcoef, target, a, b, fa, fb, idx, max_iter=100):
    """Root of ``P = target`` on ``[a, b]`` per entry, given a sign change.

    Newton steps are accepted while they stay inside the shrinking bracket;
    otherwise the bracket is bisected.
    """
    lo, hi = a.copy(), b.copy()
    increasing = fb > fa
    denom = np.where(fb != fa, fb - fa, 1.0)
    r = np.clip(a + (target - fa) * (b - a) / denom, a, b)
    active = np.ones(r.shape, dtype=bool)
    for _ in range(max_iter):
        val = L.legval(r, coef[:, idx], tensor=False) - target
        below = (val < 0) == increasing
        lo = np.where(below, r, lo)
        hi = np.where(below, hi, r)
        dv = L.legval(r, dcoef[:, idx], tensor=False)
        with np.errstate(divide="ignore", invalid="ignore"):
            newton = r - val / dv
        ok = np.isfinite(newton) & (newton >= lo) & (newton <= hi)
        r_new = np.where(ok, newton, 0.5 * (lo + hi))
        done = (val == 0.0) | (np.abs(r_new - r) <= 1e-15) | (hi - lo <= 1e-15)
        r = np.where(active & (val != 0.0), r_new, r)
        active &= ~done
        if not np.any(active):
            break
    return r


class FiberFunction:
    """Fiber-wise Legendre interpolant of values sampled on a fibered rule."""

    def __init__(self, layout: FiberLayout, values):
        n = layout.nodes_per_fiber
        v = np.asarray(values, dtype=float).reshape(layout.fiber_count, n)
        self.layout = layout
        transform = _legendre_transform(n)
        self.coef = transform @ v.T                       # (n, F)
        self.dcoef = L.legder(self.coef, axis=0)
        self.d2coef = L.legder(self.dcoef, axis=0)
        self.rho = transform @ np.asarray(layout.density).T
        self.values = v
        self._pieces = None

    # -- evaluation helpers -------------------------------------------------

    def _eval(self, coef, s, idx):
        return L.legval(s, coef[:, idx], tensor=False)

    def __call__(self, s, idx):
        return self._eval(self.coef, s, idx)

    # -- structure ----------------------------------------------------------

    @property
    def pieces(self):
        """``(fiber, a, b, P(a), P(b))`` of the monotone pieces, built on first use."""
        if self._pieces is None:
            self._pieces = self._split_monotone()
        return self._pieces

    def _split_monotone(self):
        """Cut every fiber at the sign changes of P' into monotone pieces."""
        f = self.layout.fiber_count
        m = _CHECK_FACTOR * self.layout.nodes_per_fiber + 1
        grid = np.cos(np.linspace(np.pi, 0.0, m))          # includes the endpoints
        d = L.legval(grid, self.dcoef)                      # (F, m)
        change = np.sign(d[:, :-1]) * np.sign(d[:, 1:]) < 0
        fib, k = np.nonzero(change)
        crit = _bracketed_root(self.dcoef, self.d2coef, 0.0, grid[k], grid[k + 1],
                               d[fib, k], d[fib, k + 1], fib)
        fibers = np.concatenate([np.arange(f), np.arange(f), fib])
        points = np.concatenate([np.full(f, -1.0), np.full(f, 1.0), crit])
        order = np.lexsort((points, fibers))
        fibers, points = fibers[order], points[order]
        same = fibers[:-1] == fibers[1:]
        fib = fibers[:-1][same]
        a, b = points[:-1][same], points[1:][same]
        return fib, a, b, self(a, fib), self(b, fib)

    @property
    def minimum(self) -> float:
        _, _, _, pa, pb = self.pieces
        return float(min(pa.min(), pb.min()))

    @property
    def maximum(self) -> float:
        _, _, _, pa, pb = self.pieces
        return float(max(pa.max(), pb.max()))

    def argextreme(self, largest: bool):
        """(fiber, s) location of the interpolated extremum."""
        fib, a, b, pa, pb = self.pieces
        vals = np.concatenate([pa, pb])
        locs = np.concatenate([a, b])
        fibs = np.concatenate([fib, fib])
        i = int(np.argmax(vals) if largest else np.argmin(vals))
        return int(fibs[i]), float(locs[i])

    # -- integration --------------------------------------------------------

    def _roots(self, lam, a, b, pa, pb, idx):
        """Root of P = lam on monotone pieces whose end values bracket lam."""
        return _bracketed_root(self.coef, self.dcoef, lam, a, b, pa, pb, idx)

    def integrate(self, lam: float = 0.0, gamma: float = 0.0, odd: bool = True,
                  weight=None) -> float:
        """Integrate ``phi(P - lam) * weight`` against the rule's measure.

        ``phi(r) = sign(r) |r|^gamma`` when ``odd`` else ``|r|^gamma``;
        ``weight`` is an optional second :class:`FiberFunction` (same layout).
        """
        idx, a, b, pa, pb = self.pieces
        lo = np.minimum(pa, pb)
        hi = np.maximum(pa, pb)
        cut = (lo <= lam) & (lam <= hi)
        roots = np.empty_like(a)
        if np.any(cut):
            roots[cut] = self._roots(lam, a[cut], b[cut], pa[cut], pb[cut], idx[cut])

        total = self._sum_pieces(a[~cut], b[~cut], idx[~cut], lam, gamma, odd, weight, -1)
        total += self._sum_pieces(a[cut], roots[cut], idx[cut], lam, gamma, odd, weight, 1)
        total += self._sum_pieces(roots[cut], b[cut], idx[cut], lam, gamma, odd, weight, 0)
        return float(total)

    def _sum_pieces(self, a, b, idx, lam, gamma, odd, weight, end):
        if a.size == 0:
            return 0.0
        t, w = _reference_rule(float(gamma), end)
        length = b - a
        s = a[None, :] + t[:, None] * length[None, :]      # (m, K)
        r = self(s, idx) - lam
        if gamma == 0.0:
            f = np.sign(r) if odd else np.ones_like(r)
        else:
            mag = np.abs(r)
            with np.errstate(divide="ignore"):
                f = mag**gamma
            f = np.where(mag > 0.0, f, 0.0)
            if odd:
                f = f * np.sign(r)
        f = f * self._eval(self.rho, s, idx)
        if weight is not None:
            f = f * weight(s, idx)
        contrib = (w[:, None] * f).sum(axis=0) * length
        per_fiber = np.bincount(idx, weights=contrib, minlength=self.layout.fiber_count)
        return float(np.dot(self.layout.outer, per_fiber))


def fiber_samples(rule: QuadratureRule, values) -> FiberFunction:
    """Interpolate node values of a fibered rule fiber by fiber."""
    if rule.fibers is None:
        raise ValueError("rule has no fiber layout; build it with layout='fibered'")
    return FiberFunction(rule.fibers, values)
