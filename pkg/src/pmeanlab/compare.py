"""Experiments contrasting the variational p-mean with the explicit means.

Two experiments are provided: the continuity contrast on ``|z|^n`` and a
seeded randomized search for monotonicity violations of a sample-level mean.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .measure import unit_ball_rule, unit_sphere_rule
from .pmean import (
    Exponent,
    alt_mean_hr1,
    alt_mean_hr2,
    alt_mean_mpr,
    ball_extrema,
    mpr_mean_samples,
    p_mean_ball,
    p_mean_batch,
)

__all__ = [
    "ContrastRow",
    "continuity_contrast",
    "Witness",
    "SearchResult",
    "MEANS",
    "monotonicity_search",
    "replay_pair",
    "compare_on_field",
]


@dataclass(frozen=True)
class ContrastRow:
    n: int
    dimension: int
    p_mean: float
    exact: float
    min_max_mean: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def continuity_contrast(n: int = 200, dimension: int = 2) -> ContrastRow:
    """Average and min-max mean of ``u_n(z) = |z|^n`` on the unit ball.

    ``u_n -> 0`` in every ``L^p`` with ``p < inf`` while its min-max mean stays
    at ``1/2``.  The radial rule has enough nodes to integrate ``r^n``
    exactly; the reference is ``N / (n + N)``.
    """
    def u(y):
        return np.sum(y * y, axis=1) ** (0.5 * n)

    rule = unit_ball_rule(dimension, n + 2)
    x = np.zeros(dimension)
    avg = p_mean_ball(u, x, 1.0, Exponent.two(), rule).mean
    lo, hi = ball_extrema(u, x, 1.0, polish=False)
    lo = min(lo, float(u(x[None, :])[0]))
    return ContrastRow(n, dimension, avg, dimension / (n + dimension), 0.5 * (lo + hi))


# ---------------------------------------------------------------------------
# monotonicity search


@dataclass(frozen=True)
class Witness:
    """A pair ``u <= v`` with ``mean(u) > mean(v)``; ``index`` replays it."""

    index: int
    u: tuple
    v: tuple
    mean_u: float
    mean_v: float

    def to_dict(self) -> dict:
        return {"index": self.index, "u": list(self.u), "v": list(self.v),
                "mean_u": self.mean_u, "mean_v": self.mean_v, "gap": self.mean_u - self.mean_v}


@dataclass(frozen=True)
class SearchResult:
    mean: str
    p: float
    pairs: int
    seed: int
    samples: int
    violations: int
    max_gap: float
    witnesses: tuple

    def to_dict(self) -> dict:
        return {"mean": self.mean, "p": self.p, "pairs": self.pairs, "seed": self.seed,
                "samples": self.samples, "violations": self.violations, "max_gap": self.max_gap,
                "witnesses": [w.to_dict() for w in self.witnesses]}


# dimension used for the mixture coefficients of the explicit means
_SEARCH_DIMENSION = 2


def _variational(values, weights, p):
    return p_mean_batch(values, weights, Exponent.coerce(p), method="bisect")


def _mpr(values, weights, p):
    return mpr_mean_samples(values, weights, p, _SEARCH_DIMENSION)


MEANS = {"pmean": _variational, "mpr": _mpr}


def _pairs(seed: int, count: int, samples: int):
    """Deterministic pairs ``u <= v``.

    Half of the pairs raise one sample (often the maximum) and half add a
    sparse nonnegative perturbation.
    """
    rng = np.random.default_rng(seed)
    u = rng.uniform(-1.0, 1.0, size=(count, samples))
    bump = np.zeros_like(u)
    single = rng.random(count) < 0.5
    pick = np.where(rng.random(count) < 0.5, np.argmax(u, axis=1), rng.integers(0, samples, count))
    bump[np.arange(count), pick] = rng.uniform(0.0, 1.0, count)
    sparse = rng.uniform(0.0, 0.5, size=u.shape) * (rng.random(u.shape) < 0.3)
    bump = np.where(single[:, None], bump, sparse)
    return u, u + bump


def replay_pair(seed: int, index: int, pairs: int, samples: int):
    """The pair ``(u, v)`` with a given index of a seeded search."""
    u, v = _pairs(seed, pairs, samples)
    return u[index], v[index]


def monotonicity_search(mean: str = "mpr", p: float = 4.0, pairs: int = 10_000,
                        seed: int = 0, samples: int = 32, slack: float = 1e-12,
                        keep: int = 5) -> SearchResult:
    """Count pairs ``u <= v`` (uniform weights) with ``mean(u) > mean(v) + slack``."""
    fn = MEANS[mean]
    u, v = _pairs(seed, pairs, samples)
    w = np.full(samples, 1.0 / samples)
    mu, mv = fn(u, w, p), fn(v, w, p)
    gap = mu - mv
    bad = np.nonzero(gap > slack)[0]
    order = bad[np.argsort(-gap[bad], kind="stable")][:keep]
    witnesses = tuple(Witness(int(i), tuple(map(float, u[i])), tuple(map(float, v[i])),
                              float(mu[i]), float(mv[i])) for i in order)
    return SearchResult(mean, float(p), pairs, seed, samples, int(bad.size),
                        float(gap.max()) if gap.size else 0.0, witnesses)


def compare_on_field(u, x, eps: float, p: float, order: int = 16) -> dict:
    """The variational mean and the three explicit means of one field."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    n = x.size
    ball = unit_ball_rule(n, order, layout="fibered" if p not in (2.0, np.inf) else "spherical")
    sphere = unit_sphere_rule(n, order)
    out = {"pmean": p_mean_ball(u, x, eps, p, ball).mean,
           "mpr": alt_mean_mpr(u, x, eps, p, ball)}
    if np.isfinite(p):
        out["hr1"] = alt_mean_hr1(u, x, eps, p, sphere)
        out["hr2"] = alt_mean_hr2(u, x, eps, p, sphere)
    return out
