"""Deterministic quadrature rules on the unit ball, the unit sphere and the heat ball.

Rules always live in unit coordinates.  Moving a rule to ``B_eps(x)`` or to the
heat ball ``E_eps(x, t)`` is an affine map (see :func:`stencil`); the weights are
never rescaled because the p-mean is invariant under that change of variables.

Two node layouts are provided for every domain:

``"spherical"``
    Product rules in spherical coordinates (Gauss-Legendre radial nodes against
    a sphere rule).  These integrate polynomials exactly up to ``order``.

``"fibered"``
    The domain is swept by one-dimensional fibers (chords parallel to the first
    axis for the balls, meridians for the sphere).  Along every fiber the nodes
    are Gauss-Legendre points in a fiber coordinate ``s in (-1, 1)``, which lets
    :mod:`pmeanlab.fibers` reconstruct the sampled function along the fiber and
    integrate ``|u - lambda|^(p-2) (u - lambda)`` with its singularity resolved.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import gammaincc, roots_jacobi

__all__ = [
    "DomainKind",
    "FiberLayout",
    "QuadratureRule",
    "EvaluationStencil",
    "UnsupportedDimensionError",
    "TruncationError",
    "ball_volume",
    "sphere_area",
    "heat_ball_radius",
    "unit_ball_rule",
    "unit_sphere_rule",
    "heat_ball_rule",
    "monte_carlo_ball_rule",
    "stencil",
    "householder",
    "HEAT_BALL_MASS",
    "MAX_DETERMINISTIC_DIMENSION",
]

MAX_DETERMINISTIC_DIMENSION = 6
HEAT_BALL_MASS = 4.0
_TAIL_TOLERANCE = 1e-10


class UnsupportedDimensionError(ValueError):
    """Raised when a deterministic rule is requested above the supported dimension."""


class TruncationError(ValueError):
    """Raised when the heat-ball time truncation would lose too much mass."""


class DomainKind(str, enum.Enum):
    BALL = "Ball"
    SPHERE = "Sphere"
    HEAT_BALL = "HeatBall"


def ball_volume(n: int) -> float:
    """Lebesgue measure of the unit ball in R^n."""
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1)


def sphere_area(n: int) -> float:
    """Surface measure of the unit sphere S^(n-1) in R^n."""
    return n * ball_volume(n)


def heat_ball_radius(sigma, n: int):
    """Spatial radius of the unit heat ball at time lag ``sigma``."""
    sigma = np.asarray(sigma, dtype=float)
    return np.sqrt(np.maximum(-2.0 * n * sigma * np.log(4.0 * np.pi * sigma), 0.0))


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class FiberLayout:
    """Fiber structure of a ``"fibered"`` rule.

    Nodes of the owning rule are stored fiber-major: node ``j * n + k`` sits on
    fiber ``j`` at fiber coordinate ``s[k]``.  The flat weight of that node is
    ``outer[j] * s_weights[k] * density[j, k]``.
    """

    s: np.ndarray
    s_weights: np.ndarray
    outer: np.ndarray
    density: np.ndarray

    @property
    def fiber_count(self) -> int:
        return self.outer.shape[0]

    @property
    def nodes_per_fiber(self) -> int:
        return self.s.shape[0]


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """Nodes and positive weights discretizing a reference domain.

    For ``HeatBall`` rules every node has ``dimension + 1`` coordinates, the last
    one being the time lag ``sigma``; the weights then carry the caloric density
    ``|z|^2 / sigma^2``.
    """

    dimension: int
    domain_kind: DomainKind
    nodes: np.ndarray
    weights: np.ndarray
    order: int
    layout: str = "spherical"
    fibers: FiberLayout | None = None

    def __post_init__(self):
        if self.nodes.shape[0] != self.weights.shape[0]:
            raise ValueError("nodes and weights differ in length")
        if np.any(self.weights <= 0.0):
            raise ValueError("quadrature weights must be positive")

    def __len__(self) -> int:
        return self.weights.shape[0]

    @property
    def points(self) -> np.ndarray:
        """Spatial part of the nodes (drops the time lag for heat-ball rules)."""
        return self.nodes[:, : self.dimension]

    @property
    def sigma(self) -> np.ndarray:
        if self.domain_kind is not DomainKind.HEAT_BALL:
            raise AttributeError("only heat-ball rules carry a time coordinate")
        return self.nodes[:, self.dimension]

    @property
    def total_weight(self) -> float:
        return float(np.sum(self.weights))

    def integrate(self, f) -> float:
        """Integrate ``f`` (called with the node array) or a vector of node values."""
        values = f(self.nodes) if callable(f) else np.asarray(f, dtype=float)
        return float(np.dot(self.weights, values))

    def to_dict(self) -> dict:
        return {
            "dimension": self.dimension,
            "domain_kind": self.domain_kind.value,
            "order": self.order,
            "layout": self.layout,
            "nodes": self.nodes.tolist(),
            "weights": self.weights.tolist(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict) -> "QuadratureRule":
        # Fiber metadata is not part of the wire format; a round-tripped rule
        # behaves as a plain weighted point set.
        return cls(
            dimension=int(data["dimension"]),
            domain_kind=DomainKind(data["domain_kind"]),
            nodes=_frozen(np.reshape(data["nodes"], (len(data["weights"]), -1))),
            weights=_frozen(data["weights"]),
            order=int(data["order"]),
            layout=data.get("layout", "spherical"),
        )

    @classmethod
    def from_json(cls, text: str) -> "QuadratureRule":
        return cls.from_dict(json.loads(text))


# ---------------------------------------------------------------------------
# one-dimensional building blocks


@lru_cache(maxsize=None)
def _gauss_legendre(n: int, a: float = -1.0, b: float = 1.0):
    x, w = leggauss(n)
    half = 0.5 * (b - a)
    return _frozen(a + half * (x + 1.0)), _frozen(half * w)


@lru_cache(maxsize=None)
def _graded_angle(n: int):
    """Angles on (0, pi/2) and weights, graded cubically at both ends.

    Chord lengths ``cos(phi)`` enter fiber integrals with non-integer powers;
    the smoothstep map turns them into high powers of the reference variable.
    """
    u, wu = _gauss_legendre(n, 0.0, 1.0)
    phi = 0.5 * np.pi * u**2 * (3.0 - 2.0 * u)
    dphi = 3.0 * np.pi * u * (1.0 - u)
    return _frozen(phi), _frozen(wu * dphi)


@lru_cache(maxsize=None)
def _gauss_jacobi(n: int, alpha: float, beta: float):
    x, w = roots_jacobi(n, alpha, beta)
    return _frozen(x), _frozen(w)


def _check_dimension(n: int, minimum: int = 1) -> None:
    if n < minimum:
        raise ValueError(f"dimension must be >= {minimum}, got {n}")
    if n > MAX_DETERMINISTIC_DIMENSION:
        raise UnsupportedDimensionError(
            f"deterministic rules support N <= {MAX_DETERMINISTIC_DIMENSION}; "
            "use monte_carlo_ball_rule for higher dimensions"
        )


def _check_order(order: int) -> None:
    if order < 1:
        raise ValueError(f"order must be >= 1, got {order}")


@lru_cache(maxsize=None)
def _sphere_nodes(n: int, order: int):
    """Spherical product rule on S^(n-1), exact for polynomials of degree <= order.

    The first coordinate is the polar axis.  Every rule returned here is
    invariant under ``y -> -y``.
    """
    if n == 1:
        return _frozen([[-1.0], [1.0]]), _frozen([1.0, 1.0])
    if n == 2:
        m = max(4, order + 1)
        m += m % 2
        # Offset by half a step so no node lies on a coordinate axis.
        theta = (2.0 * np.arange(m) + 1.0) * np.pi / m
        pts = np.column_stack([np.cos(theta), np.sin(theta)])
        return _frozen(pts), _frozen(np.full(m, 2.0 * np.pi / m))
    a = 0.5 * (n - 3)
    t, wt = _gauss_jacobi(order // 2 + 1, a, a)
    inner, winner = _sphere_nodes(n - 1, order)
    tt = np.repeat(t, inner.shape[0])
    scale = np.sqrt(1.0 - tt**2)[:, None]
    pts = np.column_stack([tt, scale * np.tile(inner, (t.shape[0], 1))])
    return _frozen(pts), _frozen(np.outer(wt, winner).ravel())


# ---------------------------------------------------------------------------
# public rule constructors


def unit_sphere_rule(n: int, order: int, layout: str = "spherical",
                     fiber_nodes: int | None = None) -> QuadratureRule:
    """Quadrature rule on the unit sphere S^(n-1).

    ``N = 2`` uses equispaced angles and ``N = 3`` a Gauss-Legendre rule in
    ``cos(theta)`` against equispaced azimuths; higher dimensions recurse with
    Gauss-Jacobi rules.  The ``"fibered"`` layout sweeps the sphere by
    meridians ``theta -> (sin theta, cos theta * w)``.
    """
    _check_dimension(n, minimum=2)
    _check_order(order)
    if layout == "spherical":
        pts, w = _sphere_nodes(n, order)
        return QuadratureRule(n, DomainKind.SPHERE, pts, w, order)
    if layout != "fibered":
        raise ValueError(f"unknown layout {layout!r}")

    ns = fiber_nodes or max(order // 2 + 1, 16)
    s, ws = _gauss_legendre(ns)
    omega, womega = _sphere_nodes(n - 1, order) if n > 2 else (_frozen([[-1.0], [1.0]]), _frozen([1.0, 1.0]))
    theta = 0.5 * np.pi * s
    density = np.tile(0.5 * np.pi * np.cos(theta) ** (n - 2), (omega.shape[0], 1))
    pts = np.empty((omega.shape[0], ns, n))
    pts[:, :, 0] = np.sin(theta)[None, :]
    pts[:, :, 1:] = np.cos(theta)[None, :, None] * omega[:, None, :]
    layout_info = FiberLayout(s, ws, _frozen(womega), _frozen(density))
    weights = womega[:, None] * ws[None, :] * density
    return QuadratureRule(n, DomainKind.SPHERE, _frozen(pts.reshape(-1, n)),
                          _frozen(weights.ravel()), order, "fibered", layout_info)


def unit_ball_rule(n: int, order: int, layout: str = "spherical",
                   fiber_nodes: int | None = None) -> QuadratureRule:
    """Quadrature rule on the closed unit ball of R^n.

    The spherical layout pairs Gauss-Legendre radial nodes (density ``r^(n-1)``
    absorbed into the weights) with :func:`unit_sphere_rule`.  The fibered
    layout uses chords parallel to ``e_1``; the chord feet ``y'`` are placed with
    ``|y'| = sin(phi)``, ``phi`` graded towards both ends.
    """
    _check_dimension(n)
    _check_order(order)
    if layout == "spherical":
        r, wr = _gauss_legendre((order + n) // 2 + 1, 0.0, 1.0)
        omega, womega = _sphere_nodes(n, order)
        pts = (r[:, None, None] * omega[None, :, :]).reshape(-1, n)
        w = np.outer(wr * r ** (n - 1), womega).ravel()
        return QuadratureRule(n, DomainKind.BALL, _frozen(pts), _frozen(w), order)
    if layout != "fibered":
        raise ValueError(f"unknown layout {layout!r}")

    ns = fiber_nodes or max(order // 2 + 1, 8)
    s, ws = _gauss_legendre(ns)
    if n == 1:
        feet = np.zeros((1, 0))
        half = np.ones(1)
        outer = np.ones(1)
    else:
        phi, wphi = _graded_angle(order // 2 + 12)
        omega, womega = _sphere_nodes(n - 1, order)
        rho = np.sin(phi)
        feet = (rho[:, None, None] * omega[None, :, :]).reshape(-1, n - 1)
        half = np.repeat(np.cos(phi), omega.shape[0])
        outer = np.outer(wphi * rho ** (n - 2) * np.cos(phi), womega).ravel()
    density = np.repeat(half[:, None], ns, axis=1)
    pts = np.empty((feet.shape[0], ns, n))
    pts[:, :, 0] = half[:, None] * s[None, :]
    pts[:, :, 1:] = feet[:, None, :]
    layout_info = FiberLayout(s, ws, _frozen(outer), _frozen(density))
    weights = outer[:, None] * ws[None, :] * density
    return QuadratureRule(n, DomainKind.BALL, _frozen(pts.reshape(-1, n)),
                          _frozen(weights.ravel()), order, "fibered", layout_info)


def heat_tail_fraction(n: int, tau_max: float, alpha: float | None = None,
                       beta: float = 2.0) -> float:
    """Relative mass of ``int r^(2 alpha - 1) sigma^(-beta)`` lost beyond ``tau_max``.

    After the substitution ``4 pi sigma = exp(-tau)`` the time integrand is a
    Gamma density, so the tail is a regularized upper incomplete gamma value.
    The default ``alpha`` measures the caloric mass itself.
    """
    if alpha is None:
        alpha = 0.5 * (n + 2)
    rate = alpha - beta + 1.0
    return float(gammaincc(alpha + 1.0, rate * tau_max))


def heat_ball_rule(n: int, order: int = 24, tau_max: float = 40.0,
                   layout: str = "spherical", radial_nodes: int = 16,
                   fiber_nodes: int | None = None) -> QuadratureRule:
    """Quadrature rule for the unit heat ball with caloric weights.

    The heat ball is ``{(z, sigma): 0 < sigma < 1/(4 pi), |z| < R(sigma)}`` with
    ``R(sigma)^2 = -2 N sigma log(4 pi sigma)``.  Time is parametrized by
    ``tau = -log(4 pi sigma)`` on ``(0, tau_max)`` with ``order`` Gauss-Legendre
    nodes.  The weights integrate ``|z|^2 / sigma^2 dz dsigma``; their sum is 4.
    """
    if n < 2:
        raise ValueError("heat-ball rules need N >= 2")
    _check_dimension(n)
    _check_order(order)
    if tau_max < 30.0:
        raise TruncationError(f"tau_max must be >= 30, got {tau_max}")
    tail = heat_tail_fraction(n, tau_max)
    if tail > _TAIL_TOLERANCE:
        raise TruncationError(f"time truncation at tau_max={tau_max} loses {tail:.3e} of the mass")

    # tau = v^2 removes the half-integer power of tau at the origin (odd N).
    v, wv = _gauss_legendre(order, 0.0, math.sqrt(tau_max))
    tau, wtau = v**2, 2.0 * v * wv
    sigma = np.exp(-tau) / (4.0 * np.pi)
    radius = np.sqrt(2.0 * n * sigma * tau)
    sphere_order = 64 if n == 2 else 16

    if layout == "spherical":
        x, wx = _gauss_legendre(radial_nodes, 0.0, 1.0)
        omega, womega = _sphere_nodes(n, sphere_order - 1)
        # weight = sigma dtau * r^(N+1) / sigma^2 dr * dS
        r = radius[:, None] * x[None, :]
        wr = (wtau * radius ** (n + 2) / sigma)[:, None] * (wx * x ** (n + 1))[None, :]
        pts = r[:, :, None, None] * omega[None, None, :, :]
        sig = np.broadcast_to(sigma[:, None, None], r.shape + (omega.shape[0],))
        nodes = np.concatenate([pts, sig[..., None]], axis=-1).reshape(-1, n + 1)
        w = (wr[:, :, None] * womega[None, None, :]).ravel()
        return QuadratureRule(n, DomainKind.HEAT_BALL, _frozen(nodes), _frozen(w), order)
    if layout != "fibered":
        raise ValueError(f"unknown layout {layout!r}")

    ns = fiber_nodes or 8
    s, ws = _gauss_legendre(ns)
    phi, wphi = _graded_angle(radial_nodes)
    omega, womega = _sphere_nodes(n - 1, 15) if n > 2 else (_frozen([[-1.0], [1.0]]), _frozen([1.0, 1.0]))
    # fibers indexed by (tau, phi, omega)
    big_r = radius[:, None, None]
    sin_p = np.sin(phi)[None, :, None]
    cos_p = np.cos(phi)[None, :, None]
    outer = (wtau * sigma)[:, None, None] * (big_r ** (n - 1)) * sin_p ** (n - 2) * cos_p \
        * wphi[None, :, None] * womega[None, None, :]
    half = np.broadcast_to(big_r * cos_p, outer.shape)
    feet_norm = np.broadcast_to(big_r * sin_p, outer.shape)
    sig = np.broadcast_to(sigma[:, None, None], outer.shape)
    half, feet_norm, sig, outer = (a.reshape(-1) for a in (half, feet_norm, sig, outer))
    omega_idx = np.tile(np.arange(omega.shape[0]), order * radial_nodes)
    density = half[:, None] * (half[:, None] ** 2 * s[None, :] ** 2 + feet_norm[:, None] ** 2) \
        / sig[:, None] ** 2
    pts = np.empty((outer.shape[0], ns, n + 1))
    pts[:, :, 0] = half[:, None] * s[None, :]
    pts[:, :, 1:n] = (feet_norm[:, None] * omega[omega_idx])[:, None, :]
    pts[:, :, n] = sig[:, None]
    layout_info = FiberLayout(s, ws, _frozen(outer), _frozen(density))
    weights = outer[:, None] * ws[None, :] * density
    return QuadratureRule(n, DomainKind.HEAT_BALL, _frozen(pts.reshape(-1, n + 1)),
                          _frozen(weights.ravel()), order, "fibered", layout_info)


def monte_carlo_ball_rule(n: int, count: int, seed: int) -> QuadratureRule:
    """Equal-weight random rule on the unit ball, reproducible for a fixed seed."""
    if n < 1:
        raise ValueError("dimension must be >= 1")
    if count < 1000:
        raise ValueError(f"count must be >= 1000, got {count}")
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((count, n))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    r = rng.random(count) ** (1.0 / n)
    w = np.full(count, ball_volume(n) / count)
    return QuadratureRule(n, DomainKind.BALL, _frozen(g * r[:, None]), _frozen(w), 0, "montecarlo")


# ---------------------------------------------------------------------------
# stencils


def householder(direction) -> np.ndarray:
    """Orthogonal (reflection) matrix ``Q`` with ``Q e_1 = direction / |direction|``."""
    v = np.asarray(direction, dtype=float)
    norm = np.linalg.norm(v)
    if norm == 0.0:
        raise ValueError("direction must be nonzero")
    v = v / norm
    e1 = np.zeros_like(v)
    e1[0] = 1.0
    u = e1 - v
    nu = np.dot(u, u)
    if nu < 1e-30:
        return np.eye(v.shape[0])
    return np.eye(v.shape[0]) - 2.0 * np.outer(u, u) / nu


@dataclass(frozen=True, eq=False)
class EvaluationStencil:
    """A unit rule mapped to ``B_eps(x)`` (or ``E_eps(x, t)``)."""

    center: np.ndarray
    radius: float
    rule: QuadratureRule
    evaluation_points: np.ndarray
    time: float | None = None
    evaluation_times: np.ndarray | None = None
    rotation: np.ndarray | None = None

    def __len__(self) -> int:
        return self.evaluation_points.shape[0]

    def evaluate(self, field) -> np.ndarray:
        """Evaluate a field (``f(points)`` or ``f(points, times)``) on the stencil."""
        if self.evaluation_times is None:
            values = field(self.evaluation_points)
        else:
            values = field(self.evaluation_points, self.evaluation_times)
        return np.broadcast_to(np.asarray(values, dtype=float), (len(self),)).copy()


def stencil(rule: QuadratureRule, x, eps: float, t: float | None = None,
            rotation=None) -> EvaluationStencil:
    """Map ``rule`` to ``x + eps * Q z`` (and ``t - eps^2 sigma`` for heat balls).

    ``rotation`` is an optional orthogonal matrix ``Q``; balls, spheres and heat
    balls are invariant under it, so the rotated nodes with unchanged weights
    are again a rule for the same domain.
    """
    if not eps > 0.0:
        raise ValueError(f"radius must be positive, got {eps}")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape != (rule.dimension,):
        raise ValueError(f"center has shape {x.shape}, expected ({rule.dimension},)")
    heat = rule.domain_kind is DomainKind.HEAT_BALL
    if heat and t is None:
        raise ValueError("heat-ball stencils need a time t")
    if not heat and t is not None:
        raise ValueError("time is only meaningful for heat-ball stencils")
    z = rule.points
    if rotation is not None:
        rotation = np.asarray(rotation, dtype=float)
        z = z @ rotation.T
    pts = x[None, :] + eps * z
    pts.setflags(write=False)
    times = None
    if heat:
        times = float(t) - eps**2 * rule.sigma
        times.setflags(write=False)
    return EvaluationStencil(x, float(eps), rule, pts, None if t is None else float(t), times,
                             rotation)
