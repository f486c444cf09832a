"""Norms, feasible sets, distance-generating functions and exact mirror steps.

Vectors are plain 1-D ``float64`` numpy arrays. Everything in this module is
immutable after construction and every function is pure.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.special import rel_entr, xlogy

from lfmd.errors import (
    DimensionMismatch,
    DomainError,
    NumericalOverflow,
    UnsupportedGeometry,
)

DEFAULT_SIMPLEX_FLOOR = 1e-12
MEMBERSHIP_TOL = 1e-12


def as_vector(x, name: str = "x") -> np.ndarray:
    """Convert ``x`` to a read-only finite float64 vector of dimension >= 1."""
    v = np.array(x, dtype=np.float64, ndmin=1)
    if v.ndim != 1 or v.size == 0:
        raise DomainError(f"{name} must be a non-empty 1-D vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise DomainError(f"{name} has non-finite entries")
    v.setflags(write=False)
    return v


def _same_dim(*vs: np.ndarray) -> None:
    n = vs[0].shape[0]
    for v in vs[1:]:
        if v.shape[0] != n:
            raise DimensionMismatch(f"dimension {v.shape[0]} != {n}")


class NormPair(enum.Enum):
    """A primal norm together with its dual norm."""

    L2 = "l2"
    L1_LINF = "l1_linf"

    def primal(self, v: np.ndarray) -> float:
        if self is NormPair.L2:
            return float(np.linalg.norm(v, 2))
        return float(np.sum(np.abs(v)))

    def dual(self, v: np.ndarray) -> float:
        if self is NormPair.L2:
            return float(np.linalg.norm(v, 2))
        return float(np.max(np.abs(v)))


# --------------------------------------------------------------------------
# feasible sets


@dataclass(frozen=True, eq=False)
class Box:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = as_vector(self.lower, "lower")
        hi = as_vector(self.upper, "upper")
        _same_dim(lo, hi)
        if np.any(lo > hi):
            raise DomainError("Box requires lower <= upper componentwise")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def uniform(cls, dim: int, lower: float, upper: float) -> "Box":
        return cls(np.full(dim, float(lower)), np.full(dim, float(upper)))

    @property
    def dim(self) -> int:
        return self.lower.shape[0]

    def contains(self, x: np.ndarray, tol: float = MEMBERSHIP_TOL) -> bool:
        return bool(np.all(x >= self.lower - tol) and np.all(x <= self.upper + tol))

    def project(self, x: np.ndarray) -> np.ndarray:
        return np.minimum(np.maximum(x, self.lower), self.upper)

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        return rng.uniform(self.lower, self.upper, size=(count, self.dim))

    def __repr__(self):
        return f"Box(lower={self.lower.tolist()}, upper={self.upper.tolist()})"


@dataclass(frozen=True, eq=False)
class Ball2:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", as_vector(self.center, "center"))
        if not (np.isfinite(self.radius) and self.radius > 0):
            raise DomainError("Ball2 radius must be positive")
        object.__setattr__(self, "radius", float(self.radius))

    @property
    def dim(self) -> int:
        return self.center.shape[0]

    def contains(self, x: np.ndarray, tol: float = MEMBERSHIP_TOL) -> bool:
        return bool(np.linalg.norm(x - self.center) <= self.radius + tol)

    def project(self, x: np.ndarray) -> np.ndarray:
        d = x - self.center
        r = np.linalg.norm(d)
        if r <= self.radius:
            return np.array(x, dtype=np.float64)
        return self.center + d * (self.radius / r)

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        d = rng.standard_normal((count, self.dim))
        d /= np.linalg.norm(d, axis=1, keepdims=True)
        r = self.radius * rng.uniform(size=(count, 1)) ** (1.0 / self.dim)
        return self.center + r * d

    def __repr__(self):
        return f"Ball2(center={self.center.tolist()}, radius={self.radius})"


@dataclass(frozen=True)
class Simplex:
    """Probability simplex, optionally shrunk to ``{x : x_i >= floor, sum x = 1}``.

    The floor keeps entropic iterates away from the boundary where the
    gradient of the negative entropy blows up.
    """

    dim: int
    floor: float = DEFAULT_SIMPLEX_FLOOR

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 1:
            raise DomainError("Simplex dim must be a positive integer")
        if not (self.floor >= 0 and self.floor * self.dim < 1):
            raise DomainError("Simplex floor must satisfy 0 <= floor * dim < 1")

    @property
    def mass(self) -> float:
        """Mass left above the floor."""
        return 1.0 - self.floor * self.dim

    def contains(self, x: np.ndarray, tol: float = MEMBERSHIP_TOL) -> bool:
        return bool(np.all(x >= self.floor - tol) and abs(np.sum(x) - 1.0) <= tol * max(1, self.dim))

    def project(self, x: np.ndarray) -> np.ndarray:
        return self.floor + _project_scaled_simplex(x - self.floor, self.mass)

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        return self.floor + self.mass * rng.dirichlet(np.ones(self.dim), size=count)

    def center(self) -> np.ndarray:
        return np.full(self.dim, 1.0 / self.dim)


FeasibleSet = Box | Ball2 | Simplex


def _project_scaled_simplex(v: np.ndarray, z: float) -> np.ndarray:
    # sort-based exact projection onto {y >= 0, sum y = z}; stable sort breaks ties by index
    u = np.sort(v, kind="stable")[::-1]
    css = np.cumsum(u) - z
    ind = np.arange(1, v.shape[0] + 1)
    rho = np.count_nonzero(u - css / ind > 0)
    theta = css[rho - 1] / rho
    return np.maximum(v - theta, 0.0)


def project(Q: FeasibleSet, x) -> np.ndarray:
    """Exact Euclidean projection of ``x`` onto ``Q``."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (Q.dim,):
        raise DimensionMismatch(f"expected dimension {Q.dim}, got shape {x.shape}")
    return Q.project(x)


# --------------------------------------------------------------------------
# distance-generating functions


@dataclass(frozen=True)
class EuclideanHalfSq:
    """psi(x) = 0.5 * ||x||_2^2, 1-strongly convex w.r.t. the l2 norm."""

    sigma: float = 1.0
    norm: NormPair = NormPair.L2

    def value(self, x: np.ndarray) -> float:
        return 0.5 * float(np.dot(x, x))

    def grad(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x, dtype=np.float64)

    def bregman(self, x: np.ndarray, y: np.ndarray) -> float:
        d = x - y
        return 0.5 * float(np.dot(d, d))


@dataclass(frozen=True)
class NegEntropy:
    """psi(x) = sum x_i log x_i with 0 log 0 = 0.

    On the simplex it is 1-strongly convex w.r.t. the l1 norm (Pinsker).
    """

    sigma: float = 1.0
    norm: NormPair = NormPair.L1_LINF

    def value(self, x: np.ndarray) -> float:
        if np.any(x < 0):
            raise DomainError("negative entropy needs x >= 0")
        return float(np.sum(xlogy(x, x)))

    def grad(self, x: np.ndarray) -> np.ndarray:
        if np.any(x <= 0):
            raise DomainError("gradient of negative entropy needs x > 0")
        return np.log(x) + 1.0

    def bregman(self, x: np.ndarray, y: np.ndarray) -> float:
        if np.any(y <= 0):
            raise DomainError("Bregman base point must be strictly positive under NegEntropy")
        if np.any(x < 0):
            raise DomainError("negative entropy needs x >= 0")
        return float(np.sum(rel_entr(x, y) - x + y))


MirrorMap = EuclideanHalfSq | NegEntropy


def bregman(psi: MirrorMap, x, y) -> float:
    """V(x, y) = psi(x) - psi(y) - <grad psi(y), x - y>."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    _same_dim(x, y)
    return max(psi.bregman(x, y), 0.0)


def three_point_residual(psi: MirrorMap, a, b, c) -> float:
    """Residual of the three-point identity; zero up to rounding."""
    a, b, c = (np.asarray(v, dtype=np.float64) for v in (a, b, c))
    _same_dim(a, b, c)
    lhs = float(np.dot(psi.grad(b) - psi.grad(a), c - a))
    return lhs - (psi.bregman(c, a) + psi.bregman(a, b) - psi.bregman(c, b))


def prox_residual(psi: MirrorMap, base, a, u, phi) -> float:
    """<grad psi(base) - grad psi(a), u - a> - (phi(u) - phi(a)).

    Non-positive whenever ``a`` minimizes ``phi + V(., base)`` over a set
    containing ``u``.
    """
    base, a, u = (np.asarray(v, dtype=np.float64) for v in (base, a, u))
    return float(np.dot(psi.grad(base) - psi.grad(a), u - a)) - (phi(u) - phi(a))


def fenchel_young_gap(norm: NormPair, a, b, lam: float) -> float:
    """||a||^2/(2 lam) + lam ||b||_*^2 / 2 - |<a, b>|, always >= 0."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    return norm.primal(a) ** 2 / (2 * lam) + lam * norm.dual(b) ** 2 / 2 - abs(float(np.dot(a, b)))


# --------------------------------------------------------------------------
# composite terms


@dataclass(frozen=True)
class ZeroTerm:
    def __call__(self, x: np.ndarray) -> float:
        return 0.0


@dataclass(frozen=True)
class L1Scaled:
    lam: float

    def __post_init__(self):
        if not (np.isfinite(self.lam) and self.lam >= 0):
            raise DomainError("L1Scaled needs lambda >= 0")

    def __call__(self, x: np.ndarray) -> float:
        return self.lam * float(np.sum(np.abs(x)))


@dataclass(frozen=True, eq=False)
class Linear:
    """h(x) = <c, x>; the caller guarantees h >= 0 on the feasible set."""

    c: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "c", as_vector(self.c, "c"))

    def __call__(self, x: np.ndarray) -> float:
        return float(np.dot(self.c, x))


CompositeTerm = ZeroTerm | L1Scaled | Linear


# --------------------------------------------------------------------------
# mirror steps


def _entropic_step(Q: Simplex, x: np.ndarray, g: np.ndarray, gamma: float) -> np.ndarray:
    with np.errstate(over="ignore", invalid="ignore"):
        z = -gamma * g
    if not np.all(np.isfinite(z)):
        raise NumericalOverflow("non-finite exponent in exponentiated-gradient step")
    z = z - np.max(z)
    y = x * np.exp(z)
    total = np.sum(y)
    if not total > 0:
        raise NumericalOverflow("exponentiated-gradient weights underflowed to zero")
    if Q.floor == 0:
        return y / total
    # KL projection onto the floored simplex: x_i = max(floor, c * y_i)
    clamped = np.zeros(Q.dim, dtype=bool)
    while True:
        free = ~clamped
        c = (1.0 - Q.floor * np.count_nonzero(clamped)) / np.sum(y[free])
        grown = clamped | (c * y < Q.floor)
        if np.array_equal(grown, clamped):
            break
        clamped = grown
    return np.where(clamped, Q.floor, c * y)


def _check_step_args(Q: FeasibleSet, x: np.ndarray, g: np.ndarray, gamma: float) -> None:
    if x.shape != (Q.dim,) or g.shape != (Q.dim,):
        raise DimensionMismatch(f"expected dimension {Q.dim}, got {x.shape} and {g.shape}")
    if not gamma > 0:
        raise DomainError("step size must be positive")


def mirror_step(psi: MirrorMap, Q: FeasibleSet, x, g, gamma: float) -> np.ndarray:
    """argmin over Q of <g, u> + V(u, x) / gamma, solved exactly.

    Supported pairs are the Euclidean map with any built-in set (projected
    subgradient step) and the negative entropy with a simplex
    (exponentiated gradient, followed by the KL projection onto the floor).
    """
    x = np.asarray(x, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    _check_step_args(Q, x, g, gamma)
    if isinstance(psi, EuclideanHalfSq):
        return Q.project(x - gamma * g)
    if isinstance(psi, NegEntropy) and isinstance(Q, Simplex):
        return _entropic_step(Q, x, g, gamma)
    raise UnsupportedGeometry(f"no exact mirror step for {type(psi).__name__} on {type(Q).__name__}")


def composite_mirror_step(psi: MirrorMap, Q: FeasibleSet, h: CompositeTerm, x, g, gamma: float) -> np.ndarray:
    """argmin over Q of <g, u> + h(u) + V(u, x) / gamma, solved exactly.

    ``h`` enters unscaled, so the l1 term is soft-thresholded at
    ``gamma * lam`` and a linear term shifts the gradient by ``c``.
    """
    if isinstance(h, ZeroTerm):
        return mirror_step(psi, Q, x, g, gamma)
    if isinstance(h, Linear):
        return mirror_step(psi, Q, x, np.asarray(g, dtype=np.float64) + h.c, gamma)
    if isinstance(h, L1Scaled) and isinstance(psi, EuclideanHalfSq) and isinstance(Q, Box):
        x = np.asarray(x, dtype=np.float64)
        g = np.asarray(g, dtype=np.float64)
        _check_step_args(Q, x, g, gamma)
        v = x - gamma * g
        t = gamma * h.lam
        return Q.project(np.sign(v) * np.maximum(np.abs(v) - t, 0.0))
    raise UnsupportedGeometry(
        f"no exact composite step for {type(h).__name__} with {type(psi).__name__} on {type(Q).__name__}"
    )
