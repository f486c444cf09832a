"""Step-size rules, weak-ergodic weights and online weighted averaging."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from lfmd.errors import (
    DimensionMismatch,
    DomainError,
    EmptyAverage,
    GStatisticUnset,
    InvalidM,
    NonMonotonicCall,
    ZeroGradient,
)

ZERO_GRADIENT_TOL = 1e-15


class StepSizeRule:
    """Stateful step-size generator; one instance per solver run.

    Subclasses implement ``_gamma``. ``next_gamma`` enforces that ``k``
    arrives as 1, 2, 3, ...
    """

    name = "rule"

    def __init__(self):
        self._last_k = 0
        self.last_gamma: float | None = None

    def spawn(self) -> "StepSizeRule":
        """A fresh copy with the same parameters and no history."""
        raise NotImplementedError

    def params(self) -> dict:
        raise NotImplementedError

    def next_gamma(self, k: int, grad_dual_norm: float) -> float:
        if k != self._last_k + 1:
            raise NonMonotonicCall(f"expected k={self._last_k + 1}, got k={k}")
        if not grad_dual_norm >= 0:
            raise DomainError("gradient dual norm must be non-negative")
        gamma = self._gamma(k, float(grad_dual_norm))
        self._last_k = k
        self.last_gamma = gamma
        return gamma

    def _gamma(self, k: int, gnorm: float) -> float:
        raise NotImplementedError


class Fixed(StepSizeRule):
    name = "fixed"

    def __init__(self, gamma0: float):
        super().__init__()
        if not (math.isfinite(gamma0) and gamma0 > 0):
            raise DomainError("gamma0 must be positive")
        self.gamma0 = float(gamma0)

    def spawn(self):
        return Fixed(self.gamma0)

    def params(self):
        return {"gamma0": self.gamma0}

    def _gamma(self, k, gnorm):
        return self.gamma0


class NesterovAdaptive(StepSizeRule):
    """gamma_k = sqrt(2 sigma) / (||g_k||_* sqrt(k)). Not monotone in general."""

    name = "nesterov"

    def __init__(self, sigma: float = 1.0):
        super().__init__()
        if not sigma > 0:
            raise DomainError("sigma must be positive")
        self.sigma = float(sigma)

    def spawn(self):
        return NesterovAdaptive(self.sigma)

    def params(self):
        return {"sigma": self.sigma}

    def _gamma(self, k, gnorm):
        if gnorm <= ZERO_GRADIENT_TOL:
            raise ZeroGradient(f"zero subgradient at k={k}")
        return math.sqrt(2 * self.sigma) / (gnorm * math.sqrt(k))


class LipschitzFree(StepSizeRule):
    """gamma_k = sqrt(2 sigma R) / (G_k k^(a/2)) with the running statistic

        G_k = max(G_{k-1}, ||g_k||_* k^((1-a)/2)),   G_0 unset.

    The emitted sequence is positive and non-increasing for any input
    norms, and no Lipschitz constant is needed.
    """

    name = "lipschitz-free"

    def __init__(self, a: float = 0.0, R: float = 1.0, sigma: float = 1.0):
        super().__init__()
        if not 0.0 <= a <= 1.0:
            raise DomainError("a must lie in [0, 1]")
        if not (math.isfinite(R) and R > 0):
            raise DomainError("R must be positive")
        if not sigma > 0:
            raise DomainError("sigma must be positive")
        self.a = float(a)
        self.R = float(R)
        self.sigma = float(sigma)
        self._G: float | None = None

    def spawn(self):
        return LipschitzFree(self.a, self.R, self.sigma)

    def params(self):
        return {"a": self.a, "R": self.R, "sigma": self.sigma}

    @property
    def G(self) -> float:
        if self._G is None:
            raise GStatisticUnset("G is unset before the first step")
        return self._G

    def _gamma(self, k, gnorm):
        candidate = gnorm * k ** ((1 - self.a) / 2)
        G = candidate if self._G is None else max(self._G, candidate)
        if G <= ZERO_GRADIENT_TOL:
            raise ZeroGradient(f"zero subgradient at k={k} with no history")
        self._G = G
        return math.sqrt(2 * self.sigma * self.R) / (G * k ** (self.a / 2))


def g_statistic(rule: LipschitzFree) -> float:
    """Current value of the running statistic G_k."""
    return rule.G


def replay_gammas(rule: StepSizeRule, grad_dual_norms) -> np.ndarray:
    """Re-run a fresh copy of ``rule`` on recorded gradient norms."""
    fresh = rule.spawn()
    return np.array([fresh.next_gamma(k, g) for k, g in enumerate(grad_dual_norms, start=1)])


@dataclass(frozen=True)
class WeightScheme:
    """omega_k = gamma_k^(-m) for -1 <= m <= 0, and k^(m/2) for m > 0."""

    m: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.m) and self.m >= -1):
            raise InvalidM(f"m must be >= -1, got {self.m}")

    def weight(self, k: int, gamma_k: float) -> float:
        if self.m > 0:
            return float(k) ** (self.m / 2)
        if self.m == 0:
            return 1.0
        return gamma_k ** (-self.m)


def weight(scheme: WeightScheme, k: int, gamma_k: float) -> float:
    return scheme.weight(k, gamma_k)


@dataclass
class ErgodicAverager:
    """Running weighted mean sum(omega_k x^k) / sum(omega_k)."""

    weighted_sum: np.ndarray | None = None
    weight_total: float = 0.0
    count: int = field(default=0)

    def update(self, x: np.ndarray, omega: float) -> None:
        if not omega > 0:
            raise DomainError("weights must be positive")
        if self.weighted_sum is None:
            self.weighted_sum = omega * np.asarray(x, dtype=np.float64)
        else:
            if x.shape != self.weighted_sum.shape:
                raise DimensionMismatch("iterate dimension changed")
            self.weighted_sum = self.weighted_sum + omega * x
        self.weight_total += omega
        self.count += 1

    def average(self) -> np.ndarray:
        if self.weighted_sum is None:
            raise EmptyAverage("no iterates averaged yet")
        return self.weighted_sum / self.weight_total
