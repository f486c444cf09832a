"""Mirror descent and composite mirror descent drivers."""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from lfmd.errors import ConfigError, ZeroGradient
from lfmd.geometry import (
    CompositeTerm,
    FeasibleSet,
    MirrorMap,
    ZeroTerm,
    as_vector,
    composite_mirror_step,
    mirror_step,
)
from lfmd.schedule import ZERO_GRADIENT_TOL, ErgodicAverager, StepSizeRule, WeightScheme

log = logging.getLogger(__name__)

AUTO_ITERATE_DIM_LIMIT = 1000


@dataclass(frozen=True)
class Objective:
    """A convex function with a deterministic subgradient oracle."""

    eval: Callable[[np.ndarray], float]
    subgrad: Callable[[np.ndarray], np.ndarray]
    name: str = "f"

    def __call__(self, x):
        return self.eval(x)


@dataclass
class SolverConfig:
    max_iters: int
    rule: StepSizeRule
    mirror: MirrorMap
    feasible: FeasibleSet
    weights: WeightScheme = field(default_factory=WeightScheme)
    composite: CompositeTerm | None = None
    record_iterates: bool | None = None
    record_ergodic: bool = False

    def __post_init__(self):
        if int(self.max_iters) != self.max_iters or self.max_iters < 1:
            raise ConfigError("max_iters must be a positive integer")
        if self.composite is not None and not isinstance(self.composite, ZeroTerm) and self.weights.m > 0:
            raise ConfigError("composite problems require -1 <= m <= 0")

    @property
    def norm(self):
        return self.mirror.norm


class Status(enum.Enum):
    COMPLETED = "CompletedN"
    STOPPED_ZERO_GRADIENT = "StoppedZeroGradient"


@dataclass
class RunTrace:
    """Per-iteration record of a solver run.

    Rows cover the completed iterations ``k = 1..n_completed``. When
    iterates are kept, ``iterates[k-1]`` is x^k and the final row is the
    point after the last completed step.
    """

    k: np.ndarray
    gamma: np.ndarray
    grad_dual_norm: np.ndarray
    omega: np.ndarray
    f: np.ndarray
    h: np.ndarray | None
    x_first: np.ndarray
    x_last: np.ndarray
    x_hat: np.ndarray
    status: Status
    stop_k: int | None
    rule: StepSizeRule
    weights: WeightScheme
    iterates: np.ndarray | None = None
    ergodic: np.ndarray | None = None
    projected_start: bool = False

    @property
    def n_completed(self) -> int:
        return int(self.k.shape[0])

    @property
    def max_grad_dual(self) -> float:
        return float(np.max(self.grad_dual_norm)) if self.n_completed else 0.0

    @property
    def composite(self) -> bool:
        return self.h is not None


def _run(f: Objective, h: CompositeTerm | None, x1, cfg: SolverConfig) -> RunTrace:
    psi, Q, norm = cfg.mirror, cfg.feasible, cfg.mirror.norm
    x = np.array(as_vector(x1, "x1"))
    projected = False
    if not Q.contains(x):
        x = Q.project(x)
        projected = True
        log.warning("x1 is infeasible and was projected onto the feasible set")
    x_first = x.copy()

    rule = cfg.rule.spawn()
    keep = cfg.record_iterates if cfg.record_iterates is not None else Q.dim <= AUTO_ITERATE_DIM_LIMIT
    zero_h = h is None or isinstance(h, ZeroTerm)
    N = int(cfg.max_iters)

    gammas, gnorms, omegas, fvals, hvals, ergodic = [], [], [], [], [], []
    iterates = [x.copy()] if keep else None
    avg = ErgodicAverager()
    status, stop_k = Status.COMPLETED, None

    for k in range(1, N + 1):
        g = np.asarray(f.subgrad(x), dtype=np.float64)
        gnorm = norm.dual(g)
        # a zero subgradient of f certifies optimality only without a composite term
        if zero_h and gnorm <= ZERO_GRADIENT_TOL:
            status, stop_k = Status.STOPPED_ZERO_GRADIENT, k
            break
        try:
            gamma = rule.next_gamma(k, gnorm)
        except ZeroGradient:
            status, stop_k = Status.STOPPED_ZERO_GRADIENT, k
            break
        omega = cfg.weights.weight(k, gamma)
        fvals.append(f.eval(x))
        if h is not None:
            hvals.append(h(x))
        avg.update(x, omega)
        if cfg.record_ergodic:
            xh = avg.average()
            ergodic.append(f.eval(xh) + (h(xh) if h is not None else 0.0))
        gammas.append(gamma)
        gnorms.append(gnorm)
        omegas.append(omega)

        if h is None:
            x = mirror_step(psi, Q, x, g, gamma)
        else:
            x = composite_mirror_step(psi, Q, h, x, g, gamma)
        if keep:
            iterates.append(x.copy())

    # early stop before any completed step: the start point is already optimal
    x_hat = avg.average() if avg.count else x_first.copy()
    return RunTrace(
        k=np.arange(1, len(gammas) + 1),
        gamma=np.array(gammas),
        grad_dual_norm=np.array(gnorms),
        omega=np.array(omegas),
        f=np.array(fvals),
        h=np.array(hvals) if h is not None else None,
        x_first=x_first,
        x_last=x,
        x_hat=x_hat,
        status=status,
        stop_k=stop_k,
        rule=cfg.rule,
        weights=cfg.weights,
        iterates=np.array(iterates) if keep else None,
        ergodic=np.array(ergodic) if cfg.record_ergodic else None,
        projected_start=projected,
    )


def mirror_descent(f: Objective, x1, cfg: SolverConfig) -> RunTrace:
    """Mirror descent: x^{k+1} = argmin_Q <g_k, x> + V(x, x^k) / gamma_k.

    Stops early with ``StoppedZeroGradient`` when the subgradient vanishes;
    ``x_hat`` then averages the completed iterations only.
    """
    if cfg.composite is not None:
        raise ConfigError("mirror_descent takes no composite term; use composite_mirror_descent")
    return _run(f, None, x1, cfg)


def composite_mirror_descent(f: Objective, h: CompositeTerm, x1, cfg: SolverConfig) -> RunTrace:
    """Composite mirror descent for min_Q f + h with h handled inside the step.

    ``h(x1)`` need not vanish. Restricted to weights with -1 <= m <= 0.
    """
    if cfg.weights.m > 0:
        raise ConfigError("composite problems require -1 <= m <= 0")
    return _run(f, h, x1, cfg)
