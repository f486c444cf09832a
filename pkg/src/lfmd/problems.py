"""Test problems with known optima, and a registry addressable by name.

Registry names::

    example1
    sqrt-simplex-n{n}
    pwl-max-n{n}-s{seed}
    lasso-box-n{n}-l{lam}-s{seed}
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import linprog

from lfmd.errors import DomainError, NeedsExplicitR, OracleUnavailable
from lfmd.geometry import (
    DEFAULT_SIMPLEX_FLOOR,
    Ball2,
    Box,
    CompositeTerm,
    EuclideanHalfSq,
    FeasibleSet,
    L1Scaled,
    MirrorMap,
    NegEntropy,
    Simplex,
    as_vector,
)
from lfmd.solver import Objective

REFERENCE_AGREEMENT = 1e-10


@dataclass(frozen=True)
class KnownOptimum:
    x_star: np.ndarray
    f_star: float
    F_star: float | None = None


@dataclass(frozen=True, eq=False)
class TestProblem:
    __test__ = False  # not a pytest class

    name: str
    objective: Objective
    feasible: FeasibleSet
    mirror: MirrorMap
    x1: np.ndarray
    known_opt: KnownOptimum | None = None
    composite: CompositeTerm | None = None
    lipschitz_on_Q: bool = True

    def with_mirror(self, mirror: MirrorMap) -> "TestProblem":
        return replace(self, mirror=mirror)

    def default_R(self) -> float:
        return safe_R(self.feasible, self.mirror)

    def F(self, x) -> float:
        x = np.asarray(x, dtype=np.float64)
        return self.objective(x) + (self.composite(x) if self.composite is not None else 0.0)


def safe_R(feasible: FeasibleSet, mirror: MirrorMap) -> float:
    """Half the squared l2 diameter of Q, a valid Bregman radius for the Euclidean map."""
    if not isinstance(mirror, EuclideanHalfSq):
        raise NeedsExplicitR(f"no closed-form radius for {type(mirror).__name__}; supply R explicitly")
    if isinstance(feasible, Box):
        return 0.5 * float(np.sum((feasible.upper - feasible.lower) ** 2))
    if isinstance(feasible, Ball2):
        return 2.0 * feasible.radius**2
    if isinstance(feasible, Simplex):
        return 1.0
    raise DomainError(f"unknown feasible set {feasible!r}")


def entropy_radius(x_star, floor: float) -> float:
    """max over the floored simplex of KL(x_star || x).

    KL is convex in its second argument, so the maximum sits at a vertex
    of the floored simplex. Useful as R for the entropic geometry.
    """
    x_star = as_vector(x_star)
    n = x_star.shape[0]
    if not floor > 0:
        raise NeedsExplicitR("the KL radius is unbounded without a positive floor")
    psi = NegEntropy()
    best = 0.0
    for i in range(n):
        v = np.full(n, floor)
        v[i] = 1.0 - (n - 1) * floor
        best = max(best, psi.bregman(x_star, v))
    return best


# --------------------------------------------------------------------------


def example1() -> TestProblem:
    """f(x) = x^2 / 2 on [-10, 10], started at 10."""
    return TestProblem(
        name="example1",
        objective=Objective(lambda x: 0.5 * float(x[0] * x[0]), lambda x: np.array(x, dtype=np.float64), "half-square"),
        feasible=Box.uniform(1, -10.0, 10.0),
        mirror=EuclideanHalfSq(),
        x1=as_vector([10.0]),
        known_opt=KnownOptimum(as_vector([0.0]), 0.0),
    )


def non_lipschitz_sqrt_simplex(n: int, floor: float = DEFAULT_SIMPLEX_FLOOR) -> TestProblem:
    """f(x) = -sum sqrt(x_i) on the floored simplex.

    Subgradients grow like 1/(2 sqrt(floor)) near the boundary, so no
    Lipschitz constant exists as the floor shrinks. Starts next to a vertex.
    """
    if n < 2:
        raise DomainError("need n >= 2")
    if not floor > 0:
        raise DomainError("sqrt-simplex needs a positive floor to keep subgradients finite")
    Q = Simplex(n, floor)
    x1 = np.full(n, floor)
    x1[0] = 1.0 - (n - 1) * floor
    return TestProblem(
        name=f"sqrt-simplex-n{n}",
        objective=Objective(lambda x: -float(np.sum(np.sqrt(x))), lambda x: -0.5 / np.sqrt(x), "neg-sqrt-sum"),
        feasible=Q,
        mirror=NegEntropy(),
        x1=as_vector(x1),
        known_opt=KnownOptimum(as_vector(np.full(n, 1.0 / n)), -math.sqrt(n)),
        lipschitz_on_Q=False,
    )


def _pwl_objective(slopes: np.ndarray, anchor: np.ndarray, offsets: np.ndarray, name: str) -> Objective:
    def value(x):
        return float(np.max(slopes @ (x - anchor) + offsets))

    def subgrad(x):
        vals = slopes @ (x - anchor) + offsets
        active = vals == np.max(vals)
        # mean of the active slopes: picks 0 at the kink of |t|
        return slopes[active].mean(axis=0)

    return Objective(value, subgrad, name)


def _grid_min(value, Q: Box, points_per_axis: int) -> float:
    axes = [np.linspace(lo, hi, points_per_axis) for lo, hi in zip(Q.lower, Q.upper)]
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, Q.dim)
    return min(value(p) for p in mesh)


def piecewise_linear_max(n: int, seed: int = 0, planted: bool = True, slopes=None, offsets=None, anchor=None) -> TestProblem:
    """f(x) = max_j <a_j, x - anchor> + b_j on [-1, 1]^n.

    With ``planted`` (the default) n + 1 pieces with zero mean slope meet at
    a random x* and n further pieces sit strictly below, so f* = 0.
    Otherwise pieces are random (or given) and the optimum comes from a
    linear program, cross-checked on a grid; only n <= 3 is supported then.
    """
    if n < 1:
        raise DomainError("need n >= 1")
    rng = np.random.default_rng(seed)
    Q = Box.uniform(n, -1.0, 1.0)
    name = f"pwl-max-n{n}-s{seed}"
    if slopes is None and planted:
        x_star = rng.uniform(-0.5, 0.5, n)
        active = rng.standard_normal((n, n))
        active = np.vstack([active, -active.sum(axis=0)])
        inactive = rng.standard_normal((n, n))
        A = np.vstack([active, inactive])
        b = np.concatenate([np.zeros(n + 1), -rng.uniform(0.5, 1.5, n)])
        obj = _pwl_objective(A, x_star, b, name)
        return TestProblem(name, obj, Q, EuclideanHalfSq(), as_vector(np.ones(n)), KnownOptimum(as_vector(x_star), 0.0))

    if slopes is not None:
        A = np.atleast_2d(np.asarray(slopes, dtype=np.float64))
        b = np.zeros(A.shape[0]) if offsets is None else np.asarray(offsets, dtype=np.float64)
        center = np.zeros(n) if anchor is None else np.asarray(anchor, dtype=np.float64)
        name = f"pwl-max-n{n}-custom"
    else:
        A = rng.standard_normal((2 * n + 1, n))
        b = rng.uniform(-1.0, 1.0, 2 * n + 1)
        center = np.zeros(n)
    if n > 3:
        raise OracleUnavailable("grid verification only for n <= 3; request a planted optimum instead")
    obj = _pwl_objective(A, center, b, name)
    # min t  s.t.  A (x - center) + b <= t,  x in box
    J = A.shape[0]
    res = linprog(
        c=np.r_[np.zeros(n), 1.0],
        A_ub=np.hstack([A, -np.ones((J, 1))]),
        b_ub=A @ center - b,
        bounds=[(lo, hi) for lo, hi in zip(Q.lower, Q.upper)] + [(None, None)],
        method="highs",
    )
    if not res.success:
        raise OracleUnavailable(f"LP oracle failed: {res.message}")
    x_star = Q.project(res.x[:n])
    f_star = obj(x_star)
    if _grid_min(obj, Q, {1: 2001, 2: 201, 3: 41}[n]) < f_star - 1e-9:
        raise OracleUnavailable("grid oracle found a point below the LP optimum")
    return TestProblem(name, obj, Q, EuclideanHalfSq(), as_vector(np.ones(n)), KnownOptimum(as_vector(x_star), f_star))


def abs_on_interval(center: float = 0.3) -> TestProblem:
    """f(x) = |x - center| on [0, 1], started at 1."""
    p = piecewise_linear_max(1, slopes=[[1.0], [-1.0]], offsets=[0.0, 0.0], anchor=[center])
    return replace(p, name=f"abs-{center}", x1=as_vector([1.0]))


# --------------------------------------------------------------------------
# lasso references


def _box_soft(v, t, lo, hi):
    return np.clip(np.sign(v) * np.maximum(np.abs(v) - t, 0.0), lo, hi)


def _lasso_fista(A, b, lam, lo, hi, iters=20000):
    L = np.linalg.norm(A, 2) ** 2
    x = np.zeros(A.shape[1])
    y, t = x.copy(), 1.0
    for _ in range(iters):
        x_new = _box_soft(y - A.T @ (A @ y - b) / L, lam / L, lo, hi)
        t_new = 0.5 * (1 + math.sqrt(1 + 4 * t * t))
        y = x_new + (t - 1) / t_new * (x_new - x)
        if np.array_equal(x_new, x):
            break
        x, t = x_new, t_new
    return x_new


def _lasso_coordinate_descent(A, b, lam, lo, hi, sweeps=100000):
    n = A.shape[1]
    x = np.zeros(n)
    r = A @ x - b
    col_sq = np.sum(A * A, axis=0)
    for _ in range(sweeps):
        delta = 0.0
        for j in range(n):
            if col_sq[j] == 0:
                continue
            v = x[j] - A[:, j] @ r / col_sq[j]
            xj = float(_box_soft(np.array([v]), lam / col_sq[j], lo[j], hi[j])[0])
            if xj != x[j]:
                r += A[:, j] * (xj - x[j])
                delta = max(delta, abs(xj - x[j]))
                x[j] = xj
        if delta < 1e-16:
            break
    return x


def lasso_on_box(n: int, lam: float, seed: int = 0, A=None, b=None) -> TestProblem:
    """f = ||Ax - b||^2 / 2, h = lam ||x||_1 on [-1, 1]^n, started at all-ones.

    The optimum is computed twice (accelerated proximal gradient and
    coordinate descent) and must agree to 1e-10.
    """
    if n < 1 or lam < 0:
        raise DomainError("need n >= 1 and lam >= 0")
    if A is None:
        rng = np.random.default_rng(seed)
        A = rng.standard_normal((2 * n, n))
        x_true = np.where(np.arange(n) % 2 == 0, rng.uniform(-1, 1, n), 0.0)
        b = A @ x_true + 0.1 * rng.standard_normal(2 * n)
    A = np.atleast_2d(np.asarray(A, dtype=np.float64))
    b = np.atleast_1d(np.asarray(b, dtype=np.float64))
    Q = Box.uniform(n, -1.0, 1.0)
    h = L1Scaled(lam)
    obj = Objective(
        lambda x: 0.5 * float(np.sum((A @ x - b) ** 2)),
        lambda x: A.T @ (A @ x - b),
        "least-squares",
    )
    xa = _lasso_fista(A, b, lam, Q.lower, Q.upper)
    xb = _lasso_coordinate_descent(A, b, lam, Q.lower, Q.upper)
    Fa, Fb = obj(xa) + h(xa), obj(xb) + h(xb)
    if abs(Fa - Fb) > REFERENCE_AGREEMENT or np.max(np.abs(xa - xb)) > REFERENCE_AGREEMENT:
        raise OracleUnavailable(f"lasso references disagree: {Fa} vs {Fb}")
    x_star = xb if Fb <= Fa else xa
    return TestProblem(
        name=f"lasso-box-n{n}-l{lam:g}-s{seed}",
        objective=obj,
        feasible=Q,
        mirror=EuclideanHalfSq(),
        x1=as_vector(np.ones(n)),
        known_opt=KnownOptimum(as_vector(x_star), obj(x_star), min(Fa, Fb)),
        composite=h,
    )


# --------------------------------------------------------------------------

_PATTERNS = [
    (re.compile(r"^example1$"), lambda m, o: example1()),
    (
        re.compile(r"^sqrt-simplex-n(\d+)$"),
        lambda m, o: non_lipschitz_sqrt_simplex(int(m[1]), o.get("floor") or DEFAULT_SIMPLEX_FLOOR),
    ),
    (re.compile(r"^pwl-max-n(\d+)-s(\d+)$"), lambda m, o: piecewise_linear_max(int(m[1]), int(m[2]))),
    (
        re.compile(r"^lasso-box-n(\d+)-l([0-9.eE+-]+)-s(\d+)$"),
        lambda m, o: lasso_on_box(int(m[1]), float(m[2]), int(m[3])),
    ),
]


def get_problem(name: str, floor: float | None = None) -> TestProblem:
    """Build a registered problem from its name."""
    for pattern, build in _PATTERNS:
        match = pattern.match(name)
        if match:
            return build(match, {"floor": floor})
    raise KeyError(f"unknown problem {name!r}")


# k -> (x^k, gamma_k) for the half-square problem under Nesterov steps, as published
EXAMPLE1_TABLE = {
    1: (10.0, 0.141421356237310),
    2: (8.58578643762690, 0.116471566962991),
    3: (7.58578643762690, 0.107635060338339),
    4: (6.76928985669918, 0.104458044515078),
    5: (6.06218307551263, 0.104328015857587),
    13: (2.06458695099841, 0.189980988733214),
    14: (1.67235468072204, 0.226007363967817),
    24: (0.209552285731976, 1.37758046201432),
    25: (-0.0791228488628367, 3.57472862187939),
    48: (0.166305589462573, 1.22740399701280),
    49: (-0.0378185557693590, 5.34210005645243),
    60: (0.155379438403268, 1.17502153252226),
    61: (-0.0271947474317873, 6.65832593368331),
    80: (0.143015997988010, 1.10556780523025),
    81: (-0.0150978850204088, 10.4077385707513),
}


def simulate_example1_nesterov(N: int = 81):
    """Run example1 under Nesterov steps; returns (k, x^k, gamma_k) lists."""
    from lfmd.schedule import NesterovAdaptive
    from lfmd.solver import SolverConfig, mirror_descent

    p = example1()
    cfg = SolverConfig(N, NesterovAdaptive(1.0), p.mirror, p.feasible, record_iterates=True)
    trace = mirror_descent(p.objective, p.x1, cfg)
    xs = [float(x[0]) for x in trace.iterates[: trace.n_completed]]
    return list(range(1, trace.n_completed + 1)), xs, [float(g) for g in trace.gamma]
