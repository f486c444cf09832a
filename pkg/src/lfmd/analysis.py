"""Convergence bounds, rate fits and trace audits."""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from lfmd.errors import BoundUndefined, DegenerateFit, DomainError, InvalidM, MissingOptimum
from lfmd.schedule import LipschitzFree

BOUND_SLACK = 1e-9
CERTIFICATE_SLACK = 1e-8


@dataclass(frozen=True)
class BoundParams:
    R: float
    sigma: float = 1.0
    m: float = 0.0
    N: int = 1

    def __post_init__(self):
        if not (self.R > 0 and self.sigma > 0):
            raise DomainError("R and sigma must be positive")
        if self.N < 1:
            raise DomainError("N must be >= 1")
        if not self.m >= -1:
            raise InvalidM(f"m must be >= -1, got {self.m}")


def power_sum(N: int, p: float) -> float:
    """sum_{k=1}^N k^p, accumulated from k = N down to 1, correctly rounded."""
    return math.fsum(float(k) ** p for k in range(N, 0, -1))


def theorem1_rhs(p: BoundParams, max_grad_dual: float) -> float:
    N, m = p.N, p.m
    num = N ** ((m + 1) / 2) + power_sum(N, (m - 1) / 2)
    return math.sqrt(p.R / (2 * p.sigma)) * num / power_sum(N, m / 2) * max_grad_dual


def corollary1_rhs(p: BoundParams, max_grad_dual: float) -> float:
    if p.m != 0:
        raise InvalidM("the uniform-average corollary needs m = 0")
    rhs = 3 * math.sqrt(p.R / (2 * p.sigma)) / math.sqrt(p.N) * max_grad_dual
    assert theorem1_rhs(p, max_grad_dual) <= rhs * (1 + 1e-15)
    return rhs


def theorem2_rhs(p: BoundParams, max_grad_dual: float, grad1_dual: float, h_x1: float) -> float:
    """Composite bound: theorem1_rhs plus the decaying h(x^1) term."""
    if not -1 <= p.m <= 0:
        raise InvalidM("the composite bound needs -1 <= m <= 0")
    base = theorem1_rhs(p, max_grad_dual)
    if h_x1 == 0:
        return base
    if grad1_dual <= 0 or max_grad_dual <= 0:
        if p.m == 0:
            ratio = 1.0
        else:
            raise BoundUndefined("zero first gradient with h(x1) > 0 and m < 0")
    else:
        ratio = (grad1_dual / max_grad_dual) ** p.m
    return base + ratio * h_x1 / power_sum(p.N, p.m / 2)


def corollary2_rhs(p: BoundParams, max_grad_dual: float, h_x1: float) -> float:
    return corollary1_rhs(p, max_grad_dual) + h_x1 / p.N


def empirical_rate(points) -> float:
    """Least-squares slope of log(gap) against log(N)."""
    pts = [(float(n), float(g)) for n, g in points]
    if len(pts) < 4:
        raise DegenerateFit("need at least 4 (N, gap) points")
    Ns = np.array([n for n, _ in pts])
    gaps = np.array([g for _, g in pts])
    if np.any(gaps <= 0) or not np.all(np.isfinite(gaps)):
        raise DegenerateFit("gaps must be positive and finite")
    if np.any(np.diff(Ns) <= 0):
        raise DegenerateFit("N must be strictly increasing")
    slope, _ = np.polyfit(np.log(Ns), np.log(gaps), 1)
    return float(slope)


class ReportKind(enum.Enum):
    THEOREM1 = "Theorem1"
    THEOREM2 = "Theorem2"
    DIAGNOSTIC_ONLY = "DiagnosticOnly"


@dataclass
class CertificateLog:
    checked: int = 0
    violations: int = 0
    worst_excess: float = -math.inf
    first_violation_k: int | None = None


@dataclass
class BoundReport:
    kind: ReportKind
    observed_gap: float
    theorem_rhs: float | None
    corollary_rhs: float | None
    satisfied: bool | None
    slack: float | None
    max_grad_dual: float
    N: int
    non_monotone_gamma: bool
    certificates: CertificateLog = field(default_factory=CertificateLog)

    @property
    def ok(self) -> bool:
        """Bound (if any) holds and every per-iterate certificate holds."""
        return self.satisfied is not False and self.certificates.violations == 0

    def to_record(self) -> dict:
        d = asdict(self)
        d["kind"] = self.kind.value
        cert = d.pop("certificates")
        d.update({f"certificates_{k}": v for k, v in cert.items()})
        # plain Python scalars so the record serializes anywhere
        return {k: v.item() if isinstance(v, np.generic) else v for k, v in d.items()}


def per_iterate_certificates(trace, problem, sigma: float, slack: float = CERTIFICATE_SLACK) -> CertificateLog:
    """Check f(x^k) [+ h(x^{k+1})] - f* <= (V(x*,x^k) - V(x*,x^{k+1}))/gamma_k + gamma_k ||g_k||^2/(2 sigma).

    Requires stored iterates.
    """
    out = CertificateLog()
    if trace.iterates is None or trace.n_completed == 0:
        return out
    psi = problem.mirror
    opt = problem.known_opt
    target = opt.F_star if trace.composite else opt.f_star
    V = [psi.bregman(opt.x_star, x) for x in trace.iterates]
    h = problem.composite
    for i in range(trace.n_completed):
        gamma = trace.gamma[i]
        lhs = trace.f[i] - target
        if trace.composite:
            lhs += h(trace.iterates[i + 1])
        rhs = (V[i] - V[i + 1]) / gamma + gamma * trace.grad_dual_norm[i] ** 2 / (2 * sigma)
        excess = lhs - rhs
        out.checked += 1
        out.worst_excess = max(out.worst_excess, excess)
        if excess > slack:
            out.violations += 1
            if out.first_violation_k is None:
                out.first_violation_k = i + 1
    return out


def audit_trace(trace, problem, p: BoundParams | None = None) -> BoundReport:
    """Compare the observed ergodic gap with the matching bound.

    Only traces produced by the Lipschitz-free rule get a bound; other
    rules yield a ``DiagnosticOnly`` report. ``p`` defaults to the rule's
    own R and sigma with N set to the number of completed iterations.
    """
    if problem.known_opt is None:
        raise MissingOptimum(f"problem {problem.name!r} has no registered optimum")
    opt = problem.known_opt
    rule = trace.rule
    N = max(trace.n_completed, 1)
    if p is None:
        R = getattr(rule, "R", 1.0)
        sigma = getattr(rule, "sigma", problem.mirror.sigma)
        p = BoundParams(R=R, sigma=sigma, m=trace.weights.m, N=N)
    gmax = trace.max_grad_dual

    if trace.composite:
        h = problem.composite
        observed = problem.objective(trace.x_hat) + h(trace.x_hat) - opt.F_star
    else:
        observed = problem.objective(trace.x_hat) - opt.f_star

    non_monotone = bool(np.any(np.diff(trace.gamma) > 0))
    certs = per_iterate_certificates(trace, problem, p.sigma)

    if not isinstance(rule, LipschitzFree) or trace.n_completed == 0:
        # no steps means x_hat = x1 is optimal; nothing to bound
        satisfied = None if trace.n_completed else observed <= BOUND_SLACK
        return BoundReport(ReportKind.DIAGNOSTIC_ONLY, observed, None, None, satisfied, None, gmax, N, non_monotone, certs)

    if trace.composite:
        kind = ReportKind.THEOREM2
        h_x1 = problem.composite(trace.x_first)
        rhs = theorem2_rhs(p, gmax, float(trace.grad_dual_norm[0]), h_x1)
        cor = corollary2_rhs(p, gmax, h_x1) if p.m == 0 else None
    else:
        kind = ReportKind.THEOREM1
        rhs = theorem1_rhs(p, gmax)
        cor = corollary1_rhs(p, gmax) if p.m == 0 else None
    return BoundReport(kind, observed, rhs, cor, observed <= rhs + BOUND_SLACK, rhs - observed, gmax, N, non_monotone, certs)
