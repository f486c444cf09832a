import math

import numpy as np
import pytest

from lfmd.analysis import (
    BoundParams,
    ReportKind,
    audit_trace,
    corollary1_rhs,
    corollary2_rhs,
    empirical_rate,
    power_sum,
    theorem1_rhs,
    theorem2_rhs,
)
from lfmd.errors import BoundUndefined, DegenerateFit, InvalidM, MissingOptimum
from lfmd.problems import abs_on_interval, entropy_radius, example1, get_problem
from lfmd.schedule import LipschitzFree, NesterovAdaptive, WeightScheme
from lfmd.solver import SolverConfig, composite_mirror_descent, mirror_descent

# reference values evaluated with mpmath at 40 digits
T1_M0_N4 = 59.80571312970217
T1_M2_N4 = 70.73132184970986
T1_MM1_N4 = 55.36686825384472
T2_MM1_N4 = 56.80341402475529


class TestBounds:
    def test_theorem1(self):
        assert theorem1_rhs(BoundParams(R=2.0, sigma=1.0, m=0, N=1), 3.0) == pytest.approx(6.0)
        assert theorem1_rhs(BoundParams(50.0, 1.0, 0, 4), 10.0) == pytest.approx(T1_M0_N4, rel=1e-14)
        assert theorem1_rhs(BoundParams(50.0, 1.0, 2, 4), 10.0) == pytest.approx(T1_M2_N4, rel=1e-14)
        assert theorem1_rhs(BoundParams(50.0, 1.0, -1, 4), 10.0) == pytest.approx(T1_MM1_N4, rel=1e-14)

    def test_corollary1(self):
        assert corollary1_rhs(BoundParams(50.0, 1.0, 0, 4), 10.0) == pytest.approx(75.0)
        assert corollary1_rhs(BoundParams(2.0, 1.0, 0, 1), 1.0) == pytest.approx(3.0)
        assert corollary1_rhs(BoundParams(0.5, 1.0, 0, 100), 1.0) == pytest.approx(0.15)
        with pytest.raises(InvalidM):
            corollary1_rhs(BoundParams(1.0, 1.0, -0.5, 4), 1.0)

    def test_theorem2(self):
        p = BoundParams(50.0, 1.0, 0, 4)
        assert theorem2_rhs(p, 10.0, 10.0, 0.0) == theorem1_rhs(p, 10.0)
        assert theorem2_rhs(p, 10.0, 10.0, 2.0) == pytest.approx(T1_M0_N4 + 0.5, rel=1e-14)
        pm = BoundParams(50.0, 1.0, -1, 4)
        assert theorem2_rhs(pm, 10.0, 5.0, 2.0) == pytest.approx(T2_MM1_N4, rel=1e-14)
        with pytest.raises(InvalidM):
            theorem2_rhs(BoundParams(50.0, 1.0, 1, 4), 10.0, 10.0, 1.0)
        with pytest.raises(BoundUndefined):
            theorem2_rhs(pm, 10.0, 0.0, 1.0)

    def test_corollary2(self):
        assert corollary2_rhs(BoundParams(50.0, 1.0, 0, 4), 10.0, 0.0) == pytest.approx(75.0)
        assert corollary2_rhs(BoundParams(50.0, 1.0, 0, 4), 10.0, 2.0) == pytest.approx(75.5)
        assert corollary2_rhs(BoundParams(0.5, 1.0, 0, 100), 1.0, 5.0) == pytest.approx(0.2)

    def test_power_sum_against_closed_forms(self):
        assert power_sum(100, 1.0) == 5050.0
        assert power_sum(10, 0.0) == 10.0
        assert power_sum(4, -0.5) == pytest.approx(2.784457050376173, rel=1e-15)

    def test_dominance_and_decay(self):
        rng = np.random.default_rng(0)
        Ns = np.unique(np.r_[1, 2, 3, 10, 1000, 10**6, rng.integers(1, 10**6, 40)])
        prev = math.inf
        for N in Ns:
            p = BoundParams(3.0, 1.0, 0, int(N))
            c = corollary1_rhs(p, 2.0)
            assert theorem1_rhs(p, 2.0) <= c
            assert c < prev
            prev = c

    def test_theorem2_dominates_theorem1(self):
        rng = np.random.default_rng(1)
        for _ in range(200):
            p = BoundParams(rng.uniform(0.1, 10), 1.0, rng.uniform(-1, 0), int(rng.integers(1, 500)))
            g1, gmax = sorted(rng.uniform(0.1, 10, 2))
            assert theorem2_rhs(p, gmax, g1, rng.uniform(0, 5)) >= theorem1_rhs(p, gmax)


class TestEmpiricalRate:
    def test_exact_power_laws(self):
        Ns = [10, 100, 1000, 10000]
        assert empirical_rate([(N, 3 * N**-0.5) for N in Ns]) == pytest.approx(-0.5, abs=1e-12)
        assert empirical_rate([(N, 0.2 / N) for N in Ns]) == pytest.approx(-1.0, abs=1e-12)

    def test_degenerate(self):
        with pytest.raises(DegenerateFit):
            empirical_rate([(1, 1.0), (2, 0.5), (3, 0.0), (4, 0.1)])
        with pytest.raises(DegenerateFit):
            empirical_rate([(1, 1.0), (2, 0.5), (3, 0.2)])
        with pytest.raises(DegenerateFit):
            empirical_rate([(1, 1.0), (3, 0.5), (2, 0.2), (4, 0.1)])


def _run(p, rule, N, m):
    cfg = SolverConfig(N, rule, p.mirror, p.feasible, WeightScheme(m))
    if p.composite is not None:
        return composite_mirror_descent(p.objective, p.composite, p.x1, cfg)
    return mirror_descent(p.objective, p.x1, cfg)


def _R(p):
    if p.name.startswith("sqrt"):
        return entropy_radius(p.known_opt.x_star, p.feasible.floor)
    return p.default_R()


class TestAudit:
    def test_nesterov_is_diagnostic_only(self):
        p = example1()
        report = audit_trace(_run(p, NesterovAdaptive(), 81, 0.0), p)
        assert report.kind is ReportKind.DIAGNOSTIC_ONLY
        assert report.non_monotone_gamma
        assert report.theorem_rhs is None and report.satisfied is None
        assert report.certificates.violations == 0

    def test_abs_problem(self):
        p = abs_on_interval(0.3)
        report = audit_trace(_run(p, LipschitzFree(0.0, 0.5), 10_000, 0.0), p)
        assert report.kind is ReportKind.THEOREM1
        assert report.observed_gap <= 0.015
        # the run may land exactly on the kink and stop; the bound then uses the completed steps
        assert report.corollary_rhs == pytest.approx(3 * math.sqrt(0.25) / math.sqrt(report.N))
        assert report.satisfied

    def test_missing_optimum(self):
        from dataclasses import replace

        p = replace(example1(), known_opt=None)
        trace = _run(example1(), LipschitzFree(R=200.0), 10, 0.0)
        with pytest.raises(MissingOptimum):
            audit_trace(trace, p)

    def test_report_record_is_flat(self):
        p = example1()
        rec = audit_trace(_run(p, LipschitzFree(R=200.0), 10, 0.0), p).to_record()
        assert rec["kind"] == "Theorem1"
        assert all(not isinstance(v, dict) for v in rec.values())

    @pytest.mark.parametrize("name", ["example1", "sqrt-simplex-n4", "pwl-max-n3-s0", "lasso-box-n4-l0.5-s2"])
    @pytest.mark.parametrize("a", [0.0, 0.5, 1.0])
    def test_grid_audits_pass(self, name, a):
        p = get_problem(name)
        ms = [-1.0, -0.5, 0.0] + ([] if p.composite is not None else [1.0, 2.0])
        for m in ms:
            report = audit_trace(_run(p, LipschitzFree(a, _R(p), p.mirror.sigma), 400, m), p)
            expected = ReportKind.THEOREM2 if p.composite is not None else ReportKind.THEOREM1
            assert report.kind is expected
            assert report.satisfied, (m, report)
            assert report.certificates.violations == 0


def test_report_record_holds_builtin_scalars():
    p = example1()
    rec = audit_trace(_run(p, LipschitzFree(R=200.0), 50, 0.0), p).to_record()
    assert all(v is None or type(v) in (bool, int, float, str) for v in rec.values())
