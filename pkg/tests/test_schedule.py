import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lfmd.errors import DomainError, EmptyAverage, GStatisticUnset, InvalidM, NonMonotonicCall, ZeroGradient
from lfmd.schedule import (
    ErgodicAverager,
    Fixed,
    LipschitzFree,
    NesterovAdaptive,
    WeightScheme,
    g_statistic,
    replay_gammas,
    weight,
)

# x^2, x^3 of the half-square run under Nesterov steps, as published
X2, X3 = 8.58578643762690, 7.58578643762690


def offline_G(norms, a):
    return max(g * j ** ((1 - a) / 2) for j, g in enumerate(norms, start=1))


class TestNextGamma:
    def test_fixed(self):
        rule = Fixed(0.3)
        assert [rule.next_gamma(k, 5.0) for k in (1, 2, 3)] == [0.3] * 3

    def test_nesterov_published_rows(self):
        rule = NesterovAdaptive(1.0)
        assert rule.next_gamma(1, 10.0) == pytest.approx(0.141421356237310, rel=1e-12)
        rule.next_gamma(2, X2)
        assert rule.next_gamma(3, X3) == pytest.approx(0.107635060338339, rel=1e-12)

    def test_lipschitz_free_first_step(self):
        rule = LipschitzFree(a=0.0, R=50.0, sigma=1.0)
        assert rule.next_gamma(1, 10.0) == 1.0
        assert g_statistic(rule) == 10.0

    def test_zero_gradient(self):
        with pytest.raises(ZeroGradient):
            NesterovAdaptive().next_gamma(1, 0.0)
        with pytest.raises(ZeroGradient):
            LipschitzFree(R=1.0).next_gamma(1, 1e-16)
        rule = LipschitzFree(R=1.0)
        rule.next_gamma(1, 2.0)
        assert rule.next_gamma(2, 0.0) > 0  # history keeps G positive

    def test_call_order_enforced(self):
        rule = LipschitzFree(R=1.0)
        with pytest.raises(NonMonotonicCall):
            rule.next_gamma(2, 1.0)
        rule.next_gamma(1, 1.0)
        with pytest.raises(NonMonotonicCall):
            rule.next_gamma(1, 1.0)
        with pytest.raises(NonMonotonicCall):
            rule.next_gamma(3, 1.0)

    def test_parameter_validation(self):
        with pytest.raises(DomainError):
            LipschitzFree(a=1.5, R=1.0)
        with pytest.raises(DomainError):
            LipschitzFree(R=0.0)
        with pytest.raises(DomainError):
            Fixed(-1.0)
        with pytest.raises(DomainError):
            LipschitzFree(R=1.0).next_gamma(1, -1.0)

    def test_spawn_has_fresh_state(self):
        rule = LipschitzFree(0.5, 2.0, 1.0)
        rule.next_gamma(1, 3.0)
        fresh = rule.spawn()
        with pytest.raises(GStatisticUnset):
            g_statistic(fresh)
        assert fresh.params() == rule.params()


class TestGStatistic:
    def test_unset(self):
        with pytest.raises(GStatisticUnset):
            g_statistic(LipschitzFree(R=1.0))

    def test_a0_two_norms(self):
        rule = LipschitzFree(a=0.0, R=1.0)
        for k, g in enumerate([10.0, X2], start=1):
            rule.next_gamma(k, g)
        assert g_statistic(rule) == pytest.approx(12.142135623730951, rel=1e-12)

    def test_a1_is_running_max(self):
        rule = LipschitzFree(a=1.0, R=1.0)
        for k, g in enumerate([10.0, 8.5858, 7.5858], start=1):
            rule.next_gamma(k, g)
        assert g_statistic(rule) == 10.0

    def test_a0_three_norms(self):
        rule = LipschitzFree(a=0.0, R=1.0)
        for k, g in enumerate([10.0, X2, X3], start=1):
            rule.next_gamma(k, g)
        # offline: max(10, X2*sqrt(2), X3*sqrt(3)) = X3*sqrt(3)
        assert g_statistic(rule) == pytest.approx(13.138967525336708, rel=1e-12)

    @given(
        norms=st.lists(st.floats(0.0, 1e6, allow_nan=False), min_size=1, max_size=40).filter(lambda v: v[0] > 1e-10),
        a=st.floats(0.0, 1.0),
    )
    def test_matches_offline_max(self, norms, a):
        rule = LipschitzFree(a=a, R=1.0)
        for k, g in enumerate(norms, start=1):
            rule.next_gamma(k, g)
            assert g_statistic(rule) == offline_G(norms[:k], a)


class TestMonotonicity:
    @settings(max_examples=300)
    @given(
        norms=st.lists(st.floats(0.0, 1e8, allow_nan=False), min_size=2, max_size=60).filter(lambda v: v[0] > 1e-10),
        a=st.floats(0.0, 1.0),
        R=st.floats(1e-3, 1e3),
    )
    def test_lipschitz_free_non_increasing(self, norms, a, R):
        gammas = replay_gammas(LipschitzFree(a, R), norms)
        assert np.all(gammas > 0)
        assert np.all(np.diff(gammas) <= 0)

    @given(
        norms=st.lists(st.floats(1e-3, 1e3), min_size=2, max_size=40),
        m=st.floats(-1.0, 0.0),
        a=st.floats(0.0, 1.0),
    )
    def test_weight_step_consistency(self, norms, m, a):
        gammas = replay_gammas(LipschitzFree(a, 5.0), norms)
        scheme = WeightScheme(m)
        omegas = [scheme.weight(k, g) for k, g in enumerate(gammas, start=1)]
        for k in range(1, len(gammas)):
            diff = omegas[k] / gammas[k] - omegas[k - 1] / gammas[k - 1]
            assert diff == pytest.approx(gammas[k] ** (-(m + 1)) - gammas[k - 1] ** (-(m + 1)), rel=1e-9, abs=1e-12)
            assert diff >= -1e-12
            assert omegas[k] <= omegas[k - 1] * (1 + 1e-12)

    def test_nesterov_can_increase(self):
        rule = NesterovAdaptive()
        g1 = rule.next_gamma(1, 10.0)
        g2 = rule.next_gamma(2, 1.0)
        assert g2 > g1


class TestWeights:
    def test_examples(self):
        assert weight(WeightScheme(0), 17, 0.123) == 1.0
        assert weight(WeightScheme(-1), 5, 0.2) == pytest.approx(0.2)
        assert weight(WeightScheme(2), 9, 0.5) == 9.0
        assert weight(WeightScheme(-0.5), 3, 0.25) == pytest.approx(0.5)

    def test_invalid_m(self):
        with pytest.raises(InvalidM):
            WeightScheme(-1.5)

    @given(m=st.floats(-1.0, 5.0), k=st.integers(1, 10**6), gamma=st.floats(1e-8, 1e8))
    def test_positive(self, m, k, gamma):
        assert WeightScheme(m).weight(k, gamma) > 0


class TestErgodicAverager:
    def test_examples(self):
        avg = ErgodicAverager()
        with pytest.raises(EmptyAverage):
            avg.average()
        avg.update(np.array([3.0]), 0.7)
        assert avg.average()[0] == pytest.approx(3.0)

        avg = ErgodicAverager()
        avg.update(np.array([0.0]), 1.0)
        avg.update(np.array([10.0]), 1.0)
        assert avg.average()[0] == 5.0

        avg = ErgodicAverager()
        avg.update(np.array([0.0]), 1.0)
        avg.update(np.array([6.0]), 2.0)
        assert avg.average()[0] == 4.0

    def test_matches_offline(self):
        rng = np.random.default_rng(3)
        xs = rng.standard_normal((500, 4))
        ws = rng.uniform(0.01, 5, 500)
        avg = ErgodicAverager()
        for x, w in zip(xs, ws):
            avg.update(x, w)
        offline = (ws[:, None] * xs).sum(axis=0) / ws.sum()
        np.testing.assert_allclose(avg.average(), offline, atol=1e-12, rtol=0)

    def test_rejects_nonpositive_weight(self):
        with pytest.raises(DomainError):
            ErgodicAverager().update(np.zeros(2), 0.0)
