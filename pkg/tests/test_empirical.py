import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import naive_cn, naive_product, untruncated
from trunctail.empirical import (build_sorted, coverage, empirical_cdf, lb_survival_at_kth,
                                 lynden_bell_cdf, w_survival_at_kth, woodroofe_cdf)
from trunctail.models import TruncatedSample, TruncationScheme, generate_truncated_sample


def random_small_sample(rng, ties=False):
    n = int(rng.integers(1, 9))
    if ties:
        x = rng.integers(1, 5, size=n).astype(float)
    else:
        x = rng.uniform(0.1, 10, size=n)
    y = x + rng.exponential(3.0, size=n) * (rng.random(n) < 0.8)
    return TruncatedSample(x, y)


def test_coverage_s3(s3):
    s = build_sorted(s3)
    np.testing.assert_array_equal(s.x_order, [1, 2, 3])
    np.testing.assert_array_equal(s.y_co, [2, 5, 4])
    np.testing.assert_allclose(s.cn_at_order, [1 / 3, 2 / 3, 2 / 3], rtol=1e-15)
    assert coverage(s, 2.0) == pytest.approx(2 / 3)
    assert coverage(s, 3.0) == pytest.approx(2 / 3)
    assert np.all(s.cn_at_order >= 1 / 3)


def test_lynden_bell_s3(s3):
    s = build_sorted(s3)
    assert lynden_bell_cdf(s, 2.5) == pytest.approx(0.5, rel=1e-15)
    assert lynden_bell_cdf(s, 3.0) == 1.0
    assert lynden_bell_cdf(s, 7.0) == 1.0
    assert lynden_bell_cdf(s, 0.5) == 0.0
    assert s.zero_factor.tolist() == [True, False, False]


def test_woodroofe_s3(s3):
    s = build_sorted(s3)
    assert woodroofe_cdf(s, 2.5) == pytest.approx(np.exp(-0.5), rel=1e-15)
    assert woodroofe_cdf(s, 3.0) == 1.0


def test_survival_at_kth_s3(s3):
    s = build_sorted(s3)
    assert lb_survival_at_kth(s, 2) == pytest.approx(0.75, rel=1e-15)
    assert 1 - lynden_bell_cdf(s, 1.0) == pytest.approx(0.75, rel=1e-15)
    for k in (0, 3):
        with pytest.raises(ValueError):
            lb_survival_at_kth(s, k)


def test_woodroofe_untruncated_closed_form():
    x = np.arange(1.0, 21.0)
    s = build_sorted(untruncated(x))
    n = x.size
    for j in range(1, n + 1):
        expected = np.exp(-sum(1.0 / i for i in range(j + 1, n + 1)))
        assert woodroofe_cdf(s, x[j - 1]) == pytest.approx(expected, rel=1e-13)


def test_complete_data_reduction():
    rng = np.random.default_rng(3)
    for _ in range(50):
        x = rng.pareto(1.5, size=int(rng.integers(5, 300))) + 1.0
        s = build_sorted(untruncated(x))
        n = s.n
        np.testing.assert_allclose(lynden_bell_cdf(s, s.x_order), np.arange(1, n + 1) / n,
                                   rtol=0, atol=1e-12)
        for k in range(1, n):
            assert lb_survival_at_kth(s, k) == pytest.approx(k / n, abs=1e-12)


@pytest.mark.parametrize("ties", [False, True])
def test_oracle_equivalence(ties):
    rng = np.random.default_rng(11 + ties)
    for _ in range(500):
        smp = random_small_sample(rng, ties)
        s = build_sorted(smp)
        x, y = smp.x.tolist(), smp.y.tolist()
        grid = sorted(set(x)) + [min(x) - 0.5, max(x) + 1.0] + [(a + b) / 2 for a, b in zip(x, y)]
        for t in grid:
            assert lynden_bell_cdf(s, t) == pytest.approx(naive_product(x, y, t, "lb"), abs=1e-14)
            assert woodroofe_cdf(s, t) == pytest.approx(naive_product(x, y, t, "w"), abs=1e-14)
            assert coverage(s, t) == pytest.approx(naive_cn(x, y, t), abs=1e-15)


def test_telescoping_identity():
    sch = TruncationScheme.from_p(0.6, 0.7)
    for seed in range(20):
        s = build_sorted(generate_truncated_sample(sch, 300, seed))
        assert not s.has_ties
        for k in range(1, s.n):
            lhs = lb_survival_at_kth(s, k)
            assert lhs == pytest.approx(1 - lynden_bell_cdf(s, s.x_order[s.n - k - 1]), abs=1e-12)


def test_product_limit_ordering_and_monotonicity():
    sch = TruncationScheme.from_p(0.8, 0.55)
    for seed in range(10):
        s = build_sorted(generate_truncated_sample(sch, 500, seed))
        assert np.all(np.diff(s.flb_at_order) >= 0)
        assert np.all(np.diff(s.fw_at_order) >= 0)
        assert np.all(s.flb_at_order <= s.fw_at_order)
        assert np.all((s.flb_at_order >= 0) & (s.fw_at_order <= 1))
        assert s.flb_at_order[-1] == 1.0 and s.fw_at_order[-1] == 1.0
        assert np.all(s.cn_at_order >= 1 / s.n)
        grid = np.linspace(0, s.x_order[-1] * 1.1, 400)
        assert np.all(coverage(s, grid) <= empirical_cdf(s, grid) + 1e-15)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(st.floats(0.01, 100), st.floats(0, 50)), min_size=2, max_size=40))
def test_woodroofe_survival_sum_matches_definition(pairs):
    smp = TruncatedSample.from_pairs([(a, a + b) for a, b in pairs])
    s = build_sorted(smp)
    for k in range(1, s.n):
        direct = np.sum(s.fw_at_order[s.n - k:] / s.cn_at_order[s.n - k:]) / s.n
        assert w_survival_at_kth(s, k) == pytest.approx(direct, rel=1e-14)


def test_ties_use_strict_product():
    smp = TruncatedSample.from_pairs([(1, 3), (2, 2), (2, 5), (4, 6)])
    s = build_sorted(smp)
    # both X = 2 atoms see only the factor at X = 4
    c4 = naive_cn(smp.x.tolist(), smp.y.tolist(), 4.0)
    expected = 1 - 1 / (4 * c4)
    assert s.flb_at_order[1] == pytest.approx(expected)
    assert s.flb_at_order[2] == pytest.approx(expected)
    assert s.has_ties
