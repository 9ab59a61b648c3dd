import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from ssvcg.allocation import ConvergenceError, allocation_rows, allocation_without_agent, efficient_allocation
from ssvcg.surrogate import SurrogateSpec

SQRT = SurrogateSpec.power_law(0.5)

profiles = st.integers(2, 8).flatmap(
    lambda n: arrays(np.float64, n, elements=st.floats(0.0, 10.0)).filter(lambda t: t.max() > 1e-3)
)


def test_closed_form_example():
    a = efficient_allocation(SQRT, [1, 1, 0.25])
    np.testing.assert_allclose(a, [1 / 2.0625, 1 / 2.0625, 0.0625 / 2.0625], atol=1e-15)
    assert a[0] == pytest.approx(0.4848484848, abs=1e-9)
    assert a[2] == pytest.approx(0.0303030303, abs=1e-9)


def test_zero_profile_allocates_nothing():
    np.testing.assert_array_equal(efficient_allocation(SQRT, [0, 0, 0]), [0, 0, 0])
    np.testing.assert_array_equal(efficient_allocation(SQRT.as_custom(), [0, 0, 0]), [0, 0, 0])


@pytest.mark.parametrize("mu", [1e-3, 1.0, 7.5, 1e4])
def test_symmetric_profile(mu):
    np.testing.assert_allclose(efficient_allocation(SQRT, [mu] * 4), [0.25] * 4, atol=1e-15)


def test_leave_one_out_examples():
    np.testing.assert_allclose(allocation_without_agent(SQRT, [1, 1, 0.25], 2), [0.5, 0.5], atol=1e-15)
    np.testing.assert_allclose(
        allocation_without_agent(SQRT, [1, 1, 0.25], 0), [1 / 1.0625, 0.0625 / 1.0625], atol=1e-15
    )
    np.testing.assert_allclose(allocation_without_agent(SQRT, [1, 0, 0], 1), [1, 0], atol=0)
    with pytest.raises(IndexError):
        allocation_without_agent(SQRT, [1, 1], 2)


def test_single_agent_gets_everything():
    np.testing.assert_array_equal(efficient_allocation(SQRT, [3.0]), [1.0])


def test_small_alpha_no_overflow():
    a = efficient_allocation(SurrogateSpec.power_law(0.01), [1000.0, 999.0, 1.0])
    assert np.all(np.isfinite(a))
    assert a.sum() == pytest.approx(1.0, abs=1e-12)


def test_invalid_profiles():
    for bad in ([[1.0, 2.0]], [1.0, -0.1], [1.0, np.nan], [np.inf, 1.0]):
        with pytest.raises(ValueError):
            efficient_allocation(SQRT, bad)


def test_custom_path_matches_closed_form_bulk():
    rng = np.random.default_rng(7)
    for alpha in (0.01, 0.25, 0.5, 0.75, 0.99):
        spec = SurrogateSpec.power_law(alpha)
        for n in range(2, 11):
            th = rng.random((100, n))
            np.testing.assert_allclose(allocation_rows(spec.as_custom(), th), allocation_rows(spec, th), atol=1e-8)


def test_custom_log_surrogate_kkt():
    spec = SurrogateSpec.custom(lambda a: np.log1p(a), lambda a: 1.0 / (1.0 + a))
    th = np.array([3.0, 2.0, 0.5, 0.0])
    a = efficient_allocation(spec, th)
    assert a.sum() == pytest.approx(1.0, abs=1e-9)
    assert a[3] == 0.0
    # nonpositive allocations allowed for log1p: only a_i >= 0 with KKT slack
    marg = th[:3] * spec.dU(a[:3])
    pos = a[:3] > 1e-12
    assert np.ptp(marg[pos]) < 1e-6
    assert np.all(marg[~pos] <= marg[pos].max() + 1e-6)


def test_non_conforming_custom_raises():
    # U' constant: demand of tied bidders jumps from 0 to 2, nothing clears
    spec = SurrogateSpec.custom(lambda a: a, lambda a: np.ones_like(a))
    with pytest.raises(ConvergenceError):
        efficient_allocation(spec, [1.0, 1.0])


@settings(max_examples=200, deadline=None)
@given(profiles, st.floats(0.05, 20.0))
def test_scale_invariance(theta, lam):
    np.testing.assert_allclose(efficient_allocation(SQRT, lam * theta), efficient_allocation(SQRT, theta), atol=1e-10)


@settings(max_examples=200, deadline=None)
@given(profiles, st.sampled_from([0.1, 0.5, 0.9]))
def test_allocation_invariants(theta, alpha):
    spec = SurrogateSpec.power_law(alpha)
    a = efficient_allocation(spec, theta)
    assert np.all(a >= 0)
    assert a.sum() == pytest.approx(1.0, abs=1e-9)
    assert np.all(a[theta == 0] == 0)
    for i in range(theta.size):
        others = np.delete(a, i)
        assert np.all(allocation_without_agent(spec, theta, i) >= others - 1e-12)


@settings(max_examples=100, deadline=None)
@given(profiles.map(lambda t: t + 0.01))
def test_kkt_stationarity_numeric_path(theta):
    spec = SQRT.as_custom()
    a = efficient_allocation(spec, theta)
    marg = theta * spec.dU(a)
    assert np.ptp(marg) <= 1e-6 * marg.max()
