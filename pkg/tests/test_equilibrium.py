import numpy as np
import pytest

from ssvcg.equilibrium import (
    ValuationSpec,
    load_valuations,
    nash_bids,
    true_efficient_allocation,
    utility,
    verify_best_response,
    verify_equilibrium_vp,
)
from ssvcg.mechanism import RebateCoefficients, clarke_surplus, rebates, surrogate_welfare
from ssvcg.oracles import mu_ne_closed
from ssvcg.rebate_design import SamplingConfig, optimize_rebates
from ssvcg.surrogate import SurrogateSpec

SQRT = SurrogateSpec.power_law(0.5)
V2 = ValuationSpec.power(2.0, 0.5)
V1 = ValuationSpec.power(1.0, 0.5)


def test_true_allocation_examples():
    np.testing.assert_allclose(true_efficient_allocation([V2] * 4), [0.25] * 4, atol=1e-12)
    np.testing.assert_allclose(true_efficient_allocation([V2, V1]), [0.8, 0.2], atol=1e-10)
    tiny = true_efficient_allocation([V2, ValuationSpec.power(1e-6, 0.5)])
    assert tiny[0] == pytest.approx(1.0, abs=1e-9)
    assert tiny[1] < 1e-6
    with pytest.raises(ValueError):
        true_efficient_allocation([V2])


def test_nash_bid_examples():
    np.testing.assert_allclose(nash_bids([V2] * 4, SQRT), [2.0] * 4, atol=1e-10)
    np.testing.assert_allclose(nash_bids([V2, V1], SQRT), [2.0, 1.0], atol=1e-8)


@pytest.mark.parametrize("n,alpha,w,beta", [(3, 0.25, 1.0, 0.5), (5, 0.75, 3.0, 0.3), (7, 0.5, 0.5, 0.8)])
def test_identical_agents_match_mu_ne(n, alpha, w, beta):
    v = ValuationSpec.power(w, beta)
    theta = nash_bids([v] * n, SurrogateSpec.power_law(alpha))
    mu = mu_ne_closed(float(v.marginal(1.0 / n)), n, alpha)
    np.testing.assert_allclose(theta, mu, rtol=1e-9)


def test_best_response_examples():
    theta = np.full(4, 2.0)
    rep = verify_best_response([V2] * 4, SQRT, theta, 0)
    assert rep.is_br and rep.best_gain <= 1e-6
    bad = theta.copy()
    bad[0] = 3.0
    assert verify_best_response([V2] * 4, SQRT, bad, 0).best_gain > 0
    zero = theta.copy()
    zero[0] = 0.0
    assert utility([V2] * 4, SQRT, zero, 0) == 0.0


def test_rebate_independent_of_own_bid():
    c = RebateCoefficients([0.1, 0.05], 4)
    theta = np.array([2.0, 1.5, 1.0, 0.5])
    base = rebates(c, theta)[2]
    for b in np.geomspace(0.01, 100, 40):
        dev = theta.copy()
        dev[2] = b
        assert rebates(c, dev)[2] == pytest.approx(base, abs=1e-15)


def test_vp_reports():
    rep = verify_equilibrium_vp([V2] * 4, SQRT)
    assert all(r.vp_ok and r.q <= 1e-9 for r in rep)
    assert rep[0].utility == pytest.approx(0.5358983848622456, abs=1e-12)
    d = optimize_rebates(SQRT, 4, SamplingConfig(seed=1))
    rep_c = verify_equilibrium_vp([V2] * 4, SQRT, d.c)
    for r0, r1 in zip(rep, rep_c):
        assert r1.rebate >= 0
        assert r1.utility == pytest.approx(r0.utility + r1.rebate, abs=1e-12)
        assert r1.utility > r0.utility
    zero = verify_equilibrium_vp([V2] * 3, SQRT, theta=np.zeros(3))
    assert all(r.vp_ok for r in zero)


def test_ne_welfare_and_surplus_curve():
    prev = -1.0
    for n in range(3, 13):
        theta = nash_bids([V2] * n, SQRT)
        vp = float(V2.marginal(1.0 / n))
        assert surrogate_welfare(SQRT, theta) == pytest.approx(vp / 0.5, abs=1e-9)
        ps = clarke_surplus(SQRT, theta)
        assert ps <= vp + 1e-9
        assert ps / vp > prev
        prev = ps / vp


def test_load_valuations():
    vals = load_valuations([{"kind": "power", "w": 2.0, "beta": 0.5}] * 2)
    assert vals[0] == V2
    with pytest.raises(ValueError):
        load_valuations([])
    with pytest.raises(ValueError):
        load_valuations([{"kind": "log"}])
    with pytest.raises(ValueError):
        ValuationSpec.power(1.0, 1.2)


def test_custom_valuation():
    v = ValuationSpec.custom(lambda a: np.log1p(4 * a), lambda a: 4 / (1 + 4 * a))
    a = true_efficient_allocation([v, v, v])
    np.testing.assert_allclose(a, [1 / 3] * 3, atol=1e-9)
