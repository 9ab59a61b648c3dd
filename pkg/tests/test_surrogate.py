import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ssvcg.surrogate import UNBOUNDED_SLOPE, SurrogateSpec, check_assumptions, u_derivative, u_value


def test_power_law_values():
    assert u_value(SurrogateSpec.power_law(0.5), 0.25) == pytest.approx(0.5, abs=1e-15)
    assert u_value(SurrogateSpec.power_law(0.5), 0.0) == 0.0
    assert u_value(SurrogateSpec.power_law(0.25), 1.0) == 1.0


def test_power_law_derivative():
    spec = SurrogateSpec.power_law(0.5)
    assert u_derivative(spec, 0.25) == pytest.approx(1.0, abs=1e-15)
    assert u_derivative(spec, 1.0) == pytest.approx(0.5, abs=1e-15)
    assert u_derivative(spec, 0.0) is UNBOUNDED_SLOPE


def test_unbounded_slope_is_not_a_number():
    with pytest.raises(TypeError):
        UNBOUNDED_SLOPE + 1.0  # noqa: B018


@pytest.mark.parametrize("a", [-0.1, 1.0000001, float("nan")])
def test_domain_errors(a):
    spec = SurrogateSpec.power_law(0.5)
    with pytest.raises(ValueError):
        u_value(spec, a)
    with pytest.raises(ValueError):
        u_derivative(spec, a)


@pytest.mark.parametrize("alpha", [0.0, 1.0, -0.5, 1.5])
def test_bad_alpha(alpha):
    with pytest.raises(ValueError):
        SurrogateSpec.power_law(alpha)


def test_u_at_one():
    assert SurrogateSpec.power_law(0.3).u_at_one == 1.0
    custom = SurrogateSpec.custom(lambda a: 2 * np.sqrt(a), lambda a: 1 / np.sqrt(a))
    assert custom.u_at_one == 2.0


def test_check_assumptions_examples():
    assert check_assumptions(SurrogateSpec.power_law(0.5), 101).passed
    convex = check_assumptions(SurrogateSpec.custom(lambda a: a**2, lambda a: 2 * a), 101)
    assert not convex.passed
    assert any("concav" in v for v in map(str, convex.violations))
    shifted = check_assumptions(SurrogateSpec.custom(lambda a: a + 0.1, lambda a: np.ones_like(a)), 101)
    assert not shifted.passed


def test_check_assumptions_grid_size():
    with pytest.raises(ValueError):
        check_assumptions(SurrogateSpec.power_law(0.5), 2)


def test_config_roundtrip():
    spec = SurrogateSpec.from_config({"surrogate": {"kind": "power_law", "alpha": 0.5}})
    assert spec.alpha == 0.5
    assert SurrogateSpec.from_config(spec.to_config()) == spec
    with pytest.raises(ValueError):
        SurrogateSpec.from_config({"surrogate": {"kind": "log"}})
    with pytest.raises(ValueError):
        SurrogateSpec.from_config({"surrogate": {"kind": "power_law"}})


@given(st.floats(0.01, 0.99), st.floats(1e-6, 1.0))
def test_derivative_matches_analytic(alpha, a):
    spec = SurrogateSpec.power_law(alpha)
    assert u_derivative(spec, a) == pytest.approx((1 - alpha) * a ** (-alpha), rel=1e-12)


@given(st.floats(0.01, 0.99), st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_u_monotone(alpha, a, b):
    spec = SurrogateSpec.power_law(alpha)
    lo, hi = sorted((a, b))
    if lo < hi:
        assert u_value(spec, lo) < u_value(spec, hi)
