import math
import warnings

import pytest

from trsketch.bounds import (
    BoundsConfig,
    fullness_gap_check,
    gap_bound_linear,
    gap_bound_quadratic,
    linear_sandwich_check,
    min_ambient_dim,
    min_projected_dim,
    quadratic_sandwich_check,
)
from trsketch.exceptions import DegenerateSetError, RegimeWarning


def test_config_defaults_and_validation():
    cfg = BoundsConfig()
    assert cfg.C0 == 1.0 and cfg.C1 > 0.25
    for bad in ({"C0": 0.5}, {"C1": 0.25}, {"delta": 1.0}, {"delta": 0.0}, {"epsilon": 1.0}):
        with pytest.raises(ValueError):
            BoundsConfig(**bad)


def test_min_projected_dim_values():
    # ln(2000) / 0.01 = 760.09...
    assert min_projected_dim(100, BoundsConfig(delta=0.05, epsilon=0.1)) == 761
    assert min_projected_dim(1, BoundsConfig(delta=0.5, epsilon=0.99)) == 1
    with pytest.raises(ValueError):
        min_projected_dim(0, BoundsConfig())


def test_min_projected_dim_doubling_m():
    cfg = BoundsConfig(delta=0.05, epsilon=0.1)
    step = math.ceil(math.log(2) / (cfg.C0 * cfg.epsilon**2)) + 1
    for m in (1, 7, 100, 5000):
        assert 0 <= min_projected_dim(2 * m, cfg) - min_projected_dim(m, cfg) <= step


def test_min_ambient_dim_values():
    # 21 ln(800) / 0.0025 = 56150.74
    assert min_ambient_dim(20, BoundsConfig(C1=0.25 + 1e-9, delta=0.05, epsilon=0.1)) == 56151
    # delta >= 1 is rejected when the configuration is built
    with pytest.raises(ValueError, match="delta"):
        min_ambient_dim(1, BoundsConfig(delta=1.0))
    # just below 1 is still in the domain: ln(2 / (1 - 1e-12)) / (C1 eps^2) > 0
    assert min_ambient_dim(1, BoundsConfig(delta=1 - 1e-12, epsilon=0.1)) >= 1


def test_min_ambient_dim_strictly_increasing_in_d():
    cfg = BoundsConfig(delta=0.05, epsilon=0.1)
    values = [min_ambient_dim(d, cfg) for d in range(1, 101)]
    assert all(b > a for a, b in zip(values, values[1:]))


def test_composed_dimensions_are_out_of_desk_reach():
    cfg = BoundsConfig(delta=0.05, epsilon=0.1)
    d = min_projected_dim(100, cfg)
    assert d == 761
    assert min_ambient_dim(d, cfg) > 3_000_000


def test_linear_sandwich_examples():
    v = linear_sandwich_check(-0.5, -0.6, -0.7, 0.2, 1.0)
    assert v.lower_holds and v.upper_holds
    assert v.gap_observed == pytest.approx(0.2)
    assert not linear_sandwich_check(-0.7, -0.6, -0.7, 0.2, 1.0).lower_holds
    for eps in (0.0, 0.3):
        v = linear_sandwich_check(-1.0, -1.0, -1.0, eps, 2.0)
        assert v.lower_holds and v.upper_holds


def test_sandwich_slack_is_additive_1e9():
    assert linear_sandwich_check(-1.0 - 5e-10, -1.0, -1.0, 0.0, 1.0).lower_holds
    assert not linear_sandwich_check(-1.0 - 2e-9, -1.0, -1.0, 0.0, 1.0).lower_holds


def test_quadratic_sandwich_examples():
    v = quadratic_sandwich_check(-0.8, -1.0, -1.1, 0.1, 1.0, 1.0)
    assert v.upper_holds
    # zero slack reduces to obj_minus >= obj_exact >= obj_plus
    assert not quadratic_sandwich_check(-0.8, -1.0, -0.9, 0.0, 1.0, 1.0).upper_holds
    assert quadratic_sandwich_check(-0.8, -1.0, -1.0, 0.0, 1.0, 1.0).upper_holds
    with pytest.raises(ValueError):
        quadratic_sandwich_check(-0.8, -1.0, -1.1, 0.1, -1.0, 1.0)
    with pytest.raises(ValueError):
        linear_sandwich_check(math.nan, -1.0, -1.1, 0.1, 1.0)


def test_gap_bound_linear():
    assert gap_bound_linear(0.1, 0.5, 2.0) == pytest.approx(7.2)
    assert gap_bound_linear(0.1, 0.25, 2.0) == pytest.approx(2 * gap_bound_linear(0.1, 0.5, 2.0))
    with pytest.raises(DegenerateSetError):
        gap_bound_linear(0.1, 0.0, 1.0)
    with pytest.raises(ValueError):
        gap_bound_linear(0.6, 0.5, 1.0)


def test_gap_constant_at_half():
    # the simplification constant behind the factor 18: 2 (1 + 1/2)^2 / (1 - 1/2) = 9
    assert 2 * (1 + 0.5) ** 2 / (1 - 0.5) == 9.0
    assert gap_bound_linear(0.5, 1.0, 1.0) == 2 * 9.0 * 0.5


def test_gap_bound_quadratic_and_regime():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert gap_bound_quadratic(0.05, 0.5, 1.0) == pytest.approx(5.4)
        assert gap_bound_quadratic(0.05, 0.5, 0.0) == pytest.approx(36 * 0.05 / 0.5)
    with pytest.warns(RegimeWarning):
        assert gap_bound_quadratic(0.1, 0.5, 1.0) == pytest.approx(10.8)
    with pytest.raises(DegenerateSetError):
        gap_bound_quadratic(0.05, -1.0, 1.0)


def test_fullness_gap_check():
    assert fullness_gap_check(0.5, 0.49, 0.1)
    assert not fullness_gap_check(0.5, 0.40, 0.1)
    assert fullness_gap_check(0.5, 0.45 - 5e-7, 0.1)
    with pytest.raises(ValueError):
        fullness_gap_check(-0.1, 0.2, 0.1)
