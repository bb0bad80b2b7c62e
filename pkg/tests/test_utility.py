import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from formopt.design_space import generate_grid
from formopt.errors import InvalidParameterError
from formopt.oracle import OracleConfig, eval_external
from formopt.utility import (
    ExpLinearCurve,
    LinearDecreasingCurve,
    SigmoidCurve,
    UtilityModel,
    Weights,
    aggregate_utility,
    curve_from_dict,
    density_curve,
    weighted_sum,
    yield_curve,
)


@pytest.fixture(scope="module")
def model():
    return UtilityModel.for_grid(generate_grid(0.05), OracleConfig.default())


def test_yield_calibration():
    u = yield_curve()
    assert abs(u(200.0) - 0.99) < 1e-9
    assert u(150.0) == 0.5
    assert u(1e6) == pytest.approx(1.0, abs=1e-12)
    # plateau past the critical point
    assert u(300.0) - u(200.0) < 0.01


def test_density_calibration():
    u = density_curve()
    assert u(9.0) == 0.5
    assert u(8.0) == pytest.approx(0.99, abs=1e-12)
    assert u(10.0) == pytest.approx(0.01, abs=1e-12)


def test_sigmoid_scale_matches_logit():
    # logistic through (150, 0.5) and (200, 0.99): scale = 50 / ln(99)
    assert yield_curve().scale == pytest.approx(50 / math.log(99), rel=1e-14)
    assert density_curve().scale == pytest.approx(1 / math.log(99), rel=1e-14)
    assert density_curve().decreasing and not yield_curve().decreasing


def test_exp_linear_anchors_and_knee():
    c = ExpLinearCurve(lo=44.0, hi=104.0)
    assert c(44.0) == 0.0
    assert c(104.0) == pytest.approx(1.0, abs=1e-15)
    assert c(70.0) == pytest.approx(0.85, abs=1e-14)
    # exponential reaches 95% of its asymptote at the knee: rate = ln(20) / 26
    a = 0.85 / 0.95
    expected = a * (1 - math.exp(-math.log(20) / 26 * 13))
    assert c(57.0) == pytest.approx(expected, rel=1e-13)
    # continuity at the knee from both sides
    assert abs(c(70.0 - 1e-9) - c(70.0 + 1e-9)) < 1e-8


def test_exp_linear_diminishing_returns(model):
    u = model.cp
    assert u(75) > u(70)
    assert u(75) - u(70) < u(70) - u(65)


def test_linear_decreasing_anchors():
    c = LinearDecreasingCurve(lo=10.0, hi=30.0)
    assert c(10.0) == 1.0 and c(30.0) == 0.0 and c(20.0) == 0.5


@pytest.mark.parametrize("name, increasing", [("cp", True), ("ys", True), ("density", False),
                                              ("sr", False)])
def test_monotone_sweeps(model, name, increasing):
    curve = getattr(model, name)
    x = np.linspace(-1e3, 1e3, 1000)
    d = np.diff(curve(x))
    assert np.all(d >= 0) if increasing else np.all(d <= 0)


@settings(max_examples=200, deadline=None)
@given(st.floats(-1e9, 1e9, allow_nan=False))
def test_outputs_in_unit_interval(v):
    m = UtilityModel.from_bounds((44.0, 104.0), (0.0, 185.0))
    for curve in m.curves:
        assert 0.0 <= float(curve(v)) <= 1.0


def test_aggregate_extremes(model):
    assert weighted_sum(np.ones(4)) == pytest.approx(4.8, abs=1e-15)
    assert weighted_sum(np.zeros(4)) == 0.0
    assert Weights().max_utility == pytest.approx(4.8)
    assert tuple(Weights().as_array()) == (1.5, 1.3, 1.0, 1.0)
    # best conceivable physical values drive every curve to (nearly) 1
    q_best = np.array([model.cp.hi, 1e5, 0.0, model.sr.lo])
    assert aggregate_utility(q_best, model) == pytest.approx(4.8, abs=1e-9)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=4, max_size=4), st.integers(0, 3), st.floats(0, 1))
def test_aggregate_linear_in_each_curve(u, i, t):
    u = np.array(u)
    lo, hi, mid = u.copy(), u.copy(), u.copy()
    lo[i], hi[i], mid[i] = 0.0, 1.0, t
    w = Weights()
    assert weighted_sum(mid, w) == pytest.approx(
        (1 - t) * weighted_sum(lo, w) + t * weighted_sum(hi, w), abs=1e-12
    )


def test_model_matches_curve_sum(model):
    q = eval_external(generate_grid(0.25), OracleConfig.default())
    by_hand = sum(w * c(q[:, j]) for j, (w, c) in
                  enumerate(zip(Weights().as_array(), model.curves)))
    assert np.allclose(model(q), by_hand, rtol=0, atol=1e-14)


def test_grid_anchors(model):
    assert model.cp.lo == 44.0 and model.cp.hi == 104.0
    assert model.sr.lo == 0.0


def test_serialisation_round_trip(model):
    d = json.loads(json.dumps(model.to_dict()))
    back = UtilityModel.from_dict(d)
    x = np.linspace(0, 300, 50)
    for a, b in zip(model.curves, back.curves):
        assert np.array_equal(a(x), b(x))
    assert back.weights == model.weights


def test_invalid_parameters():
    with pytest.raises(InvalidParameterError):
        ExpLinearCurve(lo=80.0, hi=104.0)
    with pytest.raises(InvalidParameterError):
        SigmoidCurve(1.0, 0.0)
    with pytest.raises(InvalidParameterError):
        LinearDecreasingCurve(5.0, 5.0)
    with pytest.raises(InvalidParameterError):
        Weights(cp=-1.0)
    with pytest.raises(InvalidParameterError):
        curve_from_dict({"kind": "cubic"})
