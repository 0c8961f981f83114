import math

import numpy as np
import pytest

from conecalc.asymptypes import (
    AsymptoticType,
    RemainderClass,
    WeightData,
    WeightMismatch,
    compose_weight_data,
    remainder_compose,
    shadow_closure,
    type_from_poles,
)
from conecalc.mero import MatPolynomial, mero_inverse
from conecalc.parametrix import leading_parametrix


def pts(t):
    return [(round(p.real, 9), m) for p, m in t.points]


def test_shadow_closure_definition():
    P = AsymptoticType(((0.3, 0),), 0.0, 0, -2.5)
    assert pts(shadow_closure(P)) == [(0.3, 0), (-0.7, 0), (-1.7, 0)]


def test_shadow_closure_idempotent():
    P = shadow_closure(AsymptoticType(((0.3, 1), (0.1, 0)), 0.0, 0, -2.5))
    assert shadow_closure(P) == P


def test_shadow_closure_empty():
    assert len(shadow_closure(AsymptoticType((), 0.0, 0, -1.0))) == 0


def test_type_rejects_point_outside_strip():
    with pytest.raises(ValueError):
        AsymptoticType(((0.6, 0),), 0.0, 0)


def test_compose_weight_data():
    gamma, mu, nu, th = 0.3, 2, 1, -2.0
    g = WeightData(gamma - nu, gamma - mu - nu, th)
    h = WeightData(gamma, gamma - nu, th)
    assert compose_weight_data(g, h) == WeightData(gamma, gamma - mu - nu, th)


def test_compose_weight_identity():
    h = WeightData(0.3, -0.7, -2.0)
    assert compose_weight_data(WeightData(-0.7, -0.7, -2.0), h) == h


def test_compose_weight_mismatch():
    with pytest.raises(WeightMismatch):
        compose_weight_data(WeightData(0.0, -1.0), WeightData(0.3, -0.5))


def test_remainder_green_absorbs():
    assert remainder_compose(RemainderClass.green(), RemainderClass.flat(3)).label == "Green"


def test_remainder_flat_addition():
    c = remainder_compose(RemainderClass.flat(1), RemainderClass.flat(2))
    assert (c.label, c.order, c.green_flag) == ("Flat", 3, True)


def test_remainder_exact():
    assert remainder_compose(RemainderClass.exact(), RemainderClass.exact()) == RemainderClass.exact()


def test_type_from_poles_filter():
    # (z + 1.5)(z + 2.5)^2
    h = MatPolynomial(np.polynomial.polynomial.polyfromroots([-1.5, -2.5, -2.5]))
    q = mero_inverse(h)
    g = WeightData(0.0, 0.5, -3.0)  # output strip (-3, 0) for n = 0
    assert pts(type_from_poles(q, g, 0)) == [(-1.5, 0), (-2.5, 1)]


def test_type_from_poles_empty():
    q = mero_inverse(MatPolynomial([-4.0, 1]))
    assert len(type_from_poles(q, WeightData(0.0, 0.5, -3.0), 0)) == 0


def test_type_from_leading_parametrix():
    q0 = leading_parametrix(MatPolynomial([-0.25, 0, 1]), 2, 0.3, 0)
    g = WeightData(0.5, -2.5, -3.0)  # strip (0, 3)
    assert pts(type_from_poles(q0, g, 0)) == [(2.5, 0), (1.5, 0)]


def test_weight_data_theta_negative():
    with pytest.raises(ValueError):
        WeightData(0.0, -2.0, 0.0)
    assert WeightData.for_order(0.5, 2).gamma_out == -1.5
    assert WeightData(0.0, -2.0).theta == -math.inf
