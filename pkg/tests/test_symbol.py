import json
import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.special import gamma as gamma_fn

from stablelike.errors import BoundsViolated, OverlappingBumps
from stablelike.symbol import (Alpha, BumpSet, BumpShape, Cascade, Constant,
                               LevySymbol, SinglePairBump, Tabulated,
                               cascade_positions, eval_kappa,
                               kappa_spec_from_json, kappa_spec_to_json,
                               stable_constant, validate_kappa_spec)


def test_alpha_range():
    Alpha(0.3)
    Alpha(1.999)
    for bad in (0.0, 2.0, -1.0, 3.0):
        with pytest.raises(ValueError):
            Alpha(bad)


def test_stable_constant_closed_form():
    # 2 * int_0^inf (1 - cos u) u^{-1-a} du = -2 Gamma(-a) cos(pi a / 2)
    for a in (0.5, 0.7, 1.3, 1.5):
        expected = -2.0 * gamma_fn(-a) * math.cos(math.pi * a / 2.0)
        assert stable_constant(Alpha(a)) == pytest.approx(expected, rel=1e-12)
    assert stable_constant(Alpha(1.0)) == pytest.approx(math.pi, rel=1e-12)


def test_symbol_constant_coefficient():
    for a, c in ((0.7, 1.0), (1.0, 2.5), (1.5, 0.5)):
        sym = LevySymbol(Alpha(a), Constant(c))
        xi = np.array([0.0, 0.3, 1.0, 7.5])
        expected = -c * stable_constant(Alpha(a)) * np.abs(xi) ** a
        np.testing.assert_allclose(sym(xi), expected, rtol=1e-12, atol=1e-15)


def test_symbol_even_and_zero_at_origin():
    sym = LevySymbol(Alpha(1.2), SinglePairBump(1.0, BumpShape.INDICATOR,
                                                10.0, 0.2))
    assert sym(0.0) == 0.0
    for xi in (0.3, 1.7, 12.0):
        assert sym(xi) == pytest.approx(sym(-xi), rel=1e-14)


@pytest.mark.parametrize("shape", [BumpShape.INDICATOR, BumpShape.SMOOTH])
def test_bump_correction_against_quadrature(shape):
    # brute-force oracle: 2 * int h((y-a)/eps) (cos(xi y) - 1) y^{-1-alpha} dy
    a, eps, alpha = 5.0, 0.3, 1.3
    sym = LevySymbol(Alpha(alpha), SinglePairBump(1.0, shape, a, eps))
    base = LevySymbol(Alpha(alpha), Constant(1.0))
    r = shape.support_radius
    for xi in (0.5, 2.0, 9.0):
        oracle = 2.0 * quad(
            lambda y: shape.profile((y - a) / eps)
            * (math.cos(xi * y) - 1.0) * y ** (-1.0 - alpha),
            a - r * eps, a + r * eps, epsabs=1e-14, epsrel=1e-13, limit=200)[0]
        # the smooth profile is infinitely flat at its endpoints, which limits
        # the oracle quadrature itself to ~1e-11
        tol = 1e-12 if shape is BumpShape.INDICATOR else 5e-11
        assert sym(xi) - base(xi) == pytest.approx(oracle, abs=tol)


def test_tabulated_symbol_against_correction_oracle():
    grid = ((0.0, 1.0), (0.5, 1.2), (1.0, 0.9), (2.0, 1.0))
    alpha = 1.1
    sym = LevySymbol(Alpha(alpha), Tabulated(grid))
    base = LevySymbol(Alpha(alpha), Constant(1.0))

    def kap(y):
        return float(eval_kappa(Tabulated(grid), y))

    for xi in (0.7, 3.0):
        oracle = 2.0 * quad(
            lambda y: (kap(y) - 1.0) * (math.cos(xi * y) - 1.0)
            * y ** (-1.0 - alpha),
            0.0, 2.0, epsabs=1e-13, epsrel=1e-12, limit=400,
            points=[0.5, 1.0])[0]
        assert sym(xi) - base(xi) == pytest.approx(oracle, abs=1e-10)


def test_eval_kappa_even_and_bounded():
    spec = Cascade(1.0, BumpShape.INDICATOR, 10.0, 0.25, 2)
    ys = np.array([0.0, 0.5, 9.9, 10.0, 105.0625, 300.0])
    np.testing.assert_allclose(eval_kappa(spec, ys), eval_kappa(spec, -ys))
    vals = eval_kappa(spec, np.linspace(-120, 120, 4001))
    k0 = spec.k0()
    assert np.all(vals >= 1.0 / k0 - 1e-12)
    assert np.all(vals <= k0 + 1e-12)


def test_cascade_positions_recursion():
    pos = cascade_positions(10.0, 0.25, 3)
    assert pos[0] == 10.0
    assert pos[1] == pytest.approx(10.25 ** 2)
    assert pos[2] == pytest.approx((10.25 ** 2 + 0.25) ** 2)


def test_validation_rejects_overlap():
    # second-level position colliding with the first bump
    bad = BumpSet(1.0, BumpShape.INDICATOR, ((10.0, 0.2), (10.1, 0.2)))
    with pytest.raises(OverlappingBumps):
        validate_kappa_spec(bad, Alpha(1.0))
    # bump overlapping the unit interval around the origin
    near = BumpSet(1.0, BumpShape.INDICATOR, ((1.05, 0.2),))
    with pytest.raises(OverlappingBumps):
        validate_kappa_spec(near, Alpha(1.0))


def test_validation_rejects_bad_bounds():
    low = Tabulated(((0.0, 1.0), (1.0, -0.5), (2.0, 1.0)))
    with pytest.raises(BoundsViolated):
        validate_kappa_spec(low, Alpha(1.0))


def test_validation_accepts_good_specs():
    for spec in (Constant(1.0),
                 SinglePairBump(1.0, BumpShape.INDICATOR, 10.0, 0.2),
                 Cascade(1.0, BumpShape.SMOOTH, 10.0, 0.25, 2)):
        result = validate_kappa_spec(spec, Alpha(1.0))
        assert result.ok
        assert result.k0 >= 1.0


@pytest.mark.parametrize("spec", [
    Constant(2.0),
    SinglePairBump(1.0, BumpShape.INDICATOR, 10.0, 0.2),
    Cascade(1.0, BumpShape.SMOOTH, 10.0, 0.25, 2),
    Tabulated(((0.0, 1.0), (1.0, 1.5), (2.0, 1.0))),
])
def test_json_round_trip(spec):
    obj = kappa_spec_to_json(spec)
    text = json.dumps(obj)
    back = kappa_spec_from_json(json.loads(text))
    assert back == spec
    assert obj["type"] in ("constant", "single_pair_bump", "cascade",
                           "tabulated")
