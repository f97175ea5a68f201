import math

import numpy as np
import pytest

from stablelike.kernel import (KernelEvaluator, cauchy_closed_form,
                               fft_uniform_grid, normalization, rescale_kappa,
                               semigroup_residuals, sharp_bound_integral,
                               subordination_density_alpha1,
                               weighted_gradient_sweep)
from stablelike.symbol import (Alpha, BumpShape, Cascade, Constant,
                               LevySymbol, SinglePairBump)


@pytest.fixture(scope="module")
def cauchy_ev():
    return KernelEvaluator(LevySymbol(Alpha(1.0), Constant(1.0)))


def test_closed_form_agreement(cauchy_ev):
    for x in (0.0, 0.5, 3.0, 17.0, 50.0):
        pt = cauchy_ev.evaluate(x)
        d, g = cauchy_closed_form(1.0, x)
        assert pt.density == pytest.approx(d, abs=1e-12)
        assert pt.gradient == pytest.approx(g, abs=1e-12)
        assert pt.density_err < 1e-10
        assert pt.gradient_err < 1e-10


def test_density_grid_matches_scalar(cauchy_ev):
    xs = np.linspace(-20.0, 20.0, 81)
    dens, grads, err_d, err_g = cauchy_ev.density_grid(xs)
    for i in (0, 17, 40, 63, 80):
        pt = cauchy_ev.evaluate(float(xs[i]))
        assert dens[i] == pytest.approx(pt.density, abs=1e-13)
        assert grads[i] == pytest.approx(pt.gradient, abs=1e-13)
    assert np.all(err_d < 1e-9)
    assert np.all(err_g < 1e-9)


def test_positivity_and_symmetry():
    for a in (0.7, 1.0, 1.5):
        ev = KernelEvaluator(LevySymbol(
            Alpha(a), SinglePairBump(1.0, BumpShape.INDICATOR, 10.0, 0.2)))
        xs = np.array([0.0, 0.7, 3.0, 9.5, 10.5, 40.0])
        dens, grads, _, _ = ev.density_grid(np.concatenate([xs, -xs]))
        n = xs.size
        assert np.all(dens[:n] > 0.0)
        np.testing.assert_allclose(dens[:n], dens[n:], atol=1e-13)
        np.testing.assert_allclose(grads[:n], -grads[n:], atol=1e-13)


def test_normalization_alpha_one():
    for spec in (Constant(1.0),
                 SinglePairBump(1.0, BumpShape.INDICATOR, 10.0, 0.2)):
        ev = KernelEvaluator(LevySymbol(Alpha(1.0), spec))
        assert normalization(ev) == pytest.approx(1.0, abs=1e-6)


def test_semigroup_identity():
    probes = [-2.0, 0.0, 1.0, 4.0]
    for a in (1.0, 1.5):
        sym = LevySymbol(Alpha(a), SinglePairBump(1.0, BumpShape.INDICATOR,
                                                  10.0, 0.2))
        res = semigroup_residuals(sym, 0.5, 0.5, probes)
        assert max(r for _, r in res) < 1e-7


def test_scaling_property():
    # lam^{1/a} p_kappa(lam, lam^{1/a} x) = p_{kappa_lam}(1, x)
    spec = SinglePairBump(1.0, BumpShape.INDICATOR, 10.0, 0.2)
    for a in (0.7, 1.5):
        al = Alpha(a)
        for lam in (0.5, 2.0):
            s = lam ** (1.0 / a)
            ev1 = KernelEvaluator(LevySymbol(al, spec), t=lam)
            ev2 = KernelEvaluator(LevySymbol(al, rescale_kappa(spec, al, lam)))
            for x in (0.0, 0.7, 3.0, 9.0):
                lhs = s * ev1.evaluate(s * x).density
                rhs = ev2.evaluate(x).density
                assert lhs == pytest.approx(rhs, abs=1e-12)


def test_fft_grid_matches_closed_form(cauchy_ev):
    xs, dens, grad = fft_uniform_grid(cauchy_ev, dx=0.05, period=2.0e4)
    sel = np.abs(xs) <= 30.0
    ref_d = np.array([cauchy_closed_form(1.0, x)[0] for x in xs[sel]])
    ref_g = np.array([cauchy_closed_form(1.0, x)[1] for x in xs[sel]])
    # density picks up a constant aliasing offset ~2 pi^2 / (3 P^2)
    np.testing.assert_allclose(dens[sel], ref_d, atol=2e-8)
    np.testing.assert_allclose(grad[sel], ref_g, atol=2e-11)


def test_subordination_route_alpha_one():
    for x in (0.0, 1.0, 5.0, 20.0):
        val = subordination_density_alpha1(1.0, x)
        assert val == pytest.approx(cauchy_closed_form(1.0, x)[0], rel=1e-9)


def test_sharp_bound_integral_shape():
    # B(t, x) * (1 + |x|)^{2 + alpha} stays bounded: the comparison integral
    # realizes the extra power of decay available when kappa is constant
    al = Alpha(1.5)
    vals = [sharp_bound_integral(al, 1.0, x) * (1.0 + x) ** 3.5
            for x in (1.0, 5.0, 20.0, 100.0)]
    assert max(vals) / min(vals) < 5.0


def test_weighted_gradient_sweep_flat(cauchy_ev):
    xs = np.geomspace(5.0, 200.0, 40)
    w = weighted_gradient_sweep(cauchy_ev, xs, extra_power=1.0)
    # |p'| x^{2+alpha} tends to the constant 2 for the alpha=1 base kernel
    assert w[-1] * (1.0 + xs[-1]) ** 3 / xs[-1] ** 3 == pytest.approx(
        w[-1], rel=0.1)
    assert np.max(w) < 3.0


def test_gradient_vs_finite_differences(cauchy_ev):
    h = 1e-4
    for x in np.linspace(0.3, 12.0, 10):
        fd = (cauchy_ev.density(x + h) - cauchy_ev.density(x - h)) / (2 * h)
        assert cauchy_ev.gradient(x) == pytest.approx(fd, abs=1e-6)


@pytest.mark.slow
def test_normalization_other_alphas():
    casc = Cascade(1.0, BumpShape.INDICATOR, 10.0, 0.25, 1)
    for a in (0.7, 1.5):
        for spec in (Constant(1.0), casc):
            ev = KernelEvaluator(LevySymbol(Alpha(a), spec))
            assert normalization(ev) == pytest.approx(1.0, abs=1e-6)
