"""Acceptance gate: one test per criterion, one verdict line each.

Criteria 5, 6, and 7 are evaluated faithfully at their stated parameters and
fail: at bump positions a <= 200 (and cascade base A = 10) the perturbed
gradient at z0 + a is still negative, because the zero-jump term of order
2 a^{-2-alpha} dominates the one-jump gain of order lambda * delta / 2 until
a ~ 2 / (eps * delta) ~ 1.7e3.  The same pipeline passes at positions beyond
that flip point (see test_counterexample.py), so the failures are parameter
miscalibrations, not implementation gaps.  They are marked ``spec_defect``.
"""

import json
import math

import numpy as np
import pytest

from stablelike.counterexample import (CounterexampleConfig, lemma21_verify,
                                       lemma23_es1_check, lemma23_es2_check,
                                       theorem_verify)
from stablelike.kernel import (KernelEvaluator, cauchy_closed_form,
                               normalization, rescale_kappa,
                               semigroup_residuals)
from stablelike.perturb import (CauchyBase, PerturbationProblem,
                                PerturbationSpec, j_decomposition,
                                jump_intensity, mc_density, mc_gradient,
                                series_density, series_gradient,
                                stirling_tail_check)
from stablelike.symbol import (Alpha, BumpShape, Cascade, Constant,
                               LevySymbol, SinglePairBump)
from stablelike.cli import run

AL1 = Alpha(1.0)
KAPPAS = {
    "constant": Constant(1.0),
    "single_pair": SinglePairBump(1.0, BumpShape.INDICATOR, 10.0, 0.2),
    "cascade1": Cascade(1.0, BumpShape.INDICATOR, 10.0, 0.25, 1),
}


def _verdict(num: int, desc: str, ok: bool, detail: str = ""):
    print(f"criterion {num:02d} [{'PASS' if ok else 'FAIL'}]: {desc}"
          + (f" ({detail})" if detail else ""))
    assert ok, f"criterion {num}: {desc} {detail}"


def test_criterion_01_closed_form_agreement():
    ev = KernelEvaluator(LevySymbol(AL1, Constant(1.0)))
    xs = np.linspace(0.0, 50.0, 101)
    dens, grads, _, _ = ev.density_grid(xs)
    worst = 0.0
    for x, d, g in zip(xs, dens, grads):
        cd, cg = cauchy_closed_form(1.0, float(x))
        worst = max(worst, abs(d - cd), abs(g - cg))
    _verdict(1, "Fourier route matches the exact alpha=1 kernel to 1e-8 "
                "on [0, 50]", worst <= 1e-8, f"worst {worst:.2e}")


def test_criterion_02_route_triangle():
    prob = PerturbationProblem(CauchyBase(),
                               PerturbationSpec.bump_pair(10.0, 0.2), AL1)
    ev = KernelEvaluator(LevySymbol(
        AL1, SinglePairBump(1.0, BumpShape.INDICATOR, 10.0, 0.2)))
    worst = 0.0
    for x in (0.0, 2.0, 5.0, 9.5, 10.5, 12.0, 20.0):
        pt = ev.evaluate(x)
        worst = max(worst, abs(series_density(prob, x) - pt.density),
                    abs(series_gradient(prob, x) - pt.gradient))
    est_d, se_d = mc_density(prob, 5.0, 1_000_000, 0)
    est_g, se_g = mc_gradient(prob, 5.0, 1_000_000, 0)
    mc_ok = (abs(est_d - series_density(prob, 5.0)) <= 4.0 * se_d
             and abs(est_g - series_gradient(prob, 5.0)) <= 4.0 * se_g)
    _verdict(2, "series, Fourier, and Monte Carlo routes agree",
             worst <= 1e-8 and mc_ok, f"worst route gap {worst:.2e}")


def test_criterion_03_kernel_invariants():
    failures = []
    for a in (0.7, 1.0, 1.5):
        al = Alpha(a)
        for name, spec in KAPPAS.items():
            ev = KernelEvaluator(LevySymbol(al, spec))
            mass = normalization(ev)
            if abs(mass - 1.0) > 1e-6:
                failures.append(f"norm {name}@{a}: {mass - 1.0:.2e}")
            xs = np.array([0.0, 0.7, 3.0, 9.5, 10.5, 40.0])
            dens, grads, _, _ = ev.density_grid(np.concatenate([xs, -xs]))
            n = xs.size
            if not np.all(dens[:n] > 0.0):
                failures.append(f"positivity {name}@{a}")
            if (np.max(np.abs(dens[:n] - dens[n:])) > 1e-12
                    or np.max(np.abs(grads[:n] + grads[n:])) > 1e-12):
                failures.append(f"symmetry {name}@{a}")
            res = semigroup_residuals(ev.symbol, 0.5, 0.5,
                                      [-2.0, 0.0, 1.0, 4.0, 9.0])
            if max(r for _, r in res) > 1e-6:
                failures.append(f"semigroup {name}@{a}")
            for lam in (0.5, 2.0):
                s = lam ** (1.0 / a)
                ev_l = KernelEvaluator(LevySymbol(al, spec), t=lam)
                ev_r = KernelEvaluator(LevySymbol(
                    al, rescale_kappa(spec, al, lam)))
                gap = max(abs(s * ev_l.evaluate(s * x).density
                              - ev_r.evaluate(x).density)
                          for x in (0.0, 0.7, 3.0, 9.0, 15.0))
                if gap > 1e-7:
                    failures.append(f"scaling {name}@{a} lam={lam}")
    _verdict(3, "normalization, positivity, symmetry, semigroup, scaling "
                "for 3 coefficients x 3 alphas", not failures,
             "; ".join(failures))


def test_criterion_04_sharp_estimate_constant_coefficient():
    ok = True
    details = []
    for a in (0.7, 1.0, 1.5):
        ev = KernelEvaluator(LevySymbol(Alpha(a), Constant(1.0)))
        xs = np.geomspace(0.5, 200.0, 121)
        _, grads, _, _ = ev.density_grid(xs)
        w = np.abs(grads) * (1.0 + xs) ** (2.0 + a)
        sup = float(np.max(w))

        def _slope(lo, hi):
            sel = (xs >= lo) & (xs <= hi)
            return float(np.polyfit(np.log(xs[sel]), np.log(w[sel]), 1)[0])

        # saturating (log-log slope shrinking decade over decade) rather
        # than trending up; a genuine sharp-estimate failure keeps slope ~1
        s_prev, s_last = _slope(2.0, 20.0), _slope(20.0, 200.0)
        stable = s_last <= max(0.05, 0.5 * s_prev)
        details.append(f"alpha={a}: sup {sup:.3f}, "
                       f"slopes {s_prev:+.3f} -> {s_last:+.3f}")
        ok = ok and math.isfinite(sup) and sup < 10.0 and stable
    _verdict(4, "(1+|x|)^{2+alpha}|p'| bounded with no tail growth, "
                "kappa = 1", ok, "; ".join(details))


@pytest.fixture(scope="module")
def lemma21_sweep():
    config = CounterexampleConfig(alpha=AL1, eps=0.2, A=10.0, levels=1,
                                  mc_samples=200_000)
    return [lemma21_verify(config, a) for a in (20.0, 50.0, 100.0, 200.0)]


@pytest.mark.spec_defect
def test_criterion_05_sign_flip_and_ratio_floor(lemma21_sweep):
    recs = [rep.levels[0] for rep in lemma21_sweep]
    signs_ok = all(r.gradient > 0.0 for r in recs)
    delta = lemma21_sweep[0].constants["delta"]
    floor_target = 0.2 * delta / 2.0 / 10.0  # eps*delta/2 with 10x slack
    floor_ok = signs_ok and min(r.ratio for r in recs) >= floor_target
    base_mags = [abs(r.baseline_ratio) for r in recs]
    baseline_ok = (all(r.baseline_ratio < 0.0 for r in recs)
                   and base_mags == sorted(base_mags, reverse=True))
    detail = ", ".join(f"a={r.A_k:g}: ratio {r.ratio:+.3e}" for r in recs)
    _verdict(5, "perturbed gradient positive with a uniform ratio floor "
                "over a in {20, 50, 100, 200}",
             signs_ok and floor_ok and baseline_ok, detail)


@pytest.mark.spec_defect
def test_criterion_06_sharp_estimate_failure_growth(lemma21_sweep):
    recs = [rep.levels[0] for rep in lemma21_sweep]
    w2 = [r.gradient * r.x ** (2.0 + AL1.value) for r in recs]
    growth_ok = w2[0] > 0.0 and w2[-1] / w2[0] >= 4.0
    # linear growth in a within 50%: a grows 10x across the sweep
    linear_ok = growth_ok and 5.0 <= w2[-1] / w2[0] <= 15.0
    detail = ", ".join(f"{v:+.3e}" for v in w2)
    _verdict(6, "(2+alpha)-weighted gradient grows ~linearly in a "
                "across the sweep", growth_ok and linear_ok, detail)


@pytest.mark.spec_defect
def test_criterion_07_cascade_verification():
    config = CounterexampleConfig(alpha=AL1, eps=0.25, A=10.0, levels=2,
                                  mc_samples=200_000)
    report = theorem_verify(config)
    positions = [rec.A_k for rec in report.levels]
    lam = report.constants["lambda"]
    lam_lo = sum(2 * 0.25 * (a + 0.25) ** -2 for a in positions)
    lam_hi = sum(2 * 0.25 * (a - 0.25) ** -2 for a in positions)
    brackets_ok = lam_lo <= lam <= lam_hi
    lt = report.constants["lambda_tilde_bound"]
    a3 = (105.0625 + 0.25) ** 2
    brackets_ok = brackets_ok and 0.0 < lt <= 1.01 * 2 * 0.25 * (a3 - 0.25) ** -2
    allowance = report.constants["tail_allowance"]
    margins_ok = all(rec.gradient - allowance > 0.0 for rec in report.levels)
    detail = (f"ratios {[f'{r.ratio:+.3e}' for r in report.levels]}, "
              f"lambda {lam:.3e} in [{lam_lo:.3e}, {lam_hi:.3e}]: "
              f"{brackets_ok}")
    _verdict(7, "cascade levels A1=10, A2=105.0625 positive after tail "
                "allowance", report.passed and brackets_ok and margins_ok,
             detail)


def test_criterion_08_window_and_tail_checks():
    config = CounterexampleConfig(alpha=AL1, eps=0.25, A=10.0, levels=2)
    f_spec = PerturbationSpec.cascade_layers(10.0, 0.25, 2)
    es1 = lemma23_es1_check(config, f_spec)
    radius = 105.0625 + 0.25
    es2 = lemma23_es2_check(config, f_spec, radius)
    stirling_ok = all(
        stirling_tail_check(es2.lam, x, AL1, c_check=10.0)[2]
        for x in es2.grid)
    ok = (es1.passed and es2.passed and es2.split_residual <= 1e-12
          and stirling_ok)
    _verdict(8, "window minimum >= delta/2, finite tail gamma on "
                "[A^2, 4A^2], series split reassembles, factorial tail "
                "below 10 x^{-2-alpha}", ok,
             f"min {es1.min_value:.4e} vs delta/2 {es1.delta / 2:.4e}, "
             f"gamma {es2.gamma:.3f}, split {es2.split_residual:.1e}")


def test_criterion_09_j_decomposition():
    configs = [
        (10.0, 0.2, BumpShape.INDICATOR),
        (50.0, 0.2, BumpShape.INDICATOR),
        (10.0, 0.2, BumpShape.SMOOTH),
        (25.0, 0.3, BumpShape.INDICATOR),
        (10.0, 0.25, BumpShape.INDICATOR),
    ]
    worst = 0.0
    j2_ok = True
    for a, eps, shape in configs:
        prob = PerturbationProblem(CauchyBase(),
                                   PerturbationSpec.bump_pair(a, eps, shape),
                                   AL1)
        for x in (5.0, a - 0.5):
            split = j_decomposition(prob, x)
            worst = max(worst, abs(split.total - series_gradient(prob, x)))
            j2_ok = j2_ok and abs(split.j2) <= (
                2.0 * CauchyBase().sup_gradient * prob.lam ** 2)
    _verdict(9, "J0+J1+J2 reassembles the gradient series to 1e-10 with "
                "|J2| <= 2 sup|p'| lambda^2 for 5 configurations",
             worst <= 1e-10 and j2_ok, f"worst gap {worst:.1e}")


def test_criterion_10_gradient_vs_finite_differences():
    h = 1e-4
    worst = 0.0
    ev = KernelEvaluator(LevySymbol(
        AL1, SinglePairBump(1.0, BumpShape.INDICATOR, 10.0, 0.2)))
    prob = PerturbationProblem(CauchyBase(),
                               PerturbationSpec.bump_pair(10.0, 0.2), AL1)
    for x in np.linspace(0.5, 14.0, 10):
        fd = (ev.density(x + h) - ev.density(x - h)) / (2 * h)
        worst = max(worst, abs(ev.gradient(x) - fd))
        fd_s = (series_density(prob, x + h)
                - series_density(prob, x - h)) / (2 * h)
        worst = max(worst, abs(series_gradient(prob, x) - fd_s))
    _verdict(10, "central differences match both gradient routes to 1e-6",
             worst <= 1e-6, f"worst {worst:.1e}")


def test_criterion_11_cli_determinism(tmp_path):
    kappa = tmp_path / "kappa.json"
    kappa.write_text(json.dumps({"type": "constant", "c": 1.0}))
    pairs = []
    for tag in ("1", "2"):
        csv = tmp_path / f"k{tag}.csv"
        rep = tmp_path / f"r{tag}.json"
        assert run(["kernel", "--alpha", "1.5", "--kappa", str(kappa),
                    "--x-grid", "0:10:0.5", "--seed", "3",
                    "--out", str(csv)]) == 0
        assert run(["counterexample", "es1", "--alpha", "1", "--A", "10",
                    "--eps", "0.25", "--levels", "2", "--seed", "3",
                    "--out", str(rep)]) == 0
        pairs.append((csv.read_bytes(), rep.read_bytes()))
    _verdict(11, "repeated CLI runs are byte-identical",
             pairs[0] == pairs[1])
