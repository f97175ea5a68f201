"""Compound-Poisson evaluation route for perturbed kernels.

Adding a nonnegative bounded density f (supported away from the origin) to the
coefficient kappa splits the driving process into an independent sum: the
kappa-process plus a compound Poisson process with jump intensity

    lambda = integral of f(y) |y|^{-1-alpha} dy

and jump law q(y) = f(y) |y|^{-1-alpha} / lambda.  Conditioning on the Poisson
jump count gives

    p_{kappa+f}(x) = sum_k e^{-lambda} lambda^k / k! * (p_kappa * q^{*k})(x),

and the same series with p'_kappa yields the gradient.  This module builds q,
its convolution powers, the truncated series, and a Monte Carlo oracle that
samples the compound Poisson variate directly.

The jump law is stored as a mixture of narrow "lumps": per bump, a vector of
exact cell masses on a uniform sub-grid of its support.  Convolution powers
convolve the mass vectors (positions add), and lumps whose bump-composition
multisets coincide are merged.  This keeps q^{*k} exact to grid resolution at
any bump position, with no global grid spanning [-k*a, k*a].
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.stats import poisson

from .errors import (DivergentIntensity, GridOverflow, TruncationInsufficient)
from .symbol import Alpha, BumpShape


# ---------------------------------------------------------------------------
# perturbation specifications


@dataclass(frozen=True)
class PerturbationSpec:
    """A perturbing density f: a symmetric family of bumps h((|x|-a)/eps).

    Each pair (a, eps) contributes one bump centered at +a and its mirror at
    -a, so f is even by construction and 0 <= f <= 1.
    """

    shape: BumpShape
    pairs: tuple = ()

    @classmethod
    def bump_pair(cls, a: float, eps: float,
                  shape: BumpShape = BumpShape.INDICATOR) -> "PerturbationSpec":
        return cls(shape, ((float(a), float(eps)),))

    @classmethod
    def cascade_layers(cls, A: float, eps: float, levels: int,
                       shape: BumpShape = BumpShape.INDICATOR) -> "PerturbationSpec":
        """Bump pairs at A_1 = A, A_{k+1} = (A_k + eps)^2."""
        positions = []
        a = float(A)
        for _ in range(levels):
            positions.append((a, float(eps)))
            a = (a + eps) ** 2
        return cls(shape, tuple(positions))

    @classmethod
    def empty(cls) -> "PerturbationSpec":
        return cls(BumpShape.INDICATOR, ())


_GL_NODES, _GL_WEIGHTS = leggauss(12)


def _bump_cell_masses(shape: BumpShape, a: float, eps: float,
                      alpha: float, dx: float):
    """Exact masses integral of h((x-a)/eps) x^{-1-alpha} per grid cell.

    The cells tile [a - r*eps, a + r*eps] (r the profile support radius) with
    spacing dx, edges anchored at the center a.  Returns (j_min, masses) where
    cell i covers [a + (j_min+i)*dx, a + (j_min+i+1)*dx].
    """
    r = shape.support_radius
    m = int(math.ceil(r * eps / dx - 1e-12))
    j = np.arange(-m, m)
    lo = a + j * dx
    hi = lo + dx
    if shape is BumpShape.INDICATOR:
        cl = np.clip(lo, a - 0.5 * eps, a + 0.5 * eps)
        ch = np.clip(hi, a - 0.5 * eps, a + 0.5 * eps)
        masses = (cl ** -alpha - ch ** -alpha) / alpha
    else:
        half = 0.5 * dx
        pts = (lo + half)[:, None] + half * _GL_NODES[None, :]
        vals = shape.profile((pts - a) / eps) * pts ** (-1.0 - alpha)
        masses = half * vals @ _GL_WEIGHTS
    return -m, masses


def jump_intensity(spec: PerturbationSpec, alpha: Alpha) -> float:
    """lambda = integral of f(x) |x|^{-1-alpha} dx.

    For the indicator profile this reduces, per pair, to the closed form
    2 * ((a - eps/2)^{-alpha} - (a + eps/2)^{-alpha}) / alpha.
    """
    total = 0.0
    for a, eps in spec.pairs:
        r = spec.shape.support_radius
        if a - r * eps <= 0.0:
            raise DivergentIntensity(
                f"bump at a={a} with eps={eps} reaches the origin")
        if spec.shape is BumpShape.INDICATOR:
            lo, hi = a - 0.5 * eps, a + 0.5 * eps
            total += 2.0 * (lo ** -alpha.value - hi ** -alpha.value) / alpha.value
        else:
            dx = eps / 200.0
            _, masses = _bump_cell_masses(spec.shape, a, eps, alpha.value, dx)
            total += 2.0 * math.fsum(masses)
    return total


# ---------------------------------------------------------------------------
# jump law as a lump mixture


@dataclass(frozen=True)
class _Lump:
    """A contiguous mass vector on positions center + (start2 + 2*i)*dx/2."""

    center: float
    start2: int
    weights: np.ndarray

    def positions(self, dx: float) -> np.ndarray:
        return self.center + (self.start2 + 2 * np.arange(self.weights.size)) * (0.5 * dx)

    @property
    def mass(self) -> float:
        return float(math.fsum(self.weights))


class JumpLaw:
    """The normalized jump density q and its cached convolution powers.

    q^{*k} is stored as a list of lumps keyed by which bumps contributed; two
    k-fold products land in the same lump exactly when their bump multisets
    agree, so merging is exact integer bookkeeping, not float comparison.
    """

    def __init__(self, spec: PerturbationSpec, alpha: Alpha,
                 dx: float | None = None, max_support: float = 1e9):
        if not spec.pairs:
            raise DivergentIntensity("empty perturbation has no jump law")
        self.spec = spec
        self.alpha = alpha
        eps_min = min(eps for _, eps in spec.pairs)
        self.dx = eps_min / 50.0 if dx is None else float(dx)
        self.max_support = float(max_support)
        lumps = []
        for a, eps in spec.pairs:
            r = spec.shape.support_radius
            if a - r * eps <= 0.0:
                raise DivergentIntensity(
                    f"bump at a={a} with eps={eps} reaches the origin")
            j_min, masses = _bump_cell_masses(spec.shape, a, eps,
                                              alpha.value, self.dx)
            start2 = 2 * j_min + 1
            lumps.append(_Lump(a, start2, masses))
            lumps.append(_Lump(-a, start2, masses[::-1].copy()))
        self.intensity = math.fsum(lp.mass for lp in lumps)
        norm = [_Lump(lp.center, lp.start2, lp.weights / self.intensity)
                for lp in lumps]
        n = len(norm)
        self._powers = {1: {
            tuple(1 if i == j else 0 for i in range(n)): lp
            for j, lp in enumerate(norm)}}

    @property
    def extent(self) -> float:
        return max(abs(a) + eps for a, eps in self.spec.pairs)

    def power(self, k: int) -> list:
        """Lump list of q^{*k} (total mass 1 up to rounding)."""
        if k < 1:
            raise ValueError("convolution power needs k >= 1")
        if k * self.extent > self.max_support:
            raise GridOverflow(
                f"q^{{*{k}}} support ~{k * self.extent:.3g} exceeds the "
                f"configured maximum {self.max_support:.3g}")
        top = max(self._powers)
        while top < k:
            nxt: dict = {}
            base = self._powers[1]
            for key, lp in self._powers[top].items():
                for bkey, blp in base.items():
                    nkey = tuple(i + j for i, j in zip(key, bkey))
                    w = np.convolve(lp.weights, blp.weights)
                    merged = _Lump(lp.center + blp.center,
                                   lp.start2 + blp.start2, w)
                    prev = nxt.get(nkey)
                    if prev is None:
                        nxt[nkey] = merged
                    else:
                        lo = min(prev.start2, merged.start2)
                        hi = max(prev.start2 + 2 * prev.weights.size,
                                 merged.start2 + 2 * merged.weights.size)
                        acc = np.zeros((hi - lo) // 2)
                        for piece in (prev, merged):
                            i0 = (piece.start2 - lo) // 2
                            acc[i0:i0 + piece.weights.size] += piece.weights
                        nxt[nkey] = _Lump(prev.center, lo, acc)
            top += 1
            self._powers[top] = nxt
        return list(self._powers[k].values())

    def power_mass(self, k: int) -> float:
        return math.fsum(lp.mass for lp in self.power(k))

    def moment(self, order: int = 1) -> float:
        """integral of x^order q(x) dx on the stored grid."""
        return math.fsum(
            float(lp.positions(self.dx) ** order @ lp.weights)
            for lp in self.power(1))

    def convolve(self, k: int, func) -> float:
        """(func * q^{*k})(0) evaluated as sum_i w_i func(-y_i) -- callers pass
        func already shifted, i.e. y -> g(x - y)."""
        return math.fsum(
            float(func(lp.positions(self.dx)) @ lp.weights)
            for lp in self.power(k))


def jump_law(spec: PerturbationSpec, alpha: Alpha,
             dx: float | None = None) -> JumpLaw:
    return JumpLaw(spec, alpha, dx=dx)


# ---------------------------------------------------------------------------
# base kernels


class CauchyBase:
    """Closed-form base kernel for alpha = 1, kappa = c (constant).

    The symbol is -c*pi*|xi|, so p(t, x) = c*t / ((pi c t)^2 + x^2).
    """

    def __init__(self, c: float = 1.0, t: float = 1.0):
        if c <= 0 or t <= 0:
            raise ValueError("scale and time must be positive")
        self.c = float(c)
        self.t = float(t)

    def density(self, x):
        s = math.pi * self.c * self.t
        return self.c * self.t / (s * s + np.asarray(x, dtype=float) ** 2)

    def gradient(self, x):
        x = np.asarray(x, dtype=float)
        s = math.pi * self.c * self.t
        return -2.0 * self.c * self.t * x / (s * s + x * x) ** 2

    @property
    def sup_density(self) -> float:
        return 1.0 / (math.pi ** 2 * self.c * self.t)

    @property
    def sup_gradient(self) -> float:
        # |p'| peaks at x = pi*c*t/sqrt(3)
        return 9.0 / (8.0 * math.sqrt(3.0) * math.pi ** 3
                      * self.c ** 2 * self.t ** 2)


class GridBase:
    """Spline base kernel built from one FFT inversion of exp(t*psi).

    The period is padded so the aliased kernel images at the requested extent
    stay below ``tol``; a cubic spline then serves density and gradient at
    arbitrary points.  ``check_error`` records the worst discrepancy against
    the panel-quadrature evaluator at three spot points.
    """

    def __init__(self, evaluator, extent: float, dx: float = 0.01,
                 tol: float = 1e-9):
        from scipy.interpolate import CubicSpline
        from .kernel import fft_uniform_grid
        alpha = evaluator.symbol.alpha.value
        pad = max(50.0, (4.0 / tol) ** (1.0 / (1.0 + alpha)))
        period = 2.0 * (extent + pad)
        xs, dens, grad = fft_uniform_grid(evaluator, dx, period)
        self.extent = float(extent)
        self._dens = CubicSpline(xs, dens)
        self._grad = CubicSpline(xs, grad)
        self.sup_density = float(dens.max())
        self.sup_gradient = float(np.abs(grad).max())
        err = 0.0
        for x in (0.0, 0.37 * extent, 0.91 * extent):
            pt = evaluator.evaluate(x)
            err = max(err, abs(float(self._dens(x)) - pt.density),
                      abs(float(self._grad(x)) - pt.gradient))
        self.check_error = err

    def density(self, x):
        return self._dens(np.asarray(x, dtype=float))

    def gradient(self, x):
        return self._grad(np.asarray(x, dtype=float))


# ---------------------------------------------------------------------------
# the truncated series


def poisson_weights(lam: float, k_max: int) -> np.ndarray:
    """e^{-lam} lam^k / k! for k = 0..k_max."""
    return poisson.pmf(np.arange(k_max + 1), lam)


def truncation_order(lam: float, sup_density: float,
                     tail_target: float = 1e-12, cap: int = 20) -> int:
    """Smallest K with Poisson tail mass * sup p below ``tail_target``."""
    if lam == 0.0:
        return 0
    scale = max(sup_density, 1.0)
    for k in range(cap + 1):
        if poisson.sf(k, lam) * scale <= tail_target:
            return k
    raise TruncationInsufficient(
        f"Poisson tail at order {cap} still exceeds {tail_target:.1e} "
        f"(lambda = {lam:.6g})")


def stirling_tail_check(lam: float, x: float, alpha: Alpha,
                        c_check: float = 10.0):
    """Tail mass past m = ceil(sqrt(|x|)/2) against C * |x|^{-2-alpha}.

    Returns (tail, bound, ok); the Stirling argument makes the tail factorially
    small in m, hence smaller than any fixed power of |x| for lam <= 1.
    """
    m = math.ceil(math.sqrt(abs(x)) / 2.0)
    tail = float(poisson.sf(m, lam))
    bound = c_check * abs(x) ** (-2.0 - alpha.value)
    return tail, bound, tail <= bound


class PerturbationProblem:
    """Everything needed to evaluate p_{kappa+f} by the Poisson series.

    ``base`` supplies p_kappa and its gradient (CauchyBase or GridBase); the
    jump law and truncation order are derived once at construction.
    """

    def __init__(self, base, f_spec: PerturbationSpec, alpha: Alpha,
                 tail_target: float = 1e-12, cap: int = 20,
                 law_dx: float | None = None):
        self.base = base
        self.f_spec = f_spec
        self.alpha = alpha
        if f_spec.pairs:
            self.law = JumpLaw(f_spec, alpha, dx=law_dx)
            self.lam = self.law.intensity
        else:
            self.law = None
            self.lam = 0.0
        self.k_max = truncation_order(self.lam, base.sup_density,
                                      tail_target, cap)
        self.weights = poisson_weights(self.lam, self.k_max)

    def _terms(self, x: float, func) -> np.ndarray:
        out = np.empty(self.k_max + 1)
        out[0] = self.weights[0] * float(func(x))
        for k in range(1, self.k_max + 1):
            out[k] = self.weights[k] * self.law.convolve(
                k, lambda y: func(x - y))
        return out

    def density_terms(self, x: float) -> np.ndarray:
        return self._terms(x, self.base.density)

    def gradient_terms(self, x: float) -> np.ndarray:
        return self._terms(x, self.base.gradient)


def series_density(prob: PerturbationProblem, x: float) -> float:
    """p_{kappa+f}(x) by the truncated compound-Poisson series."""
    return math.fsum(prob.density_terms(x))


def series_gradient(prob: PerturbationProblem, x: float) -> float:
    """d/dx p_{kappa+f}(x): the same series with the base gradient."""
    return math.fsum(prob.gradient_terms(x))


def _series_grid(prob: PerturbationProblem, xs, func) -> np.ndarray:
    xs = np.asarray(xs, dtype=float)
    out = prob.weights[0] * np.asarray(func(xs), dtype=float)
    for k in range(1, prob.k_max + 1):
        for lp in prob.law.power(k):
            pos = lp.positions(prob.law.dx)
            vals = np.asarray(func(xs[:, None] - pos[None, :]), dtype=float)
            out += prob.weights[k] * (vals @ lp.weights)
    return out


def series_density_grid(prob: PerturbationProblem, xs) -> np.ndarray:
    """Vectorized series_density over an array of points."""
    return _series_grid(prob, xs, prob.base.density)


def series_gradient_grid(prob: PerturbationProblem, xs) -> np.ndarray:
    """Vectorized series_gradient over an array of points."""
    return _series_grid(prob, xs, prob.base.gradient)


# ---------------------------------------------------------------------------
# Monte Carlo oracle


def _sampling_tables(law: JumpLaw):
    """Flattened (cdf, cell left edges, cell widths) for inverse-CDF draws.

    Cells are clipped to the bump supports so jitter never leaves supp(q).
    """
    cdf_parts, lefts, widths = [], [], []
    r = law.spec.shape.support_radius
    supports = []
    for a, eps in law.spec.pairs:
        supports.append((a - r * eps, a + r * eps))
        supports.append((-a - r * eps, -a + r * eps))
    for lp, (slo, shi) in zip(law.power(1), supports):
        pos = lp.positions(law.dx)
        lo = np.clip(pos - 0.5 * law.dx, slo, shi)
        hi = np.clip(pos + 0.5 * law.dx, slo, shi)
        cdf_parts.append(lp.weights)
        lefts.append(lo)
        widths.append(hi - lo)
    w = np.concatenate(cdf_parts)
    cdf = np.cumsum(w)
    cdf /= cdf[-1]
    return cdf, np.concatenate(lefts), np.concatenate(widths)


def _mc_estimate(prob: PerturbationProblem, x: float, n: int, seed: int,
                 func) -> tuple:
    if n < 1:
        raise ValueError("need at least one sample")
    if prob.lam == 0.0:
        return float(func(x)), 0.0
    rng = np.random.default_rng(seed)
    counts = rng.poisson(prob.lam, n)
    total = int(counts.sum())
    y = np.zeros(n)
    if total:
        cdf, lefts, widths = _sampling_tables(prob.law)
        idx = np.searchsorted(cdf, rng.random(total), side="right")
        idx = np.minimum(idx, lefts.size - 1)
        jumps = lefts[idx] + widths[idx] * rng.random(total)
        nonzero = counts > 0
        starts = np.concatenate(([0], np.cumsum(counts)[:-1]))
        y[nonzero] = np.add.reduceat(jumps, starts[nonzero])
    vals = np.asarray(func(x - y), dtype=float)
    est = float(vals.mean())
    se = float(vals.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return est, se


def mc_gradient(prob: PerturbationProblem, x: float, n: int,
                seed: int) -> tuple:
    """Sample mean of p'_kappa(x - Y) over n compound-Poisson variates Y.

    Y = sum of N jumps, N ~ Poisson(lambda), jumps i.i.d. with density q drawn
    by inverse CDF on the stored grid plus uniform jitter inside the cell.
    Returns (estimate, std_error); deterministic for a fixed seed.
    """
    return _mc_estimate(prob, x, n, seed, prob.base.gradient)


def mc_density(prob: PerturbationProblem, x: float, n: int,
               seed: int) -> tuple:
    """Sample mean of p_kappa(x - Y): the density counterpart of mc_gradient."""
    return _mc_estimate(prob, x, n, seed, prob.base.density)


# ---------------------------------------------------------------------------
# the J-decomposition of the gradient series


@dataclass(frozen=True)
class JSplit:
    """Gradient series split into the 0-, 1-, and >=2-jump contributions.

    ``j1_right``/``j1_left`` split J1 by which bump half the single jump came
    from; their sum is J1 (both forms of the one-jump term are exposed).
    """

    j0: float
    j1: float
    j2: float
    j1_right: float
    j1_left: float

    @property
    def total(self) -> float:
        return math.fsum((self.j0, self.j1, self.j2))


def j_decomposition(prob: PerturbationProblem, x: float) -> JSplit:
    """J0 + J1 + J2 = series_gradient(x), term-exact by construction."""
    if prob.lam == 0.0:
        return JSplit(float(prob.base.gradient(x)), 0.0, 0.0, 0.0, 0.0)
    terms = prob.gradient_terms(x)
    right = left = 0.0
    for lp in prob.law.power(1):
        val = prob.weights[1] * float(
            prob.base.gradient(x - lp.positions(prob.law.dx)) @ lp.weights)
        if lp.center > 0:
            right += val
        else:
            left += val
    j2 = math.fsum(terms[2:]) if terms.size > 2 else 0.0
    return JSplit(float(terms[0]), float(math.fsum(terms[1:2])), j2,
                  right, left)
