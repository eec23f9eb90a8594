"""The jackknife variance estimator as a non-negative-kernel U-statistic.

sigma_hat^2 equals A(n, m) times the degree-2m U-statistic of an assembled
kernel that is pointwise non-negative.  The assembly goes through two families
of induced kernels: for each k, sums of h(x_{S1}, x_{S2}) * h(x_{S1}, x_{S3})
over disjoint index triples with |S1| = 2m-k and |S2| = |S3| = k-m (one family
weighted by the overlap count 2m-k, the other unweighted, coming from the
expansions of sum q_i^2 and U_n^2 respectively).  The module also carries the
degree-only constants b_m and c_m that size the censoring windows of the tail
analysis, and the closed form for E of the assembled kernel.

Binomial coefficients are computed in exact integer/rational arithmetic and
converted to float last.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb, factorial

import numpy as np

from .distributions import DiscreteDistribution
from .kernels import HoeffdingDecomposition, KernelSpec, decompose


@dataclass(frozen=True)
class CensoringConstants:
    """Degree-only constants: exact rational b_m, and c_m in (0, 1) with
    c_m^2 = b_m / (m^2 + 1)."""

    m: int
    b_m: Fraction
    c_m: float


def censoring_constants(m: int) -> CensoringConstants:
    if m < 1:
        raise ValueError("m must be >= 1")
    if m <= 2:
        b = Fraction(1, 2)
    else:
        b = Fraction(1)
        for j in range(m - 2):
            b *= Fraction(m - j, 2 * m - 2 - j)
    c = math.sqrt(b / (m * m + 1))
    return CensoringConstants(m=m, b_m=b, c_m=c)


def b_closed_form(m: int) -> Fraction:
    """(m!)^2 / (2 (2m-2)!) -- matches the product definition for m >= 3 only."""
    if m < 3:
        raise ValueError("the closed form applies for m >= 3")
    return Fraction(factorial(m) ** 2, 2 * factorial(2 * m - 2))


def _a_factor_fractions(n: int, m: int) -> tuple[Fraction, Fraction]:
    definition = Fraction(
        (n - 1) * comb(n, 2 * m),
        (n - m) ** 2 * (n - 2 * m + 1) * comb(n - 1, m - 1) ** 2,
    )
    factorial_form = Fraction(factorial(m - 1) ** 2, factorial(2 * m)) * Fraction(
        n * factorial(n - m - 1) ** 2, factorial(n - 2) * factorial(n - 2 * m + 1)
    )
    return definition, factorial_form


def a_factor(n: int, m: int) -> float:
    """The positive factor turning the degree-2m U-statistic into sigma_hat^2."""
    if n <= 2 * m:
        raise ValueError(f"a_factor needs n > 2m, got n={n}, m={m}")
    definition, factorial_form = _a_factor_fractions(n, m)
    assert definition == factorial_form  # exact rational identity
    return float(definition)


def a_factor_forms(n: int, m: int) -> tuple[float, float]:
    """Both printed forms, for the agreement check."""
    if n <= 2 * m:
        raise ValueError(f"a_factor needs n > 2m, got n={n}, m={m}")
    d, f = _a_factor_fractions(n, m)
    return float(d), float(f)


def a_factor_lower_bound(m: int) -> float:
    """((m-1)!)^2 / (2m)! * b_m, valid whenever n > max(2, m^2)."""
    return float(
        Fraction(factorial(m - 1) ** 2, factorial(2 * m)) * censoring_constants(m).b_m
    )


@lru_cache(maxsize=None)
def _subset_triples(k: int, m: int) -> tuple:
    """Disjoint (S1, S2, S3) of {0..k-1} with |S1| = 2m-k, |S2| = |S3| = k-m."""
    size1, size23 = 2 * m - k, k - m
    items = tuple(range(k))
    out = []
    for s1 in itertools.combinations(items, size1):
        rest = tuple(i for i in items if i not in s1)
        for s2 in itertools.combinations(rest, size23):
            remaining = tuple(i for i in rest if i not in s2)
            for s3 in itertools.combinations(remaining, size23):
                out.append((s1, s2, s3))
    return tuple(out)


class SigmaHatKernel:
    """The assembled degree-2m kernel; evaluation is symmetric and >= 0.

    The kernel depends on n through the subset-completion weights and the
    -m^2/n correction.  Base-kernel values are memoized per argument multiset,
    which collapses almost all work for data living on a small support.
    """

    def __init__(self, kernel: KernelSpec, n: int):
        if not kernel.centered:
            raise ValueError("build the sigma-hat kernel from a centered base kernel")
        m = kernel.m
        if n <= max(2, m * m):
            raise ValueError(f"need n > max(2, m^2), got n={n}, m={m}")
        self.kernel = kernel
        self.m = m
        self.n = n
        self.degree = 2 * m
        self.A = a_factor(n, m)
        self._memo: dict = {}

    def _h(self, args: tuple) -> float:
        key = tuple(sorted(args))
        val = self._memo.get(key)
        if val is None:
            val = float(self.kernel.evaluate(*args))
            self._memo[key] = val
        return val

    def _family_sums(self, points: tuple, k: int) -> float:
        """sum over triples of h(x_{S1 u S2}) h(x_{S1 u S3}) on the given k points."""
        total = 0.0
        for s1, s2, s3 in _subset_triples(k, self.m):
            left = self._h(tuple(points[i] for i in s1 + s2))
            right = self._h(tuple(points[i] for i in s1 + s3))
            total += left * right
        return total

    def evaluate(self, *points) -> float:
        if len(points) == 1 and isinstance(points[0], (list, tuple, np.ndarray)):
            points = tuple(points[0])
        if len(points) != self.degree:
            raise ValueError(f"expected {self.degree} arguments, got {len(points)}")
        points = tuple(float(p) for p in points)
        m, n = self.m, self.n
        tilde = 0.0
        breve = 0.0
        for k in range(m, 2 * m + 1):
            weight = 1.0 / comb(n - k, 2 * m - k)
            level = 0.0
            for subset in itertools.combinations(range(2 * m), k):
                level += self._family_sums(tuple(points[i] for i in subset), k)
            breve += weight * level
            if k < 2 * m:
                tilde += weight * (2 * m - k) * level
        return (n - 2 * m + 1) * (tilde - m * m / n * breve)

    __call__ = evaluate

    def u_statistic(self, data) -> float:
        """Exact degree-2m U-statistic of the assembled kernel."""
        data = np.asarray(data, dtype=float)
        n = data.shape[0]
        total = 0.0
        for subset in itertools.combinations(range(n), self.degree):
            total += self.evaluate(*(data[i] for i in subset))
        return total / comb(n, self.degree)


def build_sigma_hat_kernel(kernel: KernelSpec, n: int) -> SigmaHatKernel:
    return SigmaHatKernel(kernel, n)


def sigma_hat_kernel_mean_terms(
    kernel: KernelSpec, dist: DiscreteDistribution, n: int
) -> list[tuple[int, float]]:
    """Per-k terms of the closed-form mean, computed for the sigma-normalized kernel."""
    dec = decompose(kernel, dist)
    if dec.sigma_sq <= 1e-12:
        raise ValueError("degenerate kernel: the normalized mean is undefined")
    m = kernel.m
    if n <= max(2, m * m):
        raise ValueError(f"need n > max(2, m^2), got n={n}, m={m}")
    terms = []
    for k in range(m, 2 * m):
        j = 2 * m - k  # level of the squared projection in the term
        coef = (
            (n - 2 * m + 1)
            * factorial(2 * m)
            / (factorial(2 * m - k) * factorial(k - m)) ** 2
            / comb(n - k, 2 * m - k)
            * (2 * m - k - m * m / n)
        )
        e_hj_sq = dec.moment_level(j, 2) / dec.sigma_sq
        terms.append((k, coef * e_hj_sq))
    return terms


def sigma_hat_kernel_mean(kernel: KernelSpec, dist: DiscreteDistribution, n: int) -> float:
    """Closed-form E of the assembled kernel under the sigma = 1 normalization."""
    return math.fsum(t for _, t in sigma_hat_kernel_mean_terms(kernel, dist, n))


def sigma_hat_kernel_mean_lower_bound(m: int) -> float:
    """(2m)!/((m-1)!)^2 * (1 - m^2/(m^2+1)), valid for n > m^2."""
    return factorial(2 * m) / factorial(m - 1) ** 2 / (m * m + 1)


def sigma_hat_kernel_mean_bruteforce(
    shk: SigmaHatKernel, dist: DiscreteDistribution
) -> float:
    """Independent oracle: enumerate the 2m-fold product support."""
    values = dist.values
    probs = dist.probabilities
    s = len(values)
    total = []
    for idx in itertools.product(range(s), repeat=shk.degree):
        w = 1.0
        for i in idx:
            w *= probs[i]
        total.append(w * shk.evaluate(*(values[i] for i in idx)))
    return math.fsum(total)
