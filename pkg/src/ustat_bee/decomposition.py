"""Exact self-normalized decomposition of the Studentized U-statistic.

After centering the kernel and normalizing it to unit first-projection
variance, the statistic factors as T_n = (W + D1) / sqrt(1 + D2) with
W the i.i.d. core sum of xi_i = g(X_i)/sqrt(n), D1 the degenerate numerator
remainder, and D2 = sigma_hat^2 - 1 the denominator remainder, which itself
expands through V_n^2, delta_1 (quadratic remainder terms built from W,
Lambda_n^2 and the U_n^2 recentering) and delta_2 (the cross term).  Every
identity is checked exactly in the test suite; this module only evaluates the
printed formulas.

Variable censoring (clamping to an interval) and the specific censored
versions of W, D1, delta_1 and delta_2 used by the tail analysis live here
too.  Proof-internal censored objects beyond those are out of scope.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from math import comb

import numpy as np

from .distributions import DiscreteDistribution
from .engine import studentize
from .kernels import KernelSpec, center, decompose, scale_kernel
from .sigma_kernel import censoring_constants


@dataclass(frozen=True)
class DecompositionTerms:
    """All terms of the decomposition, computed under the sigma = 1 normalization."""

    xi: np.ndarray
    W: float
    V_n_sq: float
    Psi: np.ndarray
    Lambda_sq: float
    delta1_star: float
    delta1: float
    delta2: float
    D1: float
    D2: float
    d_n: float
    n: int
    m: int
    sigma: float          # normalization applied to the input kernel
    U_n: float            # U-statistic of the normalized kernel
    T_n: float            # Studentized statistic (invariant to the normalization)


@dataclass(frozen=True)
class CensorSpec:
    """Clamp window [lower, upper]; infinities make a side inactive."""

    lower: float = -math.inf
    upper: float = math.inf

    def __post_init__(self):
        if not self.lower <= self.upper:
            raise ValueError(f"need lower <= upper, got {self.lower} > {self.upper}")


def censor(y, spec: CensorSpec):
    """Censored value: lower if y < lower, upper if y > upper, else y."""
    return np.clip(y, spec.lower, spec.upper)


@dataclass(frozen=True)
class CensoredTerms:
    xi_b: np.ndarray
    W_b: float
    D1_bar_x: float
    delta1_bar: float
    delta2_b: float
    delta2_b_bar: float


def decompose_statistic(
    kernel: KernelSpec, dist: DiscreteDistribution, data
) -> DecompositionTerms:
    """Evaluate every decomposition term for one dataset drawn from ``dist``.

    The kernel is centered (if needed) and scaled to sigma = 1 internally; a
    degenerate kernel (sigma = 0 against ``dist``) is an error, as is n <= m.
    """
    data = np.asarray(data, dtype=float)
    n = data.shape[0]
    m = kernel.m
    if n <= m:
        raise ValueError(f"decomposition needs n > m, got n={n}, m={m}")
    if not kernel.centered:
        kernel = center(kernel, dist)
    dec = decompose(kernel, dist)
    if dec.sigma_sq <= 1e-12:
        raise ValueError("kernel is degenerate against this distribution (sigma = 0)")
    sigma = math.sqrt(dec.sigma_sq)
    knorm = scale_kernel(kernel, 1.0 / sigma)

    sqrt_n = math.sqrt(n)
    xi = dec.g_of_data(data) / sigma / sqrt_n
    W = float(xi.sum())
    V_n_sq = float((xi ** 2).sum())

    # one pass over the m-subsets: each contributes h_bar to Psi_i for i in it
    g_data = xi * sqrt_n  # normalized g(x_i)
    Psi = np.zeros(n)
    u_sum = 0.0
    for subset in itertools.combinations(range(n), m):
        h_val = float(knorm.evaluate(*(data[i] for i in subset)))
        u_sum += h_val
        hbar = h_val - float(g_data[list(subset)].sum())
        for i in subset:
            Psi[i] += hbar
    Psi /= sqrt_n
    U_n = u_sum / comb(n, m)
    D1 = float(Psi.sum()) / (m * comb(n - 1, m - 1))
    Lambda_sq = float((Psi ** 2).sum())
    delta2 = 2.0 * (n - 1) / ((n - m) * comb(n - 1, m - 1)) * float((xi * Psi).sum())
    delta1_star = (
        (n * (m - 1) ** 2 / (n - m) ** 2 + 2 * (m - 1) / (n - m)) * W * W
        + (n - 1) ** 2 / (comb(n - 1, m - 1) ** 2 * (n - m) ** 2) * Lambda_sq
        + 2 * (n - 1) * (m - 1) / ((n - m) ** 2 * comb(n - 1, m - 1)) * W * float(Psi.sum())
    )
    delta1 = delta1_star - (n - 1) ** 2 / (n - m) ** 2 * U_n * U_n

    res = studentize(knorm, data)
    D2 = res.sigma_hat_sq - 1.0
    d_n = math.sqrt(n / (n - 1))

    return DecompositionTerms(
        xi=xi, W=W, V_n_sq=V_n_sq, Psi=Psi, Lambda_sq=Lambda_sq,
        delta1_star=delta1_star, delta1=delta1, delta2=delta2,
        D1=D1, D2=D2, d_n=d_n, n=n, m=m, sigma=sigma, U_n=U_n, T_n=res.T_n,
    )


def censored_terms(terms: DecompositionTerms, x: float, m: int | None = None) -> CensoredTerms:
    """The censored quantities entering the tail analysis at level x >= 1.

    xi is clamped to [-1, 1]; D1 to +/- c_m x / 4; delta_1 to +/- n^{-1/2};
    delta_2 (rebuilt from the censored xi) to +/- 1.
    """
    if x < 1:
        raise ValueError(f"censored terms are defined for x >= 1, got {x}")
    m = terms.m if m is None else m
    if m != terms.m:
        raise ValueError(f"degree mismatch: terms have m={terms.m}, got m={m}")
    n = terms.n
    c_m = censoring_constants(m).c_m

    unit = CensorSpec(-1.0, 1.0)
    xi_b = censor(terms.xi, unit)
    W_b = float(xi_b.sum())
    D1_bar_x = float(censor(terms.D1, CensorSpec(-c_m * x / 4, c_m * x / 4)))
    delta1_bar = float(censor(terms.delta1, CensorSpec(-1 / math.sqrt(n), 1 / math.sqrt(n))))
    delta2_b = 2.0 * (n - 1) / ((n - m) * comb(n - 1, m - 1)) * float((xi_b * terms.Psi).sum())
    delta2_b_bar = float(censor(delta2_b, unit))
    return CensoredTerms(
        xi_b=xi_b, W_b=W_b, D1_bar_x=D1_bar_x, delta1_bar=delta1_bar,
        delta2_b=delta2_b, delta2_b_bar=delta2_b_bar,
    )
