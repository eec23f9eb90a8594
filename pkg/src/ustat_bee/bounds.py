"""Evaluators for the normal-approximation error bounds and tail inequalities.

Nothing here asserts that any particular numeric constant is admissible: the
absolute constants of the main bounds are explicit ``BoundParams`` with
defaults of 1, and experiments that fit a working constant must label the
result as empirical.  The evaluators just compute the printed right-hand
sides, with one convention: a zero denominator inside an exponent (e.g. a
vanishing signed third moment) sends the exponent to -inf and the term to 0,
the continuous limit of the bound in that ratio.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .kernels import HoeffdingDecomposition


@dataclass(frozen=True)
class MomentSummary:
    """The moment quantities the bounds consume (sigma scale, third moments, norms).

    For the degree-1 (t-statistic) case the raw data moments E_X2, E_X3 (signed)
    and E_abs_X3 are also carried.
    """

    sigma: float
    E_abs_h3: float
    E_abs_g3: float
    h3_norm: float
    g3_norm: float
    h2_norm: float
    E_X2: float | None = None
    E_X3: float | None = None
    E_abs_X3: float | None = None

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        if self.g3_norm > self.h3_norm * (1 + 1e-9):
            raise ValueError("||g||_3 <= ||h||_3 must hold (projection contracts L3)")
        if self.sigma > self.h2_norm * (1 + 1e-9):
            raise ValueError("sigma <= ||h||_2 must hold")

    @classmethod
    def from_decomposition(cls, dec: HoeffdingDecomposition) -> "MomentSummary":
        m = dec.m
        return cls(
            sigma=math.sqrt(dec.sigma_sq),
            E_abs_h3=dec.moment_level(m, 3),
            E_abs_g3=dec.moment_level(1, 3),
            h3_norm=dec.moment_level(m, 3) ** (1 / 3),
            g3_norm=dec.moment_level(1, 3) ** (1 / 3),
            h2_norm=math.sqrt(dec.moment_level(m, 2)),
        )

    @classmethod
    def from_distribution(cls, dist) -> "MomentSummary":
        """Degree-1 identity-kernel case: h = g = X."""
        from .distributions import moment

        e2 = moment(dist, lambda x: x * x)
        e3 = moment(dist, lambda x: x ** 3)
        a3 = moment(dist, lambda x: abs(x) ** 3)
        return cls(
            sigma=math.sqrt(e2), E_abs_h3=a3, E_abs_g3=a3,
            h3_norm=a3 ** (1 / 3), g3_norm=a3 ** (1 / 3), h2_norm=math.sqrt(e2),
            E_X2=e2, E_X3=e3, E_abs_X3=a3,
        )


@dataclass(frozen=True)
class BoundParams:
    """The unspecified absolute constants, exposed as explicit parameters."""

    C: float = 1.0
    c1: float = 1.0
    c2: float = 1.0
    label: str = "unit"

    def __post_init__(self):
        if min(self.C, self.c1, self.c2) <= 0:
            raise ValueError("bound constants must be positive")


def _exp_correction(c1: float, n: int, sigma: float, e_abs_h3: float) -> float:
    # exp(-c1 n sigma^6 / (E|h|^3)^2); a vanishing denominator gives exponent -inf
    if e_abs_h3 == 0:
        return 0.0
    return math.exp(-c1 * n * sigma ** 6 / e_abs_h3 ** 2)


def nonuniform_bound_Tn(
    x: float, n: int, m: int, mom: MomentSummary, par: BoundParams, form: str = "full"
) -> float:
    """Nonuniform bound for the Studentized U-statistic at x.

    ``form="full"`` evaluates the two-block bound (cubic-decay block plus
    exponential-in-|x| block); ``form="simple"`` the single third-moment-ratio
    block.  Both include the additive correction term decaying exponentially
    in n, which is what restores validity for Studentized statistics.
    """
    if n <= max(2, m * m):
        raise ValueError(f"the bound needs n > max(2, m^2), got n={n}, m={m}")
    s = mom.sigma
    correction = _exp_correction(par.c1, n, s, mom.E_abs_h3)
    ax = abs(x)
    if form == "simple":
        return correction + par.C * mom.E_abs_h3 / ((1 + ax ** 3) * math.sqrt(n) * s ** 3)
    if form != "full":
        raise ValueError(f"unknown form {form!r}")
    cubic_block = (1 / (1 + ax ** 3)) * (
        mom.E_abs_h3 / (n ** 1.5 * s ** 3) + mom.E_abs_g3 / (math.sqrt(n) * s ** 3)
    )
    exp_block = (math.exp(-par.c2 * ax) / math.sqrt(n)) * (
        mom.g3_norm ** 2 * mom.h3_norm / s ** 3 + mom.h3_norm ** 2 / s ** 2
    )
    return correction + par.C * (cubic_block + exp_block)


def nonuniform_bound_tstat(x: float, n: int, mom: MomentSummary, par: BoundParams) -> float:
    """Nonuniform bound for Student's t (and the self-normalized sum).

    The first term's exponent uses the *signed* third moment squared, exactly
    as stated; a symmetric law therefore kills the first term entirely.
    """
    if n < 2:
        raise ValueError("need n >= 2")
    if mom.E_X2 is None or mom.E_X3 is None or mom.E_abs_X3 is None:
        raise ValueError("the t-statistic bound needs the degree-1 moments E_X2/E_X3/E_abs_X3")
    if mom.E_X2 <= 0:
        raise ValueError("E[X^2] must be positive")
    if mom.E_X3 == 0:
        first = 0.0
    else:
        first = par.C * math.exp(-par.c1 * n * mom.E_X2 ** 3 / mom.E_X3 ** 2)
    second = (
        par.C * math.exp(-par.c2 * x * x) * mom.E_abs_X3
        / (math.sqrt(n) * mom.E_X2 ** 1.5)
    )
    return first + second


def kappa_count(n: int, m: int, convention: str = "strict") -> int:
    """[n/m]: "strict" = greatest integer < n/m when n/m is integral, floor otherwise."""
    if convention == "floor":
        return n // m
    if convention == "strict":
        return n // m - 1 if n % m == 0 else n // m
    raise ValueError(f"unknown convention {convention!r}")


def lower_tail_bound(
    Eh: float, Ehp: float, p: float, n: int, m: int, x: float,
    convention: str = "strict",
) -> float:
    """Exponential lower-tail bound for a U-statistic with a non-negative kernel.

    Valid for 0 < x <= E[h] and p in (1, 2].  The two [n/m] conventions differ
    only when m divides n; "strict" (the default) is the conservative one.
    """
    if not (1.0 < p <= 2.0):
        raise ValueError("p must lie in (1, 2]")
    if not (0.0 < x <= Eh):
        raise ValueError(f"x must lie in (0, E[h]] = (0, {Eh}], got {x}")
    if Ehp < Eh ** p * (1 - 1e-12):
        raise ValueError("need E[h^p] >= (E[h])^p (power-mean consistency)")
    kappa = kappa_count(n, m, convention)
    exponent = -kappa * (p - 1) * (Eh - x) ** (p / (p - 1)) / (p * Ehp ** (1 / (p - 1)))
    return math.exp(exponent)


def moment_bound_Un(
    p: float, n: int, m: int, r: int, canonical_moments
) -> float:
    """Moment bound E|U_n|^p for a centered kernel of degeneracy order r.

    ``canonical_moments`` lists E|g_k|^p for k = r..m.  For p <= 2 the bound
    uses alpha_p = 2^(2-p); for p > 2 the gamma_p form with the extra
    n^((p-2)k/2) factor.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    if not 1 <= r <= m:
        raise ValueError("need 1 <= r <= m")
    moments = list(canonical_moments)
    if len(moments) != m - r + 1:
        raise ValueError(f"expected {m - r + 1} canonical moments for k = {r}..{m}")
    total = 0.0
    if p <= 2:
        alpha = 2.0 ** (2.0 - p)
        for k, gk in zip(range(r, m + 1), moments):
            total += math.comb(m, k) ** p * math.comb(n, k) ** (1 - p) * alpha ** (k + 1) * gk
    else:
        gamma = (8 * (p - 1) * max(1.0, 2.0 ** (p - 3))) ** p
        for k, gk in zip(range(r, m + 1), moments):
            total += (
                math.comb(m, k) ** p * math.comb(n, k) ** (1 - p)
                * n ** ((p - 2) * k / 2) * gamma ** (k + 1) * gk
            )
    return (m - r + 1) ** (p - 1) * total


def bennett_mgf_bound(t: float) -> float:
    """exp(e^{2t}/4 - 1/4 + t/2): MGF bound for a sum of censored summands with
    zero pre-censoring means and total variance at most one."""
    if t <= 0:
        raise ValueError("t must be positive")
    return math.exp(math.exp(2 * t) / 4 - 0.25 + t / 2)


def subgaussian_sn_bound(x: float) -> float:
    """2 exp(-x^2/2): tail bound for S_n over the inflated self-normalizer."""
    if x < 0:
        raise ValueError("x must be >= 0")
    return 2.0 * math.exp(-x * x / 2)


@dataclass(frozen=True)
class BridgeValues:
    a_n_x: float
    b_m_n_x: float


def bridge_quantities(x: float, n: int, m: int) -> BridgeValues:
    """The change-of-threshold factors linking raw and Studentized tail events.

    a_n(x) = sqrt(n / (n + x^2 - 1)) bridges the t-statistic and S_n/V_n;
    b_{m,n}(x) = (1 + m^2 (n-1) x^2 / (n-m)^2)^{-1/2} bridges T_n and its
    self-normalized variant.
    """
    if n < 2:
        raise ValueError("need n >= 2")
    if x < 0:
        raise ValueError("x must be >= 0")
    a = math.sqrt(n / (n + x * x - 1))
    b = 1.0 / math.sqrt(1.0 + m * m * (n - 1) * x * x / (n - m) ** 2)
    return BridgeValues(a_n_x=a, b_m_n_x=b)
