"""U-statistics, the jackknife Studentizer, and the classical statistics.

The sign conventions when the Studentizer vanishes are applied everywhere:
a zero denominator with a nonzero numerator gives +/-inf following the
numerator's sign, and 0/0 gives 0.  With those conventions every statistic
here is a total function of the data, so Monte Carlo tail counts are always
well defined.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from math import comb

import numpy as np

from . import _core
from .kernels import KernelSpec

SUBSET_GUARD = 10**7       # max C(n, m) for the exact path
SIGMA_ZERO_RTOL = 1e-12    # sigma_hat^2 <= tol * max(1, U^2) counts as zero


@dataclass(frozen=True)
class StudentizedResult:
    """U_n, the leave-one-out proxies q_i, and both Studentized statistics."""

    U_n: float
    q: np.ndarray
    sigma_hat_sq: float
    sigma_star_sq: float
    T_n: float
    T_n_star: float
    n: int
    m: int
    exact: bool = True


def u_statistic(kernel: KernelSpec, data) -> float:
    """Exact average of the kernel over all m-subsets."""
    data = np.asarray(data, dtype=float)
    n = data.shape[0]
    if n < kernel.m:
        raise ValueError(f"need n >= m, got n={n} < m={kernel.m}")
    if comb(n, kernel.m) > SUBSET_GUARD:
        raise ValueError(
            f"C({n},{kernel.m}) exceeds the exact-enumeration guard {SUBSET_GUARD}; "
            "use the incomplete estimator (studentize with exact=False)"
        )
    U, _ = _core.jackknife_batch(data[None, ...], kernel)
    return float(U[0])


def _studentized_from_uq(U: np.ndarray, Q: np.ndarray, n: int, m: int):
    """Apply the jackknife formulas and zero-denominator conventions to (U, Q)."""
    factor = (n - 1) / (n - m) ** 2
    dev = Q - U[:, None]
    sigma_hat_sq = factor * np.einsum("ri,ri->r", dev, dev)
    sigma_star_sq = factor * np.einsum("ri,ri->r", Q, Q)
    sigma_hat_sq = np.maximum(sigma_hat_sq, 0.0)

    def t_of(sig_sq):
        zero = sig_sq <= SIGMA_ZERO_RTOL * np.maximum(1.0, U * U)
        with np.errstate(divide="ignore", invalid="ignore"):
            t = math.sqrt(n) / m * U / np.sqrt(sig_sq)
        t = np.where(zero & (U > 0), np.inf, t)
        t = np.where(zero & (U < 0), -np.inf, t)
        t = np.where(zero & (U == 0), 0.0, t)
        return t

    return sigma_hat_sq, sigma_star_sq, t_of(sigma_hat_sq), t_of(sigma_star_sq)


def studentize_batch(
    kernel: KernelSpec,
    data: np.ndarray,
    exact: bool | None = None,
    n_subsets: int = 20_000,
    subset_seed: int = 0,
):
    """Vectorized studentization of a (replicates x n) batch.

    ``exact=None`` picks the exact path when C(n, m) is within the guard and
    the incomplete (uniformly subsampled subsets) estimator otherwise; the
    choice is returned so callers can surface it in output metadata.
    """
    data = np.asarray(data, dtype=float)
    n = data.shape[1]
    m = kernel.m
    if n <= m:
        raise ValueError(f"studentization needs n > m, got n={n}, m={m}")
    if exact is None:
        exact = comb(n, m) <= SUBSET_GUARD
    if exact:
        U, Q = _core.jackknife_batch(data, kernel)
    else:
        rng = np.random.Generator(
            np.random.Philox(key=np.array([subset_seed, 0x5B5E75], dtype=np.uint64))
        )
        U, Q = _core.jackknife_batch_sampled(data, kernel, n_subsets, rng)
    sigma_hat_sq, sigma_star_sq, T, T_star = _studentized_from_uq(U, Q, n, m)
    return U, Q, sigma_hat_sq, sigma_star_sq, T, T_star, exact


def studentize(
    kernel: KernelSpec,
    data,
    exact: bool | None = None,
    n_subsets: int = 20_000,
    subset_seed: int = 0,
) -> StudentizedResult:
    data = np.asarray(data, dtype=float)
    U, Q, shs, sss, T, Ts, was_exact = studentize_batch(
        kernel, data[None, ...], exact=exact, n_subsets=n_subsets, subset_seed=subset_seed
    )
    return StudentizedResult(
        U_n=float(U[0]), q=Q[0], sigma_hat_sq=float(shs[0]), sigma_star_sq=float(sss[0]),
        T_n=float(T[0]), T_n_star=float(Ts[0]), n=data.shape[0], m=kernel.m,
        exact=was_exact,
    )


# --- classical statistics ---


def t_statistic_batch(data: np.ndarray) -> np.ndarray:
    """Student's t = sqrt(n) * mean / sd per row, with the 0-denominator conventions."""
    data = np.asarray(data, dtype=float)
    n = data.shape[1]
    if n < 2:
        raise ValueError("t-statistic needs n >= 2")
    mean = data.mean(axis=1)
    ssq = ((data - mean[:, None]) ** 2).sum(axis=1) / (n - 1)
    zero = ssq <= SIGMA_ZERO_RTOL * np.maximum(1.0, mean * mean)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = math.sqrt(n) * mean / np.sqrt(ssq)
    t = np.where(zero & (mean > 0), np.inf, t)
    t = np.where(zero & (mean < 0), -np.inf, t)
    t = np.where(zero & (mean == 0), 0.0, t)
    return t


def t_statistic(data) -> float:
    return float(t_statistic_batch(np.asarray(data, dtype=float)[None, :])[0])


def self_normalized_sum_batch(data: np.ndarray) -> np.ndarray:
    """S_n / V_n per row; all-zero rows give 0 (S and V both vanish together)."""
    data = np.asarray(data, dtype=float)
    S = data.sum(axis=1)
    V = np.sqrt((data ** 2).sum(axis=1))
    with np.errstate(divide="ignore", invalid="ignore"):
        out = S / V
    return np.where(V == 0, 0.0, out)


def self_normalized_sum(data) -> float:
    return float(self_normalized_sum_batch(np.asarray(data, dtype=float)[None, :])[0])


def t_from_self_normalized(snv: float, n: int) -> float:
    """The classical bridge T_student = (S/V) * sqrt((n-1) / (n - (S/V)^2))."""
    if snv * snv >= n:
        return math.copysign(math.inf, snv) if snv != 0 else 0.0
    return snv * math.sqrt((n - 1) / (n - snv * snv))


def tn_star_to_tn(t_star: float, n: int, m: int) -> float:
    """Recover the Studentized statistic from its self-normalized variant."""
    if not math.isfinite(t_star):
        return t_star
    ratio = m * m * (n - 1) / (n - m) ** 2 * t_star * t_star
    if ratio >= 1.0:
        return math.copysign(math.inf, t_star) if t_star != 0 else 0.0
    return t_star / math.sqrt(1.0 - ratio)


def tn_from_tn_star(result: StudentizedResult) -> float:
    return tn_star_to_tn(result.T_n_star, result.n, result.m)
