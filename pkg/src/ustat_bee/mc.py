"""Seeded Monte Carlo harness: CDF estimation, the binary counterexample
experiment, and empirical verification of the inequality evaluators.

Determinism contract: replicates live in fixed blocks, each block has its own
counter-based stream (see distributions), and workers only partition blocks
while merging integer count accumulators, so any worker count produces
bit-identical estimates.  Tail counts stay O(grid) in memory, so replicate
counts in the tens of millions are fine.

A bound "violation" is only flagged when the empirical value exceeds the
bound by more than 3 standard errors, so Monte Carlo noise does not produce
false alarms against true inequalities.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from math import comb

import numpy as np

from . import _core, engine
from .bounds import (
    BoundParams,
    MomentSummary,
    bennett_mgf_bound,
    lower_tail_bound,
    nonuniform_bound_Tn,
    nonuniform_bound_tstat,
    subgaussian_sn_bound,
)
from .distributions import (
    BLOCK_SIZE,
    DiscreteDistribution,
    Law,
    moment,
    novak_distribution,
    sample_block,
)
from .kernels import KernelSpec, center, decompose
from .stein import normal_cdf, normal_sf

STATISTICS = ("Tn", "TnStar", "TStudent", "SnVn", "Un")


@dataclass(frozen=True)
class MCConfig:
    statistic: str
    dist: Law
    n: int
    replicates: int
    x_grid: np.ndarray
    seed: int
    kernel: KernelSpec | None = None
    workers: int = 1
    exact_subset_limit: int = 50_000   # per-replicate C(n, m) budget for exactness
    incomplete_subsets: int = 20_000

    def __post_init__(self):
        if self.statistic not in STATISTICS:
            raise ValueError(f"unknown statistic {self.statistic!r}")
        if self.replicates < 1:
            raise ValueError("replicates must be >= 1")
        grid = np.asarray(self.x_grid, dtype=float)
        if np.any(np.diff(grid) < 0):
            raise ValueError("x_grid must be sorted")
        object.__setattr__(self, "x_grid", grid)
        if self.statistic in ("Tn", "TnStar", "Un") and self.kernel is None:
            raise ValueError(f"statistic {self.statistic} needs a kernel")


@dataclass(frozen=True)
class MCResult:
    x_grid: np.ndarray
    p_hat: np.ndarray
    se: np.ndarray
    phi: np.ndarray
    delta: np.ndarray
    n_inf_pos: int
    n_inf_neg: int
    metadata: dict = field(default_factory=dict)


def _uses_exact_path(cfg: MCConfig) -> bool:
    if cfg.statistic not in ("Tn", "TnStar", "Un"):
        return True
    return comb(cfg.n, cfg.kernel.m) <= min(cfg.exact_subset_limit, engine.SUBSET_GUARD)


def _statistic_batch(cfg: MCConfig, data: np.ndarray) -> np.ndarray:
    stat = cfg.statistic
    if stat == "TStudent":
        return engine.t_statistic_batch(data)
    if stat == "SnVn":
        return engine.self_normalized_sum_batch(data)
    exact = _uses_exact_path(cfg)
    if stat == "Un":
        if exact:
            U, _ = _core.jackknife_batch(data, cfg.kernel)
        else:
            U, _, *_ = engine.studentize_batch(
                cfg.kernel, data, exact=False,
                n_subsets=cfg.incomplete_subsets, subset_seed=cfg.seed + 1,
            )
        return U
    _, _, _, _, T, T_star, _ = engine.studentize_batch(
        cfg.kernel, data, exact=exact,
        n_subsets=cfg.incomplete_subsets, subset_seed=cfg.seed + 1,
    )
    return T if stat == "Tn" else T_star


def _count_block_range(cfg: MCConfig, lo: int, hi: int):
    grid = cfg.x_grid
    counts = np.zeros(len(grid), dtype=np.int64)
    inf_pos = 0
    inf_neg = 0
    for b in range(lo, hi):
        start = b * BLOCK_SIZE
        rows = min(BLOCK_SIZE, cfg.replicates - start)
        data = sample_block(cfg.dist, cfg.n, cfg.seed, b, rows)
        stat = _statistic_batch(cfg, data)
        stat = np.sort(stat)
        counts += np.searchsorted(stat, grid, side="right")
        inf_pos += int(np.sum(stat == np.inf))
        inf_neg += int(np.sum(stat == -np.inf))
    return counts, inf_pos, inf_neg


def estimate_cdf(cfg: MCConfig) -> MCResult:
    """Empirical P(stat <= x) on the grid, with binomial SEs and normal deltas.

    +inf statistic values exceed every finite grid point and -inf values sit
    below every one, so the degenerate-denominator conventions feed the
    correct tails.
    """
    n_blocks = -(-cfg.replicates // BLOCK_SIZE)
    pieces = []
    if cfg.workers > 1 and n_blocks > 1:
        k = min(cfg.workers, n_blocks)
        edges = np.linspace(0, n_blocks, k + 1, dtype=int)
        try:
            with ProcessPoolExecutor(max_workers=k) as pool:
                pieces = list(
                    pool.map(_count_block_range, [cfg] * k, edges[:-1], edges[1:])
                )
        except Exception as exc:  # unpicklable custom kernels and the like
            warnings.warn(f"parallel run failed ({exc}); falling back to serial")
            pieces = []
    if not pieces:
        pieces = [_count_block_range(cfg, 0, n_blocks)]
    counts = sum(p[0] for p in pieces)
    inf_pos = sum(p[1] for p in pieces)
    inf_neg = sum(p[2] for p in pieces)

    p_hat = counts / cfg.replicates
    se = np.sqrt(p_hat * (1 - p_hat) / cfg.replicates)
    phi = np.asarray(normal_cdf(cfg.x_grid))
    return MCResult(
        x_grid=cfg.x_grid, p_hat=p_hat, se=se, phi=phi, delta=p_hat - phi,
        n_inf_pos=inf_pos, n_inf_neg=inf_neg,
        metadata={
            "statistic": cfg.statistic, "n": cfg.n, "replicates": cfg.replicates,
            "seed": cfg.seed, "exact_u_stats": _uses_exact_path(cfg),
            "distribution": cfg.dist.label,
            "kernel": cfg.kernel.name if cfg.kernel else None,
        },
    )


# --- the binary counterexample experiment ---


@dataclass(frozen=True)
class NovakReport:
    n: int
    epsilon: float
    x_n: float
    p_exceed: float
    se: float
    phi_bar_x_n: float
    gap_estimate: float
    closed_form_event_prob: float
    replicates: int
    seed: int


def novak_experiment(n: int, epsilon: float, replicates: int, seed: int) -> NovakReport:
    """Estimate P(T_student > sqrt(n) - eps) - Phi_bar(...) under the two-atom
    law with p = 1/n, against the all-positive-event closed form (1 - 1/n)^n.

    On the all-positive event the sample is constant, the Studentizer is zero
    and the t-statistic is +inf by convention, which is the whole point: the
    gap stays near 1/e while any vanishing nonuniform factor must go to 0.
    """
    if n < 3:
        raise ValueError("the experiment needs n >= 3")
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    x_n = math.sqrt(n) - epsilon
    cfg = MCConfig(
        statistic="TStudent", dist=novak_distribution(1.0 / n),
        n=n, replicates=replicates, x_grid=np.array([x_n]), seed=seed,
    )
    res = estimate_cdf(cfg)
    p_exceed = 1.0 - float(res.p_hat[0])
    se = math.sqrt(max(p_exceed * (1 - p_exceed), 1e-300) / replicates)
    phi_bar = float(normal_sf(x_n))
    return NovakReport(
        n=n, epsilon=epsilon, x_n=x_n, p_exceed=p_exceed, se=se,
        phi_bar_x_n=phi_bar, gap_estimate=p_exceed - phi_bar,
        closed_form_event_prob=(1.0 - 1.0 / n) ** n,
        replicates=replicates, seed=seed,
    )


def usual_form_term(n: int, epsilon: float, C: float = 1.0) -> float:
    """C * E|X|^3 * d(x_n) / (sqrt(n) sigma^3) with d(x) = 1/(1+x^3), for the
    two-atom law with p = 1/n (where sigma = 1 exactly)."""
    dist = novak_distribution(1.0 / n)
    e_abs_3 = moment(dist, lambda v: abs(v) ** 3)
    x_n = math.sqrt(n) - epsilon
    return C * e_abs_3 / math.sqrt(n) / (1.0 + x_n ** 3)


# --- exact small-sample oracle for the mean's lower tail ---


def exact_sum_distribution(dist: DiscreteDistribution, n: int):
    """Distribution of X_1 + ... + X_n by n-fold convolution over the support."""
    table = {0.0: 1.0}
    values = dist.values
    probs = dist.probabilities
    for _ in range(n):
        nxt: dict = {}
        for s, ps in table.items():
            for v, pv in zip(values, probs):
                key = round(s + v, 12)
                nxt[key] = nxt.get(key, 0.0) + ps * pv
        table = nxt
    keys = np.array(sorted(table))
    return keys, np.array([table[k] for k in keys])


def exact_mean_cdf(dist: DiscreteDistribution, n: int, x: float) -> float:
    """Exact P(mean of n i.i.d. draws <= x)."""
    sums, probs = exact_sum_distribution(dist, n)
    return float(probs[sums <= n * x + 1e-9].sum())


# --- inequality verification ---


@dataclass(frozen=True)
class InequalityReport:
    kind: str
    rows: tuple            # dicts: point, empirical, se, bound, violation
    n_violations: int
    metadata: dict = field(default_factory=dict)
    fitted: dict | None = None


def _row(point, empirical, se, bound):
    return {
        "point": float(point), "empirical": float(empirical), "se": float(se),
        "bound": float(bound), "violation": bool(empirical - 3 * se > bound),
    }


def verify_inequality(kind: str, cfg: dict, params: BoundParams | None = None) -> InequalityReport:
    """Empirically check one inequality evaluator against simulation/enumeration.

    kinds: "lower_tail" (exact enumeration, degree-1 mean, non-negative
    support), "bennett" (MGF of the censored sum), "subgaussian_sn"
    (self-normalized tail), "nonuniform_Tn", "tstat_bound" (CDF discrepancy
    vs. the bound evaluators; also fits the smallest working constant,
    labeled empirical).
    """
    if kind == "lower_tail":
        return _verify_lower_tail(cfg)
    if kind == "bennett":
        return _verify_bennett(cfg)
    if kind == "subgaussian_sn":
        return _verify_subgaussian(cfg)
    if kind == "nonuniform_Tn":
        return _verify_nonuniform_tn(cfg, params or BoundParams())
    if kind == "tstat_bound":
        return _verify_tstat(cfg, params or BoundParams())
    raise ValueError(f"unknown inequality kind {kind!r}")


def _verify_lower_tail(cfg: dict) -> InequalityReport:
    dist: DiscreteDistribution = cfg["dist"]
    n = cfg["n"]
    p = cfg.get("p", 2.0)
    convention = cfg.get("convention", "strict")
    support = dist.support_array()
    if support.min() < 0:
        raise ValueError("the lower-tail lemma needs a non-negative kernel (support >= 0)")
    Eh = moment(dist, lambda v: v)
    Ehp = moment(dist, lambda v: v ** p)
    x_grid = cfg.get("x_grid")
    if x_grid is None:
        x_grid = np.linspace(Eh / 10, Eh, 10)
    rows = []
    for x in x_grid:
        exact = exact_mean_cdf(dist, n, float(x))
        bound = lower_tail_bound(Eh, Ehp, p, n, 1, float(x), convention=convention)
        rows.append(_row(x, exact, 0.0, bound))
    return InequalityReport(
        kind="lower_tail", rows=tuple(rows),
        n_violations=sum(r["violation"] for r in rows),
        metadata={"n": n, "p": p, "convention": convention, "dist": dist.label,
                  "kappa_note": "empirical side is exact enumeration (se = 0)"},
    )


def _verify_bennett(cfg: dict) -> InequalityReport:
    dist: DiscreteDistribution = cfg["dist"]
    n = cfg["n"]
    replicates = cfg["replicates"]
    seed = cfg["seed"]
    t_values = cfg.get("t_values", (0.25, 0.5, 1.0))
    if abs(moment(dist, lambda v: v)) > 1e-9:
        raise ValueError("the censored-sum bound needs mean-zero summands")
    if moment(dist, lambda v: v * v) > 1 + 1e-9:
        raise ValueError("the bound needs total variance of xi at most 1 (E[X^2] <= 1)")
    sums = {t: 0.0 for t in t_values}
    sums_sq = {t: 0.0 for t in t_values}
    n_blocks = -(-replicates // BLOCK_SIZE)
    for b in range(n_blocks):
        rows_n = min(BLOCK_SIZE, replicates - b * BLOCK_SIZE)
        data = sample_block(dist, n, seed, b, rows_n)
        xi_b = np.clip(data / math.sqrt(n), -1.0, 1.0)
        W_b = xi_b.sum(axis=1)
        for t in t_values:
            vals = np.exp(t * W_b)
            sums[t] += float(vals.sum())
            sums_sq[t] += float((vals ** 2).sum())
    rows = []
    for t in t_values:
        mean = sums[t] / replicates
        var = max(sums_sq[t] / replicates - mean ** 2, 0.0)
        se = math.sqrt(var / replicates)
        rows.append(_row(t, mean, se, bennett_mgf_bound(t)))
    return InequalityReport(
        kind="bennett", rows=tuple(rows),
        n_violations=sum(r["violation"] for r in rows),
        metadata={"n": n, "replicates": replicates, "seed": seed, "dist": dist.label},
    )


def _verify_subgaussian(cfg: dict) -> InequalityReport:
    dist: DiscreteDistribution = cfg["dist"]
    n = cfg["n"]
    replicates = cfg["replicates"]
    seed = cfg["seed"]
    x_values = cfg.get("x_values", (0.5, 1.0, 2.0))
    norm2 = math.sqrt(moment(dist, lambda v: v * v))
    counts = {x: 0 for x in x_values}
    n_blocks = -(-replicates // BLOCK_SIZE)
    for b in range(n_blocks):
        rows_n = min(BLOCK_SIZE, replicates - b * BLOCK_SIZE)
        data = sample_block(dist, n, seed, b, rows_n)
        S = data.sum(axis=1)
        V = np.sqrt((data ** 2).sum(axis=1))
        for x in x_values:
            counts[x] += int(np.sum(S > x * (4 * math.sqrt(n) * norm2 + V)))
    rows = []
    for x in x_values:
        p_hat = counts[x] / replicates
        se = math.sqrt(p_hat * (1 - p_hat) / replicates)
        rows.append(_row(x, p_hat, se, subgaussian_sn_bound(x)))
    return InequalityReport(
        kind="subgaussian_sn", rows=tuple(rows),
        n_violations=sum(r["violation"] for r in rows),
        metadata={"n": n, "replicates": replicates, "seed": seed, "dist": dist.label},
    )


def _verify_nonuniform_tn(cfg: dict, params: BoundParams) -> InequalityReport:
    kernel: KernelSpec = cfg["kernel"]
    dist: DiscreteDistribution = cfg["dist"]
    if not kernel.centered:
        kernel = center(kernel, dist)
    dec = decompose(kernel, dist)
    mom = MomentSummary.from_decomposition(dec)
    mc_cfg = MCConfig(
        statistic="Tn", dist=dist, n=cfg["n"], replicates=cfg["replicates"],
        x_grid=np.asarray(cfg["x_grid"], dtype=float), seed=cfg["seed"], kernel=kernel,
        workers=cfg.get("workers", 1),
    )
    res = estimate_cdf(mc_cfg)
    form = cfg.get("form", "simple")
    n = cfg["n"]
    m = kernel.m
    rows = []
    fitted_c = 0.0
    corr = (
        math.exp(-params.c1 * n * mom.sigma ** 6 / mom.E_abs_h3 ** 2)
        if mom.E_abs_h3 > 0 else 0.0
    )
    for x, d, s in zip(res.x_grid, res.delta, res.se):
        bound = nonuniform_bound_Tn(float(x), n, m, mom, params, form=form)
        rows.append(_row(x, abs(d), s, bound))
        needed = (abs(d) - corr) * (1 + abs(x) ** 3) * math.sqrt(n) * mom.sigma ** 3 / mom.E_abs_h3
        fitted_c = max(fitted_c, needed)
    return InequalityReport(
        kind="nonuniform_Tn", rows=tuple(rows),
        n_violations=sum(r["violation"] for r in rows),
        metadata={**res.metadata, "form": form, "params": params.label},
        fitted={"C": fitted_c, "c1": params.c1, "label": "fitted, empirical"},
    )


def _verify_tstat(cfg: dict, params: BoundParams) -> InequalityReport:
    dist: DiscreteDistribution = cfg["dist"]
    mom = MomentSummary.from_distribution(dist)
    mc_cfg = MCConfig(
        statistic="TStudent", dist=dist, n=cfg["n"], replicates=cfg["replicates"],
        x_grid=np.asarray(cfg["x_grid"], dtype=float), seed=cfg["seed"],
        workers=cfg.get("workers", 1),
    )
    res = estimate_cdf(mc_cfg)
    rows = []
    for x, d, s in zip(res.x_grid, res.delta, res.se):
        bound = nonuniform_bound_tstat(float(x), cfg["n"], mom, params)
        rows.append(_row(x, abs(d), s, bound))
    return InequalityReport(
        kind="tstat_bound", rows=tuple(rows),
        n_violations=sum(r["violation"] for r in rows),
        metadata={**res.metadata, "params": params.label},
    )
