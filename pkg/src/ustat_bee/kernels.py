"""Symmetric kernels of degree m and their exact projections on a finite support.

``decompose`` tabulates, by nested summation over the product support, the
conditional-expectation ladder h_k(x_1..x_k) = E[h | X_1=x_1..X_k=x_k], the
first-order function g = h_1, the degenerate remainders
hbar_k = h_k - sum_i g(x_i), the canonical functions g_k, the variance
sigma^2 = var[g(X_1)], and the L_p norms of every level.  These tables are the
oracle against which all the algebraic identities in the rest of the library
are checked, so they are computed eagerly and exactly (up to rounding).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import partial, reduce
from typing import Callable, Sequence

import numpy as np

from .distributions import DiscreteDistribution

ENUM_GUARD = 10**7  # max tabulation size |support|^m
ZERO_FUNCTION_TOL = 1e-10  # max-abs threshold for "identically zero" tables
CENTER_TOL = 1e-12


@dataclass(frozen=True)
class KernelSpec:
    """A symmetric kernel of degree ``m`` with evaluation metadata.

    ``evaluate(*args)`` takes ``m`` points.  ``vectorized`` kernels accept
    numpy arrays and broadcast elementwise; ``pairwise`` kernels take points
    that are pairs (arrays with a trailing axis of length 2).  ``kernel_id``
    names the compiled fast-path implementation, if one exists.
    """

    m: int
    evaluate: Callable = field(repr=False)
    name: str = "custom"
    centered: bool = False
    vectorized: bool = False
    pairwise: bool = False
    kernel_id: int = 0

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("kernel degree must be >= 1")

    def __call__(self, *args):
        return self.evaluate(*args)


# --- built-in kernels (module-level functions so kernels pickle) ---

KERNEL_ID_SUM = 1
KERNEL_ID_VARIANCE = 2
KERNEL_ID_GINI = 3
KERNEL_ID_WILCOXON = 4


def _sum_eval(*args):
    return reduce(lambda a, b: a + b, args)


def _variance_eval(x1, x2):
    return 0.5 * (x1 - x2) ** 2


def _gini_eval(x1, x2):
    return abs(x1 - x2)


def _wilcoxon_eval(x1, x2):
    return np.asarray(x1 + x2 > 0, dtype=float) + 0.0


def _kendall_eval(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return np.sign((a[..., 0] - b[..., 0]) * (a[..., 1] - b[..., 1])) + 0.0


def builtin_kernel(name: str, m: int | None = None) -> KernelSpec:
    """Standard kernels: sum_m (degree parameter m), variance, gini, kendall, wilcoxon."""
    if name == "sum_m":
        deg = 1 if m is None else int(m)
        if deg < 1:
            raise ValueError("sum_m needs degree m >= 1")
        return KernelSpec(deg, _sum_eval, name=f"sum_{deg}", vectorized=True,
                          kernel_id=KERNEL_ID_SUM)
    if m is not None and m != 2:
        raise ValueError(f"kernel {name!r} has fixed degree 2")
    if name == "variance":
        return KernelSpec(2, _variance_eval, name="variance", vectorized=True,
                          kernel_id=KERNEL_ID_VARIANCE)
    if name == "gini":
        return KernelSpec(2, _gini_eval, name="gini", vectorized=True,
                          kernel_id=KERNEL_ID_GINI)
    if name == "wilcoxon":
        return KernelSpec(2, _wilcoxon_eval, name="wilcoxon", vectorized=True,
                          kernel_id=KERNEL_ID_WILCOXON)
    if name == "kendall":
        return KernelSpec(2, _kendall_eval, name="kendall", vectorized=True,
                          pairwise=True)
    raise ValueError(f"unknown kernel {name!r}")


def _poly_eval(*args, terms=(), m=1):
    # symmetrized polynomial: average the coefficient table over argument permutations
    args = [np.asarray(a, dtype=float) for a in args]
    total = 0.0
    n_perm = 0
    for perm in itertools.permutations(range(m)):
        n_perm += 1
        for powers, coef in terms:
            term = coef
            for i, e in enumerate(powers):
                if e:
                    term = term * args[perm[i]] ** e
            total = total + term
    return total / n_perm


def polynomial_kernel(m: int, terms: Sequence[tuple[Sequence[int], float]],
                      name: str = "poly") -> KernelSpec:
    """Kernel from a multi-index -> coefficient table, symmetrized by permutation averaging.

    Degree is capped at 3 (the exact-oracle path does not go further).
    """
    if not (1 <= m <= 3):
        raise ValueError("polynomial kernels support degree 1..3")
    frozen = tuple((tuple(int(e) for e in powers), float(coef)) for powers, coef in terms)
    for powers, _ in frozen:
        if len(powers) != m or any(e < 0 for e in powers):
            raise ValueError("each multi-index needs m non-negative exponents")
    return KernelSpec(m, partial(_poly_eval, terms=frozen, m=m), name=name,
                      vectorized=True)


def product_kernel(m: int) -> KernelSpec:
    """x_1 * ... * x_m, a convenient non-additive test kernel."""
    return polynomial_kernel(m, [((1,) * m, 1.0)], name=f"product_{m}")


def kernel_from_json(obj: dict) -> KernelSpec:
    """Parse {"name": ..., "m": ...} or {"polynomial": {"m":..., "terms":[...]}}."""
    if "polynomial" in obj:
        spec = obj["polynomial"]
        terms = [(t["powers"], t["coef"]) for t in spec["terms"]]
        return polynomial_kernel(int(spec["m"]), terms, name=spec.get("name", "poly"))
    if "name" in obj:
        return builtin_kernel(obj["name"], obj.get("m"))
    raise ValueError("kernel literal needs 'name' or 'polynomial'")


def _shifted_eval(*args, base=None, shift=0.0):
    return base(*args) - shift


def _scaled_eval(*args, base=None, factor=1.0):
    return base(*args) * factor


def scale_kernel(kernel: KernelSpec, factor: float) -> KernelSpec:
    return KernelSpec(kernel.m, partial(_scaled_eval, base=kernel.evaluate, factor=factor),
                      name=kernel.name, centered=kernel.centered,
                      vectorized=kernel.vectorized, pairwise=kernel.pairwise)


# --- tabulation on the product support ---


def _tabulate(kernel: KernelSpec, dist: DiscreteDistribution) -> np.ndarray:
    """Full table of h on support^m, shape (s,)*m."""
    support = dist.support_array()
    s = len(dist.atoms)
    if s ** kernel.m > ENUM_GUARD:
        raise ValueError(
            f"tabulation needs {s}^{kernel.m} evaluations, over the {ENUM_GUARD} guard"
        )
    if kernel.vectorized and not kernel.pairwise:
        grids = np.meshgrid(*([support] * kernel.m), indexing="ij")
        return np.asarray(kernel.evaluate(*grids), dtype=float)
    table = np.empty((s,) * kernel.m, dtype=float)
    points = dist.values
    for idx in itertools.product(range(s), repeat=kernel.m):
        table[idx] = kernel.evaluate(*(points[i] for i in idx))
    return table


def kernel_mean(kernel: KernelSpec, dist: DiscreteDistribution) -> float:
    """Exact E[h(X_1, ..., X_m)] under dist^m."""
    table = _tabulate(kernel, dist)
    probs = dist.prob_array()
    for _ in range(kernel.m):
        table = table @ probs
    return float(table)


def center(kernel: KernelSpec, dist: DiscreteDistribution) -> KernelSpec:
    """Subtract the exact mean under dist^m; idempotent up to rounding."""
    shift = kernel_mean(kernel, dist)
    return KernelSpec(kernel.m, partial(_shifted_eval, base=kernel.evaluate, shift=shift),
                      name=kernel.name, centered=True,
                      vectorized=kernel.vectorized, pairwise=kernel.pairwise)


def _broadcast_to_axes(table: np.ndarray, axes: tuple[int, ...], k: int) -> np.ndarray:
    """View a j-dim table as a k-dim one living on the given sorted axes."""
    shape = [1] * k
    for pos, ax in enumerate(axes):
        shape[ax] = table.shape[pos]
    # tables are symmetric, so which axis receives which original dim is immaterial
    return table.reshape(shape)


@dataclass(frozen=True)
class HoeffdingDecomposition:
    """Exact projection tables of a centered kernel against a finite-support law."""

    kernel: KernelSpec
    dist: DiscreteDistribution
    h_tables: tuple            # h_k on support^k, k = 1..m (index k-1)
    hbar_tables: tuple         # h_k - sum_i g(x_i)
    canonical_tables: tuple    # g_k, the fully degenerate ladder
    sigma_sq: float
    degeneracy_order: int
    norms: dict                # {(k, p): ||h_k||_p for p in {2, 3}}

    @property
    def m(self) -> int:
        return self.kernel.m

    @property
    def g_table(self) -> np.ndarray:
        return self.h_tables[0]

    def g(self, x) -> float:
        """g at a support value (exact lookup)."""
        values = self.dist.values
        try:
            return float(self.g_table[values.index(x)])
        except ValueError:
            raise ValueError(f"{x!r} is not a support point") from None

    def g_of_data(self, data: np.ndarray) -> np.ndarray:
        """Vectorized g lookup for data drawn from the support."""
        support = self.dist.support_array()
        if support.ndim == 1:
            idx = np.searchsorted(np.sort(support), data)
            order = np.argsort(support)
            matched = order[np.clip(idx, 0, len(support) - 1)]
            if not np.allclose(support[matched], data, rtol=0, atol=1e-9):
                raise ValueError("data contains values outside the support")
            return self.g_table[matched]
        # pair support: match rows
        out = np.empty(data.shape[:-1], dtype=float)
        flat = data.reshape(-1, data.shape[-1])
        res = np.empty(len(flat))
        for j, row in enumerate(flat):
            hits = np.where(np.all(np.isclose(support, row, atol=1e-9), axis=1))[0]
            if len(hits) != 1:
                raise ValueError("data contains values outside the support")
            res[j] = self.g_table[hits[0]]
        return res.reshape(out.shape)

    def moment_h(self, p: float) -> float:
        """E[|h|^p] for the full kernel."""
        return self.moment_level(self.m, p)

    def moment_level(self, k: int, p: float) -> float:
        probs = self.dist.prob_array()
        table = np.abs(self.h_tables[k - 1]) ** p
        for _ in range(k):
            table = table @ probs
        return float(table)

    def canonical_moment(self, k: int, p: float) -> float:
        """E[|g_k|^p] for the canonical ladder."""
        probs = self.dist.prob_array()
        table = np.abs(self.canonical_tables[k - 1]) ** p
        for _ in range(k):
            table = table @ probs
        return float(table)


def decompose(kernel: KernelSpec, dist: DiscreteDistribution) -> HoeffdingDecomposition:
    """Tabulate the whole projection ladder of a centered kernel.

    Raises if the kernel is not flagged centered, if its mean is not zero
    within tolerance, or if the product support is over the enumeration guard.
    """
    if not kernel.centered:
        raise ValueError("decompose needs a centered kernel; call center() first")
    m = kernel.m
    probs = dist.prob_array()
    table = _tabulate(kernel, dist)

    h_tables = [None] * m
    h_tables[m - 1] = table
    for k in range(m - 1, 0, -1):
        h_tables[k - 1] = h_tables[k] @ probs
    mean = float(h_tables[0] @ probs)
    if abs(mean) > 1e-9:
        raise ValueError(f"kernel claims centered but has mean {mean:g}")

    g = h_tables[0]
    hbar_tables = []
    for k in range(1, m + 1):
        hk = h_tables[k - 1]
        acc = hk.copy()
        for ax in range(k):
            acc = acc - _broadcast_to_axes(g, (ax,), k)
        hbar_tables.append(acc)

    canonical = [g]
    for k in range(2, m + 1):
        acc = h_tables[k - 1].copy()
        for j in range(1, k):
            for axes in itertools.combinations(range(k), j):
                acc = acc - _broadcast_to_axes(canonical[j - 1], axes, k)
        canonical.append(acc)

    sigma_sq = float((g ** 2) @ probs - (g @ probs) ** 2)
    r = m
    for k in range(1, m + 1):
        if np.max(np.abs(canonical[k - 1])) > ZERO_FUNCTION_TOL:
            r = k
            break

    norms = {}
    for k in range(1, m + 1):
        for p in (2, 3):
            t = np.abs(h_tables[k - 1]) ** p
            for _ in range(k):
                t = t @ probs
            norms[(k, p)] = float(t) ** (1.0 / p)

    return HoeffdingDecomposition(
        kernel=kernel, dist=dist,
        h_tables=tuple(h_tables), hbar_tables=tuple(hbar_tables),
        canonical_tables=tuple(canonical),
        sigma_sq=max(sigma_sq, 0.0), degeneracy_order=r, norms=norms,
    )


def sigma_of_kernel(decomp: HoeffdingDecomposition) -> float:
    return math.sqrt(decomp.sigma_sq)


def is_nondegenerate(decomp: HoeffdingDecomposition, tol: float = 1e-12) -> bool:
    return decomp.sigma_sq > tol


def spot_check_symmetry(kernel: KernelSpec, points: Sequence, rng: np.random.Generator,
                        n_perms: int = 100, tol: float = 1e-10) -> float:
    """Max deviation of h under random argument permutations (should be ~0)."""
    base = float(kernel.evaluate(*points))
    worst = 0.0
    for _ in range(n_perms):
        perm = rng.permutation(kernel.m)
        worst = max(worst, abs(float(kernel.evaluate(*(points[i] for i in perm))) - base))
    return worst
