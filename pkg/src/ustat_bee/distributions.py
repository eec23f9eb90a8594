"""Finite-support probability laws with exact moments, plus seeded sampling.

Every expectation that the library verifies exactly goes through
:func:`moment` on a :class:`DiscreteDistribution`; continuous laws exist only
behind the sampling interface (``ContinuousLaw``) and are rejected by the
exact-moment oracle.

Sampling is reproducible bit-for-bit from ``(distribution, n, replicates,
seed)``: replicates are organized into fixed-size blocks of ``BLOCK_SIZE``
rows and each block draws from its own counter-based (Philox) stream keyed by
``(seed, block index)``, so results do not depend on how work is scheduled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterator, Sequence

import numpy as np

PROB_TOL = 1e-12
BLOCK_SIZE = 4096

Atom = tuple  # (value, probability); value is a float or a tuple of floats


@dataclass(frozen=True)
class DiscreteDistribution:
    """A finite-support law given by ``atoms = [(value, probability), ...]``.

    Probabilities must sum to 1 within ``PROB_TOL`` (no silent renormalization:
    a bad construction is an error), values must be distinct, and there must
    be at least one atom.  Values are scalars, or same-length tuples for laws
    on pairs (used by rank kernels).
    """

    atoms: tuple
    label: str = ""

    def __post_init__(self):
        if len(self.atoms) == 0:
            raise ValueError("distribution needs at least one atom")
        values = [a[0] for a in self.atoms]
        probs = [float(a[1]) for a in self.atoms]
        if any(not (0.0 < p <= 1.0) for p in probs):
            raise ValueError("atom probabilities must lie in (0, 1]")
        total = math.fsum(probs)
        if abs(total - 1.0) > PROB_TOL:
            raise ValueError(
                f"atom probabilities sum to {total!r}, not 1 within {PROB_TOL}"
            )
        if len(set(values)) != len(values):
            raise ValueError("atom values must be distinct")
        dims = {len(v) if isinstance(v, tuple) else 0 for v in values}
        if len(dims) != 1:
            raise ValueError("atom values must all be scalars or all tuples")
        object.__setattr__(
            self, "atoms", tuple((v, float(p)) for v, p in zip(values, probs))
        )

    @property
    def values(self) -> tuple:
        return tuple(a[0] for a in self.atoms)

    @property
    def probabilities(self) -> tuple:
        return tuple(a[1] for a in self.atoms)

    @property
    def is_pairs(self) -> bool:
        return isinstance(self.atoms[0][0], tuple)

    def support_array(self) -> np.ndarray:
        """Support as a float array, shape (s,) or (s, d) for tuple atoms."""
        return np.asarray(self.values, dtype=float)

    def prob_array(self) -> np.ndarray:
        return np.asarray(self.probabilities, dtype=float)


@dataclass(frozen=True)
class NovakParams:
    """Parameter of the two-atom binary law used in the counterexample."""

    p: float

    def __post_init__(self):
        if not (0.0 < self.p < 1.0):
            raise ValueError(f"p must lie in (0, 1), got {self.p}")


@dataclass(frozen=True)
class ContinuousLaw:
    """Sampler-only law: supports sample()/iter_sample_blocks but no exact moments."""

    name: str
    dims: int = 0  # 0 = scalar points, 2 = pair points
    _sampler: Callable[[np.random.Generator, tuple], np.ndarray] = field(repr=False, default=None)

    @property
    def is_pairs(self) -> bool:
        return self.dims == 2

    @property
    def label(self) -> str:
        return self.name


def uniform_continuous() -> ContinuousLaw:
    """Uniform(0, 1) scalar points (MC-only; no exact oracle)."""
    return ContinuousLaw("uniform", 0, lambda rng, shape: rng.random(shape))


def uniform_pairs() -> ContinuousLaw:
    """Independent Uniform(0, 1)^2 pair points (MC-only; no exact oracle)."""
    return ContinuousLaw("uniform_pairs", 2, lambda rng, shape: rng.random(shape + (2,)))


Law = DiscreteDistribution | ContinuousLaw


@dataclass(frozen=True)
class SampleBatch:
    """I.i.d. draws: ``values`` has shape (replicates, n) or (replicates, n, 2)."""

    values: np.ndarray
    seed: int
    n: int
    label: str = ""

    def __post_init__(self):
        if self.values.shape[1] != self.n:
            raise ValueError("row length must equal n")

    @property
    def replicates(self) -> int:
        return self.values.shape[0]


def novak_distribution(params: NovakParams | float) -> DiscreteDistribution:
    """Two-atom law with P(X = sqrt(p/(1-p))) = 1-p and P(X = -sqrt((1-p)/p)) = p.

    It has mean 0, unit variance, and blows up the third-moment ratio as
    p -> 0, which is what breaks the uncorrected nonuniform bound form.
    """
    if not isinstance(params, NovakParams):
        params = NovakParams(float(params))
    p = params.p
    pos = math.sqrt(p / (1.0 - p))
    neg = -math.sqrt((1.0 - p) / p)
    return DiscreteDistribution(
        atoms=((pos, 1.0 - p), (neg, p)), label=f"novak(p={p:g})"
    )


def rademacher() -> DiscreteDistribution:
    return DiscreteDistribution(atoms=((1.0, 0.5), (-1.0, 0.5)), label="rademacher")


def uniform_on(values: Sequence[float], label: str = "") -> DiscreteDistribution:
    vals = tuple(values)
    p = 1.0 / len(vals)
    return DiscreteDistribution(
        atoms=tuple((v, p) for v in vals), label=label or f"uniform{set(vals)}"
    )


def moment(dist: DiscreteDistribution, f: Callable) -> float:
    """Exact expectation sum(p_i * f(v_i)); fsum keeps it at rounding accuracy."""
    if not isinstance(dist, DiscreteDistribution):
        raise TypeError(f"exact moments need a finite-support law, got {type(dist).__name__}")
    terms = []
    for v, p in dist.atoms:
        fv = float(f(v))
        if not math.isfinite(fv):
            raise ValueError(f"f is not finite at atom {v!r}")
        terms.append(p * fv)
    return math.fsum(terms)


def _block_rng(seed: int, block: int) -> np.random.Generator:
    # Philox key = (seed, block): independent counter-based streams.
    return np.random.Generator(
        np.random.Philox(key=np.array([seed, block], dtype=np.uint64))
    )


def _draw(dist: Law, rng: np.random.Generator, rows: int, n: int) -> np.ndarray:
    if isinstance(dist, ContinuousLaw):
        return dist._sampler(rng, (rows, n))
    cum = np.cumsum(dist.prob_array())
    cum[-1] = 1.0
    u = rng.random((rows, n))
    idx = np.searchsorted(cum, u, side="right")
    support = dist.support_array()
    return support[idx]


def sample_block(dist: Law, n: int, seed: int, block: int, rows: int = BLOCK_SIZE) -> np.ndarray:
    """Rows ``[block * BLOCK_SIZE, block * BLOCK_SIZE + rows)`` of the batch.

    A block's draws depend only on (distribution, n, seed, block), which is
    what makes worker partitioning irrelevant to the result.
    """
    if rows > BLOCK_SIZE:
        raise ValueError(f"a block holds at most {BLOCK_SIZE} rows")
    rng = _block_rng(seed, block)
    return _draw(dist, rng, BLOCK_SIZE, n)[:rows]


def iter_sample_blocks(
    dist: Law, n: int, replicates: int, seed: int
) -> Iterator[tuple[int, np.ndarray]]:
    """Yield (start_replicate, values_block); memory stays O(BLOCK_SIZE * n)."""
    if n < 1 or replicates < 1:
        raise ValueError("n and replicates must be >= 1")
    n_blocks = -(-replicates // BLOCK_SIZE)
    for b in range(n_blocks):
        start = b * BLOCK_SIZE
        rows = min(BLOCK_SIZE, replicates - start)
        yield start, sample_block(dist, n, seed, b, rows)


def sample(dist: Law, n: int, replicates: int, seed: int) -> SampleBatch:
    """Materialize the full (replicates x n) batch; see iter_sample_blocks for streaming."""
    parts = [block for _, block in iter_sample_blocks(dist, n, replicates, seed)]
    return SampleBatch(
        values=np.concatenate(parts, axis=0), seed=seed, n=n, label=dist.label
    )


def law_from_json(obj: dict) -> Law:
    """Parse a distribution literal.

    Accepted forms: {"atoms": [[value, prob], ...]}, {"novak": {"p": 0.01}},
    {"uniform": {}} and {"uniform_pairs": {}} (sampler-only continuous laws).
    """
    if not isinstance(obj, dict) or len(obj) != 1:
        raise ValueError("distribution literal must be a single-key object")
    key, payload = next(iter(obj.items()))
    if key == "atoms":
        atoms = tuple(
            (tuple(map(float, v)) if isinstance(v, (list, tuple)) else float(v), float(p))
            for v, p in payload
        )
        return DiscreteDistribution(atoms=atoms, label="atoms")
    if key == "novak":
        return novak_distribution(NovakParams(float(payload["p"])))
    if key == "uniform":
        return uniform_continuous()
    if key == "uniform_pairs":
        return uniform_pairs()
    raise ValueError(f"unknown distribution literal {key!r}")
