"""Backend selection for the jackknife inner loop.

The compiled core is used when it imported successfully, the kernel carries a
supported ``kernel_id``, and the data are scalar float rows.  Everything else
(custom kernels, pair-valued points, missing extension) goes through the pure
core.  Set ``USTAT_BEE_FORCE_PURE=1`` to disable the compiled path, e.g. for
the backend benchmark or debugging.
"""

from __future__ import annotations

import os

import numpy as np

from . import _jackknife_py

_compiled = None
if not os.environ.get("USTAT_BEE_FORCE_PURE"):
    try:
        from . import _jackknife_cy as _compiled
    except ImportError:
        _compiled = None


def compiled_available() -> bool:
    return _compiled is not None


def active_backend(kernel=None) -> str:
    if _compiled is None:
        return "pure"
    if kernel is not None and not _compiled_supports(kernel):
        return "pure"
    return "compiled"


def _compiled_supports(kernel) -> bool:
    if kernel.kernel_id not in getattr(_compiled, "SUPPORTED_IDS", ()):
        return False
    if kernel.m != 2 and kernel.kernel_id not in getattr(_compiled, "GENERIC_DEGREE_IDS", ()):
        return False
    return not kernel.pairwise


def jackknife_batch(data: np.ndarray, kernel, force_pure: bool = False):
    """Exact (U, Q) over a replicate batch, dispatching to the fastest backend."""
    if (
        not force_pure
        and _compiled is not None
        and data.ndim == 2
        and _compiled_supports(kernel)
    ):
        return _compiled.jackknife_batch(data, kernel.m, kernel.kernel_id)
    return _jackknife_py.jackknife_batch(data, kernel)


def jackknife_batch_sampled(data: np.ndarray, kernel, n_subsets: int, rng):
    return _jackknife_py.jackknife_batch_sampled(data, kernel, n_subsets, rng)
