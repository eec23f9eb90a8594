"""Numerically robust evaluation of the normal Stein-equation solution.

The equation f'(w) - w f(w) = I(w <= x) - Phi(x) has a unique bounded solution
f_x, piecewise in w with a kink at w = x where the derivative takes the defined
value x f_x(x) + 1 - Phi(x).  The solution involves e^{w^2/2} times normal tail
areas, which overflows near w ~ 37 if evaluated literally; everything here is
routed through the scaled complementary error function erfcx so that all
branches stay finite over the whole real line.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc, erfcx

SQRT_2PI = math.sqrt(2.0 * math.pi)
_INV_SQRT2 = 1.0 / math.sqrt(2.0)


def normal_cdf(w):
    return 0.5 * erfc(-np.asarray(w, dtype=float) * _INV_SQRT2)


def normal_sf(w):
    """Survival function via erfc: no cancellation for large w."""
    return 0.5 * erfc(np.asarray(w, dtype=float) * _INV_SQRT2)


def normal_pdf(w):
    w = np.asarray(w, dtype=float)
    return np.exp(-0.5 * w * w) / SQRT_2PI


def _scaled_cdf(w):
    """e^{w^2/2} Phi(w), finite for w <= ~38; only ever called there."""
    return 0.5 * erfcx(-np.asarray(w, dtype=float) * _INV_SQRT2)


def _scaled_sf(w):
    """e^{w^2/2} Phi_bar(w), finite for all w."""
    return 0.5 * erfcx(np.asarray(w, dtype=float) * _INV_SQRT2)


def f_x(x: float, w):
    """The bounded Stein solution at threshold x, elementwise in w."""
    w_in = np.asarray(w, dtype=float)
    w = np.atleast_1d(w_in).ravel()
    out = np.empty_like(w)
    sf_x = float(normal_sf(x))
    cdf_x = float(normal_cdf(x))

    above = w > x
    if np.any(above):
        out[above] = SQRT_2PI * cdf_x * _scaled_sf(w[above])
    neg = (~above) & (w <= 0)
    if np.any(neg):
        out[neg] = SQRT_2PI * _scaled_cdf(w[neg]) * sf_x
    mid = (~above) & (w > 0)  # 0 < w <= x: split off the tail product to stay scaled
    if np.any(mid):
        wm = w[mid]
        lead = 0.5 * erfcx(x * _INV_SQRT2) * np.exp(0.5 * (wm * wm - x * x))
        out[mid] = SQRT_2PI * (lead - _scaled_sf(wm) * sf_x)
    out = out.reshape(w_in.shape)
    return out if out.ndim else float(out)


def f_x_prime(x: float, w):
    """Derivative of the solution; at w = x the defined value x f_x(x) + 1 - Phi(x)."""
    w = np.asarray(w, dtype=float)
    f = np.asarray(f_x(x, w))
    sf_x = float(normal_sf(x))
    cdf_x = float(normal_cdf(x))
    out = np.where(w <= x, w * f + sf_x, w * f - cdf_x)
    return out if out.ndim else float(out)


def g_x(x: float, w):
    """(w f_x(w))' = f_x(w) + w f_x'(w), with the same defined value at the kink."""
    w = np.asarray(w, dtype=float)
    f = np.asarray(f_x(x, w))
    sf_x = float(normal_sf(x))
    cdf_x = float(normal_cdf(x))
    out = np.where(w <= x, (1 + w * w) * f + w * sf_x, (1 + w * w) * f - w * cdf_x)
    return out if out.ndim else float(out)


def stein_residual(x: float, w):
    """f'(w) - w f(w) - (I(w <= x) - Phi(x)); zero up to rounding everywhere."""
    w = np.asarray(w, dtype=float)
    f = np.asarray(f_x(x, w))
    fp = np.asarray(f_x_prime(x, w))
    indicator = (w <= x).astype(float)
    out = fp - w * f - (indicator - float(normal_cdf(x)))
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class SteinSolution:
    """The solution bundle at a fixed threshold x."""

    x: float

    def f(self, w):
        return f_x(self.x, w)

    def f_prime(self, w):
        return f_x_prime(self.x, w)

    def g(self, w):
        return g_x(self.x, w)

    def residual(self, w):
        return stein_residual(self.x, w)


def property_report(
    x_grid=None, w_lo: float = -10.0, w_hi: float = 50.0, n_w: int = 4001
) -> dict:
    """Worst-case margins of the solution bounds over an (x, w) grid.

    Margins are (bound - value); every entry should come out non-negative
    (up to ~1e-12 rounding).  "residual_max" is the worst |Stein residual|.
    """
    if x_grid is None:
        x_grid = [-4.0, -1.0, 0.0, 0.5, 1.0, 1.5, 2.0, 4.0, 8.0, 20.0, 40.0]
    w = np.linspace(w_lo, w_hi, n_w)
    report = {
        "f_upper_margin": math.inf,       # 0.63 - f
        "f_positive_min": math.inf,       # min f (must be > 0)
        "fprime_margin": math.inf,        # 1 - |f'|
        "g_min": math.inf,                # min g (must be >= 0)
        "g_small_x_margin": math.inf,     # 2.3 - g for x in [0, 1]
        "residual_max": 0.0,
        "nonuniform_margin": math.inf,    # worst margin over the x >= 1 bounds
    }
    for x in x_grid:
        f = np.asarray(f_x(x, w))
        fp = np.asarray(f_x_prime(x, w))
        g = np.asarray(g_x(x, w))
        res = np.asarray(stein_residual(x, w))
        report["f_upper_margin"] = min(report["f_upper_margin"], float(np.min(0.63 - f)))
        report["f_positive_min"] = min(report["f_positive_min"], float(np.min(f)))
        report["fprime_margin"] = min(report["fprime_margin"], float(np.min(1.0 - np.abs(fp))))
        report["g_min"] = min(report["g_min"], float(np.min(g)))
        report["residual_max"] = max(report["residual_max"], float(np.max(np.abs(res))))
        if 0.0 <= x <= 1.0:
            report["g_small_x_margin"] = min(
                report["g_small_x_margin"], float(np.min(2.3 - g))
            )
        if x >= 1.0:
            report["nonuniform_margin"] = min(
                report["nonuniform_margin"], _nonuniform_margin(x, w, f, fp, g)
            )
    return report


def _nonuniform_margin(x, w, f, fp, g) -> float:
    """Smallest slack over the piecewise bounds that apply when x >= 1."""
    margins = []
    left = w <= x - 1
    mid = (w > x - 1) & (w <= x)
    right = w > x
    if np.any(left):
        margins.append(np.min(1.7 * math.exp(-x) - f[left]))
        margins.append(np.min(math.exp(0.5 - x) - np.abs(fp[left])))
    if np.any(mid):
        margins.append(np.min(1.0 / x - f[mid]))
        margins.append(np.min(1.0 - np.abs(fp[mid])))
    if np.any(right):
        margins.append(np.min(1.0 / w[right] - f[right]))
        margins.append(np.min(1.0 / (1 + x * x) - np.abs(fp[right])))
        margins.append(np.min(1.0 / w[right] - g[right]))
    nonpos = w <= 0
    if np.any(nonpos):
        margins.append(np.min(1.6 * float(normal_sf(x)) - g[nonpos]))
    margins.append(x * math.exp(0.5 - x) - float(g_x(x, x - 1.0)))
    margins.append(x + 2.0 - float(g_x(x, x)))
    inside = (w >= 0) & (w <= x)
    if np.count_nonzero(inside) > 2:
        margins.append(float(np.min(np.diff(np.asarray(g)[inside]))))
    return float(min(margins))
