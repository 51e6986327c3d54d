"""Power-law fitting and finite-size data collapse."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

import numpy as np

from .errors import InsufficientPoints, NonPositiveData, NoOverlap

__all__ = [
    "PowerLawFit",
    "CollapseResult",
    "fit_power_law",
    "finite_size_collapse",
]


@dataclass(frozen=True)
class PowerLawFit:
    """Least-squares fit of y = prefactor * x^exponent on log-log axes."""

    exponent: float
    exponent_stderr: float
    prefactor: float
    prefactor_stderr: float
    r_squared: float
    window: tuple[float, float]
    n_points: int


def fit_power_law(
    x: Sequence[float],
    y: Sequence[float],
    window: Optional[tuple[float, float]] = None,
) -> PowerLawFit:
    """Fit log y against log x inside ``window`` (inclusive bounds on x).

    Standard errors come from the regression covariance; at least 8 points
    must fall inside the window and all of them must be strictly positive.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if window is None:
        window = (float(np.min(x)), float(np.max(x)))
    lo, hi = float(window[0]), float(window[1])
    mask = (x >= lo) & (x <= hi) & np.isfinite(x) & np.isfinite(y)
    xs, ys = x[mask], y[mask]
    if xs.size < 8:
        raise InsufficientPoints(f"{xs.size} points inside window, need >= 8")
    if np.any(xs <= 0.0) or np.any(ys <= 0.0):
        raise NonPositiveData("log-log fit requires strictly positive data")
    lx, ly = np.log(xs), np.log(ys)
    (slope, intercept), cov = np.polyfit(lx, ly, 1, cov=True)
    resid = ly - (slope * lx + intercept)
    ss_res = float(np.sum(resid**2))
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0.0 else 1.0
    prefactor = float(np.exp(intercept))
    return PowerLawFit(
        exponent=float(slope),
        exponent_stderr=float(np.sqrt(cov[0, 0])),
        prefactor=prefactor,
        prefactor_stderr=prefactor * float(np.sqrt(cov[1, 1])),
        r_squared=r2,
        window=(lo, hi),
        n_points=int(xs.size),
    )


@dataclass(frozen=True)
class CollapseResult:
    """Optimal finite-size collapse parameters and the rescaled curves.

    ``curves`` maps each size N to its rescaled series
    (N * d^nu_star, A_N * d^alpha_A). ``peak_exponent_fit`` is the companion
    log-log fit of the per-size peak values against N (expected slope
    alpha_A / nu_star).
    """

    alpha_A: float
    nu_star: float
    collapse_quality: float
    curves: dict[float, tuple[np.ndarray, np.ndarray]]
    peak_exponent_fit: Optional[PowerLawFit]


def _collapse_spread(
    data: Sequence[tuple[float, np.ndarray, np.ndarray]],
    alpha: float,
    nu: float,
    n_grid: int = 60,
) -> float:
    """Mean squared log-deviation from the pointwise median of rescaled curves."""
    logx, logy = [], []
    for size, d, a in data:
        lx = np.log(size) + nu * np.log(d)
        ly = np.log(a) + alpha * np.log(d)
        order = np.argsort(lx)
        logx.append(lx[order])
        logy.append(ly[order])
    lo = max(lx.min() for lx in logx)
    hi = min(lx.max() for lx in logx)
    if hi <= lo:
        return np.inf
    grid = np.linspace(lo, hi, n_grid)
    stack = np.array([np.interp(grid, lx, ly) for lx, ly in zip(logx, logy)])
    med = np.median(stack, axis=0)
    return float(np.mean((stack - med) ** 2))


def finite_size_collapse(
    curves: Mapping[float, tuple[Sequence[float], Sequence[float]]],
    alpha_grid: Sequence[float],
    nu_grid: Sequence[float],
    refine_rounds: int = 2,
) -> CollapseResult:
    """Grid-search the collapse of A_N(d) curves onto a single scaling function.

    Each curve is rescaled as (N d^nu, A_N d^alpha) and the spread around the
    pointwise median (in log space, on the common abscissa overlap) is
    minimized, first on the supplied grids, then on locally refined grids
    around the optimum. Needs at least 3 sizes and overlapping rescaled
    ranges; raises NoOverlap otherwise.
    """
    if len(curves) < 3:
        raise NoOverlap(f"need >= 3 sizes for a collapse, got {len(curves)}")
    data = []
    for size, (d, a) in sorted(curves.items()):
        d = np.asarray(d, dtype=float)
        a = np.asarray(a, dtype=float)
        keep = (d > 0.0) & (a > 0.0) & np.isfinite(d) & np.isfinite(a)
        if keep.sum() < 3:
            raise NoOverlap(f"size {size:g} has fewer than 3 usable points")
        data.append((float(size), d[keep], a[keep]))

    alphas = np.asarray(alpha_grid, dtype=float)
    nus = np.asarray(nu_grid, dtype=float)
    best = (np.inf, float(alphas[0]), float(nus[0]))
    for _round in range(refine_rounds + 1):
        for al in alphas:
            for nu in nus:
                q = _collapse_spread(data, float(al), float(nu))
                if q < best[0]:
                    best = (q, float(al), float(nu))
        if not np.isfinite(best[0]):
            raise NoOverlap("rescaled curves share no common abscissa range")
        da = max((alphas.max() - alphas.min()) / max(len(alphas) - 1, 1), 1e-3)
        dn = max((nus.max() - nus.min()) / max(len(nus) - 1, 1), 1e-3)
        alphas = np.linspace(best[1] - da, best[1] + da, 11)
        nus = np.linspace(best[2] - dn, best[2] + dn, 11)

    quality, alpha_opt, nu_opt = best
    rescaled = {}
    sizes, peaks = [], []
    for size, d, a in data:
        rescaled[size] = (size * d**nu_opt, a * d**alpha_opt)
        sizes.append(size)
        peaks.append(float(a.max()))
    # few-point companion fit: stderr is only defined with > 3 points
    lx, ly = np.log(sizes), np.log(peaks)
    if len(sizes) > 3:
        (slope, intercept), cov = np.polyfit(lx, ly, 1, cov=True)
        err = (float(np.sqrt(cov[0, 0])), float(np.sqrt(cov[1, 1])))
    else:
        slope, intercept = np.polyfit(lx, ly, 1)
        err = (float("nan"), float("nan"))
    resid = ly - (slope * lx + intercept)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    peak_fit = PowerLawFit(
        exponent=float(slope),
        exponent_stderr=err[0],
        prefactor=float(np.exp(intercept)),
        prefactor_stderr=float(np.exp(intercept)) * err[1],
        r_squared=1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0,
        window=(float(min(sizes)), float(max(sizes))),
        n_points=len(sizes),
    )
    return CollapseResult(
        alpha_A=alpha_opt,
        nu_star=nu_opt,
        collapse_quality=quality,
        curves=rescaled,
        peak_exponent_fit=peak_fit,
    )
