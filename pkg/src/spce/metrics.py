"""Error and distribution-distance metrics used throughout validation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.signal
import scipy.stats


def rrmse(truth, pred) -> float:
    """Relative RMSE: sqrt(sum((t - p)^2) / sum(t^2)).

    Raises:
        ValueError: mismatched lengths or all-zero truth.
    """
    t = np.asarray(truth, dtype=float).ravel()
    p = np.asarray(pred, dtype=float).ravel()
    if t.shape != p.shape:
        raise ValueError(f"length mismatch: {t.shape} vs {p.shape}")
    denom = float(t @ t)
    if denom == 0.0:
        raise ValueError("truth is identically zero; rRMSE is undefined")
    diff = t - p
    return float(np.sqrt((diff @ diff) / denom))


def wasserstein1(samples_a, samples_b) -> float:
    """First Wasserstein distance between two empirical distributions.

    Equal sizes: mean absolute difference of the sorted samples.  Unequal
    sizes: exact quantile-function integral (scipy implementation).
    """
    a = np.asarray(samples_a, dtype=float).ravel()
    b = np.asarray(samples_b, dtype=float).ravel()
    if a.size == 0 or b.size == 0:
        raise ValueError("wasserstein1 requires nonempty samples")
    if a.size == b.size:
        return float(np.mean(np.abs(np.sort(a) - np.sort(b))))
    return float(scipy.stats.wasserstein_distance(a, b))


def ks_statistic(samples, cdf="uniform") -> float:
    """Kolmogorov-Smirnov distance between samples and a reference CDF.

    Args:
        samples: 1-D sample array.
        cdf: "uniform" for Uniform(0,1), or a callable CDF.
    """
    x = np.sort(np.asarray(samples, dtype=float).ravel())
    n = x.size
    if n == 0:
        raise ValueError("ks_statistic requires nonempty samples")
    if cdf == "uniform":
        f = np.clip(x, 0.0, 1.0)
    else:
        f = np.asarray(cdf(x), dtype=float)
    levels = np.arange(1, n + 1) / n
    return float(max(np.max(levels - f), np.max(f - (levels - 1.0 / n))))


@dataclass
class MomentParityReport:
    """Per-parameter-point moment comparison of two replica sources."""

    truth_means: np.ndarray
    truth_sds: np.ndarray
    surrogate_means: np.ndarray
    surrogate_sds: np.ndarray
    mean_rrmse: float
    sd_rrmse: float


def moment_parity(truth_ensembles, surrogate_ensembles) -> MomentParityReport:
    """Compare per-parameter-point sample means and sds of two sources.

    Args:
        truth_ensembles: sequence of 1-D replica arrays, one per parameter
            point.
        surrogate_ensembles: matching sequence from the surrogate.

    Returns:
        MomentParityReport with per-point moments and combined rRMSEs.
    """
    if len(truth_ensembles) != len(surrogate_ensembles):
        raise ValueError(
            f"parameter sets differ: {len(truth_ensembles)} truth vs "
            f"{len(surrogate_ensembles)} surrogate ensembles"
        )
    if len(truth_ensembles) == 0:
        raise ValueError("moment_parity requires at least one ensemble")

    def stats(ensembles):
        means = np.array([np.mean(e) for e in ensembles])
        sds = np.array([np.std(e, ddof=1) if len(e) > 1 else 0.0 for e in ensembles])
        return means, sds

    tm, ts = stats(truth_ensembles)
    sm, ss = stats(surrogate_ensembles)
    sd_err = rrmse(ts, ss) if float(ts @ ts) > 0 else (0.0 if np.allclose(ss, 0) else np.inf)
    return MomentParityReport(
        truth_means=tm, truth_sds=ts, surrogate_means=sm, surrogate_sds=ss,
        mean_rrmse=rrmse(tm, sm), sd_rrmse=sd_err,
    )


def _find_peaks(values, rel_prominence, rel_height, min_spacing_points):
    top = values.max()
    if values.size < 3 or top <= 0:
        return np.empty(0, dtype=int)
    peaks, _ = scipy.signal.find_peaks(
        values,
        prominence=rel_prominence * top,
        height=rel_height * top,
        distance=max(1, int(min_spacing_points)),
    )
    return peaks


def _spacing_points(grid, values, min_separation):
    """Convert a y-distance into grid points; 0 disables the filter."""
    if min_separation <= 0 or grid is None:
        return 1
    step = np.median(np.diff(grid))
    return int(np.ceil(min_separation / step)) if step > 0 else 1


def count_modes(pdf_values, rel_prominence: float = 0.001,
                rel_height: float = 0.05, grid=None,
                min_separation: float = 0.0) -> int:
    """Count interior local maxima of a density evaluated on a grid.

    A peak counts when its prominence exceeds ``rel_prominence`` times the
    global maximum and its height exceeds ``rel_height`` times the global
    maximum.  ``min_separation`` (in grid units, requires ``grid``) merges
    peaks closer than that distance, keeping the taller one: genuine modes
    of a mixture sit more than a standard deviation apart, while the
    oscillation artifacts of polynomial pushforward densities live at a
    fraction of it.
    """
    v = np.asarray(pdf_values, dtype=float).ravel()
    spacing = _spacing_points(np.asarray(grid, dtype=float) if grid is not None
                              else None, v, min_separation)
    return int(_find_peaks(v, rel_prominence, rel_height, spacing).size)


def mode_locations(grid, pdf_values, rel_prominence: float = 0.001,
                   rel_height: float = 0.05,
                   min_separation: float = 0.0) -> np.ndarray:
    """Grid locations of the detected density peaks, ascending."""
    v = np.asarray(pdf_values, dtype=float).ravel()
    g = np.asarray(grid, dtype=float).ravel()
    if v.shape != g.shape:
        raise ValueError("grid and pdf_values must have equal length")
    spacing = _spacing_points(g, v, min_separation)
    return g[_find_peaks(v, rel_prominence, rel_height, spacing)]


def higher_mode_side(grid, pdf_values, **detector_kwargs) -> str | None:
    """Which side of a two-mode density carries the higher peak.

    Returns "left" or "right" comparing the highest detected peak with the
    other detected peaks, or None when fewer than two peaks are found.
    """
    v = np.asarray(pdf_values, dtype=float).ravel()
    g = np.asarray(grid, dtype=float).ravel()
    locs = mode_locations(g, v, **detector_kwargs)
    if locs.size < 2:
        return None
    heights = np.interp(locs, g, v)
    top = locs[np.argmax(heights)]
    rest = np.delete(locs, np.argmax(heights))
    return "left" if top < np.median(rest) else "right"


def density_from_quantiles(levels, values, grid, half_window: int | None = None):
    """Density on a grid from (CDF level, quantile value) pairs.

    Differentiates the quantile curve with symmetric finite differences
    (du/dy), then interpolates onto ``grid``.  With deterministic quantile
    evaluations this is free of sampling noise and needs no bandwidth.

    Args:
        levels: increasing CDF levels in (0, 1).
        values: quantile values at those levels (sorted internally).
        grid: output evaluation grid.
        half_window: finite-difference half width in index units; defaults
            to max(2, n // 200).
    """
    u = np.asarray(levels, dtype=float).ravel()
    y = np.sort(np.asarray(values, dtype=float).ravel())
    if u.shape != y.shape:
        raise ValueError("levels and values must have equal length")
    n = u.size
    if n < 5:
        raise ValueError("need at least 5 quantile points")
    k = half_window if half_window is not None else max(2, n // 200)
    k = min(k, (n - 1) // 2)
    centers = y[k:n - k]
    dy = y[2 * k:] - y[:n - 2 * k]
    du = u[2 * k:] - u[:n - 2 * k]
    with np.errstate(divide="ignore"):
        dens = np.where(dy > 0, du / np.maximum(dy, 1e-300), 0.0)
    out = np.interp(grid, centers, dens, left=0.0, right=0.0)
    return out
