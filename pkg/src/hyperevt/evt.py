"""Threshold selection, exceedance declustering, extremal-index estimators,
GEV fitting by L-moments, and the empirical extreme-value-law curve.

The extremal index estimators all work from the positions of threshold
exceedances only, so they are invariant under monotone transformations of
the series that keep the exceedance set fixed. Estimates are clamped to
[0, 1]; the raw value is retained for diagnostics.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import gamma as _gamma_fn

from .errors import (
    ConfigError,
    DataError,
    FitError,
    InsufficientExceedancesError,
)
from .observables import ObservableSpec
from .systems.series import CALIBRATION_INDEX, observable_trajectory_batch

__all__ = [
    "threshold_at",
    "ClusterStatistics",
    "extract_clusters",
    "EIEstimate",
    "suveges_ei",
    "blocks_ei",
    "runs_ei",
    "estimate_ei",
    "block_maxima",
    "GevFit",
    "fit_gev",
    "l_moments",
    "sample_gev",
    "calibrate_threshold",
    "EvlPoint",
    "empirical_evl_curve",
    "read_series_csv",
]

_EULER_GAMMA = 0.5772156649015329


def threshold_at(series, quantile_level: float) -> float:
    """Empirical quantile via linear interpolation of order statistics."""
    series = np.asarray(series, dtype=float)
    if series.size < 100:
        raise DataError(f"series too short for a quantile threshold ({series.size} < 100)")
    if not 0.5 < quantile_level < 1.0:
        raise ConfigError("quantile level must lie in (0.5, 1)")
    return float(np.quantile(series, quantile_level))


@dataclass(frozen=True)
class ClusterStatistics:
    """Exceedance positions and the gap statistics built from them.

    gaps[i] = positions[i+1] - positions[i] (all >= 1), s_values = gaps - 1,
    n_clusters counts the nonzero s_values, exceed_prob is the empirical
    exceedance probability of the threshold.
    """

    positions: np.ndarray
    gaps: np.ndarray
    s_values: np.ndarray
    n_exceedances: int
    n_clusters: int
    exceed_prob: float
    threshold: float


def extract_clusters(series, threshold: float) -> ClusterStatistics:
    """Locate exceedances of ``threshold`` and compute gap statistics."""
    series = np.asarray(series, dtype=float)
    positions = np.nonzero(series > threshold)[0]
    if positions.size < 2:
        raise InsufficientExceedancesError(
            f"need at least 2 exceedances, found {positions.size}"
        )
    gaps = np.diff(positions)
    s_values = gaps - 1
    return ClusterStatistics(
        positions=positions,
        gaps=gaps,
        s_values=s_values,
        n_exceedances=int(positions.size),
        n_clusters=int(np.count_nonzero(s_values)),
        exceed_prob=positions.size / series.size,
        threshold=float(threshold),
    )


@dataclass(frozen=True)
class EIEstimate:
    theta_hat: float
    method: str
    threshold: float
    n_exceedances: int
    theta_hat_raw: float

    def __post_init__(self):
        if not 0.0 <= self.theta_hat <= 1.0:  # pragma: no cover
            raise ValueError("clamped estimate left [0, 1]")


def _clamped(raw: float, method: str, threshold: float, n_exc: int) -> EIEstimate:
    return EIEstimate(
        theta_hat=float(min(1.0, max(0.0, raw))),
        method=method,
        threshold=threshold,
        n_exceedances=n_exc,
        theta_hat_raw=float(raw),
    )


def suveges_ei(
    clusters: ClusterStatistics,
    cluster_gap: int = 1,
    q_as_quantile_level: bool = False,
) -> EIEstimate:
    """Maximum-likelihood extremal index from inter-exceedance gaps.

    With A = sum(q * S_i), S_i = max(T_i - cluster_gap, 0), C = #{S_i != 0}
    and N exceedances:

        theta = (A + N - 1 + C - sqrt((A + N - 1 + C)^2 - 8*C*A)) / (2*A)

    q is the exceedance probability (pass q_as_quantile_level=True to use
    1 - exceed_prob instead). cluster_gap=1 is the plain estimator, where
    only back-to-back exceedances count as one cluster; for an extremal
    set revisited with a known prime period p, cluster_gap=p declusters
    the period-p returns as well.

    Degenerate inputs follow fixed conventions: fewer than two exceedances
    give 1, all gaps within the cluster horizon give 0 (one solid
    cluster); both emit a warning.
    """
    if cluster_gap < 1:
        raise ConfigError("cluster_gap must be >= 1")
    N = clusters.n_exceedances
    if N < 2:
        warnings.warn("fewer than 2 exceedances: extremal index set to 1 by convention")
        return _clamped(1.0, "suveges", clusters.threshold, N)
    q = 1.0 - clusters.exceed_prob if q_as_quantile_level else clusters.exceed_prob
    s = np.maximum(clusters.gaps - cluster_gap, 0)
    n_c = int(np.count_nonzero(s))
    a = q * s.sum()
    if a == 0.0:
        warnings.warn("all exceedances fall in one run: extremal index set to 0")
        return _clamped(0.0, "suveges", clusters.threshold, N)
    b = a + (N - 1) + n_c
    disc = max(b * b - 8.0 * n_c * a, 0.0)
    raw = (b - math.sqrt(disc)) / (2.0 * a)
    return _clamped(raw, "suveges", clusters.threshold, N)


def blocks_ei(series, threshold: float, block_len: int) -> EIEstimate:
    """Occupied blocks over exceedances, with the series tiled by blocks of
    ``block_len`` (a trailing partial block counts as a block).

    Consistent only when block_len * exceedance probability is small.
    """
    if block_len < 2:
        raise ConfigError("block_len must be >= 2")
    series = np.asarray(series, dtype=float)
    positions = np.nonzero(series > threshold)[0]
    if positions.size == 0:
        raise InsufficientExceedancesError("no exceedances above the threshold")
    occupied = np.unique(positions // block_len).size
    return _clamped(occupied / positions.size, "blocks", float(threshold), int(positions.size))


def runs_ei(series, threshold: float, run_gap: int) -> EIEstimate:
    """Cluster count over exceedances, merging exceedances separated by a
    time gap smaller than ``run_gap`` into one cluster."""
    if run_gap < 1:
        raise ConfigError("run_gap must be >= 1")
    series = np.asarray(series, dtype=float)
    positions = np.nonzero(series > threshold)[0]
    if positions.size == 0:
        raise InsufficientExceedancesError("no exceedances above the threshold")
    if positions.size == 1:
        return _clamped(1.0, "runs", float(threshold), 1)
    n_clusters = 1 + int(np.count_nonzero(np.diff(positions) >= run_gap))
    return _clamped(n_clusters / positions.size, "runs", float(threshold), int(positions.size))


def estimate_ei(
    series,
    quantile_level: float,
    method: str = "suveges",
    cluster_gap: int = 1,
    block_len: int = 10,
    run_gap: int = 2,
    q_as_quantile_level: bool = False,
) -> EIEstimate:
    """Threshold the series at ``quantile_level`` and run one estimator."""
    u = threshold_at(series, quantile_level)
    if method == "suveges":
        return suveges_ei(
            extract_clusters(series, u),
            cluster_gap=cluster_gap,
            q_as_quantile_level=q_as_quantile_level,
        )
    if method == "blocks":
        return blocks_ei(series, u, block_len)
    if method == "runs":
        return runs_ei(series, u, run_gap)
    raise ConfigError(f"unknown estimator method {method!r}")


def block_maxima(series, block_len: int) -> np.ndarray:
    """Maxima of consecutive non-overlapping blocks; a final partial block
    is dropped."""
    if block_len < 2:
        raise ConfigError("block_len must be >= 2")
    series = np.asarray(series, dtype=float)
    if series.size < 2 * block_len:
        raise DataError("series shorter than two blocks")
    nblocks = series.size // block_len
    return series[: nblocks * block_len].reshape(nblocks, block_len).max(axis=1)


def l_moments(sample):
    """First three sample L-moments (l1, l2, l3) from probability-weighted
    moments of the order statistics."""
    x = np.sort(np.asarray(sample, dtype=float))
    n = x.size
    if n < 3:
        raise DataError("need at least 3 values for three L-moments")
    i = np.arange(1, n + 1)
    b0 = x.mean()
    b1 = np.sum((i - 1) / (n - 1) * x) / n
    b2 = np.sum((i - 1) * (i - 2) / ((n - 1) * (n - 2)) * x) / n
    return b0, 2.0 * b1 - b0, 6.0 * b2 - 6.0 * b1 + b0


@dataclass(frozen=True)
class GevFit:
    """Generalized extreme value parameters in the parameterisation
    G(y) = exp(-(1 + shape*(y-location)/scale)^(-1/shape)), shape=0 being
    the double-exponential limit."""

    location: float
    scale: float
    shape: float

    def __post_init__(self):
        if not self.scale > 0:
            raise FitError("GEV scale must be positive")


def fit_gev(maxima) -> GevFit:
    """Probability-weighted-moment (L-moment) GEV fit.

    Uses the standard rational approximation for the shape from the
    L-skewness t3 = l3/l2:

        c = 2/(3 + t3) - log(2)/log(3),  k = 7.8590 c + 2.9554 c^2,

    with shape = -k, scale = l2*k / (Gamma(1+k)*(1 - 2^-k)) and
    location = l1 - scale*(1 - Gamma(1+k))/k; the k -> 0 limit gives the
    double-exponential branch scale = l2/log(2).
    """
    x = np.asarray(maxima, dtype=float)
    if x.size < 50:
        raise DataError(f"need at least 50 block maxima to fit ({x.size} given)")
    if not np.all(np.isfinite(x)):
        raise FitError("block maxima contain non-finite values")
    if np.ptp(x) == 0.0:
        raise FitError("degenerate (constant) block maxima")
    l1, l2, l3 = l_moments(x)
    if l2 <= 0:
        raise FitError("second L-moment not positive")
    t3 = l3 / l2
    c = 2.0 / (3.0 + t3) - math.log(2.0) / math.log(3.0)
    k = 7.8590 * c + 2.9554 * c * c
    if abs(k) < 1e-8:
        scale = l2 / math.log(2.0)
        loc = l1 - _EULER_GAMMA * scale
        return GevFit(location=loc, scale=scale, shape=0.0)
    g1 = _gamma_fn(1.0 + k)
    scale = l2 * k / (g1 * (1.0 - 2.0 ** (-k)))
    loc = l1 - scale * (1.0 - g1) / k
    shape = -k
    if not (np.isfinite(shape) and np.isfinite(scale) and np.isfinite(loc)):
        raise FitError("L-moment inversion produced non-finite parameters")
    return GevFit(location=loc, scale=scale, shape=shape)


def sample_gev(rng, count: int, shape: float, location: float = 0.0, scale: float = 1.0):
    """Inverse-CDF samples from the GEV with the given parameters."""
    u = rng.random(count)
    if shape == 0.0:
        y = -np.log(-np.log(u))
    else:
        y = ((-np.log(u)) ** (-shape) - 1.0) / shape
    return location + scale * y


def calibrate_threshold(
    system,
    obs: ObservableSpec,
    n: int,
    tau: float,
    seed: int,
    calibration_len: int = 1_000_000,
    burn_in: int = 1000,
) -> float:
    """u_n(tau): the empirical (1 - tau/n) quantile of a long calibration
    orbit, so that n * P(phi > u_n) is approximately tau.

    tau = 0 returns +inf (no exceedances by convention). The calibration
    orbit runs on its own reserved stream index.
    """
    if tau < 0:
        raise ConfigError("tau must be non-negative")
    if tau == 0:
        return math.inf
    level = 1.0 - tau / n
    if not 0.0 < level < 1.0:
        raise ConfigError(f"tau={tau} too large for series length n={n}")
    phi = observable_trajectory_batch(
        system, obs, calibration_len, n_realizations=1, seed=seed,
        burn_in=burn_in, stream_index0=CALIBRATION_INDEX,
    )[:, 0]
    return float(np.quantile(phi, level))


@dataclass(frozen=True)
class EvlPoint:
    tau: float
    threshold: float
    p_empirical: float
    std_error: float


def empirical_evl_curve(
    system,
    obs: ObservableSpec,
    n: int,
    tau_grid,
    n_realizations: int,
    seed: int,
    calibration_len: int = 1_000_000,
    burn_in: int = 1000,
) -> list:
    """Empirical P(M_n <= u_n(tau)) over uniformly drawn initial conditions
    for each tau in ``tau_grid``; the limit law predicts exp(-theta*tau).
    """
    if n < 1000:
        raise ConfigError("EVL curve needs n >= 1000")
    if n_realizations < 100:
        raise ConfigError("EVL curve needs at least 100 realizations")
    taus = [float(t) for t in tau_grid]
    thresholds = {
        t: calibrate_threshold(system, obs, n, t, seed, calibration_len, burn_in)
        for t in sorted(set(taus))
    }
    phi = observable_trajectory_batch(system, obs, n, n_realizations, seed)
    m_n = phi.max(axis=0)
    rows = []
    for t in taus:
        u = thresholds[t]
        p = float(np.mean(m_n <= u)) if math.isfinite(u) else 1.0
        se = math.sqrt(max(p * (1.0 - p), 0.0) / n_realizations)
        rows.append(EvlPoint(tau=t, threshold=u, p_empirical=p, std_error=se))
    return rows


def read_series_csv(path) -> np.ndarray:
    """One-column CSV, optional single header line."""
    values = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh):
            item = line.strip().split(",")[0]
            if not item:
                continue
            try:
                values.append(float(item))
            except ValueError:
                if lineno == 0:
                    continue
                raise DataError(f"{path}:{lineno + 1}: not a number: {item!r}")
    if not values:
        raise DataError(f"{path}: no numeric data")
    return np.asarray(values)
