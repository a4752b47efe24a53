"""Monte-Carlo probes of the quantities behind the extremal-index limits:
the short-return sum controlling rapid re-entries into the exceedance set,
and the escape-rate ratio whose limit is the extremal index itself.

Both probes draw ensembles from the reference measure of the system
(uniform on the torus, the cosine boundary measure for billiards) and
report binomial standard errors from raw counts. Sample batches are
processed as vectorized chunks with associative count merging.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, InsufficientSamplesError
from .evt import calibrate_threshold
from .observables import ObservableKind, ObservableSpec, observable_series
from .systems.billiard import BilliardTable, sample_boundary_states
from .systems.coupled import CoupledMapSystem
from .systems.series import IIDUniformSystem, stream
from .systems.toral import ToralAutomorphism

__all__ = ["ReturnSumReport", "short_return_sum", "AqRatio", "aq_ratio"]

# reserved stream index for diagnostic ensembles (distinct from the
# calibration index and from small realization indices)
DIAGNOSTICS_INDEX = 2**61

# below this expected exceedance probability, segment/diagonal probes
# sample the exceedance tube directly instead of rejecting from uniform
# (the reference measure is flat, so tube sampling is exact and removes
# the 1/p rejection cost)
_STRATIFY_BELOW = 2.5e-4


@dataclass(frozen=True)
class ReturnSumReport:
    """Estimates of P(escape event at time 0 and again at time j).

    With q = 0 the escape event is a plain exceedance, so the entries are
    P(exceed at 0 and at j) for j = 1..j_max. For q > 0 the event excludes
    exceedances during the next q steps and j runs over q+1..j_max.
    """

    n: int
    q: int
    j_range: tuple
    per_j_estimates: list
    standard_errors: list
    weighted_total: float
    threshold: float
    exceed_prob: float
    event_prob: float
    samples: int


def _sample_cloud(system, rng, count):
    if isinstance(system, BilliardTable):
        return sample_boundary_states(system, rng, count)
    return rng.random((count, system.dim))


def _advance_cloud(system, x, n, rng, out=None):
    if isinstance(system, (CoupledMapSystem, IIDUniformSystem)):
        return system.advance_batch(x, n, streams=rng, out=out)
    return system.advance_batch(x, n, out=out)


def short_return_sum(
    system,
    obs: ObservableSpec,
    n: int,
    j_max: int,
    samples: int,
    seed: int,
    tau: float = 1.0,
    q: int = 0,
    calibration_len: int = 1_000_000,
    burn_in: int = 1000,
) -> ReturnSumReport:
    """Estimate mu(A ∩ T^-j A) for j = q+1..j_max and report n * sum_j.

    With the default q = 0, A is the exceedance set U_n = {phi > u_n(tau)}.
    For q > 0, A is the escape event {exceed now, none of the next q steps
    exceed}, the set whose short returns must vanish when the extremal set
    traps orbits for q steps (e.g. the invariant synchrony diagonal needs
    q = 1). A vanishing weighted total as n grows is the signature that
    rapid returns do not contribute beyond the built-in clustering; on an
    independent surrogate with q = 0 every term equals the squared
    exceedance probability.
    """
    if samples < 10_000:
        raise ConfigError("short-return probe needs at least 1e4 samples")
    if q < 0:
        raise ConfigError("q must be >= 0")
    if j_max <= q:
        raise ConfigError("j_max must exceed q")
    u = calibrate_threshold(system, obs, n, tau, seed, calibration_len, burn_in)
    rng = stream(seed, DIAGNOSTICS_INDEX)
    x = _sample_cloud(system, rng, samples)
    horizon = j_max + q + 1
    states = np.empty((horizon, samples, x.shape[1]))
    _advance_cloud(system, x, horizon, rng, out=states)
    flags = observable_series(obs, states, system) > u

    # escape events: exceed at t, no exceedance during the next q steps
    events = flags[: j_max + 1].copy()
    for k in range(1, q + 1):
        events &= ~flags[k : j_max + 1 + k]
    base = events[0]
    estimates, errors = [], []
    for j in range(q + 1, j_max + 1):
        hits = int(np.count_nonzero(base & events[j]))
        p = hits / samples
        estimates.append((j, p))
        errors.append(math.sqrt(max(p * (1.0 - p), 0.0) / samples))
    total = n * sum(p for _, p in estimates)
    return ReturnSumReport(
        n=n,
        q=q,
        j_range=(q + 1, j_max),
        per_j_estimates=estimates,
        standard_errors=errors,
        weighted_total=total,
        threshold=u,
        exceed_prob=float(flags[0].mean()),
        event_prob=float(base.mean()),
        samples=samples,
    )


@dataclass(frozen=True)
class AqRatio:
    """Escape-rate ratio: fraction of exceedance states whose next q
    iterates all stay below the threshold."""

    ratio: float
    std_error: float
    n_exceedances: int
    threshold: float
    q: int


def _tube_radius(obs: ObservableSpec, u: float) -> float:
    if obs.kind is ObservableKind.ONE_MINUS_SEGMENT_DIST:
        return 1.0 - u
    return math.exp(-u)


def _sample_segment_tube(obs: ObservableSpec, delta: float, rng, count: int) -> np.ndarray:
    """Uniform samples on {x : d(x, segment) < delta} (a stadium around the
    lifted segment, wrapped to the torus). Exact for the flat measure."""
    seg = obs.segment
    rect_area = 2.0 * delta * seg.length
    cap_area = math.pi * delta * delta
    pick_rect = rng.random(count) < rect_area / (rect_area + cap_area)
    t = rng.random(count) * seg.length
    s = rng.uniform(-delta, delta, count)
    normal = np.array([-seg.direction[1], seg.direction[0]])
    pts = seg.p1[None, :] + t[:, None] * seg.direction[None, :] + s[:, None] * normal[None, :]
    # endpoint caps: uniform in the half-disks sticking out of the rectangle
    ncap = int(np.count_nonzero(~pick_rect))
    if ncap:
        r = delta * np.sqrt(rng.random(ncap))
        ang = rng.random(ncap) * math.pi
        side = rng.random(ncap) < 0.5
        local = np.stack([np.where(side, -1.0, 1.0) * r * np.sin(ang), r * np.cos(ang)], axis=1)
        anchor = np.where(side[:, None], seg.p1[None, :], seg.p2[None, :])
        frame = np.stack([seg.direction, normal], axis=0)
        pts[~pick_rect] = anchor + local @ frame
    return pts % 1.0


def _sample_pair_diagonal_tube(delta: float, rng, count: int) -> np.ndarray:
    """Uniform samples on {(x, y) : circle-|x - y| / 2 < delta} for the
    two-site synchrony observable."""
    c = rng.random(count)
    w = rng.uniform(-delta, delta, count)
    return np.stack([c + w, c - w], axis=1) % 1.0


def aq_ratio(
    system,
    obs: ObservableSpec,
    q: int,
    n: int,
    samples: int,
    seed: int,
    tau: float = 1.0,
    calibration_len: int = 1_000_000,
    burn_in: int = 1000,
) -> AqRatio:
    """Monte-Carlo estimate of
    P(phi > u_n and phi(T x) <= u_n, ..., phi(T^q x) <= u_n) / P(phi > u_n)
    by conditional sampling on exceedances; its large-n limit is the
    extremal index.

    ``samples`` is the number of exceedance states to accumulate (at least
    1e4). States come from uniform rejection against the reference
    measure; when the exceedance probability is tiny and the extremal set
    is a torus segment or the two-site diagonal, the exceedance tube is
    sampled directly (the reference measure is flat, so tube sampling is
    exact).
    """
    if q < 0:
        raise ConfigError("q must be >= 0")
    if samples < 10_000:
        raise ConfigError("escape-rate probe needs at least 1e4 exceedance samples")
    u = calibrate_threshold(system, obs, n, tau, seed, calibration_len, burn_in)
    if q == 0:
        return AqRatio(ratio=1.0, std_error=0.0, n_exceedances=samples, threshold=u, q=0)

    rng = stream(seed, DIAGNOSTICS_INDEX)
    p_expected = tau / n
    collected = []
    n_collected = 0

    stratified = p_expected < _STRATIFY_BELOW and (
        (isinstance(system, ToralAutomorphism) and obs.segment is not None)
        or (
            isinstance(system, CoupledMapSystem)
            and system.m == 2
            and obs.kind is ObservableKind.NEG_LOG_PERP
        )
    )
    if stratified:
        delta = _tube_radius(obs, u)
        while n_collected < samples:
            count = samples - n_collected
            if obs.segment is not None:
                pts = _sample_segment_tube(obs, delta, rng, count)
            else:
                pts = _sample_pair_diagonal_tube(delta, rng, count)
            keep = observable_series(obs, pts, system) > u
            pts = pts[keep]
            collected.append(pts)
            n_collected += pts.shape[0]
    else:
        budget = int(8 * samples / p_expected) + 1
        drawn = 0
        chunk = int(min(2_000_000, budget))
        while n_collected < samples:
            if drawn >= budget:
                raise InsufficientSamplesError(
                    f"collected {n_collected}/{samples} exceedances after "
                    f"{drawn} draws (expected exceedance probability {p_expected:.2e})"
                )
            c = min(chunk, budget - drawn)
            x = _sample_cloud(system, rng, c)
            keep = observable_series(obs, x, system) > u
            collected.append(x[keep])
            n_collected += int(np.count_nonzero(keep))
            drawn += c

    x = np.concatenate(collected, axis=0)[:samples]
    states = np.empty((q + 1, samples, x.shape[1]))
    _advance_cloud(system, x.copy(), q + 1, rng, out=states)
    phi = observable_series(obs, states[1:], system)
    escaped = np.all(phi <= u, axis=0)
    k = int(np.count_nonzero(escaped))
    ratio = k / samples
    se = math.sqrt(max(ratio * (1.0 - ratio), 0.0) / samples)
    return AqRatio(ratio=ratio, std_error=se, n_exceedances=samples, threshold=u, q=q)
