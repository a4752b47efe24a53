"""Trajectory and observable-series generation with reproducible seeding.

Every realization draws from its own counter-based stream
Philox(key=[seed, index]): trajectories are bitwise reproducible given
(seed, index) and independent of how realizations are batched, so
realizations can fan out across processes without coordination. Long runs
are advanced in chunks; systems resume exactly because noise is consumed
per-realization from the same stream.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError
from ..observables import ObservableSpec, observable_series
from .billiard import BilliardState, BilliardTable, sample_boundary_states

__all__ = [
    "stream",
    "IIDUniformSystem",
    "generate_series",
    "observable_trajectory_batch",
    "initial_states",
    "CALIBRATION_INDEX",
]

# reserved stream index for threshold-calibration orbits
CALIBRATION_INDEX = 2**62

_CHUNK = 65536


def stream(seed: int, index: int = 0) -> np.random.Generator:
    """Counter-based generator for realization ``index`` of run ``seed``."""
    key = np.array([int(seed) & (2**64 - 1), int(index) & (2**64 - 1)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def worker_limit() -> int:
    """Batch-width cap from HYPEREVT_WORKERS (0 = unlimited)."""
    try:
        return max(0, int(os.environ.get("HYPEREVT_WORKERS", "0")))
    except ValueError:
        raise ConfigError("HYPEREVT_WORKERS must be an integer")


@dataclass(frozen=True)
class IIDUniformSystem:
    """Surrogate 'dynamics' that redraws the state uniformly at every step.

    Useful as the independent reference for estimator and diagnostics
    checks: its extremal index is 1 and exceedance events at distinct
    times are exactly independent.
    """

    dim: int = 1

    def advance_batch(self, x, n: int, streams=None, out=None):
        if n < 1:
            return x
        if isinstance(streams, np.random.Generator):
            draws = streams.random((n, x.shape[0], self.dim))
            if out is not None:
                out[0] = x
                out[1:] = draws[:-1]
            x[:] = draws[-1]
            return x
        if streams is None or len(streams) != x.shape[0]:
            raise ConfigError("i.i.d. surrogate needs one RNG stream per realization")
        for b, st in enumerate(streams):
            draws = st.random((n, self.dim))
            if out is not None:
                out[0, b, :] = x[b]
                out[1:, b, :] = draws[:-1]
            x[b] = draws[-1]
        return x


def initial_states(system, streams) -> np.ndarray:
    """Draw one initial state per stream from the natural reference measure
    (uniform on the torus; cos(theta) boundary measure for billiards)."""
    B = len(streams)
    if isinstance(system, BilliardTable):
        return np.vstack([sample_boundary_states(system, st, 1) for st in streams])
    dim = system.dim
    return np.vstack([st.random((1, dim)) for st in streams])


def _coerce_x0(system, x0, B):
    if isinstance(x0, BilliardState):
        x0 = x0.as_array()
    x = np.asarray(x0, dtype=float)
    x = x.reshape(-1, x.shape[-1]) if x.ndim > 1 else x.reshape(1, -1)
    if x.shape[0] != B:
        raise ConfigError(f"got {x.shape[0]} initial states for {B} realizations")
    return x.copy()


def observable_trajectory_batch(
    system,
    obs: ObservableSpec,
    n: int,
    n_realizations: int = 1,
    seed: int = 0,
    x0=None,
    burn_in: int = 0,
    stream_index0: int = 0,
    chunk: int = _CHUNK,
) -> np.ndarray:
    """Observable series (n, B) for B independent realizations.

    Realization b uses stream(seed, stream_index0 + b) for its initial
    condition (when x0 is not given) and all of its noise. The series is
    phi(x_0), phi(T x_0), ..., phi(T^(n-1) x_0) after ``burn_in`` discarded
    steps.
    """
    if n < 1:
        raise ConfigError("series length n must be >= 1")
    B = int(n_realizations)
    limit = worker_limit()
    if limit and B > limit:
        parts = []
        for lo in range(0, B, limit):
            hi = min(B, lo + limit)
            parts.append(
                observable_trajectory_batch(
                    system, obs, n, hi - lo, seed,
                    x0=None if x0 is None else np.asarray(x0)[lo:hi],
                    burn_in=burn_in, stream_index0=stream_index0 + lo, chunk=chunk,
                )
            )
        return np.concatenate(parts, axis=1)

    streams = [stream(seed, stream_index0 + b) for b in range(B)]
    x = initial_states(system, streams) if x0 is None else _coerce_x0(system, x0, B)

    done = 0
    while done < burn_in:
        c = min(chunk, burn_in - done)
        system.advance_batch(x, c, streams=streams)
        done += c

    phi = np.empty((n, B))
    done = 0
    while done < n:
        c = min(chunk, n - done)
        states = np.empty((c, B, x.shape[1]))
        system.advance_batch(x, c, streams=streams, out=states)
        phi[done : done + c] = observable_series(obs, states, system)
        done += c
    return phi


def generate_series(system, x0, n: int, obs: ObservableSpec, seed: int = 0) -> np.ndarray:
    """Single-trajectory observable series of length n started at x0.

    Deterministic given (system, x0, n, obs, seed); x0=None draws the
    start from stream(seed, 0).
    """
    phi = observable_trajectory_batch(
        system, obs, n, n_realizations=1, seed=seed, x0=x0
    )
    return phi[:, 0]


def state_trajectory(
    system, n: int, seed: int = 0, index: int = 0, x0=None, burn_in: int = 0
) -> np.ndarray:
    """Raw state trajectory (n, state_dim) for one realization index."""
    if n < 1:
        raise ConfigError("trajectory length n must be >= 1")
    st = [stream(seed, index)]
    x = initial_states(system, st) if x0 is None else _coerce_x0(system, x0, 1)
    if burn_in:
        system.advance_batch(x, burn_in, streams=st)
    out = np.empty((n, 1, x.shape[1]))
    system.advance_batch(x, n, streams=st, out=out)
    return out[:, 0, :]
