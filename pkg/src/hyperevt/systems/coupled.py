"""All-to-all coupled expanding circle maps with optional additive noise.

Each site evolves by x'_j = (1-gamma) T(x_j) + (gamma/m) sum_k T(x_k) + eta_j
(mod 1), with base map T(x) = slope * x mod 1 and eta_j uniform on
[-eps, eps]. The synchronised diagonal x_1 = ... = x_m is invariant and
repels transverse perturbations at rate (1-gamma)*slope.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba as nb
import numpy as np

from ..errors import ConfigError

__all__ = ["CoupledMapSystem", "coupled_step"]


@dataclass(frozen=True)
class CoupledMapSystem:
    """m coupled copies of the slope-`base_slope` circle map, coupling
    strength gamma in (0,1), additive noise amplitude noise_eps."""

    m: int
    gamma: float
    base_slope: float = 3.0
    noise_eps: float = 0.0

    def __post_init__(self):
        if not (isinstance(self.m, int) and self.m >= 2):
            raise ConfigError("lattice size m must be an integer >= 2")
        if not 0.0 < self.gamma < 1.0:
            raise ConfigError("coupling gamma must lie in (0, 1)")
        if not self.base_slope > 1.0:
            raise ConfigError("base map slope must exceed 1")
        if not 0.0 <= self.noise_eps <= 0.1:
            raise ConfigError("noise amplitude must lie in [0, 0.1]")

    @property
    def dim(self) -> int:
        return self.m

    @property
    def transverse_rate(self) -> float:
        """Expansion factor away from the synchronised diagonal."""
        return (1.0 - self.gamma) * self.base_slope

    def step(self, x, rng=None):
        return coupled_step(self, x, rng)

    def advance_batch(self, x, n: int, streams=None, out=None):
        """Advance a batch (B, m) by n steps in place.

        When ``out`` (n, B, m) is given, the states *before* each step are
        recorded, so out[0] is the incoming x. ``streams`` is either one
        RNG per realization (noise for lane b comes only from streams[b],
        so chunked calls resume exactly) or a single shared RNG for
        ensemble probes. Returns x.
        """
        B = x.shape[0]
        if self.noise_eps > 0.0:
            if isinstance(streams, np.random.Generator):
                noise = streams.uniform(-self.noise_eps, self.noise_eps, size=(n, B, self.m))
            elif streams is not None and len(streams) == B:
                noise = np.empty((n, B, self.m))
                for b, st in enumerate(streams):
                    noise[:, b, :] = st.uniform(
                        -self.noise_eps, self.noise_eps, size=(n, self.m)
                    )
            else:
                raise ConfigError("noisy coupled map needs one RNG stream per realization")
        else:
            noise = np.zeros((1, 1, 1))
        record = out is not None
        if not record:
            out = np.empty((0, B, self.m))
        _coupled_advance_kernel(
            x, n, noise, self.noise_eps > 0.0, self.gamma, self.base_slope, out, record
        )
        return x

    def orbit_batch(self, x0s, n: int, streams=None) -> np.ndarray:
        """States (n, B, m) for initial conditions (B, m)."""
        x = np.asarray(x0s, dtype=float).reshape(-1, self.m) % 1.0
        out = np.empty((n, x.shape[0], self.m))
        self.advance_batch(x.copy(), n, streams=streams, out=out)
        return out


def coupled_step(system: CoupledMapSystem, x, rng=None):
    """One step of the coupled map; noise is drawn from ``rng`` when the
    system is noisy (eta_j = 0 when noise_eps = 0).

    Accepts a single state (m,) or a batch (..., m).
    """
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != system.m:
        raise ConfigError(f"state has {x.shape[-1]} sites, system expects {system.m}")
    tx = (system.base_slope * x) % 1.0
    mean = tx.mean(axis=-1, keepdims=True)
    new = (1.0 - system.gamma) * tx + system.gamma * mean
    if system.noise_eps > 0.0:
        if rng is None:
            raise ConfigError("noisy coupled map step needs an RNG")
        new = new + rng.uniform(-system.noise_eps, system.noise_eps, size=x.shape)
    new %= 1.0
    return np.where(new >= 1.0, 0.0, new)


@nb.njit(cache=True)
def _coupled_advance_kernel(x, n, noise, noisy, gamma, slope, out, record):  # pragma: no cover
    B, m = x.shape
    for t in range(n):
        if record:
            for b in range(B):
                for k in range(m):
                    out[t, b, k] = x[b, k]
        for b in range(B):
            s = 0.0
            for k in range(m):
                tx = (slope * x[b, k]) % 1.0
                x[b, k] = tx
                s += tx
            s /= m
            for k in range(m):
                v = (1.0 - gamma) * x[b, k] + gamma * s
                if noisy:
                    v += noise[t, b, k]
                v = v % 1.0
                if v >= 1.0:
                    v = 0.0
                x[b, k] = v
