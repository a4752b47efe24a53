"""Observables maximised on the extremal sets studied here: line segments
on the 2-torus, the boundary line {r = r0} of a billiard scatterer, and
synchrony subspaces of coupled lattices.

All forms are decreasing functions of a distance d to the extremal set, so
high thresholds select small neighbourhoods of the set. Points exactly on
the set evaluate to the +inf sentinel for the log forms; estimators treat
the sentinel as exceeding every threshold.

Deviations from a synchrony block mean are computed on the circle: sites
are lifted next to the block's first site before averaging, which keeps
the value continuous across the wrap point and invariant under a common
rotation of all sites.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConfigError
from .geometry import LineSegment, segment_distance, wrap_half

__all__ = [
    "ObservableKind",
    "BoundaryLine",
    "ObservableSpec",
    "observable_series",
    "observable_value",
    "block_max_deviation",
]


class ObservableKind(enum.Enum):
    NEG_LOG_SEGMENT_DIST = "neg_log_segment_dist"
    ONE_MINUS_SEGMENT_DIST = "one_minus_segment_dist"
    NEG_LOG_PERP = "neg_log_perp"
    NEG_LOG_BLOCK_PERP = "neg_log_block_perp"


_SEGMENT_KINDS = (ObservableKind.NEG_LOG_SEGMENT_DIST, ObservableKind.ONE_MINUS_SEGMENT_DIST)


@dataclass(frozen=True)
class BoundaryLine:
    """The set {r = r0} on one scatterer of a billiard table."""

    scatterer_index: int
    r0: float


@dataclass(frozen=True)
class ObservableSpec:
    kind: ObservableKind
    segment: Optional[LineSegment] = None
    blocks: Optional[tuple] = None
    boundary_line: Optional[BoundaryLine] = None

    def __post_init__(self):
        if self.kind in _SEGMENT_KINDS:
            if (self.segment is None) == (self.boundary_line is None):
                raise ConfigError(
                    "segment-distance observables need exactly one of a torus "
                    "segment or a billiard boundary line"
                )
            if self.blocks is not None:
                raise ConfigError("blocks only apply to the block-synchrony observable")
        elif self.kind is ObservableKind.NEG_LOG_PERP:
            if self.segment is not None or self.blocks is not None or self.boundary_line is not None:
                raise ConfigError("the full-synchrony observable takes no geometry")
        elif self.kind is ObservableKind.NEG_LOG_BLOCK_PERP:
            if self.blocks is None:
                raise ConfigError("the block-synchrony observable needs block lists")
            if self.segment is not None or self.boundary_line is not None:
                raise ConfigError("blocks and segments are mutually exclusive")
            blocks = tuple(tuple(int(i) for i in b) for b in self.blocks)
            seen = set()
            for b in blocks:
                if len(b) < 2:
                    raise ConfigError("every synchrony block needs at least 2 sites")
                if any(i < 0 for i in b):
                    raise ConfigError("block site indices must be non-negative")
                if seen & set(b):
                    raise ConfigError("synchrony blocks must be disjoint")
                seen |= set(b)
            object.__setattr__(self, "blocks", blocks)
        else:  # pragma: no cover
            raise ConfigError(f"unknown observable kind {self.kind!r}")


def block_max_deviation(states, blocks) -> np.ndarray:
    """max over blocks of max_j circle-distance(x_j, block mean).

    ``states`` has shape (..., m). The block mean is taken over lifts of
    the sites placed within half a turn of the block's first site. The
    chart anchored at the first site makes the value continuous and
    rotation invariant everywhere except on the measure-zero locus where
    some site is exactly antipodal to the anchor; near the synchrony set
    (small deviations), where thresholds live, no site comes close to
    antipodal.
    """
    states = np.asarray(states, dtype=float)
    best = np.zeros(states.shape[:-1])
    for sites in blocks:
        sub = states[..., list(sites)]
        rel = wrap_half(sub - sub[..., :1])
        dev = np.abs(wrap_half(rel - rel.mean(axis=-1, keepdims=True)))
        np.maximum(best, dev.max(axis=-1), out=best)
    return best


def _distance(spec: ObservableSpec, states, system) -> np.ndarray:
    states = np.asarray(states, dtype=float)
    if spec.kind in _SEGMENT_KINDS:
        if spec.boundary_line is not None:
            if system is None or not hasattr(system, "scatterers"):
                raise ConfigError("boundary-line observables need the billiard table")
            from .systems.billiard import boundary_arc_distance

            return boundary_arc_distance(
                system, states, spec.boundary_line.scatterer_index, spec.boundary_line.r0
            )
        if states.shape[-1] != 2:
            raise ConfigError("segment observables act on 2-torus states")
        return segment_distance(states, spec.segment)
    if spec.kind is ObservableKind.NEG_LOG_PERP:
        return block_max_deviation(states, (tuple(range(states.shape[-1])),))
    m = states.shape[-1]
    if any(i >= m for b in spec.blocks for i in b):
        raise ConfigError("block site index exceeds the lattice size")
    return block_max_deviation(states, spec.blocks)


def observable_series(spec: ObservableSpec, states, system=None) -> np.ndarray:
    """Evaluate the observable on an array of states (..., state_dim),
    returning shape (...)."""
    d = _distance(spec, states, system)
    if spec.kind is ObservableKind.ONE_MINUS_SEGMENT_DIST:
        return 1.0 - d
    with np.errstate(divide="ignore"):
        return -np.log(d)


def observable_value(spec: ObservableSpec, x, system=None) -> float:
    """Evaluate the observable at a single state."""
    x = np.asarray(x, dtype=float)
    return float(observable_series(spec, x.reshape(1, -1), system)[0])
