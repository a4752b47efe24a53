"""Torus geometry: wrapping, line segments, point-to-segment distance,
and alignment of segments against expanding/contracting eigendirections.

All distances are Euclidean on the universal cover; segment distances are
minimised over lattice translates so they agree with the metric on the
2-torus.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

__all__ = [
    "wrap",
    "wrap_half",
    "circle_distance",
    "LineSegment",
    "Alignment",
    "AlignmentClass",
    "classify_alignment",
    "segment_distance",
]

# Longest sub-segment for which the 3x3 translate window is provably exact
# (piece anchored in [0,1)^2, length <= 1/2: the optimal per-axis shift is
# then always in {-1, 0, 1}).
_MAX_PIECE_LENGTH = 0.5


def wrap(x):
    """Reduce coordinates mod 1 into [0, 1).

    Rejects non-finite input. Idempotent, and safe against the floating
    round-up of tiny negative values (``-1e-18 % 1.0 == 1.0``).
    """
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ConfigError("wrap: coordinates must be finite")
    r = x % 1.0
    return np.where(r >= 1.0, 0.0, r)


def wrap_half(delta):
    """Reduce differences mod 1 into [-1/2, 1/2)."""
    d = np.asarray(delta, dtype=float) % 1.0
    d = np.where(d >= 1.0, 0.0, d)
    return np.where(d >= 0.5, d - 1.0, d)


def circle_distance(a, b):
    """Distance on the unit circle R/Z between coordinates a and b."""
    return np.abs(wrap_half(np.asarray(a, dtype=float) - np.asarray(b, dtype=float)))


@dataclass(frozen=True)
class LineSegment:
    """A line segment on the 2-torus, stored as a lift to the plane.

    ``p1`` is the lifted start point, ``direction`` a unit vector and
    ``length`` the (positive) Euclidean length; the end point ``p2`` is
    always derived, never stored.
    """

    p1: np.ndarray
    direction: np.ndarray
    length: float

    def __post_init__(self):
        p1 = np.asarray(self.p1, dtype=float).reshape(2)
        d = np.asarray(self.direction, dtype=float).reshape(2)
        norm = math.hypot(d[0], d[1])
        if not np.all(np.isfinite(p1)) or not np.isfinite(norm):
            raise ConfigError("LineSegment: non-finite coordinates")
        if norm == 0.0:
            raise ConfigError("LineSegment: direction must be nonzero")
        if not (self.length > 0.0) or not np.isfinite(self.length):
            raise ConfigError("LineSegment: length must be positive and finite")
        object.__setattr__(self, "p1", p1)
        object.__setattr__(self, "direction", d / norm)
        object.__setattr__(self, "length", float(self.length))

    @property
    def p2(self) -> np.ndarray:
        return self.p1 + self.length * self.direction

    @classmethod
    def through_point(cls, point, direction, length, anchor="center"):
        """Build a segment passing through ``point``.

        anchor="center" places ``point`` at the midpoint, anchor="start"
        at ``p1``.
        """
        point = np.asarray(point, dtype=float).reshape(2)
        d = np.asarray(direction, dtype=float).reshape(2)
        d = d / math.hypot(d[0], d[1])
        if anchor == "center":
            p1 = point - 0.5 * length * d
        elif anchor == "start":
            p1 = point
        else:
            raise ConfigError(f"unknown segment anchor {anchor!r}")
        return cls(p1=p1, direction=d, length=length)

    def pieces(self):
        """Split into sub-segments of length <= 1/2, each with its anchor
        wrapped into [0,1)^2.

        Keeps the 9-translate minimum in :func:`segment_distance` exact for
        segments of any length.
        """
        n = max(1, math.ceil(self.length / _MAX_PIECE_LENGTH - 1e-12))
        piece_len = self.length / n
        out = []
        for i in range(n):
            anchor = self.p1 + i * piece_len * self.direction
            out.append((wrap(anchor), piece_len))
        return out


_SHIFTS = np.array(
    [[kx, ky] for kx in (-1, 0, 1) for ky in (-1, 0, 1)], dtype=float
)


def segment_distance(x, segment: LineSegment):
    """Torus distance from point(s) ``x`` to ``segment``.

    ``x`` may be a single point or an array of shape (..., 2); the result
    has shape (...). The minimum is taken over the 9 lattice translates of
    each sub-segment piece, which is exact (see :meth:`LineSegment.pieces`).
    """
    x = wrap(x)
    pts = np.atleast_2d(x.reshape(-1, 2))
    best = np.full(pts.shape[0], np.inf)
    for anchor, plen in segment.pieces():
        d = segment.direction
        for shift in _SHIFTS:
            w = pts + shift - anchor
            t = np.clip(w @ d, 0.0, plen)
            rx = w[:, 0] - t * d[0]
            ry = w[:, 1] - t * d[1]
            np.minimum(best, np.hypot(rx, ry), out=best)
    return best.reshape(np.shape(x)[:-1])


class Alignment(enum.Enum):
    UNSTABLE = "unstable"
    STABLE = "stable"
    TRANSVERSE = "transverse"


@dataclass(frozen=True)
class AlignmentClass:
    """Classification of a segment direction against the eigendirections."""

    tag: Alignment
    angle_to_eigendirection: float

    @property
    def is_transverse(self) -> bool:
        return self.tag is Alignment.TRANSVERSE


def classify_alignment(segment: LineSegment, v_plus, v_minus, tol: float = 1e-9) -> AlignmentClass:
    """Classify ``segment`` as unstable-/stable-aligned or transverse.

    A direction counts as aligned when |sin(angle)| to the eigendirection is
    at most ``tol``; the test is invariant under direction reversal and
    under the segment length.
    """
    if not tol > 0.0:
        raise ConfigError("alignment tolerance must be positive")
    d = segment.direction
    vp = np.asarray(v_plus, dtype=float)
    vm = np.asarray(v_minus, dtype=float)
    sin_p = abs(d[0] * vp[1] - d[1] * vp[0]) / math.hypot(vp[0], vp[1])
    sin_m = abs(d[0] * vm[1] - d[1] * vm[0]) / math.hypot(vm[0], vm[1])
    if sin_p <= tol:
        return AlignmentClass(Alignment.UNSTABLE, math.asin(min(sin_p, 1.0)))
    if sin_m <= tol:
        return AlignmentClass(Alignment.STABLE, math.asin(min(sin_m, 1.0)))
    return AlignmentClass(Alignment.TRANSVERSE, math.asin(min(sin_p, sin_m, 1.0)))
