"""Hyperbolic integer-matrix maps of the 2-torus.

Covers map iteration, eigendata, exact enumeration of periodic points
(arbitrary-precision integer arithmetic; no floating point enters the
enumeration), and the search for a periodic point on the line carrying a
given segment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numba as nb
import numpy as np

from ..errors import ConfigError, RangeError, UnsupportedSystemError
from ..geometry import LineSegment, wrap

__all__ = [
    "ToralAutomorphism",
    "cat_map",
    "eigen_data",
    "find_periodic_points",
    "periodic_points_exact",
    "PeriodicPointOnLine",
    "segment_periodic_intersection",
]

_MAX_PERIOD = 30
_MAX_ENUMERATION = 5_000_000


def eigen_data(matrix):
    """Eigenvalues and unit eigenvectors of an integer 2x2 matrix.

    Returns (lambda_plus, lambda_minus, v_plus, v_minus) with
    lambda_plus > 1 > lambda_minus > 0. Raises UnsupportedSystemError for
    matrices that are not hyperbolic with two positive eigenvalues (the
    only class handled by the closed-form predictions).
    """
    m = np.asarray(matrix)
    if m.shape != (2, 2) or not np.all(m == np.round(m)):
        raise ConfigError("matrix must be 2x2 with integer entries")
    a, b, c, d = (int(m[0, 0]), int(m[0, 1]), int(m[1, 0]), int(m[1, 1]))
    det = a * d - b * c
    if abs(det) != 1:
        raise UnsupportedSystemError(f"matrix determinant must be +-1, got {det}")
    tr = a + d
    disc = tr * tr - 4 * det
    if disc <= 0:
        raise UnsupportedSystemError("matrix is not hyperbolic (trace^2 <= 4 det)")
    sq = math.sqrt(disc)
    lam_plus = (tr + sq) / 2.0
    lam_minus = (tr - sq) / 2.0
    if lam_minus <= 0.0:
        raise UnsupportedSystemError(
            "matrix has a non-positive eigenvalue; only positive-spectrum "
            "automorphisms are supported"
        )

    def unit_eigvec(lam):
        if b != 0:
            v = np.array([b, lam - a], dtype=float)
        elif c != 0:
            v = np.array([lam - d, c], dtype=float)
        else:
            raise UnsupportedSystemError("diagonal matrix cannot be hyperbolic")
        v = v / math.hypot(v[0], v[1])
        if v[0] < 0 or (v[0] == 0 and v[1] < 0):
            v = -v
        return v

    return lam_plus, lam_minus, unit_eigvec(lam_plus), unit_eigvec(lam_minus)


@dataclass(frozen=True)
class ToralAutomorphism:
    """Integer matrix acting on the 2-torus, with |det| = 1 and two positive
    real eigenvalues off the unit circle."""

    matrix: np.ndarray
    lambda_plus: float
    lambda_minus: float
    v_plus: np.ndarray
    v_minus: np.ndarray

    @classmethod
    def from_matrix(cls, matrix) -> "ToralAutomorphism":
        lp, lm, vp, vm = eigen_data(matrix)
        m = np.asarray(matrix, dtype=np.int64).reshape(2, 2)
        m.setflags(write=False)
        obj = cls(matrix=m, lambda_plus=lp, lambda_minus=lm, v_plus=vp, v_minus=vm)
        resid = np.abs(m @ vp - lp * vp).max()
        if resid > 1e-12:
            raise UnsupportedSystemError(f"eigenvector residual {resid:g} too large")
        return obj

    @property
    def dim(self) -> int:
        return 2

    def step(self, x):
        """One application of the map: wrap(matrix @ x)."""
        return wrap(np.asarray(x, dtype=float) @ self.matrix.T)

    def orbit(self, x0, n: int) -> np.ndarray:
        """States (n, 2) starting at x0 (the orbit includes x0 itself)."""
        return self.orbit_batch(np.asarray(x0, dtype=float).reshape(1, 2), n)[:, 0, :]

    def advance_batch(self, x, n: int, streams=None, out=None):
        """Advance a batch (B, 2) by n steps in place, recording the states
        before each step into ``out`` (n, B, 2) when given. Returns x."""
        a, b = float(self.matrix[0, 0]), float(self.matrix[0, 1])
        c, d = float(self.matrix[1, 0]), float(self.matrix[1, 1])
        record = out is not None
        if not record:
            out = np.empty((0, x.shape[0], 2))
        _toral_advance_kernel(a, b, c, d, x, n, out, record)
        return x

    def orbit_batch(self, x0s, n: int) -> np.ndarray:
        """States (n, B, 2) for a batch of initial conditions (B, 2)."""
        x = wrap(np.asarray(x0s, dtype=float).reshape(-1, 2)).copy()
        out = np.empty((n, x.shape[0], 2))
        self.advance_batch(x, n, out=out)
        return out


def cat_map() -> ToralAutomorphism:
    """The standard [[2, 1], [1, 1]] automorphism."""
    return ToralAutomorphism.from_matrix([[2, 1], [1, 1]])


@nb.njit(cache=True)
def _toral_advance_kernel(a, b, c, d, xs, n, out, record):  # pragma: no cover
    B = xs.shape[0]
    for bi in range(B):
        x = xs[bi, 0]
        y = xs[bi, 1]
        for t in range(n):
            if record:
                out[t, bi, 0] = x
                out[t, bi, 1] = y
            xn = (a * x + b * y) % 1.0
            yn = (c * x + d * y) % 1.0
            if xn >= 1.0:
                xn = 0.0
            if yn >= 1.0:
                yn = 0.0
            x = xn
            y = yn
        xs[bi, 0] = x
        xs[bi, 1] = y


# ---------------------------------------------------------------------------
# exact periodic point enumeration


def _mat_pow_int(m, q):
    """q-th power of a 2x2 integer matrix using Python integers."""
    a, b, c, d = m
    ra, rb, rc, rd = 1, 0, 0, 1
    for _ in range(q):
        ra, rb, rc, rd = (
            a * ra + b * rc,
            a * rb + b * rd,
            c * ra + d * rc,
            c * rb + d * rd,
        )
    return ra, rb, rc, rd


def _snf_2x2(m):
    """Smith normal form of a nonsingular integer 2x2 matrix.

    Returns (s1, s2, V) with s1, s2 > 0, s1 | s2 and U M V = diag(s1, s2)
    for some unimodular U (not tracked). Column operations are recorded in
    V so that solutions of M x = 0 (mod 1) are x = V y with
    y in (1/s1)Z x (1/s2)Z.
    """
    A = [[m[0], m[1]], [m[2], m[3]]]
    V = [[1, 0], [0, 1]]

    def swap_cols():
        A[0][0], A[0][1] = A[0][1], A[0][0]
        A[1][0], A[1][1] = A[1][1], A[1][0]
        V[0][0], V[0][1] = V[0][1], V[0][0]
        V[1][0], V[1][1] = V[1][1], V[1][0]

    def addmul_col(dst, src, k):
        A[0][dst] += k * A[0][src]
        A[1][dst] += k * A[1][src]
        V[0][dst] += k * V[0][src]
        V[1][dst] += k * V[1][src]

    for _ in range(10_000):
        if A[0][0] == 0:
            if A[1][0] != 0:
                A[0], A[1] = A[1], A[0]
            elif A[0][1] != 0:
                swap_cols()
            else:
                A[0], A[1] = A[1], A[0]
                swap_cols()
        if A[1][0] != 0:
            qq = A[1][0] // A[0][0]
            A[1][0] -= qq * A[0][0]
            A[1][1] -= qq * A[0][1]
            if A[1][0] != 0:
                A[0], A[1] = A[1], A[0]
            continue
        if A[0][1] != 0:
            qq = A[0][1] // A[0][0]
            addmul_col(1, 0, -qq)
            if A[0][1] != 0:
                swap_cols()
            continue
        if A[1][1] % A[0][0] != 0:
            addmul_col(0, 1, 1)
            continue
        break
    else:  # pragma: no cover
        raise RuntimeError("Smith normal form did not terminate")

    s1, s2 = A[0][0], A[1][1]
    if s1 < 0:
        s1 = -s1
        V[0][0], V[1][0] = -V[0][0], -V[1][0]
    if s2 < 0:
        s2 = -s2
        V[0][1], V[1][1] = -V[0][1], -V[1][1]
    return s1, s2, V


def periodic_points_exact(T: ToralAutomorphism, q: int):
    """All x with T^q x = x, as exact rationals.

    Returns (numerators, denominator): an (N, 2) integer array and the
    common denominator s, so the points are numerators / s in [0, 1)^2.
    N equals |det(T^q - I)|.
    """
    if q < 1:
        raise ConfigError("period q must be >= 1")
    if q > _MAX_PERIOD:
        raise RangeError(f"period q={q} above the cap {_MAX_PERIOD}")
    a, b = int(T.matrix[0, 0]), int(T.matrix[0, 1])
    c, d = int(T.matrix[1, 0]), int(T.matrix[1, 1])
    pa, pb, pc, pd = _mat_pow_int((a, b, c, d), q)
    m = (pa - 1, pb, pc, pd - 1)
    det = m[0] * m[3] - m[1] * m[2]
    if det == 0:
        raise UnsupportedSystemError("T^q - I is singular")
    count = abs(det)
    if count > _MAX_ENUMERATION:
        raise RangeError(
            f"{count} periodic points at period {q}: above enumeration cap"
        )
    s1, s2, V = _snf_2x2(m)
    assert s1 * s2 == count and s2 % s1 == 0

    # x = V y mod 1 with y=(i/s1, j/s2); scale by s2 so everything is integer
    step0 = s2 // s1
    if max(abs(V[0][0]), abs(V[0][1]), abs(V[1][0]), abs(V[1][1])) * s2 < 2**62:
        i = np.arange(s1, dtype=np.int64) * step0
        j = np.arange(s2, dtype=np.int64)
        y0 = np.repeat(i, s2)
        y1 = np.tile(j, s1)
        n0 = (V[0][0] * y0 + V[0][1] * y1) % s2
        n1 = (V[1][0] * y0 + V[1][1] * y1) % s2
        nums = np.stack([n0, n1], axis=1)
    else:  # pragma: no cover - only reachable near the enumeration cap
        rows = []
        for ii in range(s1):
            for jj in range(s2):
                y0, y1 = ii * step0, jj
                rows.append(
                    (
                        (V[0][0] * y0 + V[0][1] * y1) % s2,
                        (V[1][0] * y0 + V[1][1] * y1) % s2,
                    )
                )
        nums = np.array(rows, dtype=np.int64)

    # exact verification: (T^q - I) x must be integral
    chk0 = (m[0] * nums[:, 0] + m[1] * nums[:, 1]) % s2
    chk1 = (m[2] * nums[:, 0] + m[3] * nums[:, 1]) % s2
    if np.any(chk0) or np.any(chk1):  # pragma: no cover - internal consistency
        raise RuntimeError("periodic point enumeration failed verification")
    return nums, s2


def find_periodic_points(T: ToralAutomorphism, q: int) -> np.ndarray:
    """All fixed points of T^q as floats, lexicographically sorted (N, 2).

    Includes points whose prime period strictly divides q.
    """
    nums, den = periodic_points_exact(T, q)
    pts = nums.astype(float) / den
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    return pts[order]


def _prime_period_mask(T, q, nums, den):
    """True for points whose prime period is exactly q."""
    mask = np.ones(len(nums), dtype=bool)
    a, b = int(T.matrix[0, 0]), int(T.matrix[0, 1])
    c, d = int(T.matrix[1, 0]), int(T.matrix[1, 1])
    for dd in range(1, q):
        if q % dd != 0:
            continue
        pa, pb, pc, pd = _mat_pow_int((a, b, c, d), dd)
        r0 = ((pa - 1) * nums[:, 0] + pb * nums[:, 1]) % den
        r1 = (pc * nums[:, 0] + (pd - 1) * nums[:, 1]) % den
        mask &= (r0 != 0) | (r1 != 0)
    return mask


@dataclass(frozen=True)
class PeriodicPointOnLine:
    """A periodic point found on the full line carrying a segment."""

    point: np.ndarray          # torus representative in [0,1)^2
    q: int                     # prime period
    t: float                   # line parameter (t=0 at p1, t=length at p2)
    on_segment: bool


def segment_periodic_intersection(
    segment: LineSegment,
    T: ToralAutomorphism,
    q_max: int,
    perp_tol: float = 1e-10,
    t_window: float = 4.0,
) -> Optional[PeriodicPointOnLine]:
    """Search periods q = 1..q_max for a periodic point on the line
    through ``segment``.

    The line is the infinite continuation of the lifted segment; lattice
    translates of each periodic point are tested against it within
    ``t_window`` line units beyond either endpoint (the classification of
    the escape-overlap construction only depends on points within one
    segment length of the ends). At most one periodic point can lie on the
    line when the direction is an eigendirection with irrational slope;
    the smallest period is reported.
    """
    if q_max < 1:
        raise ConfigError("q_max must be >= 1")
    p1 = segment.p1
    d = segment.direction
    nvec = np.array([-d[1], d[0]])

    t_lo, t_hi = -t_window, segment.length + t_window
    corners = np.array([p1 + t_lo * d, p1 + t_hi * d])
    k_lo = np.floor(corners.min(axis=0)) - 1
    k_hi = np.ceil(corners.max(axis=0)) + 1
    kx = np.arange(int(k_lo[0]), int(k_hi[0]) + 1)
    ky = np.arange(int(k_lo[1]), int(k_hi[1]) + 1)
    shifts = np.stack(np.meshgrid(kx, ky, indexing="ij"), axis=-1).reshape(-1, 2).astype(float)

    for q in range(1, q_max + 1):
        nums, den = periodic_points_exact(T, q)
        mask = _prime_period_mask(T, q, nums, den)
        if not mask.any():
            continue
        pts = nums[mask].astype(float) / den
        # lifted candidates: every translate of every prime-period-q point
        rel = pts[:, None, :] + shifts[None, :, :] - p1  # (P, K, 2)
        perp = np.abs(rel @ nvec)
        tpar = rel @ d
        hit = (perp < perp_tol) & (tpar >= t_lo) & (tpar <= t_hi)
        if hit.any():
            flat = np.argmin(np.where(hit, perp, np.inf))
            pi, ki = np.unravel_index(flat, perp.shape)
            t = float(tpar[pi, ki])
            return PeriodicPointOnLine(
                point=wrap(pts[pi]),
                q=q,
                t=t,
                on_segment=bool(-1e-9 <= t <= segment.length + 1e-9),
            )
    return None
