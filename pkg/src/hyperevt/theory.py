"""Closed-form extremal-index predictions for the three system classes.

Toral case summary (segment L, expanding factor lambda = lambda_plus^q at
the relevant period q):

* transverse segment: theta = 1;
* aligned segment whose full line carries no periodic point: theta = 1
  (certified only up to the searched period, hence flagged inconclusive);
* aligned segment containing a point of prime period q: theta = 1 - lambda^-q;
* aligned segment whose line continuation carries the periodic point off
  the segment: theta = 1 when the linearised q-step image misses the
  segment, otherwise the escape-fraction value below, always inside
  [1 - lambda^-q, 1].

The escape-fraction value measures, in the q-step linearisation around the
periodic point, the fraction of the exceedance strip not mapped back into
itself. For the stable alignment an alternative endpoint form
1 - lambda^-q (b - lambda^-q a)/(b - a) is also reported in the detail
payload; the two disagree away from the a -> 0 limit and the Monte-Carlo
escape-rate probe (diagnostics.aq_ratio) is the arbiter between them.

Coupled maps use the constant-density form
theta = 1 - ((1-gamma) * slope)^-exponent with exponent = number of
expanding directions transverse to the synchrony set: m-1 for the full
diagonal and sum_i (k_i - 1) for blocks of sizes k_i.
"""

from __future__ import annotations
from dataclasses import dataclass, field
from typing import Optional

from .errors import ConfigError, UnsupportedSystemError
from .geometry import Alignment, LineSegment, classify_alignment
from .observables import ObservableKind, ObservableSpec
from .systems.billiard import BilliardTable
from .systems.coupled import CoupledMapSystem
from .systems.toral import ToralAutomorphism, segment_periodic_intersection

__all__ = [
    "ThetaPrediction",
    "escape_overlap_theta",
    "predict_theta_toral",
    "predict_theta_coupled",
    "predict_theta_billiard",
    "predict_for",
]


@dataclass(frozen=True)
class ThetaPrediction:
    """Predicted extremal index: a point value plus the guaranteed interval
    [lo, hi] (equal to the point for unconditional cases)."""

    value: float
    lo: float
    hi: float
    case_label: str
    detail: dict = field(default_factory=dict)
    inconclusive: bool = False

    def __post_init__(self):
        if not (0.0 <= self.lo <= self.value <= self.hi <= 1.0):
            raise ConfigError(
                f"prediction {self.value} outside its interval [{self.lo}, {self.hi}]"
            )

    def as_dict(self) -> dict:
        return {
            "theta": self.value,
            "lo": self.lo,
            "hi": self.hi,
            "case": self.case_label,
            "inconclusive": self.inconclusive,
            "detail": dict(self.detail),
        }


def escape_overlap_theta(a: float, b: float, lam_q: float, stable: bool) -> float:
    """Escape fraction of the strip over [a, b] under the q-step
    linearisation fixing 0 (line coordinates relative to the periodic
    point; a < b, lam_q = lambda^q > 1).

    Along the expanding alignment a point at coordinate t returns to the
    strip iff lam_q * t stays in [a, b]; along the contracting alignment
    iff t / lam_q does, with the strip width shrunk by lam_q.
    """
    if not b > a:
        raise ConfigError("need a < b")
    if not lam_q > 1.0:
        raise ConfigError("expansion factor must exceed 1")
    if stable:
        lo, hi = lam_q * a, lam_q * b
        width = 1.0 / lam_q
    else:
        lo, hi = a / lam_q, b / lam_q
        width = 1.0
    overlap = max(0.0, min(b, hi) - max(a, lo))
    return 1.0 - width * overlap / (b - a)


def predict_theta_toral(
    T: ToralAutomorphism,
    segment: LineSegment,
    q_max: int = 12,
    alignment_tol: float = 1e-9,
    t_window: float = 4.0,
) -> ThetaPrediction:
    """Extremal index for -log distance to a segment on the 2-torus."""
    cls = classify_alignment(segment, T.v_plus, T.v_minus, tol=alignment_tol)
    if cls.is_transverse:
        return ThetaPrediction(
            1.0, 1.0, 1.0, "toral-transverse",
            {"angle_to_eigendirection": cls.angle_to_eigendirection},
        )

    stable = cls.tag is Alignment.STABLE
    hit = segment_periodic_intersection(segment, T, q_max=q_max, t_window=t_window)
    base = {"alignment": cls.tag.value, "lambda": T.lambda_plus, "q_max": q_max}
    if hit is None:
        return ThetaPrediction(
            1.0, 1.0, 1.0, "toral-aligned-no-periodic-point",
            {**base, "note": f"no periodic point found on the line up to period {q_max}"},
            inconclusive=True,
        )

    lam_q = T.lambda_plus ** hit.q
    floor = 1.0 - 1.0 / lam_q
    detail = {**base, "q": hit.q, "periodic_point": tuple(hit.point), "t": hit.t}
    if hit.on_segment:
        return ThetaPrediction(
            floor, floor, floor, "toral-aligned-periodic-on-segment", detail
        )

    # periodic point on the continuation only: reduce to line coordinates
    # 0 < a < b relative to the periodic point (reflect if it lies beyond p2)
    a = -hit.t
    b = segment.length - hit.t
    if b <= 0.0:
        a, b = -b, -a
    detail.update({"a": a, "b": b})
    if lam_q * a >= b:
        return ThetaPrediction(
            1.0, 1.0, 1.0, "toral-aligned-continuation-disjoint", detail
        )
    value = escape_overlap_theta(a, b, lam_q, stable)
    if stable:
        alt = 1.0 - (b - a / lam_q) / (lam_q * (b - a))
        detail.update(
            {
                "stable_escape_value": value,
                "stable_endpoint_form_value": alt,
                "stable_form_discrepancy": value - alt,
                "arbiter": "diagnostics.aq_ratio",
            }
        )
    value = min(max(value, floor), 1.0)
    return ThetaPrediction(
        value, floor, 1.0, "toral-aligned-continuation-overlap", detail
    )


def predict_theta_coupled(
    m: int,
    gamma: float,
    slope: float,
    blocks=None,
    block_size: Optional[int] = None,
) -> ThetaPrediction:
    """Extremal index for synchrony observables of the coupled lattice,
    under the flat invariant-density approximation (exact for linear
    integer-slope base maps).

    ``blocks`` may list site tuples or block sizes; ``block_size`` is the
    single-block shorthand. Without either, the full diagonal (exponent
    m - 1) is assumed.
    """
    if m < 2:
        raise ConfigError("m must be >= 2")
    if not 0.0 < gamma < 1.0:
        raise ConfigError("gamma must lie in (0, 1)")
    rate = (1.0 - gamma) * slope
    if rate <= 1.0:
        raise ConfigError(
            f"(1-gamma)*slope = {rate:.4g} <= 1: no expansion transverse to the "
            "synchrony set, prediction invalid"
        )
    if blocks is not None and block_size is not None:
        raise ConfigError("give either blocks or block_size, not both")
    if block_size is not None:
        blocks = [block_size]
    if blocks is None:
        sizes = [m]
        label = "coupled-full-sync"
    else:
        sizes = [b if isinstance(b, int) else len(b) for b in blocks]
        label = "coupled-block-sync"
        if sum(sizes) > m:
            raise ConfigError("blocks use more sites than the lattice has")
    for k in sizes:
        if not 2 <= k <= m:
            raise ConfigError(f"block size {k} outside [2, m]")
    exponent = sum(k - 1 for k in sizes)
    value = 1.0 - rate ** (-exponent)
    return ThetaPrediction(
        value, value, value, label,
        {"m": m, "gamma": gamma, "slope": slope, "exponent": exponent,
         "transverse_rate": rate},
    )


def predict_theta_billiard(transverse: bool = True) -> ThetaPrediction:
    """Extremal index 1 for a boundary line uniformly transverse to the
    stable and unstable cones. Cone-aligned curves are outside the proved
    range and are rejected."""
    if not transverse:
        raise UnsupportedSystemError(
            "only lines transverse to the stable/unstable cones are supported"
        )
    return ThetaPrediction(1.0, 1.0, 1.0, "billiard-transverse-line", {})


def predict_for(system, obs: ObservableSpec, q_max: int = 12,
                alignment_tol: float = 1e-9) -> Optional[ThetaPrediction]:
    """Prediction matching a (system, observable) pair, or None when no
    closed form applies."""
    if isinstance(system, ToralAutomorphism) and obs.segment is not None:
        return predict_theta_toral(system, obs.segment, q_max=q_max,
                                   alignment_tol=alignment_tol)
    if isinstance(system, CoupledMapSystem):
        if obs.kind is ObservableKind.NEG_LOG_PERP:
            return predict_theta_coupled(system.m, system.gamma, system.base_slope)
        if obs.kind is ObservableKind.NEG_LOG_BLOCK_PERP:
            return predict_theta_coupled(
                system.m, system.gamma, system.base_slope, blocks=obs.blocks
            )
    if isinstance(system, BilliardTable) and obs.boundary_line is not None:
        return predict_theta_billiard(transverse=True)
    return None
