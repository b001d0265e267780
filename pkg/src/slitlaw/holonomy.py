"""Holonomy vectors and their lengths along the Teichmueller flow g_t = diag(e^t, e^-t)."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Sequence

import mpmath

from .interval import DEFAULT_PREC, Interval, as_interval


@dataclass(frozen=True)
class Holonomy:
    """Period vector (horizontal, vertical) with both components stored as enclosures.

    Components are canonicalized to absolute values: lengths only see |h|, |v|.
    """

    h: Interval
    v: Interval

    @classmethod
    def of(cls, h, v, prec: int = DEFAULT_PREC) -> "Holonomy":
        return cls(abs(as_interval(h, prec)), abs(as_interval(v, prec)))

    def scaled(self, c) -> "Holonomy":
        c = as_interval(c, self.h.prec)
        return Holonomy(self.h * c, self.v * c)

    def with_prec(self, prec: int) -> "Holonomy":
        return Holonomy(self.h.with_prec(prec), self.v.with_prec(prec))

    def log_components(self) -> tuple[float, float]:
        """(ln h, ln v) from the midpoints; -inf for a zero component."""
        return _safe_log(self.h), _safe_log(self.v)


def _safe_log(x: Interval) -> float:
    m = x.mid()
    return float(mpmath.log(m)) if m > 0 else -math.inf


def flow_length(hol: Holonomy, t) -> Interval:
    """sqrt((e^t h)^2 + (e^-t v)^2)."""
    t = as_interval(t, hol.h.prec)
    et = t.exp()
    e_t = (-t).exp()
    return ((hol.h * et).square() + (hol.v * e_t).square()).sqrt()


@dataclass(frozen=True)
class MinLength:
    time: Interval | None  # None when there is no interior minimum
    length: Interval | None
    decay: str | None = None  # "decreasing" (h = 0) or "increasing" (v = 0) in t


def min_length_time(hol: Holonomy) -> MinLength:
    """Time t* = ln(v/h)/2 where the length is minimal, and L* = sqrt(2 h v).

    A purely vertical or horizontal vector never reaches a minimum: the
    length is e^-t v (strictly decreasing) or e^t h (strictly increasing).
    """
    h_zero = hol.h.compare(0) != 1
    v_zero = hol.v.compare(0) != 1
    if h_zero and v_zero:
        raise ValueError("zero holonomy has no length profile")
    if h_zero:
        if hol.h.hi != 0:
            raise ValueError("horizontal component enclosure straddles zero")
        return MinLength(None, None, "decreasing")
    if v_zero:
        if hol.v.hi != 0:
            raise ValueError("vertical component enclosure straddles zero")
        return MinLength(None, None, "increasing")
    t_star = (hol.v / hol.h).log() * Interval(0.5)
    return MinLength(t_star, (hol.h * hol.v * 2).sqrt())


def log_flow_length(log_h, log_v, t):
    """Float (numpy-broadcasting) version of ln(flow_length) for screening."""
    import numpy as np

    return 0.5 * np.logaddexp(2 * (np.asarray(log_h) + t), 2 * (np.asarray(log_v) - t))


@dataclass(frozen=True)
class EnvelopeMin:
    length: Interval
    index: int
    tag: Any
    conclusive: bool  # False if another candidate's enclosure overlaps the minimum


def envelope_min(candidates: Sequence[tuple[Holonomy, Any]], t) -> EnvelopeMin:
    """Pointwise minimum of flow_length over tagged candidates; ties go to the lowest index."""
    if not candidates:
        raise ValueError("empty candidate list")
    lengths = [flow_length(hol, t) for hol, _ in candidates]
    return _pick_min(lengths, candidates, range(len(candidates)))


def _pick_min(lengths, candidates, indices) -> EnvelopeMin:
    indices = list(indices)
    best_pos = 0
    for pos in range(1, len(lengths)):
        if lengths[pos].compare(lengths[best_pos]) == -1:
            best_pos = pos
    best = lengths[best_pos]
    # the minimum of the enclosed values lies in [min lo, min hi]
    lo = min(x.lo for x in lengths)
    hi = min(x.hi for x in lengths)
    value = Interval(lo, hi, prec=best.prec)
    conclusive = all(
        pos == best_pos
        or other.compare(best) == 1
        or (other.lo == best.lo and other.hi == best.hi)
        for pos, other in enumerate(lengths)
    )
    i = indices[best_pos]
    return EnvelopeMin(value, i, candidates[best_pos][1], conclusive)
