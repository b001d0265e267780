"""Closed real intervals with outward (directed) rounding.

Endpoints are mpmath binary floats.  Every operation rounds the lower
endpoint toward -inf and the upper endpoint toward +inf, so the result
contains the exact result of the operation applied to any points of the
operands.  Transcendental functions are additionally widened by a few ulps
because mpmath's elementary functions are not guaranteed to be correctly
rounded.
"""

from __future__ import annotations

import decimal
from fractions import Fraction
from numbers import Rational

import mpmath
from mpmath import libmp

DEFAULT_PREC = 128

_FLOOR = libmp.round_floor
_CEIL = libmp.round_ceiling
_ZERO = libmp.fzero


class InconclusiveError(ArithmeticError):
    """A comparison or rounding step needs more working precision."""


def _to_mpf(x, prec, rnd):
    if isinstance(x, mpmath.mpf):
        return libmp.mpf_pos(x._mpf_, prec, rnd)
    if isinstance(x, bool):
        x = int(x)
    if isinstance(x, int):
        return libmp.from_int(x, prec, rnd)
    if isinstance(x, Rational):
        return libmp.from_rational(int(x.numerator), int(x.denominator), prec, rnd)
    if isinstance(x, float):
        return libmp.from_float(x, prec, rnd)
    if isinstance(x, tuple):
        return libmp.mpf_pos(x, prec, rnd)
    raise TypeError(f"cannot convert {type(x).__name__} to an interval endpoint")


def _widen(lo, hi, prec, ulps=4):
    for _ in range(ulps):
        if lo != _ZERO:
            lo = libmp.mpf_perturb(lo, 1, prec, _FLOOR)
        if hi != _ZERO:
            hi = libmp.mpf_perturb(hi, 0, prec, _CEIL)
    return lo, hi


def mpf_to_fraction(x) -> Fraction:
    """Exact rational value of an mpmath float (raw tuple or mpf)."""
    raw = x._mpf_ if isinstance(x, mpmath.mpf) else x
    sign, man, exp, _ = raw
    if not man:
        if raw not in (libmp.fzero, libmp.fnzero):
            raise ValueError("non-finite value has no rational representation")
        return Fraction(0)
    value = Fraction(int(man)) * (Fraction(2) ** int(exp))
    return -value if sign else value


def format_bound(x, digits: int, direction: str) -> str:
    """Decimal string for ``x`` rounded toward ``direction`` ('down'/'up').

    The rounding is done on the exact binary value, so a lower bound printed
    with ``'down'`` is still a lower bound.
    """
    frac = mpf_to_fraction(x)
    rounding = decimal.ROUND_FLOOR if direction == "down" else decimal.ROUND_CEILING
    ctx = decimal.Context(prec=digits, rounding=rounding)
    value = ctx.divide(decimal.Decimal(frac.numerator), decimal.Decimal(frac.denominator))
    return format(value, "E") if value != 0 else "0"


class Interval:
    """An enclosure ``[lo, hi]`` of a real number."""

    __slots__ = ("_lo", "_hi", "prec")

    def __init__(self, lo, hi=None, prec: int = DEFAULT_PREC):
        if isinstance(lo, Interval) and hi is None:
            self._lo, self._hi = lo._lo, lo._hi
            self.prec = max(prec, lo.prec)
            return
        if hi is None:
            hi = lo
        self.prec = prec
        self._lo = _to_mpf(lo, prec, _FLOOR)
        self._hi = _to_mpf(hi, prec, _CEIL)
        if libmp.mpf_gt(self._lo, self._hi):
            raise ValueError("interval lower endpoint exceeds upper endpoint")

    @classmethod
    def _raw(cls, lo, hi, prec):
        obj = cls.__new__(cls)
        obj._lo, obj._hi, obj.prec = lo, hi, prec
        return obj

    # -- accessors -------------------------------------------------------
    @property
    def lo(self) -> mpmath.mpf:
        return mpmath.mp.make_mpf(self._lo)

    @property
    def hi(self) -> mpmath.mpf:
        return mpmath.mp.make_mpf(self._hi)

    def mid(self) -> mpmath.mpf:
        return mpmath.mp.make_mpf(libmp.mpf_shift(libmp.mpf_add(self._lo, self._hi, self.prec + 2), -1))

    def width(self) -> mpmath.mpf:
        return mpmath.mp.make_mpf(libmp.mpf_sub(self._hi, self._lo, self.prec, _CEIL))

    def rel_width(self) -> mpmath.mpf:
        """Width divided by the smallest absolute value in the interval."""
        if self.contains(0):
            return mpmath.inf
        m = self._lo if libmp.mpf_sign(self._lo) > 0 else libmp.mpf_neg(self._hi)
        return mpmath.mp.make_mpf(libmp.mpf_div(self.width()._mpf_, m, 53, _CEIL))

    def __float__(self) -> float:
        return float(self.mid())

    def log_mid(self) -> float:
        """Natural log of the midpoint as a float; works far outside double range."""
        return float(mpmath.log(self.mid()))

    def is_positive(self) -> bool:
        return libmp.mpf_sign(self._lo) > 0

    def contains(self, x) -> bool:
        if isinstance(x, Interval):
            return libmp.mpf_le(self._lo, x._lo) and libmp.mpf_ge(self._hi, x._hi)
        if isinstance(x, Rational) and not isinstance(x, int):
            f = Fraction(x)
            return mpf_to_fraction(self._lo) <= f <= mpf_to_fraction(self._hi)
        lo = _to_mpf(x, self.prec + 64, _FLOOR)
        hi = _to_mpf(x, self.prec + 64, _CEIL)
        return libmp.mpf_le(self._lo, lo) and libmp.mpf_ge(self._hi, hi)

    def strictly_inside(self, lower: "Interval", upper: "Interval") -> bool:
        return libmp.mpf_gt(self._lo, lower._hi) and libmp.mpf_lt(self._hi, upper._lo)

    def compare(self, other) -> int | None:
        """-1 if certainly below ``other``, 1 if certainly above, None if the enclosures overlap."""
        other = _coerce(other, self.prec)
        if libmp.mpf_lt(self._hi, other._lo):
            return -1
        if libmp.mpf_gt(self._lo, other._hi):
            return 1
        return None

    def hull(self, other: "Interval") -> "Interval":
        prec = max(self.prec, other.prec)
        lo = self._lo if libmp.mpf_le(self._lo, other._lo) else other._lo
        hi = self._hi if libmp.mpf_ge(self._hi, other._hi) else other._hi
        return Interval._raw(lo, hi, prec)

    def with_prec(self, prec: int) -> "Interval":
        return Interval._raw(
            libmp.mpf_pos(self._lo, prec, _FLOOR), libmp.mpf_pos(self._hi, prec, _CEIL), prec
        )

    # -- arithmetic ------------------------------------------------------
    def __neg__(self):
        return Interval._raw(libmp.mpf_neg(self._hi), libmp.mpf_neg(self._lo), self.prec)

    def __pos__(self):
        return self

    def __abs__(self):
        if libmp.mpf_sign(self._lo) >= 0:
            return self
        if libmp.mpf_sign(self._hi) <= 0:
            return -self
        hi = self._hi if libmp.mpf_ge(self._hi, libmp.mpf_neg(self._lo)) else libmp.mpf_neg(self._lo)
        return Interval._raw(_ZERO, hi, self.prec)

    def __add__(self, other):
        other = _coerce(other, self.prec)
        p = max(self.prec, other.prec)
        return Interval._raw(
            libmp.mpf_add(self._lo, other._lo, p, _FLOOR),
            libmp.mpf_add(self._hi, other._hi, p, _CEIL),
            p,
        )

    __radd__ = __add__

    def __sub__(self, other):
        other = _coerce(other, self.prec)
        p = max(self.prec, other.prec)
        return Interval._raw(
            libmp.mpf_sub(self._lo, other._hi, p, _FLOOR),
            libmp.mpf_sub(self._hi, other._lo, p, _CEIL),
            p,
        )

    def __rsub__(self, other):
        return _coerce(other, self.prec) - self

    def __mul__(self, other):
        other = _coerce(other, self.prec)
        p = max(self.prec, other.prec)
        a, b, c, d = self._lo, self._hi, other._lo, other._hi
        lows = [libmp.mpf_mul(x, y, p, _FLOOR) for x in (a, b) for y in (c, d)]
        highs = [libmp.mpf_mul(x, y, p, _CEIL) for x in (a, b) for y in (c, d)]
        return Interval._raw(_min(lows), _max(highs), p)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = _coerce(other, self.prec)
        if other.contains(0):
            raise ZeroDivisionError("divisor interval contains zero")
        p = max(self.prec, other.prec)
        a, b, c, d = self._lo, self._hi, other._lo, other._hi
        lows = [libmp.mpf_div(x, y, p, _FLOOR) for x in (a, b) for y in (c, d)]
        highs = [libmp.mpf_div(x, y, p, _CEIL) for x in (a, b) for y in (c, d)]
        return Interval._raw(_min(lows), _max(highs), p)

    def __rtruediv__(self, other):
        return _coerce(other, self.prec) / self

    def square(self) -> "Interval":
        a = abs(self)
        p = self.prec
        return Interval._raw(
            libmp.mpf_mul(a._lo, a._lo, p, _FLOOR), libmp.mpf_mul(a._hi, a._hi, p, _CEIL), p
        )

    def sqrt(self) -> "Interval":
        if libmp.mpf_sign(self._lo) < 0:
            raise ValueError("sqrt of an interval with negative part")
        p = self.prec
        return Interval._raw(libmp.mpf_sqrt(self._lo, p, _FLOOR), libmp.mpf_sqrt(self._hi, p, _CEIL), p)

    def log(self) -> "Interval":
        if not self.is_positive():
            raise ValueError("log of an interval that is not strictly positive")
        p = self.prec
        lo, hi = _widen(libmp.mpf_log(self._lo, p, _FLOOR), libmp.mpf_log(self._hi, p, _CEIL), p)
        return Interval._raw(lo, hi, p)

    def exp(self) -> "Interval":
        p = self.prec
        lo, hi = _widen(libmp.mpf_exp(self._lo, p, _FLOOR), libmp.mpf_exp(self._hi, p, _CEIL), p)
        if libmp.mpf_sign(lo) < 0:
            lo = _ZERO
        return Interval._raw(lo, hi, p)

    def __repr__(self):
        digits = max(6, min(25, int(self.prec * 0.30103)))
        return (
            f"Interval[{libmp.to_str(self._lo, digits)}, {libmp.to_str(self._hi, digits)}]"
        )


def _coerce(x, prec) -> Interval:
    return x if isinstance(x, Interval) else Interval(x, prec=prec)


def _min(values):
    best = values[0]
    for v in values[1:]:
        if libmp.mpf_lt(v, best):
            best = v
    return best


def _max(values):
    best = values[0]
    for v in values[1:]:
        if libmp.mpf_gt(v, best):
            best = v
    return best


def as_interval(x, prec: int = DEFAULT_PREC) -> Interval:
    return _coerce(x, prec)


def isum(terms, prec: int = DEFAULT_PREC) -> Interval:
    total = Interval(0, prec=prec)
    for term in terms:
        total = total + term
    return total
