"""Continued fractions of the rotation number, with rigorous error enclosures."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import mpmath

from .interval import InconclusiveError, Interval, format_bound, isum

PAPER = "paper-formula"
EXPLICIT = "explicit-quotients"
RATIONAL = "rational"


@dataclass(frozen=True)
class AlphaSpec:
    """Description of a rotation number alpha in (0, 1) by its partial quotients.

    ``paper-formula`` uses a_i = ceil((i + 10) * ln(i)**2) for i >= 2 and
    ``first_quotient`` for a_1 (the formula gives 0 there).  ``explicit``
    quotients are either a finite prefix or, with ``periodic``, repeated
    forever.  ``rational`` stores numerator/denominator.
    """

    kind: str
    quotients: tuple[int, ...] = ()
    periodic: bool = False
    numerator: int = 0
    denominator: int = 1
    first_quotient: int = 1

    def __post_init__(self):
        if self.kind not in (PAPER, EXPLICIT, RATIONAL):
            raise ValueError(f"unknown alpha spec kind {self.kind!r}")
        if self.kind == EXPLICIT:
            if not self.quotients:
                raise ValueError("explicit spec needs at least one quotient")
            bad = [a for a in self.quotients if int(a) != a or a < 1]
            if bad:
                raise ValueError(f"partial quotients must be positive integers, got {bad[0]!r}")
        if self.kind == RATIONAL:
            if self.denominator == 0:
                raise ValueError("rational spec with zero denominator")
            if not 0 < Fraction(self.numerator, self.denominator) < 1:
                raise ValueError("rational alpha must lie strictly between 0 and 1")
        if self.kind == PAPER and self.first_quotient < 1:
            raise ValueError("first_quotient must be a positive integer")

    @classmethod
    def paper(cls, first_quotient: int = 1) -> "AlphaSpec":
        return cls(PAPER, first_quotient=first_quotient)

    @classmethod
    def explicit(cls, quotients: Sequence[int], periodic: bool = False) -> "AlphaSpec":
        return cls(EXPLICIT, tuple(int(a) for a in quotients), periodic=periodic)

    @classmethod
    def rational(cls, numerator: int, denominator: int) -> "AlphaSpec":
        return cls(RATIONAL, numerator=int(numerator), denominator=int(denominator))

    @classmethod
    def golden(cls) -> "AlphaSpec":
        """(sqrt(5) - 1) / 2 = [1, 1, 1, ...]."""
        return cls.explicit([1], periodic=True)

    @classmethod
    def silver(cls) -> "AlphaSpec":
        """sqrt(2) - 1 = [2, 2, 2, ...]."""
        return cls.explicit([2], periodic=True)

    @property
    def is_irrational(self) -> bool:
        return self.kind == PAPER or (self.kind == EXPLICIT and self.periodic)

    @property
    def max_depth(self) -> int | None:
        """Number of available quotients, None when unbounded."""
        if self.is_irrational:
            return None
        if self.kind == EXPLICIT:
            return len(self.quotients)
        return len(_euclid(self.numerator, self.denominator))

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        if self.kind == EXPLICIT:
            d.update(quotients=list(self.quotients), periodic=self.periodic)
        elif self.kind == RATIONAL:
            d.update(numerator=str(self.numerator), denominator=str(self.denominator))
        else:
            d.update(first_quotient=self.first_quotient)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "AlphaSpec":
        kind = d["kind"]
        if kind in ("paper", PAPER):
            return cls.paper(int(d.get("first_quotient", 1)))
        if kind in ("explicit", EXPLICIT):
            return cls.explicit(d["quotients"], periodic=bool(d.get("periodic", False)))
        if kind == "golden":
            return cls.golden()
        if kind == "silver":
            return cls.silver()
        if kind == RATIONAL:
            return cls.rational(int(d["numerator"]), int(d["denominator"]))
        raise ValueError(f"unknown alpha spec kind {kind!r}")


def _euclid(num: int, den: int) -> list[int]:
    # alpha = num/den in (0,1) = [a_1, a_2, ...] with alpha = 1/(a_1 + 1/(a_2 + ...))
    out = []
    num, den = int(num), int(den)
    while num:
        a, r = divmod(den, num)
        out.append(a)
        den, num = num, r
    return out


def paper_quotient(i: int, prec: int = 96) -> int:
    """ceil((i + 10) * ln(i)**2), evaluated with interval logarithms."""
    if i < 2:
        raise ValueError("the closed formula is only used for i >= 2")
    while True:
        val = (Interval(i, prec=prec).log().square()) * (i + 10)
        lo, hi = int(mpmath.ceil(val.lo)), int(mpmath.ceil(val.hi))
        if lo == hi:
            return lo
        prec *= 2
        if prec > 1 << 14:
            raise InconclusiveError(f"cannot resolve ceiling for a_{i}")


def expand_partial_quotients(spec: AlphaSpec, k_max: int) -> list[int]:
    if k_max < 1:
        raise ValueError("k_max must be at least 1")
    if spec.kind == PAPER:
        return [spec.first_quotient] + [paper_quotient(i) for i in range(2, k_max + 1)]
    if spec.kind == RATIONAL:
        return _euclid(spec.numerator, spec.denominator)[:k_max]
    if spec.periodic:
        n = len(spec.quotients)
        return [spec.quotients[i % n] for i in range(k_max)]
    return list(spec.quotients[:k_max])


@dataclass(frozen=True)
class ConvergentTable:
    """Convergents p_k/q_k and enclosures of beta_k = |q_k alpha - p_k| for k = 0..k_max.

    ``quotients[k - 1]`` is a_k.  ``alpha`` encloses every number whose
    expansion starts with the quotients used to seed the table.
    """

    quotients: tuple[int, ...]
    p: tuple[int, ...]
    q: tuple[int, ...]
    beta: tuple[Interval, ...]
    alpha: Interval
    alpha_bounds: tuple[Fraction, Fraction]
    precision: int
    spec: AlphaSpec | None = field(default=None, compare=False)

    @property
    def k_max(self) -> int:
        return len(self.q) - 1

    def a(self, k: int) -> int:
        return self.quotients[k - 1]


def _alpha_bounds(quotients: Sequence[int], exact: bool) -> tuple[Fraction, Fraction]:
    p_prev, q_prev, p_cur, q_cur = 1, 0, 0, 1
    for a in quotients:
        p_prev, q_prev, p_cur, q_cur = p_cur, q_cur, a * p_cur + p_prev, a * q_cur + q_prev
    first = Fraction(p_cur, q_cur)
    if exact:
        return first, first
    # Every number with this prefix lies between p_n/q_n and (p_n+p_{n-1})/(q_n+q_{n-1}).
    second = Fraction(p_cur + p_prev, q_cur + q_prev)
    return min(first, second), max(first, second)


def convergents(quotients: Sequence[int]) -> tuple[list[int], list[int]]:
    """(p, q) for k = 0..n from quotients a_1..a_n; p_0 = 0, q_0 = 1."""
    p, q = [0], [1]
    p_prev, q_prev = 1, 0
    for a in quotients:
        if int(a) < 1:
            raise ValueError("partial quotients must be positive integers")
        p_new, q_new = a * p[-1] + p_prev, a * q[-1] + q_prev
        p_prev, q_prev = p[-1], q[-1]
        p.append(p_new)
        q.append(q_new)
    return p, q


def convergents_with_errors(
    quotients: Sequence[int],
    precision: int = 256,
    k_max: int | None = None,
    rtol: float = 1e-12,
    exact: bool = False,
    spec: AlphaSpec | None = None,
) -> ConvergentTable:
    """Build the table from ``quotients``; rows up to ``k_max`` are reported.

    Alpha is enclosed by the whole quotient list (``exact`` means the list is
    a complete expansion of a rational).  beta_k follows the subtraction
    recurrence beta_{k+1} = beta_{k-1} - a_{k+1} beta_k in interval arithmetic.
    Raises InconclusiveError if some reported beta_k is wider than ``rtol``
    relative to its size.
    """
    if precision < 64:
        raise ValueError("precision must be at least 64 bits")
    quotients = [int(a) for a in quotients]
    if not quotients or min(quotients) < 1:
        raise ValueError("partial quotients must be positive integers")
    n = len(quotients)
    if k_max is None:
        k_max = n - 1 if exact else n - 2
    if k_max < 1 or k_max > n - (1 if exact else 0):
        raise ValueError(f"k_max={k_max} not supported by {n} quotients")

    p = [0, 1]
    q = [1, quotients[0]]
    for k in range(1, k_max):
        a = quotients[k]
        p.append(a * p[k] + p[k - 1])
        q.append(a * q[k] + q[k - 1])

    lo, hi = _alpha_bounds(quotients, exact)
    alpha = Interval(lo, hi, prec=precision)
    beta = [alpha, 1 - alpha * quotients[0]]
    for k in range(1, k_max):
        beta.append(beta[k - 1] - beta[k] * quotients[k])

    for k, b in enumerate(beta):
        if not b.is_positive():
            raise InconclusiveError(f"beta_{k} enclosure is not strictly positive; raise precision")
        if b.rel_width() > rtol:
            raise InconclusiveError(
                f"beta_{k} relative width {float(b.rel_width()):.3g} exceeds {rtol:g}; raise precision"
            )
        if k and b.compare(beta[k - 1]) != -1:
            raise InconclusiveError(f"beta_{k} not separated from beta_{k - 1}")
    return ConvergentTable(
        quotients=tuple(quotients[:k_max]),
        p=tuple(p),
        q=tuple(q),
        beta=tuple(beta),
        alpha=alpha,
        alpha_bounds=(lo, hi),
        precision=precision,
        spec=spec,
    )


def build_table(
    spec: AlphaSpec, k_max: int, precision: int = 256, rtol: float = 1e-12
) -> ConvergentTable:
    """Table for ``spec`` up to ``k_max``, escalating seed depth and precision as needed."""
    depth_cap = spec.max_depth
    exact = spec.kind == RATIONAL
    if depth_cap is not None:
        k_max = min(k_max, depth_cap - 1)
        if k_max < 1:
            raise ValueError("spec has too few quotients for a table")
    margin = 8
    for _ in range(12):
        depth = k_max + margin if depth_cap is None else depth_cap
        quotients = expand_partial_quotients(spec, depth)
        q_lo, q_hi = 1, quotients[0]
        for a in quotients[1 : k_max + 1]:
            q_lo, q_hi = q_hi, a * q_hi + q_lo
        # The recurrence loses about log2(q_k q_{k+1}) bits of absolute accuracy.
        prec = max(precision, 2 * q_hi.bit_length() + 64 + int(-math.log2(rtol)))
        try:
            return convergents_with_errors(quotients, prec, k_max, rtol, exact=exact, spec=spec)
        except InconclusiveError:
            if depth_cap is not None:
                raise
            margin *= 2
    raise InconclusiveError("could not reach the requested tolerance")


@dataclass(frozen=True)
class GoodBound:
    ok: bool
    lower_margin: Interval  # beta_k - 1/(q_{k+1} + q_k)
    upper_margin: Interval  # 1/(a_{k+1} q_k) - beta_k


def good_bound_limits(table: ConvergentTable, k: int) -> tuple[Fraction, Fraction]:
    q = table.q
    return Fraction(1, q[k + 1] + q[k]), Fraction(1, table.a(k + 1) * q[k])


def check_good_bound(table: ConvergentTable, k: int) -> GoodBound:
    """Is 1/(q_{k+1} + q_k) < beta_k < 1/(a_{k+1} q_k) as a strict interval inclusion?"""
    if not 0 <= k <= table.k_max - 1:
        raise ValueError(f"k={k} needs k+1 <= k_max={table.k_max}")
    lower, upper = good_bound_limits(table, k)
    prec = table.precision + 64
    b = table.beta[k]
    lo_margin = b - Interval(lower, prec=prec)
    hi_margin = Interval(upper, prec=prec) - b
    signs = (lo_margin.compare(0), hi_margin.compare(0))
    if None in signs:
        raise InconclusiveError(f"good-bound margins for k={k} straddle zero; raise precision")
    return GoodBound(signs == (1, 1), lo_margin, hi_margin)


def tail_bound(table: ConvergentTable) -> Interval:
    """Upper bound for sum_{i > k_max} 2 beta_i.

    beta_K >= beta_{K+1} + beta_{K+2} and beta_{i+2} < beta_i / 2 give
    sum_{i > K} beta_i <= 2 beta_K.
    """
    return Interval(0, table.beta[-1].hi * 4, prec=table.precision)


def slit_tail_sum(
    table: ConvergentTable, k: int, step: int = 1, rtol: float | None = None
) -> Interval:
    """Enclosure of S_k = sum_{i >= k, i = k mod step} 2 beta_i."""
    if not 0 <= k <= table.k_max:
        raise ValueError(f"k={k} outside table")
    terms = [table.beta[i] * 2 for i in range(k, table.k_max + 1, step)]
    total = isum(terms, prec=table.precision) + tail_bound(table)
    if rtol is not None and total.rel_width() > rtol:
        raise InconclusiveError(f"tail bound too large for S_{k} at k_max={table.k_max}")
    return total


def quotient_tail_bound(spec: AlphaSpec, K: int):
    """Upper bound for sum_{k > K} 2 / a_{k+1}; inf if the series diverges, None if unknown."""
    if spec.kind == RATIONAL:
        return mpmath.mpf(0)
    if spec.kind == EXPLICIT:
        return mpmath.inf if spec.periodic else None
    # a_{k+1} >= (k+1) ln^2(k+1), and sum_{m >= K+2} 2/(m ln^2 m) <= 2/ln(K+1).
    if K < 1:
        raise ValueError("analytic tail bound needs K >= 1")
    prec = max(64, (K + 1).bit_length() + 64)
    log_lower = Interval(K + 1, prec=prec).log().lo
    bound = Interval(2, prec=prec) / Interval(log_lower, prec=prec)
    return bound.hi


def summability_horizon(spec: AlphaSpec, tol: float) -> int | None:
    """Smallest explicit K with quotient_tail_bound(spec, K) <= tol (None if not attainable)."""
    if spec.kind == RATIONAL:
        return 1
    if spec.kind != PAPER:
        return None
    # 2/ln(K+1) <= tol  <=>  K + 1 >= exp(2/tol)
    x = Fraction(2) / Fraction(tol)
    prec = 64 + int(2 * float(x))
    while True:
        e = Interval(x, prec=prec).exp()
        lo, hi = int(mpmath.ceil(e.lo)), int(mpmath.ceil(e.hi))
        if lo == hi:
            return max(1, hi - 1)
        prec *= 2


@dataclass(frozen=True)
class VeechSum:
    partial: tuple[Interval, ...]  # partial[K-1] encloses sum_{k=1..K} 2 q_k beta_k
    term_ok: tuple[bool, ...]  # 2 q_k beta_k < 2 / a_{k+1}
    tail_bound: object  # bound on sum_{k > K} 2/a_{k+1} at K = len(partial)
    horizon: int | None  # explicit K with tail <= tol
    verdict: str  # "summable", "divergent" or "unknown"


def veech_sum(table: ConvergentTable, k_max: int | None = None, tol: float = 1e-3) -> VeechSum:
    """Partial sums of 2 q_k beta_k with the analytic tail from the quotient growth."""
    K = table.k_max - 1 if k_max is None else k_max
    if not 1 <= K <= table.k_max - 1:
        raise ValueError("k_max must leave room for a_{k+1}")
    running = Interval(0, prec=table.precision)
    partial, ok = [], []
    for k in range(1, K + 1):
        term = table.beta[k] * (2 * table.q[k])
        running = running + term
        partial.append(running)
        ok.append(term.compare(Interval(Fraction(2, table.a(k + 1)), prec=table.precision)) == -1)
    spec = table.spec
    tail = quotient_tail_bound(spec, K) if spec is not None else None
    horizon = summability_horizon(spec, tol) if spec is not None else None
    if tail is None:
        verdict = "unknown"
    elif tail == mpmath.inf:
        verdict = "divergent"
    else:
        verdict = "summable" if horizon is not None else "unknown"
    return VeechSum(tuple(partial), tuple(ok), tail, horizon, verdict)


def rotation_distance_min(table: ConvergentTable, n: int) -> tuple[Fraction, Fraction, int, Fraction]:
    """Brute force min_{0 < i <= n} ||i alpha|| over the whole alpha enclosure.

    Only the rational endpoints of the alpha enclosure are used, never beta.
    Returns ``(lower, upper, argmin, runner_up_lower)``: exact bounds for the
    minimum, the minimizing i, and a lower bound for ||i alpha|| over every
    other i (so ``upper < runner_up_lower`` certifies a unique minimizer).
    """
    if n < 1:
        raise ValueError("n must be positive")
    a, b = table.alpha_bounds[0].numerator, table.alpha_bounds[0].denominator
    slack = (table.alpha_bounds[1] - table.alpha_bounds[0]) * n
    # ||i x|| is n-Lipschitz on the enclosure, so the alpha_lo endpoint decides
    # everything up to ``slack``.
    best = second = None
    best_i = 0
    for i in range(1, n + 1):
        r = (i * a) % b
        r = min(r, b - r)
        if best is None or r < best:
            best, second, best_i = r, best, i
        elif second is None or r < second:
            second = r
    low = max(Fraction(0), Fraction(best, b) - slack)
    high = Fraction(best, b) + slack
    runner = Fraction(1, 2) if second is None else max(Fraction(0), Fraction(second, b) - slack)
    return low, high, best_i, runner


def check_three_distance(table: ConvergentTable, k: int) -> bool:
    """min_{0 < i <= q_k - 1} ||i alpha|| equals beta_{k-1}, attained only at i = q_{k-1}."""
    if not 2 <= k <= table.k_max:
        raise ValueError("k outside table (need 2 <= k <= k_max)")
    lo, hi, argmin, runner = rotation_distance_min(table, table.q[k] - 1)
    b = table.beta[k - 1]
    overlap = Interval(lo, hi, prec=table.precision).compare(b) is None
    return overlap and argmin == table.q[k - 1] and hi < runner


def table_rows(table: ConvergentTable, digits: int = 20) -> list[dict]:
    rows = []
    for k in range(1, table.k_max):
        b = table.beta[k]
        rows.append(
            {
                "k": k,
                "a_k": table.a(k),
                "q_k": str(table.q[k]),
                "beta_lower": format_bound(b.lo, digits, "down"),
                "beta_upper": format_bound(b.hi, digits, "up"),
                "good_bound_ok": str(check_good_bound(table, k).ok).lower(),
            }
        )
    return rows


def table_to_csv(table: ConvergentTable, digits: int = 20) -> str:
    buf = io.StringIO()
    fields = ["k", "a_k", "q_k", "beta_lower", "beta_upper", "good_bound_ok"]
    writer = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    writer.writeheader()
    writer.writerows(table_rows(table, digits))
    return buf.getvalue()
