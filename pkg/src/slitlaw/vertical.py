"""The vertical flow on the slit surface as a two-sheet skew product over a rotation.

The return map to the union of the two circles y = 0 is

    (x, sheet) -> (x + alpha mod 1, sheet flipped iff x + alpha mod 1 in [x0, x0 + s)).

Long orbits run on integer residues: alpha is replaced by a convergent P/Q
and x by r/Q, so every step is exact integer arithmetic.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import mpmath
import numpy as np

from .interval import Interval, mpf_to_fraction
from .numtheory import ConvergentTable

_CHUNK = 1 << 20
_INT_LIMIT = 1 << 62


class SingularOrbitError(ArithmeticError):
    """The orbit landed exactly on a slit endpoint (a cone point)."""

    def __init__(self, step: int, message: str | None = None):
        super().__init__(message or f"orbit hits a slit endpoint at step {step}")
        self.step = step


@dataclass(frozen=True)
class OrbitState:
    x: Fraction
    sheet: int
    step: int = 0

    def __post_init__(self):
        if not 0 <= self.x < 1:
            raise ValueError("x must lie in [0, 1)")
        if self.sheet not in (0, 1):
            raise ValueError("sheet must be 0 or 1")

    @classmethod
    def of(cls, x, sheet: int) -> "OrbitState":
        # floats are read as their shortest decimal form, so 0.1 means 1/10
        return cls(Fraction(repr(x)) if isinstance(x, float) else Fraction(x), sheet)


@dataclass(frozen=True)
class TwoSheetIET:
    """Rotation by ``alpha`` with a sheet flip on landing in [x0, x0 + slit).

    ``alpha``/``slit`` are exact rationals used by the single-step API.  When
    ``table`` is given they are surrogates for an irrational rotation and long
    runs pick a convergent depth adapted to the orbit length.
    """

    alpha: Fraction
    slit: Fraction
    x0: Fraction = Fraction(0)
    table: ConvergentTable | None = None
    slit_enclosure: Interval | None = None

    def __post_init__(self):
        if not 0 < self.slit < 1:
            raise ValueError("slit length must lie in (0, 1)")
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")

    # -- exact single steps ---------------------------------------------
    def in_slit(self, x: Fraction) -> bool:
        return (x - self.x0) % 1 < self.slit

    def _endpoint(self, x: Fraction) -> bool:
        return x == self.x0 % 1 or x == (self.x0 + self.slit) % 1

    def step(self, state: OrbitState) -> OrbitState:
        y = (state.x + self.alpha) % 1
        if self._endpoint(y):
            raise SingularOrbitError(state.step + 1)
        sheet = state.sheet ^ int(self.in_slit(y))
        return OrbitState(y, sheet, state.step + 1)

    def inverse_step(self, state: OrbitState) -> OrbitState:
        sheet = state.sheet ^ int(self.in_slit(state.x))
        return OrbitState((state.x - self.alpha) % 1, sheet, state.step - 1)

    def iterate_exact(self, state: OrbitState, n: int) -> OrbitState:
        for _ in range(n):
            state = self.step(state)
        return state

    # -- residue systems for long orbits ---------------------------------
    def residue_system(self, n: int, start_x: Fraction | None = None, tol: float = 1e-12) -> "ResidueSystem":
        """Integer model of ``n`` steps.

        Without a table the rotation is exact and the grid is the common
        denominator of alpha, the slit, x0 and the start.  With a table the
        convergent P/Q is the shallowest one whose accumulated drift
        n / (Q q_{K+1}) and start rounding 1/(2Q) are both below ``tol``.
        """
        if self.table is None:
            dens = [self.alpha.denominator, self.slit.denominator, self.x0.denominator]
            if start_x is not None:
                dens.append(start_x.denominator)
            D = math.lcm(*dens)
            if D * _CHUNK >= _INT_LIMIT:
                raise OverflowError("common denominator too large for the integer model")
            return ResidueSystem(
                Q=D,
                P=int(self.alpha * D),
                lo=int(self.x0 * D),
                width=int(self.slit * D),
                exact=True,
                drift=0.0,
                depth=None,
            )
        q = self.table.q
        for K in range(1, len(q) - 1):
            drift = n / (q[K] * q[K + 1])
            # rotation drift and start rounding (1/2Q) both within tol
            if drift <= tol and q[K] * tol >= 0.5 and q[K] > 2 * max(n, 1):
                break
        else:
            raise ValueError("convergent table too shallow for the requested orbit length")
        Q, P = q[K], self.table.p[K]
        if Q * _CHUNK >= _INT_LIMIT:
            raise OverflowError("convergent denominator too large for the integer model")
        # slit width in grid units: r lies in [x0, x0 + s) iff r - x0 Q < s Q
        width = math.ceil(self.slit * Q)
        return ResidueSystem(
            Q=Q,
            P=P,
            lo=round(self.x0 * Q),
            width=width,
            exact=False,
            drift=drift + 1 / (2 * Q),
            depth=K,
        )

    def iterate(self, state: OrbitState, n: int) -> OrbitState:
        """``n`` steps through the integer model (exact without a table)."""
        sys_ = self.residue_system(n, state.x)
        r0 = sys_.snap(state.x)
        res = sys_.run(r0, state.sheet, n, checkpoints=())
        return OrbitState(Fraction(res.final_residue, sys_.Q), res.final_sheet, state.step + n)


@dataclass
class RunResult:
    ones: int  # number of visited states (steps 1..n) on sheet 1
    final_residue: int
    final_sheet: int
    checkpoints: list[tuple[int, float]]
    near_endpoint: int  # flips decided within the shadowing error of an endpoint


@dataclass(frozen=True)
class ResidueSystem:
    Q: int
    P: int
    lo: int  # slit start in grid units
    width: int  # slit length in grid units (rounded up)
    exact: bool
    drift: float  # bound on |x_true - r/Q| accumulated over the run
    depth: int | None

    def snap(self, x: Fraction) -> int:
        r = x * self.Q
        if self.exact and r.denominator != 1:
            raise ValueError("start is not on the exact grid")
        return round(r) % self.Q

    def run(self, r0: int, sheet: int, n: int, checkpoints: Sequence[int]) -> RunResult:
        """Vectorized orbit of length n; raises SingularOrbitError on an endpoint hit."""
        Q, P, lo, width = self.Q, self.P, self.lo, self.width
        cps = sorted(set(c for c in checkpoints if 1 <= c <= n))
        out_cp = []
        ones = 0
        near = 0
        margin = 0 if self.exact else int(math.ceil(self.drift * Q)) + 1
        done = 0
        r = r0
        parity = sheet
        cp_i = 0
        while done < n:
            m = min(_CHUNK, n - done)
            j = np.arange(1, m + 1, dtype=np.int64)
            rs = (r + (j * P) % Q) % Q
            rel = (rs - lo) % Q
            hits = np.nonzero((rel == 0) | ((rel == width) if self.exact else False))[0]
            if hits.size:
                raise SingularOrbitError(done + int(hits[0]) + 1)
            flips = (rel < width).astype(np.int8)
            if margin:
                near += int(np.count_nonzero((rel <= margin) | (rel >= Q - margin) | (np.abs(rel - width) <= margin)))
            sheets = (np.cumsum(flips, dtype=np.int64) + parity) & 1
            csum = np.cumsum(sheets, dtype=np.int64)
            while cp_i < len(cps) and cps[cp_i] <= done + m:
                c = cps[cp_i]
                out_cp.append((c, (ones + int(csum[c - done - 1])) / c))
                cp_i += 1
            ones += int(csum[-1])
            parity = int(sheets[-1])
            r = int(rs[-1])
            done += m
        return RunResult(ones, r, parity, out_cp, near)


def build_skew_product(surface, tol: float = 1e-12, alpha_denominator: int = 10**30) -> TwoSheetIET:
    """Return map of the vertical flow of ``surface`` to the two horizontal circles."""
    if surface.slit is None:
        raise ValueError("torus mode has no slit")
    if float(surface.slit.width()) > tol:
        raise ValueError("slit enclosure too wide for simulation")
    alpha = surface.alpha_rational(alpha_denominator)
    slit = mpf_to_fraction(surface.slit.mid())
    return TwoSheetIET(alpha, slit, Fraction(surface.x0), surface.table, surface.slit)


def skew_product_from(alpha_table: ConvergentTable, slit: float | Fraction, x0=0) -> TwoSheetIET:
    """Skew product with the rotation of a table and a free slit length (test and control systems)."""
    q = alpha_table.q
    K = next((k for k in range(len(q)) if q[k] >= 10**30), len(q) - 1)
    return TwoSheetIET(Fraction(alpha_table.p[K], q[K]), Fraction(slit), Fraction(x0), alpha_table)


def power_checkpoints(n: int) -> list[int]:
    cps = [1 << i for i in range(n.bit_length()) if (1 << i) <= n]
    if cps[-1] != n:
        cps.append(n)
    return cps


@dataclass
class BirkhoffResult:
    start: OrbitState
    n: int
    average: float
    checkpoints: list[tuple[int, float]]
    depth: int | None
    drift: float
    near_endpoint: int


def birkhoff_average(iet: TwoSheetIET, start: OrbitState, n: int, tol: float = 1e-12) -> BirkhoffResult:
    """(1/n) sum_{j=1..n} [sheet after step j == 1], with power-of-two checkpoints."""
    if n < 1:
        raise ValueError("n must be at least 1")
    sys_ = iet.residue_system(n, start.x, tol)
    r0 = sys_.snap(start.x)
    res = sys_.run(r0, start.sheet, n, power_checkpoints(n))
    return BirkhoffResult(start, n, res.ones / n, res.checkpoints, sys_.depth, sys_.drift, res.near_endpoint)


@dataclass
class ProbeReport:
    results: list[BirkhoffResult]
    checkpoints: list[int]
    gaps: list[float]
    verdict: str
    threshold: float
    ergodic_threshold: float
    n_min: int
    meta: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["start_x", "start_sheet", "checkpoint_n", "average"])
        for r in self.results:
            for c, a in r.checkpoints:
                w.writerow([f"{float(r.start.x):.12f}", r.start.sheet, c, f"{a:.12f}"])
        return buf.getvalue()

    def verdict_block(self) -> dict:
        return {
            "verdict": self.verdict,
            "threshold": self.threshold,
            "ergodic_threshold": self.ergodic_threshold,
            "n_min": self.n_min,
            "final_gap": round(self.gaps[-1], 12),
            "min_gap_after_n_min": round(
                min((g for c, g in zip(self.checkpoints, self.gaps) if c >= self.n_min), default=float("nan")), 12
            ),
            "near_endpoint_flips": sum(r.near_endpoint for r in self.results),
            **self.meta,
        }

    def to_json(self) -> str:
        return json.dumps(self.verdict_block(), indent=2, sort_keys=True) + "\n"


def ergodicity_probe(
    iet: TwoSheetIET,
    starts: Sequence[OrbitState],
    n: int,
    threshold: float = 0.5,
    ergodic_threshold: float = 0.05,
    n_min: int = 10**4,
) -> ProbeReport:
    """Cross-start gap of Birkhoff averages at every checkpoint.

    "non-ergodic-signature": the gap exceeds ``threshold`` at every
    checkpoint >= n_min; "ergodic-signature": the final gap is below
    ``ergodic_threshold``; otherwise "inconclusive".
    """
    if len(starts) < 2 or len({s.sheet for s in starts}) < 2:
        raise ValueError("need at least two starts on distinct sheets")
    results = [birkhoff_average(iet, s, n) for s in starts]
    cps = [c for c, _ in results[0].checkpoints]
    gaps = []
    for i in range(len(cps)):
        vals = [r.checkpoints[i][1] for r in results]
        gaps.append(max(vals) - min(vals))
    late = [g for c, g in zip(cps, gaps) if c >= n_min]
    if late and min(late) > threshold:
        verdict = "non-ergodic-signature"
    elif gaps[-1] < ergodic_threshold:
        verdict = "ergodic-signature"
    else:
        verdict = "inconclusive"
    meta = {"n": n, "depth": results[0].depth, "shadow_error": results[0].drift}
    return ProbeReport(results, cps, gaps, verdict, threshold, ergodic_threshold, n_min, meta)


# ---------------------------------------------------------------------------
# geometric flow


def flow_oracle(alpha, slit, point: tuple[int, float, float], T: float, x0=0, prec: int = 96, tol: float = 1e-20):
    """Straight-line vertical flow for time T from (sheet, x, y) with 0 <= y < 1.

    Each passage through y = 0 happens at x + j alpha mod 1 (the lattice
    identification (x, 1) ~ (x + alpha, 0)); the sheet swaps when the
    passage is through the slit interior.  Positions are computed in closed
    form, not by iterating a map.  Raises SingularOrbitError within ``tol`` of
    a slit endpoint.
    """
    sheet, x, y = point
    with mpmath.workprec(prec):
        a = _as_mpf(alpha)
        s = _as_mpf(slit)
        base = mpmath.mpf(x0)
        x = _as_mpf(x)
        y = _as_mpf(y)
        if not 0 <= y < 1:
            raise ValueError("y must lie in [0, 1)")
        total = y + _as_mpf(T)
        crossings = int(mpmath.floor(total))
        for j in range(1, crossings + 1):
            u = mpmath.frac(x + j * a - base)
            if u < tol or abs(u - s) < tol or 1 - u < tol:
                raise SingularOrbitError(j, f"trajectory meets a cone point at crossing {j}")
            if u < s:
                sheet ^= 1
        return sheet, mpmath.frac(x + crossings * a), total - crossings


def _as_mpf(v):
    if isinstance(v, Interval):
        return v.mid()
    if isinstance(v, Fraction):
        return mpmath.mpf(v.numerator) / v.denominator
    return mpmath.mpf(v)
