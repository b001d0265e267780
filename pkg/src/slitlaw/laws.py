"""Log-law ratios, the density of S_lambda, the divergence integral and the distance bound."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import mpmath
import numpy as np
from scipy.integrate import cumulative_simpson

from .interval import Interval
from .surface import SystoleTrajectory


def _neg_log(x) -> float:
    return -float(mpmath.log(x))


def _check_positive(traj: SystoleTrajectory):
    for i, d in enumerate(traj.delta):
        if not d.is_positive():
            raise ValueError(f"systole enclosure at t={traj.t[i]:g} contains 0")


@dataclass
class LawReport:
    t: list[float]
    ratio: list[float]
    ratio_lo: list[float]
    ratio_hi: list[float]
    burn_in: float
    limsup_ratio: float
    limsup_min_times: float | None  # max ratio over candidate min-time samples only
    density: dict[float, float]
    masks: dict[float, list[bool]] = field(default_factory=dict)
    ambiguous: dict[float, int] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "burn_in": self.burn_in,
            "limsup_ratio": self.limsup_ratio,
            "limsup_min_times": self.limsup_min_times,
            "density": {repr(k): v for k, v in self.density.items()},
        }


def ratio_series(traj: SystoleTrajectory, burn_in: float = 1.0, which: str = "delta"):
    """(t, ratio, lo, hi) for -log(delta_t)/log(t) at samples with t >= max(burn_in, >1)."""
    values = getattr(traj, which)
    ts, mid, lo, hi, idx = [], [], [], [], []
    for i, t in enumerate(traj.t):
        if t < burn_in or t <= 1.0 or values[i] is None:
            continue
        d = values[i]
        if not d.is_positive():
            raise ValueError(f"systole enclosure at t={t:g} contains 0")
        lt = math.log(t)
        ts.append(t)
        mid.append(_neg_log(d.mid()) / lt)
        lo.append(_neg_log(d.hi) / lt)
        hi.append(_neg_log(d.lo) / lt)
        idx.append(i)
    return ts, mid, lo, hi, idx


def _membership(traj: SystoleTrajectory, lam: float) -> tuple[list[bool], int]:
    """delta_s > s^(-1/2 + lam) at every sample, deciding overlaps by the midpoint.

    Samples far from the threshold are decided in floating point; the rest
    by interval comparison.
    """
    t = np.asarray(traj.t, dtype=float)
    log_d = np.array([float(mpmath.log(d.mid())) if d.mid() > 0 else -np.inf for d in traj.delta])
    with np.errstate(divide="ignore"):
        log_thr = (lam - 0.5) * np.log(np.where(t > 0, t, 1.0))
    gap = log_d - log_thr
    mask = (gap > 0) & (t > 0)
    ambiguous = 0
    for i in np.nonzero((np.abs(gap) < 1e-6) & (t > 0))[0]:
        thr = mpmath.mpf(t[i]) ** (mpmath.mpf(lam) - mpmath.mpf(0.5))
        c = traj.delta[i].compare(Interval(thr))
        if c is None:
            ambiguous += 1
            mask[i] = bool(traj.delta[i].mid() > thr)
        else:
            mask[i] = c == 1
    return mask.tolist(), ambiguous


def running_density(t: Sequence[float], mask: Sequence[bool]) -> tuple[np.ndarray, np.ndarray]:
    """|S cap [t_0, s]| / (s - t_0) at each sample s > t_0.

    Each cell [t_j, t_{j+1}) takes the membership of its left endpoint, which
    is exact for step functions that jump only at samples.
    """
    t = np.asarray(t, dtype=float)
    m = np.asarray(mask, dtype=float)
    cells = np.diff(t) * m[:-1]
    measure = np.concatenate([[0.0], np.cumsum(cells)])
    span = t - t[0]
    with np.errstate(invalid="ignore", divide="ignore"):
        dens = np.where(span > 0, measure / np.where(span > 0, span, 1), np.nan)
    return dens, measure


def loglaw_stats(traj: SystoleTrajectory, lambdas: Sequence[float] = (0.1, 0.25), burn_in: float = 2.0) -> LawReport:
    """Ratio series, its limsup estimate past ``burn_in`` and lower densities of S_lambda."""
    _check_positive(traj)
    ts, mid, lo, hi, idx = ratio_series(traj, burn_in)
    if not ts:
        raise ValueError("no samples beyond the burn-in time")
    limsup = max(mid)
    at_min = [r for r, i in zip(mid, idx) if traj.sample_kind and traj.sample_kind[i].startswith("min:")]
    density, masks, amb = {}, {}, {}
    for lam in lambdas:
        mask, ambiguous = _membership(traj, lam)
        dens, _ = running_density(traj.t, mask)
        # inf over suffixes, starting once the window covers half the sampled span
        start = max(burn_in, traj.t[0] + 0.5 * (traj.t[-1] - traj.t[0]))
        tail = [d for t, d in zip(traj.t, dens) if t >= start and not math.isnan(d)]
        density[lam] = float(min(tail)) if tail else float("nan")
        masks[lam] = mask
        amb[lam] = ambiguous
    return LawReport(
        t=ts,
        ratio=mid,
        ratio_lo=lo,
        ratio_hi=hi,
        burn_in=burn_in,
        limsup_ratio=limsup,
        limsup_min_times=max(at_min) if at_min else None,
        density=density,
        masks=masks,
        ambiguous=amb,
    )


# ---------------------------------------------------------------------------
# divergence integral


class QuadratureError(ValueError):
    """The quadrature error estimate exceeds the requested tolerance."""


@dataclass
class DivergenceResult:
    t: list[float]
    estimate: list[float]  # composite Simpson partial integrals from t_0
    lower: list[float]  # rigorous bounds for the sampled systole function
    upper: list[float]
    error_estimate: float
    dyadic_ratio: float | None  # geometric mean of successive dyadic increments
    verdict: str
    gap: "GapCheck | None" = None

    def integral_rows(self, stride: int = 1) -> list[list[float]]:
        return [[self.t[i], self.lower[i], self.upper[i]] for i in range(0, len(self.t), stride)]


@dataclass
class GapCheck:
    c: float
    lam: float
    ok: bool
    min_margin: float
    checked: int


def _cell_bounds(t: np.ndarray, lo: np.ndarray, hi: np.ndarray, rate: float = 2.0):
    """Integral bounds of f over each cell when |d log f / dt| <= rate.

    f >= max(A e^{-rate (t-a)}, B e^{-rate (b-t)}) and f <= min of the growing
    envelopes, which integrate to the expressions below.
    """
    dt = np.diff(t)
    grow = np.expm1(rate * dt) / rate
    shrink = -np.expm1(-rate * dt) / rate
    low = np.maximum(lo[:-1], lo[1:]) * shrink
    up = np.minimum(hi[:-1], hi[1:]) * grow
    return low, up


def divergence_integral(
    traj: SystoleTrajectory,
    T: float | None = None,
    tol: float = 1e-6,
    relative: bool = True,
    diverge_ratio: float = 0.95,
    converge_ratio: float = 0.9,
    gap_check: tuple[float, float] | None = None,
    burn_in: float = 1.0,
) -> DivergenceResult:
    """Partial integrals of delta_t^2 from the first sample to each sample up to T.

    ``lower``/``upper`` use only that log(delta) is 1-Lipschitz in t (true for
    a minimum of flow lengths).  The verdict compares successive increments
    over dyadic windows [T/2, T]: ratios near 1 or above mean at least
    logarithmic growth, ratios well below 1 mean a geometric (Cauchy) tail.
    ``gap_check`` = (lambda, c) additionally checks the lower bound for the
    integral of t^(-1+2c) over S_lambda.
    """
    _check_positive(traj)
    t = np.asarray(traj.t, dtype=float)
    keep = np.ones_like(t, dtype=bool) if T is None else t <= T
    # Simpson weights blow up on near-coincident abscissae
    close = np.concatenate([[False], np.diff(t) <= 1e-9 * np.maximum(1.0, np.abs(t[1:]))])
    keep &= ~close
    t = t[keep]
    if t.size < 3:
        raise ValueError("need at least three samples")
    deltas = [d for d, k in zip(traj.delta, keep) if k]
    f = np.array([float(d.mid()) ** 2 for d in deltas])
    f_lo = np.array([float(d.lo) ** 2 for d in deltas])
    f_hi = np.array([float(d.hi) ** 2 for d in deltas])
    f_lo = np.nextafter(f_lo, 0)
    f_hi = np.nextafter(f_hi, np.inf)

    simpson = np.concatenate([[0.0], cumulative_simpson(f, x=t)])
    coarse = cumulative_simpson(f[::2], x=t[::2])
    err = abs(simpson[::2][-1] - coarse[-1]) if coarse.size else 0.0
    scale = max(1.0, abs(simpson[-1])) if relative else 1.0
    if err > tol * scale:
        raise QuadratureError(f"quadrature error estimate {err:.3g} exceeds tolerance {tol * scale:.3g}")

    low, up = _cell_bounds(t, f_lo, f_hi)
    lower = np.concatenate([[0.0], np.cumsum(low)])
    upper = np.concatenate([[0.0], np.cumsum(up)])

    ratio = _dyadic_ratio(t, simpson, burn_in)
    if ratio is None:
        verdict = "inconclusive"
    elif ratio >= diverge_ratio:
        verdict = "diverging-trend"
    elif ratio <= converge_ratio:
        verdict = "converging-trend"
    else:
        verdict = "inconclusive"
    gap = None
    if gap_check is not None:
        lam, c = gap_check
        gap = check_gap(traj, lam, c, burn_in)
    return DivergenceResult(
        t=t.tolist(),
        estimate=simpson.tolist(),
        lower=lower.tolist(),
        upper=upper.tolist(),
        error_estimate=float(err),
        dyadic_ratio=ratio,
        verdict=verdict,
        gap=gap,
    )


def _dyadic_ratio(t: np.ndarray, integral: np.ndarray, burn_in: float) -> float | None:
    start = max(burn_in, t[0], 1e-9)
    ends = []
    x = t[-1]
    while x / 2 >= start:
        ends.append(x)
        x /= 2
    ends.append(x)
    ends.reverse()
    if len(ends) < 3:
        return None
    vals = np.interp(ends, t, integral)
    inc = np.diff(vals)
    if np.any(inc <= 0):
        return 0.0
    ratios = inc[1:] / inc[:-1]
    # use the later half of the windows
    tail = ratios[len(ratios) // 2 :]
    return float(np.exp(np.mean(np.log(tail))))


def check_gap(traj: SystoleTrajectory, lam: float, c: float, burn_in: float = 1.0) -> GapCheck:
    """Integral of t^(-1+2c) over S_lambda cap [0, s] versus (s^{2c}/2c)(1 - (1 - rho)^{2c}).

    rho is the measure of S_lambda cap [0, s] divided by s; the bound holds
    because the integrand decreases, so the integral over a set of measure
    rho s is smallest when the set is pushed to [s - rho s, s].
    """
    if c <= 0:
        raise ValueError("c must be positive")
    t = np.asarray(traj.t, dtype=float)
    mask, _ = _membership(traj, lam)
    m = np.asarray(mask[:-1], dtype=bool)
    e = 2 * c
    pieces = np.where(m, (t[1:] ** e - t[:-1] ** e) / e, 0.0)
    lhs = np.concatenate([[0.0], np.cumsum(pieces)])
    measure = np.concatenate([[0.0], np.cumsum(np.diff(t) * m)])
    ok, worst, checked = True, math.inf, 0
    for i in range(1, len(t)):
        s = t[i]
        if s < burn_in or s <= 0:
            continue
        rho = min(1.0, measure[i] / s)
        rhs = (s**e / e) * (1 - (1 - rho) ** e)
        margin = lhs[i] - rhs
        worst = min(worst, margin / max(1.0, abs(rhs)))
        checked += 1
        if margin < -1e-9 * max(1.0, abs(rhs)):
            ok = False
    return GapCheck(c, lam, ok, float(worst), checked)


# ---------------------------------------------------------------------------
# distance bound


@dataclass(frozen=True)
class DistanceBoundConfig:
    K2: float = 0.0
    burn_in: float = 2.0

    def __post_init__(self):
        if not math.isfinite(self.K2):
            raise ValueError("K2 must be finite")


@dataclass
class DistanceSeries:
    t: list[float]
    value: list[float]
    ratio: list[float]
    limsup_ratio: float


def distance_bound_series(traj: SystoleTrajectory, cfg: DistanceBoundConfig = DistanceBoundConfig()) -> DistanceSeries:
    """max{ log(-log delta^s)/2, -log delta^ns } + K2 and its ratio to log t."""
    if not traj.has_split:
        raise ValueError("trajectory has no separating systole data (torus mode?)")
    ts, vals, ratios = [], [], []
    for i, t in enumerate(traj.t):
        if t < cfg.burn_in or t <= 1.0:
            continue
        ds, dn = traj.delta_sep[i], traj.delta_nonsep[i]
        if ds is None:
            raise ValueError(f"missing separating systole at t={t:g}")
        if not ds.is_positive() or not dn.is_positive():
            raise ValueError(f"systole enclosure at t={t:g} contains 0")
        nl = _neg_log(ds.mid())
        if nl <= 0:
            raise ValueError(f"separating systole >= 1 at t={t:g}; raise the burn-in time")
        v = max(0.5 * math.log(nl), _neg_log(dn.mid())) + cfg.K2
        ts.append(t)
        vals.append(v)
        ratios.append(v / math.log(t))
    if not ts:
        raise ValueError("no samples beyond the burn-in time")
    return DistanceSeries(ts, vals, ratios, max(ratios))
