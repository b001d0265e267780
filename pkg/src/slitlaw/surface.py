"""The genus-two surface made of two copies of C/Lambda_alpha glued along a horizontal slit.

Lambda_alpha is spanned by (1, 0) and (-alpha, 1).  The slit starts at the
origin of each torus and has holonomy (s, 0) with s = sum_k 2 beta_k.  Its
endpoints are the two cone points of the surface.
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

from .holonomy import Holonomy, _pick_min, flow_length, log_flow_length, min_length_time
from .interval import Interval, format_bound
from .numtheory import AlphaSpec, ConvergentTable, RATIONAL, build_table, slit_tail_sum

CYLINDER = "cylinder"
CYLINDER_DOUBLE = "cylinder-double"
SLIT = "slit"
FAMILY_ORDER = {CYLINDER: 0, CYLINDER_DOUBLE: 1, SLIT: 2}

# relative tolerance on candidate holonomy enclosures
_CANDIDATE_RTOL = 1e-9
# working precision of trajectory evaluations
_TRAJ_PREC = 192


@dataclass(frozen=True)
class SlitTorusSurface:
    spec: AlphaSpec
    table: ConvergentTable
    slit: Interval | None  # None: a single torus with one marked point
    unit_area: bool = False
    slit_indices: str = "all"  # "all" or "even" convergents in the slit sum
    x0: int = 0

    @property
    def is_torus(self) -> bool:
        return self.slit is None

    @property
    def raw_area(self) -> int:
        return 1 if self.is_torus else 2

    @property
    def scale(self) -> Interval:
        """Factor applied to reported lengths (1/sqrt(raw area) in unit-area mode)."""
        if not self.unit_area:
            return Interval(1)
        return (Interval(1, prec=self.table.precision) / self.raw_area).sqrt()

    @property
    def alpha(self) -> Interval:
        return self.table.alpha

    def alpha_rational(self, min_denominator: int = 10**12) -> Fraction:
        """A convergent p_K/q_K of alpha with q_K >= min_denominator (or the deepest available)."""
        q = self.table.q
        for k in range(len(q)):
            if q[k] >= min_denominator:
                return Fraction(self.table.p[k], q[k])
        return Fraction(self.table.p[-1], q[-1])

    def slit_rational(self, bits: int = 96) -> Fraction:
        if self.slit is None:
            raise ValueError("torus mode has no slit")
        m = self.slit.mid()
        return Fraction(int(mpmath.nint(m * 2**bits)), 2**bits)

    def descriptor(self) -> dict:
        d = {
            "alpha_spec": self.spec.to_dict(),
            "k_max": self.table.k_max,
            "precision": self.table.precision,
            "unit_area": self.unit_area,
            "raw_area": self.raw_area,
            "slit_indices": self.slit_indices,
            "slit": None,
        }
        if self.slit is not None:
            d["slit"] = {
                "lo": format_bound(self.slit.lo, 30, "down"),
                "hi": format_bound(self.slit.hi, 30, "up"),
            }
        return d

    def descriptor_json(self) -> str:
        return json.dumps(self.descriptor(), indent=2, sort_keys=True) + "\n"


def build_surface(
    spec: AlphaSpec,
    k_max: int = 60,
    precision: int = 256,
    unit_area: bool = False,
    slit_indices: str = "all",
    torus: bool = False,
    slit_length=None,
) -> SlitTorusSurface:
    """Construct the slit surface (or, with ``torus``, the single torus) for ``spec``.

    ``slit_length`` replaces the slit sum by a given value in (0, 1); it is
    meant for test surfaces.
    """
    if spec.kind == RATIONAL:
        raise ValueError("rational alpha: the vertical flow is not minimal")
    if slit_indices not in ("all", "even"):
        raise ValueError("slit_indices must be 'all' or 'even'")
    table = build_table(spec, k_max, precision)
    if torus:
        return SlitTorusSurface(spec, table, None, unit_area, slit_indices)
    if slit_length is not None:
        slit = Interval(slit_length, prec=table.precision)
    elif slit_indices == "all":
        slit = slit_tail_sum(table, 1, rtol=_CANDIDATE_RTOL)
    else:
        slit = slit_tail_sum(table, 2, step=2, rtol=_CANDIDATE_RTOL)
    if slit.compare(1) != -1 or slit.compare(0) != 1:
        raise ValueError(f"slit length {float(slit.mid()):.6g} is not inside (0, 1)")
    return SlitTorusSurface(spec, table, slit, unit_area, slit_indices)


@dataclass(frozen=True)
class CurveCandidate:
    family: str
    k: int
    holonomy: Holonomy
    separating: bool

    @property
    def tag(self) -> tuple[str, int]:
        return (self.family, self.k)


def _slit_index_list(surface: SlitTorusSurface, k: int) -> tuple[list[int], int]:
    """Convergent indices in the slit family tail for candidate k, and the step."""
    if surface.slit_indices == "all":
        return list(range(1, k)), 1
    return [2 * j for j in range(1, k)], 2


def enumerate_candidates(surface: SlitTorusSurface, k_max: int | None = None) -> list[CurveCandidate]:
    """Cylinder, doubled-cylinder and slit candidates for k <= k_max, sorted by (family, k).

    Cylinder indices start at -1 (the horizontal vector (1, 0), with the
    conventions p_{-1} = 1, q_{-1} = 0) and 0 (the vector (alpha, 1)).
    """
    table = surface.table
    if k_max is None:
        k_max = table.k_max - 2
    if k_max < 1 or k_max > table.k_max - 2:
        raise ValueError(f"insufficient table depth: k_max={k_max} needs table k_max >= {k_max + 2}")
    scale = surface.scale
    prec = table.precision
    out: list[CurveCandidate] = []
    cyl = [(-1, Interval(1, prec=prec), 0)] + [(k, table.beta[k], table.q[k]) for k in range(k_max + 1)]
    for family, mult in ((CYLINDER, 1), (CYLINDER_DOUBLE, 2)):
        for k, b, q in cyl:
            hol = Holonomy.of(b * mult, q * mult, prec).scaled(scale)
            out.append(CurveCandidate(family, k, hol, False))
    if not surface.is_torus:
        if surface.slit_indices == "all":
            ks = range(1, k_max + 1)
        else:
            ks = range(1, k_max // 2 + 1)
        for k in ks:
            idx, step = _slit_index_list(surface, k)
            start = k if step == 1 else 2 * k
            tail = slit_tail_sum(table, start, step=step)
            if tail.rel_width() > _CANDIDATE_RTOL:
                raise ValueError(f"insufficient table depth for slit candidate k={k}")
            vertical = 2 * sum(table.q[i] for i in idx)
            out.append(CurveCandidate(SLIT, k, Holonomy.of(tail, vertical, prec).scaled(scale), True))
    if surface.is_torus:
        out = [c for c in out if c.family == CYLINDER]
    out.sort(key=lambda c: (FAMILY_ORDER[c.family], c.k))
    return out


# ---------------------------------------------------------------------------
# brute force over lattice points


@dataclass(frozen=True)
class LatticeVector:
    holonomy: Holonomy
    m: int
    n: int
    shifted: bool  # True: vector between the two cone points


def lattice_vectors(
    alpha,
    length_bound: float,
    t: float = 0.0,
    slit=None,
    max_box: int = 10**6,
    prec: int = 128,
) -> list[LatticeVector]:
    """All saddle-connection vectors of g_t-length <= length_bound, one per +- pair.

    Vectors are (m - n alpha, n) between copies of the same cone point and,
    when ``slit`` is given, (s + m - n alpha, n) between the two cone points.
    A vector is kept only if no cone point lies strictly inside it.
    """
    with mpmath.workprec(prec):
        alpha = mpmath.mpf(alpha.mid() if isinstance(alpha, Interval) else alpha)
        s = None if slit is None else mpmath.mpf(slit.mid() if isinstance(slit, Interval) else slit)
        bound = mpmath.mpf(length_bound)
        et = mpmath.exp(mpmath.mpf(t))
        n_max = int(mpmath.floor(bound * et))
        h_max = bound / et
        box = (n_max + 1) * (2 * int(mpmath.ceil(h_max)) + 3) * (1 if s is None else 2)
        if box > max_box:
            raise OverflowError(f"search box of {box} lattice points exceeds {max_box}")
        shifts = [(False, mpmath.mpf(0))] + ([] if s is None else [(True, s)])
        found = []
        seen = set()
        for n in range(0, n_max + 1):
            for shifted, sh in shifts:
                centre = n * alpha - sh
                m_lo = int(mpmath.ceil(centre - h_max))
                m_hi = int(mpmath.floor(centre + h_max))
                for m in range(m_lo, m_hi + 1):
                    h = sh + m - n * alpha
                    if n == 0 and not shifted and h <= 0:
                        continue  # keep one of each +- pair
                    length = mpmath.sqrt((h * et) ** 2 + (n / et) ** 2)
                    if length > bound:
                        continue
                    if not _visible(m, n, shifted, h, alpha, s):
                        continue
                    key = (m, n, shifted)
                    if key in seen:
                        continue
                    seen.add(key)
                    found.append((length, LatticeVector(Holonomy.of(abs(h), n, prec), m, n, shifted)))
        found.sort(key=lambda pair: (pair[0], pair[1].n, pair[1].m))
        return [v for _, v in found]


def _visible(m, n, shifted, h, alpha, s) -> bool:
    """No cone point strictly inside the segment from the origin to (h, n)."""
    if n == 0:
        lo, hi = (0, h) if h > 0 else (h, 0)
        # cone points on the horizontal line through the origin
        if not shifted and abs(m) != 1:
            return False
        if s is not None:
            # copies of the other cone point at s + j (or copies of the origin at j)
            for j in range(int(mpmath.floor(lo)) - 1, int(mpmath.ceil(hi)) + 2):
                for x in ((s + j, j) if shifted else (s + j,)):
                    if lo < x < hi:
                        return False
            if shifted:
                for j in range(int(mpmath.floor(lo)), int(mpmath.ceil(hi)) + 1):
                    if lo < j < hi:
                        return False
        return True
    tol = mpmath.mpf(2) ** (-mpmath.mp.prec + 20) * (1 + abs(h) + n)
    for k in range(1, n):
        x = h * k / n  # horizontal offset at height k
        # copies of the origin at (j - k alpha, k); copies of the other cone point shifted by s
        for base in ([mpmath.mpf(0)] if s is None else [mpmath.mpf(0), s]):
            r = x + k * alpha - base
            if abs(r - mpmath.nint(r)) <= tol:
                return False
    return True


def brute_force_saddle_connections(
    surface: SlitTorusSurface, length_bound: float, t: float = 0.0, max_box: int = 10**6
) -> list[LatticeVector]:
    """Completeness oracle: every saddle-connection holonomy with g_t-length <= length_bound.

    Lengths are raw (the unit-area scale is not applied here).
    """
    return lattice_vectors(surface.alpha, length_bound, t, surface.slit, max_box)


def torus_systole(alpha, t: float, prec: int = 192) -> tuple[mpmath.mpf, int, int]:
    """Shortest nonzero vector of g_t Lambda_alpha by Lagrange-Gauss reduction.

    Returns (length, m, n) with the vector equal to m (1, 0) + n (-alpha, 1).
    The reduction cancels about 2t/ln 2 bits, so ``prec`` is raised by that.
    """
    with mpmath.workprec(prec + int(3 * abs(t)) + 16):
        alpha = mpmath.mpf(alpha.mid() if isinstance(alpha, Interval) else alpha)
        et = mpmath.exp(mpmath.mpf(t))
        # basis vectors with integer coordinates attached
        b1 = [et, mpmath.mpf(0), 1, 0]
        b2 = [-alpha * et, 1 / et, 0, 1]

        def norm2(b):
            return b[0] ** 2 + b[1] ** 2

        if norm2(b1) > norm2(b2):
            b1, b2 = b2, b1
        while True:
            mu = mpmath.nint((b1[0] * b2[0] + b1[1] * b2[1]) / norm2(b1))
            mu_i = int(mu)
            b2 = [b2[0] - mu * b1[0], b2[1] - mu * b1[1], b2[2] - mu_i * b1[2], b2[3] - mu_i * b1[3]]
            if norm2(b2) >= norm2(b1):
                break
            b1, b2 = b2, b1
        return mpmath.sqrt(norm2(b1)), b1[2], b1[3]


# ---------------------------------------------------------------------------
# systole trajectories


@dataclass
class SystoleTrajectory:
    """Sampled systole data; ``delta_sep`` is None throughout in torus mode."""

    t: list[float]
    delta: list[Interval]
    delta_sep: list[Interval | None]
    delta_nonsep: list[Interval]
    argmin: list[tuple[str, int] | None]
    argmin_sep: list[tuple[str, int] | None]
    argmin_nonsep: list[tuple[str, int] | None]
    sample_kind: list[str] = field(default_factory=list)  # "grid" or "min:<family>:<k>"
    conclusive: list[bool] = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.t)

    @property
    def has_split(self) -> bool:
        return any(d is not None for d in self.delta_sep)

    @classmethod
    def from_values(cls, t: Sequence[float], delta: Sequence[float], delta_sep=None, delta_nonsep=None):
        """Synthetic trajectory from point values (degenerate enclosures)."""
        n = len(t)
        d = [Interval(float(x)) for x in delta]
        sep = [None] * n if delta_sep is None else [Interval(float(x)) for x in delta_sep]
        non = d if delta_nonsep is None else [Interval(float(x)) for x in delta_nonsep]
        return cls(
            t=[float(x) for x in t],
            delta=d,
            delta_sep=sep,
            delta_nonsep=non,
            argmin=[None] * n,
            argmin_sep=[None] * n,
            argmin_nonsep=[None] * n,
            sample_kind=["grid"] * n,
            conclusive=[True] * n,
            meta={"synthetic": True},
        )

    def min_time_samples(self, family: str) -> list[tuple[int, int]]:
        """(candidate k, sample index) for samples placed at a candidate's min-time."""
        out = []
        prefix = f"min:{family}:"
        for i, kind in enumerate(self.sample_kind):
            if kind.startswith(prefix):
                out.append((int(kind[len(prefix):]), i))
        return out

    def to_csv(self, digits: int = 17) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(
            [
                "t",
                "delta_lo",
                "delta_hi",
                "delta_sep_lo",
                "delta_sep_hi",
                "delta_nonsep_lo",
                "delta_nonsep_hi",
                "argmin_family",
                "argmin_k",
            ]
        )
        for i, t in enumerate(self.t):
            d, s, n = self.delta[i], self.delta_sep[i], self.delta_nonsep[i]
            fam, k = self.argmin[i] if self.argmin[i] is not None else ("", "")
            w.writerow(
                [
                    repr(float(t)),
                    format_bound(d.lo, digits, "down"),
                    format_bound(d.hi, digits, "up"),
                    "" if s is None else format_bound(s.lo, digits, "down"),
                    "" if s is None else format_bound(s.hi, digits, "up"),
                    format_bound(n.lo, digits, "down"),
                    format_bound(n.hi, digits, "up"),
                    fam,
                    k,
                ]
            )
        return buf.getvalue()


def coverage_end(surface: SlitTorusSurface, k_cand: int) -> float:
    """Latest time at which candidates beyond ``k_cand`` are all at least 1 long (raw units)."""
    return math.log(surface.table.q[k_cand])


def systole_trajectory(
    surface: SlitTorusSurface,
    t_grid: Sequence[float],
    k_max: int | None = None,
    include_min_times: bool = True,
    margin: float = 1.0,
    screen: float = 1e-6,
) -> SystoleTrajectory:
    """Envelope minima over separating (slit) and non-separating (cylinder) candidates.

    Candidates are screened in floating point; those within ``screen``
    (relative, in log length) of the group minimum are evaluated with
    interval arithmetic.  Samples at each candidate's min-time inside the grid
    range are added when ``include_min_times`` is set.
    """
    grid = sorted(float(t) for t in t_grid)
    if not grid:
        raise ValueError("empty time grid")
    cands = enumerate_candidates(surface, k_max)
    k_cand = max(c.k for c in cands if c.family == CYLINDER)
    end = coverage_end(surface, k_cand) - margin
    if grid[-1] > end:
        raise ValueError(
            f"grid extends to t={grid[-1]:.6g} beyond candidate coverage t<={end:.6g}; raise k_max"
        )
    samples = [(t, "grid") for t in grid]
    if include_min_times:
        for c in cands:
            ml = min_length_time(c.holonomy)
            if ml.time is None:
                continue
            tm = float(ml.time.mid())
            if grid[0] <= tm <= grid[-1]:
                samples.append((tm, f"min:{c.family}:{c.k}"))
    samples.sort(key=lambda s: (s[0], s[1]))
    # parallel candidates share a min-time; keep one sample per time
    samples = [smp for i, smp in enumerate(samples) if i == 0 or smp[0] != samples[i - 1][0]]

    hols = [c.holonomy.with_prec(_TRAJ_PREC) for c in cands]
    logs = np.array([h.log_components() for h in hols])
    sep_idx = np.array([i for i, c in enumerate(cands) if c.separating], dtype=int)
    non_idx = np.array([i for i, c in enumerate(cands) if not c.separating], dtype=int)
    tagged = [(h, c.tag) for h, c in zip(hols, cands)]

    def group_min(idx, t, log_len):
        if idx.size == 0:
            return None
        vals = log_len[idx]
        best = vals.min()
        near = idx[vals <= best + screen * max(1.0, abs(best))]
        t_iv = Interval(t, prec=_TRAJ_PREC)
        lengths = [flow_length(hols[i], t_iv) for i in near]
        return _pick_min(lengths, [tagged[i] for i in near], near)

    traj = SystoleTrajectory([], [], [], [], [], [], [], [], [], {})
    for t, kind in samples:
        log_len = log_flow_length(logs[:, 0], logs[:, 1], t)
        non = group_min(non_idx, t, log_len)
        sep = group_min(sep_idx, t, log_len)
        if sep is None or non.length.compare(sep.length) == -1:
            best, ok = non, sep is None or True
        elif sep.length.compare(non.length) == -1:
            best, ok = sep, True
        else:
            best, ok = non, False
        if sep is not None and best is non and non.length.compare(sep.length) is None:
            ok = False
        value = best.length if sep is None else Interval(
            min(non.length.lo, sep.length.lo), min(non.length.hi, sep.length.hi), prec=_TRAJ_PREC
        )
        traj.t.append(t)
        traj.delta.append(value)
        traj.delta_sep.append(None if sep is None else sep.length)
        traj.delta_nonsep.append(non.length)
        traj.argmin.append(best.tag)
        traj.argmin_sep.append(None if sep is None else sep.tag)
        traj.argmin_nonsep.append(non.tag)
        traj.sample_kind.append(kind)
        traj.conclusive.append(ok and non.conclusive and (sep is None or sep.conclusive))
    traj.meta = {
        "candidate_k_max": k_cand,
        "coverage_end": end,
        "unit_area": surface.unit_area,
        "torus": surface.is_torus,
        "slit_indices": surface.slit_indices,
        # candidate minima are two-sided proxies for the true systoles up to this factor
        "comparability_factor": 9,
    }
    return traj
