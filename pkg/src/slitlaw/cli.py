"""Batch front end: ``slitlaw <subcommand> --config run.json [overrides]``.

Exit status 0 on success, 2 when a computation is inconclusive at the
configured precision, 1 on invalid configuration.  Every output file carries
the SHA-256 of the resolved configuration.
"""

from __future__ import annotations

import argparse
import copy
import hashlib
import json
import math
import sys
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from .interval import InconclusiveError
from .numtheory import AlphaSpec, build_table, check_good_bound, table_to_csv, veech_sum

SUBCOMMANDS = ("cf", "surface", "systole", "laws", "ergodicity", "certify")


class ConfigError(ValueError):
    pass


@dataclass
class Grid:
    start: float = 145.0
    end: float = 1040.0
    step: float = 0.25


@dataclass
class Probe:
    starts: list = field(default_factory=lambda: [["0.3", 0], ["0.3", 1]])
    n: int = 10**6
    threshold: float = 0.5
    ergodic_threshold: float = 0.05
    n_min: int = 10**4


@dataclass
class Certificate:
    N: float = 1.5
    samples: int = 256
    sheet: int = 0


@dataclass
class RunConfig:
    alpha: dict = field(default_factory=lambda: {"kind": "paper"})
    k_max: int = 160
    candidates_k: int | None = 150
    precision_bits: int = 256
    torus: bool = False
    slit_length: str | None = None
    unit_area: bool = False
    grid: Grid = field(default_factory=Grid)
    lambdas: list = field(default_factory=lambda: [0.1, 0.25])
    burn_in: float = 145.0
    k2: float = 0.0
    quadrature_tol: float = 1e-3
    probe: Probe = field(default_factory=Probe)
    certificate: Certificate = field(default_factory=Certificate)
    seed: int = 0
    output_dir: str = "out"

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        d = copy.deepcopy(d)
        known = set(cls.__dataclass_fields__)
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown config fields: {sorted(extra)}")
        try:
            grid = Grid(**d.pop("grid", {}))
            probe = Probe(**d.pop("probe", {}))
            cert = Certificate(**d.pop("certificate", {}))
            cfg = cls(grid=grid, probe=probe, certificate=cert, **d)
        except TypeError as e:
            raise ConfigError(str(e)) from None
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if not self.grid.step > 0:
            raise ConfigError("grid step must be positive")
        if not self.grid.end >= self.grid.start:
            raise ConfigError("grid end must not precede its start")
        if self.precision_bits < 64:
            raise ConfigError("precision_bits must be at least 64")
        if self.k_max < 2:
            raise ConfigError("k_max must be at least 2")
        for name in ("threshold", "ergodic_threshold"):
            if not getattr(self.probe, name) > 0:
                raise ConfigError(f"probe.{name} must be positive")
        if self.probe.n < 1 or self.probe.n_min < 1:
            raise ConfigError("probe sizes must be positive")
        if not all(lam > 0 for lam in self.lambdas):
            raise ConfigError("lambdas must be positive")
        if not self.certificate.N > 1:
            raise ConfigError("certificate.N must exceed 1")
        if self.certificate.samples < 1:
            raise ConfigError("certificate.samples must be positive")
        if not math.isfinite(self.k2):
            raise ConfigError("k2 must be finite")
        try:
            AlphaSpec.from_dict(self.alpha)
        except (KeyError, ValueError, TypeError) as e:
            raise ConfigError(f"alpha: {e}") from None

    def to_dict(self) -> dict:
        return asdict(self)

    def digest(self) -> str:
        d = self.to_dict()
        d.pop("output_dir")
        canon = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()


# ---------------------------------------------------------------------------
# deterministic formatting


def _num(x, digits: int = 15):
    if isinstance(x, bool) or x is None or isinstance(x, str):
        return x
    if isinstance(x, int):
        return x
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, f".{digits}g")


def _normalize(obj):
    if isinstance(obj, dict):
        return {str(k): _normalize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_normalize(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        obj = obj.item()
    return _num(obj)


def dump_json(payload: dict, digest: str) -> str:
    body = {"config_sha256": digest, **_normalize(payload)}
    return json.dumps(body, indent=2, sort_keys=True) + "\n"


def stamp_csv(text: str, digest: str) -> str:
    return f"# config_sha256={digest}\n" + text


# ---------------------------------------------------------------------------
# subcommands


def _surface(cfg: RunConfig):
    from .surface import build_surface

    spec = AlphaSpec.from_dict(cfg.alpha)
    slit = None if cfg.slit_length is None else Fraction(cfg.slit_length)
    return build_surface(
        spec, cfg.k_max, cfg.precision_bits, unit_area=cfg.unit_area, torus=cfg.torus, slit_length=slit
    )


def _trajectory(cfg: RunConfig):
    from .surface import systole_trajectory

    surf = _surface(cfg)
    g = cfg.grid
    count = int(math.floor((g.end - g.start) / g.step + 1e-9)) + 1
    grid = [g.start + i * g.step for i in range(count)]
    return surf, systole_trajectory(surf, grid, k_max=cfg.candidates_k)


def cmd_cf(cfg: RunConfig, digest: str) -> dict[str, str]:
    spec = AlphaSpec.from_dict(cfg.alpha)
    table = build_table(spec, cfg.k_max, cfg.precision_bits)
    checks = [check_good_bound(table, k) for k in range(1, table.k_max)]
    report = {
        "alpha_spec": spec.to_dict(),
        "k_max": table.k_max,
        "good_bound_failures": [k for k, c in enumerate(checks, start=1) if not c.ok],
        "good_bound_all_ok": all(c.ok for c in checks),
    }
    if spec.is_irrational:
        vs = veech_sum(table)
        report["veech_verdict"] = vs.verdict
        report["veech_horizon"] = vs.horizon
        report["veech_tail_bound"] = None if vs.tail_bound is None else float(vs.tail_bound)
    return {"cf.csv": stamp_csv(table_to_csv(table), digest), "cf_report.json": dump_json(report, digest)}


def cmd_surface(cfg: RunConfig, digest: str) -> dict[str, str]:
    surf = _surface(cfg)
    return {"surface.json": dump_json(surf.descriptor(), digest)}


def cmd_systole(cfg: RunConfig, digest: str) -> dict[str, str]:
    _, traj = _trajectory(cfg)
    return {"systole.csv": stamp_csv(traj.to_csv(), digest)}


def cmd_laws(cfg: RunConfig, digest: str) -> dict[str, str]:
    from .laws import DistanceBoundConfig, divergence_integral, distance_bound_series, loglaw_stats

    surf, traj = _trajectory(cfg)
    rep = loglaw_stats(traj, cfg.lambdas, cfg.burn_in)
    out = rep.to_dict()
    if not surf.is_torus:
        dist = distance_bound_series(traj, DistanceBoundConfig(cfg.k2, cfg.burn_in))
        out["limsup_distance_ratio"] = dist.limsup_ratio
    div = divergence_integral(traj, tol=cfg.quadrature_tol, burn_in=cfg.burn_in)
    out["divergence"] = {
        "T": div.t[-1],
        "estimate": div.estimate[-1],
        "lower": div.lower[-1],
        "upper": div.upper[-1],
        "error_estimate": div.error_estimate,
        "dyadic_ratio": div.dyadic_ratio,
        "verdict": div.verdict,
    }
    stride = max(1, len(div.t) // 64)
    out["integral"] = div.integral_rows(stride)
    out["verdict"] = div.verdict
    return {"laws.json": dump_json(out, digest)}


def cmd_ergodicity(cfg: RunConfig, digest: str) -> dict[str, str]:
    from .vertical import OrbitState, build_skew_product, ergodicity_probe

    surf = _surface(cfg)
    if surf.is_torus:
        raise ConfigError("the ergodicity probe needs the slit surface")
    iet = build_skew_product(surf)
    starts = [OrbitState(Fraction(x), int(sheet)) for x, sheet in cfg.probe.starts]
    p = cfg.probe
    rep = ergodicity_probe(iet, starts, p.n, p.threshold, p.ergodic_threshold, p.n_min)
    block = rep.verdict_block()
    block["checkpoints"] = rep.checkpoints
    block["gaps"] = rep.gaps
    return {"ergodicity.csv": stamp_csv(rep.to_csv(), digest), "ergodicity.json": dump_json(block, digest)}


def cmd_certify(cfg: RunConfig, digest: str) -> dict[str, str]:
    from .complexes import RationalSurface, dichotomy_check, sheet_torus_complex

    surf = _surface(cfg)
    if surf.is_torus:
        raise ConfigError("certify needs the slit surface")
    rs = RationalSurface.from_surface(surf)
    c = cfg.certificate
    res = dichotomy_check(rs, sheet_torus_complex(rs, c.sheet), c.N, samples=c.samples, seed=cfg.seed)
    return {"certify.json": dump_json(res.to_dict(), digest)}


COMMANDS = {
    "cf": cmd_cf,
    "surface": cmd_surface,
    "systole": cmd_systole,
    "laws": cmd_laws,
    "ergodicity": cmd_ergodicity,
    "certify": cmd_certify,
}


# ---------------------------------------------------------------------------
# entry point


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="slitlaw", description=__doc__.splitlines()[0])
    p.add_argument("subcommand", choices=SUBCOMMANDS)
    p.add_argument("--config", type=Path, help="JSON run configuration")
    p.add_argument("--output-dir", type=Path)
    p.add_argument("--seed", type=int)
    p.add_argument("--precision-bits", type=int)
    p.add_argument("--unit-area", action="store_true", default=None)
    p.add_argument("--k2", type=float)
    p.add_argument("--k-max", type=int)
    p.add_argument("--set", action="append", default=[], metavar="PATH=JSON", help="override any field, e.g. grid.step=0.25")
    return p


def _apply_set(d: dict, item: str) -> None:
    if "=" not in item:
        raise ConfigError(f"--set expects PATH=JSON, got {item!r}")
    path, raw = item.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    keys = path.split(".")
    cur = d
    for k in keys[:-1]:
        cur = cur.setdefault(k, {})
        if not isinstance(cur, dict):
            raise ConfigError(f"cannot set {path!r}")
    cur[keys[-1]] = value


def load_config(args) -> RunConfig:
    d = {}
    if args.config is not None:
        try:
            d = json.loads(args.config.read_text())
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read config: {e}") from None
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
    for item in args.set:
        _apply_set(d, item)
    flags = {
        "seed": args.seed,
        "precision_bits": args.precision_bits,
        "unit_area": args.unit_area,
        "k2": args.k2,
        "k_max": args.k_max,
        "output_dir": None if args.output_dir is None else str(args.output_dir),
    }
    d.update({k: v for k, v in flags.items() if v is not None})
    return RunConfig.from_dict(d)


def run(subcommand: str, cfg: RunConfig) -> dict[str, str]:
    """Compute every output of ``subcommand`` as {file name: text}; nothing is written."""
    return COMMANDS[subcommand](cfg, cfg.digest())


def main(argv=None) -> int:
    from .complexes import TimeCapError
    from .laws import QuadratureError
    from .vertical import SingularOrbitError

    args = _parser().parse_args(argv)
    try:
        cfg = load_config(args)
        outputs = run(args.subcommand, cfg)
    except (InconclusiveError, QuadratureError, TimeCapError, SingularOrbitError) as e:
        print(f"inconclusive: {e}", file=sys.stderr)
        return 2
    except (ConfigError, ValueError, OverflowError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, text in outputs.items():
        (out / name).write_text(text)
        print(out / name)
    return 0


if __name__ == "__main__":
    sys.exit(main())
