"""Command-line front end for the enumeration / simulation / bound /
certification pipeline.

Exit codes: 0 success, 1 usage or configuration error, 2 partial data
failure (some balls failed or data is missing), 3 internal invariant
violation.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from dataclasses import dataclass, field, fields

from .balls import BallDatabase, BallError, enumerate_b1, extend_balls
from .commgraph import N_TERMS
from .lrbound import BoundParams, bound_scan, global_bound, local_bound
from .qasim import DEFAULT_HILBERT_CAP, DEFAULT_TOL, EnergyCache, batch_simulate
from .ratio import MissingEnergyError, certify_ratio, scan_T_alpha
from .schedule import IntegralTable, Schedule

__all__ = ["RunConfig", "main"]

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_PARTIAL = 2
EXIT_INVARIANT = 3

OUTPUT_DIR_ENV = "QALR_OUTPUT_DIR"


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    """Pipeline parameters, loadable from a flat key=value file with
    command-line overrides."""

    d: int = 3
    p: int = 2
    q: int = 2
    k: int = 3
    T: float = 3.33
    alpha: float = 1.53
    T_grid: list = field(default_factory=list)
    alpha_grid: list = field(default_factory=list)
    schedule: str = "linear"
    threshold: float = 0.7020
    hilbert_cap: int = DEFAULT_HILBERT_CAP
    parallelism: int = 1
    tol: float = DEFAULT_TOL
    seed: int = 0
    ball_db: str = ""
    energy_cache: str = ""
    output_dir: str = "."

    @classmethod
    def from_file(cls, path: str) -> "RunConfig":
        cfg = cls()
        try:
            with open(path) as fh:
                lines = fh.read().splitlines()
        except OSError as exc:
            raise UsageError(f"cannot read config {path}: {exc}") from exc
        valid = {f.name for f in fields(cls)}
        for lineno, raw in enumerate(lines, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key=value, got {raw!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            if key not in valid:
                raise UsageError(f"{path}:{lineno}: unknown config key {key!r}")
            cfg.set(key, value)
        return cfg

    def set(self, key: str, value: str) -> None:
        current = getattr(self, key)
        if isinstance(current, bool):
            setattr(self, key, value.lower() in ("1", "true", "yes"))
        elif isinstance(current, int):
            setattr(self, key, int(value))
        elif isinstance(current, float):
            setattr(self, key, float(value))
        elif isinstance(current, list):
            setattr(self, key, [float(v) for v in value.split(",") if v.strip()])
        else:
            setattr(self, key, value)

    def apply_overrides(self, args: argparse.Namespace) -> None:
        for f in fields(self):
            value = getattr(args, f.name, None)
            if value is not None:
                setattr(self, f.name, value)
        env_dir = os.environ.get(OUTPUT_DIR_ENV)
        if env_dir:
            self.output_dir = env_dir

    def schedule_obj(self) -> Schedule:
        try:
            return Schedule.from_id(self.schedule)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc

    def provenance(self) -> dict:
        return {
            "d": self.d,
            "q": self.q,
            "T": self.T,
            "alpha": self.alpha,
            "schedule": self.schedule,
            "threshold": self.threshold,
            "tol": self.tol,
            "seed": self.seed,
        }


def _load_db(path: str) -> BallDatabase:
    if not path:
        raise UsageError("a ball database path is required (--db)")
    try:
        return BallDatabase.load(path)
    except OSError as exc:
        raise UsageError(f"cannot read ball database {path}: {exc}") from exc


def _out_path(cfg: RunConfig, name: str) -> str:
    os.makedirs(cfg.output_dir, exist_ok=True)
    return os.path.join(cfg.output_dir, name)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_enumerate(cfg: RunConfig, args) -> int:
    out = args.out or cfg.ball_db
    if not out:
        raise UsageError("enumerate requires an output path (--out)")
    if os.path.exists(out) and not args.force:
        print(f"error: {out} exists; pass --force to overwrite", file=sys.stderr)
        return EXIT_USAGE
    db = enumerate_b1(cfg.d)
    print(f"p=1: {len(db)} balls")
    for radius in range(2, cfg.p + 1):
        db = extend_balls(db)
        print(f"p={radius}: {len(db)} balls")
    try:
        db.save(out)
    except OSError as exc:
        print(f"error: cannot write {out}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    print(f"wrote {len(db)} balls to {out}")
    return EXIT_OK


def cmd_simulate(cfg: RunConfig, args) -> int:
    db = _load_db(args.db or cfg.ball_db)
    cache_path = args.cache or cfg.energy_cache or None
    cache = EnergyCache(cache_path)
    schedule = cfg.schedule_obj()

    def progress(ball, rec, err):
        if err is not None:
            print(f"  {ball.id}: FAILED: {err}", file=sys.stderr)

    result = batch_simulate(
        db,
        cfg.T,
        cfg.alpha,
        schedule,
        cache=cache,
        tol=cfg.tol,
        hilbert_cap=cfg.hilbert_cap,
        parallelism=cfg.parallelism,
        progress=progress,
    )
    print(
        f"{result.simulated} simulated, {result.cached} cached, "
        f"{len(result.failures)} failed"
    )
    return EXIT_PARTIAL if result.failures else EXIT_OK


def _print_breakdown(rows, out_file) -> None:
    names = ["ball_id", "T", "alpha"] + [f"term_{m}" for m in range(N_TERMS)] + [
        "remainder",
        "total",
    ]
    writer = csv.DictWriter(out_file, fieldnames=names)
    writer.writeheader()
    for row in rows:
        writer.writerow({k: row[k] for k in names})


def cmd_bound(cfg: RunConfig, args) -> int:
    schedule = cfg.schedule_obj()
    params = BoundParams(d=cfg.d, k=cfg.k, T=cfg.T, alpha=cfg.alpha, schedule=schedule)
    integrals = IntegralTable.build(schedule, 2 * cfg.k + 6)
    ball = None
    if args.ball:
        db = _load_db(args.db or cfg.ball_db)
        try:
            ball = db.by_id(args.ball)
        except KeyError:
            raise UsageError(f"ball {args.ball} not in database") from None
    T_grid = cfg.T_grid or [cfg.T]
    alpha_grid = cfg.alpha_grid or [cfg.alpha]
    rows = bound_scan(ball, T_grid, alpha_grid, params, integrals)
    if args.out:
        with open(args.out, "w", newline="") as fh:
            _print_breakdown(rows, fh)
        print(f"wrote {len(rows)} rows to {args.out}")
    else:
        _print_breakdown(rows, sys.stdout)
    return EXIT_OK


def cmd_certify(cfg: RunConfig, args) -> int:
    db = _load_db(args.db or cfg.ball_db)
    cache = EnergyCache(args.cache or cfg.energy_cache or None)
    schedule = cfg.schedule_obj()
    try:
        cert = certify_ratio(
            db, cache, cfg.T, cfg.alpha, cfg.q, schedule, cfg.threshold
        )
    except MissingEnergyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARTIAL
    if not cert.is_consistent():
        print("error: certificate failed internal recomputation", file=sys.stderr)
        return EXIT_INVARIANT
    report_path = _out_path(cfg, "certificate.txt")
    json_path = _out_path(cfg, "certificate.json")
    with open(report_path, "w") as fh:
        fh.write(cert.report() + "\n")
        fh.write(f"  provenance              = {cfg.provenance()}\n")
    with open(json_path, "w") as fh:
        fh.write(cert.to_json() + "\n")
    print(cert.report())
    print(f"wrote {report_path} and {json_path}")
    return EXIT_OK


def cmd_scan(cfg: RunConfig, args) -> int:
    db = _load_db(args.db or cfg.ball_db)
    cache = EnergyCache(args.cache or cfg.energy_cache or None)
    schedule = cfg.schedule_obj()
    T_grid = cfg.T_grid or [cfg.T]
    alpha_grid = cfg.alpha_grid or [cfg.alpha]
    try:
        rows = scan_T_alpha(
            db,
            cache,
            T_grid,
            alpha_grid,
            cfg.q,
            schedule,
            use_local=args.local,
            worst_n=args.worst_n,
        )
    except MissingEnergyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARTIAL
    out = args.out or _out_path(cfg, "scan.csv")
    with open(out, "w", newline="") as fh:
        writer = csv.DictWriter(
            fh, fieldnames=["ball_id", "alpha", "max_corrected", "argmax_T", "bound"]
        )
        writer.writeheader()
        writer.writerows(rows)
    print(f"wrote {len(rows)} rows to {out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _float_list(text: str) -> list:
    return [float(v) for v in text.split(",") if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="qalr",
        description="Certified approximation-ratio bounds for annealing on "
        "regular-graph MaxCut.",
    )
    parser.add_argument("--config", help="flat key=value config file")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key=value config file")
    common.add_argument("--d", type=int, dest="d")
    common.add_argument("--T", type=float, dest="T")
    common.add_argument("--alpha", type=float, dest="alpha")
    common.add_argument("--schedule", dest="schedule")
    common.add_argument("--seed", type=int, dest="seed")
    common.add_argument("--output-dir", dest="output_dir")

    sub = parser.add_subparsers(dest="command", required=True)

    p_enum = sub.add_parser("enumerate", parents=[common], help="build a ball database")
    p_enum.add_argument("--p", type=int, dest="p")
    p_enum.add_argument("--out", help="database output path")
    p_enum.add_argument("--force", action="store_true")
    p_enum.set_defaults(func=cmd_enumerate)

    p_sim = sub.add_parser("simulate", parents=[common], help="simulate ball energies")
    p_sim.add_argument("--db")
    p_sim.add_argument("--cache")
    p_sim.add_argument("--tol", type=float, dest="tol")
    p_sim.add_argument("--hilbert-cap", type=int, dest="hilbert_cap")
    p_sim.add_argument("--parallelism", type=int, dest="parallelism")
    p_sim.set_defaults(func=cmd_simulate)

    p_bound = sub.add_parser("bound", parents=[common], help="evaluate error bounds")
    p_bound.add_argument("--k", type=int, dest="k")
    p_bound.add_argument("--global", dest="use_global", action="store_true")
    p_bound.add_argument("--local", dest="use_local", action="store_true")
    p_bound.add_argument("--ball", help="ball id for the per-ball bound")
    p_bound.add_argument("--db")
    p_bound.add_argument("--T-grid", type=_float_list, dest="T_grid")
    p_bound.add_argument("--alpha-grid", type=_float_list, dest="alpha_grid")
    p_bound.add_argument("--out")
    p_bound.set_defaults(func=cmd_bound)

    p_cert = sub.add_parser("certify", parents=[common], help="emit a ratio certificate")
    p_cert.add_argument("--q", type=int, dest="q")
    p_cert.add_argument("--db")
    p_cert.add_argument("--cache")
    p_cert.add_argument("--threshold", type=float, dest="threshold")
    p_cert.set_defaults(func=cmd_certify)

    p_scan = sub.add_parser("scan", parents=[common], help="emit (T, alpha) scan tables")
    p_scan.add_argument("--q", type=int, dest="q")
    p_scan.add_argument("--db")
    p_scan.add_argument("--cache")
    p_scan.add_argument("--T-grid", type=_float_list, dest="T_grid")
    p_scan.add_argument("--alpha-grid", type=_float_list, dest="alpha_grid")
    p_scan.add_argument("--local", action="store_true")
    p_scan.add_argument("--worst-n", type=int, dest="worst_n")
    p_scan.add_argument("--out")
    p_scan.set_defaults(func=cmd_scan)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        cfg = RunConfig.from_file(args.config) if args.config else RunConfig()
        cfg.apply_overrides(args)
        if args.command == "bound" and getattr(args, "use_local", False) and not args.ball:
            raise UsageError("--local requires --ball <id>")
        return args.func(cfg, args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (BallError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
