"""``steerlab`` command line: ``run`` an experiment or ``verify`` the build."""
from __future__ import annotations

import argparse
import csv
import datetime
import json
import math
import sys
import time
from pathlib import Path
from typing import Any, Optional, Sequence

from steerlab import __version__
from steerlab._backend import BACKEND
from steerlab.acceptance import run_suite
from steerlab.config import EXPERIMENTS, FRAMES, ConfigError, ExperimentConfig, load_config
from steerlab.experiments import RUNNERS

VERIFY_COLUMNS = ["criterion", "name", "measured", "target", "tolerance", "passed", "detail"]


def fmt(value: Any) -> str:
    """CSV cell: numbers in 12-significant-digit scientific notation."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, float)):
        v = float(value)
        if math.isnan(v):
            return "nan"
        return f"{v:.11e}"
    return str(value)


def write_csv(path: Path, columns: Sequence[str], rows: Sequence[dict]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([fmt(row.get(c, "")) for c in columns])


def _jsonable(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


def write_report(path: Path, report: dict) -> None:
    path.write_text(json.dumps(_jsonable(report), indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")


def _runtime(wall_s: float, **extra) -> dict:
    return {
        "backend": BACKEND,
        "version": __version__,
        "wall_s": wall_s,
        "finished_at": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        **extra,
    }


def run(cfg: ExperimentConfig, echo=print) -> int:
    if cfg.experiment == "verify":
        return verify(cfg, echo)
    out_dir = Path(cfg.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    outcome = RUNNERS[cfg.experiment](cfg)
    write_csv(out_dir / "results.csv", outcome.columns, outcome.rows)
    write_report(out_dir / "report.json", {
        "inputs": cfg.echo(),
        "results": outcome.rows,
        "failures": outcome.failures,
        "runtime": _runtime(time.perf_counter() - t0, wall_ms=outcome.wall_ms),
    })
    for f in outcome.failures:
        echo(f"integration failure at {', '.join(f'{k}={v}' for k, v in f.items() if k != 'error')}: "
             f"{f['error']}")
    echo(f"wrote {out_dir / 'results.csv'} ({len(outcome.rows)} rows) and {out_dir / 'report.json'}")
    return 1 if outcome.failures else 0


def verify(cfg: ExperimentConfig, echo=print) -> int:
    out_dir = Path(cfg.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    results = run_suite(cfg.steps_per_period, echo=echo)
    rows = [{"criterion": r.id, "name": r.name, "measured": r.measured, "target": r.target,
             "tolerance": r.tolerance, "passed": r.passed, "detail": r.detail} for r in results]
    write_csv(out_dir / "results.csv", VERIFY_COLUMNS, rows)
    failed = [r.id for r in results if not r.passed]
    write_report(out_dir / "report.json", {
        "inputs": cfg.echo(),
        "criteria": rows,
        "passed": not failed,
        "failed": failed,
        "runtime": _runtime(time.perf_counter() - t0,
                            criterion_wall_s={r.id: r.wall_s for r in results}),
    })
    echo(f"{len(results) - len(failed)}/{len(results)} criteria passed"
         + (f"; failed: {', '.join(failed)}" if failed else ""))
    return 1 if failed else 0


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="steerlab", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (("run", "run one experiment"),
                            ("verify", "run the acceptance suite")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="flat JSON config file")
        p.add_argument("--out", help="output directory (results.csv, report.json)")
        p.add_argument("--steps-per-period", type=int, dest="steps_per_period")
        if name == "verify":
            continue
        p.add_argument("--experiment", choices=[e for e in EXPERIMENTS])
        p.add_argument("--r", type=_floats, help="squeezing amplitude(s); r1 for fivelevel")
        p.add_argument("--r2", type=float)
        p.add_argument("--xi", type=_floats, help="adiabatic parameter(s) phi_rate/gamma")
        p.add_argument("--xi-range", dest="xi_range", help="geometric range start:stop:factor")
        p.add_argument("--phi0", type=float)
        p.add_argument("--frame", choices=FRAMES)
        p.add_argument("--stride", type=int, dest="record_stride")
        p.add_argument("--berry-steps", type=int, dest="berry_steps")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {k: v for k, v in vars(args).items() if k not in ("command", "config")}
    if args.command == "verify":
        overrides["experiment"] = "verify"
    try:
        cfg = load_config(args.config, overrides)
    except ConfigError as err:
        print(f"steerlab: config error: {err}", file=sys.stderr)
        return 2
    if args.command == "run" and cfg.experiment == "verify":
        return verify(cfg)
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
