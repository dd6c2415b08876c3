"""Command-line entry point.

Verbs:
  run <config>            run the scenario, write log/summary/plot files
  verify <config>         run the certification suites and print margins
  synth-profiles <config> write the synthesized disturbance profile CSV

Common flags: --seed, --out-dir, --horizon-s.  The default output
directory comes from $HYBRIDFO_OUT_DIR (falling back to ./out).
"""

import argparse
import sys
from pathlib import Path

from . import backend
from .config import ConfigError, load_config
from .cosim import build_profile
from .profiles import PROFILE_COLUMNS
from .scenario import default_out_dir, run_scenario, run_verify


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("config", help="scenario config file")
    parser.add_argument("--seed", type=int, default=None, help="override profiles.seed")
    parser.add_argument("--out-dir", default=None, help="output directory")
    parser.add_argument("--horizon-s", type=float, default=None, help="override horizon_s")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hybridfo", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("run", "verify", "synth-profiles"):
        _add_common(sub.add_parser(name))
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
    except (OSError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.horizon_s is not None:
        from dataclasses import replace

        cfg = replace(cfg, horizon_s=args.horizon_s)
    out_dir = Path(args.out_dir) if args.out_dir else default_out_dir()

    if args.command == "run":
        result = run_scenario(cfg, out_dir=out_dir, seed=args.seed)
        print(f"kernel backend: {backend.backend_name()}")
        for key, value in result.summary.items():
            print(f"{key} = {value}")
        print(f"artifacts in {result.out_dir}")
        return result.exit_code

    if args.command == "verify":
        code, reports = run_verify(cfg, seed=args.seed)
        print(f"kernel backend: {backend.backend_name()}")
        for report in reports:
            flag = "PASS" if report.passed else "FAIL"
            print(f"[{flag}] {report.name}: {report.detail}")
        return code

    # synth-profiles
    out_dir.mkdir(parents=True, exist_ok=True)
    profile = build_profile(cfg, seed=args.seed)
    path = out_dir / "profiles.csv"
    columns = (
        profile.t,
        profile.wind_ms,
        profile.dni_wm2,
        profile.dhi_wm2,
        profile.tair_c,
        profile.demand_kw,
    )
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(",".join(PROFILE_COLUMNS) + "\n")
        for row in zip(*columns):
            handle.write(",".join(f"{v:.6g}" for v in row) + "\n")
    print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
