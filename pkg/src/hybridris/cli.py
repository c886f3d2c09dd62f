"""Command-line front end.

Exit codes: 0 success, 1 configuration error, 2 I/O error, 3 failed
self-check (``validate`` only).
"""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace

from .config import ConfigError, load_config
from .sim import HYBRID, run_hybrid_sweep, run_point, run_sweep, summarize
from .validate import run_checks

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_CHECK = 0, 1, 2, 3


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML configuration file")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a configuration entry (repeatable)")
    common.add_argument("--seed", type=int, help="master seed")
    common.add_argument("--out", help="output CSV path")
    common.add_argument("--defaults", action="store_true",
                        help="use built-in defaults when no config file is available")
    common.add_argument("-v", "--verbose", action="store_true")

    ap = argparse.ArgumentParser(prog="hybridris",
                                 description="RIS-assisted multi-user downlink simulator")
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("sweep", parents=[common], help="power sweep over scenarios and modes")
    pt = sub.add_parser("point", parents=[common], help="one mode at one total power")
    pt.add_argument("--mode", required=True)
    pt.add_argument("--power", type=float, required=True, help="total power in dBm")
    pt.add_argument("--scenario", help="override the scene scenario")
    hy = sub.add_parser("hybrid", parents=[common], help="hybrid controller sweep")
    hy.add_argument("--log", help="decision log CSV path")
    sub.add_parser("validate", parents=[common], help="run the invariant/oracle checks")
    return ap


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "validate":
        checks = run_checks()
        for c in checks:
            print(f"{'PASS' if c.passed else 'FAIL'} {c.name}: {c.detail}")
        return EXIT_OK if all(c.passed for c in checks) else EXIT_CHECK

    try:
        overrides = list(args.set)
        if args.seed is not None:
            overrides.append(f"master_seed={args.seed}")
        if args.out is not None:
            overrides.append(f"output_path={args.out}")
        if args.command == "hybrid" and args.log is not None:
            overrides.append(f"decision_log_path={args.log}")
        cfg = load_config(args.config, overrides, use_defaults=args.defaults)
        if args.command == "hybrid" and HYBRID not in cfg.modes:
            cfg = replace(cfg, modes=(*cfg.modes, HYBRID))
        if args.command == "point":
            scene = cfg.scene if args.scenario is None else replace(cfg.scene,
                                                                    scenario=args.scenario)
            mean, err = run_point(scene, args.mode, args.power, cfg.drops, cfg.master_seed,
                                  cfg.optimizer, thresholds=cfg.thresholds,
                                  passive_static_power=cfg.passive_static_power,
                                  dormant_static_power=cfg.dormant_static_power, jobs=cfg.jobs)
            print(f"{scene.scenario.value} {args.mode} {args.power:g} dBm: "
                  f"mean SE {mean:.6f} bits/s/Hz, stderr {err:.6f} ({cfg.drops} drops)")
            return EXIT_OK
    except (ConfigError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO

    try:
        result = (run_hybrid_sweep if args.command == "hybrid" else run_sweep)(cfg)
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    print(summarize(result))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
