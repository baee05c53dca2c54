"""Command-line driver.

    otabyz run [--config PATH] [--preset NAME] [--seed N] [--out CSV] [--set key=value ...]
    otabyz presets
    otabyz validate-theorem [--seeds K] [--rounds T] [--byzantine 0,2,4]
"""
from __future__ import annotations

import argparse
import dataclasses
import logging
import sys

from . import BACKEND
from .config import (PRESETS, dump_config, emit_metrics, metrics_csv, parse_config,
                     preset_config)
from .engine import ConfigError, Simulation

log = logging.getLogger("otabyz")


def _cmd_run(args) -> int:
    base = preset_config(args.preset) if args.preset else None
    overrides = list(args.set or [])
    if args.seed is not None:
        overrides.append(f"seed={args.seed}")
    cfg = parse_config(args.config, overrides, base=base)
    if args.dump_config:
        with open(args.dump_config, "w") as fh:
            fh.write(dump_config(cfg))
    sim = Simulation(cfg)
    result = sim.run()
    if len(result.metrics) != cfg.rounds:
        log.error("run stopped after %d of %d rounds", len(result.metrics), cfg.rounds)
        return 1
    if args.out:
        emit_metrics(result.metrics, args.out)
    else:
        sys.stdout.write(metrics_csv(result.metrics))
    last = result.metrics[-1]
    log.info("finished %d rounds: test_loss=%s test_acc=%s", cfg.rounds, last.test_loss,
             last.test_acc)
    return 0


def _cmd_presets(args) -> int:
    width = max(map(len, PRESETS))
    for name, (_, description) in PRESETS.items():
        print(f"{name:<{width}}  {description}")
    return 0


def _cmd_validate(args) -> int:
    from .validation import validate_theorem

    cfg = preset_config("theorem-validation")
    if args.rounds:
        cfg = dataclasses.replace(cfg, rounds=args.rounds)
    b_values = [int(b) for b in args.byzantine.split(",")]
    checks = validate_theorem(cfg, range(args.seeds), b_values)
    ok = True
    for c in checks:
        status = "PASS" if c.holds else "FAIL"
        ok &= c.holds
        print(f"B={c.B}: {status} max_violation_ratio={c.max_ratio:.6f} "
              f"floor={c.empirical_floor():.6g} A={c.bound[-1]:.6g}")
    floors = [c.empirical_floor() for c in checks]
    increasing = all(a < b for a, b in zip(floors, floors[1:]))
    ok &= increasing
    print(f"asymptotic error increasing in B: {'PASS' if increasing else 'FAIL'}")
    worst = max(c.max_ratio for c in checks)
    print(f"{'PASS' if ok else 'FAIL'} max_violation_ratio={worst:.6f}")
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="otabyz", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one simulation and write per-round metrics")
    run.add_argument("--config", help="flat key=value config file")
    run.add_argument("--preset", help="start from a named preset")
    run.add_argument("--seed", type=int, help="override the master seed")
    run.add_argument("--out", help="CSV output path (default: stdout)")
    run.add_argument("--set", action="append", metavar="KEY=VALUE",
                     help="override one config key (repeatable)")
    run.add_argument("--dump-config", help="write the resolved config to this path")
    run.set_defaults(func=_cmd_run)

    presets = sub.add_parser("presets", help="list experiment presets")
    presets.set_defaults(func=_cmd_presets)

    val = sub.add_parser("validate-theorem", help="Monte-Carlo check of the convergence bound")
    val.add_argument("--seeds", type=int, default=50)
    val.add_argument("--rounds", type=int)
    val.add_argument("--byzantine", default="0,2,4", help="comma-separated attacker counts")
    val.set_defaults(func=_cmd_validate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    log.debug("kernel backend: %s", BACKEND)
    try:
        return args.func(args)
    except (ConfigError, OSError) as exc:
        log.error("%s", exc)
        return 2


if __name__ == "__main__":
    sys.exit(main())
