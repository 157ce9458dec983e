"""Command-line harness: ``symclone {analytic,simulate,scan,calibrate-gamma,reproduce}``."""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys

from .experiment import (
    ConfigError,
    ExperimentConfig,
    apply_overrides,
    emit_csv,
    load_config,
    run,
)

EXIT_OK, EXIT_CONFIG, EXIT_ACCEPTANCE, EXIT_IO = 0, 1, 2, 3
_NUMERIC_FLAGS = ("--za", "--zb", "--mu", "--eps", "--seed", "--shots")

_FLAGS = {
    "scenario": "scenario",
    "input_state": "input_state",
    "shots": "shots",
    "seed": "seed",
    "mu": "mu",
    "eps": "double_pair_eps",
    "za": "z_a_um",
    "zb": "z_b_um",
    "n": "n",
    "m": "m",
}


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key = value configuration file")
    p.add_argument("--scenario")
    p.add_argument("--input-state", dest="input_state", help="H, H+V, H+iV or theta,phi")
    p.add_argument("--shots")
    p.add_argument("--seed")
    p.add_argument("--mu", help="mean photon number of the B arm (0: single photon)")
    p.add_argument("--eps", help="double-pair emission probability")
    p.add_argument("--za", help="Z_A in um, or start,stop,steps")
    p.add_argument("--zb", help="Z_B in um, or start,stop,steps")
    p.add_argument("--n")
    p.add_argument("--m")
    p.add_argument("--out", help="CSV output path")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--print-config", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="symclone", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (
        ("analytic", "closed-form N -> M success probability and fidelity"),
        ("simulate", "one delay setting plus peak/baseline reference runs"),
        ("scan", "sweep Z_A and/or Z_B"),
        ("calibrate-gamma", "Gamma from the |V>|H>|V> calibration input"),
        ("reproduce", "run every acceptance check and print the comparison table"),
    ):
        _common(sub.add_parser(name, help=help_))
    return parser


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    cfg = ExperimentConfig()
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                cfg = load_config(fh.read(), cfg)
        except OSError as e:
            raise ConfigError("config", str(e)) from None
    overrides = {key: getattr(args, flag) for flag, key in _FLAGS.items() if getattr(args, flag) is not None}
    cfg = apply_overrides(cfg, overrides)
    if args.command == "analytic":
        cfg.scenario = "nm_analytic"
    elif args.command == "calibrate-gamma":
        cfg.scenario = "gamma_calibration"
    return cfg.validate()


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, float) and math.isnan(x):
        return None
    if hasattr(x, "item"):
        return x.item()
    return x


def _write_csv(rows, path) -> int:
    try:
        emit_csv(rows, path)
    except OSError as e:
        print(f"error: cannot write {path}: {e}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


def _attach_negative(argv: list[str]) -> list[str]:
    """``--za -300,300,31`` would read as a flag; rewrite to ``--za=-300,300,31``."""
    out: list[str] = []
    i = 0
    while i < len(argv):
        a = argv[i]
        if a in _NUMERIC_FLAGS and i + 1 < len(argv) and argv[i + 1].startswith("-") and argv[i + 1][1:2].isdigit():
            out.append(f"{a}={argv[i + 1]}")
            i += 2
            continue
        out.append(a)
        i += 1
    return out


def main(argv=None) -> int:
    argv = _attach_negative(list(sys.argv[1:] if argv is None else argv))
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        # argparse exits 2 on usage errors; that code is reserved here
        return EXIT_OK if e.code in (0, None) else EXIT_CONFIG
    try:
        cfg = resolve_config(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    if args.print_config:
        sys.stdout.write(cfg.dump())
        return EXIT_OK

    if args.command == "reproduce":
        from .reproduce import reproduce

        rep = reproduce(cfg.shots, cfg.seed, args.workers, cfg.input_state)
        print(rep.render())
        if args.out and _write_csv(rep.rows, args.out):
            return EXIT_IO
        return EXIT_OK if rep.ok else EXIT_ACCEPTANCE

    if args.command == "scan" and not any(isinstance(v, tuple) for v in (cfg.z_a_um, cfg.z_b_um)):
        print("config error: z_a_um: scan needs --za or --zb as start,stop,steps", file=sys.stderr)
        return EXIT_CONFIG
    if args.command == "simulate" and any(isinstance(v, tuple) for v in (cfg.z_a_um, cfg.z_b_um)):
        print("config error: z_a_um: simulate takes single delays; use scan", file=sys.stderr)
        return EXIT_CONFIG

    try:
        res = run(cfg, workers=args.workers, with_reference=args.command != "scan")
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    summary = dict(res.summary)
    summary["config"] = dataclasses.asdict(cfg)
    print(json.dumps(_jsonable(summary), indent=2, sort_keys=True))
    if args.out and _write_csv(res.rows, args.out):
        return EXIT_IO
    if not res.ok:
        print("error: Fock and projector engines disagree", file=sys.stderr)
        return EXIT_ACCEPTANCE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
