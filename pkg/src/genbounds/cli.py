"""Command-line entry point.

Subcommands: ``curve``, ``constrained``, ``validate``, ``misspec``,
``learner``, and ``reproduce fig1|fig2|fig3|fig4``.  Exit codes: 0 success,
1 validation failure, 2 configuration error, 3 numerical non-convergence.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

from .config import PRESET_NAMES, parse_config, preset
from .errors import ConfigError, NonConvergenceError
from .experiments import (
    emit_plot,
    run_constrained_curve,
    run_curve,
    run_learner,
    run_misspec,
    run_validate,
    write_manifest,
)

RUNNERS = {
    "curve": run_curve,
    "constrained": run_constrained_curve,
    "misspec": run_misspec,
    "learner": run_learner,
}

PRESET_RUNNERS = {
    "fig1": run_curve,
    "fig2": run_curve,
    "fig3": run_constrained_curve,
    "fig4": run_constrained_curve,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="genbounds",
        description="Generalization-bound sweeps on finite alphabets",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required: bool) -> None:
        if config_required:
            p.add_argument("--config", required=True, help="path to a config file")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--seed", type=int, default=0, help="seed (u64)")
        p.add_argument("--unit", choices=("nats", "bits"), default="nats")
        p.add_argument("--svg", action="store_true", help="also emit an SVG chart")

    for name in ("curve", "constrained", "misspec", "learner"):
        common(sub.add_parser(name, help=f"run the {name} sweep"), True)

    p_val = sub.add_parser("validate", help="run the sandwich/tail validation suite")
    p_val.add_argument("--config", help="optional config overriding suite size")
    p_val.add_argument("--out", default=".", help="output directory")
    p_val.add_argument("--seed", type=int, default=0)
    p_val.add_argument("--unit", choices=("nats", "bits"), default="nats")

    p_rep = sub.add_parser("reproduce", help="run a built-in figure preset")
    p_rep.add_argument("figure", choices=PRESET_NAMES)
    common(p_rep, False)
    return parser


def _load_config(path: str):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, source=path)


def _emit(result, out_dir: Path, base: str, config, seed, unit, wall, want_svg):
    out_dir.mkdir(parents=True, exist_ok=True)
    names = dict(config.outputs)
    csv_path = out_dir / names.get("csv", f"{base}.csv")
    result.write_csv(csv_path)
    written = [csv_path]
    if want_svg:
        svg_path = out_dir / names.get("svg", f"{base}.svg")
        emit_plot(result, svg_path)
        written.append(svg_path)
    manifest_path = out_dir / names.get("manifest", f"{base}_manifest.txt")
    write_manifest(manifest_path, config.hash_for(seed, unit), wall)
    written.append(manifest_path)
    return written


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "reproduce":
            _, config = preset(args.figure)
            runner = PRESET_RUNNERS[args.figure]
            start = time.perf_counter()
            result = runner(config, seed=args.seed, unit=args.unit)
            wall = time.perf_counter() - start
            written = _emit(result, Path(args.out), args.figure, config,
                            args.seed, args.unit, wall, want_svg=True)
            for path in written:
                print(path)
            return 0
        if args.command == "validate":
            if args.config:
                config = _load_config(args.config)
            else:
                config = parse_config("", source="<defaults>")
            report = run_validate(config, seed=args.seed)
            sys.stdout.write(report.summary_text())
            return 0 if report.passed else 1
        config = _load_config(args.config)
        runner = RUNNERS[args.command]
        start = time.perf_counter()
        result = runner(config, seed=args.seed, unit=args.unit)
        wall = time.perf_counter() - start
        written = _emit(result, Path(args.out), args.command, config,
                        args.seed, args.unit, wall, want_svg=args.svg)
        for path in written:
            print(path)
        return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NonConvergenceError as exc:
        print(f"numerical non-convergence: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
