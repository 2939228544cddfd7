"""Command-line entry point: validate, run, ensemble, stationary."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .harness import ConfigError, build_scenario, load_config, run_ensemble, run_scenario, validate_config
from .stationary import search_stationary


def _add_common_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", type=Path, default=None, help="output directory")
    p.add_argument("--dt", type=float, default=None, help="override the time step")
    p.add_argument("--horizon", type=float, default=None, help="override the run horizon")
    p.add_argument("--stride", type=int, default=None, help="override the observer stride")
    p.add_argument(
        "--allow-hypothesis-violation",
        action="store_true",
        default=None,
        help="build counterexample scenarios that fail admissibility rules",
    )


def _overrides(args: argparse.Namespace) -> dict:
    out = {
        "dt": args.dt,
        "horizon": args.horizon,
        "stride": args.stride,
        "allow_hypothesis_violation": args.allow_hypothesis_violation,
    }
    return {k: v for k, v in out.items() if v is not None}


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="platelab",
        description="Numerical laboratory for a strongly damped semilinear plate model",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_validate = sub.add_parser("validate", help="validate a config without running")
    p_validate.add_argument("config", type=Path)

    p_run = sub.add_parser("run", help="run one trajectory and persist the bundle")
    p_run.add_argument("config", type=Path)
    _add_common_run_flags(p_run)

    p_ens = sub.add_parser("ensemble", help="run one trajectory per seed and aggregate")
    p_ens.add_argument("config", type=Path)
    p_ens.add_argument("--seeds", type=int, nargs="+", required=True)
    _add_common_run_flags(p_ens)

    p_stat = sub.add_parser("stationary", help="batch search for stationary states")
    p_stat.add_argument("config", type=Path)
    p_stat.add_argument("--guesses", type=int, default=5)
    p_stat.add_argument("--tol", type=float, default=1e-10)
    p_stat.add_argument("--out", type=Path, default=None)
    p_stat.add_argument("--allow-hypothesis-violation", action="store_true", default=None)

    args = parser.parse_args(argv)

    try:
        if args.command == "validate":
            report = validate_config(args.config)
            for line in report.lines():
                print(line)
            return 0 if report.passed else 1

        if args.command == "run":
            result = run_scenario(args.config, out_dir=args.out, overrides=_overrides(args))
            print(f"status: {result.status}")
            print(f"outputs: {result.out_dir}")
            return 0 if result.ok else 2

        if args.command == "ensemble":
            result = run_ensemble(args.config, seeds=args.seeds, out_dir=args.out)
            print(f"members: {len(result.members)}")
            print(f"aggregate: {result.aggregate_path}")
            return 0

        if args.command == "stationary":
            config = load_config(args.config)
            if args.allow_hypothesis_violation:
                config["allow_hypothesis_violation"] = True
            scenario = build_scenario(config)
            results = search_stationary(scenario, guesses=args.guesses, seed=config["seed"], tol=args.tol)
            for res in results:
                status = "converged" if res.converged else f"NOT converged ({res.message})"
                print(
                    f"guess {res.guess_tag}: {status}, residual {res.residual_norm:.3e}, "
                    f"{res.iterations} Newton iterations"
                )
            if args.out is not None:
                args.out.mkdir(parents=True, exist_ok=True)
                lines = [
                    f"{res.guess_tag},{res.converged},{res.residual_norm!r},{res.iterations}"
                    for res in results
                ]
                (args.out / "stationary.csv").write_text(
                    "guess,converged,residual,newton_iterations\n" + "\n".join(lines) + "\n"
                )
            return 0 if all(r.converged for r in results) else 1

    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (RuntimeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    raise AssertionError("unreachable")


if __name__ == "__main__":
    sys.exit(main())
