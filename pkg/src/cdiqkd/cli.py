"""Command line front end.

Run mode executes a seeded experiment and writes transcript/summary files;
replay mode audits an existing transcript against its trapdoor store.
Exit codes: 0 = key produced (or replay match), 2 = aborted / unverified /
replay mismatch, 1 = usage or configuration error.
"""

from __future__ import annotations

import argparse
import sys

from .config import ConfigError, ExperimentConfig
from .harness import EXIT_USAGE, ReplayError, replay_verify, run_experiment

_FLAG_TYPES = {
    "rounds": int,
    "epsilon": float,
    "etcf": str,
    "domain_bits": int,
    "lattice_n": int,
    "lattice_m": int,
    "lattice_q": int,
    "device": str,
    "seed": int,
    "transcript": str,
    "summary": str,
    "trapdoors": str,
    "recon": str,
    "eps_sec": float,
    "bound_constant": float,
    "bound_exponent": float,
    "negl_term": float,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cdiqkd",
        description="Seeded simulator for device-independent QKD under computational assumptions",
    )
    parser.add_argument("--config", help="JSON config file; flags override its values")
    parser.add_argument(
        "--replay",
        metavar="TRANSCRIPT",
        help="audit a transcript instead of running; requires --trapdoors",
    )
    for name, kind in _FLAG_TYPES.items():
        parser.add_argument(f"--{name.replace('_', '-')}", type=kind, dest=name)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    if args.replay is not None:
        store = args.trapdoors or args.replay + ".keys"
        try:
            report = replay_verify(args.replay, store)
        except (ReplayError, OSError) as exc:
            print(f"replay error: {exc}", file=sys.stderr)
            return EXIT_USAGE
        print(f"replay verdict: {report.verdict} ({report.rounds_checked} test rounds checked)")
        for message in report.mismatches[:20]:
            print(f"  {message}")
        if len(report.mismatches) > 20:
            print(f"  ... and {len(report.mismatches) - 20} more")
        return 0 if report.match else 2

    try:
        data = ExperimentConfig.from_file(args.config).to_dict() if args.config else {}
        for name in _FLAG_TYPES:
            value = getattr(args, name)
            if value is not None:
                data[name] = value
        config = ExperimentConfig.from_dict(data)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    outcome = run_experiment(config)
    counts = outcome.summary["counts"]
    print(
        f"rounds={counts['rounds']} sifted={counts['sifted']} tested={counts['tested']} "
        f"failed={counts['failed']} fail_fraction={outcome.summary['fail_fraction']}"
    )
    if outcome.session.aborted:
        print(f"ABORTED: failure fraction exceeds epsilon={config.epsilon}")
    else:
        print(
            f"raw key bits: {outcome.summary['raw_key_length']}  "
            f"final key bits: {outcome.summary['final_key_length']}  "
            f"verified: {outcome.summary['verified']}"
        )
    if config.transcript:
        print(f"transcript: {config.transcript}")
    if config.summary:
        print(f"summary: {config.summary}")
    return outcome.exit_code


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
