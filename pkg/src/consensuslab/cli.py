"""Command-line front end: verdicts, simulation, mode estimation, lifting, selfcheck.

Exit codes: 0 tool success (whatever the decision), 2 config error,
3 numerical failure, 4 unwritable output, 5 selfcheck property failure.
A verdict of "no_consensus" is still exit 0; pipelines branch on the JSON
`decision` field, not the exit status.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from . import __version__
from .analysis import discrepancy_note, lift_second_order, random_verdict
from .core import (
    ConfigError,
    RngPolicy,
    RunParams,
    load_config,
    resolve_x0,
)
from .dynamics import (
    run_paths,
    summarize_modes,
    paths_as_json,
    write_aggregate_csv,
    write_path_csv,
)
from .spectral import NumericalError, deterministic_verdict, second_eigenvalue_modulus
from .selfcheck import run_selfcheck

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_OUTPUT = 4
EXIT_SELFCHECK = 5


@dataclass
class RunManifest:
    """Provenance record written alongside every result file."""

    command: str
    parameters: dict
    config_digest: str
    version: str

    def write(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(asdict(self), fh, indent=2, sort_keys=True)
            fh.write("\n")


def _config_digest(source: str) -> str:
    if os.path.exists(source):
        with open(source, "rb") as fh:
            return hashlib.sha256(fh.read()).hexdigest()
    return hashlib.sha256(source.encode("utf-8")).hexdigest()


def _parse_x0(text: str):
    if text == "uniform01":
        return text
    try:
        return [float(tok) for tok in text.split(",")]
    except ValueError as exc:
        raise ConfigError(f"--x0 must be 'uniform01' or comma-separated reals, got {text!r}") from exc


def _merge_params(params: RunParams, args: argparse.Namespace) -> RunParams:
    """Flags win over the config's simulation block."""
    for attr, flag in (
        ("paths", "paths"),
        ("horizon", "horizon"),
        ("eps", "eps"),
        ("seed", "seed"),
        ("p", "p"),
        ("mc_samples", "mc_samples"),
    ):
        value = getattr(args, flag, None)
        if value is not None:
            setattr(params, attr, value)
    x0 = getattr(args, "x0", None)
    if x0 is not None:
        params.x0 = _parse_x0(x0)
    if params.paths < 1:
        raise ConfigError("--paths must be >= 1")
    if params.horizon < 1:
        raise ConfigError("--horizon must be >= 1")
    if params.eps <= 0:
        raise ConfigError("--eps must be > 0")
    if params.p < 1:
        raise ConfigError("--p must be >= 1")
    return params


def _manifest(command: str, args: argparse.Namespace, params: RunParams) -> RunManifest:
    return RunManifest(
        command=command,
        parameters={
            "seed": params.seed,
            "paths": params.paths,
            "horizon": params.horizon,
            "eps": params.eps,
            "p": params.p,
            "mc_samples": params.mc_samples,
            "x0": params.x0,
        },
        config_digest=_config_digest(args.config),
        version=__version__,
    )


def _emit(doc: dict, args: argparse.Namespace, name: str, manifest: RunManifest) -> None:
    text = json.dumps(doc, indent=2)
    print(text)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, f"{name}.json"), "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
        manifest.write(os.path.join(args.out, f"{name}_manifest.json"))


def cmd_verdict(args: argparse.Namespace) -> int:
    dist, params = load_config(args.config)
    params = _merge_params(params, args)
    policy = RngPolicy(params.seed)
    verdict = random_verdict(dist, mc_samples=params.mc_samples, rng=policy.expectation_stream())
    _emit(verdict.to_dict(), args, "verdict", _manifest("verdict", args, params))
    return EXIT_OK


def cmd_deterministic(args: argparse.Namespace) -> int:
    dist, params = load_config(args.config)
    params = _merge_params(params, args)
    if dist.kind != "dirac":
        raise ConfigError("deterministic verdict needs a dirac (single-matrix) config")
    doc = {
        "lambda2_modulus": second_eigenvalue_modulus(dist.matrix),
        "decision": deterministic_verdict(dist.matrix),
    }
    _emit(doc, args, "deterministic", _manifest("deterministic", args, params))
    return EXIT_OK


def cmd_simulate(args: argparse.Namespace) -> int:
    dist, params = load_config(args.config)
    params = _merge_params(params, args)
    policy = RngPolicy(params.seed)
    x0 = resolve_x0(params.x0, dist.n, policy)
    records = run_paths(dist, x0, params.paths, params.horizon, policy, threads=args.threads)
    out = args.out or "."
    os.makedirs(out, exist_ok=True)
    if args.format == "csv":
        with open(os.path.join(out, "paths.csv"), "w", encoding="utf-8", newline="") as fh:
            write_path_csv(records, fh)
        with open(os.path.join(out, "aggregate.csv"), "w", encoding="utf-8", newline="") as fh:
            write_aggregate_csv(records, params.eps, params.p, fh)
    else:
        report = summarize_modes(records, params.eps, params.p)
        with open(os.path.join(out, "paths.json"), "w", encoding="utf-8") as fh:
            json.dump(paths_as_json(records), fh, indent=2)
            fh.write("\n")
        with open(os.path.join(out, "aggregate.json"), "w", encoding="utf-8") as fh:
            json.dump(report.to_dict(), fh, indent=2)
            fh.write("\n")
    _manifest("simulate", args, params).write(os.path.join(out, "simulate_manifest.json"))
    print(f"wrote {params.paths} paths x {params.horizon + 1} steps to {out}")
    return EXIT_OK


def cmd_modes(args: argparse.Namespace) -> int:
    dist, params = load_config(args.config)
    params = _merge_params(params, args)
    policy = RngPolicy(params.seed)
    x0 = resolve_x0(params.x0, dist.n, policy)
    records = run_paths(dist, x0, params.paths, params.horizon, policy, threads=args.threads)
    report = summarize_modes(records, params.eps, params.p)
    verdict = random_verdict(dist, mc_samples=params.mc_samples, rng=policy.expectation_stream())
    verdict.discrepancy = discrepancy_note(verdict, report)
    doc = report.to_dict()
    doc["verdict"] = verdict.to_dict()
    _emit(doc, args, "modes", _manifest("modes", args, params))
    return EXIT_OK


def cmd_lift(args: argparse.Namespace) -> int:
    dist_a, params_a = load_config(args.config_a)
    dist_b, _ = load_config(args.config_b)
    beta = 1.0 - args.alpha if args.beta is None else args.beta
    lifted = lift_second_order(args.alpha, beta, dist_a, dist_b)
    doc = {"n": lifted.n, "distribution": lifted.to_config()}
    text = json.dumps(doc, indent=2)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
        print(f"wrote lifted config to {args.out}")
    else:
        print(text)
    return EXIT_OK


def cmd_selfcheck(args: argparse.Namespace) -> int:
    if args.trials < 1:
        raise ConfigError("--trials must be >= 1")
    if args.n_max < 2:
        raise ConfigError("--n-max must be >= 2")
    results = run_selfcheck(n_max=args.n_max, trials=args.trials, seed=args.seed)
    failed = [r for r in results if not r.passed]
    for r in results:
        status = "ok" if r.passed else "FAIL"
        detail = f" ({r.error})" if r.error else ""
        print(f"{r.name}: {status}, {r.checks} checks{detail}")
    if failed:
        print(f"{len(failed)} propert{'y' if len(failed) == 1 else 'ies'} failed", file=sys.stderr)
        return EXIT_SELFCHECK
    return EXIT_OK


def _add_common(parser: argparse.ArgumentParser, config: bool = True) -> None:
    if config:
        parser.add_argument("--config", required=True, help="JSON config path")
    parser.add_argument("--seed", type=int, default=None, help="master seed (64-bit)")
    parser.add_argument("--out", default=None, help="output directory")
    parser.add_argument("--format", choices=("csv", "json"), default="csv")
    parser.add_argument("--paths", type=int, default=None)
    parser.add_argument("--horizon", type=int, default=None)
    parser.add_argument("--eps", type=float, default=None)
    parser.add_argument("--p", type=float, default=None)
    parser.add_argument("--mc-samples", dest="mc_samples", type=int, default=None)
    parser.add_argument("--x0", default=None, help="'uniform01' or comma-separated reals")
    parser.add_argument("--threads", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="consensuslab",
        description="Decide and empirically validate consensus of linear random networks.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verdict", help="spectral consensus decision for a distribution")
    _add_common(p)
    p.set_defaults(func=cmd_verdict)

    p = sub.add_parser("deterministic", help="verdict for a single fixed matrix")
    _add_common(p)
    p.set_defaults(func=cmd_deterministic)

    p = sub.add_parser("simulate", help="simulate paths and emit per-path/aggregate series")
    _add_common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("modes", help="estimate the three convergence modes")
    _add_common(p)
    p.set_defaults(func=cmd_modes)

    p = sub.add_parser("lift", help="build the second-order block companion distribution")
    p.add_argument("--config-a", required=True)
    p.add_argument("--config-b", required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--beta", type=float, default=None, help="defaults to 1 - alpha")
    p.add_argument("--out", default=None, help="output config file")
    p.set_defaults(func=cmd_lift)

    p = sub.add_parser("selfcheck", help="run every module's property battery")
    p.add_argument("--n-max", dest="n_max", type=int, default=8)
    p.add_argument("--trials", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_selfcheck)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"output error: {exc}", file=sys.stderr)
        return EXIT_OUTPUT


if __name__ == "__main__":
    sys.exit(main())
