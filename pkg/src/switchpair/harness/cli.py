"""``switchpair`` command line.

Exit codes: 0 success, 2 configuration error, 3 I/O error.
"""
from __future__ import annotations

import argparse
import sys

from ..adversary import GuessingParams, PASSKEY_SPACE, guessing_space, guessing_success_probability, \
    passkey_baseline
from ..errors import (ConfigurationError, IntegrityError, InvalidInputError, KeyNotFoundError)
from .bench import bench_rows, write_bench_csv
from .campaigns import run_campaign, success_rates
from .config import ExperimentConfig, parse_list
from .keystore import KeyStore

EXIT_CONFIG = 2
EXIT_IO = 3


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="switchpair", description="Power-switch pairing simulator and harness")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment campaign")
    run.add_argument("--config", help="YAML file with ExperimentConfig fields; flags override it")
    run.add_argument("--campaign")
    run.add_argument("--tau", help="tolerance list in ms, e.g. 120,140 or 20:120:20")
    run.add_argument("--presses", help="press-count list")
    run.add_argument("--devices", type=int)
    run.add_argument("--fault", help="fault-tolerance list")
    run.add_argument("--jitter", help="delay model, e.g. uniform:0,30")
    run.add_argument("--interval", help="press interval model, e.g. normal:8000,500")
    run.add_argument("--no-align", dest="align", action="store_const", const=False,
                     help="do not snap presses to bin centres")
    run.add_argument("--failure-prob", type=float)
    run.add_argument("--hand-offset", help="separate power sources with this per-press offset model")
    run.add_argument("--reaction", help="peeper reaction-lag model")
    run.add_argument("--strategy", help="MITM strategy")
    run.add_argument("--trials", type=int)
    run.add_argument("--seed", type=int)
    run.add_argument("--workers", type=int)
    run.add_argument("--out", help="CSV output path ('-' for stdout)")

    bench = sub.add_parser("bench", help="hash overhead benchmark")
    bench.add_argument("--algo", default="sha256")
    bench.add_argument("--k", default="4")
    bench.add_argument("--iters", default="500")
    bench.add_argument("--out", default="-")

    ks = sub.add_parser("keystore", help="persistent key store")
    ks.add_argument("action", choices=["put", "get"])
    ks.add_argument("--store", required=True)
    ks.add_argument("--device", type=int, required=True)
    ks.add_argument("--session", required=True)
    ks.add_argument("--key", help="hex key (put)")

    an = sub.add_parser("analyze", help="closed-form security figures")
    an_sub = an.add_subparsers(dest="what", required=True)
    guess = an_sub.add_parser("guess", help="guessing-attack success probability")
    guess.add_argument("--reaction", type=float, default=8.0, help="seconds between presses")
    guess.add_argument("--tau", type=float, default=120.0)
    guess.add_argument("--n", type=int, default=4)
    return p


def _run(args) -> int:
    cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    cfg = cfg.override(
        campaign=args.campaign, devices=args.devices, jitter=args.jitter, interval=args.interval,
        align=args.align, failure_prob=args.failure_prob, hand_offset=args.hand_offset,
        reaction=args.reaction, strategy=args.strategy, trials=args.trials, seed=args.seed,
        workers=args.workers, out=args.out,
        taus=parse_list(args.tau, float) if args.tau else None,
        presses=parse_list(args.presses, int) if args.presses else None,
        faults=parse_list(args.fault, float) if args.fault else None,
    )
    if cfg.out is None:
        cfg.out = "-"
    rows = run_campaign(cfg)
    if cfg.out != "-" and cfg.campaign != "HashBench":
        for cell, rate in success_rates(rows).items():
            print(f"{cell}\tsuccess_rate={rate:.4f}")
    return 0


def _bench(args) -> int:
    try:
        ks = parse_list(args.k, int)
        iters = parse_list(args.iters, int)
        rows = bench_rows([a.strip() for a in args.algo.split(",")], ks, iters)
    except InvalidInputError as exc:
        raise ConfigurationError(str(exc)) from None
    if args.out == "-":
        write_bench_csv(rows, sys.stdout)
    else:
        with open(args.out, "w", newline="") as fh:
            write_bench_csv(rows, fh)
    return 0


def _keystore(args) -> int:
    store = KeyStore(args.store)
    if args.action == "put":
        if not args.key:
            raise ConfigurationError("keystore put needs --key")
        try:
            key = bytes.fromhex(args.key)
        except ValueError:
            raise ConfigurationError("--key must be hex") from None
        try:
            store.put(args.device, args.session, key)
        except InvalidInputError as exc:
            raise ConfigurationError(str(exc)) from None
        return 0
    print(store.get(args.device, args.session).hex())
    return 0


def _analyze(args) -> int:
    try:
        params = GuessingParams(args.reaction, args.tau, args.n)
    except InvalidInputError as exc:
        raise ConfigurationError(str(exc)) from None
    space = guessing_space(params)
    print(f"guessing success probability: 1/{space:,} = {guessing_success_probability(params):.2e}")
    print(f"passkey baseline: 1/{PASSKEY_SPACE:,} = {passkey_baseline():.2e}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handler = {"run": _run, "bench": _bench, "keystore": _keystore, "analyze": _analyze}[args.command]
    try:
        return handler(args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, IntegrityError, KeyNotFoundError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
