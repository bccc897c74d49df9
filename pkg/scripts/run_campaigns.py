#!/usr/bin/env python3
"""Run the simulated analogues of every evaluation campaign into results/.

    python scripts/run_campaigns.py [--trials 1000] [--outdir results]
"""
import argparse
from pathlib import Path

from switchpair.harness import ExperimentConfig, run_campaign
from switchpair.harness.campaigns import success_rates

CAMPAIGNS = {
    "tol_sweep": dict(campaign="TolSweep", taus=[20, 40, 60, 80, 100, 120], jitter="uniform:0,30"),
    "press_sweep": dict(campaign="PressSweep", presses=[5, 6, 7], failure_prob=0.02),
    "multi_device": dict(campaign="MultiDevice", devices=3, taus=[120, 140, 160, 180, 200],
                         jitter="uniform:0,90"),
    "fault_grid": dict(campaign="FaultGrid", devices=3, taus=[120, 140, 160], faults=[0, 0.25, 0.5],
                       jitter="uniform:0,90"),
    "power_sources": dict(campaign="TolSweep", hand_offset="normal:0,150"),
    "peeper": dict(campaign="Peeper", presses=[4], taus=[120, 200], align=False),
    "mitm": dict(campaign="Mitm"),
    "hash_bench": dict(campaign="HashBench", presses=[4, 5, 6]),
}


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--trials", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--outdir", default="results")
    ap.add_argument("--only", nargs="*", choices=sorted(CAMPAIGNS))
    args = ap.parse_args()
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    for name, params in CAMPAIGNS.items():
        if args.only and name not in args.only:
            continue
        trials = 10_000 if name == "peeper" else args.trials
        cfg = ExperimentConfig(trials=trials, seed=args.seed, out=str(outdir / f"{name}.csv"), **params)
        rows = run_campaign(cfg)
        print(f"== {name} -> {cfg.out}")
        if cfg.campaign != "HashBench":
            for cell, rate in success_rates(rows).items():
                print(f"   {cell:32s} {rate:.3f}")


if __name__ == "__main__":
    main()
