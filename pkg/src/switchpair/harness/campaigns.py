"""Experiment campaigns and CSV result emission.

Trial ``t`` of every cell draws from the same root-derived seed, so cells
of a sweep see common random numbers: a tolerance sweep replays the same
presses and delays at each tolerance.
"""
from __future__ import annotations

import csv
import io
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from typing import List, Optional, Tuple

from ..adversary import MitmOutcome, mitm_attempt, peeper_match_probability, simulate_peeper
from ..errors import InvalidEventError, ProtocolViolation
from ..powerline import DeviceProfile, run_trace, sample_press_schedule
from ..protocol import AbortReason, PairingConfig, run_pairing
from ..rng import derive_seed
from ..timebase import DevicePrecision
from .bench import bench_rows, write_bench_csv
from .config import ExperimentConfig

COLUMNS = ["campaign", "cell", "tau_ms", "presses", "devices", "fault", "trial", "outcome",
           "epsilon", "matches", "success_rate", "detail", "elapsed_ms"]

CAMPAIGNS = ("TolSweep", "PressSweep", "MultiDevice", "FaultGrid", "Peeper", "Mitm", "HashBench")
SUCCESS = {"KeyAgreed", "Succeeded", "AttackSucceeded"}


@dataclass(frozen=True)
class Cell:
    index: int
    tau_ms: float
    presses: int
    devices: int
    fault: float

    @property
    def label(self) -> str:
        return f"tau={self.tau_ms:g};n={self.presses};m={self.devices};phi={self.fault:g}"


@dataclass
class TrialResult:
    campaign: str
    cell: Cell
    trial: int
    outcome: str
    epsilon: str = ""
    matches: str = ""
    detail: str = ""
    elapsed_ms: float = 0.0

    def row(self) -> dict:
        c = self.cell
        return {"campaign": self.campaign, "cell": c.label, "tau_ms": f"{c.tau_ms:g}",
                "presses": c.presses, "devices": c.devices, "fault": f"{c.fault:g}",
                "trial": self.trial, "outcome": self.outcome, "epsilon": self.epsilon,
                "matches": self.matches, "success_rate": "", "detail": self.detail,
                "elapsed_ms": f"{self.elapsed_ms:.3f}"}


def cells(cfg: ExperimentConfig) -> List[Cell]:
    grid = [(t, n, f) for f in cfg.faults for n in cfg.presses for t in cfg.taus]
    return [Cell(i, t, n, cfg.devices, f) for i, (t, n, f) in enumerate(grid)]


def pairing_trial(cfg: ExperimentConfig, cell: Cell, trial: int) -> TrialResult:
    start = time.perf_counter()
    seed = derive_seed(cfg.seed, "trial", trial)
    schedule = sample_press_schedule(cell.presses, cfg.interval_dist(), seed,
                                     align_tau_ms=cell.tau_ms if cfg.align else None)
    profile = DeviceProfile(DevicePrecision(cell.tau_ms), cfg.jitter_dist(), cfg.failure_prob)
    trace = run_trace([profile] * cell.devices, schedule, seed, cfg.hand_offset_dist())
    pconf = PairingConfig(cell.tau_ms, cell.fault, cell.presses, cell.devices)
    detail, eps = "", ""
    try:
        run = run_pairing(trace.ticks(cell.tau_ms), pconf, seed)
    except (InvalidEventError, ProtocolViolation) as exc:
        outcome, detail = "ProtocolError", str(exc)
    else:
        eps = ";".join("" if s.reconciliation is None else f"{s.reconciliation.epsilon:g}"
                       for s in run.sessions)
        if run.completed:
            # every KeyAgreed row must carry matching keys for every pair
            assert run.keys_agree(), "completed run with mismatched pairwise keys"
            outcome = "KeyAgreed"
        else:
            reasons = {r for r in run.abort_reasons() if r is not None}
            if AbortReason.AUTHENTICATION_FAILURE in reasons:
                outcome = "AuthAbort"
            elif AbortReason.FAULT_TOLERANCE in reasons:
                outcome = "FaultAbort"
            else:
                outcome = "ProtocolError"
            detail = next((s.abort_detail for s in run.sessions if s.abort_detail), "")
    return TrialResult(cfg.campaign, cell, trial, outcome, eps, detail=detail,
                       elapsed_ms=(time.perf_counter() - start) * 1000)


def mitm_trial(cfg: ExperimentConfig, cell: Cell, trial: int) -> TrialResult:
    start = time.perf_counter()
    seed = derive_seed(cfg.seed, "trial", trial)
    pconf = PairingConfig(cell.tau_ms, cell.fault, cell.presses, 2)
    outcome = mitm_attempt(pconf, cfg.strategy, seed, cfg.interval_dist().a)
    return TrialResult(cfg.campaign, cell, trial, outcome.value, detail=cfg.strategy,
                       elapsed_ms=(time.perf_counter() - start) * 1000)


def _run_chunk(args) -> List[TrialResult]:
    cfg, cell, trials = args
    fn = mitm_trial if cfg.campaign == "Mitm" else pairing_trial
    return [fn(cfg, cell, t) for t in trials]


def peeper_cell(cfg: ExperimentConfig, cell: Cell) -> Tuple[List[TrialResult], str]:
    start = time.perf_counter()
    schedule = sample_press_schedule(cell.presses, cfg.interval_dist(), cfg.seed,
                                     align_tau_ms=cell.tau_ms if cfg.align else None, min_presses=1)
    profile = DeviceProfile(DevicePrecision(cell.tau_ms), cfg.jitter_dist())
    victim = run_trace([profile, profile], schedule, cfg.seed)
    counts = simulate_peeper(victim, cfg.reaction_dist(), cell.tau_ms, cfg.trials, cfg.seed)
    elapsed = (time.perf_counter() - start) * 1000 / cfg.trials
    results = [TrialResult(cfg.campaign, cell, t, "AttackSucceeded" if k == cell.presses else "AttackFailed",
                           matches=str(int(k)), elapsed_ms=elapsed) for t, k in enumerate(counts)]
    analytic = peeper_match_probability(victim, cfg.reaction_dist(), cell.tau_ms)
    mc = counts.sum() / (cfg.trials * cell.presses)
    return results, f"per_press_mc={mc:.6g};per_press_analytic={analytic:.6g}"


def summary_row(campaign: str, cell: Cell, results: List[TrialResult], detail: str = "") -> dict:
    wins = sum(r.outcome in SUCCESS for r in results)
    row = TrialResult(campaign, cell, 0, "").row()
    row.update(trial="summary", outcome="", success_rate=f"{wins / len(results):.6f}",
               detail=detail, elapsed_ms="")
    return row


def run_campaign(cfg: ExperimentConfig, out: Optional[str] = None) -> List[dict]:
    """Run every cell of ``cfg`` and return the CSV rows (also written to ``out``)."""
    cfg.validate()
    out = out if out is not None else cfg.out
    if cfg.campaign == "HashBench":
        rows = bench_rows(cfg.algorithms, cfg.presses, cfg.iterations, cfg.seed)
        _emit(out, lambda fh: write_bench_csv(rows, fh))
        return rows

    by_cell = {}
    if cfg.campaign == "Peeper":
        details = {}
        for cell in cells(cfg):
            by_cell[cell], details[cell] = peeper_cell(cfg, cell)
    else:
        details = {}
        tasks = []
        step = max(1, cfg.trials // (4 * cfg.workers)) if cfg.workers > 1 else cfg.trials
        for cell in cells(cfg):
            for lo in range(0, cfg.trials, step):
                tasks.append((cfg, cell, range(lo, min(cfg.trials, lo + step))))
        if cfg.workers > 1:
            with ProcessPoolExecutor(cfg.workers) as pool:
                chunks = list(pool.map(_run_chunk, tasks))
        else:
            chunks = [_run_chunk(t) for t in tasks]
        for chunk in chunks:
            for r in chunk:
                by_cell.setdefault(r.cell, []).append(r)

    rows = []
    for cell in sorted(by_cell, key=lambda c: c.index):
        results = sorted(by_cell[cell], key=lambda r: r.trial)
        rows.extend(r.row() for r in results)
        rows.append(summary_row(cfg.campaign, cell, results, details.get(cell, "")))
    _emit(out, lambda fh: write_rows(rows, fh))
    return rows


def write_rows(rows: List[dict], fh) -> None:
    w = csv.DictWriter(fh, fieldnames=COLUMNS, lineterminator="\n")
    w.writeheader()
    w.writerows(rows)


def _emit(out: Optional[str], writer) -> None:
    if out is None:
        return
    if out == "-":
        writer(sys.stdout)
        return
    with open(out, "w", newline="") as fh:
        writer(fh)


def success_rates(rows: List[dict]) -> dict:
    """``{cell_label: success_rate}`` from the summary rows."""
    return {r["cell"]: float(r["success_rate"]) for r in rows if r["trial"] == "summary"}


def csv_text(rows: List[dict], drop=("elapsed_ms",)) -> str:
    buf = io.StringIO()
    cols = [c for c in COLUMNS if c not in drop]
    w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n", extrasaction="ignore")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()
