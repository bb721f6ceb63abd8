"""Simulation driver: time loop, outputs, outcome classification and mass sweeps."""
from __future__ import annotations

import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import io, linsys
from .annulus2d import AnnulusModel
from .core import DiagnosticsRecord, SimConfig, blowup_indicator, mode_amplitudes
from .halfline1d import HalfLineModel
from .hilbert import HilbertModel
from .periodic1d import PeriodicModel

logger = logging.getLogger(__name__)

POLARISED_RATIO = 0.1
ISOTROPIC_RATIO = 1e-3
OUTCOMES = ("steady-isotropic", "steady-polarised", "blow-up", "timeout")


def make_model(config: SimConfig):
    if config.model.startswith("halfline"):
        return HalfLineModel(config)
    if config.model.startswith("annulus"):
        return AnnulusModel(config)
    if config.model == "hilbert":
        return HilbertModel(config)
    return PeriodicModel(config)


@dataclass
class RunSummary:
    model: str
    M: float
    outcome: str
    stop_time: float
    mode_ratio: Optional[float]
    initial_mode_ratio: Optional[float] = None
    peak_mode_ratio: Optional[float] = None
    steady: bool = False
    files: list = field(default_factory=list)
    records: Optional[list] = field(default=None, repr=False, compare=False)

    def to_dict(self) -> dict:
        data = asdict(self)
        data.pop("records")
        return data

    @property
    def polarised_side(self) -> bool:
        """Blow-up counts with polarisation when bracketing a threshold.

        A run still moving at t_max counts as polarised once its mode ratio
        has passed the polarisation threshold.
        """
        if self.outcome in ("blow-up", "steady-polarised"):
            return True
        return self.outcome == "timeout" and (self.mode_ratio or 0.0) >= POLARISED_RATIO


def _ratio(amplitudes) -> Optional[float]:
    if amplitudes is None:
        return None
    return amplitudes[1] / amplitudes[0] if amplitudes[0] > 0 else 0.0


def classify(blown_up: bool, steady: bool, ratio: Optional[float]) -> str:
    if blown_up:
        return "blow-up"
    if not steady:
        return "timeout"
    if ratio is None:
        return "steady-isotropic"
    if ratio >= POLARISED_RATIO:
        return "steady-polarised"
    if ratio <= ISOTROPIC_RATIO:
        return "steady-isotropic"
    return "timeout"


class Recorder:
    """Collects diagnostics in memory and optionally writes them and snapshots to disk."""

    def __init__(self, model, out_dir=None):
        self.model = model
        self.out_dir = Path(out_dir) if out_dir is not None else None
        self.records = []
        self.files = []
        self._diag = None
        if self.out_dir is not None:
            self.out_dir.mkdir(parents=True, exist_ok=True)
            path = self.out_dir / "diagnostics.csv"
            self._diag = io.DiagnosticsWriter(path)
            self.files.append(path.name)

    def record(self, state, t, blown_up) -> DiagnosticsRecord:
        interior, boundary = self.model.masses(state)
        trace = self.model.trace(state)
        amps = mode_amplitudes(trace) if trace is not None else (math.nan,) * 3
        sup = float(np.max(np.abs(self.model.sup_values(state))))
        rec = DiagnosticsRecord(t, interior + boundary, interior, boundary, sup, amps, blown_up)
        self.records.append(rec)
        if self._diag is not None:
            self._diag.write(rec)
        return rec

    def snapshot(self, state, step):
        if self.out_dir is None:
            return
        columns, boundary = self.model.snapshot(state)
        name = f"snapshot_{step:08d}.csv"
        io.write_columns(self.out_dir / name, columns)
        self.files.append(name)
        if boundary is not None:
            name = f"boundary_{step:08d}.csv"
            io.write_columns(self.out_dir / name, boundary)
            self.files.append(name)

    def close(self):
        if self._diag is not None:
            self._diag.close()


def run(config: SimConfig, out_dir=None, diagnostics_every: int = 0, initial_state=None) -> RunSummary:
    """Advance ``config.model`` until t_max, a steady state or blow-up.

    Diagnostics are recorded every ``diagnostics_every`` steps (0 means every
    snapshot) and always on snapshot steps and the final step.
    """
    model = make_model(config)
    state = model.initial_state() if initial_state is None else initial_state
    recorder = Recorder(model, out_dir)
    diag_every = diagnostics_every or config.snapshot_every
    n_steps = int(math.ceil(config.t_max / config.dt - 1e-9))

    initial_sup = float(np.max(np.abs(model.sup_values(state))))
    rec = recorder.record(state, 0.0, False)
    recorder.snapshot(state, 0)
    has_trace = model.trace(state) is not None
    initial_ratio = _ratio(rec.mode_amplitudes) if has_trace else None
    peak_ratio = initial_ratio

    blown_up = steady = False
    t = 0.0
    step = 0
    try:
        while step < n_steps:
            old = model.dynamic_values(state)
            try:
                new_state = model.advance(state)
            except (linsys.SolverFailure, np.linalg.LinAlgError) as exc:
                logger.info("step %d rejected: %s", step + 1, exc)
                blown_up = True
                break
            step += 1
            t = step * config.dt
            state = new_state
            values = model.sup_values(state)
            blown_up = initial_sup > 0 and blowup_indicator(values, initial_sup, config.blowup_factor)
            if not blown_up and not np.all(np.isfinite(values)):
                blown_up = True
            change = np.max(np.abs(model.dynamic_values(state) - old)) / config.dt
            steady = bool(change <= config.steady_tol)
            if has_trace:
                ratio = _ratio(mode_amplitudes(model.trace(state)))
                peak_ratio = max(peak_ratio, ratio)
            last = blown_up or steady or step == n_steps
            if step % diag_every == 0 or step % config.snapshot_every == 0 or last:
                recorder.record(state, t, blown_up)
            if step % config.snapshot_every == 0 or last:
                recorder.snapshot(state, step)
            if blown_up or steady:
                break
    finally:
        recorder.close()

    final = recorder.records[-1]
    ratio = _ratio(final.mode_amplitudes) if has_trace else None
    summary = RunSummary(config.model, config.M, classify(blown_up, steady, ratio), t, ratio,
                         initial_ratio, peak_ratio, steady, list(recorder.files), recorder.records)
    if out_dir is not None:
        io.dump_config(config, Path(out_dir) / "config.yaml")
        summary.files.append("config.yaml")
        summary.files.append("summary.json")
        (Path(out_dir) / "summary.json").write_text(json.dumps(summary.to_dict(), indent=2))
    return summary


class BisectionRefused(ValueError):
    def __init__(self, message, summaries):
        super().__init__(message)
        self.summaries = summaries


@dataclass
class SweepResult:
    runs: list
    threshold: Optional[float] = None
    bracket: Optional[tuple] = None
    iterations: int = 0


def _run_point(args):
    config, out_dir = args
    summary = run(config, out_dir)
    summary.records = None
    return summary


def _run_many(configs, out_root, workers):
    jobs = [(cfg, None if out_root is None else Path(out_root) / f"M_{cfg.M:.6g}") for cfg in configs]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_run_point, jobs))
    return [_run_point(job) for job in jobs]


def sweep(config: SimConfig, M_low: float, M_high: float, n_points: int, bisect: bool = False,
          out_dir=None, workers: int = 1, rel_width: float = 0.05, max_iter: int = 12) -> SweepResult:
    """Run log-spaced masses; optionally bisect the first outcome change down to ``rel_width``."""
    if not 0 < M_low < M_high:
        raise ValueError("need 0 < M_low < M_high")
    if n_points < 2:
        raise ValueError("need at least two sweep points")
    masses = np.geomspace(M_low, M_high, n_points)
    summaries = _run_many([config.replace(M=float(m)) for m in masses], out_dir, workers)
    runs = [(float(m), s) for m, s in zip(masses, summaries)]

    bracket = None
    for (m0, s0), (m1, s1) in zip(runs, runs[1:]):
        if s0.polarised_side != s1.polarised_side:
            bracket = (m0, m1)
            low_side = s0.polarised_side
            break
    if bisect and runs[0][1].polarised_side == runs[-1][1].polarised_side:
        raise BisectionRefused(
            f"endpoint outcomes agree ({runs[0][1].outcome} / {runs[-1][1].outcome}); nothing to bisect",
            runs)
    if bracket is None:
        return SweepResult(runs)

    iterations = 0
    if bisect:
        lo, hi = bracket
        while (hi - lo) / lo > rel_width and iterations < max_iter:
            mid = math.sqrt(lo * hi)
            (summary,) = _run_many([config.replace(M=mid)], out_dir, 1)
            runs.append((mid, summary))
            if summary.polarised_side == low_side:
                lo = mid
            else:
                hi = mid
            iterations += 1
        bracket = (lo, hi)
    runs.sort(key=lambda item: item[0])
    return SweepResult(runs, math.sqrt(bracket[0] * bracket[1]), bracket, iterations)
