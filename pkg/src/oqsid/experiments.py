"""Monte-Carlo experiment harness: noise sweeps, trial records, reports.

Each trial generates a random open quantum system, propagates it exactly,
admixes noise, identifies a model with one method, re-propagates, and
scores the minimum trajectory fidelity. Records go to an append-only
line-delimited JSON stream; :func:`report` aggregates them into CSV
histogram tables.

Seeding: child seeds derive from the master seed via SHA-256 over the
string "oqsid:<master>:<label>:<indices...>", taking the first 8 digest
bytes little-endian. The "system" stream is keyed by trial index only, so
every method and noise level sees the same generated systems; the "noise"
stream is keyed by (w_index, trial); the "optimizer" stream by
(method_index, w_index, trial) with method_index taken in the canonical
order kraus, pade, trapezoid, simpson.

The persisted record lines exclude wall_time, which is the one
non-deterministic trial field: two runs of the same config must produce
byte-identical record streams. Timing stays on the in-memory records and
is aggregated in the returned summary.
"""

from __future__ import annotations

import hashlib
import json
import multiprocessing
import os
import time
from csv import DictWriter
from dataclasses import dataclass, field, replace

import numpy as np

from .dynamics import mix_noise, propagate_lindblad, random_density_matrix, random_model
from .metrics import METHODS, NonPhysicalTrajectory, identify, min_fidelity, repropagate
from .optimize import OptimizerConfig

FIDELITY_HISTOGRAM_BINS = 25
WORKERS_ENV_VAR = "OQSID_WORKERS"

# wall_time is measured per trial but never persisted (see module docstring)
RECORD_FIELDS = (
    "trial_id",
    "method",
    "w",
    "seed",
    "converged",
    "f_min",
    "final_objective",
    "completeness_residual",
    "grad_norm",
    "evals",
    "error",
)


def split_seed(master_seed: int, label: str, *indices: int) -> int:
    """Stable 64-bit child seed for (master, purpose label, indices)."""
    text = f"oqsid:{master_seed}:{label}:" + ":".join(str(i) for i in indices)
    digest = hashlib.sha256(text.encode("ascii")).digest()
    return int.from_bytes(digest[:8], "little")


@dataclass(frozen=True)
class ExperimentConfig:
    n: int = 2
    ell_true: int = 1
    ell_kraus: int = 4
    num_steps: int = 49
    dt: float = 0.1
    methods: tuple[str, ...] = METHODS
    noise_grid: tuple[float, ...] = (0.0, 0.01, 0.05, 0.1, 0.2)
    trials_per_cell: int = 100
    master_seed: int = 0
    optimizer: OptimizerConfig = OptimizerConfig()
    workers: int = 1
    jump_scale: float = 0.1
    penalty_weight: float = 10.0

    def __post_init__(self):
        for m in self.methods:
            if m not in METHODS:
                raise ValueError(f"unknown method {m!r}")
        for w in self.noise_grid:
            if not 0 <= w < 1:
                raise ValueError(f"noise weight {w} outside [0, 1)")
        if self.trials_per_cell < 1:
            raise ValueError("trials_per_cell must be at least 1")
        if "simpson" in self.methods and self.num_steps < 2:
            raise ValueError("Simpson's rule needs num_steps >= 2")
        if self.num_steps < 1 or self.n < 2:
            raise ValueError("need num_steps >= 1 and n >= 2")


@dataclass
class TrialRecord:
    trial_id: str
    method: str
    w: float
    seed: int
    converged: bool
    f_min: float | None
    final_objective: float | None
    completeness_residual: float | None
    grad_norm: float | None
    evals: int
    wall_time: float = 0.0
    error: str | None = None

    def to_line(self) -> str:
        doc = {}
        for name in RECORD_FIELDS:
            value = getattr(self, name)
            if isinstance(value, float) and not np.isfinite(value):
                value = None  # JSON has no Inf/NaN; null marks a failed quantity
            doc[name] = value
        return json.dumps(doc, separators=(",", ":"), allow_nan=False)

    @classmethod
    def from_line(cls, line: str) -> "TrialRecord":
        doc = json.loads(line)
        missing = [name for name in RECORD_FIELDS if name not in doc]
        if missing:
            raise ValueError(f"missing fields {missing}")
        return cls(wall_time=0.0, **{name: doc[name] for name in RECORD_FIELDS})


def run_trial(cfg: ExperimentConfig, method: str, w_index: int, trial_index: int) -> TrialRecord:
    """Run one (method, noise level, trial) cell entry; never raises."""
    w = cfg.noise_grid[w_index]
    opt_seed = split_seed(cfg.master_seed, "optimizer", METHODS.index(method), w_index, trial_index)
    trial_id = f"{method}-w{w_index}-t{trial_index}"
    start = time.perf_counter()
    try:
        system_rng = np.random.default_rng(split_seed(cfg.master_seed, "system", trial_index))
        model = random_model(cfg.n, cfg.ell_true, system_rng, cfg.jump_scale)
        rho0 = random_density_matrix(cfg.n, system_rng)
        exact = propagate_lindblad(model, rho0, cfg.dt, cfg.num_steps)
        noise_rng = np.random.default_rng(split_seed(cfg.master_seed, "noise", w_index, trial_index))
        noisy = mix_noise(exact, w, noise_rng)

        ell = cfg.ell_kraus if method == "kraus" else cfg.ell_true
        opt_cfg = replace(cfg.optimizer, seed=opt_seed)
        identified = identify(noisy, method, ell, opt_cfg, mu=cfg.penalty_weight)

        f_min = None
        error = None
        try:
            sid = repropagate(identified, noisy.states[0], cfg.dt, cfg.num_steps)
            f_min = min_fidelity(exact, sid)
        except (NonPhysicalTrajectory, ValueError) as exc:
            error = f"{type(exc).__name__}: {exc}"

        opt = identified.optimization
        return TrialRecord(
            trial_id=trial_id,
            method=method,
            w=w,
            seed=opt_seed,
            converged=opt.converged,
            f_min=f_min,
            final_objective=opt.best_value,
            completeness_residual=identified.completeness_residual,
            grad_norm=opt.best_grad_norm,
            evals=opt.total_evals,
            wall_time=time.perf_counter() - start,
            error=error,
        )
    except Exception as exc:  # per-trial failure: record it, keep sweeping
        return TrialRecord(
            trial_id=trial_id,
            method=method,
            w=w,
            seed=opt_seed,
            converged=False,
            f_min=None,
            final_objective=float("inf"),
            completeness_residual=None,
            grad_norm=float("inf"),
            evals=0,
            wall_time=time.perf_counter() - start,
            error=f"{type(exc).__name__}: {exc}",
        )


def _run_trial_star(task) -> TrialRecord:
    return run_trial(*task)


def run_experiment(cfg: ExperimentConfig, out_path) -> list[dict]:
    """Run the full sweep, appending one record line per trial to out_path.

    Trials are dispatched to a worker pool (cfg.workers, overridable via
    the OQSID_WORKERS environment variable) but written in canonical
    (method, w, trial) order, so the stream is a pure function of the
    config. Returns the per-cell summary.
    """
    workers = int(os.environ.get(WORKERS_ENV_VAR, cfg.workers))
    tasks = [
        (cfg, method, w_index, trial_index)
        for method in cfg.methods
        for w_index in range(len(cfg.noise_grid))
        for trial_index in range(cfg.trials_per_cell)
    ]
    records: list[TrialRecord] = []
    with open(out_path, "w", encoding="utf-8") as fh:
        if workers > 1:
            with multiprocessing.Pool(workers) as pool:
                for record in pool.imap(_run_trial_star, tasks, chunksize=1):
                    fh.write(record.to_line() + "\n")
                    fh.flush()
                    records.append(record)
        else:
            for task in tasks:
                record = run_trial(*task)
                fh.write(record.to_line() + "\n")
                fh.flush()
                records.append(record)
    return summarize(records)


def summarize(records: list[TrialRecord]) -> list[dict]:
    """Per-cell convergence rate and F_min quartiles (converged trials)."""
    cells: dict[tuple[str, float], list[TrialRecord]] = {}
    for record in records:
        cells.setdefault((record.method, record.w), []).append(record)
    summary = []
    for (method, w), cell in cells.items():
        converged = [r for r in cell if r.converged]
        fmins = [r.f_min for r in converged if r.f_min is not None]
        entry = {
            "method": method,
            "w": w,
            "trials": len(cell),
            "converged": len(converged),
            "convergence_rate": len(converged) / len(cell),
            "wall_time": sum(r.wall_time for r in cell),
        }
        if fmins:
            q1, median, q3 = np.percentile(fmins, [25, 50, 75])
            entry.update(fmin_q1=float(q1), fmin_median=float(median), fmin_q3=float(q3))
        else:
            entry.update(fmin_q1=None, fmin_median=None, fmin_q3=None)
        summary.append(entry)
    return summary


def read_records(records_path) -> list[TrialRecord]:
    """Parse a record stream, rejecting malformed lines with their numbers."""
    records = []
    with open(records_path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                records.append(TrialRecord.from_line(line))
            except (json.JSONDecodeError, TypeError, ValueError) as exc:
                raise ValueError(f"{records_path}: malformed record at line {lineno}: {exc}")
    return records


def report(records_path, out_csv) -> list[dict]:
    """Aggregate a record stream into per-(method, w) histogram tables.

    F_min histograms use 25 bins over [0, 1] and include converged trials
    only; unconverged trials still count in the convergence-rate column.
    Emits CSV suitable for external plotting and returns the table rows.
    """
    records = read_records(records_path)
    cells: dict[tuple[str, float], list[TrialRecord]] = {}
    for record in records:
        cells.setdefault((record.method, record.w), []).append(record)

    rows = []
    for (method, w), cell in cells.items():
        converged = [r for r in cell if r.converged]
        fmins = np.array([r.f_min for r in converged if r.f_min is not None], dtype=float)
        row = {
            "method": method,
            "w": w,
            "trials": len(cell),
            "converged": len(converged),
            "convergence_rate": len(converged) / len(cell),
        }
        if fmins.size:
            q1, median, q3 = np.percentile(fmins, [25, 50, 75])
            row.update(fmin_q1=float(q1), fmin_median=float(median), fmin_q3=float(q3))
            counts, _ = np.histogram(fmins, bins=FIDELITY_HISTOGRAM_BINS, range=(0.0, 1.0))
        else:
            row.update(fmin_q1="", fmin_median="", fmin_q3="")
            counts = np.zeros(FIDELITY_HISTOGRAM_BINS, dtype=int)
        for b in range(FIDELITY_HISTOGRAM_BINS):
            row[f"bin_{b:02d}"] = int(counts[b])
        rows.append(row)

    fieldnames = ["method", "w", "trials", "converged", "convergence_rate",
                  "fmin_q1", "fmin_median", "fmin_q3"]
    fieldnames += [f"bin_{b:02d}" for b in range(FIDELITY_HISTOGRAM_BINS)]
    with open(out_csv, "w", encoding="utf-8", newline="") as fh:
        writer = DictWriter(fh, fieldnames=fieldnames)
        writer.writeheader()
        for row in rows:
            writer.writerow(row)
    return rows
