"""A miniature Monte-Carlo sweep with records and CSV report.
===========================================================

Runs the full experiment harness at toy scale: a handful of trials per
(method, noise) cell, each drawing a fresh random system, identifying it,
and scoring the trajectory fidelity. Trial records land in a
line-delimited JSON stream; the report step aggregates them into a CSV of
convergence rates, fidelity quartiles, and 25-bin histograms.

The same sweep is available from the command line:

    oqsid experiment --out records.jsonl --trials 5 --seed 11 \
        --noise-grid 0,0.1 --hops 2
    oqsid report --records records.jsonl --out report.csv
"""

import tempfile
from pathlib import Path

from oqsid import ExperimentConfig, OptimizerConfig, report, run_experiment

workdir = Path(tempfile.mkdtemp(prefix="oqsid-demo-"))
records_path = workdir / "records.jsonl"
csv_path = workdir / "report.csv"

cfg = ExperimentConfig(
    methods=("kraus", "pade", "trapezoid", "simpson"),
    noise_grid=(0.0, 0.1),
    trials_per_cell=5,
    master_seed=11,
    ell_kraus=2,
    jump_scale=0.15,
    optimizer=OptimizerConfig(g_tol=1e-5, max_iter=150, hops=2, step_size=0.5),
    workers=1,
)

summary = run_experiment(cfg, records_path)

print(f"{'method':>10} {'w':>5} {'conv':>6} {'median F_min':>13}")
for cell in summary:
    median = cell["fmin_median"]
    print(
        f"{cell['method']:>10} {cell['w']:5.2f} "
        f"{cell['converged']:3d}/{cell['trials']:<2d} "
        f"{'n/a' if median is None else f'{median:13.6f}'}"
    )

rows = report(records_path, csv_path)
print(f"\nrecords: {records_path}")
print(f"report:  {csv_path} ({len(rows)} cells)")
with open(records_path) as fh:
    print("\nfirst record line:")
    print(" ", fh.readline().strip()[:120], "...")
