"""Command-line interface.

Subcommands: generate, identify, evaluate, experiment, report. All
randomness flows from explicit --seed flags. Exit codes: 0 success,
1 usage error (bad flags, missing files), 2 numerical or validation
failure (invalid states, malformed or mismatched file schemas).
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

import numpy as np

from . import io
from .dynamics import (
    dephasing_model,
    mix_noise,
    propagate_lindblad,
    random_density_matrix,
    random_model,
)
from .experiments import ExperimentConfig, report, run_experiment
from .metrics import METHODS, identify, min_fidelity, repropagate
from .optimize import OptimizerConfig


class _Parser(argparse.ArgumentParser):
    """argparse defaults to exit code 2 on usage errors; this CLI uses 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(1)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="oqsid", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    gen = sub.add_parser("generate", help="write a time-series file from a seeded random model")
    gen.add_argument("--seed", type=int, required=True)
    gen.add_argument("--out", required=True)
    gen.add_argument("--n", type=int, default=2)
    gen.add_argument("--steps", type=int, default=49, help="number of transitions N")
    gen.add_argument("--dt", type=float, default=0.1)
    gen.add_argument("--w", type=float, default=0.0, help="noise mixing coefficient")
    gen.add_argument("--model", choices=("random", "dephasing"), default="random")
    gen.add_argument("--jumps", type=int, default=1, help="jump operators in a random model")
    gen.add_argument("--jump-scale", type=float, default=0.1)
    gen.add_argument("--gamma", type=float, default=0.1, help="dephasing rate")
    gen.set_defaults(func=_cmd_generate)

    ide = sub.add_parser("identify", help="identify a model from a time-series file")
    ide.add_argument("--in", dest="infile", required=True)
    ide.add_argument("--out", required=True, help="identified-model output file")
    ide.add_argument("--method", choices=METHODS, required=True)
    ide.add_argument("--ell", type=int, default=None,
                     help="operators to fit (default: 4 for kraus, 1 otherwise)")
    ide.add_argument("--mu", type=float, default=10.0, help="completeness penalty weight")
    ide.add_argument("--seed", type=int, default=0)
    ide.add_argument("--hops", type=int, default=None)
    ide.add_argument("--max-iter", type=int, default=None)
    ide.add_argument("--g-tol", type=float, default=None)
    ide.add_argument("--step-size", type=float, default=None)
    ide.add_argument("--temperature", type=float, default=None)
    ide.add_argument("--series-out", default=None,
                     help="also write the repropagated trajectory here")
    ide.set_defaults(func=_cmd_identify)

    eva = sub.add_parser("evaluate", help="print F_min between two series files")
    eva.add_argument("--exact", required=True)
    eva.add_argument("--sid", required=True)
    eva.set_defaults(func=_cmd_evaluate)

    exp = sub.add_parser("experiment", help="run a full identification sweep")
    exp.add_argument("--out", required=True, help="record stream output path")
    exp.add_argument("--seed", type=int, default=0)
    exp.add_argument("--trials", type=int, default=100)
    exp.add_argument("--methods", default=",".join(METHODS),
                     help="comma-separated subset of kraus,pade,trapezoid,simpson")
    exp.add_argument("--noise-grid", default="0,0.01,0.05,0.1,0.2",
                     help="comma-separated mixing coefficients")
    exp.add_argument("--n", type=int, default=2)
    exp.add_argument("--steps", type=int, default=49)
    exp.add_argument("--dt", type=float, default=0.1)
    exp.add_argument("--ell-true", type=int, default=1)
    exp.add_argument("--ell-kraus", type=int, default=4)
    exp.add_argument("--workers", type=int, default=1)
    exp.add_argument("--hops", type=int, default=None)
    exp.add_argument("--max-iter", type=int, default=None)
    exp.add_argument("--g-tol", type=float, default=None)
    exp.set_defaults(func=_cmd_experiment)

    rep = sub.add_parser("report", help="aggregate a record stream into CSV tables")
    rep.add_argument("--records", required=True)
    rep.add_argument("--out", required=True, help="CSV output path")
    rep.set_defaults(func=_cmd_report)

    return parser


def _optimizer_config(args, seed: int) -> OptimizerConfig:
    cfg = OptimizerConfig(seed=seed)
    overrides = {}
    for flag, name in (
        ("hops", "hops"),
        ("max_iter", "max_iter"),
        ("g_tol", "g_tol"),
        ("step_size", "step_size"),
        ("temperature", "temperature"),
    ):
        value = getattr(args, flag, None)
        if value is not None:
            overrides[name] = value
    return replace(cfg, **overrides) if overrides else cfg


def _cmd_generate(args) -> int:
    rng = np.random.default_rng(args.seed)
    if args.model == "dephasing":
        model = dephasing_model(args.gamma, n=args.n)
        description = f"dephasing(gamma={args.gamma})"
    else:
        model = random_model(args.n, args.jumps, rng, args.jump_scale)
        description = f"random(jumps={args.jumps},scale={args.jump_scale})"
    rho0 = random_density_matrix(args.n, rng)
    series = propagate_lindblad(
        model, rho0, args.dt, args.steps,
        metadata={"seed": args.seed, "generator": description, "w": 0.0},
    )
    if args.w > 0:
        series = mix_noise(series, args.w, rng)
    io.save_time_series(series, args.out)
    print(f"wrote {args.out}: n={args.n} steps={args.steps} dt={args.dt} w={args.w}")
    return 0


def _cmd_identify(args) -> int:
    series = io.load_time_series(args.infile)
    ell = args.ell if args.ell is not None else (4 if args.method == "kraus" else 1)
    cfg = _optimizer_config(args, args.seed)
    identified = identify(series, args.method, ell, cfg, mu=args.mu)
    io.save_identified_model(identified, args.out)
    opt = identified.optimization
    line = (
        f"method={args.method} converged={opt.converged} "
        f"objective={opt.best_value:.6e} grad_norm={opt.best_grad_norm:.3e}"
    )
    if identified.completeness_residual is not None:
        line += f" completeness_residual={identified.completeness_residual:.3e}"
    print(line)
    if args.series_out:
        sid = repropagate(identified, series.states[0], series.dt, series.num_steps)
        io.save_time_series(sid, args.series_out)
        print(f"wrote repropagated series to {args.series_out}")
    return 0


def _cmd_evaluate(args) -> int:
    exact = io.load_time_series(args.exact)
    sid = io.load_time_series(args.sid)
    print(f"F_min = {min_fidelity(exact, sid)}")
    return 0


def _cmd_experiment(args) -> int:
    methods = tuple(m.strip() for m in args.methods.split(",") if m.strip())
    noise_grid = tuple(float(w) for w in args.noise_grid.split(",") if w.strip())
    optimizer = _optimizer_config(args, args.seed)
    cfg = ExperimentConfig(
        n=args.n,
        ell_true=args.ell_true,
        ell_kraus=args.ell_kraus,
        num_steps=args.steps,
        dt=args.dt,
        methods=methods,
        noise_grid=noise_grid,
        trials_per_cell=args.trials,
        master_seed=args.seed,
        optimizer=optimizer,
        workers=args.workers,
    )
    summary = run_experiment(cfg, args.out)
    for cell in summary:
        median = cell["fmin_median"]
        median_text = "n/a" if median is None else f"{median:.4f}"
        print(
            f"method={cell['method']:<9} w={cell['w']:<5} "
            f"converged={cell['converged']}/{cell['trials']} "
            f"median_F_min={median_text}"
        )
    print(f"wrote {args.out}")
    return 0


def _cmd_report(args) -> int:
    rows = report(args.records, args.out)
    print(f"wrote {args.out}: {len(rows)} cells")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        sys.stderr.write(f"oqsid: file not found: {exc.filename or exc}\n")
        return 1
    except (ValueError, np.linalg.LinAlgError) as exc:
        sys.stderr.write(f"oqsid: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
