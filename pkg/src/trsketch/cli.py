"""Command-line entry point: ``trsketch <subcommand> ...``.

Exit codes: 0 on success, 1 on usage errors, 2 on runtime failures.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from ._version import __version__
from .exceptions import TrsketchError
from .harness import ExperimentConfig, read_trials_csv, run_experiment, summarize, write_summary
from .model import (
    Direction,
    build_projected,
    generate_instance,
    instance_to_dict,
    normalize,
    projected_to_dict,
    read_problem,
)
from .projector import (
    ScalingConvention,
    check_inner_product,
    check_linear_map,
    check_norm_preservation,
    check_quadratic_form,
    gram_deviation,
    load_projector,
    sample_projector,
    sample_unit_vectors,
    save_projector,
)
from .solvers import fullness, solve_ball_qp, solve_convex, solve_local, solve_oracle_small


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage; we reserve 2 for runtime failures
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _emit(payload, out):
    text = json.dumps(payload, indent=1) + "\n"
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _cmd_generate(args):
    inst = generate_instance(args.n, args.m, args.model, args.rank_k, args.fullness_target, args.seed,
                             signature=args.signature)
    _emit(instance_to_dict(inst), args.out)


def _cmd_project(args):
    inst = read_problem(args.input)
    if not hasattr(inst, "normalized"):
        raise TrsketchError("project expects an original instance, not a projected one")
    if not inst.normalized:
        inst, _ = normalize(inst)
    if args.projector:
        projector = load_projector(args.projector)
    else:
        if args.d is None:
            raise UsageError("project: either --d or --projector is required")
        projector = sample_projector(inst.n, args.d, args.convention, args.seed)
    if args.save_projector:
        save_projector(projector, args.save_projector)
    _emit(projected_to_dict(build_projected(inst, projector, args.eps, args.direction)), args.out)


def _cmd_solve(args):
    problem = read_problem(args.input)
    if args.method == "ball-qp":
        if problem.m > 0:
            raise TrsketchError("ball-qp requires m=0")
        q = problem.Q if problem.Q is not None else np.zeros((problem.n, problem.n))
        report = solve_ball_qp(q, problem.c, problem.radius)
    elif args.method == "convex":
        report = solve_convex(problem, tol=args.tol)
    elif args.method == "local":
        report = solve_local(problem, starts=args.starts, tol=args.tol, seed=args.seed)
    else:
        report = solve_oracle_small(problem, grid_step=args.grid_step)
    _emit(report.as_dict(), args.out)


def _cmd_fullness(args):
    res = fullness(read_problem(args.input), tol=args.tol)
    _emit({"r": res.r, "center": [float(v) for v in res.center], "residual": res.residual,
           "converged": res.converged}, args.out)


def _cmd_experiment(args):
    cfg = ExperimentConfig.from_json(args.config)
    _, summary = run_experiment(cfg, out_dir=args.out_dir, threads=args.threads)
    counts = summary.counts
    print(f"{counts['completed']} completed, {counts['projected_infeasible']} projected-infeasible, "
          f"{counts['solver_failure']} failed; wrote {Path(args.out_dir) / 'trials.csv'}")


def _cmd_check_lemmas(args):
    # independent streams: test vectors must not share the projector's draws
    proj_seed, data_seed = np.random.SeedSequence(args.seed).generate_state(2, np.uint64)
    projector = sample_projector(args.n, args.d, args.convention, int(proj_seed))
    rng = np.random.default_rng(int(data_seed))
    xs = sample_unit_vectors(args.n, args.trials, rng)
    pairs = (sample_unit_vectors(args.n, args.pairs, rng), sample_unit_vectors(args.n, args.pairs, rng))
    qpairs = (sample_unit_vectors(args.n, args.trials, rng), sample_unit_vectors(args.n, args.trials, rng))
    frame, _ = np.linalg.qr(rng.standard_normal((args.n, args.rank_k)))
    spectrum = np.sort(rng.uniform(0.1, 1.0, args.rank_k))[::-1]
    spectrum[0] = 1.0
    q = (frame * spectrum) @ frame.T
    rows = sample_unit_vectors(args.n, args.m, rng)
    deviation = gram_deviation(projector)
    reports = {
        "norm_preservation": check_norm_preservation(projector, xs, args.eps),
        "inner_product": check_inner_product(projector, pairs, args.eps),
        "linear_map": check_linear_map(projector, rows, xs, args.eps),
        "quadratic_form": check_quadratic_form(projector, q, qpairs, args.eps),
    }
    payload = {"convention": projector.convention.value, "n": args.n, "d": args.d, "epsilon": args.eps,
               "gram_deviation": deviation,
               "reports": {k: v.as_dict() for k, v in reports.items()}}
    for name, rep in reports.items():
        print(f"{name}: fraction {rep.fraction:.4f} over {rep.trials} (worst {rep.worst_violation:.3e})")
    print(f"gram_deviation: {deviation:.4e}")
    if args.out:
        _emit(payload, args.out)


def _cmd_report(args):
    summary = summarize(read_trials_csv(args.input))
    if args.out:
        write_summary(summary, args.out)
    else:
        sys.stdout.write(json.dumps(summary.as_dict(), indent=2) + "\n")


def build_parser():
    parser = _Parser(prog="trsketch", description="Random projections for trust-region subproblems.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    conventions = [c.value for c in ScalingConvention]

    p = sub.add_parser("generate", help="write a random normalized instance as JSON")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--model", choices=["linear", "quadratic"], default="linear")
    p.add_argument("--rank-k", type=int, default=0)
    p.add_argument("--signature", choices=["psd", "indefinite"], default="psd")
    p.add_argument("--fullness-target", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("project", help="build the minus or plus projected instance")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--d", type=int)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--direction", choices=[d.value for d in Direction], default="minus")
    p.add_argument("--convention", choices=conventions, default=ScalingConvention.GAUSSIAN_INV_SQRT_N.value)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--projector", help="load the projector from this binary file instead of sampling")
    p.add_argument("--save-projector", help="write the projector binary here")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_project)

    p = sub.add_parser("solve", help="solve an instance or projected instance")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--method", choices=["convex", "local", "ball-qp", "grid"], default="convex")
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--starts", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--grid-step", type=float, default=0.01)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("fullness", help="radius of the largest ball inside the feasible set")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_fullness)

    p = sub.add_parser("experiment", help="run a Monte-Carlo experiment from a config JSON")
    p.add_argument("--config", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--threads", type=int)
    p.set_defaults(func=_cmd_experiment)

    p = sub.add_parser("check-lemmas", help="empirical distortion checks of a sampled projector")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--convention", choices=conventions, default=ScalingConvention.GAUSSIAN_INV_SQRT_D.value)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--pairs", type=int, default=10000)
    p.add_argument("--m", type=int, default=50, help="rows of the random linear map")
    p.add_argument("--rank-k", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_check_lemmas)

    p = sub.add_parser("report", help="summarize a trials.csv")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_report)
    return parser


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except (TrsketchError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"trsketch: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
