"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 numerical or precondition failure.
"""

import argparse
import json
import os
import sys

import numpy as np

from . import harness
from .allocation import RankEstimator, greedy_allocate
from .errors import ObsAllocError, PreconditionError
from .io import (
    load_trajectories,
    read_json,
    save_trajectories,
    write_json,
    write_manifest,
)
from .linsys import SystemModel
from .measurement import MeasurementMatrix, Schedule, cyclic_schedule, cyclic_schedule_restricted
from .oracle import exact_observability_rank, minimal_sensor_count
from .sysid import MarkovEstimate, collect, estimate_markov, ho_kalman, recover_ab

EXIT_USAGE = 1
EXIT_FAILURE = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _int_list(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _threads(args):
    if getattr(args, "threads", None) is not None:
        return max(1, args.threads)
    env = os.environ.get("OBSALLOC_THREADS")
    return max(1, int(env)) if env else 1


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------

def _gen_model(args):
    if args.which == "model1":
        model = harness.build_model1(args.sigma_u2, args.sigma_w2, args.sigma_eta2)
    else:
        cfg = harness.HvacConfig(delta=args.delta, xi_env=args.xi_env, xi_pair=args.xi_pair, v=args.v)
        model, _ = harness.build_model2(cfg)
    write_json(args.out, model.to_dict())
    return {"params": {"model": args.which}, "inputs": [], "outputs": [args.out]}


def _load_model(path):
    return SystemModel.from_dict(read_json(path))


def _schedule_for(args, model):
    if args.schedule:
        sched = Schedule.from_dict(read_json(args.schedule))
        if sched.r != model.r:
            raise PreconditionError("schedule and model disagree on r")
        return sched
    if args.n_bar is None or args.s is None:
        raise UsageError("give --schedule or both --n-bar and --s")
    if args.accessible:
        if model.accessible is None:
            raise UsageError("--accessible needs a model file with an 'accessible' list")
        return cyclic_schedule_restricted(model.r, model.accessible, args.n_bar, args.s)
    return cyclic_schedule(model.r, args.n_bar, args.s)


def _simulate(args):
    model = _load_model(args.model)
    sched = _schedule_for(args, model)
    trajs = collect(model, sched, args.T, args.seed, _threads(args))
    save_trajectories(args.out, sched, trajs)
    inputs = [args.model] + ([args.schedule] if args.schedule else [])
    params = {"T": args.T, "seed": args.seed, "n_bar": sched.n_bar, "s": sched.s, "K": sched.K}
    return {"params": params, "inputs": inputs, "outputs": [args.out]}


def _sysid(args):
    inputs = []
    if args.data:
        sched, trajs = load_trajectories(args.data)
        inputs.append(args.data)
        r = sched.r
        restricted = sched.accessible is not None
        seed = trajs[0].seed if trajs else None
    else:
        if args.model is None or args.T is None or args.seed is None:
            raise UsageError("sysid needs --model, --T and --seed (or --data)")
        model = _load_model(args.model)
        inputs.append(args.model)
        sched = _schedule_for(args, model)
        if args.schedule:
            inputs.append(args.schedule)
        r = model.r
        restricted = sched.accessible is not None
        trajs = collect(model, sched, args.T, args.seed, _threads(args))
        seed = args.seed
    d = args.rank_d if args.rank_d is not None else (2 * r - 1 if restricted else r)
    est = estimate_markov(sched, trajs, d, _threads(args))
    write_json(args.out, est.to_dict())
    params = {"d": d, "T": est.T, "seed": seed, "n_bar": sched.n_bar, "s": sched.s, "K": sched.K}
    return {"params": params, "inputs": inputs, "outputs": [args.out]}


def _recover(args):
    est = MarkovEstimate.from_dict(read_json(args.markov))
    rec = recover_ab(est, args.rank_tol)
    out = rec.to_dict()
    out.update({"s_min": est.s_min, "T": est.T})
    write_json(args.out, out)
    return {"params": {"rank_tol": args.rank_tol}, "inputs": [args.markov], "outputs": [args.out]}


def _ho_kalman(args):
    est = MarkovEstimate.from_dict(read_json(args.markov))
    r = args.r if args.r is not None else est.r
    rec = ho_kalman(est, r, None, args.rank_tol, args.gap_factor)
    out = rec.to_dict()
    out.update({"rows": list(est.measured), "s_min": est.s_min, "T": est.T})
    write_json(args.out, out)
    params = {"r": r, "rank_tol": args.rank_tol, "gap_factor": args.gap_factor}
    return {"params": params, "inputs": [args.markov], "outputs": [args.out]}


def _candidates(spec, r, accessible):
    if spec == "all":
        return tuple(range(1, r + 1))
    if spec == "accessible":
        if accessible is None:
            raise UsageError("--candidates accessible needs an accessible set (model file or estimate rows)")
        return tuple(accessible)
    try:
        return tuple(_int_list(spec))
    except argparse.ArgumentTypeError as exc:
        raise UsageError(str(exc))


def _allocate(args):
    inputs = []
    accessible = None
    if args.model:
        inputs.append(args.model)
        accessible = _load_model(args.model).accessible
    if args.estimator == "hankel":
        if not args.markov:
            raise UsageError("the hankel estimator needs --markov")
        est = MarkovEstimate.from_dict(read_json(args.markov))
        inputs.append(args.markov)
        if accessible is None and len(est.measured) < est.r:
            accessible = est.measured
        rank_est = RankEstimator.hankel(est, accessible, args.threshold)
        r = est.r
    else:
        if bool(args.markov) == bool(args.a_hat):
            raise UsageError("the direct estimator needs exactly one of --markov or --a-hat")
        if args.markov:
            est = MarkovEstimate.from_dict(read_json(args.markov))
            inputs.append(args.markov)
            A_hat, s_min, T = recover_ab(est).A_hat, est.s_min, est.T
        else:
            data = read_json(args.a_hat)
            inputs.append(args.a_hat)
            r = int(data["r"])
            A_hat = np.reshape(np.asarray(data["A"], dtype=float), (r, r))
            s_min, T = int(data.get("s_min", 0)), int(data.get("T", 0))
            if accessible is None and data.get("accessible") is not None:
                accessible = tuple(data["accessible"])
        if args.threshold is None and (s_min < 1 or T < 1):
            raise UsageError("no coverage statistics available: pass --threshold explicitly")
        rank_est = RankEstimator.direct(A_hat, args.threshold, s_min, T)
        r = rank_est.r
    cands = _candidates(args.candidates, r, accessible)
    result = greedy_allocate(rank_est, cands, r, lazy=args.lazy)
    out = result.to_dict()
    out["threshold"] = rank_est.threshold
    write_json(args.out, out)
    outputs = [args.out]
    if args.matrix_out:
        M = result.dense().astype(int)
        write_json(args.matrix_out, {"rows": M.shape[0], "cols": M.shape[1], "data": M.ravel().tolist()})
        outputs.append(args.matrix_out)
    params = {"estimator": args.estimator, "candidates": args.candidates,
              "threshold": rank_est.threshold, "lazy": args.lazy}
    return {"params": params, "inputs": inputs, "outputs": outputs}


def _oracle(args):
    model = _load_model(args.model)
    if args.oracle_cmd == "rank":
        coords = MeasurementMatrix(model.r, tuple(args.coords))
        rank = exact_observability_rank(model.A, coords, args.rel_tol)
        print(rank)
        return None
    cands = None
    if args.accessible:
        if model.accessible is None:
            raise UsageError("--accessible needs a model file with an 'accessible' list")
        cands = model.accessible
    res = minimal_sensor_count(model.A, cands, args.rel_tol, prune=not args.no_prune)
    print(res.n_star)
    if args.out:
        write_json(args.out, {"n_star": res.n_star, "witness": list(res.witness),
                              "search_space": res.search_space})
        return {"params": {"accessible": args.accessible, "rel_tol": args.rel_tol},
                "inputs": [args.model], "outputs": [args.out]}
    return None


def _experiment(args):
    if args.which == "model1":
        model, accessible = harness.build_model1(), None
        defaults = {"n_bar": 5, "s": 4, "d": 20, "estimator": "direct", "s_list": [1, 2, 4]}
    else:
        model, accessible = harness.build_model2()
        defaults = {"n_bar": 5, "s": 4, "d": 39, "estimator": "hankel", "s_list": [1, 2, 4]}
    n_bar = args.n_bar or defaults["n_bar"]
    d = args.rank_d if args.rank_d is not None else defaults["d"]
    os.makedirs(args.out_dir, exist_ok=True)
    threads = _threads(args)
    if args.sweep:
        s_list = args.s_list or defaults["s_list"]
        T_list = args.T_list or list(harness.DEFAULT_T_GRID)
        seeds = list(range(args.seed, args.seed + args.n_seeds))
        rows = harness.run_error_sweep(model, n_bar, s_list, T_list, d, seeds, accessible,
                                       threads, record_time=args.wall_time)
        path = os.path.join(args.out_dir, f"{args.which}_sweep.csv")
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(harness.sweep_csv(rows))
        params = {"mode": "sweep", "model": args.which, "n_bar": n_bar, "d": d, "s_list": s_list,
                  "T_list": T_list, "seed": args.seed, "n_seeds": args.n_seeds,
                  "wall_time": args.wall_time}
        return {"params": params, "inputs": [], "outputs": [path], "manifest_base": path}
    s = args.s or defaults["s"]
    T = args.T or 20000
    estimator = args.estimator or defaults["estimator"]
    res = harness.run_allocation_experiment(model, n_bar, s, T, d, args.seed, estimator, accessible,
                                            threshold=args.threshold, lazy=args.lazy,
                                            threads=threads)
    base = os.path.join(args.out_dir, f"{args.which}")
    alloc_path = f"{base}_allocation.json"
    matrix_path = f"{base}_allocation_matrix.json"
    markov_path = f"{base}_markov.json"
    out = res.allocation.to_dict()
    out["threshold"] = res.threshold
    write_json(alloc_path, out)
    write_json(matrix_path, res.matrix_dict())
    write_json(markov_path, res.estimate.to_dict())
    print(json.dumps({"coords": list(res.allocation.coords), "n_hat": res.allocation.n_hat}))
    params = {"mode": "allocate", "model": args.which, "n_bar": n_bar, "s": s, "T": T, "d": d,
              "estimator": estimator, "threshold": res.threshold, "seed": args.seed,
              "lazy": args.lazy}
    return {"params": params, "inputs": [], "outputs": [alloc_path, matrix_path, markov_path],
            "manifest_base": alloc_path}


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--threads", type=int, default=argparse.SUPPRESS,
                        help="worker threads (default: $OBSALLOC_THREADS or 1); never changes results")
    common.add_argument("--error-json", action="store_true", default=argparse.SUPPRESS,
                        help="on failure, print a JSON error object to stdout")

    parser = _Parser(prog="obsalloc", description=__doc__.splitlines()[0], parents=[common])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen-model", parents=[common], help="write a benchmark model file")
    p.add_argument("which", choices=["model1", "model2"])
    p.add_argument("--out", required=True)
    p.add_argument("--sigma-u2", type=float, default=1.0)
    p.add_argument("--sigma-w2", type=float, default=1.0)
    p.add_argument("--sigma-eta2", type=float, default=1.0)
    p.add_argument("--delta", type=float, default=35.0)
    p.add_argument("--v", type=float, default=100.0)
    p.add_argument("--xi-env", type=float, default=1.0)
    p.add_argument("--xi-pair", type=float, default=1.0)
    p.set_defaults(func=_gen_model)

    def schedule_args(p):
        p.add_argument("--schedule", help="schedule JSON file")
        p.add_argument("--n-bar", type=int)
        p.add_argument("--s", type=int)
        p.add_argument("--accessible", action="store_true",
                       help="cycle only over the model's accessible coordinates")

    p = sub.add_parser("simulate", parents=[common], help="simulate trajectories under a schedule")
    p.add_argument("--model", required=True)
    schedule_args(p)
    p.add_argument("--T", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True, help="output .npz archive")
    p.set_defaults(func=_simulate)

    p = sub.add_parser("sysid", parents=[common], help="estimate Markov parameters")
    p.add_argument("--model")
    p.add_argument("--data", help="trajectory archive from 'simulate' instead of simulating")
    schedule_args(p)
    p.add_argument("--T", type=int)
    p.add_argument("--rank-d", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_sysid)

    p = sub.add_parser("recover", parents=[common], help="recover A, B from a full Markov estimate")
    p.add_argument("--markov", required=True)
    p.add_argument("--rank-tol", type=float, default=1e-10)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_recover)

    p = sub.add_parser("ho-kalman", parents=[common], help="realize A, B up to similarity from estimated rows")
    p.add_argument("--markov", required=True)
    p.add_argument("--r", type=int)
    p.add_argument("--rank-tol", type=float, default=1e-10)
    p.add_argument("--gap-factor", type=float, default=10.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_ho_kalman)

    p = sub.add_parser("allocate", parents=[common], help="greedy sensor allocation")
    p.add_argument("--estimator", choices=["direct", "hankel"], required=True)
    p.add_argument("--markov")
    p.add_argument("--a-hat")
    p.add_argument("--model", help="model file supplying the accessible set")
    p.add_argument("--candidates", default="all", help="all | accessible | comma-separated coordinates")
    p.add_argument("--threshold", type=float)
    p.add_argument("--lazy", action="store_true")
    p.add_argument("--out", required=True)
    p.add_argument("--matrix-out", help="also write the dense 0/1 allocation matrix")
    p.set_defaults(func=_allocate)

    p = sub.add_parser("oracle", parents=[common], help="brute-force references")
    osub = p.add_subparsers(dest="oracle_cmd", required=True, parser_class=_Parser)
    q = osub.add_parser("min-sensors", parents=[common])
    q.add_argument("--model", required=True)
    q.add_argument("--accessible", action="store_true")
    q.add_argument("--no-prune", action="store_true")
    q.add_argument("--rel-tol", type=float, default=1e-9)
    q.add_argument("--out")
    q = osub.add_parser("rank", parents=[common])
    q.add_argument("--model", required=True)
    q.add_argument("--coords", type=_int_list, required=True)
    q.add_argument("--rel-tol", type=float, default=1e-9)
    p.set_defaults(func=_oracle)

    p = sub.add_parser("experiment", parents=[common], help="benchmark-model sweeps and allocation runs")
    p.add_argument("which", choices=["model1", "model2"])
    mode = p.add_mutually_exclusive_group(required=True)
    mode.add_argument("--sweep", action="store_true")
    mode.add_argument("--allocate", action="store_true")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--n-seeds", type=int, default=10)
    p.add_argument("--n-bar", type=int)
    p.add_argument("--s", type=int)
    p.add_argument("--s-list", type=_int_list)
    p.add_argument("--T", type=int)
    p.add_argument("--T-list", type=_int_list)
    p.add_argument("--rank-d", type=int)
    p.add_argument("--estimator", choices=["direct", "hankel"])
    p.add_argument("--threshold", type=float)
    p.add_argument("--lazy", action="store_true")
    p.add_argument("--wall-time", action="store_true",
                   help="record wall-clock seconds in the sweep CSV (makes it run-dependent)")
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=_experiment)
    return parser


def _replay_argv(argv):
    """argv without --threads, which never affects outputs."""
    out, skip = [], False
    for tok in argv:
        if skip:
            skip = False
        elif tok == "--threads":
            skip = True
        elif not tok.startswith("--threads="):
            out.append(tok)
    return out


def _fail(args, code, message, status):
    if getattr(args, "error_json", False):
        print(json.dumps({"error": code, "message": message}))
    print(f"obsalloc: {message}", file=sys.stderr)
    return status


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        info = args.func(args)
    except UsageError as exc:
        return _fail(args, "usage", str(exc), EXIT_USAGE)
    except ObsAllocError as exc:
        return _fail(args, exc.code, str(exc), EXIT_FAILURE)
    except (OSError, KeyError, json.JSONDecodeError) as exc:
        return _fail(args, "bad_input", f"{type(exc).__name__}: {exc}", EXIT_USAGE)
    if info:
        base = info.pop("manifest_base", info["outputs"][0])
        write_manifest(base, args.command, info["params"], _replay_argv(argv),
                       info["inputs"], info["outputs"])
    return 0


if __name__ == "__main__":
    sys.exit(main())
