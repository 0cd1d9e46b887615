"""Command-line front end.

Exit codes: 0 success, 2 usage or configuration error, 3 infeasible
budgets, 4 enumeration cap exceeded.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from scalloc import __version__, allocator, config, kernels, netsim, profiler
from scalloc.stream import GeneratorSpec

EXIT_OK, EXIT_USAGE, EXIT_INFEASIBLE, EXIT_CAP = 0, 2, 3, 4


class UsageError(Exception):
    pass


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"{text!r} must be >= 1")
    return value


def _seed(text: str) -> int:
    try:
        value = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer") from None
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return value


def _int_list(text: str) -> list[int]:
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not a comma-separated integer list") from None
    if not values or any(v < 1 for v in values):
        raise argparse.ArgumentTypeError(f"{text!r} must list positive integers")
    return values


def _float_list(text: str) -> list[float]:
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not a comma-separated number list") from None
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def _key_values(text: str) -> dict[str, str]:
    out = {}
    for part in filter(None, (p.strip() for p in text.split(","))):
        key, sep, value = part.partition("=")
        if not sep:
            raise argparse.ArgumentTypeError(f"bad entry {part!r}; expected key=value")
        out[key.strip()] = value.strip()
    return out


def _dump_json(data, path) -> None:
    text = json.dumps(data, indent=2, sort_keys=True, allow_nan=False) + "\n"
    Path(path).write_text(text, encoding="utf-8")


def _solution_dict(sol: allocator.AllocationSolution | None) -> dict | None:
    if sol is None:
        return None
    return {
        "config": sol.config_id,
        "pairs": [list(p) for p in sol.pairs],
        "costs": dict(sol.costs),
        "err": sol.err,
        "score": sol.score,
    }


def _fmt_solution(sol: allocator.AllocationSolution) -> str:
    pairs = ", ".join(f"{layer}={impl}" for impl, layer in sol.pairs)
    costs = ", ".join(f"{m}={v:.6g} {allocator.NETWORK_UNITS[m]}" for m, v in sol.costs.items())
    text = f"[{pairs}] {costs}"
    if sol.score is not None:
        text += f", Err={sol.err:.4g}, Score={sol.score:.6g}"
    return text


# -- characterize / calibrate ---------------------------------------------------


def run_characterize(args) -> int:
    plan = profiler.TrialPlan(
        implementation=args.impl,
        fan_ins=tuple(args.fan_ins),
        stream_lengths=tuple(args.stream_lengths),
        trials=args.trials,
        seed=args.seed,
        btanh_states=args.btanh_states,
    )
    profiles = profiler.sweep(plan)
    profiler.export_profiles(profiles, args.out)
    states = args.btanh_states if args.btanh_states else "2n"
    print(
        f"# characterize impl={plan.implementation} fan_ins={','.join(map(str, plan.fan_ins))} "
        f"stream_lengths={','.join(map(str, plan.stream_lengths))} trials={plan.trials} "
        f"seed={plan.seed} inputs={plan.input_distribution} "
        f"{'btanh_states' if plan.implementation == 'apc' else 'fsm_states'}="
        f"{states if plan.implementation == 'apc' else '2n'}"
    )
    print(f"{'n':>6} {'m':>7} {'abs_error':>10} {'mean_error':>11}")
    for p in profiles:
        print(f"{p.fan_in:>6} {p.stream_length:>7} {p.absolute_error:>10.4f} {p.mean_error:>11.4f}")
    print(f"wrote {len(profiles)} rows to {args.out}")
    return EXIT_OK


def run_calibrate(args) -> int:
    n = args.fan_in
    candidates = args.candidates or sorted({max(2, n // 2 + n // 2 % 2), n + n % 2, 2 * n, 4 * n})
    deviations = profiler.btanh_deviations(n, args.stream_length, candidates, args.z_grid, args.trials, args.seed)
    chosen = profiler.calibrate_btanh_states(
        n, args.stream_length, candidates, args.z_grid, args.trials, args.seed
    )
    print(
        f"# calibrate n={n} m={args.stream_length} candidates={','.join(map(str, candidates))} "
        f"z_grid={','.join(f'{z:g}' for z in args.z_grid)} trials={args.trials} seed={args.seed}"
    )
    for S, d in deviations.items():
        print(f"S={S:<5d} max_deviation={d:.4f}{'  <- chosen' if S == chosen else ''}")
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write("S,max_deviation,chosen\n")
            for S, d in deviations.items():
                fh.write(f"{S},{d!r},{int(S == chosen)}\n")
    return EXIT_OK


# -- allocation -----------------------------------------------------------------


def _problem(args, path):
    cfg = config.load_config(path)
    problem = config.build_problem(
        cfg,
        weights=args.weights,
        seed=args.seed,
        threshold=getattr(args, "theta", None),
        iteration_limit=getattr(args, "tau", None),
        target_metric=getattr(args, "target_metric", None),
        neighbourhood=getattr(args, "neighbourhood", None),
    )
    if problem.err_provider is None:
        raise config.ConfigError(f"{path}: no error provider (need 'error_table' or 'samples')")
    return problem


def run_allocate(args) -> int:
    problem = _problem(args, args.config)
    params = config.resolved(problem)
    params["seed"] = args.seed
    print(f"# allocate {args.config}")
    print("# parameters " + json.dumps(params, sort_keys=True))
    record = {"command": "allocate", "config": str(args.config), "parameters": params}
    try:
        mfs = problem.mfs()
    except allocator.InfeasibleError as exc:
        where = f" (blocking layer: {exc.layer})" if exc.layer else ""
        print(f"INFEASIBLE: {exc.reason}{where}")
        record.update(feasible=False, reason=exc.reason, blocking_layer=exc.layer)
        if args.out:
            _dump_json(record, args.out)
        return EXIT_INFEASIBLE
    solution = problem.optimize(mfs)
    mfs_scored = problem.evaluate(mfs.pairs)
    print(f"MFS:   {_fmt_solution(mfs_scored)}")
    for step in solution.trace[1:]:
        moved = step["reallocated_config"]
        print(
            f"iter {step['iteration']}: sweeps({step['target_metric']})="
            f"{','.join(f'{c:.6g}' for c in step['sweep_costs'])} "
            f"refined={step['refined_config']} score={step['refined_score']:.6g}"
            + (f" reallocated={moved} score={step['reallocated_score']:.6g}" if moved else "")
            + f" best={step['best_score']:.6g}"
        )
    print(f"FINAL: {_fmt_solution(solution)}")
    ok = allocator.satisfies(solution, problem.implementations, problem.layers, problem.budgets)
    print(f"budgets satisfied: {'yes' if ok else 'NO'}")
    record.update(
        feasible=True,
        mfs=_solution_dict(mfs_scored),
        solution=_solution_dict(solution),
        trace=list(solution.trace),
        budgets_satisfied=ok,
    )
    if args.out:
        _dump_json(record, args.out)
    return EXIT_OK


def _compare(problem, cap):
    """(optimizer solution or None, oracle solution or None) for one problem."""
    try:
        opt = problem.optimize()
    except allocator.InfeasibleError:
        opt = None
    try:
        oracle = problem.exhaustive(cap)
    except allocator.InfeasibleError:
        oracle = None
    return opt, oracle


def run_verify(args) -> int:
    records = []
    all_ok = True
    if args.random:
        rng = np.random.default_rng(args.seed)
        worst = 1.0
        for k in range(args.random):
            problem = allocator.random_instance(rng, args.max_layers, args.max_impls)
            opt, oracle = _compare(problem, args.cap)
            if (opt is None) != (oracle is None):
                ok, ratio = False, math.inf
            elif opt is None:
                ok, ratio = True, 1.0
            else:
                ratio = opt.score / oracle.score
                ok = ratio <= 1.05
            worst = max(worst, ratio)
            all_ok &= ok
            records.append({"instance": k, "within_5pct": ok, "ratio": ratio if math.isfinite(ratio) else None})
        print(
            f"# verify random={args.random} seed={args.seed} max_layers={args.max_layers} "
            f"max_impls={args.max_impls}"
        )
        print(f"{sum(r['within_5pct'] for r in records)}/{args.random} instances within 5% of the oracle; "
              f"worst ratio {worst:.6f}")
        print("MATCH" if all_ok else "MISMATCH")
    for path in args.configs:
        problem = _problem(args, path)
        opt, oracle = _compare(problem, args.cap)
        if opt is None or oracle is None:
            ok = opt is None and oracle is None
        else:
            ok = math.isclose(opt.score, oracle.score, rel_tol=1e-9)
        all_ok &= ok
        print(f"# verify {path}")
        print(f"optimizer: {_fmt_solution(opt) if opt else 'INFEASIBLE'}")
        print(f"oracle:    {_fmt_solution(oracle) if oracle else 'INFEASIBLE'}")
        print("MATCH" if ok else "MISMATCH")
        records.append({"config": str(path), "optimizer": _solution_dict(opt), "oracle": _solution_dict(oracle), "match": ok})
    if args.out:
        _dump_json({"command": "verify", "results": records, "match": all_ok}, args.out)
    return EXIT_OK if all_ok else 1


def run_score(args) -> int:
    weights = config.parse_weights(args.weights) if args.weights else None
    if args.config:
        if not args.assign:
            raise UsageError("score with a config needs --assign layer=impl,...")
        problem = _problem(args, args.config)
        layer_of = {layer.label for layer in problem.layers if layer.allocatable}
        pairs = []
        for layer in problem.layers:
            if layer.allocatable:
                if layer.label not in args.assign:
                    raise UsageError(f"--assign has no entry for layer {layer.label!r}")
                pairs.append((args.assign[layer.label], layer.label))
        unknown = set(args.assign) - layer_of
        if unknown:
            raise UsageError(f"--assign names unknown layers {sorted(unknown)}")
        sol = problem.evaluate(pairs)
        costs, err, value = sol.costs, sol.err, sol.score
        weights = problem.weights
    else:
        if not args.cost or args.err is None or weights is None:
            raise UsageError("score needs a config or --cost, --err and --weights")
        try:
            costs = {k: float(v) for k, v in args.cost.items()}
        except ValueError:
            raise UsageError("costs must be numbers") from None
        err = args.err
        value = allocator.score(costs, weights, err)
    print(
        "# score weights="
        + ",".join(f"{m}={w}" for m, w in weights.weights.items())
        + " costs="
        + ",".join(f"{m}={v:g}" for m, v in costs.items())
        + f" err={err:g}"
    )
    print(f"{value:.2f}")
    return EXIT_OK


def run_validate(args) -> int:
    cfg = config.load_config(args.config)
    impls = config._implementations(cfg)
    warnings = allocator.validate_cost_table(impls, args.tolerance)
    print(f"# validate {args.config} tolerance={args.tolerance:g}")
    for w in warnings:
        print(f"WARNING: {w}")
    print(f"{len(warnings)} warning(s)")
    return EXIT_OK


def run_simulate(args) -> int:
    cfg = config.load_config(args.config)
    net = config.network_spec(cfg)
    weights = config.weight_set(cfg)
    data = config.samples(cfg)
    if args.limit:
        data = data[: args.limit]
    sim = cfg.get("simulation") or {}
    m = args.stream_length or int(sim.get("stream_length", 1024))
    seed = args.seed if args.seed is not None else int(sim.get("seed", 0))
    assignment = dict(cfg.get("assignment") or {})
    assignment.update(args.assign or {})
    try:
        err = netsim.estimate_error_rate(net, weights, assignment, data, m, GeneratorSpec(seed=seed))
        float_agree = sum(netsim.float_forward(net, weights, x) == y for x, y in data) / len(data)
    except ValueError as exc:
        raise config.ConfigError(str(exc)) from None
    kinds = ",".join(f"{k}={assignment[k]}" for k in sorted(assignment))
    print(f"# simulate {args.config} m={m} seed={seed} samples={len(data)} assignment={kinds}")
    print(f"float reference accuracy: {float_agree:.4f}")
    print(f"Err = {err:.4f}")
    if args.out:
        _dump_json(
            {
                "command": "simulate",
                "config": str(args.config),
                "stream_length": m,
                "seed": seed,
                "samples": len(data),
                "assignment": assignment,
                "err": err,
                "float_accuracy": float_agree,
            },
            args.out,
        )
    return EXIT_OK


# -- parser ------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="scalloc", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__} (kernels: {kernels.BACKEND})")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("characterize", help="Monte Carlo neuron error sweep to CSV")
    p.add_argument("--impl", required=True, type=str.lower, choices=profiler.IMPLEMENTATIONS)
    p.add_argument("--fan-ins", required=True, type=_int_list)
    p.add_argument("--stream-lengths", required=True, type=_int_list)
    p.add_argument("--trials", type=_positive_int, default=1000)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--btanh-states", type=_positive_int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=run_characterize)

    p = sub.add_parser("calibrate", help="choose the Btanh counter size")
    p.add_argument("--fan-in", required=True, type=_positive_int)
    p.add_argument("--stream-length", type=_positive_int, default=8192)
    p.add_argument("--candidates", type=_int_list)
    p.add_argument("--z-grid", type=_float_list, default=[-2.0, -1.0, 0.0, 1.0, 2.0])
    p.add_argument("--trials", type=_positive_int, default=50)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--out")
    p.set_defaults(func=run_calibrate)

    def allocation_flags(p):
        p.add_argument("--weights", help="score weights, e.g. area=1,power=2")
        p.add_argument("--theta", type=float, help="inner-loop cost threshold")
        p.add_argument("--tau", type=_positive_int, help="outer iteration limit")
        p.add_argument("--target-metric", choices=allocator.METRICS)
        p.add_argument("--neighbourhood", type=int)
        p.add_argument("--seed", type=_seed, default=0)
        p.add_argument("--out")

    p = sub.add_parser("allocate", help="minimum feasible solution + optimization")
    p.add_argument("config")
    allocation_flags(p)
    p.set_defaults(func=run_allocate)

    p = sub.add_parser("verify", help="compare the optimizer with exhaustive search")
    p.add_argument("configs", nargs="*")
    p.add_argument("--random", type=int, default=0, help="also check this many random instances")
    p.add_argument("--max-layers", type=_positive_int, default=4)
    p.add_argument("--max-impls", type=_positive_int, default=4)
    p.add_argument("--cap", type=_positive_int, default=10**6)
    allocation_flags(p)
    p.set_defaults(func=run_verify)

    p = sub.add_parser("score", help="design score of one configuration")
    p.add_argument("config", nargs="?")
    p.add_argument("--assign", type=_key_values, help="layer=implementation,...")
    p.add_argument("--cost", type=_key_values, help="metric=value,... in network units")
    p.add_argument("--err", type=float)
    p.add_argument("--weights")
    p.add_argument("--seed", type=_seed, default=0)
    p.set_defaults(func=run_score)

    p = sub.add_parser("validate", help="energy vs power x delay consistency")
    p.add_argument("config")
    p.add_argument("--tolerance", type=float, default=0.10)
    p.set_defaults(func=run_validate)

    p = sub.add_parser("simulate", help="SC network error rate on labelled samples")
    p.add_argument("config")
    p.add_argument("--stream-length", type=_positive_int)
    p.add_argument("--seed", type=_seed)
    p.add_argument("--assign", type=_key_values, help="layer=apc|mux,...")
    p.add_argument("--limit", type=_positive_int, help="use only the first N samples")
    p.add_argument("--out")
    p.set_defaults(func=run_simulate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "verify" and not args.configs and not args.random:
        parser.error("verify needs config files or --random N")
    try:
        return args.func(args)
    except allocator.EnumerationCapExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAP
    except allocator.InfeasibleError as exc:
        print(f"INFEASIBLE: {exc.reason}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (UsageError, config.ConfigError, allocator.CostDataError, netsim.ErrProviderError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
