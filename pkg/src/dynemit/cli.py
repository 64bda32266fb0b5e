"""Command-line entry point: scenario presets, dispatch, and manifests."""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from importlib.metadata import version as pkg_version

import numpy as np

from . import fock, report, states
from .engine import addition_config, evolve, subtraction_config, three_level_config
from .fock import TruncationError
from .pulses import (
    GridError,
    TimeGrid,
    g_sub_n,
    make_gaussian_mode,
    pi_pulse_prediction,
)
from .search import ObjectiveSpec, make_objective, optimize_1d, pi_pulse_seed, sweep
from .tomography import fidelity_pipeline

EXIT_CONFIG = 2
EXIT_GUARD = 3

# Table I/II optimized prefactors, indexed by n
TABLE_SUB = {1: 1.000, 2: 1.072, 3: 1.088, 4: 1.095, 5: 1.098}
TABLE_ADD = {1: 1.000, 2: 0.816, 3: 0.883, 4: 0.926, 5: 0.960}
TABLE_3LS_SUB = {1: (1.026, 1.057), 2: (1.080, 0.858), 3: (1.087, 0.795),
                 4: (1.082, 0.750), 5: (1.066, 0.702)}
TABLE_3LS_ADD = {1: (1.025, 1.083), 2: (0.819, 0.921), 3: (0.874, 0.875),
                 4: (0.897, 0.839), 5: (0.902, 0.805)}

PRESETS = {
    # sigma g^2 = 2/sqrt(pi) throughout; grid margins are our choice
    "fig2b": {"command": "subtract", "n": 2, "emitter": "tls"},
    "fig3b": {"command": "subtract", "n": 2, "emitter": "tls", "cascade": 2},
    "fig5b": {"command": "subtract", "n": 1, "emitter": "3ls",
              "delta_over_gamma": 5.0, "sigma": 25.0},
    "fig6": {"command": "cat-gen", "mode": "subtract", "stages": 2,
             "squeeze_db": 10.0},
    "fig7": {"command": "added-gaussian", "alpha": math.sqrt(10.0), "r": 0.0},
}


def _default_mode(sigma, n_steps):
    grid = TimeGrid(0.0, 10.0 * sigma, n_steps)
    return make_gaussian_mode(sigma, 5.0 * sigma, grid)


def _write_manifest(out_dir, scenario, config_snapshot, wall, files):
    entry = {
        "scenario": scenario,
        "config": config_snapshot,
        "version": pkg_version("dynemit"),
        "wall_time": wall,
        "outputs": files,
    }
    with open(os.path.join(out_dir, "manifest.jsonl"), "a") as fh:
        fh.write(json.dumps(entry, sort_keys=True) + "\n")


def _prepare_out(args):
    out = args.out or os.environ.get("DYNEMIT_OUT", ".")
    os.makedirs(out, exist_ok=True)
    return out


def _dry_run_check(args, mode):
    # dimensions, truncation and adiabaticity checks without simulating
    n = getattr(args, "n", 1)
    dim = n + 2
    if dim * 2 * (dim + 2) > 4096:
        raise GridError(f"state dimension budget exceeded for n={n}")
    if getattr(args, "emitter", "tls") == "3ls":
        from .pulses import rabi_sub_n

        p_r, p_i = TABLE_3LS_SUB[n]
        drive = rabi_sub_n(mode, n, p_r, p_i, args.delta_over_gamma, 1.0)
        margin = drive.adiabaticity_margin()
        print(f"adiabaticity margin max |Omega|/Delta = {margin:.3f}")
    print("dry-run ok")


def _cmd_process(args, direction):
    sigma = args.sigma
    mode = _default_mode(sigma, args.n_steps)
    n = args.n
    out = _prepare_out(args)
    t0 = time.time()
    if args.emitter == "3ls":
        table = TABLE_3LS_SUB if direction == "subtract" else TABLE_3LS_ADD
        params = (args.s, args.s2) if args.s is not None else table[n]
        config = three_level_config(
            n, mode, params, args.delta_over_gamma, 1.0,
            model=args.model, direction=direction, loss_rate=args.loss,
        )
        prefactor = params
    else:
        table = TABLE_SUB if direction == "subtract" else TABLE_ADD
        prefactor = args.s if args.s is not None else table[n]
        build = subtraction_config if direction == "subtract" else addition_config
        config = build(n, mode, prefactor, loss_rate=args.loss)
    if args.dry_run:
        _dry_run_check(args, mode)
        return 0
    n_target = n - 1 if direction == "subtract" else n
    herald = "excited" if direction == "subtract" else "ground"
    res = fidelity_pipeline(n_target, config, herald=herald)
    sim = evolve(config)  # sink-free traces for the population CSV
    files = []

    def emit(name, fn):
        path = os.path.join(out, name)
        fn(path)
        files.append(name)

    payload = {
        "process": direction,
        "n": n,
        "emitter": args.emitter,
        "prefactor": prefactor,
        "loss_rate": args.loss,
        "fidelity": res.fidelity,
        "success_probability": res.success_probability,
        "conditional_fidelity": res.conditional_fidelity,
        "purity": res.purity,
        "occupations": res.occupations,
    }
    emit(f"{direction}_n{n}.json", lambda p: report.save_json(payload, p))
    emit(f"{direction}_n{n}_populations.csv", lambda p: report.save_records_csv(sim, p))
    if not args.no_figures:
        emit(f"{direction}_n{n}_populations.png", lambda p: report.plot_records(sim, p))
        emit(f"{direction}_n{n}_sink_wigner.png",
             lambda p: report.plot_wigner(res.sink_state, p))
    _write_manifest(out, f"{direction}-n{n}-{args.emitter}",
                    {"sigma": sigma, "n_steps": args.n_steps,
                     "prefactor": prefactor, "loss": args.loss},
                    time.time() - t0, files)
    print(json.dumps(payload, default=report._jsonable))
    return 0


def _cmd_optimize(args):
    mode = _default_mode(args.sigma, args.n_steps)
    out = _prepare_out(args)
    t0 = time.time()
    scenario = "subtract" if args.scenario in ("sub", "subtract") else "add"
    spec = ObjectiveSpec(scenario, args.n, emitter=args.emitter,
                         delta=args.delta_over_gamma, budget=args.budget)
    if args.dry_run:
        _dry_run_check(args, mode)
        return 0
    func = make_objective(spec, mode)
    if args.emitter == "3ls":
        from .search import optimize_2d

        table = TABLE_3LS_SUB if scenario == "subtract" else TABLE_3LS_ADD
        res = optimize_2d(func, table[args.n], budget=args.budget)
        best = list(res.best_param)
    else:
        res = optimize_1d(func, pi_pulse_seed(args.n), budget=args.budget)
        best = res.best_param
    payload = {
        "scenario": scenario,
        "n": args.n,
        "emitter": args.emitter,
        "best_param": best,
        "best_value": res.best_value,
        "evaluations": len(res.trace),
    }
    files = []
    path = os.path.join(out, f"optimize_{scenario}_n{args.n}.json")
    report.save_json(payload, path)
    files.append(os.path.basename(path))
    trace = os.path.join(out, f"optimize_{scenario}_n{args.n}_trace.csv")
    res.trace_to_csv(trace)
    files.append(os.path.basename(trace))
    _write_manifest(out, f"optimize-{scenario}-n{args.n}",
                    {"budget": args.budget, "sigma": args.sigma},
                    time.time() - t0, files)
    print(json.dumps(payload, default=report._jsonable))
    return 0


def _cmd_sweep(args):
    mode = _default_mode(args.sigma, args.n_steps)
    out = _prepare_out(args)
    t0 = time.time()
    spec = ObjectiveSpec("subtract", args.n)
    if args.dry_run:
        _dry_run_check(args, mode)
        return 0
    values, curve = sweep(
        make_objective(spec, mode), np.linspace(args.lo, args.hi, args.points)
    )
    path = os.path.join(out, f"sweep_sub_n{args.n}.csv")
    np.savetxt(path, np.column_stack([values, curve]), delimiter=",",
               header="s,excited_population", comments="")
    files = [os.path.basename(path)]
    if not args.no_figures:
        import matplotlib.pyplot as plt

        fig, ax = plt.subplots(figsize=(5, 3))
        ax.plot(values, curve)
        ax.set_xlabel("s")
        ax.set_ylabel("excited population")
        fig.tight_layout()
        fig_path = os.path.join(out, f"sweep_sub_n{args.n}.png")
        fig.savefig(fig_path, dpi=150)
        plt.close(fig)
        files.append(os.path.basename(fig_path))
    _write_manifest(out, f"sweep-sub-n{args.n}",
                    {"lo": args.lo, "hi": args.hi, "points": args.points},
                    time.time() - t0, files)
    print(f"peak near s = {values[np.argmax(curve)]:.3f}")
    return 0


def _cmd_cat_gen(args):
    out = _prepare_out(args)
    t0 = time.time()
    mode = _default_mode(args.sigma, args.n_steps)
    r = states.db_to_r(args.squeeze_db)
    dim = args.dim
    state = fock.squeezed_vacuum_vector(r, dim, max_loss=1e-2)
    if args.dry_run:
        _dry_run_check(args, mode)
        return 0
    records = states.cat_pipeline(state, mode, args.stages, args.mode, dim=dim)
    files = []
    xs = np.linspace(-3.5, 3.5, 101)
    rows = []
    for j, rec in enumerate(records, start=1):
        rows.append({
            "stage": j,
            "success": rec.success,
            "cumulative_success": rec.cumulative_success,
            "purity": rec.purity,
            "cat_fidelity": rec.cat.fidelity,
            "cat_size": rec.cat.size,
            "cat_parity": rec.cat.parity,
            "unsqueeze_r": rec.cat.r_opt,
        })
        name = f"cat_{args.mode}_stage{j}_wigner.csv"
        report.save_wigner_csv(rec.state, xs, xs, os.path.join(out, name))
        files.append(name)
        if not args.no_figures:
            name = f"cat_{args.mode}_stage{j}_wigner.png"
            report.plot_wigner(rec.state, os.path.join(out, name))
            files.append(name)
    path = os.path.join(out, f"cat_{args.mode}.json")
    report.save_json(rows, path)
    files.append(os.path.basename(path))
    _write_manifest(out, f"cat-gen-{args.mode}",
                    {"stages": args.stages, "squeeze_db": args.squeeze_db,
                     "dim": dim}, time.time() - t0, files)
    print(json.dumps(rows, default=report._jsonable))
    return 0


def _cmd_added_gaussian(args):
    out = _prepare_out(args)
    t0 = time.time()
    mode = _default_mode(args.sigma, args.n_steps)
    if args.dry_run:
        _dry_run_check(args, mode)
        return 0
    scan, res = states.photon_added_gaussian_run(
        args.alpha, args.r, mode, args.q1, args.q2, args.dim
    )
    payload = {
        "alpha": args.alpha,
        "r": args.r,
        "q1": args.q1,
        "q2": args.q2,
        "fidelity": scan.fidelity,
        "best_target_alpha": scan.alpha,
        "best_target_r": scan.r,
        "delta_alpha": scan.delta_alpha,
        "delta_r": scan.delta_r,
        "success_probability": res.success_probability,
        "purity": res.purity,
    }
    files = []
    path = os.path.join(out, "added_gaussian.json")
    report.save_json(payload, path)
    files.append(os.path.basename(path))
    if not args.no_figures:
        name = "added_gaussian_wigner.png"
        report.plot_wigner(res.herald_state, os.path.join(out, name))
        files.append(name)
    _write_manifest(out, "added-gaussian",
                    {"alpha": args.alpha, "r": args.r, "dim": args.dim},
                    time.time() - t0, files)
    print(json.dumps(payload, default=report._jsonable))
    return 0


def _add_common(p):
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--n-steps", type=int, default=4000)
    p.add_argument("--out", default=None)
    p.add_argument("--config", default=None,
                   help="JSON file whose fields seed the flags")
    p.add_argument("--dry-run", action="store_true")
    p.add_argument("--no-figures", action="store_true")


def build_parser():
    parser = argparse.ArgumentParser(prog="dynemit")
    sub = parser.add_subparsers(dest="command", required=True)

    for name in ("subtract", "add"):
        p = sub.add_parser(name)
        p.add_argument("--n", type=int, default=1)
        p.add_argument("--emitter", choices=("tls", "3ls"), default="tls")
        p.add_argument("--s", type=float, default=None)
        p.add_argument("--s2", type=float, default=None,
                       help="imaginary-part prefactor for 3ls")
        p.add_argument("--sigma-g2", default="auto",
                       help="'auto' pins sigma g^2 = 2/sqrt(pi)")
        p.add_argument("--loss", type=float, default=0.0)
        p.add_argument("--delta-over-gamma", type=float, default=5.0)
        p.add_argument("--model", choices=("full", "effective"), default="effective")
        _add_common(p)

    p = sub.add_parser("optimize")
    p.add_argument("--scenario", choices=("sub", "subtract", "add"), default="sub")
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--emitter", choices=("tls", "3ls"), default="tls")
    p.add_argument("--delta-over-gamma", type=float, default=5.0)
    p.add_argument("--budget", type=int, default=40)
    _add_common(p)

    p = sub.add_parser("sweep")
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--lo", type=float, default=0.0)
    p.add_argument("--hi", type=float, default=10.0)
    p.add_argument("--points", type=int, default=60)
    _add_common(p)

    p = sub.add_parser("cat-gen")
    p.add_argument("--mode", choices=("subtract", "add"), default="subtract")
    p.add_argument("--stages", type=int, default=1)
    p.add_argument("--squeeze-db", type=float, default=10.0)
    p.add_argument("--dim", type=int, default=30)
    _add_common(p)

    p = sub.add_parser("added-gaussian")
    p.add_argument("--alpha", type=float, default=0.0)
    p.add_argument("--r", type=float, default=0.0)
    p.add_argument("--q1", type=float, default=states.SUPERPOSITION_Q_FIRST[0])
    p.add_argument("--q2", type=float, default=states.SUPERPOSITION_Q_FIRST[1])
    p.add_argument("--dim", type=int, default=30)
    _add_common(p)

    p = sub.add_parser("preset")
    p.add_argument("name", choices=sorted(PRESETS))
    _add_common(p)

    p = sub.add_parser("pi-pulse")
    p.add_argument("--n-max", type=int, default=5)
    return parser


def _apply_config_file(args):
    if getattr(args, "config", None):
        with open(args.config) as fh:
            doc = json.load(fh)
        for key, val in doc.items():
            attr = key.replace("-", "_")
            if not hasattr(args, attr):
                raise GridError(f"unknown config field: {key}")
            # explicit CLI flags override the config document
            if getattr(args, attr) == _DEFAULTS.get((args.command, attr)):
                setattr(args, attr, val)
    return args


_DEFAULTS = {}


def _record_defaults(parser):
    for action in parser._subparsers._group_actions[0].choices.items():
        name, p = action
        for a in p._actions:
            if a.dest not in ("help",):
                _DEFAULTS[(name, a.dest)] = a.default


def main(argv=None):
    parser = build_parser()
    _record_defaults(parser)
    try:
        args = parser.parse_args(argv)
        args = _apply_config_file(args)
        if args.command == "preset":
            preset = dict(PRESETS[args.name])
            command = preset.pop("command")
            preset.pop("cascade", None)
            flags = [command]
            for key, val in preset.items():
                flags += [f"--{key.replace('_', '-')}", str(val)]
            if args.dry_run:
                flags.append("--dry-run")
            if args.out:
                flags += ["--out", args.out]
            return main(flags)
        if args.command == "pi-pulse":
            vals = [round(pi_pulse_prediction(n), 3) for n in range(1, args.n_max + 1)]
            print(json.dumps(vals))
            return 0
        if args.command in ("subtract", "add"):
            return _cmd_process(args, args.command)
        if args.command == "optimize":
            return _cmd_optimize(args)
        if args.command == "sweep":
            return _cmd_sweep(args)
        if args.command == "cat-gen":
            return _cmd_cat_gen(args)
        if args.command == "added-gaussian":
            return _cmd_added_gaussian(args)
        parser.error(f"unknown command {args.command}")
    except (GridError, fock.DimensionError, ValueError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except TruncationError as exc:
        print(f"numerical guard: {exc}", file=sys.stderr)
        return EXIT_GUARD


if __name__ == "__main__":
    sys.exit(main())
