"""Command-line front end: run experiments, sweep amplification, compare
backends.

Configuration comes from a JSON file of key/value pairs; any flag given on
the command line overrides the file.  Traces are line-delimited JSON, one
record per iteration plus a closing summary that embeds the fully resolved
configuration and seed, so a run is reproducible from its own output.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict
from typing import Optional

import numpy as np

from .amplify import (
    QSearchParams,
    analytic_success_probability,
    apply_Q,
    build_a_operator,
    make_planted_problem,
)
from .fixedpoint import FixedPointFormat
from .objectives import UnknownObjectiveError, make_objective, objective_names
from .pattern import GpsConfig, PatternBasis, gps_run
from .quantum_step import compare_backends
from .state import sample_counts

RUN_DEFAULTS = {
    "objective": "sphere",
    "dimension": 2,
    "initial_point": None,  # defaults to (0.75, ...) per dimension
    "backend": "quantum",
    "initial_mesh_size": 0.5,
    "expansion_factor": 1.0,
    "contraction_factor": 0.5,
    "mesh_size_tolerance": 0.001,
    "max_iterations": 200,
    "search_points_count": 16,
    "search_radius": 8,
    "total_bits": 16,
    "frac_bits": 10,
    "c": 1.5,
    "tau": 0.01,
    "seed": 0,
    "trials": 1,
    "max_oracle_calls": None,
    "output": None,
    "emit_rounds": False,
}

COMPARE_DEFAULTS = {
    "dimension": 2,
    "initial_mesh_size": 1.0,
    "search_points_count": 256,
    "search_radius": 20,
    "total_bits": 8,
    "frac_bits": 0,
    "c": 1.5,
    "tau": 0.01,
    "seed": 0,
    "trials": 50,
    "planted_t": 1,
    "objective": None,
    "output": None,
}


class ConfigError(Exception):
    pass


def _load_config(path: Optional[str], defaults: dict, overrides: dict) -> dict:
    config = dict(defaults)
    if path:
        try:
            with open(path) as fh:
                loaded = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path}: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(
                f"config file {path} is not valid JSON "
                f"(line {exc.lineno}, column {exc.colno}): {exc.msg}"
            ) from None
        if not isinstance(loaded, dict):
            raise ConfigError(f"config file {path} must hold a JSON object")
        unknown = set(loaded) - set(defaults)
        if unknown:
            raise ConfigError(
                f"unknown config keys in {path}: {', '.join(sorted(unknown))}"
            )
        config.update(loaded)
    for key, value in overrides.items():
        if value is not None:
            config[key] = value
    return config


def _build_gps_config(config: dict) -> GpsConfig:
    return GpsConfig(
        initial_mesh_size=float(config["initial_mesh_size"]),
        expansion_factor=float(config["expansion_factor"]),
        contraction_factor=float(config["contraction_factor"]),
        mesh_size_tolerance=float(config["mesh_size_tolerance"]),
        max_iterations=int(config["max_iterations"]),
        search_points_count=int(config["search_points_count"]),
        search_radius=int(config["search_radius"]),
        fixed_point_format=FixedPointFormat(
            int(config["total_bits"]), int(config["frac_bits"])
        ),
        rng_seed=int(config["seed"]),
        max_oracle_calls=(
            None
            if config["max_oracle_calls"] is None
            else int(config["max_oracle_calls"])
        ),
    )


def _open_output(path: Optional[str]):
    return open(path, "w") if path else sys.stdout


def _write_record(fh, record: dict) -> None:
    fh.write(json.dumps(record, sort_keys=True) + "\n")


def cmd_run(args: argparse.Namespace) -> int:
    overrides = {
        key: getattr(args, key, None)
        for key in RUN_DEFAULTS
        if hasattr(args, key)
    }
    config = _load_config(args.config, RUN_DEFAULTS, overrides)
    n = int(config["dimension"])
    try:
        objective = make_objective(config["objective"], n)
    except UnknownObjectiveError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    initial_point = config["initial_point"]
    if initial_point is None:
        initial_point = [0.75] * n
    if len(initial_point) != n:
        print(
            f"error: initial_point has {len(initial_point)} coordinates, "
            f"dimension is {n}",
            file=sys.stderr,
        )
        return 2
    basis = PatternBasis.coordinate(n)
    params = QSearchParams(c=float(config["c"]), tau=float(config["tau"]))
    trials = int(config["trials"])

    fh = _open_output(config["output"])
    try:
        for trial in range(trials):
            seed = int(config["seed"]) + trial
            gps_config = _build_gps_config({**config, "seed": seed})
            sink = None
            if config["emit_rounds"]:

                def sink(event, _trial=trial):
                    if event["type"] in ("qsearch-round", "quantum-search-step"):
                        _write_record(fh, {"trial": _trial, **event})
            run = gps_run(
                objective,
                basis,
                gps_config,
                config["backend"],
                initial_point,
                qsearch_params=params,
                event_sink=sink,
            )
            for record in run.records:
                _write_record(
                    fh,
                    {
                        "type": "iteration",
                        "trial": trial,
                        "iteration": record.iteration,
                        "iterate": record.iterate.tolist(),
                        "value": record.value,
                        "mesh_size": record.mesh_size,
                        "outcome": record.outcome,
                        **record.ledger_snapshot.as_dict(),
                    },
                )
            resolved = {**config, "seed": seed, "initial_point": list(initial_point)}
            resolved.pop("output")  # not experiment-defining; keeps traces comparable
            _write_record(
                fh,
                {
                    "type": "summary",
                    "trial": trial,
                    "final_iterate": run.final_state.iterate.tolist(),
                    "final_value": run.final_state.incumbent_value,
                    "final_mesh_size": run.final_state.mesh_size,
                    "iterations": len(run.records),
                    "stop_reason": run.stop_reason,
                    **run.ledger.as_dict(),
                    "config": resolved,
                },
            )
    finally:
        if fh is not sys.stdout:
            fh.close()
    return 0


def cmd_demo_amplify(args: argparse.Namespace) -> int:
    n, t = args.n_points, args.n_marked
    if t > n:
        print("error: marked count cannot exceed point count", file=sys.stderr)
        return 2
    if n & (n - 1):
        print("error: point count must be a power of 2", file=sys.stderr)
        return 2
    rng = np.random.default_rng(args.seed)
    problem, _ = make_planted_problem(n, t, rng=rng)
    ops = build_a_operator(problem)
    state = ops.prepare_from_zero()
    sign_idx = problem.layout.comparison_sign_index

    print(f"# N={n} t={t} trials={args.trials} seed={args.seed}")
    print(f"{'j':>4} {'analytic':>12} {'empirical':>12} {'abs_error':>12}")
    for j in range(args.j_max + 1):
        analytic = analytic_success_probability(n, t, j)
        counts = sample_counts(state, args.trials, rng)
        hits = sum(c for b, c in counts.items() if b[sign_idx] == "1")
        empirical = hits / args.trials
        print(
            f"{j:>4} {analytic:>12.6f} {empirical:>12.6f} "
            f"{abs(empirical - analytic):>12.6f}"
        )
        state = apply_Q(state, problem, ops=ops)
    return 0


def cmd_compare(args: argparse.Namespace) -> int:
    overrides = {
        key: getattr(args, key, None)
        for key in COMPARE_DEFAULTS
        if hasattr(args, key)
    }
    config = _load_config(args.config, COMPARE_DEFAULTS, overrides)
    n = int(config["dimension"])
    basis = PatternBasis.coordinate(n)
    gps_config = _build_gps_config(
        {
            **config,
            "expansion_factor": 1.0,
            "contraction_factor": 0.5,
            "mesh_size_tolerance": 1e-6,
            "max_iterations": 1,
            "max_oracle_calls": None,
        }
    )
    params = QSearchParams(c=float(config["c"]), tau=float(config["tau"]))
    objective = None
    if config["objective"] is not None:
        try:
            objective = make_objective(config["objective"], n)
        except UnknownObjectiveError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
    planted = config["planted_t"]
    seeds = [int(config["seed"]) + i for i in range(int(config["trials"]))]
    report = compare_backends(
        objective,
        basis,
        gps_config,
        params,
        seeds,
        planted_t=None if planted is None else int(planted),
    )

    fh = _open_output(config["output"])
    try:
        for row in report.rows:
            _write_record(fh, {"type": "trial", **asdict(row)})
        _write_record(
            fh, {"type": "report", "tau": report.tau, **report.summary}
        )
    finally:
        if fh is not sys.stdout:
            fh.close()

    s = report.summary
    print(
        f"N={config['search_points_count']} trials={s['trials']} "
        f"tau={report.tau} planted_t={planted}",
        file=sys.stderr,
    )
    print(
        f"mean oracle calls: classical {s['mean_classical_calls']:.1f} "
        f"vs quantum {s['mean_quantum_calls']:.1f} "
        f"(+{s['mean_quantum_total_calls'] - s['mean_quantum_calls']:.1f} recheck)",
        file=sys.stderr,
    )
    print(
        f"success rates: classical {s['classical_success_rate']:.3f}, "
        f"quantum {s['quantum_success_rate']:.3f}; observed miss rate "
        f"{s['miss_rate']:.4f}",
        file=sys.stderr,
    )
    return 0


def cmd_list_objectives(args: argparse.Namespace) -> int:
    for name in objective_names():
        print(name)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qpsearch",
        description="Pattern search with a classical or quantum-simulated "
        "search step.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one optimization experiment")
    run.add_argument("--config", help="JSON config file")
    run.add_argument("--objective", help="registry name (see list-objectives)")
    run.add_argument("--dimension", type=int)
    run.add_argument("--backend", choices=["classical", "quantum"])
    run.add_argument("--seed", type=int)
    run.add_argument("--trials", type=int)
    run.add_argument("--initial-mesh-size", dest="initial_mesh_size", type=float)
    run.add_argument("--mesh-size-tolerance", dest="mesh_size_tolerance", type=float)
    run.add_argument("--max-iterations", dest="max_iterations", type=int)
    run.add_argument(
        "--search-points-count", dest="search_points_count", type=int
    )
    run.add_argument("--tau", type=float)
    run.add_argument("--c", dest="c", type=float)
    run.add_argument(
        "--emit-rounds",
        dest="emit_rounds",
        action="store_const",
        const=True,
        help="also write per-round search records into the trace",
    )
    run.add_argument("--output", help="trace file (line-delimited JSON)")
    run.set_defaults(func=cmd_run)

    demo = sub.add_parser(
        "demo-amplify",
        help="analytic vs empirical success probability after j iterates",
    )
    demo.add_argument("--n-points", type=int, default=16)
    demo.add_argument("--n-marked", type=int, default=1)
    demo.add_argument("--j-max", type=int, default=8)
    demo.add_argument("--trials", type=int, default=100_000)
    demo.add_argument("--seed", type=int, default=0)
    demo.set_defaults(func=cmd_demo_amplify)

    comp = sub.add_parser(
        "compare", help="classical vs quantum oracle calls on identical points"
    )
    comp.add_argument("--config", help="JSON config file")
    comp.add_argument("--dimension", type=int)
    comp.add_argument(
        "--search-points-count", dest="search_points_count", type=int
    )
    comp.add_argument("--search-radius", dest="search_radius", type=int)
    comp.add_argument("--planted-t", dest="planted_t", type=int)
    comp.add_argument("--objective")
    comp.add_argument("--trials", type=int)
    comp.add_argument("--seed", type=int)
    comp.add_argument("--tau", type=float)
    comp.add_argument("--output", help="report file (line-delimited JSON)")
    comp.set_defaults(func=cmd_compare)

    ls = sub.add_parser("list-objectives", help="print registry entries")
    ls.set_defaults(func=cmd_list_objectives)
    return parser


def main(argv: Optional[list] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
