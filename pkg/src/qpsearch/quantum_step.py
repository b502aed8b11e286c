"""Bind one pattern-search iteration's search step to the finite-termination
quantum loop, with classical re-verification and strict call accounting.

Only the search step ever touches the quantum counters; the poll step stays
classical so the outer algorithm keeps its convergence behavior.  Every
candidate returned by a measurement is re-evaluated classically (one call)
before being accepted, which guards against a spurious sign bit from
two's-complement overflow inside the comparison register.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from .amplify import (
    QSearchParams,
    SearchProblem,
    modified_qsearch,
)
from .fixedpoint import encode_scalar, encode_scalar_saturating
from .ledger import OracleLedger
from .pattern import (
    GpsConfig,
    ImprovedPoint,
    MeshState,
    PatternBasis,
    classical_search_step,
    select_search_points,
)
from .state import RegisterLayout

__all__ = [
    "quantum_search_step",
    "compare_backends",
    "ComparisonRow",
    "ComparisonReport",
]


def _build_problem(
    bits_list: Sequence[str],
    coords: Dict[str, np.ndarray],
    incumbent_value: float,
    objective: Callable[[np.ndarray], float],
    config: GpsConfig,
) -> SearchProblem:
    fmt = config.fixed_point_format
    d = fmt.total_bits
    n = len(coords[bits_list[0]])
    layout = RegisterLayout(point_bits=n * d, value_bits=d, comparison_bits=d)
    incumbent_bits = encode_scalar(incumbent_value, fmt)
    cache: Dict[str, str] = {}

    def oracle(point_bits: str) -> str:
        v = cache.get(point_bits)
        if v is None:
            # Simulation vehicle for F, not a ledgered classical call; values
            # that overflow the register saturate and are caught by the
            # classical recheck after measurement.
            v, _ = encode_scalar_saturating(
                float(objective(coords[point_bits])), fmt
            )
            cache[point_bits] = v
        return v

    return SearchProblem(bits_list, incumbent_bits, oracle, layout)


def _marked_count(problem: SearchProblem) -> int:
    """Brute-force count of marked points (test/report mode only)."""
    mask = (1 << problem.layout.value_bits) - 1
    neg = -int(problem.incumbent_value_bits, 2) & mask
    count = 0
    for x in problem.points:
        diff = (int(problem.oracle(x), 2) + neg) & mask
        if diff >> (problem.layout.value_bits - 1):
            count += 1
    return count


def quantum_search_step(
    state: MeshState,
    basis: PatternBasis,
    config: GpsConfig,
    params: QSearchParams,
    objective: Callable[[np.ndarray], float],
    ledger: OracleLedger,
    event_sink: Optional[Callable[[dict], None]] = None,
    compute_t: bool = False,
) -> Optional[ImprovedPoint]:
    """Search N mesh points with the finite-termination quantum loop.

    The incumbent's value is reused from the mesh state (no oracle call);
    on a successful measurement the decoded point is re-checked classically
    and only a strict improvement is accepted.  Returns None on failure,
    after which the caller polls.
    """
    select_rng = np.random.default_rng([config.rng_seed, state.iteration, 0])
    bits_list, coords = select_search_points(state, basis, config, select_rng)
    if event_sink is not None:
        event_sink(
            {
                "type": "search-candidates",
                "iteration": state.iteration,
                "points": [coords[b].tolist() for b in bits_list],
            }
        )
    problem = _build_problem(
        bits_list, coords, state.incumbent_value, objective, config
    )
    qsearch_rng = np.random.default_rng([config.rng_seed, state.iteration, 1])
    before = ledger.copy()
    on_round = None
    if event_sink is not None:
        iteration = state.iteration

        def on_round(rec):
            event_sink(
                {
                    "type": "qsearch-round",
                    "iteration": iteration,
                    "l": rec.l,
                    "m": rec.m,
                    "j": rec.j,
                    "u": rec.u,
                    "measured": rec.measured,
                    "desired": rec.desired,
                }
            )

    outcome = modified_qsearch(
        problem, params, rng=qsearch_rng, ledger=ledger, on_round=on_round
    )

    result = "failure"
    accepted: Optional[ImprovedPoint] = None
    if outcome.result is not None:
        point_bits = problem.layout.point_part(outcome.result)
        candidate = coords[point_bits]
        ledger.classical_calls += 1
        value = float(objective(candidate))
        if value < state.incumbent_value:
            accepted = ImprovedPoint(candidate, value)
            result = "found"
        else:
            result = "rejected"  # saturation artifact: sign bit lied

    if event_sink is not None:
        event = {
            "type": "quantum-search-step",
            "iteration": state.iteration,
            "n_points": problem.n_points,
            "rounds": outcome.rounds_executed,
            "u_rounds": outcome.u_rounds,
            "q_applications": outcome.q_applications,
            "result": result,
            "ledger_delta": ledger.delta_since(before).as_dict(),
        }
        if compute_t:
            event["t"] = _marked_count(problem)
        event_sink(event)
    return accepted


@dataclass
class ComparisonRow:
    """One seed's worth of the classical-vs-quantum comparison."""

    seed: int
    n_points: int
    t: int
    classical_calls: int
    classical_success: bool
    quantum_calls: int
    quantum_recheck_calls: int
    quantum_success: bool
    qsearch_rounds: int
    q_applications: int


@dataclass
class ComparisonReport:
    rows: List[ComparisonRow]
    tau: float
    summary: dict

    def as_dict(self) -> dict:
        return {"tau": self.tau, "summary": self.summary}


def compare_backends(
    objective: Optional[Callable[[np.ndarray], float]],
    basis: PatternBasis,
    config: GpsConfig,
    params: QSearchParams,
    seeds: Sequence[int],
    initial_point: Optional[Sequence[float]] = None,
    planted_t: Optional[int] = None,
) -> ComparisonReport:
    """Run both search backends on identical point sets, seed by seed.

    Point selection is seeded independently of the quantum loop's
    randomness, so both backends see the same X.  With ``planted_t`` set,
    a synthetic objective marks exactly that many of the selected points
    (one unit below the incumbent, the rest one unit above), which pins t
    for scaling studies; otherwise the real objective is used and t is
    counted by brute force.
    """
    if planted_t is None and objective is None:
        raise ValueError("need an objective unless planting marked points")
    n = basis.dimension
    if initial_point is None:
        initial_point = np.zeros(n)
    x0 = np.asarray(initial_point, dtype=float)

    rows: List[ComparisonRow] = []
    for seed in seeds:
        cfg = replace(config, rng_seed=int(seed))
        if planted_t is None:
            incumbent = float(objective(x0))
            step_objective = objective
        else:
            incumbent = 0.0
        state = MeshState(x0, cfg.initial_mesh_size, incumbent, 0)

        # Same selection the quantum step will re-derive internally.
        select_rng = np.random.default_rng([cfg.rng_seed, 0, 0])
        bits_list, coords = select_search_points(state, basis, cfg, select_rng)

        if planted_t is not None:
            plant_rng = np.random.default_rng([cfg.rng_seed, 0, 2])
            marked = set(
                int(i)
                for i in plant_rng.choice(len(bits_list), size=planted_t, replace=False)
            )
            marked_bits = {bits_list[i] for i in marked}
            lookup = {b: (-1.0 if b in marked_bits else 1.0) for b in bits_list}
            by_key = {tuple(coords[b]): v for b, v in lookup.items()}

            def step_objective(x, _table=by_key):
                return _table.get(tuple(x), 1.0)

            t = planted_t
        else:
            t = sum(
                1
                for b in bits_list
                if float(objective(coords[b])) < incumbent
            )

        classical_ledger = OracleLedger()
        c_outcome = classical_search_step(
            [coords[b] for b in bits_list],
            step_objective,
            incumbent,
            classical_ledger,
        )

        quantum_ledger = OracleLedger()
        events: List[dict] = []
        q_outcome = quantum_search_step(
            state,
            basis,
            cfg,
            params,
            step_objective,
            quantum_ledger,
            event_sink=events.append,
        )
        step_event = next(e for e in events if e["type"] == "quantum-search-step")

        rows.append(
            ComparisonRow(
                seed=int(seed),
                n_points=len(bits_list),
                t=t,
                classical_calls=classical_ledger.classical_calls,
                classical_success=c_outcome is not None,
                quantum_calls=quantum_ledger.quantum_calls,
                quantum_recheck_calls=quantum_ledger.classical_calls,
                quantum_success=q_outcome is not None,
                qsearch_rounds=step_event["rounds"],
                q_applications=step_event["q_applications"],
            )
        )

    n_rows = len(rows)
    misses = sum(1 for r in rows if r.t > 0 and not r.quantum_success)
    fit_samples = [
        r.quantum_calls / math.sqrt(r.n_points / r.t)
        for r in rows
        if r.t > 0 and r.quantum_success
    ]
    summary = {
        "trials": n_rows,
        "mean_classical_calls": float(np.mean([r.classical_calls for r in rows])),
        "mean_quantum_calls": float(np.mean([r.quantum_calls for r in rows])),
        "mean_quantum_total_calls": float(
            np.mean([r.quantum_calls + r.quantum_recheck_calls for r in rows])
        ),
        "classical_success_rate": float(
            np.mean([r.classical_success for r in rows])
        ),
        "quantum_success_rate": float(np.mean([r.quantum_success for r in rows])),
        "miss_rate": misses / n_rows if n_rows else 0.0,
        "mean_sqrt_ratio_fit": float(np.mean(fit_samples)) if fit_samples else None,
    }
    return ComparisonReport(rows, params.tau, summary)
