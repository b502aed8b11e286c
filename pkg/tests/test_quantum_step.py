"""Search-step binding: recheck gate, accounting, backend comparison."""
import numpy as np
import pytest

from qpsearch.amplify import QSearchParams
from qpsearch.fixedpoint import FixedPointFormat
from qpsearch.ledger import OracleLedger
from qpsearch.pattern import (
    GpsConfig,
    MeshState,
    PatternBasis,
    gps_run,
    poll_step,
)
from qpsearch.quantum_step import compare_backends, quantum_search_step

PARAMS = QSearchParams(c=1.5, tau=0.01)


def step_config(**overrides):
    defaults = dict(
        initial_mesh_size=1.0,
        search_points_count=16,
        search_radius=4,
        fixed_point_format=FixedPointFormat(16, 4),
        rng_seed=0,
    )
    defaults.update(overrides)
    return GpsConfig(**defaults)


def sphere(x):
    return float(np.dot(x, x))


def test_step_finds_improvement_far_from_optimum():
    # Far from the minimum most mesh neighbours improve, so the step should
    # essentially never fail.
    basis = PatternBasis.coordinate(2)
    hits = 0
    trials = 400
    for seed in range(trials):
        config = step_config(rng_seed=seed)
        state = MeshState(np.array([3.0, 2.0]), 1.0, sphere([3.0, 2.0]))
        ledger = OracleLedger()
        out = quantum_search_step(state, basis, config, PARAMS, sphere, ledger)
        if out is not None:
            assert out.value < state.incumbent_value
            hits += 1
    assert hits / trials >= 0.99


def test_step_fails_on_constant_objective():
    basis = PatternBasis.coordinate(2)
    config = step_config()
    state = MeshState(np.zeros(2), 1.0, 7.0)
    ledger = OracleLedger()
    out = quantum_search_step(state, basis, config, PARAMS, lambda x: 7.0, ledger)
    assert out is None
    # A failed search costs quantum calls but the eventual poll is classical.
    assert ledger.quantum_calls > 0
    quantum_before = ledger.quantum_calls
    assert poll_step(state, basis, lambda x: 7.0, ledger) is None
    assert ledger.quantum_calls == quantum_before


def test_step_accepts_only_strict_improvements():
    basis = PatternBasis.coordinate(2)
    for seed in range(30):
        config = step_config(rng_seed=seed)
        x = np.array([2.0, -1.0])
        state = MeshState(x, 1.0, sphere(x))
        out = quantum_search_step(
            state, basis, config, PARAMS, sphere, OracleLedger()
        )
        if out is not None:
            assert sphere(out.point) == out.value < sphere(x)


def test_step_rejects_wrapped_comparison():
    # d=4 values: incumbent -8, candidates +7 -> true difference 15 wraps to
    # a negative comparison register, so every point looks desired.  The
    # classical recheck must reject the lie and report failure.
    basis = PatternBasis.coordinate(1)
    config = step_config(
        search_points_count=4,
        search_radius=4,
        fixed_point_format=FixedPointFormat(4, 0),
    )
    state = MeshState(np.array([0.0]), 1.0, -8.0)
    ledger = OracleLedger()
    events = []
    out = quantum_search_step(
        state,
        basis,
        config,
        PARAMS,
        lambda x: 7.0,
        ledger,
        event_sink=events.append,
        compute_t=True,
    )
    assert out is None
    step_event = next(e for e in events if e["type"] == "quantum-search-step")
    assert step_event["result"] == "rejected"
    assert step_event["t"] == 4  # every encoded comparison wrapped negative
    assert step_event["rounds"] == 0  # first measurement already "succeeds"
    assert ledger.classical_calls == 1  # the recheck


def test_step_event_contents():
    basis = PatternBasis.coordinate(2)
    config = step_config()
    state = MeshState(np.array([3.0, 2.0]), 1.0, sphere([3.0, 2.0]))
    ledger = OracleLedger()
    events = []
    out = quantum_search_step(
        state, basis, config, PARAMS, sphere, ledger,
        event_sink=events.append, compute_t=True,
    )
    kinds = [e["type"] for e in events]
    assert kinds[0] == "search-candidates"
    assert kinds[-1] == "quantum-search-step"
    assert all(k == "qsearch-round" for k in kinds[1:-1])
    assert len(events[0]["points"]) == 16
    step = events[-1]
    assert step["n_points"] == 16
    assert 0 < step["t"] <= 16
    assert step["result"] == ("found" if out is not None else "failure")
    delta = step["ledger_delta"]
    assert delta["quantum_calls"] == delta["qsearch_rounds"] + 2 * delta["q_applications"]


def test_step_reproducible_for_fixed_seed():
    basis = PatternBasis.coordinate(2)
    outs = []
    for _ in range(2):
        config = step_config(rng_seed=11)
        state = MeshState(np.array([1.0, 1.0]), 0.5, sphere([1.0, 1.0]))
        ledger = OracleLedger()
        out = quantum_search_step(state, basis, config, PARAMS, sphere, ledger)
        outs.append((None if out is None else (tuple(out.point), out.value), ledger))
    assert outs[0] == outs[1]


def test_gps_quantum_backend_ledger_invariants():
    basis = PatternBasis.coordinate(2)
    config = step_config(
        initial_mesh_size=0.5,
        mesh_size_tolerance=1e-2,
        search_points_count=8,
        fixed_point_format=FixedPointFormat(16, 8),
        max_iterations=60,
        rng_seed=3,
    )
    run = gps_run(
        sphere, basis, config, "quantum", [0.75, -0.5],
        qsearch_params=QSearchParams(c=1.5, tau=0.05),
    )
    assert run.stop_reason == "mesh-tolerance"
    values = [r.value for r in run.records]
    assert all(b <= a for a, b in zip(values, values[1:]))
    for record in run.records:
        snap = record.ledger_snapshot
        # Every quantum call is attributable to the search loops: polls and
        # rechecks only ever touch the classical counter.
        assert snap.quantum_calls == snap.qsearch_rounds + 2 * snap.q_applications


def test_compare_backends_identical_points_and_planting():
    basis = PatternBasis.coordinate(2)
    config = step_config(
        search_points_count=64,
        search_radius=10,
        fixed_point_format=FixedPointFormat(8, 0),
    )
    report = compare_backends(
        None, basis, config, PARAMS, seeds=range(20), planted_t=1
    )
    assert len(report.rows) == 20
    assert report.tau == PARAMS.tau
    for row in report.rows:
        assert row.n_points == 64
        assert row.t == 1
        assert row.classical_success  # scan always finds the planted point
        assert 1 <= row.classical_calls <= 64
    assert report.summary["quantum_success_rate"] >= 0.95
    assert report.summary["miss_rate"] <= 0.05
    assert report.summary["mean_sqrt_ratio_fit"] is not None


def test_compare_backends_all_marked():
    basis = PatternBasis.coordinate(2)
    config = step_config(
        search_points_count=16,
        search_radius=6,
        fixed_point_format=FixedPointFormat(8, 0),
    )
    report = compare_backends(
        None, basis, config, PARAMS, seeds=range(10), planted_t=16
    )
    for row in report.rows:
        assert row.classical_calls == 1
        assert row.quantum_success
        assert row.qsearch_rounds == 0  # first measurement is already desired
        assert row.quantum_calls <= 2
    assert report.summary["mean_quantum_calls"] <= 2


def test_compare_backends_real_objective_counts_t():
    basis = PatternBasis.coordinate(2)
    config = step_config(
        search_points_count=16,
        search_radius=4,
        fixed_point_format=FixedPointFormat(16, 4),
    )
    report = compare_backends(
        sphere, basis, config, PARAMS, seeds=range(5),
        initial_point=[3.0, 2.0],
    )
    for row in report.rows:
        assert 0 < row.t <= 16
        assert row.classical_success and row.quantum_success
    with pytest.raises(ValueError):
        compare_backends(None, basis, config, PARAMS, seeds=[0])
