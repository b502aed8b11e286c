"""One full optimization run, classical and quantum search steps side by side.

Each iteration first searches N random mesh points; only if the search
fails does the convergence-carrying poll step run.  The quantum backend
replaces the search scan with the finite-termination amplitude
amplification loop over the simulator, re-verifying any measured candidate
classically.  Both backends walk the same meshes for the same seed.
"""
from qpsearch import (
    FixedPointFormat,
    GpsConfig,
    PatternBasis,
    QSearchParams,
    gps_run,
    make_objective,
)

basis = PatternBasis.coordinate(2)
config = GpsConfig(
    initial_mesh_size=0.5,
    mesh_size_tolerance=1e-2,
    search_points_count=16,
    search_radius=4,
    fixed_point_format=FixedPointFormat(16, 8),
    max_iterations=100,
    rng_seed=11,
)
objective = make_objective("sphere", 2)
x0 = [0.75, -0.5]

for backend in ("classical", "quantum"):
    run = gps_run(
        objective, basis, config, backend, x0,
        qsearch_params=QSearchParams(c=1.5, tau=0.05),
    )
    print(f"--- {backend} search step ---")
    print(f"{'k':>3} {'f(x_k)':>10} {'mesh':>8}  outcome")
    for r in run.records:
        print(f"{r.iteration:>3} {r.value:>10.5f} {r.mesh_size:>8.4f}  {r.outcome}")
    ledger = run.ledger
    print(
        f"stopped: {run.stop_reason} at x = {run.final_state.iterate}, "
        f"f = {run.final_state.incumbent_value:.6f}"
    )
    print(
        f"oracle calls: {ledger.classical_calls} classical, "
        f"{ledger.quantum_calls} quantum "
        f"({ledger.qsearch_rounds} search rounds, {ledger.q_applications} Q iterates)\n"
    )
