"""Amplitude amplification over the three-register search state.

Builds the preparation operator A (load -incumbent, spread over the search
points, oracle, modular add), the reflections S0 and S_chi, the iterate
Q = -A S0 A^-1 S_chi, and the two search loops: the original one, which
cannot terminate when nothing is marked, and the modified one, whose
(3/4)^u stopping rule guarantees finite termination at an arbitrarily low
miss probability.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .fixedpoint import negate_bits
from .ledger import OracleLedger
from .state import (
    RegisterLayout,
    SparseState,
    householder_prepare,
    measure,
)

__all__ = [
    "QSearchParams",
    "QSearchOutcome",
    "SearchProblem",
    "RoundRecord",
    "DomainError",
    "SafetyCapReachedError",
    "PreparationOperator",
    "build_a_operator",
    "apply_S0",
    "apply_Schi",
    "apply_Q",
    "qsearch",
    "modified_qsearch",
    "analytic_success_probability",
    "desired_probability",
    "is_desired",
    "make_planted_problem",
    "failure_round_bound",
]


class DomainError(ValueError):
    """Arguments outside the mathematical domain of the operation."""


class SafetyCapReachedError(RuntimeError):
    """The original search loop hit its round cap: the desk-scale stand-in
    for its nontermination when no marked state exists."""


@dataclass(frozen=True)
class QSearchParams:
    """Loop constants: growth rate c in (1,2), miss tolerance tau, and the
    round cap that only the original (non-terminating) loop uses."""

    c: float = 1.5
    tau: float = 0.01
    rng_seed: int = 0
    max_total_rounds: int = 10_000

    def __post_init__(self):
        if not 1.0 < self.c < 2.0:
            raise ValueError(f"c must lie in (1, 2), got {self.c}")
        if not 0.0 < self.tau < 1.0:
            raise ValueError(f"tau must lie in (0, 1), got {self.tau}")
        if self.max_total_rounds < 1:
            raise ValueError("max_total_rounds must be positive")

    @property
    def u_limit(self) -> float:
        return math.log(self.tau) / math.log(0.75)


@dataclass
class QSearchOutcome:
    """Result of one search invocation.

    ``result`` is the measured full-width bitstring on success and None on
    failure; the counters echo the loop variables at exit.
    """

    result: Optional[str]
    rounds_executed: int
    u_rounds: int
    q_applications: int
    ledger_delta: OracleLedger

    @property
    def succeeded(self) -> bool:
        return self.result is not None


@dataclass(frozen=True)
class RoundRecord:
    """Per-round debug record emitted through the optional event sink."""

    l: int
    m: int
    j: int
    u: int
    measured: str
    desired: bool


class SearchProblem:
    """One search-step instance: N candidate points, the incumbent's encoded
    value, and the classical function the quantum oracle lifts."""

    __slots__ = ("points", "incumbent_value_bits", "oracle", "layout")

    def __init__(
        self,
        points: Sequence[str],
        incumbent_value_bits: str,
        oracle: Callable[[str], str],
        layout: RegisterLayout,
    ):
        points = list(points)
        if not points:
            raise ValueError("need at least one search point")
        if len(set(points)) != len(points):
            raise ValueError("search points must be distinct")
        for p in points:
            if len(p) != layout.point_bits:
                raise ValueError(
                    f"point {p!r} has width {len(p)}, layout expects "
                    f"{layout.point_bits}"
                )
        if len(incumbent_value_bits) != layout.value_bits:
            raise ValueError(
                f"incumbent value width {len(incumbent_value_bits)} != "
                f"{layout.value_bits}"
            )
        self.points = points
        self.incumbent_value_bits = incumbent_value_bits
        self.oracle = oracle
        self.layout = layout

    @property
    def n_points(self) -> int:
        return len(self.points)


def is_desired(bits: str, layout: RegisterLayout) -> bool:
    """A full-width string is desired iff its comparison register decodes
    negative, i.e. the measured point strictly improves on the incumbent."""
    return bits[layout.comparison_sign_index] == "1"


def desired_probability(state: SparseState) -> float:
    """Exact Born probability of measuring a desired string."""
    idx = state.layout.comparison_sign_index
    return sum(abs(a) ** 2 for b, a in state.amplitudes.items() if b[idx] == "1")


class _CachedMap:
    """Memoized classical bijection: reachable supports are tiny, so each
    basis string's image is computed once per operator instance."""

    __slots__ = ("fn", "cache")

    def __init__(self, fn: Callable[[str], str]):
        self.fn = fn
        self.cache: Dict[str, str] = {}

    def __call__(self, bits: str) -> str:
        img = self.cache.get(bits)
        if img is None:
            img = self.fn(bits)
            self.cache[bits] = img
        return img

    def apply(self, amps: Dict[str, complex], scale: complex = 1.0) -> Dict[str, complex]:
        cache = self.cache
        try:
            if scale == 1.0:
                new = {cache[b]: a for b, a in amps.items()}
            else:
                new = {cache[b]: a * scale for b, a in amps.items()}
        except KeyError:
            fn = self.fn
            for b in amps:
                if b not in cache:
                    cache[b] = fn(b)
            return self.apply(amps, scale)
        if len(new) != len(amps):
            from .state import _report_collision

            _report_collision(amps, self)
        return new


class PreparationOperator:
    """The measurement-free preparation A and its exact inverse.

    Applied to |0>|0>|0>, A yields (1/sqrt(N)) sum_j |x_j>|f_j>|f_j - f_k>
    with the subtraction in d-bit two's complement.  Every application of A
    or its inverse uses the oracle once and is counted as one quantum call.
    """

    __slots__ = (
        "problem",
        "layout",
        "_load",
        "_spread",
        "_oracle_then_add",
        "_unadd_then_oracle",
        "_oracle_values",
    )

    def __init__(self, problem: SearchProblem):
        self.problem = problem
        layout = problem.layout
        self.layout = layout
        pb, vb = layout.point_bits, layout.value_bits
        mask = (1 << vb) - 1
        neg_units = int(negate_bits(problem.incumbent_value_bits), 2)

        oracle = problem.oracle
        values: Dict[str, int] = {}

        def value_units(x: str) -> int:
            u = values.get(x)
            if u is None:
                fx = oracle(x)
                if len(fx) != vb or any(ch not in "01" for ch in fx):
                    raise ValueError(
                        f"oracle returned {fx!r}, expected {vb}-bit string"
                    )
                u = int(fx, 2)
                values[x] = u
            return u

        def load(b: str) -> str:
            # XOR the comparison register with |-f_k|'s bit pattern.
            c = int(b[pb + vb :], 2) ^ neg_units
            return b[: pb + vb] + format(c, f"0{vb}b")

        def oracle_xor(b: str) -> str:
            # |x>|v>|c> -> |x>|v XOR f(x)>|c>: self-inverse lift of f.
            v = int(b[pb : pb + vb], 2) ^ value_units(b[:pb])
            return b[:pb] + format(v, f"0{vb}b") + b[pb + vb :]

        def add(b: str) -> str:
            # |x>|v>|c> -> |x>|v>|(c+v) mod 2^d>: the simulated signed adder.
            v = int(b[pb : pb + vb], 2)
            c = (int(b[pb + vb :], 2) + v) & mask
            return b[: pb + vb] + format(c, f"0{vb}b")

        def add_inv(b: str) -> str:
            v = int(b[pb : pb + vb], 2)
            c = (int(b[pb + vb :], 2) - v) & mask
            return b[: pb + vb] + format(c, f"0{vb}b")

        self._load = _CachedMap(load)
        self._spread = householder_prepare(problem.points)
        # Adjacent bijections fused into single passes for the hot loop.
        self._oracle_then_add = _CachedMap(lambda b: add(oracle_xor(b)))
        self._unadd_then_oracle = _CachedMap(lambda b: oracle_xor(add_inv(b)))
        self._oracle_values = values

    def apply(
        self, state: SparseState, ledger: Optional[OracleLedger] = None, scale: complex = 1.0
    ) -> SparseState:
        """Apply A; ``scale`` folds an overall phase into the final pass."""
        amps = self._load.apply(state.amplitudes)
        state = self._spread(SparseState._raw(self.layout, amps))
        amps = self._oracle_then_add.apply(state.amplitudes, scale)
        if ledger is not None:
            ledger.quantum_calls += 1
        return SparseState._raw(self.layout, amps)

    def apply_inverse(
        self, state: SparseState, ledger: Optional[OracleLedger] = None
    ) -> SparseState:
        """Apply A^-1: the four sub-operators inverted, in reverse order."""
        amps = self._unadd_then_oracle.apply(state.amplitudes)
        state = self._spread(SparseState._raw(self.layout, amps))
        amps = self._load.apply(state.amplitudes)
        if ledger is not None:
            ledger.quantum_calls += 1
        return SparseState._raw(self.layout, amps)

    def prepare_from_zero(self, ledger: Optional[OracleLedger] = None) -> SparseState:
        return self.apply(SparseState.zero(self.layout), ledger)


def build_a_operator(problem: SearchProblem) -> PreparationOperator:
    """Compose the four sub-operators of the preparation A for ``problem``."""
    return PreparationOperator(problem)


def apply_S0(state: SparseState) -> SparseState:
    """Flip the sign of the all-zeros basis string, leave the rest alone."""
    zero = state.layout.zero_string()
    if zero not in state.amplitudes:
        return state
    new = dict(state.amplitudes)
    new[zero] = -new[zero]
    return SparseState._raw(state.layout, new)


def apply_Schi(state: SparseState) -> SparseState:
    """Flip the sign of strings whose comparison register decodes negative.

    Equality with the incumbent is not an improvement, so f_j = f_k stays
    unmarked.
    """
    idx = state.layout.comparison_sign_index
    new = {b: (-a if b[idx] == "1" else a) for b, a in state.amplitudes.items()}
    return SparseState._raw(state.layout, new)


def apply_Q(
    state: SparseState,
    problem: SearchProblem,
    ledger: Optional[OracleLedger] = None,
    ops: Optional[PreparationOperator] = None,
) -> SparseState:
    """One amplification iterate: S_chi, A^-1, S0, A, global phase -1.

    Assumes the state lies in the subspace reachable from A|0> (not
    checked).  Counts two quantum calls: one oracle use inside A^-1 and one
    inside A.
    """
    if ops is None:
        ops = PreparationOperator(problem)
    state = apply_Schi(state)
    state = ops.apply_inverse(state, ledger)
    state = apply_S0(state)
    state = ops.apply(state, ledger, scale=-1.0)
    if ledger is not None:
        ledger.q_applications += 1
    return state


def _run_search(
    problem: SearchProblem,
    params: QSearchParams,
    rng: Optional[np.random.Generator],
    ledger: Optional[OracleLedger],
    on_round: Optional[Callable[[RoundRecord], None]],
    finite: bool,
) -> QSearchOutcome:
    if rng is None:
        rng = np.random.default_rng(params.rng_seed)
    if ledger is None:
        ledger = OracleLedger()
    start = ledger.copy()
    ops = PreparationOperator(problem)
    layout = problem.layout
    sign_idx = layout.comparison_sign_index
    n = problem.n_points
    u_limit = params.u_limit

    def finish(result: Optional[str], l: int, u: int, q_apps: int) -> QSearchOutcome:
        return QSearchOutcome(result, l, u, q_apps, ledger.delta_since(start))

    l = 0
    u = 0
    q_apps = 0
    ledger.qsearch_rounds += 1
    state = ops.prepare_from_zero(ledger)
    measured = measure(state, rng)
    desired = measured[sign_idx] == "1"
    if on_round is not None:
        on_round(RoundRecord(0, 0, 0, 0, measured, desired))
    if desired:
        return finish(measured, l, u, q_apps)

    while True:
        if finite:
            if u >= u_limit:
                return finish(None, l, u, q_apps)
        elif l >= params.max_total_rounds:
            raise SafetyCapReachedError(
                f"no desired state found in {l} rounds; with zero marked "
                "states the original loop would never terminate"
            )
        l += 1
        m = math.ceil(params.c**l)
        if m * m > n:
            u += 1
        ledger.qsearch_rounds += 1
        state = ops.prepare_from_zero(ledger)
        j = int(rng.integers(1, m + 1))
        for _ in range(j):
            state = apply_Q(state, problem, ledger, ops)
        q_apps += j
        measured = measure(state, rng)
        desired = measured[sign_idx] == "1"
        if on_round is not None:
            on_round(RoundRecord(l, m, j, u, measured, desired))
        if desired:
            return finish(measured, l, u, q_apps)


def qsearch(
    problem: SearchProblem,
    params: QSearchParams,
    rng: Optional[np.random.Generator] = None,
    ledger: Optional[OracleLedger] = None,
    on_round: Optional[Callable[[RoundRecord], None]] = None,
) -> QSearchOutcome:
    """Original search loop: exponentially growing M, uniform j in [1, M].

    Terminates only by finding a desired state; raises
    SafetyCapReachedError after ``params.max_total_rounds`` rounds, which is
    this package's stand-in for the loop's nontermination when no marked
    state exists.
    """
    return _run_search(problem, params, rng, ledger, on_round, finite=False)


def modified_qsearch(
    problem: SearchProblem,
    params: QSearchParams,
    rng: Optional[np.random.Generator] = None,
    ledger: Optional[OracleLedger] = None,
    on_round: Optional[Callable[[RoundRecord], None]] = None,
) -> QSearchOutcome:
    """Finite-termination search loop.

    Identical to :func:`qsearch` except that a counter u advances on every
    round whose M exceeds sqrt(N) (compared as M^2 > N in exact integers)
    and the loop gives up once u reaches ln(tau)/ln(3/4).  Each such round
    independently misses an existing marked state with probability at most
    3/4, so the overall miss probability is below tau.
    """
    return _run_search(problem, params, rng, ledger, on_round, finite=True)


def failure_round_bound(n_points: int, params: QSearchParams) -> int:
    """Upper bound on total while-loop rounds of the finite search."""
    return (
        math.ceil(math.log(math.sqrt(n_points)) / math.log(params.c))
        + math.ceil(params.u_limit)
        + 1
    )


def analytic_success_probability(n: int, t: int, j: int) -> float:
    """Closed-form probability of measuring a desired state after j iterates
    of Q on the freshly prepared state: sin^2((2j+1) arcsin(sqrt(t/n)))."""
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    if not 0 <= t <= n:
        raise DomainError(f"t must lie in [0, {n}], got {t}")
    if j < 0:
        raise DomainError(f"j must be >= 0, got {j}")
    if t == 0:
        return 0.0
    theta = math.asin(math.sqrt(t / n))
    return math.sin((2 * j + 1) * theta) ** 2


def make_planted_problem(
    n_points: int,
    n_marked: int,
    marked_indices: Optional[Sequence[int]] = None,
    rng: Optional[np.random.Generator] = None,
) -> Tuple[SearchProblem, List[int]]:
    """Synthetic search problem with an exact number of improving points.

    The point register enumerates ``n_points`` distinct strings; marked
    points score one unit below the incumbent (0), the rest one unit above.
    Returns the problem and the sorted marked indices.
    """
    if n_points < 1:
        raise ValueError("n_points must be >= 1")
    if not 0 <= n_marked <= n_points:
        raise ValueError(f"n_marked must lie in [0, {n_points}]")
    d = max(2, math.ceil(math.log2(n_points)))
    layout = RegisterLayout(point_bits=d, value_bits=d, comparison_bits=d)
    points = [format(i, f"0{d}b") for i in range(n_points)]
    if marked_indices is None:
        if n_marked == 0:
            marked_indices = []
        else:
            if rng is None:
                rng = np.random.default_rng(0)
            marked_indices = rng.choice(n_points, size=n_marked, replace=False)
    marked = sorted(int(i) for i in marked_indices)
    if len(marked) != n_marked or any(not 0 <= i < n_points for i in marked):
        raise ValueError("marked_indices inconsistent with n_marked/n_points")
    marked_set = {points[i] for i in marked}
    below = format(-1 & (2**d - 1), f"0{d}b")  # incumbent - 1
    above = format(1, f"0{d}b")  # incumbent + 1
    incumbent = "0" * d

    def oracle(x: str) -> str:
        return below if x in marked_set else above

    return SearchProblem(points, incumbent, oracle, layout), marked
