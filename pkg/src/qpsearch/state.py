"""Exact sparse simulation of the three-register search state.

States are finite maps from full-width basis bitstrings to complex
amplitudes.  Everything reachable during amplitude amplification has support
bounded by the number of searched points plus one, so memory stays O(N)
instead of 2**(total qubits).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Dict, Iterable, Mapping

import numpy as np

__all__ = [
    "RegisterLayout",
    "SparseState",
    "CollisionError",
    "EmptyTargetsError",
    "NormalizationError",
    "HouseholderPrepare",
    "apply_basis_map",
    "apply_phase",
    "householder_prepare",
    "measure",
    "sample_counts",
]

PRUNE_THRESHOLD = 1e-12
NORM_TOLERANCE = 1e-9
MEASURE_NORM_TOLERANCE = 1e-6


class CollisionError(ValueError):
    """Two support strings mapped to the same image: the map is not a
    reversible classical function on this support."""


class EmptyTargetsError(ValueError):
    """State preparation requires at least one target string."""


class NormalizationError(ValueError):
    """State norm deviates from 1 beyond the accepted tolerance."""


@dataclass(frozen=True)
class RegisterLayout:
    """Bit budget of the three registers, in order point, value, comparison.

    ``point_bits`` is n*d for n coordinates of d bits each; the value and
    comparison registers each hold one d-bit scalar.
    """

    point_bits: int
    value_bits: int
    comparison_bits: int

    def __post_init__(self):
        if self.point_bits <= 0 or self.value_bits <= 0 or self.comparison_bits <= 0:
            raise ValueError("register widths must be positive")
        if self.comparison_bits != self.value_bits:
            raise ValueError(
                "comparison register must match the value register width "
                f"({self.comparison_bits} != {self.value_bits})"
            )
        if self.point_bits % self.value_bits != 0:
            raise ValueError(
                f"point register width {self.point_bits} is not a multiple of "
                f"the scalar width {self.value_bits}"
            )

    @property
    def total_bits(self) -> int:
        return self.point_bits + self.value_bits + self.comparison_bits

    @property
    def dimension(self) -> int:
        return self.point_bits // self.value_bits

    @property
    def comparison_sign_index(self) -> int:
        # MSB of the comparison register within the full string.
        return self.point_bits + self.value_bits

    def point_part(self, bits: str) -> str:
        return bits[: self.point_bits]

    def value_part(self, bits: str) -> str:
        return bits[self.point_bits : self.point_bits + self.value_bits]

    def comparison_part(self, bits: str) -> str:
        return bits[self.point_bits + self.value_bits :]

    def pack(self, point: str, value: str, comparison: str) -> str:
        if (
            len(point) != self.point_bits
            or len(value) != self.value_bits
            or len(comparison) != self.comparison_bits
        ):
            raise ValueError("register contents do not match the layout widths")
        return point + value + comparison

    def zero_string(self) -> str:
        return "0" * self.total_bits


class SparseState:
    """Normalized sparse amplitude map over full-width basis strings."""

    __slots__ = ("layout", "amplitudes")

    def __init__(self, layout: RegisterLayout, amplitudes: Mapping[str, complex]):
        amps = _finalize(dict(amplitudes), layout.total_bits, validate_keys=True)
        self.layout = layout
        self.amplitudes = amps

    @classmethod
    def zero(cls, layout: RegisterLayout) -> "SparseState":
        return cls(layout, {layout.zero_string(): 1.0})

    @classmethod
    def _raw(cls, layout: RegisterLayout, amplitudes: Dict[str, complex]) -> "SparseState":
        # Internal fast path: amplitudes already pruned and norm-checked.
        state = object.__new__(cls)
        state.layout = layout
        state.amplitudes = amplitudes
        return state

    def amplitude(self, bits: str) -> complex:
        return self.amplitudes.get(bits, 0j)

    def support(self) -> Iterable[str]:
        return self.amplitudes.keys()

    def norm(self) -> float:
        return math.sqrt(sum(abs(a) ** 2 for a in self.amplitudes.values()))

    def probability(self, marked: Callable[[str], bool]) -> float:
        """Total Born probability of the basis strings satisfying ``marked``."""
        return sum(abs(a) ** 2 for b, a in self.amplitudes.items() if marked(b))

    def __len__(self) -> int:
        return len(self.amplitudes)

    def __repr__(self) -> str:
        entries = ", ".join(
            f"|{b}>: {a:.4g}" for b, a in sorted(self.amplitudes.items())[:4]
        )
        more = "" if len(self.amplitudes) <= 4 else f", ... ({len(self.amplitudes)})"
        return f"SparseState({entries}{more})"


def _finalize(
    amps: Dict[str, complex], width: int, validate_keys: bool = False
) -> Dict[str, complex]:
    """Prune tiny amplitudes, restore the pruned mass, check normalization."""
    if validate_keys:
        for b in amps:
            if len(b) != width or any(ch not in "01" for ch in b):
                raise ValueError(f"invalid basis string {b!r} for width {width}")
    norm_sq = 0.0
    pruned: list[str] = []
    thresh_sq = PRUNE_THRESHOLD * PRUNE_THRESHOLD
    for b, a in amps.items():
        if isinstance(a, complex):
            m = a.real * a.real + a.imag * a.imag
        else:
            m = a * a
        if m < thresh_sq:
            pruned.append(b)
        else:
            norm_sq += m
    if abs(norm_sq - 1.0) > NORM_TOLERANCE:
        raise NormalizationError(f"state norm^2 = {norm_sq}, expected 1")
    for b in pruned:
        del amps[b]
    if pruned and norm_sq > 0:
        # Renormalization guard: give the pruned mass back so long chains of
        # operations do not drift.
        scale = 1.0 / math.sqrt(norm_sq)
        if scale != 1.0:
            for b in amps:
                amps[b] *= scale
    return amps


def apply_basis_map(
    state: SparseState, mapping: Callable[[str], str]
) -> SparseState:
    """Permute basis strings by a classical reversible map.

    ``mapping`` must be injective on the support actually touched; a
    collision means the classical function is not reversible and raises
    CollisionError.
    """
    amps = state.amplitudes
    new = {mapping(b): a for b, a in amps.items()}
    if len(new) != len(amps):
        _report_collision(amps, mapping)
    return SparseState._raw(state.layout, new)


def _report_collision(amps: Dict[str, complex], mapping) -> None:
    seen: Dict[str, str] = {}
    for b in amps:
        img = mapping(b)
        if img in seen:
            raise CollisionError(
                f"basis strings {seen[img]!r} and {b!r} both map to {img!r}"
            )
        seen[img] = b
    raise CollisionError("basis map collided on the support")


def apply_phase(
    state: SparseState, marked: Callable[[str], bool], phase: complex
) -> SparseState:
    """Multiply the amplitudes of marked basis strings by a unit phase."""
    if abs(abs(phase) - 1.0) > 1e-12:
        raise ValueError(f"phase must have unit magnitude, got |{phase}|")
    new = {b: (a * phase if marked(b) else a) for b, a in state.amplitudes.items()}
    return SparseState._raw(state.layout, new)


class HouseholderPrepare:
    """Self-inverse unitary sending |0...0> on the point register to the
    uniform superposition of the target strings.

    Realized as the reflection I - 2|w><w| with |w> proportional to
    |psi_targets> - |0...0>; acts as the identity on the value and
    comparison registers.
    """

    __slots__ = (
        "point_width",
        "w",
        "is_identity",
        "_w_keys",
        "_w_vals",
        "_suffix_cache",
        "_key_cache",
    )

    def __init__(self, targets: Iterable[str]):
        targets = list(targets)
        if not targets:
            raise EmptyTargetsError("need at least one target string")
        width = len(targets[0])
        seen = set()
        for t in targets:
            if len(t) != width or any(ch not in "01" for ch in t):
                raise ValueError(f"invalid target string {t!r}")
            if t in seen:
                raise ValueError(f"duplicate target string {t!r}")
            seen.add(t)
        self.point_width = width
        zero = "0" * width
        coeff = 1.0 / math.sqrt(len(targets))
        w: Dict[str, float] = {t: coeff for t in targets}
        w[zero] = w.get(zero, 0.0) - 1.0
        norm_sq = sum(c * c for c in w.values())
        if norm_sq < 1e-30:
            # psi_targets == |0...0>: the reflection degenerates to identity.
            self.is_identity = True
            self.w = {}
        else:
            self.is_identity = False
            scale = 1.0 / math.sqrt(norm_sq)
            self.w = {b: c * scale for b, c in w.items() if c != 0.0}
        self._w_keys = list(self.w)
        self._w_vals = np.array([self.w[x] for x in self._w_keys])
        # The reachable basis is tiny: memoize, per full-width string, the
        # suffix it contributes to (None when its point part misses |w>),
        # and per suffix the aligned full-width key list.
        self._suffix_cache: Dict[str, object] = {}
        self._key_cache: Dict[str, list] = {}

    def _keys_for(self, suffix: str) -> list:
        keys = self._key_cache.get(suffix)
        if keys is None:
            keys = [x + suffix for x in self._w_keys]
            self._key_cache[suffix] = keys
        return keys

    def _classify(self, bits: str):
        suffix = bits[self.point_width :] if bits[: self.point_width] in self.w else None
        self._suffix_cache[bits] = suffix
        return suffix

    def __call__(self, state: SparseState) -> SparseState:
        if state.layout.point_bits != self.point_width:
            raise ValueError(
                f"operator built for {self.point_width}-bit point register, "
                f"state has {state.layout.point_bits}"
            )
        if self.is_identity:
            return state
        amps = state.amplitudes
        cache = self._suffix_cache
        classify = self._classify
        missing = "\0"
        # Entries whose point part overlaps |w>, grouped by register suffix;
        # the rest pass through untouched.
        suffixes = set()
        passthrough = {}
        for b, a in amps.items():
            suffix = cache.get(b, missing)
            if suffix is missing:
                suffix = classify(b)
            if suffix is None:
                passthrough[b] = a
            else:
                suffixes.add(suffix)
        new = passthrough
        norm_sq = sum(
            a.real * a.real + a.imag * a.imag if isinstance(a, complex) else a * a
            for a in passthrough.values()
        )
        w_vals = self._w_vals
        thresh = PRUNE_THRESHOLD * PRUNE_THRESHOLD
        for suffix in suffixes:
            keys = self._keys_for(suffix)
            vec = np.array([amps.get(k, 0j) for k in keys])
            vec -= (2.0 * (w_vals @ vec)) * w_vals
            mags = vec.real**2 + vec.imag**2
            norm_sq += float(mags.sum())
            vals = vec.tolist()
            for i, m in enumerate(mags.tolist()):
                if m >= thresh:
                    new[keys[i]] = vals[i]
        if abs(norm_sq - 1.0) > NORM_TOLERANCE:
            raise NormalizationError(f"state norm^2 = {norm_sq}, expected 1")
        return SparseState._raw(state.layout, new)


def householder_prepare(targets: Iterable[str]) -> HouseholderPrepare:
    """Build the state-preparation reflection for a set of point strings."""
    return HouseholderPrepare(targets)


def measure(state: SparseState, rng: np.random.Generator) -> str:
    """Born-rule measurement in the computational basis.

    The draw is fully determined by ``rng``; support strings are visited in
    sorted order so results are reproducible regardless of construction
    history.
    """
    norm_sq = sum(abs(a) ** 2 for a in state.amplitudes.values())
    if abs(norm_sq - 1.0) > MEASURE_NORM_TOLERANCE:
        raise NormalizationError(f"cannot measure: norm^2 = {norm_sq}")
    r = rng.random() * norm_sq
    acc = 0.0
    last = None
    for b in sorted(state.amplitudes):
        acc += abs(state.amplitudes[b]) ** 2
        last = b
        if r < acc:
            return b
    return last  # guard against r landing on the floating-point boundary


def sample_counts(
    state: SparseState, draws: int, rng: np.random.Generator
) -> Dict[str, int]:
    """Batched Born sampling: measurement outcome counts over ``draws``."""
    norm_sq = sum(abs(a) ** 2 for a in state.amplitudes.values())
    if abs(norm_sq - 1.0) > MEASURE_NORM_TOLERANCE:
        raise NormalizationError(f"cannot measure: norm^2 = {norm_sq}")
    keys = sorted(state.amplitudes)
    probs = np.array([abs(state.amplitudes[b]) ** 2 for b in keys]) / norm_sq
    counts = rng.multinomial(draws, probs)
    return {b: int(c) for b, c in zip(keys, counts) if c}
