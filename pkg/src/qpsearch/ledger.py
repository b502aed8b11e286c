"""Audited separation of classical and quantum oracle call counts.

The cost convention: one quantum call per application of the oracle F
(once inside each preparation or un-preparation of the search state), one
classical call per direct objective evaluation.  Poll steps are classical
by construction and must never touch the quantum counters.
"""
from __future__ import annotations

from dataclasses import dataclass

__all__ = ["OracleLedger"]


@dataclass
class OracleLedger:
    classical_calls: int = 0
    quantum_calls: int = 0
    qsearch_rounds: int = 0
    q_applications: int = 0

    def copy(self) -> "OracleLedger":
        return OracleLedger(
            self.classical_calls,
            self.quantum_calls,
            self.qsearch_rounds,
            self.q_applications,
        )

    def delta_since(self, earlier: "OracleLedger") -> "OracleLedger":
        return OracleLedger(
            self.classical_calls - earlier.classical_calls,
            self.quantum_calls - earlier.quantum_calls,
            self.qsearch_rounds - earlier.qsearch_rounds,
            self.q_applications - earlier.q_applications,
        )

    @property
    def total_calls(self) -> int:
        return self.classical_calls + self.quantum_calls

    def as_dict(self) -> dict:
        return {
            "classical_calls": self.classical_calls,
            "quantum_calls": self.quantum_calls,
            "qsearch_rounds": self.qsearch_rounds,
            "q_applications": self.q_applications,
        }
