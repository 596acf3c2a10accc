"""Elementary-gate accounting for multi-controlled gates."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

from .ir import Gate, GateCircuit


@dataclass(frozen=True)
class CostModel:
    """Linear-in-controls expansion of multi-controlled gates.

    An ``m``-controlled X costs ``max(1, per_control * m)`` elementary gates
    (a Toffoli ladder with borrowed qubits is linear in ``m``).  A controlled
    rotation or Hadamard costs two uncontrolled rotations plus two
    multi-controlled X of the same arity (``R(a/2) X R(-a/2) X``).  Open
    controls are free: the polarity is part of the IR.
    """

    per_control: int = 1
    name: str = "linear"

    def __post_init__(self) -> None:
        if self.per_control < 1:
            raise ValueError("per_control must be >= 1")

    def mcx(self, m: int) -> int:
        return max(1, self.per_control * m)

    def gate_cost(self, gate: Gate) -> int:
        m = gate.n_controls
        if gate.kind == "X":
            return self.mcx(m)
        return 1 if m == 0 else 2 * self.mcx(m) + 2


@dataclass
class GateCounts:
    raw: int
    expanded: int
    by_kind: dict[str, int]
    by_controls: dict[int, int]

    def __add__(self, other: GateCounts) -> GateCounts:
        return GateCounts(self.raw + other.raw, self.expanded + other.expanded,
                          dict(Counter(self.by_kind) + Counter(other.by_kind)),
                          dict(Counter(self.by_controls) + Counter(other.by_controls)))


def gate_count(circuit: GateCircuit, cost_model: CostModel | None = None) -> GateCounts:
    """Raw gate count plus the cost-model expansion into elementary gates."""
    model = CostModel() if cost_model is None else cost_model
    kinds: Counter = Counter()
    arity: Counter = Counter()
    expanded = 0
    for g in circuit.gates:
        kinds[g.kind] += 1
        arity[g.n_controls] += 1
        expanded += model.gate_cost(g)
    return GateCounts(len(circuit.gates), expanded, dict(kinds), dict(arity))
