"""Gate-level intermediate representation.

Multi-controlled gates are first class: a :class:`Gate` carries any number of
``(qubit, polarity)`` controls, polarity 1 meaning a filled (on-1) control and
0 an open (on-0) control.  Qubit ``q`` is bit ``q`` of the basis index.

Text format (one gate per line, fields separated by single spaces)::

    # n_qubits 9
    # operator increment
    GATE X - 3 0,1,2 1,1,1
    GATE RY 0.39269908169872414 6 4,5,7 1,0,1

Fields are ``kind angle target controls polarities``; ``-`` marks an empty
field.  Angles are written with ``repr`` so a round trip is exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

GATE_KINDS = ("X", "RY", "RZ", "H")
_ROTATIONS = ("RY", "RZ")


@dataclass(frozen=True)
class Gate:
    kind: str
    target: int
    angle: float = 0.0
    controls: tuple[tuple[int, int], ...] = ()

    def __post_init__(self) -> None:
        if self.kind not in GATE_KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        if self.kind not in _ROTATIONS and self.angle != 0.0:
            raise ValueError(f"{self.kind} gate takes no angle")
        if not np.isfinite(self.angle):
            raise ValueError("gate angle must be finite")
        ctrl = tuple((int(q), int(v)) for q, v in self.controls)
        qubits = [q for q, _ in ctrl]
        if len(set(qubits)) != len(qubits):
            raise ValueError(f"repeated control qubit in {qubits}")
        if self.target in qubits:
            raise ValueError(f"target {self.target} is also a control")
        if any(v not in (0, 1) for _, v in ctrl):
            raise ValueError("control polarity must be 0 or 1")
        if self.target < 0 or any(q < 0 for q in qubits):
            raise ValueError("qubit indices must be non-negative")
        object.__setattr__(self, "controls", ctrl)
        object.__setattr__(self, "angle", float(self.angle))

    @property
    def n_controls(self) -> int:
        return len(self.controls)

    @property
    def qubits(self) -> tuple[int, ...]:
        return (self.target, *(q for q, _ in self.controls))

    def matrix(self) -> np.ndarray:
        """The 2x2 action on the target qubit (basis ``|0>, |1>``)."""
        if self.kind == "X":
            return np.array([[0, 1], [1, 0]], dtype=np.complex128)
        if self.kind == "H":
            return np.array([[1, 1], [1, -1]], dtype=np.complex128) / np.sqrt(2.0)
        h = 0.5 * self.angle
        if self.kind == "RY":
            c, s = np.cos(h), np.sin(h)
            return np.array([[c, -s], [s, c]], dtype=np.complex128)
        return np.diag([np.exp(-1j * h), np.exp(1j * h)])

    def adjoint(self) -> Gate:
        if self.kind in _ROTATIONS:
            return Gate(self.kind, self.target, -self.angle, self.controls)
        return self

    def remap(self, mapping) -> Gate:
        return Gate(self.kind, mapping[self.target], self.angle,
                    tuple((mapping[q], v) for q, v in self.controls))

    def to_text(self) -> str:
        angle = repr(self.angle) if self.kind in _ROTATIONS else "-"
        if self.controls:
            ctrl = ",".join(str(q) for q, _ in self.controls)
            pol = ",".join(str(v) for _, v in self.controls)
        else:
            ctrl = pol = "-"
        return f"GATE {self.kind} {angle} {self.target} {ctrl} {pol}"

    @classmethod
    def from_text(cls, line: str) -> Gate:
        parts = line.split()
        if len(parts) != 6 or parts[0] != "GATE":
            raise ValueError(f"malformed gate line: {line!r}")
        _, kind, angle, target, ctrl, pol = parts
        a = 0.0 if angle == "-" else float(angle)
        if (ctrl == "-") != (pol == "-"):
            raise ValueError(f"controls and polarities must both be given or both be '-': {line!r}")
        controls = ()
        if ctrl != "-":
            qs = [int(q) for q in ctrl.split(",")]
            vs = [int(v) for v in pol.split(",")]
            if len(qs) != len(vs):
                raise ValueError(f"{len(qs)} controls but {len(vs)} polarities: {line!r}")
            controls = tuple(zip(qs, vs))
        return cls(kind, int(target), a, controls)


@dataclass
class GateCircuit:
    n_qubits: int
    gates: list[Gate] = field(default_factory=list)
    metadata: dict[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.n_qubits < 1:
            raise ValueError("a circuit needs at least one qubit")
        self.gates = list(self.gates)
        for g in self.gates:
            self._check(g)

    def _check(self, g: Gate) -> None:
        if max(g.qubits) >= self.n_qubits:
            raise ValueError(f"gate {g.to_text()} addresses a qubit outside 0..{self.n_qubits - 1}")

    def __len__(self) -> int:
        return len(self.gates)

    def __iter__(self):
        return iter(self.gates)

    def append(self, gate: Gate) -> None:
        self._check(gate)
        self.gates.append(gate)

    def extend(self, gates) -> None:
        for g in gates:
            self.append(g)

    def adjoint(self) -> GateCircuit:
        meta = dict(self.metadata)
        meta["adjoint"] = "1" if meta.get("adjoint") != "1" else "0"
        return GateCircuit(self.n_qubits, [g.adjoint() for g in reversed(self.gates)], meta)

    def concat(self, other: GateCircuit) -> GateCircuit:
        """``other`` applied after ``self``."""
        if other.n_qubits != self.n_qubits:
            raise ValueError(f"qubit count mismatch: {self.n_qubits} vs {other.n_qubits}")
        return GateCircuit(self.n_qubits, self.gates + other.gates, dict(self.metadata))

    def remap(self, mapping, n_qubits: int) -> GateCircuit:
        """Relabel qubit ``q`` as ``mapping[q]`` inside a ``n_qubits`` register."""
        return GateCircuit(n_qubits, [g.remap(mapping) for g in self.gates], dict(self.metadata))

    def to_text(self) -> str:
        lines = [f"# n_qubits {self.n_qubits}"]
        for key in sorted(self.metadata):
            value = str(self.metadata[key])
            if "\n" in value:
                raise ValueError(f"metadata {key!r} must be a single line")
            lines.append(f"# {key} {value}")
        lines.extend(g.to_text() for g in self.gates)
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> GateCircuit:
        n_qubits = None
        meta: dict[str, str] = {}
        gates = []
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition(" ")
                if key == "n_qubits":
                    n_qubits = int(value)
                elif key:
                    meta[key] = value
                continue
            try:
                gates.append(Gate.from_text(line))
            except ValueError as exc:
                raise ValueError(f"line {lineno}: {exc}") from None
        if n_qubits is None:
            raise ValueError("missing '# n_qubits' header")
        return cls(n_qubits, gates, meta)


def lower_open_controls(circuit: GateCircuit) -> GateCircuit:
    """Replace open controls by X conjugation so every control is filled."""
    out = GateCircuit(circuit.n_qubits, metadata=dict(circuit.metadata))
    for g in circuit.gates:
        opened = [q for q, v in g.controls if v == 0]
        for q in opened:
            out.append(Gate("X", q))
        out.append(Gate(g.kind, g.target, g.angle, tuple((q, 1) for q, _ in g.controls)))
        for q in reversed(opened):
            out.append(Gate("X", q))
    return out
