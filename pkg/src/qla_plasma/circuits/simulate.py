"""Dense state-vector backend for :class:`GateCircuit`."""

from __future__ import annotations

import numpy as np

from .ir import Gate, GateCircuit

MAX_QUBITS = 12


def _apply_gate(psi: np.ndarray, gate: Gate, n: int) -> None:
    """Apply ``gate`` in place to ``psi`` of shape ``(2,)*n + (B,)``; qubit q is axis ``n-1-q``."""
    idx = [slice(None)] * (n + 1)
    for q, v in gate.controls:
        idx[n - 1 - q] = v
    sub = psi[tuple(idx)]
    t_axis = n - 1 - gate.target
    t_axis -= sum(1 for q, _ in gate.controls if n - 1 - q < t_axis)
    view = np.moveaxis(sub, t_axis, 0)
    m = gate.matrix()
    a0 = view[0].copy()
    a1 = view[1].copy()
    view[0] = m[0, 0] * a0 + m[0, 1] * a1
    view[1] = m[1, 0] * a0 + m[1, 1] * a1


def apply_circuit(circuit: GateCircuit, vectors: np.ndarray, max_qubits: int | None = 24) -> np.ndarray:
    """Apply to a state vector ``(2**n,)`` or a batch of columns ``(2**n, B)``."""
    n = circuit.n_qubits
    if max_qubits is not None and n > max_qubits:
        raise ValueError(f"{n} qubits exceeds simulation cap {max_qubits}")
    v = np.array(vectors, dtype=np.complex128)
    single = v.ndim == 1
    if single:
        v = v[:, None]
    if v.shape[0] != 1 << n:
        raise ValueError(f"vector length {v.shape[0]} does not match 2**{n}")
    psi = v.reshape((2,) * n + (v.shape[1],))
    for g in circuit.gates:
        _apply_gate(psi, g, n)
    out = psi.reshape(1 << n, -1)
    return out[:, 0] if single else out


def circuit_to_matrix(circuit: GateCircuit, max_qubits: int = MAX_QUBITS) -> np.ndarray:
    """Dense unitary, built by pushing every basis column through the gates."""
    if circuit.n_qubits > max_qubits:
        raise ValueError(f"{circuit.n_qubits} qubits exceeds dense cap {max_qubits}")
    dim = 1 << circuit.n_qubits
    return apply_circuit(circuit, np.eye(dim, dtype=np.complex128), max_qubits=None)
