"""Built-in equivalence suites behind ``qla-plasma verify``."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .circuits import (QubitLayout, circuit_to_matrix, synth_coin, synth_cyclotron, synth_increment, synth_lcu,
                       synth_plasma_potential, synth_qla_step, synth_select)
from .circuits.ir import GateCircuit
from .circuits.reference import lattice_matrix, reference_matrix
from .circuits.synth import synth_kinetic, synth_stream, synth_two_level_ry
from .dissipative import DissipativeParams, apply_K, lcu_step
from .lattice import COIN_STATES, FieldState, LatticeSpec, PlasmaProfile, embed_operator, norm_squared
from .operators import STREAM_PAIRS, StepParams, _cyclotron, _kinetic, _plasma, build_dense_step
from .oracle import build_generator


class VerificationError(RuntimeError):
    """A circuit or operator failed its equivalence check."""


@dataclass
class Check:
    name: str
    error: float
    tol: float

    @property
    def passed(self) -> bool:
        return bool(self.error <= self.tol)

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name:<40s} err={self.error:.3e} tol={self.tol:.0e}"


def _max_abs(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.max(np.abs(a - b)))


def check_circuit(circuit: GateCircuit, lattice: LatticeSpec | None = None, profile: PlasmaProfile | None = None,
                  params: StepParams | None = None, tol: float = 1e-12, name: str | None = None) -> Check:
    """Max-abs distance between the circuit's matrix and its dense reference."""
    ref = reference_matrix(circuit, lattice, profile, params)
    got = circuit_to_matrix(circuit)
    return Check(name or f"circuit {circuit.metadata.get('operator')}", _max_abs(got, ref), tol)


def _sample_problem(seed: int = 7):
    lat = LatticeSpec(1, 1, 0.5)
    rng = np.random.default_rng(seed)
    prof = PlasmaProfile(rng.uniform(0.2, 2.0, 4), rng.uniform(0.2, 2.0, 4), 0.5, -1.5, 0.3)
    return lat, prof, StepParams.for_lattice(lat)


def circuit_suite(tol: float = 1e-12) -> list[Check]:
    lat, prof, params = _sample_problem()
    layout = QubitLayout.from_lattice(lat)
    dp = DissipativeParams.from_step(prof, params)
    circuits = [
        synth_increment(5), synth_increment(3, -1),
        synth_two_level_ry((COIN_STATES[0], COIN_STATES[9]), 0.4),
        synth_coin("x", 0.3), synth_coin("y", 0.3, adjoint=True), synth_cyclotron(0.2, -0.1),
        synth_stream(layout, STREAM_PAIRS["x"][0], "x", 1), synth_stream(layout, STREAM_PAIRS["y"][1], "y", -1),
        synth_kinetic(layout, "x", params), synth_kinetic(layout, "y", params),
        synth_plasma_potential("ion", prof, params.dt, "dense", layout),
        synth_plasma_potential("electron", prof, params.dt, "sparse", layout),
        synth_qla_step(layout, prof, params, "dense"), synth_qla_step(layout, prof, params, "sparse"),
        synth_select(dp, lat), synth_lcu(dp, lat),
    ]
    checks = []
    for c in circuits:
        label = c.metadata.get("operator", "?")
        if "mode" in c.metadata:
            label += f" ({c.metadata['mode']})"
        checks.append(check_circuit(c, lat, prof, params, tol, name=f"circuit {label}"))
        adj = circuit_to_matrix(c.adjoint())
        checks.append(Check(f"adjoint {label}", _max_abs(adj, circuit_to_matrix(c).conj().T), tol))
    return checks


def oracle_suite(tol: float = 1e-12) -> list[Check]:
    lat, prof, params = _sample_problem()
    step = embed_operator(lat, build_dense_step(lat, prof, params))
    factors = [
        lattice_matrix(lat, lambda a: _kinetic(a, "x", params.theta)),
        lattice_matrix(lat, lambda a: _kinetic(a, "y", params.theta)),
        lattice_matrix(lat, lambda a: _cyclotron(a, *params.cyclotron_angles(prof))),
        lattice_matrix(lat, lambda a: _plasma(a, "ion", params.plasma_angles(prof, "ion"))),
        lattice_matrix(lat, lambda a: _plasma(a, "electron", params.plasma_angles(prof, "electron"))),
    ]
    product = np.eye(step.shape[0], dtype=np.complex128)
    for f in factors:
        product = f @ product
    checks = [
        Check("qla_step = product of factors", _max_abs(step, product), tol),
        Check("qla_step unitary", _max_abs(step.conj().T @ step, np.eye(step.shape[0])), tol),
    ]
    gen = build_generator(lat, prof, dissipation=False).matrix
    checks.append(Check("generator Hermitian at nu = 0", _max_abs(gen, gen.conj().T), tol))
    psi = FieldState.random(lat, 3)
    dp = DissipativeParams.from_step(prof, params)
    kept, discarded, p = lcu_step(psi, dp)
    checks.append(Check("lcu kept branch = K psi", _max_abs(kept.amplitudes, apply_K(psi, dp).amplitudes), 1e-13))
    checks.append(Check("lcu branch norms sum",
                        abs(norm_squared(kept) + norm_squared(discarded) - norm_squared(psi)), tol))
    return checks


SUITES = {"circuits": circuit_suite, "oracle": oracle_suite}


def run_suites(names=("circuits", "oracle"), tol: float = 1e-12) -> list[Check]:
    out: list[Check] = []
    for name in names:
        out += SUITES[name](tol)
    return out
