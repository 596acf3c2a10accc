from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qla_plasma.circuits import (QubitLayout, circuit_to_matrix, gate_count, synth_coin, synth_cyclotron,
                                 synth_increment, synth_kinetic, synth_lcu, synth_plasma_potential, synth_qla_step,
                                 synth_select, synth_stream, synth_two_level_ry)
from qla_plasma.circuits.reference import (coin_matrix, increment_matrix, lcu_matrix, plasma_matrix,
                                           reference_matrix, step_matrix, stream_matrix)
from qla_plasma.circuits.synth import gray_path, plasma_gates, walsh_gray_angles
from qla_plasma.dissipative import DissipativeParams, apply_K
from qla_plasma.lattice import COIN_STATES, FieldState, LatticeSpec, PlasmaProfile, make_gaussian_blob_profile
from qla_plasma.operators import PLASMA_PAIRS, STREAM_PAIRS, StepParams, qla_step


def _err(circ, ref):
    return float(np.max(np.abs(circuit_to_matrix(circ) - ref)))


@pytest.mark.parametrize("n", [1, 2, 3, 5, 8])
def test_incrementer_is_cyclic_permutation(n):
    U = circuit_to_matrix(synth_increment(n))
    assert np.array_equal(U, increment_matrix(n))
    assert np.all(np.sum(np.abs(U), axis=0) == 1) and np.all(np.sum(np.abs(U), axis=1) == 1)
    assert np.array_equal(circuit_to_matrix(synth_increment(n, -1)), U.T)


def test_incrementer_three_bits_frozen():
    U = circuit_to_matrix(synth_increment(3)).real.astype(int)
    for p in range(8):
        assert U[(p + 1) % 8, p] == 1


def test_incrementer_gate_counts():
    c = synth_increment(5)
    counts = gate_count(c)
    assert counts.raw == 5
    assert counts.by_controls == {0: 1, 1: 1, 2: 1, 3: 1, 4: 1}
    assert counts.expanded == 1 + 1 + 2 + 3 + 4


def test_gray_path_steps_one_bit():
    path = gray_path(0b0000, 0b1011)
    assert path[0] == 0 and path[-1] == 0b1011
    for a, b in zip(path, path[1:]):
        assert bin(a ^ b).count("1") == 1


def test_two_level_full_transfer():
    # angle pi/2 moves |0000> entirely onto |1001>
    circ = synth_two_level_ry(("0000", "1001"), np.pi / 2)
    U = circuit_to_matrix(circ)
    assert abs(U[0b1001, 0b0000] - 1) < 1e-12
    assert abs(U[0b0000, 0b1001] + 1) < 1e-12
    others = [i for i in range(16) if i not in (0, 9)]
    assert np.allclose(U[np.ix_(others, others)], np.eye(14))
    tilde = circuit_to_matrix(synth_two_level_ry(("0000", "1001"), np.pi / 2, "RY~"))
    assert np.allclose(tilde, U.T)
    with pytest.raises(ValueError, match="excluded"):
        synth_two_level_ry(("0001", "1001"), 0.1)


@settings(max_examples=20, deadline=None)
@given(i=st.integers(0, 11), j=st.integers(0, 11), angle=st.floats(-3.0, 3.0))
def test_two_level_any_pair(i, j, angle):
    if i == j:
        return
    circ = synth_two_level_ry((COIN_STATES[i], COIN_STATES[j]), angle)
    assert _err(circ, reference_matrix(circ)) < 1e-12


@pytest.mark.parametrize("axis", ["x", "y"])
@pytest.mark.parametrize("adjoint", [False, True])
def test_coin_circuits(axis, adjoint):
    assert _err(synth_coin(axis, 0.37, adjoint), coin_matrix(axis, 0.37, adjoint)) < 1e-12


def test_cyclotron_circuit():
    c = synth_cyclotron(0.3, -0.6)
    assert _err(c, reference_matrix(c)) < 1e-12


@pytest.mark.parametrize("axis", ["x", "y"])
@pytest.mark.parametrize("slot", [0, 1])
@pytest.mark.parametrize("direction", [1, -1])
def test_stream_circuits(axis, slot, direction):
    lat = LatticeSpec(2, 1, 0.25)
    layout = QubitLayout.from_lattice(lat)
    pair = STREAM_PAIRS[axis][slot]
    c = synth_stream(layout, pair, axis, direction)
    assert _err(c, stream_matrix(lat, pair, axis, direction)) < 1e-12


def test_stream_matches_state_streaming():
    lat = LatticeSpec(2, 2, 0.25)
    layout = QubitLayout.from_lattice(lat)
    from qla_plasma.circuits import apply_circuit
    from qla_plasma.operators import apply_stream_pair
    psi = FieldState.random(lat, 0)
    out = apply_circuit(synth_stream(layout, (1, 4), "x", 1), psi.to_coin_vector())
    assert np.allclose(out, apply_stream_pair(psi, (1, 4), "x", 1).to_coin_vector())


def test_kinetic_circuits(lat2):
    layout = QubitLayout.from_lattice(lat2)
    params = StepParams.for_lattice(lat2)
    for axis in ("x", "y"):
        c = synth_kinetic(layout, axis, params)
        assert _err(c, reference_matrix(c, lat2)) < 1e-12
    assert len(synth_kinetic(layout, "x", StepParams(delta=0.5, theta=0.0))) == 0


def test_walsh_gray_angles_reconstruct():
    rng = np.random.default_rng(0)
    alpha = rng.uniform(-2, 2, 8)
    theta = walsh_gray_angles(alpha)
    gray = np.arange(8) ^ (np.arange(8) >> 1)
    rebuilt = [sum((-1) ** bin(j & gray[i]).count("1") * theta[i] for i in range(8)) for j in range(8)]
    assert np.allclose(rebuilt, alpha)
    with pytest.raises(ValueError):
        walsh_gray_angles(np.zeros(6))


@pytest.mark.parametrize("mode", ["dense", "sparse"])
@pytest.mark.parametrize("species", ["ion", "electron"])
def test_plasma_circuits_random_profile(mode, species, random_profile):
    lat = LatticeSpec(1, 1, 0.5)
    prof = random_profile(lat, 11)
    c = synth_plasma_potential(species, prof, 0.1, mode, QubitLayout.from_lattice(lat))
    assert _err(c, plasma_matrix(lat, species, prof, 0.1)) < 1e-12


def test_plasma_circuit_blob_on_4x4():
    lat = LatticeSpec(2, 1, 0.25)
    prof = make_gaussian_blob_profile(lat, 0.4, 1.0, (0.5, 0.25), 0.2, 0.3, 0.7, 0.3)
    layout = QubitLayout.from_lattice(lat)
    for mode in ("dense", "sparse"):
        c = synth_plasma_potential("electron", prof, 0.2, mode, layout)
        assert _err(c, plasma_matrix(lat, "electron", prof, 0.2)) < 1e-12


def test_sparse_plasma_count_grows_with_support_only():
    lat = LatticeSpec(2, 2, 0.25)
    layout = QubitLayout.from_lattice(lat)
    small = make_gaussian_blob_profile(lat, 1.0, 1.0, (0.5, 0.5), 0.2, 0.5, 0.5, 0.0)
    large = make_gaussian_blob_profile(lat, 1.0, 1.0, (0.5, 0.5), 0.2, 0.5, 0.5, 0.3)
    n_small = len(synth_plasma_potential("ion", small, 0.1, "sparse", layout))
    n_large = len(synth_plasma_potential("ion", large, 0.1, "sparse", layout))
    per_site = len(PLASMA_PAIRS["ion"])
    assert n_large - n_small == per_site * (len(large.support) - len(small.support))


def test_plasma_gates_infer_background():
    layout = QubitLayout(1, 1)
    angles = np.array([0.1, 0.1, 0.3, 0.1])
    explicit = plasma_gates(layout, "ion", angles, "sparse", 0.1, (2,))
    assert plasma_gates(layout, "ion", angles, "sparse") == explicit
    with pytest.raises(ValueError, match="mode"):
        plasma_gates(layout, "ion", angles, "banded")
    with pytest.raises(ValueError, match="angles"):
        plasma_gates(layout, "ion", angles[:3], "dense")


@pytest.mark.parametrize("mode", ["dense", "sparse"])
def test_full_step_circuit_2x2(mode, lat2, random_profile):
    prof = random_profile(lat2, 13)
    params = StepParams.for_lattice(lat2)
    c = synth_qla_step(QubitLayout.from_lattice(lat2), prof, params, mode)
    assert c.n_qubits == 6
    assert _err(c, step_matrix(lat2, prof, params)) < 1e-12


def test_step_circuit_on_state_vector_matches_qla_step(random_profile):
    lat = LatticeSpec(2, 2, 0.25)
    prof = random_profile(lat, 17)
    params = StepParams.for_lattice(lat)
    from qla_plasma.circuits import apply_circuit
    psi = FieldState.random(lat, 5)
    out = apply_circuit(synth_qla_step(QubitLayout.from_lattice(lat), prof, params, "sparse"), psi.to_coin_vector())
    ref = qla_step(psi, prof, params)
    assert np.max(np.abs(out - ref.to_coin_vector())) < 1e-12


def test_select_and_lcu_circuits(lat2):
    dp = DissipativeParams(0.6, 0.25)
    sel = synth_select(dp, lat2)
    assert sel.n_qubits == 7
    lcu = synth_lcu(dp, lat2)
    U = circuit_to_matrix(lcu)
    assert np.max(np.abs(U - lcu_matrix(dp.phi, lat2))) < 1e-12
    # ancilla-0 block acting on an encoded state is K
    psi = FieldState.random(lat2, 1)
    v = np.concatenate([psi.to_coin_vector(), np.zeros(64)])
    kept = (U @ v)[:64]
    assert np.allclose(FieldState.from_coin_vector(lat2, kept).amplitudes, apply_K(psi, dp).amplitudes, atol=1e-13)
    assert _err(sel, reference_matrix(sel, lat2)) < 1e-12


def test_layout():
    layout = QubitLayout(3, 2, ancilla=True)
    assert layout.n_p == 5 and layout.coin == (5, 6, 7, 8) and layout.ancilla_qubit == 9
    assert layout.axis_bits("x") == (0, 1, 2) and layout.axis_bits("y") == (3, 4)
    assert layout.n_qubits == 10
    with pytest.raises(ValueError):
        QubitLayout(1, 1).ancilla_qubit
