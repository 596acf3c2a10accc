"""The ten acceptance criteria, each at its stated tolerance.

Every test prints one ``PASS``/``FAIL`` line straight to the terminal.  Two
criteria cannot be met as stated (the potential factors do not compose to a
single exponential, and the pure-dissipation floor is ``1 - a0``, not
``e^-a0``); they are measured faithfully and marked strict ``xfail``.
"""

from __future__ import annotations

import functools

import numpy as np
import pytest
from scipy.linalg import expm

from qla_plasma.calibration import calibrate_generator
from qla_plasma.circuits import QubitLayout, circuit_to_matrix, synth_increment, synth_lcu, synth_qla_step
from qla_plasma.circuits.reference import increment_matrix, reference_matrix
from qla_plasma.circuits.scaling import scaling_report, support_scaling
from qla_plasma.circuits.synth import synth_kinetic, synth_plasma_potential, synth_stream
from qla_plasma.dissipative import (DissipativeParams, a_k_recursion, apply_K, dilate_sznagy, lcu_step,
                                    run_dissipative)
from qla_plasma.lattice import N_COMPONENTS, FieldState, LatticeSpec, PlasmaProfile, norm_squared
from qla_plasma.operators import (COIN_ROTATIONS, CYCLOTRON_PAIRS, KINETIC_SEQUENCE, PLASMA_PAIRS, STREAM_PAIRS,
                                  StepParams, build_dense_step, run_conservative)
from qla_plasma.oracle import convergence_study, dispersion_check, pauli_terms


@pytest.fixture
def report(capsys):
    def emit(name: str, value: float, tol, passed: bool, detail: str = "") -> bool:
        bound = tol if isinstance(tol, str) else f"tol {tol:.0e}"
        line = f"{'PASS' if passed else 'FAIL'} {name}: {value:.4g} ({bound}){' ' + detail if detail else ''}"
        with capsys.disabled():
            print("\n" + line)
        return passed
    return emit


def _random_profile(lat: LatticeSpec, seed: int) -> PlasmaProfile:
    rng = np.random.default_rng(seed)
    n = lat.n_sites
    return PlasmaProfile(rng.uniform(0.0, 2.0, n), rng.uniform(0.0, 3.0, n), 0.7, -1.9, 0.0)


# -- 1 --------------------------------------------------------------------------

def test_c1_norm_conservation_32x32(report):
    lat = LatticeSpec(5, 5, 1 / 32)
    prof = _random_profile(lat, 11)
    psi = FieldState.random(lat, 5)
    n0 = norm_squared(psi)
    out = run_conservative(psi, prof, StepParams.for_lattice(lat), 1000)
    drift = abs(norm_squared(out) - n0) / n0
    assert report("C1 relative norm^2 drift, 1000 steps 32x32", drift, 1e-10, drift < 1e-10)


# -- 2 --------------------------------------------------------------------------

def _rotation(pairs_angles) -> np.ndarray:
    m = np.eye(N_COMPONENTS)
    for i, j, a in pairs_angles:
        r = np.eye(N_COMPONENTS)
        r[i, i] = r[j, j] = np.cos(a)
        r[i, j], r[j, i] = -np.sin(a), np.sin(a)
        m = r @ m
    return m


def _factor_matrices(lat: LatticeSpec, prof: PlasmaProfile, params: StepParams) -> list[np.ndarray]:
    """Every factor of one step as an explicit ``12N`` matrix, in application order."""
    n = lat.n_sites
    eye_n = np.eye(n)
    shift = {"x": lambda d: np.kron(np.eye(lat.ny), increment_matrix(lat.n_px, d).real),
             "y": lambda d: np.kron(increment_matrix(lat.n_py, d).real, np.eye(lat.nx))}
    out = []
    for axis in ("x", "y"):
        for op in KINETIC_SEQUENCE:
            if op[0] == "coin":
                sign = -1.0 if op[1] else 1.0
                r = _rotation([(i, j, sign * s * params.theta) for i, j, s in COIN_ROTATIONS[axis]])
                out.append(np.kron(r, eye_n))
            else:
                pair, d = STREAM_PAIRS[axis][op[1]], op[2]
                diag = [shift[axis](d) if c in pair else eye_n for c in range(N_COMPONENTS)]
                m = np.zeros((N_COMPONENTS * n, N_COMPONENTS * n))
                for c, blk in enumerate(diag):
                    m[c * n:(c + 1) * n, c * n:(c + 1) * n] = blk
                out.append(m)
    ci, ce = params.cyclotron_angles(prof)
    out.append(np.kron(_rotation([(*CYCLOTRON_PAIRS["ion"], ci), (*CYCLOTRON_PAIRS["electron"], ce)]), eye_n))
    for species in ("ion", "electron"):
        ang = params.plasma_angles(prof, species)
        m = np.zeros((N_COMPONENTS * n, N_COMPONENTS * n))
        for p in range(n):
            r = _rotation([(i, j, ang[p]) for i, j in PLASMA_PAIRS[species]])
            m[p::n, p::n] = r
        out.append(m)
    return out


def test_c2_step_equals_product_of_factors_8x8(report):
    lat = LatticeSpec(3, 3, 1 / 8)
    prof = _random_profile(lat, 2)
    params = StepParams.for_lattice(lat)
    step = build_dense_step(lat, prof, params, max_dim=None)
    factors = _factor_matrices(lat, prof, params)
    assert len(factors) == 2 * len(KINETIC_SEQUENCE) + 3
    product = np.eye(step.shape[0])
    for f in factors:
        product = f @ product
    err = float(np.max(np.abs(step - product)))
    assert report("C2 qla_step vs product of factor matrices, 8x8", err, 1e-12, err < 1e-12)


def _circuits_up_to_10_qubits():
    lat = LatticeSpec(3, 3, 1 / 8)  # 6 position qubits + 4 coin = 10
    prof = _random_profile(lat, 4)
    params = StepParams.for_lattice(lat)
    layout = QubitLayout.from_lattice(lat)
    small = LatticeSpec(3, 2, 1 / 8)  # LCU adds the ancilla: 5 + 4 + 1 = 10
    dp = DissipativeParams(0.8, params.dt)
    yield "increment_6", synth_increment(6), None
    yield "decrement_6", synth_increment(6, -1), None
    for axis in ("x", "y"):
        for pair in STREAM_PAIRS[axis]:
            yield f"stream_{axis}{pair}", synth_stream(layout, pair, axis, 1), (lat, prof, params)
        yield f"U_{axis.upper()}", synth_kinetic(layout, axis, params), (lat, prof, params)
    for species in ("ion", "electron"):
        for mode in ("dense", "sparse"):
            yield (f"plasma_{species}_{mode}", synth_plasma_potential(species, prof, params.dt, mode, layout),
                   (lat, prof, params))
    yield "qla_step_dense", synth_qla_step(layout, prof, params, "dense"), (lat, prof, params)
    yield "lcu_3x2", synth_lcu(dp, small), (small, None, None)


def test_c2_circuits_match_dense_operators(report):
    worst, names = 0.0, []
    for name, circ, ctx in _circuits_up_to_10_qubits():
        assert circ.n_qubits <= 10
        lat, prof, params = ctx if ctx else (None, None, None)
        err = float(np.max(np.abs(circuit_to_matrix(circ) - reference_matrix(circ, lat, prof, params))))
        worst = max(worst, err)
        names.append(name)
    assert report("C2 synthesized circuits (<= 10 qubits) vs dense operators", worst, 1e-12, worst < 1e-12,
                  f"[{len(names)} circuits]")


# -- 3 --------------------------------------------------------------------------

@pytest.mark.parametrize("label,omega_pe", [("vacuum", 0.0), ("uniform plasma", 2.0)])
def test_c3_second_order_convergence(report, label, omega_pe):
    lat0 = LatticeSpec(1, 1, 0.5)
    prof = PlasmaProfile.uniform(lat0, 0.5 * omega_pe, omega_pe, 0.4 * omega_pe, -omega_pe)
    rep = convergence_study(prof, 0.25, [1 / 16, 1 / 32, 1 / 64])
    assert report(f"C3 fitted temporal order, {label}", rep.fitted_order, ">= 1.8", rep.fitted_order >= 1.8,
                  f"errors {', '.join(f'{e:.2e}' for e in rep.errors)}")


# -- 4 --------------------------------------------------------------------------

def _uniform_potential_case():
    lat = LatticeSpec(1, 1, 0.5)
    w = (0.7, 1.3, 0.4, -0.9)
    prof = PlasmaProfile.uniform(lat, w[0], w[1], w[2], w[3])
    dt = 0.1
    params = StepParams(delta=lat.delta, dt=dt, theta=0.0)
    composed = build_dense_step(lat, prof, params)
    return lat, w, dt, composed


def test_c4_each_potential_factor_is_its_pauli_exponential(report):
    lat, w, dt, _ = _uniform_potential_case()
    terms = pauli_terms(*w)
    eye_n = np.eye(lat.n_sites)
    worst = 0.0
    for name, angles in (("ci", (w[2] * dt, 0.0)), ("ce", (0.0, w[3] * dt))):
        got = np.kron(_rotation([(*CYCLOTRON_PAIRS["ion"], angles[0]), (*CYCLOTRON_PAIRS["electron"], angles[1])]),
                      eye_n)
        worst = max(worst, float(np.max(np.abs(got - np.kron(expm(-1j * dt * terms[name]), eye_n)))))
    for name, species, omega in (("pi", "ion", w[0]), ("pe", "electron", w[1])):
        got = _rotation([(i, j, omega * dt) for i, j in PLASMA_PAIRS[species]])
        worst = max(worst, float(np.max(np.abs(got - expm(-1j * dt * terms[name])))))
    assert report("C4a each potential factor = exp(-i dt term)", worst, 1e-12, worst < 1e-12)


@pytest.mark.xfail(strict=True, reason="the four Pauli terms do not commute; the ordered product differs from "
                                       "exp of the sum at O(dt^2)")
def test_c4_composed_potential_equals_exponential_of_sum(report):
    lat, w, dt, composed = _uniform_potential_case()
    V = sum(pauli_terms(*w).values())
    target = np.kron(expm(-1j * dt * V), np.eye(lat.n_sites))
    err = float(np.max(np.abs(composed - target)))
    assert report("C4 composed potential factors vs exp(-i dt sum of terms)", err, 1e-12, err < 1e-12)


# -- 5 --------------------------------------------------------------------------

def test_c5_vacuum_light_line(report):
    lat = LatticeSpec(6, 1, 1 / 64)
    res = dispersion_check(lat, PlasmaProfile.vacuum(lat), (2 * np.pi, 0.0))
    ratio = res.omega_measured / (2 * np.pi)
    assert report("C5 vacuum omega/ck - 1", abs(ratio - 1), 1e-2, abs(ratio - 1) <= 1e-2)


def test_c5_plasma_oscillation_k0(report):
    lat = LatticeSpec(3, 3, 1 / 8)
    res = dispersion_check(lat, PlasmaProfile.uniform(lat, 0.0, 2.0), (0.0, 0.0), "O-mode")
    rel = abs(res.omega_measured - 2.0) / 2.0
    assert report("C5 k=0 oscillation omega/omega_pe - 1", rel, 1e-2, rel <= 1e-2)


# -- 6 --------------------------------------------------------------------------

def test_c6_lcu_branches(report):
    lat = LatticeSpec(2, 2, 0.25)
    psi = FieldState.random(lat, 9)
    dp = DissipativeParams(0.7, 0.05)
    kept, discarded, _ = lcu_step(psi, dp)
    e_kept = float(np.max(np.abs(kept.amplitudes - apply_K(psi, dp).amplitudes)))
    e_sum = abs(norm_squared(kept) + norm_squared(discarded) - norm_squared(psi))
    ok1 = report("C6 kept branch vs apply_K", e_kept, 1e-13, e_kept < 1e-13)
    ok2 = report("C6 branch norms sum to input norm", e_sum, 1e-12, e_sum < 1e-12)
    assert ok1 and ok2


def test_c6_dilation_sandwich_matches_block_form(report):
    worst = 0.0
    for lat in (LatticeSpec(1, 1, 0.5), LatticeSpec(2, 1, 0.25), LatticeSpec(3, 2, 1 / 8)):
        dp = DissipativeParams(1.3, 0.1)
        circ = synth_lcu(dp, lat)
        assert circ.n_qubits <= 10
        worst = max(worst, float(np.max(np.abs(circuit_to_matrix(circ) - reference_matrix(circ, lat)))))
    # the block form's kept corner is K itself, and the dilation shares it
    lat = LatticeSpec(1, 1, 0.5)
    dp = DissipativeParams(1.3, 0.1)
    n = N_COMPONENTS * lat.n_sites
    dil = dilate_sznagy(dp, lat)
    psi = FieldState.random(lat, 1)
    worst = max(worst, float(np.max(np.abs(dil[:n, :n] @ psi.amplitudes.reshape(-1)
                                         - apply_K(psi, dp).amplitudes.reshape(-1)))))
    assert report("C6 LCU sandwich circuit vs dense block form", worst, 1e-12, worst < 1e-12)


# -- 7 --------------------------------------------------------------------------

def test_c7_telescoping_probability(report):
    lat = LatticeSpec(2, 2, 0.25)
    prof = _random_profile(lat, 6)
    prof = PlasmaProfile(prof.omega_pi, prof.omega_pe, prof.omega_ci, prof.omega_ce, 0.3)
    params = StepParams.for_lattice(lat)
    psi = FieldState.random(lat, 2)
    traj = run_dissipative(psi, prof, params, DissipativeParams.from_step(prof, params), 10_000)
    rel = abs(traj.p_cumulative[-1] - traj.norm_squared[-1]) / traj.norm_squared[-1]
    assert report("C7 cumulative probability vs ||psi||^2 after 1e4 steps", rel, 1e-9, rel < 1e-9,
                  f"[p = {traj.p_cumulative[-1]:.6f}]")


# -- 8 --------------------------------------------------------------------------

BETA = 1e-3
N_T = 100_000


@functools.lru_cache(maxsize=None)
def _pure_dissipation(a0: float):
    lat = LatticeSpec(1, 1, 0.5)
    nu = 1.0
    dt = BETA / (2 * nu)
    prof = PlasmaProfile.vacuum(lat)
    prof = PlasmaProfile(prof.omega_pi, prof.omega_pe, 0.0, 0.0, nu)
    rng = np.random.default_rng(int(a0 * 10))
    amps = rng.standard_normal((N_COMPONENTS, lat.n_sites)) + 1j * rng.standard_normal((N_COMPONENTS, lat.n_sites))
    amps[:6] *= np.sqrt((1 - a0) / np.sum(np.abs(amps[:6]) ** 2))
    amps[6:] *= np.sqrt(a0 / np.sum(np.abs(amps[6:]) ** 2))
    params = StepParams(delta=lat.delta, dt=dt, theta=0.0)
    return run_dissipative(FieldState(lat, amps), prof, params, DissipativeParams(nu, dt), N_T)


_A0 = [pytest.param(0.1),
       pytest.param(0.5, marks=pytest.mark.xfail(strict=True, reason="pure damping keeps 1 - a0 + a0 e^-N beta, "
                                                                      "which misses e^-a0 by 0.11")),
       pytest.param(0.9, marks=pytest.mark.xfail(strict=True, reason="pure damping keeps 1 - a0 + a0 e^-N beta = 0.1, "
                                                                      "below 1/e and 0.31 from e^-a0"))]


@pytest.mark.parametrize("a0", _A0)
def test_c8_success_probability_bound(report, a0):
    traj = _pure_dissipation(a0)
    p = float(traj.p_cumulative[-1])
    gap = abs(p - np.exp(-a0))
    floor = float(np.min(traj.p_cumulative)) >= np.exp(-1) - 1e-3
    ok = report(f"C8 |p_success - e^-a0|, a0 = {a0}", gap, 1e-2, gap <= 1e-2 and floor,
                f"[p = {p:.6f}, e^-a0 = {np.exp(-a0):.6f}, floor {'held' if floor else 'violated'}]")
    assert ok


def test_c8_a_k_recursion(report):
    worst = 0.0
    for a0 in (0.1, 0.5, 0.9):
        traj = _pure_dissipation(a0)
        a = traj.a_k
        idx = np.linspace(0, N_T - 1, 2001).astype(int)
        pred = np.array([a_k_recursion(a[k], BETA) for k in idx])
        worst = max(worst, float(np.max(np.abs(a[idx + 1] - pred))))
    assert report("C8 measured a_k vs closed-form recursion", worst, 1e-10, worst < 1e-10)


# -- 9 --------------------------------------------------------------------------

@pytest.fixture(scope="module")
def scaling():
    return scaling_report(range(2, 13), classes=("incrementer", "homogeneous", "plasma_dense"))


def test_c9_incrementer_exponent(report, scaling):
    e = scaling.fits["incrementer"]["reported"]
    assert report("C9 incrementer cost exponent", e, "range [1.7, 2.3]", 1.7 <= e <= 2.3)


def test_c9_dense_potential_doubling(report, scaling):
    r = scaling.fits["plasma_dense"]["reported"]
    assert report("C9 dense plasma potential doubling ratio", r, "range [1.9, 2.1]", 1.9 <= r <= 2.1)


def test_c9_homogeneous_polylog_exponent(report, scaling):
    e = scaling.fits["homogeneous"]["reported"]
    assert report("C9 homogeneous step polylog exponent", e, "range [1.5, 2.5]", 1.5 <= e <= 2.5)


def test_c9_sparse_support_linear(report):
    _, _, (_, _, r2) = support_scaling()
    assert report("C9 sparse count vs support size, linear R^2", r2, "> 0.99", r2 > 0.99)


# -- 10 -------------------------------------------------------------------------

def test_c10_calibration_stability(report):
    k8, _ = calibrate_generator(LatticeSpec(3, 3, 1 / 8))
    k16, _ = calibrate_generator(LatticeSpec(4, 4, 1 / 16))
    rel = abs(k8 - k16) / abs(k16)
    assert report("C10 kappa 8x8 vs 16x16 relative difference", rel, 2e-2, rel < 2e-2,
                  f"[kappa = {k8:.6f}, {k16:.6f}]")
