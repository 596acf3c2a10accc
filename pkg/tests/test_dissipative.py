from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qla_plasma.dissipative import (DissipativeParams, a_k_recursion, apply_K, apply_Kz, dense_K, dilate_sznagy,
                                    lcu_step, pure_dissipation_probability, run_dissipative, success_bound,
                                    trotter_dissipative_step)
from qla_plasma.lattice import FieldState, LatticeSpec, PlasmaProfile, current_fraction, norm_squared
from qla_plasma.operators import StepParams, qla_step


def test_params_relations():
    p = DissipativeParams(0.5, 0.1)
    assert p.damping == pytest.approx(np.exp(-0.05))
    assert np.cos(p.phi / 2) == pytest.approx(p.damping)
    assert p.beta == pytest.approx(0.1)
    assert DissipativeParams(0.0, 0.1).phi == 0.0
    with pytest.raises(ValueError, match="nu >= 0"):
        DissipativeParams(-1.0, 0.1)
    with pytest.raises(ValueError):
        DissipativeParams(1.0, 0.0)


def test_K_is_average_of_Kz_pair(lat2):
    p = DissipativeParams(0.8, 0.3)
    psi = FieldState.random(lat2, 0)
    avg = 0.5 * (apply_Kz(psi, p).amplitudes + apply_Kz(psi, p, adjoint=True).amplitudes)
    assert np.allclose(avg, apply_K(psi, p).amplitudes, atol=1e-15)
    assert np.array_equal(apply_K(psi, p).amplitudes[:6], psi.amplitudes[:6])


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000), nu=st.floats(0.0, 5.0), dt=st.floats(1e-4, 1.0))
def test_lcu_branches(seed, nu, dt):
    lat = LatticeSpec(1, 1, 0.5)
    p = DissipativeParams(nu, dt)
    psi = FieldState.random(lat, seed)
    kept, disc, prob = lcu_step(psi, p)
    assert np.max(np.abs(kept.amplitudes - apply_K(psi, p).amplitudes)) < 1e-13
    assert abs(norm_squared(kept) + norm_squared(disc) - norm_squared(psi)) < 1e-12
    assert prob == pytest.approx(norm_squared(kept), abs=1e-14)
    assert 0.0 <= prob <= 1.0 + 1e-15


def test_lcu_step_rejects_zero_state(lat2):
    with pytest.raises(ValueError):
        lcu_step(FieldState.zeros(lat2), DissipativeParams(1.0, 0.1))


def test_sznagy_dilation_is_unitary_with_K_block(lat2):
    p = DissipativeParams(0.7, 0.2)
    W = dilate_sznagy(p, lat2)
    n = 48
    assert np.allclose(W.conj().T @ W, np.eye(2 * n), atol=1e-14)
    assert np.allclose(W[:n, :n], dense_K(p, lat2))
    with pytest.raises(ValueError, match="cap"):
        dilate_sznagy(p, LatticeSpec(4, 4, 0.1))


def test_trotter_step_composition(lat2, random_profile):
    prof = random_profile(lat2, 1, nu=0.4)
    sp = StepParams.for_lattice(lat2)
    dp = DissipativeParams.from_step(prof, sp)
    psi = FieldState.random(lat2, 2)
    out, p = trotter_dissipative_step(psi, prof, sp, dp)
    ref = qla_step(apply_K(psi, dp), prof, sp)
    assert np.allclose(out.amplitudes, ref.amplitudes, atol=1e-15)
    assert p == pytest.approx(norm_squared(ref) / norm_squared(psi))
    with pytest.raises(ValueError, match="dt mismatch"):
        trotter_dissipative_step(psi, prof, sp, DissipativeParams(0.4, 2 * sp.dt))


def test_run_dissipative_matches_stepwise(lat2, random_profile):
    prof = random_profile(lat2, 3, nu=0.5)
    sp = StepParams.for_lattice(lat2)
    dp = DissipativeParams.from_step(prof, sp)
    psi = FieldState.random(lat2, 4)
    traj = run_dissipative(psi, prof, sp, dp, 20, snapshot_every=10)
    assert len(traj) == 21
    ref, probs = psi, []
    for _ in range(20):
        ref, p = trotter_dissipative_step(ref, prof, sp, dp)
        probs.append(p)
    assert np.allclose(traj.snapshots[20], ref.amplitudes, atol=1e-14)
    # trajectory p_step is computed against the unnormalized norm of the previous state
    ps = traj.p_step[1:]
    assert np.allclose(ps * traj.norm_squared[:-1], traj.norm_squared[1:], rtol=1e-12)
    assert traj.p_cumulative[-1] == pytest.approx(traj.norm_squared[-1], rel=1e-12)
    assert sorted(traj.snapshots) == [0, 10, 20]


def test_run_dissipative_monte_carlo_is_seeded(lat2, random_profile):
    prof = random_profile(lat2, 5, nu=5.0)
    sp = StepParams.for_lattice(lat2)
    dp = DissipativeParams.from_step(prof, sp)
    psi = FieldState.random(lat2, 6)
    a = run_dissipative(psi, prof, sp, dp, 50, monte_carlo=True, rng=1)
    b = run_dissipative(psi, prof, sp, dp, 50, monte_carlo=True, rng=1)
    assert np.array_equal(a.accepted, b.accepted)
    assert a.accepted[0]
    assert np.all(np.diff(a.accepted.astype(int)) <= 0)


def test_run_dissipative_validation(lat2):
    prof = PlasmaProfile.uniform(lat2, nu=1.0)
    sp = StepParams.for_lattice(lat2)
    dp = DissipativeParams.from_step(prof, sp)
    with pytest.raises(ValueError):
        run_dissipative(FieldState.zeros(lat2), prof, sp, dp, 5)
    with pytest.raises(ValueError):
        run_dissipative(FieldState.random(lat2, 0), prof, sp, dp, 0)


def test_pure_dissipation_matches_closed_forms(lat2):
    beta, a0, n = 0.01, 0.4, 300
    nu = 1.0
    dt = beta / (2 * nu)
    prof = PlasmaProfile.uniform(lat2, nu=nu)
    sp = StepParams(delta=0.5, dt=dt, theta=0.0)
    dp = DissipativeParams(nu, dt)
    amps = np.zeros((12, 4), complex)
    amps[0] = np.sqrt(1 - a0) / 2
    amps[8] = np.sqrt(a0) / 2
    psi = FieldState(lat2, amps)
    assert current_fraction(psi) == pytest.approx(a0)
    traj = run_dissipative(psi, prof, sp, dp, n)
    assert traj.p_cumulative[-1] == pytest.approx(pure_dissipation_probability(a0, beta, n), rel=1e-12)
    for k in range(n):
        assert traj.a_k[k + 1] == pytest.approx(a_k_recursion(traj.a_k[k], beta), rel=1e-12)


def test_success_bound_forms():
    assert success_bound(0.5, 1e-3) == pytest.approx(0.6065306597126334)
    bound, finite = success_bound(0.5, 1e-3, 100_000)
    # finite product tends to exp(-a0 (1 + beta/2 + ...)) from below
    assert finite == pytest.approx(bound, rel=1e-3)
    with pytest.raises(ValueError):
        success_bound(1.0, 0.1)
    with pytest.raises(ValueError):
        success_bound(0.5, 0.0)
    assert pure_dissipation_probability(0.9, 1e-3, 10 ** 5) == pytest.approx(0.1, abs=1e-6)
