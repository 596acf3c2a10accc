"""Collisional evolution by post-selected linear combination of unitaries.

The damping factor ``K = diag(I_6, exp(-nu dt) I_6)`` on every site is the
average of two diagonal unitaries ``K_z`` and ``K_z^dagger`` with phases
``exp(-+ i phi / 2)`` on the current block, ``cos(phi/2) = exp(-nu dt)``.
One ancilla prepared and unprepared by a Hadamard selects between them; the
ancilla-0 branch carries ``K psi``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .lattice import N_COMPONENTS, FieldState, LatticeSpec, PlasmaProfile, energy, norm_squared
from .operators import StepParams, _check_profile, _step, qla_step

DENSE_CAP = 3072


@dataclass(frozen=True)
class DissipativeParams:
    nu: float
    dt: float

    def __post_init__(self) -> None:
        if not (np.isfinite(self.nu) and self.nu >= 0):
            raise ValueError(f"collision frequency nu must satisfy nu >= 0, got {self.nu}")
        if not (np.isfinite(self.dt) and self.dt > 0):
            raise ValueError(f"dt must be > 0, got {self.dt}")

    @property
    def damping(self) -> float:
        """``exp(-nu dt)``."""
        return float(np.exp(-self.nu * self.dt))

    @property
    def phi(self) -> float:
        return float(2.0 * np.arccos(self.damping))

    @property
    def beta(self) -> float:
        return 2.0 * self.nu * self.dt

    @classmethod
    def from_step(cls, profile: PlasmaProfile, params: StepParams) -> DissipativeParams:
        return cls(profile.nu, params.dt)


def _scale_currents(state: FieldState, factor) -> FieldState:
    amps = state.amplitudes.copy()
    amps[6:12] *= factor
    return FieldState(state.lattice, amps)


def apply_K(state: FieldState, params: DissipativeParams) -> FieldState:
    return _scale_currents(state, params.damping)


def apply_Kz(state: FieldState, params: DissipativeParams, adjoint: bool = False) -> FieldState:
    sign = 1.0 if adjoint else -1.0
    return _scale_currents(state, np.exp(sign * 0.5j * params.phi))


def lcu_step(state: FieldState, params: DissipativeParams) -> tuple[FieldState, FieldState, float]:
    """Both ancilla branches of ``H . select . H`` and the keep probability."""
    n0 = norm_squared(state)
    if n0 == 0:
        raise ValueError("lcu_step needs a nonzero state")
    plus = apply_Kz(state, params)
    minus = apply_Kz(state, params, adjoint=True)
    kept = FieldState(state.lattice, 0.5 * (plus.amplitudes + minus.amplitudes))
    discarded = FieldState(state.lattice, 0.5 * (plus.amplitudes - minus.amplitudes))
    return kept, discarded, norm_squared(kept) / n0


def dense_K(params: DissipativeParams, lattice: LatticeSpec) -> np.ndarray:
    diag = np.ones(N_COMPONENTS * lattice.n_sites)
    diag[6 * lattice.n_sites:] = params.damping
    return np.diag(diag).astype(np.complex128)


def dilate_sznagy(params: DissipativeParams, lattice: LatticeSpec, max_dim: int | None = DENSE_CAP) -> np.ndarray:
    """One-ancilla unitary ``[[K, sqrt(I - K^2)], [sqrt(I - K^2), -K]]`` (ancilla most significant)."""
    dim = N_COMPONENTS * lattice.n_sites
    if max_dim is not None and 2 * dim > max_dim:
        raise ValueError(f"dilation of dimension {2 * dim} exceeds cap {max_dim}")
    K = dense_K(params, lattice)
    # K is diagonal, so the matrix square root is elementwise on the diagonal.
    S = np.diag(np.sqrt(np.clip(1.0 - np.diag(K).real ** 2, 0.0, None))).astype(np.complex128)
    return np.block([[K, S], [S, -K]])


def trotter_dissipative_step(state: FieldState, profile: PlasmaProfile, step_params: StepParams,
                             diss_params: DissipativeParams) -> tuple[FieldState, float]:
    """``qla_step(K psi)`` and the keep probability of the normalized input."""
    if not np.isclose(step_params.dt, diss_params.dt, rtol=1e-14, atol=0.0):
        raise ValueError(f"dt mismatch: step {step_params.dt} vs dissipative {diss_params.dt}")
    kept, _, p = lcu_step(state, diss_params)
    return qla_step(kept, profile, step_params), p


@dataclass
class Trajectory:
    time: np.ndarray
    norm_squared: np.ndarray
    p_step: np.ndarray
    p_cumulative: np.ndarray
    a_k: np.ndarray
    energy: np.ndarray
    initial_norm_squared: float
    snapshots: dict[int, np.ndarray] = field(default_factory=dict)
    accepted: np.ndarray | None = None

    def __len__(self) -> int:
        return self.time.size


def current_population(amplitudes: np.ndarray) -> float:
    cur = amplitudes[6:12]
    total = float(np.sum(amplitudes.real ** 2 + amplitudes.imag ** 2))
    return float(np.sum(cur.real ** 2 + cur.imag ** 2)) / total


def run_dissipative(initial: FieldState, profile: PlasmaProfile, step_params: StepParams,
                    diss_params: DissipativeParams, n_steps: int, snapshot_every: int = 0,
                    monte_carlo: bool = False, rng: np.random.Generator | int | None = None,
                    callback=None) -> Trajectory:
    """Iterate the Trotter step without renormalizing the stored state.

    Row 0 of the trajectory is the initial state (probabilities 1).  In
    ``monte_carlo`` mode each step also draws the ancilla outcome with the
    computed probability; the state is still propagated along the kept branch
    and ``accepted`` records whether the run would have survived.
    """
    if n_steps < 1:
        raise ValueError(f"n_steps must be >= 1, got {n_steps}")
    n0 = norm_squared(initial)
    if n0 == 0:
        raise ValueError("initial state is zero")
    _check_profile(initial, profile)
    if not np.isclose(step_params.dt, diss_params.dt, rtol=1e-14, atol=0.0):
        raise ValueError(f"dt mismatch: step {step_params.dt} vs dissipative {diss_params.dt}")
    rng = np.random.default_rng(rng) if monte_carlo else None

    m = n_steps + 1
    time = np.arange(m) * step_params.dt
    norms = np.empty(m)
    p_step = np.empty(m)
    p_cum = np.empty(m)
    a_k = np.empty(m)
    en = np.empty(m)
    accepted = np.ones(m, dtype=bool) if monte_carlo else None
    snaps = {}

    lat = initial.lattice
    norms[0], p_step[0], p_cum[0] = n0, 1.0, 1.0
    a_k[0] = current_population(initial.amplitudes)
    en[0] = energy(initial)
    if snapshot_every:
        snaps[0] = initial.amplitudes.copy()

    a = initial.amplitudes.reshape(N_COMPONENTS, lat.ny, lat.nx, 1).copy()
    flat = a.reshape(N_COMPONENTS, lat.n_sites)
    damp = diss_params.damping
    for k in range(1, m):
        # K only rescales the current block, so its keep probability is
        # closed-form in the running current population.
        cur = a[6:12]
        n_cur = float(np.sum(cur.real ** 2 + cur.imag ** 2))
        p = (norms[k - 1] - (1.0 - damp * damp) * n_cur) / norms[k - 1]
        cur *= damp
        _step(a, profile, step_params)
        nk = float(np.sum(a.real ** 2 + a.imag ** 2))
        if not np.isfinite(nk):
            raise FloatingPointError(f"non-finite state at step {k}")
        norms[k] = nk
        p_step[k] = p
        p_cum[k] = p_cum[k - 1] * p
        a_k[k] = current_population(flat) if nk > 0 else 0.0
        en[k] = lat.delta ** 2 * nk
        if monte_carlo:
            accepted[k] = accepted[k - 1] and bool(rng.random() < p)
        if snapshot_every and k % snapshot_every == 0:
            snaps[k] = flat.copy()
        if callback is not None:
            callback(k, FieldState(lat, flat.copy()))
    return Trajectory(time, norms, p_step, p_cum, a_k, en, n0, snaps, accepted)


def a_k_recursion(a: float, beta: float) -> float:
    """Current population after one pure-damping step: ``e^-b a / (1 - (1 - e^-b) a)``."""
    g = np.exp(-beta)
    return g * a / (1.0 - (1.0 - g) * a)


def success_bound(a0: float, beta: float, n_steps: int | None = None):
    """Asymptotic floor ``exp(-a0)``; with ``n_steps`` also the finite product.

    The finite product is ``prod_{k<n} (1 - beta a0 exp(-k beta))``.
    """
    if not 0.0 <= a0 < 1.0:
        raise ValueError(f"a0 must satisfy 0 <= a0 < 1, got {a0}")
    if not beta > 0:
        raise ValueError(f"beta must be > 0, got {beta}")
    bound = float(np.exp(-a0))
    if n_steps is None:
        return bound
    k = np.arange(n_steps)
    finite = float(np.exp(np.sum(np.log1p(-beta * a0 * np.exp(-k * beta)))))
    return bound, finite


def pure_dissipation_probability(a0: float, beta: float, n_steps: int) -> float:
    """Exact cumulative keep probability of ``n_steps`` bare ``K`` steps from population ``a0``."""
    return float((1.0 - a0) + a0 * np.exp(-n_steps * beta))
