"""Unitary operators of the conservative qubit-lattice step.

One step is

    psi(t + dt) = V_pe V_pi V_ce V_ci U_Y U_X psi(t)

where ``U_X`` and ``U_Y`` interleave coin rotations with streaming of
component pairs, ``V_ci``/``V_ce`` rotate the current pairs by the cyclotron
angles and ``V_pi``/``V_pe`` rotate each field component into its current
partner by a site-dependent plasma angle.

All kernels work in place on arrays of shape ``(12, N_y, N_x, B)``; the
trailing batch axis lets :func:`build_dense_step` push every basis vector
through the same code path that advances a single state.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .lattice import N_COMPONENTS, FieldState, LatticeSpec, PlasmaProfile

# Constant multiplying theta = kappa * delta / 4, pinned by calibrate_generator
# (tests/test_calibration.py re-derives it). Negative because the sequence with
# forward-moving S^+ recovers the curl with flipped sign.
CALIBRATED_KAPPA = -1.0

DENSE_CAP = 12 * 256

# Streamed pairs per axis: slot 0 and slot 1 of KINETIC_SEQUENCE.
STREAM_PAIRS = {"x": ((1, 4), (2, 5)), "y": ((0, 3), (2, 5))}

# Factors of U_X / U_Y in application order (rightmost printed factor first):
# ("coin", adjoint) or ("stream", slot, direction).
KINETIC_SEQUENCE = (
    ("coin", True), ("stream", 0, -1), ("coin", False), ("stream", 0, +1),
    ("coin", True), ("stream", 1, +1), ("coin", False), ("stream", 1, -1),
    ("coin", False), ("stream", 0, +1), ("coin", True), ("stream", 0, -1),
    ("coin", False), ("stream", 1, -1), ("coin", True), ("stream", 1, +1),
)

# (i, j, sign): rotation by sign * theta on (psi_i, psi_j), R(a) = [[cos a, -sin a], [sin a, cos a]].
COIN_ROTATIONS = {
    "x": ((1, 5, +1), (2, 4, +1)),
    "y": ((0, 5, -1), (2, 3, -1)),
}
CYCLOTRON_PAIRS = {"ion": (6, 7), "electron": (9, 10)}
PLASMA_PAIRS = {"ion": ((0, 6), (1, 7), (2, 8)), "electron": ((0, 9), (1, 10), (2, 11))}

_AXIS = {"x": 2, "y": 1}


@dataclass(frozen=True)
class StepParams:
    """Angles and time step of one QLA step.

    ``dt`` defaults to ``delta**2`` (diffusion ordering) and ``theta`` to
    ``kappa_kinetic * delta / 4``.  Cyclotron angles left as ``None`` resolve
    to ``potential_scale * omega_c * dt``; the plasma angle at site ``p`` is
    ``potential_scale * omega_p[p] * dt``.
    """

    delta: float
    dt: float | None = None
    kappa_kinetic: float = CALIBRATED_KAPPA
    theta: float | None = None
    theta_ci: float | None = None
    theta_ce: float | None = None
    potential_scale: float = 1.0

    def __post_init__(self) -> None:
        if not self.delta > 0:
            raise ValueError(f"delta must be > 0, got {self.delta}")
        if self.dt is None:
            object.__setattr__(self, "dt", self.delta ** 2)
        if not self.dt > 0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if self.theta is None:
            object.__setattr__(self, "theta", self.kappa_kinetic * self.delta / 4.0)
        if not np.isfinite(self.theta):
            raise ValueError("theta must be finite")

    @classmethod
    def for_lattice(cls, lattice: LatticeSpec, **kwargs) -> StepParams:
        return cls(delta=lattice.delta, **kwargs)

    def cyclotron_angles(self, profile: PlasmaProfile) -> tuple[float, float]:
        s = self.potential_scale
        ci = s * profile.omega_ci * self.dt if self.theta_ci is None else self.theta_ci
        ce = s * profile.omega_ce * self.dt if self.theta_ce is None else self.theta_ce
        return float(ci), float(ce)

    def plasma_angles(self, profile: PlasmaProfile, species: str) -> np.ndarray:
        omega = profile.omega_pi if species == "ion" else profile.omega_pe
        return self.potential_scale * omega * self.dt

    def scaled(self, factor: float) -> StepParams:
        """Every rotation angle multiplied by ``factor``; ``dt`` unchanged."""
        return replace(
            self,
            theta=self.theta * factor,
            theta_ci=None if self.theta_ci is None else self.theta_ci * factor,
            theta_ce=None if self.theta_ce is None else self.theta_ce * factor,
            potential_scale=self.potential_scale * factor,
        )


# -- in-place kernels on (12, ny, nx, B) arrays ---------------------------------

def _rotate(a: np.ndarray, i: int, j: int, angle) -> None:
    c, s = np.cos(angle), np.sin(angle)
    ai, aj = a[i], a[j]
    new_i = c * ai - s * aj
    a[j] = s * ai + c * aj
    a[i] = new_i


def _stream(a: np.ndarray, pair, axis: str, direction: int) -> None:
    idx = list(pair)
    a[idx] = np.roll(a[idx], direction, axis=_AXIS[axis])


def _coin(a: np.ndarray, axis: str, angle: float, adjoint: bool) -> None:
    sign = -1.0 if adjoint else 1.0
    for i, j, s in COIN_ROTATIONS[axis]:
        _rotate(a, i, j, sign * s * angle)


def _kinetic(a: np.ndarray, axis: str, theta: float) -> None:
    if theta == 0:
        # Coins are identities and the shifts cancel pairwise: exact no-op.
        return
    pairs = STREAM_PAIRS[axis]
    for op in KINETIC_SEQUENCE:
        if op[0] == "coin":
            _coin(a, axis, theta, op[1])
        else:
            _stream(a, pairs[op[1]], axis, op[2])


def _cyclotron(a: np.ndarray, theta_ci: float, theta_ce: float) -> None:
    if theta_ci:
        _rotate(a, *CYCLOTRON_PAIRS["ion"], theta_ci)
    if theta_ce:
        _rotate(a, *CYCLOTRON_PAIRS["electron"], theta_ce)


def _plasma(a: np.ndarray, species: str, angles: np.ndarray) -> None:
    ny, nx = a.shape[1], a.shape[2]
    ang = np.asarray(angles, dtype=np.float64).reshape(ny, nx, *([1] * (a.ndim - 3)))
    if not np.any(ang):
        return
    for i, j in PLASMA_PAIRS[species]:
        _rotate(a, i, j, ang)


def _step(a: np.ndarray, profile: PlasmaProfile, params: StepParams) -> None:
    _kinetic(a, "x", params.theta)
    _kinetic(a, "y", params.theta)
    _cyclotron(a, *params.cyclotron_angles(profile))
    _plasma(a, "ion", params.plasma_angles(profile, "ion"))
    _plasma(a, "electron", params.plasma_angles(profile, "electron"))


def _work(state: FieldState) -> np.ndarray:
    lat = state.lattice
    return state.amplitudes.reshape(N_COMPONENTS, lat.ny, lat.nx, 1).copy()


def _done(state: FieldState, a: np.ndarray) -> FieldState:
    return FieldState(state.lattice, a.reshape(N_COMPONENTS, state.lattice.n_sites))


def _check_profile(state: FieldState, profile: PlasmaProfile) -> None:
    if profile.n_sites != state.lattice.n_sites:
        raise ValueError(f"profile has {profile.n_sites} sites, state has {state.lattice.n_sites}")


# -- public operators -----------------------------------------------------------

def apply_stream_pair(state: FieldState, components: tuple[int, int], axis: str, direction: int) -> FieldState:
    """Cyclically shift two components by one site along ``axis`` (``direction`` is +1 or -1)."""
    j1, j2 = components
    for j in (j1, j2):
        if not 0 <= j < N_COMPONENTS:
            raise ValueError(f"component index {j} out of range 0..11")
    if j1 == j2:
        raise ValueError("streamed components must be distinct")
    if axis not in _AXIS:
        raise ValueError(f"axis must be 'x' or 'y', got {axis!r}")
    if direction not in (1, -1):
        raise ValueError(f"direction must be +1 or -1, got {direction}")
    a = _work(state)
    _stream(a, (j1, j2), axis, direction)
    return _done(state, a)


def apply_coin(state: FieldState, axis: str, angle: float, adjoint: bool = False) -> FieldState:
    axis = axis.lower()
    if axis not in COIN_ROTATIONS:
        raise ValueError(f"axis must be 'X' or 'Y', got {axis!r}")
    a = _work(state)
    _coin(a, axis, angle, adjoint)
    return _done(state, a)


def apply_UX(state: FieldState, params: StepParams) -> FieldState:
    a = _work(state)
    _kinetic(a, "x", params.theta)
    return _done(state, a)


def apply_UY(state: FieldState, params: StepParams) -> FieldState:
    a = _work(state)
    _kinetic(a, "y", params.theta)
    return _done(state, a)


def apply_cyclotron(state: FieldState, theta_ci: float, theta_ce: float) -> FieldState:
    a = _work(state)
    _cyclotron(a, theta_ci, theta_ce)
    return _done(state, a)


def apply_plasma_potential(state: FieldState, species: str, profile: PlasmaProfile, dt: float,
                           scale: float = 1.0) -> FieldState:
    """Rotate each field component into its ``species`` current partner by ``omega_p[p] * dt``."""
    if species not in PLASMA_PAIRS:
        raise ValueError(f"species must be 'ion' or 'electron', got {species!r}")
    _check_profile(state, profile)
    omega = profile.omega_pi if species == "ion" else profile.omega_pe
    a = _work(state)
    _plasma(a, species, scale * omega * dt)
    return _done(state, a)


def qla_step(state: FieldState, profile: PlasmaProfile, params: StepParams) -> FieldState:
    """One conservative step: ``U_X``, ``U_Y``, cyclotron, ion then electron plasma rotations."""
    _check_profile(state, profile)
    a = _work(state)
    _step(a, profile, params)
    return _done(state, a)


def run_conservative(state: FieldState, profile: PlasmaProfile, params: StepParams, n_steps: int,
                     callback=None) -> FieldState:
    """Advance ``n_steps`` steps without leaving the work buffer.

    ``callback(step_index, amplitudes)`` is invoked after every step with a
    read-only ``(12, N)`` view when given.
    """
    _check_profile(state, profile)
    a = _work(state)
    n = state.lattice.n_sites
    for k in range(n_steps):
        _step(a, profile, params)
        if callback is not None:
            view = a.reshape(N_COMPONENTS, n)
            view.flags.writeable = False
            callback(k + 1, view)
            view.flags.writeable = True
    return _done(state, a)


def build_dense_step(lattice: LatticeSpec, profile: PlasmaProfile, params: StepParams,
                     max_dim: int | None = DENSE_CAP) -> np.ndarray:
    """Dense ``12N x 12N`` matrix of :func:`qla_step`, built column by column."""
    dim = N_COMPONENTS * lattice.n_sites
    if max_dim is not None and dim > max_dim:
        raise ValueError(f"dense step of dimension {dim} exceeds cap {max_dim}")
    if profile.n_sites != lattice.n_sites:
        raise ValueError(f"profile has {profile.n_sites} sites, lattice has {lattice.n_sites}")
    a = np.eye(dim, dtype=np.complex128).reshape(N_COMPONENTS, lattice.ny, lattice.nx, dim)
    _step(a, profile, params)
    return a.reshape(dim, dim)
