"""Dense abstract operators that synthesized circuits must reproduce.

Lattice operators are built by pushing an identity batch through the
vectorized kernels and embedding the ``12N`` block into ``16N`` dims with
the excluded coin states left alone.
"""

from __future__ import annotations

import numpy as np

from ..lattice import COIN_INDEX, N_COIN_STATES, N_COMPONENTS, LatticeSpec, PlasmaProfile, embed_operator
from ..operators import COIN_ROTATIONS, CYCLOTRON_PAIRS, StepParams, _kinetic, _plasma, _step, _stream
from .ir import GateCircuit


def increment_matrix(n_bits: int, direction: int = 1) -> np.ndarray:
    """Cyclic permutation ``|p> -> |p + direction mod 2^n>``."""
    dim = 1 << n_bits
    out = np.zeros((dim, dim), dtype=np.complex128)
    out[(np.arange(dim) + direction) % dim, np.arange(dim)] = 1.0
    return out


def _rotation12(pairs_angles) -> np.ndarray:
    m = np.eye(N_COMPONENTS, dtype=np.complex128)
    for i, j, a in pairs_angles:
        r = np.eye(N_COMPONENTS, dtype=np.complex128)
        c, s = np.cos(a), np.sin(a)
        r[i, i], r[i, j], r[j, i], r[j, j] = c, -s, s, c
        m = r @ m
    return m


def coin_embed(op12: np.ndarray) -> np.ndarray:
    """16x16 coin operator from a 12x12 component operator."""
    out = np.eye(N_COIN_STATES, dtype=np.complex128)
    out[np.ix_(COIN_INDEX, COIN_INDEX)] = op12
    return out


def coin_matrix(axis: str, angle: float, adjoint: bool = False) -> np.ndarray:
    sign = -1.0 if adjoint else 1.0
    return coin_embed(_rotation12([(i, j, sign * s * angle) for i, j, s in COIN_ROTATIONS[axis.lower()]]))


def cyclotron_matrix(theta_ci: float, theta_ce: float) -> np.ndarray:
    return coin_embed(_rotation12([(*CYCLOTRON_PAIRS["ion"], theta_ci), (*CYCLOTRON_PAIRS["electron"], theta_ce)]))


def two_level_matrix(b1: int, b2: int, angle: float) -> np.ndarray:
    out = np.eye(N_COIN_STATES, dtype=np.complex128)
    c, s = np.cos(angle), np.sin(angle)
    out[b1, b1], out[b1, b2], out[b2, b1], out[b2, b2] = c, -s, s, c
    return out


def lattice_matrix(lattice: LatticeSpec, kernel) -> np.ndarray:
    """Embedded ``16N x 16N`` matrix of an in-place kernel on ``(12, ny, nx, B)`` arrays."""
    dim = N_COMPONENTS * lattice.n_sites
    a = np.eye(dim, dtype=np.complex128).reshape(N_COMPONENTS, lattice.ny, lattice.nx, dim)
    kernel(a)
    return embed_operator(lattice, a.reshape(dim, dim))


def stream_matrix(lattice: LatticeSpec, pair, axis: str, direction: int) -> np.ndarray:
    return lattice_matrix(lattice, lambda a: _stream(a, pair, axis, direction))


def kinetic_matrix(lattice: LatticeSpec, axis: str, theta: float) -> np.ndarray:
    return lattice_matrix(lattice, lambda a: _kinetic(a, axis, theta))


def plasma_matrix(lattice: LatticeSpec, species: str, profile: PlasmaProfile, dt: float,
                  scale: float = 1.0) -> np.ndarray:
    omega = profile.omega_pi if species == "ion" else profile.omega_pe
    return lattice_matrix(lattice, lambda a: _plasma(a, species, scale * omega * dt))


def step_matrix(lattice: LatticeSpec, profile: PlasmaProfile, params: StepParams) -> np.ndarray:
    return lattice_matrix(lattice, lambda a: _step(a, profile, params))


def select_matrix(phi: float, lattice: LatticeSpec) -> np.ndarray:
    """``diag(K_z, K_z^dagger)`` with the ancilla as the most significant qubit."""
    n = N_COIN_STATES * lattice.n_sites
    kz = np.ones(n, dtype=np.complex128)
    cur = np.zeros(n, dtype=bool)
    for j in range(6, 12):
        cur[COIN_INDEX[j] * lattice.n_sites:(COIN_INDEX[j] + 1) * lattice.n_sites] = True
    kz[cur] = np.exp(-0.5j * phi)
    return np.diag(np.concatenate([kz, kz.conj()]))


def lcu_matrix(phi: float, lattice: LatticeSpec) -> np.ndarray:
    """Block form ``[[A, B], [B, A]]`` with ``A = (K_z + K_z^dag)/2``, ``B = (K_z - K_z^dag)/2``."""
    d = np.diag(select_matrix(phi, lattice))
    half = d.size // 2
    kz, kzd = d[:half], d[half:]
    A, B = np.diag(0.5 * (kz + kzd)), np.diag(0.5 * (kz - kzd))
    return np.block([[A, B], [B, A]])


def lattice_for_register(n_p: int, n_px: int | None = None, delta: float | None = None) -> LatticeSpec:
    n_px = n_p - n_p // 2 if n_px is None else n_px
    return LatticeSpec(n_px, n_p - n_px, 1.0 / (1 << n_px) if delta is None else delta)


def reference_matrix(circuit: GateCircuit, lattice: LatticeSpec | None = None,
                     profile: PlasmaProfile | None = None, params: StepParams | None = None) -> np.ndarray:
    """Dense operator named by ``circuit.metadata['operator']``.

    Lattice operators take their lattice from the arguments or, failing
    that, from ``n_px``/``n_py``/``delta`` metadata; profile-dependent ones
    (``qla_step``, ``plasma_*``) need ``profile`` and ``params``.
    """
    meta = circuit.metadata
    op = meta.get("operator")
    if op is None:
        raise ValueError("circuit has no 'operator' metadata")
    if op in ("increment", "decrement"):
        return increment_matrix(int(meta["bits"]), 1 if op == "increment" else -1)
    if op == "two_level_ry":
        b1, b2 = (int(s, 2) for s in meta["states"].split(","))
        sign = 1.0 if meta.get("variant", "RY") == "RY" else -1.0
        return two_level_matrix(b1, b2, sign * float(meta["angle"]))
    if op in ("coin_x", "coin_y"):
        return coin_matrix(op[-1], float(meta["angle"]), bool(int(meta.get("adjoint", "0"))))
    if op == "cyclotron":
        return cyclotron_matrix(float(meta["theta_ci"]), float(meta["theta_ce"]))

    has_ancilla = op in ("select", "lcu")
    if lattice is None:
        n_p = circuit.n_qubits - 4 - int(has_ancilla)
        lattice = lattice_for_register(n_p, int(meta["n_px"]) if "n_px" in meta else None,
                                       float(meta["delta"]) if "delta" in meta else None)
    if op == "stream":
        pair = tuple(int(v) for v in meta["pair"].split(","))
        return stream_matrix(lattice, pair, meta["axis"], int(meta["direction"]))
    if op in ("U_X", "U_Y"):
        return kinetic_matrix(lattice, op[-1].lower(), float(meta["theta"]))
    if op in ("select", "lcu"):
        mat = select_matrix if op == "select" else lcu_matrix
        return mat(float(meta["phi"]), lattice)
    if op in ("qla_step", "plasma_ion", "plasma_electron"):
        if profile is None or params is None:
            raise ValueError(f"operator {op!r} needs a profile and step parameters")
        if op == "qla_step":
            return step_matrix(lattice, profile, params)
        return plasma_matrix(lattice, op.split("_")[1], profile, params.dt, params.potential_scale)
    raise ValueError(f"no dense reference for operator {op!r}")

