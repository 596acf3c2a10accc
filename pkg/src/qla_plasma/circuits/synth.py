"""Circuit synthesis for the QLA step, its potentials and the LCU select.

Qubit layout of a full register (see :class:`QubitLayout`)::

    0 .. n_px-1            x position bits, least significant first
    n_px .. n_p-1          y position bits, least significant first
    n_p .. n_p+3           coin bits 0..3 (coin bit 3 is the leftmost character)
    n_p+4                  LCU ancilla (optional)

so the basis index is ``p + N * c + 16 N * a``, the same ordering as
:meth:`FieldState.to_coin_vector`.

Two-level rotations between coin states ``b1`` and ``b2`` are built by Gray
routing: fully coin-controlled X swaps carry ``|b1>`` next to ``|b2>``, a
multi-controlled ``R_y`` acts on the single differing bit, and the swaps are
undone.  Streaming reuses the routing to bring its component pair onto one
coin bit so a single coin-controlled incrementer shifts both.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..lattice import COIN_INDEX, COIN_STATES, LatticeSpec, PlasmaProfile
from ..operators import (COIN_ROTATIONS, CYCLOTRON_PAIRS, KINETIC_SEQUENCE, PLASMA_PAIRS,
                         STREAM_PAIRS, StepParams)
from .ir import Gate, GateCircuit

COIN_QUBITS = (0, 1, 2, 3)


@dataclass(frozen=True)
class QubitLayout:
    n_px: int
    n_py: int
    ancilla: bool = False

    @classmethod
    def from_lattice(cls, lattice: LatticeSpec, ancilla: bool = False) -> QubitLayout:
        return cls(lattice.n_px, lattice.n_py, ancilla)

    @property
    def n_p(self) -> int:
        return self.n_px + self.n_py

    @property
    def coin(self) -> tuple[int, int, int, int]:
        return tuple(self.n_p + k for k in range(4))

    @property
    def ancilla_qubit(self) -> int:
        if not self.ancilla:
            raise ValueError("layout has no ancilla")
        return self.n_p + 4

    @property
    def n_qubits(self) -> int:
        return self.n_p + 4 + int(self.ancilla)

    def axis_bits(self, axis: str) -> tuple[int, ...]:
        if axis == "x":
            return tuple(range(self.n_px))
        if axis == "y":
            return tuple(range(self.n_px, self.n_p))
        raise ValueError(f"axis must be 'x' or 'y', got {axis!r}")

    @property
    def position(self) -> tuple[int, ...]:
        return tuple(range(self.n_p))

    def embed(self, coin_circuit: GateCircuit) -> GateCircuit:
        """Lift a 4-qubit coin circuit into this register."""
        if coin_circuit.n_qubits != 4:
            raise ValueError("expected a 4-qubit coin circuit")
        return coin_circuit.remap(dict(zip(COIN_QUBITS, self.coin)), self.n_qubits)


def _coin_value(state) -> int:
    if isinstance(state, str):
        if len(state) != 4 or set(state) - {"0", "1"}:
            raise ValueError(f"coin state must be a 4-bit string, got {state!r}")
        return int(state, 2)
    value = int(state)
    if not 0 <= value < 16:
        raise ValueError(f"coin state {value} out of range")
    return value


def _check_canonical(*values: int) -> None:
    for v in values:
        if v not in COIN_INDEX:
            raise ValueError(f"coin state {v:04b} is outside the 12-state encoding; "
                             "a rotation there would populate an excluded basis state")


def gray_path(b1: int, b2: int) -> list[int]:
    """Coin states from ``b1`` to ``b2`` flipping one differing bit at a time (low bits first)."""
    path = [b1]
    cur = b1
    for k in range(4):
        if (b1 ^ b2) >> k & 1:
            cur ^= 1 << k
            path.append(cur)
    return path


def _fixed_controls(value: int, skip: int, coin) -> tuple[tuple[int, int], ...]:
    return tuple((coin[k], value >> k & 1) for k in range(4) if k != skip)


def _swap_gate(a: int, b: int, coin) -> Gate:
    bit = (a ^ b).bit_length() - 1
    return Gate("X", coin[bit], 0.0, _fixed_controls(a, bit, coin))


def _routed(b1: int, b2: int, coin, core) -> list[Gate]:
    """Route ``|b1>`` next to ``|b2>``, emit ``core(target, controls, flipped)``, unroute.

    ``flipped`` is True when the routed copy of ``b1`` has the target bit
    set, i.e. the pair is ordered ``(|1>, |0>)`` on the target qubit.
    """
    if b1 == b2:
        raise ValueError("two-level operation needs distinct states")
    path = gray_path(b1, b2)
    route = [_swap_gate(path[i], path[i + 1], coin) for i in range(len(path) - 2)]
    last, end = path[-2], path[-1]
    bit = (last ^ end).bit_length() - 1
    body = core(coin[bit], _fixed_controls(last, bit, coin), bool(last >> bit & 1))
    return route + list(body) + route[::-1]


def _two_level_gates(b1: int, b2: int, angle: float, coin, extra=()) -> list[Gate]:
    """Gates for ``R(angle) = [[c, -s], [s, c]]`` on ``(|b1>, |b2>)``."""
    if angle == 0:
        return []

    def core(t, ctrl, flipped):
        return [Gate("RY", t, (-2.0 if flipped else 2.0) * angle, ctrl + tuple(extra))]
    return _routed(b1, b2, coin, core)


def synth_two_level_ry(coin_states, angle: float, variant: str = "RY") -> GateCircuit:
    """Four-qubit circuit of a two-level rotation between two canonical coin states.

    ``angle`` is the two-level rotation angle: ``|b1> -> cos(angle)|b1> +
    sin(angle)|b2>``, which is ``R_y(2 angle)`` on the pair.  The ``"RY~"``
    variant is ``sigma_z R_y sigma_z``, i.e. the angle negated.
    """
    b1, b2 = (_coin_value(s) for s in coin_states)
    _check_canonical(b1, b2)
    if variant not in ("RY", "RY~"):
        raise ValueError(f"variant must be 'RY' or 'RY~', got {variant!r}")
    sign = 1.0 if variant == "RY" else -1.0
    gates = _two_level_gates(b1, b2, sign * angle, COIN_QUBITS)
    return GateCircuit(4, gates, {"operator": "two_level_ry", "angle": repr(float(angle)),
                                  "states": f"{b1:04b},{b2:04b}", "variant": variant})


def _pair_states(i: int, j: int) -> tuple[int, int]:
    return COIN_INDEX[i], COIN_INDEX[j]


def coin_gates(axis: str, angle: float, adjoint: bool, coin) -> list[Gate]:
    sign = -1.0 if adjoint else 1.0
    gates: list[Gate] = []
    for i, j, s in COIN_ROTATIONS[axis]:
        gates += _two_level_gates(*_pair_states(i, j), sign * s * angle, coin)
    return gates


def synth_coin(axis: str, angle: float, adjoint: bool = False) -> GateCircuit:
    axis = axis.lower()
    if axis not in COIN_ROTATIONS:
        raise ValueError(f"axis must be 'X' or 'Y', got {axis!r}")
    return GateCircuit(4, coin_gates(axis, angle, adjoint, COIN_QUBITS),
                       {"operator": f"coin_{axis}", "angle": repr(float(angle)), "adjoint": str(int(adjoint))})


def cyclotron_gates(theta_ci: float, theta_ce: float, coin) -> list[Gate]:
    return (_two_level_gates(*_pair_states(*CYCLOTRON_PAIRS["ion"]), theta_ci, coin)
            + _two_level_gates(*_pair_states(*CYCLOTRON_PAIRS["electron"]), theta_ce, coin))


def synth_cyclotron(theta_ci: float, theta_ce: float) -> GateCircuit:
    return GateCircuit(4, cyclotron_gates(theta_ci, theta_ce, COIN_QUBITS),
                       {"operator": "cyclotron", "theta_ci": repr(float(theta_ci)),
                        "theta_ce": repr(float(theta_ce))})


# -- position register ----------------------------------------------------------

def increment_gates(bits, direction: int = 1, controls=()) -> list[Gate]:
    """``|p> -> |p +- 1 mod 2^n>`` on ``bits`` (least significant first)."""
    if direction not in (1, -1):
        raise ValueError(f"direction must be +1 or -1, got {direction}")
    bits = tuple(bits)
    gates = [Gate("X", bits[k], 0.0, tuple((b, 1) for b in bits[:k]) + tuple(controls))
             for k in range(len(bits) - 1, -1, -1)]
    return gates if direction == 1 else gates[::-1]


def synth_increment(n_bits: int, direction: int = 1) -> GateCircuit:
    if n_bits < 1:
        raise ValueError(f"n_bits must be >= 1, got {n_bits}")
    return GateCircuit(n_bits, increment_gates(range(n_bits), direction),
                       {"operator": "increment" if direction == 1 else "decrement", "bits": str(n_bits)})


def stream_gates(layout: QubitLayout, pair, axis: str, direction: int) -> list[Gate]:
    """Shift components ``pair`` by one site: route them onto one coin bit, one controlled incrementer."""
    b1, b2 = _pair_states(*pair)
    bits = layout.axis_bits(axis)

    def core(t, ctrl, flipped):
        return increment_gates(bits, direction, ctrl)
    return _routed(b1, b2, layout.coin, core)


def synth_stream(layout: QubitLayout, pair, axis: str, direction: int) -> GateCircuit:
    return GateCircuit(layout.n_qubits, stream_gates(layout, pair, axis, direction),
                       {"operator": "stream", "pair": f"{pair[0]},{pair[1]}", "axis": axis,
                        "direction": str(direction)})


def kinetic_gates(layout: QubitLayout, axis: str, theta: float) -> list[Gate]:
    if theta == 0:
        return []
    pairs = STREAM_PAIRS[axis]
    gates: list[Gate] = []
    for op in KINETIC_SEQUENCE:
        if op[0] == "coin":
            gates += coin_gates(axis, theta, op[1], layout.coin)
        else:
            gates += stream_gates(layout, pairs[op[1]], axis, op[2])
    return gates


def synth_kinetic(layout: QubitLayout, axis: str, params: StepParams) -> GateCircuit:
    return GateCircuit(layout.n_qubits, kinetic_gates(layout, axis, params.theta),
                       {"operator": f"U_{axis.upper()}", "theta": repr(params.theta)})


def walsh_gray_angles(alpha: np.ndarray) -> np.ndarray:
    """Angles ``theta_i`` of a uniformly controlled rotation with per-control-value angles ``alpha``.

    ``alpha_j = sum_i (-1)^{popcount(j & g_i)} theta_i`` with Gray code
    ``g_i = i ^ (i >> 1)``, so ``theta = W alpha / 2^k`` read in Gray order.
    """
    a = np.array(alpha, dtype=np.float64)
    n = a.size
    if n & (n - 1):
        raise ValueError("need a power-of-two number of angles")
    h = 1
    while h < n:
        a = a.reshape(-1, 2, h)
        a = np.stack([a[:, 0] + a[:, 1], a[:, 0] - a[:, 1]], axis=1).reshape(-1)
        h *= 2
    gray = np.arange(n) ^ (np.arange(n) >> 1)
    return a[gray] / n


def _multiplexed_ry(layout: QubitLayout, t: int, ctrl, alpha: np.ndarray) -> list[Gate]:
    """Uniformly position-controlled ``R_y(alpha[p])`` on ``t``, conditioned on ``ctrl``.

    The CNOTs from position bits are not coin-controlled: over the full Gray
    cycle they multiply to the identity, so coin states outside ``ctrl`` see
    no net action.
    """
    k = layout.n_p
    n = 1 << k
    theta = walsh_gray_angles(alpha)
    gray = np.arange(n) ^ (np.arange(n) >> 1)
    gates = []
    for i in range(n):
        gates.append(Gate("RY", t, float(theta[i]), ctrl))
        changed = int(gray[i] ^ gray[(i + 1) % n])
        gates.append(Gate("X", t, 0.0, ((layout.position[changed.bit_length() - 1], 1),)))
    return gates


def plasma_gates(layout: QubitLayout, species: str, angles: np.ndarray, mode: str,
                 background: float | None = None, support=None) -> list[Gate]:
    """Per-site rotations ``R(angles[p])`` on the three field/current pairs of ``species``."""
    if species not in PLASMA_PAIRS:
        raise ValueError(f"species must be 'ion' or 'electron', got {species!r}")
    angles = np.asarray(angles, dtype=np.float64).reshape(-1)
    if angles.size != 1 << layout.n_p:
        raise ValueError(f"{angles.size} angles for a {1 << layout.n_p}-site register")
    if not np.any(angles):
        return []
    if mode == "sparse" and (background is None or support is None):
        values, counts = np.unique(angles, return_counts=True)
        background = float(values[np.argmax(counts)])
        support = np.flatnonzero(angles != background)
    gates: list[Gate] = []
    for i, j in PLASMA_PAIRS[species]:
        b1, b2 = _pair_states(i, j)
        if mode == "dense":
            def core(t, ctrl, flipped):
                return _multiplexed_ry(layout, t, ctrl, (-2.0 if flipped else 2.0) * angles)
        elif mode == "sparse":
            bg = float(background)
            sites = [p for p in support if angles[p] != bg]

            def core(t, ctrl, flipped, bg=bg, sites=sites):
                s = -2.0 if flipped else 2.0
                out = [Gate("RY", t, s * bg, ctrl)] if bg else []
                for p in sites:
                    pos = tuple((q, p >> q & 1) for q in layout.position)
                    out.append(Gate("RY", t, s * (angles[p] - bg), ctrl + pos))
                return out
        else:
            raise ValueError(f"mode must be 'dense' or 'sparse', got {mode!r}")
        gates += _routed(b1, b2, layout.coin, core)
    return gates


def _species_background(profile: PlasmaProfile, species: str):
    (bg_pi, bg_pe), support = profile.background_and_support()
    return (bg_pi if species == "ion" else bg_pe), support


def synth_plasma_potential(species: str, profile: PlasmaProfile, dt: float, mode: str = "dense",
                           layout: QubitLayout | None = None, scale: float = 1.0) -> GateCircuit:
    """Position-controlled plasma rotations, multiplexed over all sites or over the support only."""
    if layout is None:
        n = profile.n_sites
        n_p = int(round(np.log2(n)))
        if 1 << n_p != n or n_p < 2:
            raise ValueError("give a layout for this profile")
        layout = QubitLayout(n_p - n_p // 2, n_p // 2)
    omega = profile.omega_pi if species == "ion" else profile.omega_pe
    angles = scale * omega * dt
    bg, support = _species_background(profile, species)
    gates = plasma_gates(layout, species, angles, mode, scale * bg * dt, support)
    return GateCircuit(layout.n_qubits, gates, {"operator": f"plasma_{species}", "mode": mode})


def step_gates(layout: QubitLayout, profile: PlasmaProfile, params: StepParams, mode: str = "sparse") -> list[Gate]:
    coin = layout.coin
    gates = kinetic_gates(layout, "x", params.theta) + kinetic_gates(layout, "y", params.theta)
    gates += cyclotron_gates(*params.cyclotron_angles(profile), coin)
    for species in ("ion", "electron"):
        bg, support = _species_background(profile, species)
        gates += plasma_gates(layout, species, params.plasma_angles(profile, species), mode,
                              params.potential_scale * bg * params.dt, support)
    return gates


def synth_qla_step(layout: QubitLayout, profile: PlasmaProfile, params: StepParams,
                   mode: str = "sparse") -> GateCircuit:
    if profile.n_sites != 1 << layout.n_p:
        raise ValueError(f"profile has {profile.n_sites} sites, layout has {1 << layout.n_p}")
    return GateCircuit(layout.n_qubits, step_gates(layout, profile, params, mode),
                       {"operator": "qla_step", "mode": mode})


# -- dissipation ----------------------------------------------------------------

def current_block_controls(coin) -> list[tuple[tuple[int, int], ...]]:
    """Control patterns whose union is exactly the coin states of components 6..11."""
    return [((coin[3], 1), (coin[2], 1)),
            ((coin[3], 1), (coin[2], 0), (coin[1], 1))]


def select_gates(phi: float, layout: QubitLayout) -> list[Gate]:
    if phi == 0:
        return []
    a = layout.ancilla_qubit
    return [Gate("RZ", a, phi, ctrl) for ctrl in current_block_controls(layout.coin)]


def synth_select(params, lattice_or_layout) -> GateCircuit:
    """``|0><0| K_z + |1><1| K_z^dagger``: ancilla ``R_z(phi)`` gated on the current block."""
    layout = _with_ancilla(lattice_or_layout)
    return GateCircuit(layout.n_qubits, select_gates(params.phi, layout),
                       {"operator": "select", "phi": repr(params.phi)})


def synth_lcu(params, lattice_or_layout) -> GateCircuit:
    """``(H (x) I) select (H (x) I)``; the ancilla-0 block is ``K``."""
    layout = _with_ancilla(lattice_or_layout)
    h = Gate("H", layout.ancilla_qubit)
    return GateCircuit(layout.n_qubits, [h] + select_gates(params.phi, layout) + [h],
                       {"operator": "lcu", "phi": repr(params.phi)})


def _with_ancilla(obj) -> QubitLayout:
    if isinstance(obj, LatticeSpec):
        return QubitLayout.from_lattice(obj, ancilla=True)
    if isinstance(obj, QubitLayout):
        return QubitLayout(obj.n_px, obj.n_py, True)
    raise TypeError("expected LatticeSpec or QubitLayout")


def coin_state_label(component: int) -> str:
    return COIN_STATES[component]
