"""Lattice geometry, the 12-component plasma field encoding and its diagnostics.

The field state is stored component-major as a complex array of shape
``(12, N)`` where the site index is row-major, ``p = p_y * N_x + p_x``.
Components are ordered

    E_x, E_y, E_z, H_x, H_y, H_z, J_cix, J_ciy, J_ciz, J_cex, J_cey, J_cez

and component ``j`` is carried by the 4-qubit coin basis state
``COIN_STATES[j]`` (leftmost character is the most significant coin qubit).
The four coin states outside that set never carry amplitude.

All quantities are in lattice units with ``c = eps0 = mu0 = 1`` unless the
caller passes explicit ``eps0``/``mu0``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

N_COMPONENTS = 12
N_COIN_STATES = 16

COMPONENT_NAMES = (
    "E_x", "E_y", "E_z",
    "H_x", "H_y", "H_z",
    "J_cix", "J_ciy", "J_ciz",
    "J_cex", "J_cey", "J_cez",
)

COIN_STATES = (
    "0000", "0100", "0101", "0110",
    "1000", "1001", "1010", "1011",
    "1100", "1101", "1110", "1111",
)
COIN_INDEX = tuple(int(b, 2) for b in COIN_STATES)
EXCLUDED_COIN_INDEX = tuple(sorted(set(range(N_COIN_STATES)) - set(COIN_INDEX)))

FIELD_COMPONENTS = tuple(range(0, 6))
CURRENT_COMPONENTS = tuple(range(6, 12))
ION_CURRENT = (6, 7, 8)
ELECTRON_CURRENT = (9, 10, 11)


@dataclass(frozen=True)
class LatticeSpec:
    """Periodic ``2**n_px x 2**n_py`` lattice with spacing ``delta``."""

    n_px: int
    n_py: int
    delta: float
    origin_x: float = 0.0
    origin_y: float = 0.0

    def __post_init__(self) -> None:
        if int(self.n_px) != self.n_px or self.n_px < 1:
            raise ValueError(f"n_px must be an integer >= 1, got {self.n_px}")
        if int(self.n_py) != self.n_py or self.n_py < 1:
            raise ValueError(f"n_py must be an integer >= 1, got {self.n_py}")
        if not (np.isfinite(self.delta) and self.delta > 0):
            raise ValueError(f"delta must be > 0, got {self.delta}")

    @property
    def nx(self) -> int:
        return 1 << self.n_px

    @property
    def ny(self) -> int:
        return 1 << self.n_py

    @property
    def n_sites(self) -> int:
        return self.nx * self.ny

    @property
    def n_p(self) -> int:
        """Number of position qubits."""
        return self.n_px + self.n_py

    @property
    def length_x(self) -> float:
        return self.nx * self.delta

    @property
    def length_y(self) -> float:
        return self.ny * self.delta

    def site_index(self, px, py):
        return np.asarray(py) * self.nx + np.asarray(px)

    def site_coords(self, p):
        """Return ``(p_x, p_y)`` for site index ``p``."""
        p = np.asarray(p)
        return p % self.nx, p // self.nx

    def coordinates(self) -> tuple[np.ndarray, np.ndarray]:
        """Physical ``(x, y)`` of every site, each of shape ``(N,)``."""
        px, py = self.site_coords(np.arange(self.n_sites))
        return self.origin_x + px * self.delta, self.origin_y + py * self.delta


@dataclass
class FieldState:
    """Encoded plasma state ``psi[j, p]`` on a lattice."""

    lattice: LatticeSpec
    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        amps = np.asarray(self.amplitudes, dtype=np.complex128)
        expected = (N_COMPONENTS, self.lattice.n_sites)
        if amps.shape != expected:
            raise ValueError(f"amplitudes must have shape {expected}, got {amps.shape}")
        if not np.all(np.isfinite(amps)):
            raise ValueError("amplitudes contain non-finite values")
        self.amplitudes = amps

    @classmethod
    def zeros(cls, lattice: LatticeSpec) -> FieldState:
        return cls(lattice, np.zeros((N_COMPONENTS, lattice.n_sites), dtype=np.complex128))

    @classmethod
    def random(cls, lattice: LatticeSpec, rng: np.random.Generator | int | None = None,
               normalize: bool = True) -> FieldState:
        rng = np.random.default_rng(rng)
        shape = (N_COMPONENTS, lattice.n_sites)
        amps = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
        if normalize:
            amps /= np.sqrt(np.sum(np.abs(amps) ** 2))
        return cls(lattice, amps)

    def copy(self) -> FieldState:
        return FieldState(self.lattice, self.amplitudes.copy())

    def grid(self) -> np.ndarray:
        """View of the amplitudes with shape ``(12, N_y, N_x)``."""
        return self.amplitudes.reshape(N_COMPONENTS, self.lattice.ny, self.lattice.nx)

    def to_coin_vector(self) -> np.ndarray:
        """Lift to the ``16 * N`` quantum state vector (coin register most significant)."""
        n = self.lattice.n_sites
        vec = np.zeros(N_COIN_STATES * n, dtype=np.complex128)
        vec[coin_embedding_indices(self.lattice)] = self.amplitudes.reshape(-1)
        return vec

    @classmethod
    def from_coin_vector(cls, lattice: LatticeSpec, vec: np.ndarray, atol: float = 1e-12) -> FieldState:
        """Project a ``16 * N`` vector back onto the 12-component encoding.

        Raises if any excluded coin basis state carries amplitude above ``atol``.
        """
        vec = np.asarray(vec, dtype=np.complex128)
        n = lattice.n_sites
        if vec.shape != (N_COIN_STATES * n,):
            raise ValueError(f"coin vector must have length {N_COIN_STATES * n}, got {vec.shape}")
        leak = excluded_population(lattice, vec)
        if leak > atol:
            raise ValueError(f"excluded coin basis states populated (max |amp| = {leak:.3e})")
        return cls(lattice, vec[coin_embedding_indices(lattice)].reshape(N_COMPONENTS, n))


def coin_embedding_indices(lattice: LatticeSpec) -> np.ndarray:
    """Index into the ``16 * N`` vector for each flattened ``(j, p)`` of a FieldState."""
    n = lattice.n_sites
    coin = np.asarray(COIN_INDEX)[:, None]
    return (coin * n + np.arange(n)[None, :]).reshape(-1)


def excluded_population(lattice: LatticeSpec, vec: np.ndarray) -> float:
    n = lattice.n_sites
    blocks = np.asarray(vec).reshape(N_COIN_STATES, n, *np.shape(vec)[1:])
    excluded = blocks[list(EXCLUDED_COIN_INDEX)]
    return float(np.max(np.abs(excluded))) if excluded.size else 0.0


def embed_operator(lattice: LatticeSpec, op: np.ndarray) -> np.ndarray:
    """Embed a ``12N x 12N`` operator into ``16N`` dims, identity on excluded coin states."""
    n = lattice.n_sites
    dim = N_COIN_STATES * n
    out = np.eye(dim, dtype=np.complex128)
    idx = coin_embedding_indices(lattice)
    out[np.ix_(idx, idx)] = op
    return out


@dataclass
class PlasmaProfile:
    """Per-site plasma frequencies plus homogeneous cyclotron and collision rates.

    ``background`` and ``support`` describe a localized inhomogeneity: every
    site outside ``support`` carries exactly the background pair
    ``(omega_pi, omega_pe)``.  When not given they are inferred from the
    most frequent value pair.
    """

    omega_pi: np.ndarray
    omega_pe: np.ndarray
    omega_ci: float = 0.0
    omega_ce: float = 0.0
    nu: float = 0.0
    background: tuple[float, float] | None = None
    support: tuple[int, ...] | None = field(default=None)

    def __post_init__(self) -> None:
        self.omega_pi = np.asarray(self.omega_pi, dtype=np.float64).reshape(-1)
        self.omega_pe = np.asarray(self.omega_pe, dtype=np.float64).reshape(-1)
        if self.omega_pi.shape != self.omega_pe.shape:
            raise ValueError("omega_pi and omega_pe must have the same number of sites")
        for name in ("omega_pi", "omega_pe"):
            arr = getattr(self, name)
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains non-finite values")
            if np.any(arr < 0):
                site = int(np.flatnonzero(arr < 0)[0])
                raise ValueError(f"{name} must be >= 0 (site {site} has {arr[site]})")
        if not (np.isfinite(self.omega_ci) and np.isfinite(self.omega_ce)):
            raise ValueError("cyclotron frequencies must be finite")
        if not np.isfinite(self.nu) or self.nu < 0:
            raise ValueError(f"collision frequency nu must satisfy nu >= 0, got {self.nu}")
        self.omega_ci = float(self.omega_ci)
        self.omega_ce = float(self.omega_ce)
        self.nu = float(self.nu)
        if self.support is not None:
            self.support = tuple(sorted(int(p) for p in self.support))

    @classmethod
    def uniform(cls, lattice: LatticeSpec, omega_pi: float = 0.0, omega_pe: float = 0.0,
                omega_ci: float = 0.0, omega_ce: float = 0.0, nu: float = 0.0) -> PlasmaProfile:
        n = lattice.n_sites
        return cls(np.full(n, float(omega_pi)), np.full(n, float(omega_pe)), omega_ci, omega_ce, nu,
                   background=(float(omega_pi), float(omega_pe)), support=())

    @classmethod
    def vacuum(cls, lattice: LatticeSpec) -> PlasmaProfile:
        return cls.uniform(lattice)

    @property
    def n_sites(self) -> int:
        return self.omega_pi.size

    @property
    def is_uniform(self) -> bool:
        return bool(np.all(self.omega_pi == self.omega_pi[0]) and np.all(self.omega_pe == self.omega_pe[0]))

    def background_and_support(self) -> tuple[tuple[float, float], tuple[int, ...]]:
        if self.background is not None and self.support is not None:
            return self.background, self.support
        pairs = np.stack([self.omega_pi, self.omega_pe], axis=1)
        values, inverse, counts = np.unique(pairs, axis=0, return_inverse=True, return_counts=True)
        best = int(np.argmax(counts))
        bg = (float(values[best, 0]), float(values[best, 1]))
        support = tuple(int(p) for p in np.flatnonzero(inverse.reshape(-1) != best))
        return bg, support

    def with_(self, **changes) -> PlasmaProfile:
        data = dict(omega_pi=self.omega_pi, omega_pe=self.omega_pe, omega_ci=self.omega_ci,
                    omega_ce=self.omega_ce, nu=self.nu, background=self.background, support=self.support)
        data.update(changes)
        return PlasmaProfile(**data)


def _check_sites(arr, name: str, n: int) -> np.ndarray:
    arr = np.asarray(arr)
    if arr.shape != (3, n):
        raise ValueError(f"{name} must have shape (3, {n}), got {arr.shape}")
    return arr


def encode_fields(E, H, J_ci, J_ce, profile: PlasmaProfile, lattice: LatticeSpec,
                  eps0: float = 1.0, mu0: float = 1.0) -> FieldState:
    """Scale physical fields and currents into the encoded state.

    ``psi = (sqrt(eps0) E, sqrt(mu0) H, J_ci / (sqrt(eps0) w_pi), J_ce / (sqrt(eps0) w_pe))``.
    A nonzero current at a site with vanishing plasma frequency is rejected.
    """
    n = lattice.n_sites
    if profile.n_sites != n:
        raise ValueError(f"profile has {profile.n_sites} sites, lattice has {n}")
    E, H, J_ci, J_ce = (_check_sites(a, nm, n) for a, nm in
                        ((E, "E"), (H, "H"), (J_ci, "J_ci"), (J_ce, "J_ce")))
    amps = np.zeros((N_COMPONENTS, n), dtype=np.complex128)
    amps[0:3] = np.sqrt(eps0) * E
    amps[3:6] = np.sqrt(mu0) * H
    for block, J, omega, label in ((slice(6, 9), J_ci, profile.omega_pi, "omega_pi"),
                                   (slice(9, 12), J_ce, profile.omega_pe, "omega_pe")):
        bad = (omega == 0) & np.any(J != 0, axis=0)
        if np.any(bad):
            site = int(np.flatnonzero(bad)[0])
            raise ValueError(f"nonzero current at site {site} where {label} = 0")
        safe = np.where(omega > 0, omega, 1.0)
        amps[block] = np.where(omega > 0, J / (np.sqrt(eps0) * safe), 0.0)
    return FieldState(lattice, amps)


def decode_fields(state: FieldState, profile: PlasmaProfile, eps0: float = 1.0, mu0: float = 1.0):
    """Inverse of :func:`encode_fields`; returns ``(E, H, J_ci, J_ce)``, each ``(3, N)``."""
    if profile.n_sites != state.lattice.n_sites:
        raise ValueError(f"profile has {profile.n_sites} sites, state has {state.lattice.n_sites}")
    a = state.amplitudes
    E = a[0:3] / np.sqrt(eps0)
    H = a[3:6] / np.sqrt(mu0)
    J_ci = a[6:9] * np.sqrt(eps0) * profile.omega_pi
    J_ce = a[9:12] * np.sqrt(eps0) * profile.omega_pe
    return E, H, J_ci, J_ce


def norm_squared(state: FieldState) -> float:
    a = state.amplitudes
    return float(np.sum(a.real * a.real + a.imag * a.imag))


def current_fraction(state: FieldState) -> float:
    """Share of the squared norm held by the current components (0 for a zero state)."""
    a = state.amplitudes
    total = norm_squared(state)
    if total == 0:
        return 0.0
    cur = a[6:12]
    return float(np.sum(cur.real * cur.real + cur.imag * cur.imag)) / total


def energy(state: FieldState, lattice: LatticeSpec | None = None) -> float:
    """Discretized field plus kinetic energy, ``delta**2 * sum |psi|**2``."""
    lattice = state.lattice if lattice is None else lattice
    return lattice.delta ** 2 * norm_squared(state)


def make_gaussian_blob_profile(lattice: LatticeSpec, background_pi: float, background_pe: float,
                               blob_center: tuple[float, float], blob_sigma: float,
                               blob_amplitude_pi: float, blob_amplitude_pe: float,
                               support_radius: float, omega_ci: float = 0.0, omega_ce: float = 0.0,
                               nu: float = 0.0) -> PlasmaProfile:
    """Uniform background with a Gaussian density blob truncated at ``support_radius``."""
    if not blob_sigma > 0:
        raise ValueError(f"blob_sigma must be > 0, got {blob_sigma}")
    if not support_radius >= 0:
        raise ValueError(f"support_radius must be >= 0, got {support_radius}")
    x, y = lattice.coordinates()
    r2 = (x - blob_center[0]) ** 2 + (y - blob_center[1]) ** 2
    inside = r2 <= support_radius ** 2
    if blob_amplitude_pi == 0 and blob_amplitude_pe == 0:
        inside = np.zeros_like(inside)
    bump = np.where(inside, np.exp(-r2 / (2.0 * blob_sigma ** 2)), 0.0)
    omega_pi = background_pi + blob_amplitude_pi * bump
    omega_pe = background_pe + blob_amplitude_pe * bump
    for name, arr in (("omega_pi", omega_pi), ("omega_pe", omega_pe)):
        if np.any(arr < 0):
            site = int(np.flatnonzero(arr < 0)[0])
            raise ValueError(f"blob makes {name} negative at site {site} ({arr[site]:.6g})")
    omega_pi = np.where(inside, omega_pi, background_pi)
    omega_pe = np.where(inside, omega_pe, background_pe)
    return PlasmaProfile(omega_pi, omega_pe, omega_ci, omega_ce, nu,
                         background=(float(background_pi), float(background_pe)),
                         support=tuple(int(p) for p in np.flatnonzero(inside)))
