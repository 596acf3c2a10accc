"""Reference generator, exact evolution, dispersion and convergence checks.

The discrete plasma-Dirac generator acts on the ``(12, N)`` state as

    H = i (gamma_x D_x + gamma_y D_y)  on the field block,   gamma_i = sigma_y (x) S_i
      + V(r)                            (plasma and cyclotron couplings)
      - i nu P_J                        (collisional damping of the currents)

so that ``d psi / dt = -i H psi``.  ``D_x``/``D_y`` are periodic central
differences by default, or spectral derivatives.  Everything here is an
independent transcription used to check :mod:`qla_plasma.operators`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.linalg import expm
from scipy.sparse.linalg import expm_multiply

from .lattice import N_COMPONENTS, FieldState, LatticeSpec, PlasmaProfile, norm_squared

DENSE_CAP = 3072

# Spin-1 matrices (S_i)_{jk} = -i eps_{ijk} and the Pauli matrices.
SPIN1 = np.zeros((3, 3, 3), dtype=np.complex128)
for _i, _j, _k, _s in ((0, 1, 2, 1), (1, 2, 0, 1), (2, 0, 1, 1), (0, 2, 1, -1), (1, 0, 2, -1), (2, 1, 0, -1)):
    SPIN1[_i, _j, _k] = -1j * _s
S_X, S_Y, S_Z = SPIN1
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)
I2 = np.eye(2, dtype=np.complex128)
GAMMA_X = np.kron(SIGMA_Y, S_X)
GAMMA_Y = np.kron(SIGMA_Y, S_Y)
GAMMA_Z = np.kron(SIGMA_Y, S_Z)


def potential_matrix(omega_pi: float, omega_pe: float, omega_ci: float = 0.0, omega_ce: float = 0.0) -> np.ndarray:
    """Single-site 12x12 Hermitian potential in block form."""
    V = np.zeros((12, 12), dtype=np.complex128)
    I3 = np.eye(3)
    V[0:3, 6:9] = -1j * omega_pi * I3
    V[6:9, 0:3] = 1j * omega_pi * I3
    V[0:3, 9:12] = -1j * omega_pe * I3
    V[9:12, 0:3] = 1j * omega_pe * I3
    V[6:9, 6:9] = omega_ci * S_Z
    V[9:12, 9:12] = omega_ce * S_Z
    return V


def pauli_terms(omega_pi: float, omega_pe: float, omega_ci: float, omega_ce: float) -> dict[str, np.ndarray]:
    """The four Pauli-structured 12x12 terms whose sum is :func:`potential_matrix`.

    The 12 components are laid out as ``2 x 2 x 3`` (block pair, block pair,
    Cartesian index) with blocks ordered ``E, H, J_i, J_e``.
    """
    I3 = np.eye(3)
    return {
        "pi": 0.5 * np.kron(np.kron(SIGMA_Y, I2 + SIGMA_Z), omega_pi * I3),
        "pe": 0.5 * np.kron(np.kron(SIGMA_X, SIGMA_Y) + np.kron(SIGMA_Y, SIGMA_X), omega_pe * I3),
        "ci": 0.25 * np.kron(np.kron(I2 - SIGMA_Z, I2 + SIGMA_Z), omega_ci * S_Z),
        "ce": 0.25 * np.kron(np.kron(I2 - SIGMA_Z, I2 - SIGMA_Z), omega_ce * S_Z),
    }


def derivative_matrix(n: int, delta: float, scheme: str = "central") -> sp.csr_matrix:
    """Periodic first-derivative matrix on ``n`` points."""
    if scheme == "central":
        if n == 1:
            return sp.csr_matrix((1, 1), dtype=np.complex128)
        if n == 2:
            # The +1 and -1 neighbours coincide: the central difference vanishes.
            return sp.csr_matrix((2, 2), dtype=np.complex128)
        d = sp.diags([np.ones(n - 1), -np.ones(n - 1)], [1, -1], shape=(n, n), format="lil", dtype=np.complex128)
        d[n - 1, 0] = 1.0
        d[0, n - 1] = -1.0
        return (d.tocsr() / (2.0 * delta))
    if scheme == "spectral":
        k = 2.0 * np.pi * np.fft.fftfreq(n, d=delta)
        if n % 2 == 0:
            k[n // 2] = 0.0  # Nyquist mode has no odd derivative
        F = np.fft.fft(np.eye(n), axis=0)
        D = np.fft.ifft(1j * k[:, None] * F, axis=0)
        return sp.csr_matrix(np.where(np.abs(D) < 1e-14, 0.0, D.real).astype(np.complex128))
    raise ValueError(f"unknown derivative scheme {scheme!r}")


@dataclass
class DenseGenerator:
    """Discrete generator ``H`` with ``d psi/dt = -i H psi`` on the flattened ``(12, N)`` state."""

    sparse: sp.csr_matrix
    lattice: LatticeSpec
    profile: PlasmaProfile
    derivative_scheme: str = "central"
    include_dissipation: bool = True
    _dense: np.ndarray | None = field(default=None, repr=False)

    @property
    def dim(self) -> int:
        return self.sparse.shape[0]

    @property
    def matrix(self) -> np.ndarray:
        if self._dense is None:
            if self.dim > DENSE_CAP:
                raise ValueError(f"dense generator of dimension {self.dim} exceeds cap {DENSE_CAP}")
            self._dense = self.sparse.toarray()
        return self._dense

    def hermitian_part(self) -> sp.csr_matrix:
        return ((self.sparse + self.sparse.conj().T) * 0.5).tocsr()

    def antihermitian_part(self) -> sp.csr_matrix:
        return ((self.sparse - self.sparse.conj().T) * 0.5).tocsr()


def build_generator(lattice: LatticeSpec, profile: PlasmaProfile, scheme: str = "central",
                    dissipation: bool = True, max_dim: int | None = DENSE_CAP) -> DenseGenerator:
    """Assemble the generator; ``max_dim=None`` lifts the cap (sparse use only)."""
    n = lattice.n_sites
    dim = N_COMPONENTS * n
    if max_dim is not None and dim > max_dim:
        raise ValueError(f"generator of dimension {dim} exceeds cap {max_dim}")
    if profile.n_sites != n:
        raise ValueError(f"profile has {profile.n_sites} sites, lattice has {n}")
    # Site index p = p_y * N_x + p_x, so x is the fast (right Kronecker) factor.
    Dx = sp.kron(sp.identity(lattice.ny), derivative_matrix(lattice.nx, lattice.delta, scheme))
    Dy = sp.kron(derivative_matrix(lattice.ny, lattice.delta, scheme), sp.identity(lattice.nx))
    H = 1j * (sp.kron(_pad_fields(GAMMA_X), Dx) + sp.kron(_pad_fields(GAMMA_Y), Dy))

    for species, cols, omega in (("ion", slice(6, 9), profile.omega_pi), ("electron", slice(9, 12), profile.omega_pe)):
        W = sp.diags(omega)
        block = sp.lil_matrix((12, 12))
        blockT = sp.lil_matrix((12, 12))
        for a in range(3):
            block[a, cols.start + a] = 1.0
            blockT[cols.start + a, a] = 1.0
        H = H + sp.kron(block, W) * (-1j) + sp.kron(blockT, W) * 1j
    cyc = np.zeros((12, 12), dtype=np.complex128)
    cyc[6:9, 6:9] = profile.omega_ci * S_Z
    cyc[9:12, 9:12] = profile.omega_ce * S_Z
    H = H + sp.kron(cyc, sp.identity(n))
    if dissipation and profile.nu > 0:
        pj = np.zeros(12)
        pj[6:12] = 1.0
        H = H + sp.kron(sp.diags(pj), sp.identity(n)) * (-1j * profile.nu)
    return DenseGenerator(sp.csr_matrix(H, dtype=np.complex128), lattice, profile, scheme, dissipation)


def _pad_fields(gamma: np.ndarray) -> np.ndarray:
    out = np.zeros((12, 12), dtype=np.complex128)
    out[:6, :6] = gamma
    return out


def exact_evolve(state: FieldState, generator: DenseGenerator, T: float, n_samples: int | None = None,
                 norm_tol: float = 1e-10):
    """Evolve by ``exp(-i H T)``.

    With ``n_samples`` the state is returned at ``n_samples`` equally spaced
    times in ``[0, T]`` as an array of shape ``(n_samples, 12, N)``.
    """
    if T < 0:
        raise ValueError(f"T must be >= 0, got {T}")
    if state.lattice.n_sites != generator.lattice.n_sites:
        raise ValueError("state and generator live on different lattices")
    v0 = state.amplitudes.reshape(-1)
    A = (-1j) * generator.sparse
    if n_samples is None:
        out = v0.copy() if T == 0 else expm_multiply(A * T, v0)
        outs = out[None]
    else:
        outs = expm_multiply(A, v0, start=0.0, stop=T, num=n_samples, endpoint=True)
    if not np.all(np.isfinite(outs)):
        raise FloatingPointError("exact evolution produced non-finite values")
    lossless = not (generator.include_dissipation and generator.profile.nu > 0)
    if lossless:
        n0 = np.vdot(v0, v0).real
        drift = np.max(np.abs(np.sum(np.abs(outs) ** 2, axis=1) - n0)) / max(n0, 1e-300)
        if drift > norm_tol:
            raise FloatingPointError(f"norm drift {drift:.3e} exceeds tolerance {norm_tol:.1e}")
    if n_samples is None:
        return FieldState(state.lattice, outs[0].reshape(N_COMPONENTS, -1))
    return outs.reshape(n_samples, N_COMPONENTS, -1)


# -- cold-plasma dispersion -----------------------------------------------------

def stix_SD(omega: float, omega_ps, omega_cs):
    """Stix ``S`` and ``D`` for species plasma/cyclotron frequency lists."""
    S = 1.0
    D = 0.0
    for wp, wc in zip(omega_ps, omega_cs):
        S -= wp ** 2 / (omega ** 2 - wc ** 2)
        D += wc * wp ** 2 / (omega * (omega ** 2 - wc ** 2))
    return S, D


def o_mode_omega(k: float, omega_pi: float, omega_pe: float) -> float:
    return float(np.sqrt(omega_pi ** 2 + omega_pe ** 2 + k ** 2))


def x_mode_omegas(k: float, omega_pi: float, omega_pe: float, omega_ci: float, omega_ce: float) -> np.ndarray:
    """Positive roots of ``k^2 S = omega^2 (S^2 - D^2)``, ascending.

    Cleared of denominators this is a polynomial in ``omega``; spurious roots
    sitting on a cyclotron resonance are filtered out.
    """
    P = np.polynomial.Polynomial
    w = P([0.0, 1.0])
    species = [(wp, wc) for wp, wc in ((omega_pi, omega_ci), (omega_pe, omega_ce)) if wp != 0]
    Q = P([1.0])
    for _, wc in species:
        Q = Q * (w ** 2 - wc ** 2)
    A = Q
    B = P([0.0])
    for i, (wp, wc) in enumerate(species):
        rest = P([1.0])
        for j, (_, wc2) in enumerate(species):
            if j != i:
                rest = rest * (w ** 2 - wc2 ** 2)
        A = A - wp ** 2 * rest
        B = B + wc * wp ** 2 * rest
    poly = w ** 2 * A ** 2 - B ** 2 - k ** 2 * A * Q
    roots = poly.roots()
    good = []
    for r in roots:
        if abs(r.imag) > 1e-8 * max(1.0, abs(r)) or r.real <= 1e-12:
            continue
        x = r.real
        if any(abs(x - abs(wc)) < 1e-9 for _, wc in species):
            continue
        if good and min(abs(x - g) for g in good) < 1e-9:
            continue
        good.append(x)
    return np.array(sorted(good))


def continuum_symbol(kvec, omega_pi: float, omega_pe: float, omega_ci: float, omega_ce: float) -> np.ndarray:
    """12x12 Hermitian matrix ``M(k)`` with plane-wave eigenfrequencies.

    For ``psi = a exp(i k.r)`` the generator acts as ``M a`` with
    ``M = -(gamma_x k_x + gamma_y k_y) + V``.
    """
    kx, ky = kvec
    M = np.zeros((12, 12), dtype=np.complex128)
    M[:6, :6] = -(GAMMA_X * kx + GAMMA_Y * ky)
    return M + potential_matrix(omega_pi, omega_pe, omega_ci, omega_ce)


POLARIZATIONS = {
    # TM: E along z; fields and currents out of plane.
    "vacuum": (2, 3, 4, 8, 11),
    "O-mode": (2, 3, 4, 8, 11),
    # TE: E in plane; perpendicular currents.
    "X-mode": (0, 1, 5, 6, 7, 9, 10),
}


@dataclass
class DispersionResult:
    mode: str
    k: tuple[float, float]
    omega_measured: float
    omega_analytic: float
    rel_error: float
    branch: str


def plane_wave_state(lattice: LatticeSpec, profile: PlasmaProfile, k, mode: str = "vacuum",
                     branch: str = "upper", scheme: str = "central") -> tuple[FieldState, float]:
    """Normalized plane-wave eigenmode of the lattice symbol and its frequency.

    The polarization is the positive-frequency eigenvector of the symbol
    restricted to the ``mode`` components; central differences see the
    wavenumber ``sin(k delta) / delta``.
    """
    if mode not in POLARIZATIONS:
        raise ValueError(f"mode must be one of {sorted(POLARIZATIONS)}, got {mode!r}")
    kvec = tuple(float(c) for c in k)
    wpi, wpe = float(np.mean(profile.omega_pi)), float(np.mean(profile.omega_pe))
    if scheme == "central":
        keff = tuple(np.sin(c * lattice.delta) / lattice.delta for c in kvec)
    else:
        keff = kvec
    idx = list(POLARIZATIONS[mode])
    M = continuum_symbol(keff, wpi, wpe, profile.omega_ci, profile.omega_ce)[np.ix_(idx, idx)]
    evals, evecs = np.linalg.eigh(M)
    positive = np.flatnonzero(evals > 1e-9)
    if positive.size == 0:
        raise ValueError("no propagating branch for this mode and k")
    pick = positive[-1] if branch == "upper" else positive[0]
    pol = np.zeros(12, dtype=np.complex128)
    pol[idx] = evecs[:, pick]

    x, y = lattice.coordinates()
    phase = np.exp(1j * (kvec[0] * x + kvec[1] * y))
    amps = pol[:, None] * phase[None, :]
    amps /= np.sqrt(np.sum(np.abs(amps) ** 2))
    return FieldState(lattice, amps), float(evals[pick])


def dispersion_check(lattice: LatticeSpec, profile: PlasmaProfile, k, mode: str = "vacuum",
                     branch: str = "upper", scheme: str = "central", periods: float = 2.0,
                     n_samples: int = 64) -> DispersionResult:
    """Evolve a plane-wave eigenmode with :func:`exact_evolve` and fit its frequency.

    ``k`` is ``(k_x, k_y)`` in physical units and must lie on the lattice's
    reciprocal grid; propagation is in the x-y plane, perpendicular to B.
    """
    if mode not in POLARIZATIONS:
        raise ValueError(f"mode must be one of {sorted(POLARIZATIONS)}, got {mode!r}")
    if not profile.is_uniform:
        raise ValueError("dispersion_check requires a uniform profile")
    kvec = tuple(float(c) for c in k)
    kmag = float(np.hypot(*kvec))
    for comp, L in zip(kvec, (lattice.length_x, lattice.length_y)):
        m = comp * L / (2.0 * np.pi)
        if abs(m - round(m)) > 1e-9:
            raise ValueError(f"k component {comp} is not on the reciprocal grid 2 pi m / {L}")
    if kmag > 0 and (2.0 * np.pi / kmag) / lattice.delta < 8.0:
        raise ValueError(f"mode not resolvable: {2 * np.pi / kmag / lattice.delta:.2f} points per wavelength < 8")
    wpi, wpe = float(profile.omega_pi[0]), float(profile.omega_pe[0])
    wci, wce = profile.omega_ci, profile.omega_ce
    if mode == "vacuum" and (wpi or wpe):
        raise ValueError("vacuum mode requires zero plasma frequencies")

    psi0, omega0 = plane_wave_state(lattice, profile, kvec, mode, branch, scheme)

    gen = build_generator(lattice, profile, scheme, dissipation=False, max_dim=None)
    T = periods * 2.0 * np.pi / omega0
    series = exact_evolve(psi0, gen, T, n_samples=n_samples)
    c = np.einsum("jp,tjp->t", psi0.amplitudes.conj(), series)
    t = np.linspace(0.0, T, n_samples)
    slope = np.polyfit(t, np.unwrap(np.angle(c)), 1)[0]
    omega_measured = -float(slope)

    if mode in ("vacuum", "O-mode"):
        omega_analytic = o_mode_omega(kmag, wpi, wpe)
    else:
        roots = x_mode_omegas(kmag, wpi, wpe, wci, wce)
        if roots.size == 0:
            raise ValueError("no analytic X-mode root")
        omega_analytic = float(roots[-1] if branch == "upper" else roots[0])
    rel = abs(omega_measured - omega_analytic) / omega_analytic
    return DispersionResult(mode, kvec, omega_measured, omega_analytic, float(rel), branch)


# -- convergence study ----------------------------------------------------------

def smooth_random_state(lattice: LatticeSpec, rng: np.random.Generator | int | None = 0,
                        max_mode: int = 2) -> FieldState:
    """Normalized superposition of the lowest Fourier modes with random 12-vectors."""
    rng = np.random.default_rng(rng)
    x, y = lattice.coordinates()
    amps = np.zeros((N_COMPONENTS, lattice.n_sites), dtype=np.complex128)
    for mx in range(-max_mode, max_mode + 1):
        for my in range(-max_mode, max_mode + 1):
            coef = rng.standard_normal(N_COMPONENTS) + 1j * rng.standard_normal(N_COMPONENTS)
            wave = np.exp(2j * np.pi * (mx * x / lattice.length_x + my * y / lattice.length_y))
            amps += coef[:, None] * wave[None, :] / (1.0 + mx * mx + my * my)
    amps /= np.sqrt(np.sum(np.abs(amps) ** 2))
    return FieldState(lattice, amps)


@dataclass
class ConvergenceReport:
    deltas: list[float]
    n_steps: list[int]
    errors: list[float]
    orders: list[float]
    fitted_order: float

    def rows(self):
        for i, (d, n, e) in enumerate(zip(self.deltas, self.n_steps, self.errors)):
            yield {"delta": d, "n_steps": n, "error": e,
                   "local_order": self.orders[i - 1] if i > 0 else float("nan")}


def fit_order(deltas, errors) -> float:
    """Least-squares slope of ``log(error)`` against ``log(delta)``."""
    return float(np.polyfit(np.log(deltas), np.log(errors), 1)[0])


def convergence_study(profile, T_physical: float, deltas, length: float = 1.0, initial=None,
                      seed: int = 0, angle_scale: float = 1.0, kappa: float | None = None) -> ConvergenceReport:
    """QLA versus matched central-difference :func:`exact_evolve` at fixed physical time.

    ``profile`` is a uniform :class:`PlasmaProfile` (its frequencies are
    re-laid on every lattice) or a callable ``lattice -> PlasmaProfile``.
    ``initial`` is a callable ``lattice -> FieldState``; it defaults to a
    seeded smooth random state.
    """
    from .operators import CALIBRATED_KAPPA, StepParams, run_conservative

    deltas = [float(d) for d in deltas]
    if any(b >= a for a, b in zip(deltas, deltas[1:])):
        raise ValueError("deltas must be strictly decreasing")
    kappa = CALIBRATED_KAPPA if kappa is None else kappa
    make_profile = profile if callable(profile) else _relay_uniform(profile)
    make_initial = initial if initial is not None else (lambda lat: smooth_random_state(lat, seed))

    errors, steps = [], []
    for d in deltas:
        nx = length / d
        n_bits = int(round(np.log2(nx)))
        if abs((1 << n_bits) - nx) > 1e-9:
            raise ValueError(f"length / delta = {nx} is not a power of two")
        lat = LatticeSpec(n_bits, n_bits, d)
        prof = make_profile(lat)
        psi0 = make_initial(lat)
        params = StepParams(delta=d, kappa_kinetic=kappa)
        n_t = int(round(T_physical / params.dt))
        if abs(n_t * params.dt - T_physical) > 1e-9 * max(1.0, T_physical):
            raise ValueError(f"T = {T_physical} is not a whole number of steps dt = {params.dt}")
        qla = run_conservative(psi0, prof, params.scaled(angle_scale), n_t)
        gen = build_generator(lat, prof, "central", dissipation=False, max_dim=None)
        ref = exact_evolve(psi0, gen, n_t * params.dt)
        err = np.sqrt(norm_squared(FieldState(lat, qla.amplitudes - ref.amplitudes)) / norm_squared(ref))
        errors.append(float(err))
        steps.append(n_t)
    orders = [float(np.log(errors[i] / errors[i + 1]) / np.log(deltas[i] / deltas[i + 1]))
              for i in range(len(deltas) - 1)]
    fitted = fit_order(deltas, errors) if len(deltas) > 1 else float("nan")
    return ConvergenceReport(deltas, steps, errors, orders, fitted)


def _relay_uniform(profile: PlasmaProfile):
    if not profile.is_uniform:
        raise ValueError("a non-uniform profile must be given as a callable lattice -> PlasmaProfile")
    wpi, wpe = float(profile.omega_pi[0]), float(profile.omega_pe[0])

    def make(lat: LatticeSpec) -> PlasmaProfile:
        return PlasmaProfile.uniform(lat, wpi, wpe, profile.omega_ci, profile.omega_ce, profile.nu)
    return make


def dense_expm(matrix: np.ndarray, t: float) -> np.ndarray:
    """``exp(-i t M)`` via scipy's scaling-and-squaring Pade."""
    return expm(-1j * t * np.asarray(matrix))
