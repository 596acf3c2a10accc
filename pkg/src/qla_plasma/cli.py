"""Command-line entry point: ``qla-plasma <subcommand> ...``.

Exit codes: 0 success, 2 configuration or input error, 3 numeric failure,
4 verification failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .circuits import CostModel, GateCircuit, QubitLayout, gate_count
from .circuits import synth as S
from .circuits.scaling import scaling_report, support_scaling
from .config import ConfigError, RunConfig, parse_config
from .dissipative import DissipativeParams, current_population, run_dissipative
from .lattice import LatticeSpec, FieldState, PlasmaProfile, current_fraction, energy, norm_squared
from .operators import CALIBRATED_KAPPA, StepParams, run_conservative
from .oracle import convergence_study, dispersion_check, plane_wave_state, smooth_random_state
from .output import read_snapshot, write_csv_rows, write_manifest, write_snapshot, write_timeseries
from .verification import VerificationError, check_circuit, run_suites

log = logging.getLogger("qla_plasma")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_VERIFY = 0, 2, 3, 4

OPERATORS = ("increment", "decrement", "two-level", "coin-x", "coin-y", "cyclotron", "stream",
             "kinetic-x", "kinetic-y", "plasma-ion", "plasma-electron", "step", "select", "lcu", "scaling")


# -- shared helpers ---------------------------------------------------------------

def _setup_logging(verbose: bool) -> None:
    root = logging.getLogger("qla_plasma")
    root.setLevel(logging.DEBUG if verbose else logging.INFO)
    if not root.handlers:
        h = logging.StreamHandler(sys.stderr)
        h.setFormatter(logging.Formatter("%(levelname)s %(message)s"))
        root.addHandler(h)


def _output_dir(path) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    handler = logging.FileHandler(out / "run.log", mode="w")
    handler.setFormatter(logging.Formatter("%(levelname)s %(name)s %(message)s"))
    logging.getLogger("qla_plasma").addHandler(handler)
    return out


def _close_file_logs() -> None:
    root = logging.getLogger("qla_plasma")
    for h in list(root.handlers):
        if isinstance(h, logging.FileHandler):
            root.removeHandler(h)
            h.close()


def _load(args) -> tuple[RunConfig, Path]:
    """Parse the config, apply flag overrides and open the output directory."""
    cfg = parse_config(args.config)
    if getattr(args, "output_dir", None):
        cfg.output.directory = args.output_dir
    if getattr(args, "steps", None):
        cfg.run.n_steps, cfg.run.T = args.steps, 0.0
    out = _output_dir(cfg.output.directory)
    # the parse happened before run.log existed; copy the defaults into it
    handler = next(h for h in logging.getLogger("qla_plasma").handlers if isinstance(h, logging.FileHandler))
    for line in cfg.defaults_applied:
        handler.handle(logging.makeLogRecord({"name": "qla_plasma.config", "levelname": "INFO",
                                              "levelno": logging.INFO, "msg": "default applied: %s",
                                              "args": (line,)}))
    return cfg, out


def step_params(cfg: RunConfig) -> StepParams:
    kwargs = {"kappa_kinetic": cfg.run.kappa_kinetic}
    if cfg.run.dt > 0:
        kwargs["dt"] = cfg.run.dt
    return StepParams(delta=cfg.lattice.delta, **kwargs)


def n_steps(cfg: RunConfig, params: StepParams) -> int:
    if cfg.run.T > 0:
        n = int(round(cfg.run.T / params.dt))
        if n < 1 or abs(n * params.dt - cfg.run.T) > 1e-9 * cfg.run.T:
            raise ConfigError(f"run.T = {cfg.run.T} is not a whole number of steps of dt = {params.dt}")
        return n
    return cfg.run.n_steps


def initial_state(cfg: RunConfig, lattice: LatticeSpec, profile: PlasmaProfile) -> FieldState:
    """Normalized initial state from the ``[initial]`` block."""
    ini = cfg.initial
    if ini.kind == "file":
        state, header = read_snapshot(ini.file)
        if state.lattice.nx != lattice.nx or state.lattice.ny != lattice.ny:
            raise ConfigError(f"initial.file: lattice {state.lattice.nx}x{state.lattice.ny} does not match "
                              f"config {lattice.nx}x{lattice.ny}")
        state = FieldState(lattice, state.amplitudes)
    elif ini.kind == "random":
        state = smooth_random_state(lattice, ini.seed)
    else:
        k = (2.0 * np.pi * ini.k[0] / lattice.length_x, 2.0 * np.pi * ini.k[1] / lattice.length_y)
        try:
            state, omega = plane_wave_state(lattice, profile, k, ini.polarization, ini.branch)
        except ValueError as exc:
            raise ConfigError(f"initial: {exc}") from None
        log.info("plane wave k = (%g, %g), polarization %s, lattice frequency %.6g",
                 k[0], k[1], ini.polarization, omega)
        if ini.envelope_width > 0:
            x, y = lattice.coordinates()
            cx = lattice.origin_x + 0.5 * lattice.length_x
            cy = lattice.origin_y + 0.5 * lattice.length_y
            env = np.exp(-((x - cx) ** 2 + (y - cy) ** 2) / (2.0 * ini.envelope_width ** 2))
            state = FieldState(lattice, state.amplitudes * env[None, :])
    n0 = norm_squared(state)
    if not n0 > 0:
        raise ConfigError("initial state has zero norm")
    return FieldState(lattice, state.amplitudes / np.sqrt(n0))


def _snapshot(out: Path, state: FieldState, step: int, dt: float) -> None:
    write_snapshot(out / f"snapshot_{step:08d}", state, step, step * dt)


# -- subcommands ----------------------------------------------------------------

def cmd_simulate(args) -> int:
    cfg, out = _load(args)
    lat, prof = cfg.lattice_spec(), cfg.plasma_profile()
    params = step_params(cfg)
    steps = n_steps(cfg, params)
    if prof.nu > 0:
        log.warning("profile.nu = %g is ignored by the conservative run; use simulate-dissipative", prof.nu)
    psi = initial_state(cfg, lat, prof)
    snaps = "snapshots" in cfg.output.formats and cfg.run.snapshot_every > 0

    m = steps + 1
    norms, en, a_k = np.empty(m), np.empty(m), np.empty(m)
    norms[0], en[0], a_k[0] = norm_squared(psi), energy(psi), current_fraction(psi)
    if snaps:
        _snapshot(out, psi, 0, params.dt)

    def record(k, amps):
        n2 = float(np.sum(amps.real ** 2 + amps.imag ** 2))
        if not np.isfinite(n2):
            raise FloatingPointError(f"non-finite state at step {k}")
        norms[k], en[k] = n2, lat.delta ** 2 * n2
        a_k[k] = current_population(amps)
        if snaps and k % cfg.run.snapshot_every == 0:
            _snapshot(out, FieldState(lat, np.array(amps)), k, params.dt)

    log.info("simulate: %dx%d lattice, %d steps, dt = %g", lat.nx, lat.ny, steps, params.dt)
    run_conservative(psi, prof, params, steps, callback=record)
    cols = {"time": np.arange(m) * params.dt, "energy": en, "norm2": norms,
            "p_step": np.ones(m), "p_cumulative": np.ones(m), "a_k": a_k}
    write_timeseries(out / "timeseries.csv", cols)
    drift = abs(norms[-1] - norms[0]) / norms[0]
    write_manifest(out, "simulate", cfg.to_dict(), params.kappa_kinetic,
                   {"n_steps": steps, "dt": params.dt, "relative_norm_drift": drift})
    print(f"simulate: {steps} steps, relative norm drift {drift:.3e}, output in {out}")
    return EXIT_OK


def cmd_simulate_dissipative(args) -> int:
    cfg, out = _load(args)
    lat, prof = cfg.lattice_spec(), cfg.plasma_profile()
    params = step_params(cfg)
    steps = n_steps(cfg, params)
    if prof.nu == 0:
        log.warning("profile.nu = 0: the dissipative run reduces to the conservative one")
    psi = initial_state(cfg, lat, prof)
    dp = DissipativeParams.from_step(prof, params)
    snap_every = cfg.run.snapshot_every if "snapshots" in cfg.output.formats else 0
    log.info("simulate-dissipative: %dx%d lattice, %d steps, beta = %g", lat.nx, lat.ny, steps, dp.beta)
    traj = run_dissipative(psi, prof, params, dp, steps, snapshot_every=snap_every,
                           monte_carlo=cfg.run.monte_carlo, rng=cfg.run.seed)
    cols = {"time": traj.time, "energy": traj.energy, "norm2": traj.norm_squared,
            "p_step": traj.p_step, "p_cumulative": traj.p_cumulative, "a_k": traj.a_k}
    write_timeseries(out / "timeseries.csv", cols)
    for k, amps in sorted(traj.snapshots.items()):
        _snapshot(out, FieldState(lat, amps), k, params.dt)
    extra = {"n_steps": steps, "dt": params.dt, "beta": dp.beta,
             "final_p_cumulative": float(traj.p_cumulative[-1]), "final_norm2": float(traj.norm_squared[-1])}
    if traj.accepted is not None:
        extra["monte_carlo_survived"] = bool(traj.accepted[-1])
    write_manifest(out, "simulate-dissipative", cfg.to_dict(), params.kappa_kinetic, extra)
    print(f"simulate-dissipative: {steps} steps, p_cumulative {traj.p_cumulative[-1]:.12g}, "
          f"norm2 {traj.norm_squared[-1]:.12g}, output in {out}")
    return EXIT_OK


def _synth_from_config(args):
    if not args.config:
        raise ConfigError(f"--operator {args.operator} needs --config for the lattice and profile")
    cfg = parse_config(args.config)
    lat, prof = cfg.lattice_spec(), cfg.plasma_profile()
    return cfg, lat, prof, step_params(cfg), QubitLayout.from_lattice(lat)


def build_circuit(args) -> tuple[GateCircuit, dict]:
    op = args.operator
    meta: dict = {}
    if op in ("increment", "decrement"):
        if args.bits is None or args.bits < 1:
            raise ConfigError("--bits >= 1 is required for the incrementer")
        return S.synth_increment(args.bits, 1 if op == "increment" else -1), meta
    if op == "two-level":
        if not args.states or len(args.states) != 2:
            raise ConfigError("--states needs two 4-bit coin states, e.g. --states 0000 1001")
        return S.synth_two_level_ry(tuple(args.states), args.angle, args.variant), meta
    if op in ("coin-x", "coin-y"):
        return S.synth_coin(op[-1], args.angle, args.adjoint), meta
    if op == "cyclotron":
        return S.synth_cyclotron(args.angle, args.angle2), meta
    cfg, lat, prof, params, layout = _synth_from_config(args)
    meta = {"n_px": str(lat.n_px), "n_py": str(lat.n_py), "delta": repr(lat.delta), "config": str(args.config)}
    if op == "stream":
        pair = tuple(args.pair) if args.pair else (1, 4)
        circ = S.synth_stream(layout, pair, args.axis, args.direction)
    elif op in ("kinetic-x", "kinetic-y"):
        circ = S.synth_kinetic(layout, op[-1], params)
    elif op in ("plasma-ion", "plasma-electron"):
        circ = S.synth_plasma_potential(op.split("-")[1], prof, params.dt, args.mode, layout)
    elif op == "step":
        circ = S.synth_qla_step(layout, prof, params, args.mode)
    else:
        dp = DissipativeParams.from_step(prof, params)
        circ = (S.synth_select if op == "select" else S.synth_lcu)(dp, lat)
    circ.metadata.update(meta)
    return circ, {"config": cfg.to_dict(), "kappa_kinetic": params.kappa_kinetic}


def cmd_synthesize(args) -> int:
    model = CostModel(per_control=args.per_control)
    if args.operator == "scaling":
        return _synth_scaling(args, model)
    circ, extra = build_circuit(args)
    path = Path(args.output or f"{args.operator}.circ")
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(circ.to_text())
    counts = gate_count(circ, model)
    summary = {"operator": args.operator, "circuit": str(path), "n_qubits": circ.n_qubits,
               "raw_count": counts.raw, "expanded_count": counts.expanded,
               "by_kind": counts.by_kind, "by_controls": {str(k): v for k, v in sorted(counts.by_controls.items())},
               "cost_model": {"name": model.name, "per_control": model.per_control}}
    path.with_suffix(path.suffix + ".json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    print(f"{args.operator}: {circ.n_qubits} qubits, {counts.raw} gates, {counts.expanded} elementary "
          f"(cost model {model.name}, per_control={model.per_control}) -> {path}")
    return EXIT_OK


def _synth_scaling(args, model: CostModel) -> int:
    out = _output_dir(args.output or "scaling")
    n_ps = range(args.n_p_min, args.n_p_max + 1)
    report = scaling_report(n_ps, cost_model=model, dense_max_n_p=args.dense_max_n_p)
    (out / "scaling.csv").write_text(report.to_csv())
    (out / "fdtd_comparison.csv").write_text(report.fdtd_csv())
    sizes, counts, (slope, intercept, r2) = support_scaling(cost_model=model)
    write_csv_rows(out / "support_scaling.csv", ("support_size", "expanded_count"), zip(sizes, counts))
    write_manifest(out, "synthesize scaling", {"n_p": list(n_ps), "per_control": model.per_control},
                   CALIBRATED_KAPPA, {"fits": report.fits, "support_fit": {"slope": slope, "intercept": intercept,
                                                                           "r2": r2}})
    for cls, fit in report.fits.items():
        print(f"{cls:<14s} reported fit {fit['reported']:.4f}")
    print(f"{'support':<14s} linear R^2 {r2:.6f}")
    return EXIT_OK


def cmd_verify(args) -> int:
    if args.circuit:
        circ = GateCircuit.from_text(Path(args.circuit).read_text())
        lat = prof = params = None
        if args.config:
            cfg = parse_config(args.config)
            lat, prof, params = cfg.lattice_spec(), cfg.plasma_profile(), step_params(cfg)
        elif "config" in circ.metadata and Path(circ.metadata["config"]).exists():
            cfg = parse_config(circ.metadata["config"])
            lat, prof, params = cfg.lattice_spec(), cfg.plasma_profile(), step_params(cfg)
        if circ.n_qubits > args.max_qubits:
            raise ConfigError(f"circuit has {circ.n_qubits} qubits; dense verification capped at {args.max_qubits}")
        checks = [check_circuit(circ, lat, prof, params, args.tol)]
    else:
        names = ("circuits", "oracle") if args.suite == "all" else (args.suite,)
        checks = run_suites(names, args.tol)
    for c in checks:
        print(c.line())
    failed = [c for c in checks if not c.passed]
    if failed:
        raise VerificationError(f"{len(failed)} of {len(checks)} checks failed")
    print(f"verify: {len(checks)} checks passed")
    return EXIT_OK


def _profile_from_flags(args, lat: LatticeSpec) -> PlasmaProfile:
    if args.omega_pi < 0 or args.omega_pe < 0:
        raise ConfigError("plasma frequencies must be >= 0")
    return PlasmaProfile.uniform(lat, args.omega_pi, args.omega_pe, args.omega_ci, args.omega_ce)


def cmd_converge(args) -> int:
    out = _output_dir(args.output_dir)
    deltas = [args.delta0 / 2 ** i for i in range(args.levels)]
    lat0 = LatticeSpec(1, 1, deltas[0])
    prof = _profile_from_flags(args, lat0)
    kappa = CALIBRATED_KAPPA if args.kappa is None else args.kappa
    rep = convergence_study(prof, args.T, deltas, length=args.length, seed=args.seed, kappa=kappa)
    rows = [(r["delta"], r["n_steps"], r["error"], r["local_order"]) for r in rep.rows()]
    rows = [(d, n, e, "" if not np.isfinite(o) else o) for d, n, e, o in rows]
    write_csv_rows(out / "convergence.csv", ("delta", "n_steps", "error", "local_order"), rows)
    cfg = {k: getattr(args, k) for k in ("omega_pi", "omega_pe", "omega_ci", "omega_ce", "T", "delta0",
                                          "levels", "length", "seed")}
    write_manifest(out, "converge", cfg, kappa, {"fitted_order": rep.fitted_order})
    for d, n, e, o in rows:
        print(f"delta={d:<10.6g} steps={n:<6d} error={e:.4e} local_order={o if o == '' else f'{o:.3f}'}")
    print(f"fitted order {rep.fitted_order:.4f}")
    return EXIT_OK


def cmd_dispersion(args) -> int:
    out = _output_dir(args.output_dir)
    lat = LatticeSpec(args.n_px, args.n_py, args.delta)
    prof = _profile_from_flags(args, lat)
    k = (2.0 * np.pi * args.m[0] / lat.length_x, 2.0 * np.pi * args.m[1] / lat.length_y)
    res = dispersion_check(lat, prof, k, args.mode, args.branch, args.scheme, args.periods)
    write_csv_rows(out / "dispersion.csv",
                   ("mode", "branch", "k_x", "k_y", "omega_measured", "omega_analytic", "rel_error"),
                   [(res.mode, res.branch, res.k[0], res.k[1], res.omega_measured, res.omega_analytic,
                     res.rel_error)])
    cfg = {k2: getattr(args, k2) for k2 in ("n_px", "n_py", "delta", "m", "mode", "branch", "scheme",
                                             "omega_pi", "omega_pe", "omega_ci", "omega_ce", "periods")}
    write_manifest(out, "dispersion", cfg, CALIBRATED_KAPPA, {"rel_error": res.rel_error})
    print(f"{res.mode} ({res.branch}): omega measured {res.omega_measured:.8g}, analytic "
          f"{res.omega_analytic:.8g}, relative error {res.rel_error:.3e}")
    return EXIT_OK


# -- parser -----------------------------------------------------------------------

def _add_plasma_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--omega-pi", type=float, default=0.0)
    p.add_argument("--omega-pe", type=float, default=0.0)
    p.add_argument("--omega-ci", type=float, default=0.0)
    p.add_argument("--omega-ce", type=float, default=0.0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qla-plasma", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, func, help_ in (("simulate", cmd_simulate, "conservative QLA run"),
                              ("simulate-dissipative", cmd_simulate_dissipative, "Trotterized LCU run with collisions")):
        p = sub.add_parser(name, help=help_)
        p.add_argument("config", help="TOML run configuration")
        p.add_argument("--output-dir", help="override output.directory")
        p.add_argument("--steps", type=int, help="override run.n_steps")
        p.set_defaults(func=func)

    p = sub.add_parser("synthesize", help="emit a circuit file and its gate counts")
    p.add_argument("--operator", required=True, choices=OPERATORS)
    p.add_argument("--bits", type=int, help="register width for increment/decrement")
    p.add_argument("--angle", type=float, default=0.1, help="rotation angle (coin, two-level, cyclotron ion)")
    p.add_argument("--angle2", type=float, default=0.0, help="electron cyclotron angle")
    p.add_argument("--states", nargs=2, metavar="BITS", help="two-level coin states, e.g. 0000 1001")
    p.add_argument("--variant", choices=("RY", "RY~"), default="RY")
    p.add_argument("--adjoint", action="store_true")
    p.add_argument("--pair", type=int, nargs=2, metavar="J", help="stream component pair")
    p.add_argument("--axis", choices=("x", "y"), default="x")
    p.add_argument("--direction", type=int, choices=(1, -1), default=1)
    p.add_argument("--mode", choices=("dense", "sparse"), default="sparse", help="plasma multiplexing")
    p.add_argument("--config", help="TOML config for lattice-sized operators")
    p.add_argument("--output", "-o", help="circuit file (or directory for 'scaling')")
    p.add_argument("--per-control", type=int, default=1, help="cost-model gates per control")
    p.add_argument("--n-p-min", type=int, default=2)
    p.add_argument("--n-p-max", type=int, default=12)
    p.add_argument("--dense-max-n-p", type=int, default=12)
    p.set_defaults(func=cmd_synthesize)

    p = sub.add_parser("verify", help="circuit/operator and oracle equivalence checks")
    p.add_argument("--circuit", help="circuit text file to check against its dense reference")
    p.add_argument("--config", help="config for profile-dependent circuits")
    p.add_argument("--suite", choices=("all", "circuits", "oracle"), default="all")
    p.add_argument("--tol", type=float, default=1e-12)
    p.add_argument("--max-qubits", type=int, default=12)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("converge", help="temporal order against the exact reference")
    _add_plasma_flags(p)
    p.add_argument("--T", type=float, default=0.25, help="physical time")
    p.add_argument("--delta0", type=float, default=1.0 / 16)
    p.add_argument("--levels", type=int, default=3)
    p.add_argument("--length", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--kappa", type=float)
    p.add_argument("--output-dir", default="converge_out")
    p.set_defaults(func=cmd_converge)

    p = sub.add_parser("dispersion", help="plane-wave frequency against the cold-plasma oracle")
    _add_plasma_flags(p)
    p.add_argument("--mode", choices=("vacuum", "O-mode", "X-mode"), default="vacuum")
    p.add_argument("--branch", choices=("upper", "lower"), default="upper")
    p.add_argument("--scheme", choices=("central", "spectral"), default="central")
    p.add_argument("--n-px", type=int, default=6)
    p.add_argument("--n-py", type=int, default=1)
    p.add_argument("--delta", type=float, default=1.0 / 64)
    p.add_argument("--m", type=int, nargs=2, default=(1, 0), metavar=("MX", "MY"), help="mode numbers")
    p.add_argument("--periods", type=float, default=2.0)
    p.add_argument("--output-dir", default="dispersion_out")
    p.set_defaults(func=cmd_dispersion)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _setup_logging(args.verbose)
    try:
        with np.errstate(over="raise", invalid="raise"):
            return args.func(args)
    except ConfigError as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG
    except VerificationError as exc:
        log.error("verification failed: %s", exc)
        return EXIT_VERIFY
    except FloatingPointError as exc:
        log.error("numeric failure: %s", exc)
        return EXIT_NUMERIC
    except (ValueError, KeyError, OSError) as exc:
        log.error("%s: %s", args.command, exc)
        return EXIT_CONFIG
    except RuntimeError as exc:
        log.error("%s: %s", args.command, exc)
        return EXIT_NUMERIC
    finally:
        _close_file_logs()


if __name__ == "__main__":
    sys.exit(main())
