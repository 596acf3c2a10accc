"""Gate-count scaling across register sizes and the FDTD comparison table."""

from __future__ import annotations

import csv
import io
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import OptimizeWarning, curve_fit

from ..lattice import LatticeSpec, PlasmaProfile, make_gaussian_blob_profile
from ..operators import StepParams
from .cost import CostModel, gate_count
from .synth import QubitLayout, synth_increment, synth_plasma_potential, synth_qla_step

PROFILE_CLASSES = ("incrementer", "homogeneous", "localized", "general", "plasma_dense")
CSV_COLUMNS = ("n_p", "profile_class", "raw_count", "expanded_count", "fitted_exponent")


def fit_power(x, y) -> float:
    """Slope of ``log y`` against ``log x``."""
    return float(np.polyfit(np.log(np.asarray(x, float)), np.log(np.asarray(y, float)), 1)[0])


def fit_offset_power(x, y) -> tuple[float, float, float]:
    """Least-squares ``y = a + b x^e``; returns ``(a, b, e)``.

    The offset absorbs the size-independent part of a circuit (coin and
    potential rotations), leaving ``e`` as the growth exponent.
    """
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    e0 = max(fit_power(x, y - 0.9 * y.min()), 0.1)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", OptimizeWarning)
        p, _ = curve_fit(lambda t, a, b, e: a + b * t ** e, x, y, p0=(0.9 * y.min(), 1.0, e0),
                         bounds=([0.0, 0.0, 0.0], [np.inf, np.inf, 10.0]), maxfev=50000)
    return float(p[0]), float(p[1]), float(p[2])


def fit_doubling_ratio(n_p, y) -> float:
    """``2**s`` where ``s`` is the slope of ``log2 y`` against ``n_p``."""
    return float(2.0 ** np.polyfit(np.asarray(n_p, float), np.log2(np.asarray(y, float)), 1)[0])


def linear_fit_r2(x, y) -> tuple[float, float, float]:
    """``(slope, intercept, R^2)`` of an ordinary least-squares line."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), r2


def layout_for(n_p: int) -> QubitLayout:
    if n_p < 2:
        raise ValueError("need n_p >= 2 (one bit per axis)")
    return QubitLayout(n_p - n_p // 2, n_p // 2)


def _lattice(layout: QubitLayout, delta: float) -> LatticeSpec:
    return LatticeSpec(layout.n_px, layout.n_py, delta)


def class_circuit(profile_class: str, n_p: int, omega=(1.0, 2.0, 0.5, -1.5), blob_sites_radius: float = 2.0,
                  seed: int = 0):
    """The circuit whose cost represents ``profile_class`` at ``n_p`` position qubits."""
    layout = layout_for(n_p)
    if profile_class == "incrementer":
        return synth_increment(n_p)
    delta = 1.0 / (1 << layout.n_px)
    lat = _lattice(layout, delta)
    params = StepParams(delta=delta)
    wpi, wpe, wci, wce = omega
    if profile_class == "homogeneous":
        profile = PlasmaProfile.uniform(lat, wpi, wpe, wci, wce)
        return synth_qla_step(layout, profile, params, "sparse")
    if profile_class == "localized":
        # Blob of fixed radius in lattice sites: its support does not grow with N.
        center = (0.5 * lat.length_x, 0.5 * lat.length_y)
        r = blob_sites_radius * delta
        profile = make_gaussian_blob_profile(lat, wpi, wpe, center, r, 0.5 * wpi, 0.5 * wpe, r, wci, wce)
        return synth_qla_step(layout, profile, params, "sparse")
    rng = np.random.default_rng(seed + n_p)
    profile = PlasmaProfile(wpi * rng.uniform(0.5, 1.5, lat.n_sites), wpe * rng.uniform(0.5, 1.5, lat.n_sites),
                            wci, wce)
    if profile_class == "general":
        return synth_qla_step(layout, profile, params, "dense")
    if profile_class == "plasma_dense":
        return synth_plasma_potential("ion", profile, params.dt, "dense", layout)
    raise ValueError(f"unknown profile class {profile_class!r}")


@dataclass
class ScalingRow:
    n_p: int
    profile_class: str
    raw_count: int
    expanded_count: int
    fitted_exponent: float = float("nan")


@dataclass
class ScalingReport:
    rows: list[ScalingRow]
    fits: dict[str, dict[str, float]] = field(default_factory=dict)
    fdtd: list[dict[str, float]] = field(default_factory=list)

    def series(self, profile_class: str, expanded: bool = True):
        sel = [r for r in self.rows if r.profile_class == profile_class]
        return (np.array([r.n_p for r in sel]),
                np.array([r.expanded_count if expanded else r.raw_count for r in sel], dtype=float))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in self.rows:
            w.writerow([r.n_p, r.profile_class, r.raw_count, r.expanded_count, f"{r.fitted_exponent:.6g}"])
        return buf.getvalue()

    def fdtd_csv(self) -> str:
        if not self.fdtd:
            return ""
        buf = io.StringIO()
        cols = list(self.fdtd[0])
        w = csv.DictWriter(buf, cols, lineterminator="\n")
        w.writeheader()
        for row in self.fdtd:
            w.writerow({k: f"{v:.6g}" if isinstance(v, float) else v for k, v in row.items()})
        return buf.getvalue()


def scaling_report(n_ps=range(2, 13), classes=PROFILE_CLASSES, cost_model: CostModel | None = None,
                   dense_max_n_p: int = 12, fdtd_exponent: float = 1.0, fdtd_ops_per_site: float = 1.0) -> ScalingReport:
    """Count every class across ``n_ps`` and fit its growth.

    Fits per class (``fitted_exponent`` column):

    * incrementer: plain log-log exponent in ``n_p``;
    * homogeneous, localized: offset-aware exponent ``e`` of ``a + b n_p^e``;
    * general, plasma_dense: doubling ratio per added position qubit.

    The FDTD table uses ``N^c = ops_per_site * N^fdtd_exponent`` per step
    and ``S_1 = N^c / N^q`` per class; total-time counts multiply by
    ``N_t = N`` (QLA, ``dt ~ delta^2``) and ``sqrt(N)`` (FDTD, CFL).
    """
    model = CostModel() if cost_model is None else cost_model
    rows: list[ScalingRow] = []
    for cls in classes:
        for n_p in n_ps:
            if cls in ("general", "plasma_dense") and n_p > dense_max_n_p:
                continue
            c = gate_count(class_circuit(cls, n_p), model)
            rows.append(ScalingRow(n_p, cls, c.raw, c.expanded))
    report = ScalingReport(rows)
    for cls in classes:
        x, y = report.series(cls)
        if x.size < 3:
            continue
        fit: dict[str, float] = {"plain_exponent": fit_power(x, y)}
        if cls in ("homogeneous", "localized", "incrementer"):
            a, b, e = fit_offset_power(x, y)
            fit.update(offset=a, coefficient=b, offset_exponent=e)
        if cls in ("general", "plasma_dense"):
            fit["doubling_ratio"] = fit_doubling_ratio(x, y)
            fit["min_step_ratio"] = float(np.min(y[1:] / y[:-1]))
            fit["max_step_ratio"] = float(np.max(y[1:] / y[:-1]))
        key = {"incrementer": "plain_exponent", "homogeneous": "offset_exponent",
               "localized": "offset_exponent"}.get(cls, "doubling_ratio")
        fit["reported"] = fit[key]
        report.fits[cls] = fit
        for r in rows:
            if r.profile_class == cls:
                r.fitted_exponent = fit[key]

    for n_p in n_ps:
        N = float(1 << n_p)
        fd = fdtd_ops_per_site * N ** fdtd_exponent
        entry = {"n_p": n_p, "N": N, "fdtd_per_step": fd, "fdtd_total": fd * np.sqrt(N)}
        for cls in ("homogeneous", "localized", "general"):
            match = [r for r in rows if r.profile_class == cls and r.n_p == n_p]
            if match:
                q = float(match[0].expanded_count)
                entry[f"qla_{cls}"] = q
                entry[f"S1_{cls}"] = fd / q
                entry[f"qla_total_{cls}"] = q * N
        report.fdtd.append(entry)
    return report


def support_scaling(n_p: int = 8, radii=(0.0, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0), cost_model: CostModel | None = None):
    """Sparse plasma-potential count against blob support size at fixed ``n_p``.

    Returns ``(support_sizes, expanded_counts, (slope, intercept, R^2))``.
    """
    model = CostModel() if cost_model is None else cost_model
    layout = layout_for(n_p)
    delta = 1.0 / (1 << layout.n_px)
    lat = _lattice(layout, delta)
    center = (0.5 * lat.length_x, 0.5 * lat.length_y)
    sizes, counts = [], []
    for r in radii:
        prof = make_gaussian_blob_profile(lat, 1.0, 2.0, center, max(r, 1.0) * delta, 0.5, 1.0, r * delta)
        circ = synth_plasma_potential("ion", prof, delta ** 2, "sparse", layout)
        sizes.append(len(prof.support))
        counts.append(gate_count(circ, model).expanded)
    return np.array(sizes), np.array(counts), linear_fit_r2(sizes, counts)
