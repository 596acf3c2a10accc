"""Run artifacts: time-series CSV, binary field snapshots and the run manifest.

Snapshot layout: ``<name>.bin`` holds little-endian float64 ``(re, im)``
pairs, component-major then row-major (``[12][ny][nx]``); ``<name>.hdr`` is
a ``key value`` text sidecar with the dimensions, component names, delta
and step index.
"""

from __future__ import annotations

import csv
import json
import platform
from pathlib import Path

import numpy as np

from . import __version__
from .lattice import COMPONENT_NAMES, N_COMPONENTS, FieldState, LatticeSpec

TIMESERIES_COLUMNS = ("time", "energy", "norm2", "p_step", "p_cumulative", "a_k")
SNAPSHOT_FORMAT = "qla-snapshot-1"


def _fmt(v: float) -> str:
    return repr(float(v))


def write_timeseries(path, columns: dict[str, np.ndarray]) -> Path:
    """CSV with the fixed column set; refuses to write non-finite values."""
    path = Path(path)
    data = [np.asarray(columns[c], dtype=np.float64) for c in TIMESERIES_COLUMNS]
    for name, col in zip(TIMESERIES_COLUMNS, data):
        if not np.all(np.isfinite(col)):
            raise FloatingPointError(f"non-finite value in column {name!r}")
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TIMESERIES_COLUMNS)
        for row in zip(*data):
            w.writerow([_fmt(v) for v in row])
    return path


def read_timeseries(path) -> dict[str, np.ndarray]:
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    arr = np.array(body, dtype=np.float64).reshape(len(body), len(header))
    return {name: arr[:, i] for i, name in enumerate(header)}


def write_csv_rows(path, columns, rows) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return path


def write_snapshot(stem, state: FieldState, step: int, time: float) -> tuple[Path, Path]:
    stem = Path(stem)
    lat = state.lattice
    amps = state.amplitudes
    if not np.all(np.isfinite(amps)):
        raise FloatingPointError(f"non-finite amplitudes in snapshot at step {step}")
    pairs = np.empty(amps.shape + (2,), dtype="<f8")
    pairs[..., 0] = amps.real
    pairs[..., 1] = amps.imag
    bin_path = stem.with_suffix(".bin")
    hdr_path = stem.with_suffix(".hdr")
    bin_path.write_bytes(pairs.tobytes(order="C"))
    lines = [
        f"format {SNAPSHOT_FORMAT}",
        "dtype float64 little-endian (re, im) pairs",
        "order component-major, then row-major (y outer, x inner)",
        f"n_components {N_COMPONENTS}",
        f"nx {lat.nx}",
        f"ny {lat.ny}",
        f"n_px {lat.n_px}",
        f"n_py {lat.n_py}",
        f"delta {lat.delta!r}",
        f"origin_x {lat.origin_x!r}",
        f"origin_y {lat.origin_y!r}",
        f"step {step}",
        f"time {float(time)!r}",
        "components " + ",".join(COMPONENT_NAMES),
    ]
    hdr_path.write_text("\n".join(lines) + "\n")
    return bin_path, hdr_path


def read_snapshot(path) -> tuple[FieldState, dict[str, str]]:
    """Load a snapshot from its ``.bin`` or ``.hdr`` path."""
    path = Path(path)
    hdr_path, bin_path = path.with_suffix(".hdr"), path.with_suffix(".bin")
    header = {}
    for line in hdr_path.read_text().splitlines():
        if line.strip():
            key, _, value = line.partition(" ")
            header[key] = value.strip()
    if header.get("format") != SNAPSHOT_FORMAT:
        raise ValueError(f"{hdr_path}: not a {SNAPSHOT_FORMAT} header")
    lat = LatticeSpec(int(header["n_px"]), int(header["n_py"]), float(header["delta"]),
                      float(header.get("origin_x", 0.0)), float(header.get("origin_y", 0.0)))
    raw = np.frombuffer(bin_path.read_bytes(), dtype="<f8")
    expected = 2 * N_COMPONENTS * lat.n_sites
    if raw.size != expected:
        raise ValueError(f"{bin_path}: {raw.size} floats, expected {expected}")
    pairs = raw.reshape(N_COMPONENTS, lat.n_sites, 2)
    return FieldState(lat, pairs[..., 0] + 1j * pairs[..., 1]), header


def write_manifest(directory, command: str, config: dict, kappa_kinetic: float, extra: dict | None = None) -> Path:
    doc = {
        "command": command,
        "version": __version__,
        "kappa_kinetic": kappa_kinetic,
        "config": config,
        "python": platform.python_version(),
        "numpy": np.__version__,
    }
    if extra:
        doc.update(extra)
    path = Path(directory) / "manifest.json"
    path.write_text(json.dumps(doc, indent=2, sort_keys=True, default=_json_default) + "\n")
    return path


def _json_default(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (tuple, set, np.ndarray)):
        return list(obj)
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")
