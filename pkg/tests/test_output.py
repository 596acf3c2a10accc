from __future__ import annotations

import json

import numpy as np
import pytest

from qla_plasma.lattice import FieldState, LatticeSpec
from qla_plasma.output import (TIMESERIES_COLUMNS, read_snapshot, read_timeseries, write_manifest, write_snapshot,
                               write_timeseries)


def test_snapshot_round_trip_and_layout(tmp_path):
    lat = LatticeSpec(2, 1, 0.1)
    psi = FieldState.random(lat, 0)
    bin_path, hdr_path = write_snapshot(tmp_path / "s", psi, 7, 0.07)
    raw = np.fromfile(bin_path, dtype="<f8")
    assert raw.size == 2 * 12 * 8
    # component-major, (re, im) pairs
    assert raw[0] == psi.amplitudes[0, 0].real and raw[1] == psi.amplitudes[0, 0].imag
    assert raw[2 * 8] == psi.amplitudes[1, 0].real
    back, header = read_snapshot(hdr_path)
    assert np.array_equal(back.amplitudes, psi.amplitudes)
    assert header["step"] == "7" and header["nx"] == "4" and header["components"].startswith("E_x,E_y")


def test_snapshot_rejects_bad_size(tmp_path):
    lat = LatticeSpec(1, 1, 0.1)
    _, hdr = write_snapshot(tmp_path / "s", FieldState.random(lat, 0), 0, 0.0)
    (tmp_path / "s.bin").write_bytes(b"\x00" * 16)
    with pytest.raises(ValueError, match="expected"):
        read_snapshot(hdr)


def test_timeseries_columns_and_nan_guard(tmp_path):
    cols = {c: np.linspace(0, 1, 4) for c in TIMESERIES_COLUMNS}
    path = write_timeseries(tmp_path / "t.csv", cols)
    assert path.read_text().splitlines()[0] == "time,energy,norm2,p_step,p_cumulative,a_k"
    back = read_timeseries(path)
    assert np.array_equal(back["a_k"], cols["a_k"])
    cols["energy"][2] = np.nan
    with pytest.raises(FloatingPointError, match="energy"):
        write_timeseries(tmp_path / "bad.csv", cols)


def test_manifest_contents(tmp_path):
    path = write_manifest(tmp_path, "simulate", {"lattice": {"n_px": (1, 2)}}, -1.0, {"x": np.float64(2.0)})
    doc = json.loads(path.read_text())
    assert doc["kappa_kinetic"] == -1.0 and doc["version"] and doc["config"]["lattice"]["n_px"] == [1, 2]
    assert doc["x"] == 2.0
