import numpy as np
import pytest
from hypothesis import given, strategies as st

from fnls.io import (
    MAGIC, ConfigError, SnapshotError, load_config, parse_config, parse_snapshot,
    read_snapshot, snapshot_bytes, write_report, read_report, write_snapshot,
)
from fnls.params import Kind, ModelParams
from fnls.spectral import Field, Grid

from conftest import random_field

P = ModelParams(d=1, m=1, sigma=0.75, alpha=3.0, kind=Kind.ANISOTROPIC)

GS_TEXT = """
# fixed-frequency ground state
model.d = 1
model.sigma = 0.75
model.alpha = 2.0
grid.nx = 64
groundstate.mode = fixed-frequency
groundstate.omega = 2.5  # trailing comment
"""


@given(seed=st.integers(0, 2**32 - 1), d=st.sampled_from([1, 2]))
def test_snapshot_round_trip_bit_exact(tmp_path_factory, seed, d):
    g = Grid(d=d, m=1, lx=3.0, nx=8, ny=4)
    u = random_field(g, np.random.default_rng(seed))
    path = tmp_path_factory.mktemp("snap") / "u.fnls"
    write_snapshot(path, u, P)
    v, meta = read_snapshot(path)
    assert v.grid == g
    assert v.values.tobytes() == u.values.tobytes()
    assert meta["sigma"] == P.sigma and meta["alpha"] == P.alpha and meta["kind"] is Kind.ANISOTROPIC


def test_snapshot_errors(rng, tmp_path):
    g = Grid(d=1, m=1, lx=3.0, nx=8, ny=4)
    data = snapshot_bytes(random_field(g, rng), P)
    assert data[:4] == MAGIC
    with pytest.raises(SnapshotError, match="truncated"):
        parse_snapshot(data[:10])
    with pytest.raises(SnapshotError, match="payload size"):
        parse_snapshot(data[:-16])
    with pytest.raises(SnapshotError, match="magic"):
        parse_snapshot(b"XXXX" + data[4:])
    bad = bytearray(data)
    bad[-8:] = np.array([np.nan]).tobytes()
    with pytest.raises(SnapshotError, match="non-finite"):
        parse_snapshot(bytes(bad))
    with pytest.raises(SnapshotError, match="cannot read"):
        read_snapshot(tmp_path / "missing.fnls")


def test_parse_config_values():
    cfg = parse_config(GS_TEXT, "groundstate")
    assert cfg.model == ModelParams(d=1, m=1, sigma=0.75, alpha=2.0)
    assert cfg.grid.nx == 64 and cfg.grid.lx == 16.0
    assert cfg.option("omega") == 2.5
    assert cfg.option("mode") == "fixed-frequency"


@pytest.mark.parametrize(
    "edit, match",
    [
        ("model.beta = 1", "unknown key"),
        ("model.d = 2", "duplicate key"),
        ("grid.ny = many", "cannot parse"),
        ("no equals sign", "expected key = value"),
    ],
)
def test_config_rejections(edit, match):
    with pytest.raises(ConfigError, match=match):
        parse_config(GS_TEXT + edit + "\n", "groundstate")


def test_missing_omega_is_named():
    text = GS_TEXT.replace("groundstate.omega = 2.5", "")
    with pytest.raises(ConfigError, match="groundstate.omega"):
        parse_config(text, "groundstate")


def test_run_mismatch_and_invalid_model():
    with pytest.raises(ConfigError, match="run=scan"):
        parse_config("run = scan\n" + GS_TEXT, "groundstate")
    with pytest.raises(ConfigError):
        parse_config(GS_TEXT.replace("sigma = 0.75", "sigma = 1.5"), "groundstate")


def test_canonical_round_trip(tmp_path):
    cfg = parse_config(GS_TEXT + "solver.tau = 0.1\n", "groundstate")
    text = cfg.canonical()
    assert "solver.tau = 0.1\n" in text
    lines = text.splitlines()
    assert lines == sorted(lines)
    again = parse_config(text)
    assert again == cfg
    assert again.canonical() == text
    path = tmp_path / "c.cfg"
    path.write_text(text)
    assert load_config(path, "groundstate") == cfg


def test_report_floats_round_trip(tmp_path):
    vals = {"a": 0.1 + 0.2, "b": 1e-300, "c": True, "d": 7}
    write_report(tmp_path / "r.txt", vals)
    back = read_report(tmp_path / "r.txt")
    assert float(back["a"]) == vals["a"] and float(back["b"]) == vals["b"]
    assert back["c"] == "true" and back["d"] == "7"
