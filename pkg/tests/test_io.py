import json
import math

import numpy as np
import pytest

from kolmobounds import (
    MAGIC,
    OUTPUT_ENV,
    ConfigError,
    CorruptInputError,
    Lattice,
    RunConfig,
    derive_seed,
    load_config,
    random_band_limited,
    read_snapshot,
    snapshot_bytes,
    write_snapshot,
)
from kolmobounds.io import config_from_dict


def test_snapshot_round_trip_bit_exact(tmp_path, lat_aniso):
    f = random_band_limited(lat_aniso, 3, (0.5, 3.0), 1.0).replace(t=0.125)
    p = tmp_path / "a.spb"
    write_snapshot(p, f, 0.07)
    g, nu = read_snapshot(p)
    assert nu == 0.07 and g.t == 0.125 and g.lattice == lat_aniso
    assert g.coeffs.tobytes() == f.coeffs.tobytes()
    assert snapshot_bytes(g, nu) == p.read_bytes()


def test_snapshot_layout(tmp_path, lat8):
    f = random_band_limited(lat8, 1)
    raw = snapshot_bytes(f, 0.1)
    assert raw[:4] == MAGIC
    head = 4 + 12 + 24 + 16
    first = np.frombuffer(raw[head : head + 48], dtype="<c16")
    assert np.array_equal(first, f.coeffs[:, 0, 0, 0])
    assert len(raw) == head + 16 * 3 * 8**3


def test_corrupt_snapshots(tmp_path, lat8):
    p = tmp_path / "s.spb"
    with pytest.raises(CorruptInputError):
        read_snapshot(p)
    write_snapshot(p, random_band_limited(lat8, 1), 0.1)
    raw = p.read_bytes()
    p.write_bytes(raw[:-16])
    with pytest.raises(CorruptInputError, match="expected"):
        read_snapshot(p)
    p.write_bytes(b"XXXX" + raw[4:])
    with pytest.raises(CorruptInputError, match="magic"):
        read_snapshot(p)
    p.write_bytes(raw[:10])
    with pytest.raises(CorruptInputError):
        read_snapshot(p)


def test_derive_seed_is_stable_and_distinct():
    assert derive_seed(5, 0) == derive_seed(5, 0)
    assert len({derive_seed(5, s) for s in range(20)}) == 20
    assert derive_seed(5, 0) != derive_seed(6, 0)


TOML = """
nu = 0.05
dt = 0.01
t_end = 0.5
checkpoint_every = 5
seed = 11
output_dir = "out"

[lattice]
n = 16

[initial]
kind = "random"
energy = 0.5

[forcing]
variant = "stochastic"
amplitude = 0.2
enforce_bound = true

[spectrum]
a = 1.0

[bounds]
C0 = 1.5
eps = "measured"
"""


def test_load_toml_and_round_trip(tmp_path):
    p = tmp_path / "run.toml"
    p.write_text(TOML)
    cfg = load_config(p)
    assert cfg.shape == (16, 16, 16) and cfg.nu == 0.05 and cfg.n_steps == 50
    assert cfg.spectrum_a == 1.0 and cfg.bounds["C0"] == 1.5
    assert cfg.output_path() == tmp_path / "out"
    again = config_from_dict(cfg.to_dict(), base_dir=tmp_path)
    assert again.to_dict() == cfg.to_dict()
    j = tmp_path / "run.json"
    j.write_text(json.dumps(cfg.to_dict()))
    assert load_config(j).to_dict() == cfg.to_dict()


def test_forcing_model_from_config(tmp_path):
    p = tmp_path / "run.toml"
    p.write_text(TOML)
    cfg = load_config(p)
    m = cfg.forcing_model(2.0)
    assert m.clip == pytest.approx(0.05 * 2.0)
    assert m.seed == derive_seed(11, 1)
    assert m.sample_dt == cfg.dt
    assert cfg.initial_seed() == derive_seed(11, 0)


def test_env_overrides_output_dir(tmp_path, monkeypatch):
    cfg = RunConfig(output_dir="x", base_dir=str(tmp_path))
    monkeypatch.setenv(OUTPUT_ENV, str(tmp_path / "elsewhere"))
    assert cfg.output_path() == tmp_path / "elsewhere"


@pytest.mark.parametrize(
    "patch",
    [
        {"nu": 0.0},
        {"nu": -1.0},
        {"dt": 0.0},
        {"t_end": 0.015},
        {"checkpoint_every": 0},
        {"lattice": {"n": 7}},
        {"initial": {"kind": "vortex"}},
        {"initial": {"kind": "snapshot", "path": "missing.spb"}},
        {"forcing": {"variant": "gusty"}},
        {"forcing": {"variant": "steady", "amplitude": -1.0}},
        {"spectrum": {"a": 0.0}},
        {"bounds": {"C0": 0.0}},
        {"bounds": {"eps": "guess"}},
        {"bounds": {"slack": 0.5}},
        {"colour": "blue"},
    ],
)
def test_invalid_configs_rejected(tmp_path, patch):
    d = {"lattice": {"n": 8}, "nu": 0.1, "dt": 0.01, "t_end": 0.1}
    d.update(patch)
    with pytest.raises(ConfigError):
        config_from_dict(d, base_dir=tmp_path)


def test_unparseable_and_missing_files(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nope.toml")
    bad = tmp_path / "bad.toml"
    bad.write_text("nu = = 1")
    with pytest.raises(ConfigError):
        load_config(bad)
