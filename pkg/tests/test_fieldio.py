import json

import numpy as np
import pytest

from lichnerowicz import fieldio
from lichnerowicz.errors import ConfigurationError
from lichnerowicz.grid import ScalarField, SymTensorField, VectorField, make_grid, random_smooth_field


def test_field_round_trip_is_bit_exact(tmp_path, rng):
    g = make_grid(2, [8, 6], [1.0, 2.5])
    f = random_smooth_field(g, rng)
    fieldio.save_field(tmp_path / "f", f)
    meta = json.loads((tmp_path / "f.json").read_text())
    assert meta["n"] == [8, 6] and meta["dtype"] == "f64" and meta["endianness"] == "little"
    assert (tmp_path / "f.f64").stat().st_size == 8 * g.size
    back = fieldio.load_field(tmp_path / "f")
    assert back.grid == g
    assert np.array_equal(back.values, f.values)


def test_vector_and_tensor_round_trip(tmp_path, rng):
    g = make_grid(2, 8, 1.0)
    v = VectorField(g, (random_smooth_field(g, rng), random_smooth_field(g, rng)))
    t = SymTensorField(g, {(0, 0): 1.0, (0, 1): random_smooth_field(g, rng), (1, 1): -1.0})
    fieldio.save_vector(tmp_path, "W", v)
    fieldio.save_tensor(tmp_path, "s", t)
    v2 = fieldio.load_vector(tmp_path, "W", 2)
    t2 = fieldio.load_tensor(tmp_path, "s", 2)
    assert all(np.array_equal(a.values, b.values) for a, b in zip(v.components, v2.components))
    assert np.array_equal(t[0, 1].values, t2[1, 0].values)


def test_missing_and_truncated_files(tmp_path):
    with pytest.raises(ConfigurationError):
        fieldio.load_field(tmp_path / "nope")
    g = make_grid(1, 8, 1.0)
    fieldio.save_field(tmp_path / "f", ScalarField.constant(g, 1.0))
    (tmp_path / "f.f64").write_bytes(b"\0" * 16)
    with pytest.raises(ConfigurationError):
        fieldio.load_field(tmp_path / "f")


def test_json_handles_non_finite(tmp_path):
    fieldio.write_json(tmp_path / "r.json", {"x": np.float64(np.inf), "y": np.arange(2)})
    assert fieldio.read_json(tmp_path / "r.json") == {"x": "inf", "y": [0, 1]}
