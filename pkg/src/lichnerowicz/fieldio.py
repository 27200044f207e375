"""Sidecar field files: ``<name>.json`` metadata plus ``<name>.f64`` raw samples."""
import json
from pathlib import Path

import numpy as np

from .errors import ConfigurationError
from .grid import Grid, ScalarField, SymTensorField, VectorField, sym_index_pairs
from ._util import jsonable


def _stem(path):
    path = Path(path)
    if path.suffix in (".json", ".f64"):
        path = path.with_suffix("")
    return path


def field_metadata(grid: Grid) -> dict:
    return {
        "d": grid.d,
        "n": list(grid.n),
        "L": list(grid.L),
        "dtype": "f64",
        "order": "row-major",
        "endianness": "little",
    }


def save_field(path, field: ScalarField) -> Path:
    """Write ``field`` next to ``path`` as a json/f64 pair and return the stem."""
    stem = _stem(path)
    stem.parent.mkdir(parents=True, exist_ok=True)
    write_json(stem.with_suffix(".json"), field_metadata(field.grid))
    data = np.ascontiguousarray(field.values, dtype="<f8")
    stem.with_suffix(".f64").write_bytes(data.tobytes(order="C"))
    return stem


def load_field(path) -> ScalarField:
    stem = _stem(path)
    try:
        meta = json.loads(stem.with_suffix(".json").read_text())
        raw = stem.with_suffix(".f64").read_bytes()
    except FileNotFoundError as exc:
        raise ConfigurationError(f"missing field file: {exc.filename}") from exc
    if meta.get("dtype", "f64") != "f64" or meta.get("order", "row-major") != "row-major":
        raise ConfigurationError(f"{stem}: only f64 row-major fields are supported")
    dtype = "<f8" if meta.get("endianness", "little") == "little" else ">f8"
    grid = Grid(int(meta["d"]), tuple(meta["n"]), tuple(meta["L"]))
    values = np.frombuffer(raw, dtype=dtype)
    if values.size != grid.size:
        raise ConfigurationError(f"{stem}: {values.size} samples for a grid of {grid.size}")
    return ScalarField(grid, values.astype(np.float64).reshape(grid.shape))


def save_vector(directory, name, v: VectorField):
    for i, c in enumerate(v.components):
        save_field(Path(directory) / f"{name}_{i}", c)


def load_vector(directory, name, d) -> VectorField:
    comps = tuple(load_field(Path(directory) / f"{name}_{i}") for i in range(d))
    return VectorField(comps[0].grid, comps)


def save_tensor(directory, name, t: SymTensorField):
    for (i, j), c in t.components.items():
        save_field(Path(directory) / f"{name}_{i}{j}", c)


def load_tensor(directory, name, d) -> SymTensorField:
    comps = {(i, j): load_field(Path(directory) / f"{name}_{i}{j}") for i, j in sym_index_pairs(d)}
    grid = next(iter(comps.values())).grid
    return SymTensorField(grid, comps)


def write_json(path, obj):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(jsonable(obj), indent=2, sort_keys=True) + "\n")


def read_json(path):
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError as exc:
        raise ConfigurationError(f"missing file: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: invalid json ({exc})") from exc
