"""Serialisation: binary field snapshots, CSV tables and JSON manifests.

Binary container layout (all little-endian)::

    8 bytes   magic  b"PWMFLD01"
    4 bytes   uint32 header length H
    H bytes   UTF-8 JSON header {kind, dtype, shape, grid: {shape, extent, origin}}
    payload   C-ordered complex64 or complex128 array of ``shape``

CSV files use :mod:`csv` with a header row; floats are written with
``repr`` so every value round-trips exactly.
"""

from __future__ import annotations

import csv
import hashlib
import json
import struct
from pathlib import Path

import numpy as np

from .fields import EPS0, MU0, BispinorField, Grid3, Vec3Field

__all__ = [
    "MAGIC",
    "save_field",
    "load_field",
    "format_value",
    "write_csv",
    "read_csv",
    "write_field_slice_csv",
    "write_joint_sample_csv",
    "write_estimates_csv",
    "write_sweep_csv",
    "state_manifest",
    "write_state_manifest",
    "sha256_file",
]

MAGIC = b"PWMFLD01"
_DTYPES = {"complex64": "<c8", "complex128": "<c16"}


def _grid_dict(grid: Grid3) -> dict:
    return {"shape": list(grid.shape), "extent": list(grid.extent), "origin": list(grid.origin)}


def _grid_from(d: dict) -> Grid3:
    return Grid3(tuple(d["shape"]), tuple(d["extent"]), tuple(d["origin"]))


def save_field(path, field, dtype: str = "complex128") -> Path:
    """Write a :class:`Vec3Field` or :class:`BispinorField` snapshot."""
    if dtype not in _DTYPES:
        raise ValueError(f"dtype must be one of {sorted(_DTYPES)}")
    if isinstance(field, BispinorField):
        kind, arr = "bispinor", field.as_array()
    elif isinstance(field, Vec3Field):
        kind, arr = "vec3", field.values
    else:
        raise TypeError(f"cannot serialise {type(field).__name__}")
    header = json.dumps(
        {"kind": kind, "dtype": dtype, "shape": list(arr.shape), "grid": _grid_dict(field.grid)},
        sort_keys=True,
    ).encode()
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(header)))
        fh.write(header)
        fh.write(np.ascontiguousarray(arr, dtype=_DTYPES[dtype]).tobytes())
    return path


def load_field(path):
    """Read a snapshot written by :func:`save_field`."""
    with open(path, "rb") as fh:
        if fh.read(len(MAGIC)) != MAGIC:
            raise ValueError(f"{path}: not a photon-wm field file")
        (n,) = struct.unpack("<I", fh.read(4))
        header = json.loads(fh.read(n).decode())
        payload = fh.read()
    dtype = np.dtype(_DTYPES[header["dtype"]])
    shape = tuple(header["shape"])
    if len(payload) != dtype.itemsize * int(np.prod(shape)):
        raise ValueError(f"{path}: payload size does not match header")
    arr = np.frombuffer(payload, dtype=dtype).reshape(shape).astype(np.complex128)
    grid = _grid_from(header["grid"])
    if header["kind"] == "bispinor":
        return BispinorField.from_array(grid, arr)
    return Vec3Field(grid, arr)


def format_value(v) -> str:
    """Shortest round-trip text for numbers; ``str`` otherwise."""
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([format_value(v) for v in row])
    return path


def read_csv(path) -> tuple[list, list]:
    """Header and rows as strings."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def write_field_slice_csv(path, field, axis: int = 2, index: int | None = None) -> Path:
    """One plane of a field: node coordinates then Re/Im of every component."""
    grid = field.grid
    arr = field.as_array().reshape(-1, *grid.shape) if isinstance(field, BispinorField) else field.values
    index = grid.shape[axis] // 2 if index is None else index
    plane = np.take(arr, index, axis=axis + 1)
    others = [a for a in range(3) if a != axis]
    ua, ub = grid.axis(others[0]), grid.axis(others[1])
    names = "xyz"
    labels = [f"{s}{c}" for s in (("p", "m") if plane.shape[0] == 6 else ("",)) for c in names]
    header = [names[others[0]], names[others[1]]] + [f"{n}_{p}" for n in labels for p in ("re", "im")]

    def rows():
        for i, a in enumerate(ua):
            for j, b in enumerate(ub):
                vals = plane[:, i, j]
                out = [a, b]
                for v in vals:
                    out += [v.real, v.imag]
                yield out

    return write_csv(path, header, rows())


def write_joint_sample_csv(path, samples) -> Path:
    """Flattened 6x6 tensors, one row per ``(x1, x2, a, b)`` entry."""
    header = ["x1", "y1", "z1", "x2", "y2", "z2", "a", "b", "re", "im"]

    def rows():
        for s in samples:
            for a in range(6):
                for b in range(6):
                    v = s.value[a, b]
                    yield [*s.x1, *s.x2, a, b, v.real, v.imag]

    return write_csv(path, header, rows())


def write_estimates_csv(path, estimates: dict, label: str = "quantity") -> Path:
    """``{name: McEstimate}`` as ``label, mean, stderr, count``."""
    rows = [[k, e.mean, e.stderr, e.count] for k, e in estimates.items()]
    return write_csv(path, [label, "mean", "stderr", "count"], rows)


def write_sweep_csv(path, result) -> Path:
    from .turbulence import SweepRow

    return write_csv(path, list(SweepRow.COLUMNS), (r.values() for r in result.rows))


def _complex_matrix(c: np.ndarray) -> dict:
    return {"re": np.real(c).tolist(), "im": np.imag(c).tolist()}


def state_manifest(state, basis_files=None) -> dict:
    """Structured description of a :class:`TwoPhotonState`.

    ``basis_files`` optionally names the snapshot written for each basis
    field; their SHA-256 digests are recorded alongside.
    """
    descriptors = []
    for i, (b, m) in enumerate(zip(state.basis, state.media)):
        d = {"index": i, "grid": _grid_dict(b.grid), "energy": float(b.inner(b).real)}
        if m is None or m.is_vacuum:
            d["medium"] = "vacuum"
        else:
            d["medium"] = {
                "epsilon_r_range": [float(np.min(m.epsilon)) / EPS0, float(np.max(m.epsilon)) / EPS0],
                "mu_r_range": [float(np.min(m.mu)) / MU0, float(np.max(m.mu)) / MU0],
            }
        if basis_files is not None:
            d["file"] = Path(basis_files[i]).name
            d["sha256"] = sha256_file(basis_files[i])
        descriptors.append(d)
    return {"t": float(state.t), "basis": descriptors, "coeffs": _complex_matrix(state.coeffs)}


def write_state_manifest(path, state, basis_files=None) -> Path:
    path = Path(path)
    path.write_text(json.dumps(state_manifest(state, basis_files), indent=2, sort_keys=True) + "\n")
    return path


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()
