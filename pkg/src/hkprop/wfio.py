"""Versioned binary formats for wave fields and ensemble streams, CSV helpers.

Wave-field file (extension ``.hkwf``), all little-endian:

=========  =======  ====================================================
offset     type     content
=========  =======  ====================================================
0          4s       magic ``HKWF``
4          u32      format version (1)
8          u32      dimension d
12         u32      representation (0 = position, 1 = momentum)
16         f64      epsilon
24         f64      time
32         d x u64  grid points per axis
..         d x f64  lower bounds
..         d x f64  upper bounds
..         d x u8   periodic flags
..         payload  interleaved re/im f64 pairs, row-major
=========  =======  ====================================================

Ensemble stream (extension ``.hkes``): header ``HKES`` | version u32 (1) |
d u32 | M u64 | epsilon f64, then one block per snapshot consisting of the
time (f64) followed by M rows of ``[q (d), p (d), S, Re u, Im u, theta]``
as f64.  The stream stores the propagated state only; initial weights are
reproducible from the sampling plan.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .propagation import HKEnsemble
from .synthesis import GridSpec, WaveField

__all__ = [
    "write_wavefield",
    "read_wavefield",
    "wavefield_csv_slice",
    "EnsembleWriter",
    "read_ensemble_stream",
    "EnsembleSnapshot",
    "write_csv",
]

_WF_MAGIC = b"HKWF"
_ES_MAGIC = b"HKES"
_VERSION = 1
_REPS = ("position", "momentum")


def write_wavefield(path, field: WaveField) -> None:
    grid = field.grid
    d = grid.dimension
    with open(path, "wb") as fh:
        fh.write(struct.pack("<4sIII", _WF_MAGIC, _VERSION, d, _REPS.index(field.representation)))
        fh.write(struct.pack("<dd", field.epsilon, field.time))
        fh.write(np.asarray(grid.n, dtype="<u8").tobytes())
        fh.write(np.asarray(grid.lower, dtype="<f8").tobytes())
        fh.write(np.asarray(grid.upper, dtype="<f8").tobytes())
        fh.write(np.asarray(grid.periodic, dtype="u1").tobytes())
        flat = np.ascontiguousarray(field.values).ravel()
        inter = np.empty(2 * flat.size, dtype="<f8")
        inter[0::2] = flat.real
        inter[1::2] = flat.imag
        fh.write(inter.tobytes())


def read_wavefield(path) -> WaveField:
    with open(path, "rb") as fh:
        magic, version, d, rep = struct.unpack("<4sIII", fh.read(16))
        if magic != _WF_MAGIC:
            raise ValueError(f"{path}: not a wave-field file")
        if version != _VERSION:
            raise ValueError(f"{path}: unsupported format version {version}")
        eps, time = struct.unpack("<dd", fh.read(16))
        n = np.frombuffer(fh.read(8 * d), dtype="<u8").astype(int)
        lower = np.frombuffer(fh.read(8 * d), dtype="<f8").copy()
        upper = np.frombuffer(fh.read(8 * d), dtype="<f8").copy()
        periodic = np.frombuffer(fh.read(d), dtype="u1").astype(bool)
        grid = GridSpec(lower, upper, n, periodic)
        count = 2 * int(np.prod(n))
        inter = np.frombuffer(fh.read(8 * count), dtype="<f8")
        values = (inter[0::2] + 1j * inter[1::2]).reshape(grid.shape)
    return WaveField(grid, values, _REPS[rep], eps, time)


def wavefield_csv_slice(path, field: WaveField, axis: int = 0, index=None) -> None:
    """Write a 1-d slice (coordinate, re, im, abs) of a field as CSV."""
    grid = field.grid
    if axis < 0 or axis >= grid.dimension:
        raise ValueError(f"axis {axis} out of range for dimension {grid.dimension}")
    values = field.values
    if grid.dimension > 1:
        sel = [k // 2 for k in grid.shape] if index is None else list(index)
        sel[axis] = slice(None)
        values = values[tuple(sel)]
    coord = grid.axes()[axis]
    rows = np.column_stack([coord, values.real, values.imag, np.abs(values)])
    header = ["x", "re", "im", "abs"]
    write_csv(path, header, rows)


@dataclass(frozen=True)
class EnsembleSnapshot:
    """One decoded snapshot of an ensemble stream (propagated state only)."""

    time: float
    epsilon: float
    q: np.ndarray
    p: np.ndarray
    action: np.ndarray
    u: np.ndarray
    theta: np.ndarray


class EnsembleWriter:
    """Streams ensembles to a ``.hkes`` file; usable as a context manager."""

    def __init__(self, path, dimension: int, size: int, epsilon: float):
        self._fh = open(path, "wb")
        self.dimension = dimension
        self.size = size
        self._fh.write(struct.pack("<4sII", _ES_MAGIC, _VERSION, dimension))
        self._fh.write(struct.pack("<Qd", size, epsilon))

    def append(self, ens: HKEnsemble) -> None:
        if ens.dimension != self.dimension or ens.size != self.size:
            raise ValueError("ensemble shape does not match the stream header")
        self._fh.write(struct.pack("<d", ens.time))
        rows = np.empty((ens.size, 2 * self.dimension + 4), dtype="<f8")
        rows[:, : self.dimension] = ens.q
        rows[:, self.dimension : 2 * self.dimension] = ens.p
        rows[:, 2 * self.dimension] = ens.action
        rows[:, 2 * self.dimension + 1] = ens.u.real
        rows[:, 2 * self.dimension + 2] = ens.u.imag
        rows[:, 2 * self.dimension + 3] = ens.theta
        self._fh.write(rows.tobytes())

    def close(self) -> None:
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
        return False


def read_ensemble_stream(path) -> list[EnsembleSnapshot]:
    out = []
    with open(path, "rb") as fh:
        magic, version, d = struct.unpack("<4sII", fh.read(12))
        if magic != _ES_MAGIC:
            raise ValueError(f"{path}: not an ensemble stream")
        if version != _VERSION:
            raise ValueError(f"{path}: unsupported format version {version}")
        m, eps = struct.unpack("<Qd", fh.read(16))
        row_bytes = 8 * (2 * d + 4)
        while True:
            head = fh.read(8)
            if not head:
                break
            (t,) = struct.unpack("<d", head)
            rows = np.frombuffer(fh.read(m * row_bytes), dtype="<f8").reshape(m, 2 * d + 4)
            out.append(
                EnsembleSnapshot(
                    time=t, epsilon=eps,
                    q=rows[:, :d].copy(), p=rows[:, d : 2 * d].copy(),
                    action=rows[:, 2 * d].copy(),
                    u=rows[:, 2 * d + 1] + 1j * rows[:, 2 * d + 2],
                    theta=rows[:, 2 * d + 3].copy(),
                )
            )
    return out


def write_csv(path, header, rows) -> None:
    """Deterministically formatted CSV (%.17g) with a comma-separated header."""
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(f"{x:.17g}" for x in row) + "\n")
