"""File formats: binary block operators, JSON spaces, maps, and reports.

Binary operator layout (all integers little-endian uint32, floats
little-endian float64):

    bytes 0..6   magic "ROELAB1"
    byte  7      flags; bit 0 set means source and target differ
    uint32       n_target, then n_target fiber dimensions
    [uint32      n_source, then n_source fiber dimensions]   (flag bit 0)
    payload      blocks in row-major point order (y outer, x inner), each
                 block row-major, each entry as a (re, im) float64 pair

The metric itself is not stored; readers supply the base space(s), and
the fiber dimensions recorded in the file must match their point counts.
Writing is bit-exact: reading back yields the identical matrix.
"""

from __future__ import annotations

import json
import struct

import numpy as np

from .maps import PointMap
from .operators import BlockOperator, FiberedSpace
from .spaces import FiniteMetricSpace

__all__ = [
    "MAGIC",
    "write_operator",
    "read_operator",
    "operator_to_json",
    "operator_from_json",
    "load_space",
    "save_space",
    "load_map",
    "save_map",
    "report_bytes",
    "write_report",
]

MAGIC = b"ROELAB1"
_FLAG_RECTANGULAR = 1


def _block_stream(op: BlockOperator):
    for y in range(op.target.base.n):
        for x in range(op.source.base.n):
            yield op.block(y, x)


def write_operator(path, op: BlockOperator) -> None:
    with open(path, "wb") as fh:
        rectangular = op.source != op.target
        fh.write(MAGIC)
        fh.write(struct.pack("<B", _FLAG_RECTANGULAR if rectangular else 0))
        fh.write(struct.pack("<I", op.target.base.n))
        fh.write(np.asarray(op.target.fiber_dims, dtype="<u4").tobytes())
        if rectangular:
            fh.write(struct.pack("<I", op.source.base.n))
            fh.write(np.asarray(op.source.fiber_dims, dtype="<u4").tobytes())
        for blk in _block_stream(op):
            pairs = np.empty(blk.shape + (2,), dtype="<f8")
            pairs[..., 0] = blk.real
            pairs[..., 1] = blk.imag
            fh.write(pairs.tobytes())


def read_operator(
    path,
    target_base: FiniteMetricSpace,
    source_base: FiniteMetricSpace | None = None,
) -> BlockOperator:
    """Read a binary operator; bases must be supplied by the caller.

    For square operators (flag clear) only target_base is needed; a
    rectangular file requires source_base as well.
    """
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[: len(MAGIC)] != MAGIC:
        raise ValueError(f"not a {MAGIC.decode()} file: bad magic {raw[:7]!r}")
    pos = len(MAGIC)
    (flags,) = struct.unpack_from("<B", raw, pos)
    pos += 1
    rectangular = bool(flags & _FLAG_RECTANGULAR)

    def read_dims(base: FiniteMetricSpace, nonlocal_pos):
        (n,) = struct.unpack_from("<I", raw, nonlocal_pos)
        nonlocal_pos += 4
        if n != base.n:
            raise ValueError(f"file records {n} points, supplied space has {base.n}")
        dims = np.frombuffer(raw, dtype="<u4", count=n, offset=nonlocal_pos).astype(np.int64)
        nonlocal_pos += 4 * n
        return FiberedSpace(base, dims), nonlocal_pos

    target, pos = read_dims(target_base, pos)
    if rectangular:
        if source_base is None:
            raise ValueError("rectangular operator file needs an explicit source space")
        source, pos = read_dims(source_base, pos)
    else:
        if source_base is not None and source_base != target_base:
            raise ValueError("square operator file, but a different source space was supplied")
        source = target

    expected = target.total_dim * source.total_dim
    payload = np.frombuffer(raw, dtype="<f8", offset=pos)
    if payload.size != 2 * expected:
        raise ValueError(
            f"payload holds {payload.size // 2} entries, expected {expected}"
        )
    flat = payload[0::2] + 1j * payload[1::2]
    mat = np.zeros((target.total_dim, source.total_dim), dtype=complex)
    cursor = 0
    for y in range(target.base.n):
        dy = int(target.fiber_dims[y])
        for x in range(source.base.n):
            dx = int(source.fiber_dims[x])
            mat[target.slice_of(y), source.slice_of(x)] = flat[
                cursor : cursor + dy * dx
            ].reshape(dy, dx)
            cursor += dy * dx
    return BlockOperator(source, target, mat)


def operator_to_json(op: BlockOperator) -> dict:
    return {
        "target_space": op.target.base.to_json(),
        "target_dims": [int(d) for d in op.target.fiber_dims],
        "source_space": op.source.base.to_json(),
        "source_dims": [int(d) for d in op.source.fiber_dims],
        "re": op.matrix.real.tolist(),
        "im": op.matrix.imag.tolist(),
    }


def operator_from_json(data: dict) -> BlockOperator:
    target = FiberedSpace(FiniteMetricSpace.from_json(data["target_space"]), data["target_dims"])
    source = FiberedSpace(FiniteMetricSpace.from_json(data["source_space"]), data["source_dims"])
    mat = np.array(data["re"], dtype=float) + 1j * np.array(data["im"], dtype=float)
    return BlockOperator(source, target, mat)


def load_space(path) -> FiniteMetricSpace:
    with open(path) as fh:
        return FiniteMetricSpace.from_json(json.load(fh))


def save_space(path, space: FiniteMetricSpace) -> None:
    with open(path, "w") as fh:
        fh.write(report_bytes(space.to_json()).decode())


def load_map(path) -> PointMap:
    with open(path) as fh:
        data = json.load(fh)
    source = FiniteMetricSpace.from_json(data["source"])
    target = FiniteMetricSpace.from_json(data["target"])
    return PointMap(source, target, data["table"])


def save_map(path, f: PointMap) -> None:
    data = {
        "source": f.source.to_json(),
        "target": f.target.to_json(),
        "table": [int(v) for v in f.values],
    }
    with open(path, "w") as fh:
        fh.write(report_bytes(data).decode())


def report_bytes(data: dict) -> bytes:
    """Canonical JSON bytes: sorted keys, fixed indentation, trailing newline."""
    return (json.dumps(data, sort_keys=True, indent=2) + "\n").encode()


def write_report(path, data: dict) -> None:
    with open(path, "wb") as fh:
        fh.write(report_bytes(data))
