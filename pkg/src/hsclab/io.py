"""Binary field dumps: little-endian IEEE doubles with a JSON metadata sidecar.

Layout: magic "HSCLAB01" (8 bytes), then little-endian uint32 n, uint32 rank,
uint32 is_complex, uint32 axis sizes (2n of them), float64 axis periods (2n),
then the payload as float64 (complex data interleaved re, im) in C order over
grid axes followed by component axes.
"""

from __future__ import annotations

import base64
import json
import struct
from pathlib import Path

import numpy as np

from .errors import DomainError
from .grid import ComplexGrid, ScalarField
from .metrics import HermitianMetricField

MAGIC = b"HSCLAB01"

RANK_SCALAR = 0
RANK_METRIC = 2
RANK_CURVATURE = 4


def _component_shape(n: int, rank: int) -> tuple[int, ...]:
    return (n,) * rank


def encode_array(grid: ComplexGrid, values: np.ndarray, rank: int) -> bytes:
    arr = np.asarray(values)
    expected = grid.shape + _component_shape(grid.n, rank)
    if arr.shape != expected:
        raise DomainError(f"array shape {arr.shape} does not match rank-{rank} field on grid ({expected})")
    is_complex = int(np.iscomplexobj(arr))
    header = MAGIC
    header += struct.pack("<III", grid.n, rank, is_complex)
    header += struct.pack(f"<{2 * grid.n}I", *grid.sizes)
    header += struct.pack(f"<{2 * grid.n}d", *grid.periods)
    if is_complex:
        payload = np.ascontiguousarray(arr, dtype=np.complex128).view(np.float64)
    else:
        payload = np.ascontiguousarray(arr, dtype=np.float64)
    return header + payload.astype("<f8").tobytes()


def decode_array(blob: bytes) -> tuple[ComplexGrid, np.ndarray, int]:
    if blob[:8] != MAGIC:
        raise DomainError("not a field dump: bad magic")
    off = 8
    n, rank, is_complex = struct.unpack_from("<III", blob, off)
    off += 12
    sizes = struct.unpack_from(f"<{2 * n}I", blob, off)
    off += 4 * 2 * n
    periods = struct.unpack_from(f"<{2 * n}d", blob, off)
    off += 8 * 2 * n
    grid = ComplexGrid(n, sizes, periods)
    shape = grid.shape + _component_shape(n, rank)
    count = int(np.prod(shape)) * (2 if is_complex else 1)
    if len(blob) - off < 8 * count:
        raise DomainError(
            f"field dump truncated: payload has {len(blob) - off} bytes, header promises {8 * count}"
        )
    payload = np.frombuffer(blob, dtype="<f8", offset=off, count=count).astype(np.float64)
    if is_complex:
        arr = payload.view(np.complex128).reshape(shape)
    else:
        arr = payload.reshape(shape)
    return grid, arr.copy(), rank


def sidecar_header(grid: ComplexGrid, rank: int, is_complex: bool) -> dict:
    return {
        "magic": MAGIC.decode(),
        "n": grid.n,
        "sizes": list(grid.sizes),
        "periods": list(grid.periods),
        "rank": rank,
        "complex": bool(is_complex),
    }


def save_array(path: str | Path, grid: ComplexGrid, values: np.ndarray, rank: int) -> None:
    path = Path(path)
    path.write_bytes(encode_array(grid, values, rank))
    meta = sidecar_header(grid, rank, np.iscomplexobj(values))
    Path(str(path) + ".json").write_text(json.dumps(meta, sort_keys=True, indent=2) + "\n")


def load_array(path: str | Path) -> tuple[ComplexGrid, np.ndarray, int]:
    return decode_array(Path(path).read_bytes())


def save_scalar_field(path: str | Path, field: ScalarField) -> None:
    save_array(path, field.grid, field.values, RANK_SCALAR)


def load_scalar_field(path: str | Path) -> ScalarField:
    grid, arr, rank = load_array(path)
    if rank != RANK_SCALAR:
        raise DomainError(f"expected a scalar dump (rank 0), got rank {rank}")
    return ScalarField(grid, arr)


def save_metric(path: str | Path, metric: HermitianMetricField) -> None:
    save_array(path, metric.grid, metric.g, RANK_METRIC)


def load_metric(path: str | Path) -> HermitianMetricField:
    grid, arr, rank = load_array(path)
    if rank != RANK_METRIC:
        raise DomainError(f"expected a metric dump (rank 2), got rank {rank}")
    return HermitianMetricField(grid, arr)


def to_base64(blob: bytes) -> str:
    return base64.b64encode(blob).decode("ascii")


def from_base64(text: str) -> bytes:
    return base64.b64decode(text.encode("ascii"))
