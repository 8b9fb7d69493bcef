"""Binary field/sinogram/mask formats, CSV export and key=value text files.

RGF1: magic ``RGF1``, u32 dim, u32 n, n^dim little-endian float64 (row-major).
RSG1: magic ``RSG1``, u32 n_theta, u32 n_s, n_theta*n_s float64 (row-major).
RMK1: magic ``RMK1``, u32 n_theta, u32 n_s, one byte (0/1) per bin.
"""

from __future__ import annotations

import logging
import struct
from pathlib import Path

import numpy as np

from .exceptions import DimensionError, ParameterError
from .grid import GridField
from .schemas import SinogramGeometry
from .xray import LineMask, Sinogram

logger = logging.getLogger(__name__)

_HEADER = struct.Struct("<4sII")


def _read_header(data: bytes, magic: bytes, path: Path) -> tuple[int, int]:
    if len(data) < _HEADER.size:
        raise ParameterError(f"{path}: file too short for a {magic.decode()} header")
    found, a, b = _HEADER.unpack_from(data)
    if found != magic:
        raise ParameterError(f"{path}: bad magic {found!r}, expected {magic!r}")
    return a, b


def write_grid(path: str | Path, field: GridField) -> None:
    path = Path(path)
    payload = np.ascontiguousarray(field.values, dtype="<f8").tobytes()
    path.write_bytes(_HEADER.pack(b"RGF1", field.dim, field.n) + payload)
    logger.debug(f"Wrote RGF1 {path} (dim={field.dim}, n={field.n})")


def read_grid(path: str | Path) -> GridField:
    path = Path(path)
    data = path.read_bytes()
    dim, n = _read_header(data, b"RGF1", path)
    values = np.frombuffer(data, dtype="<f8", offset=_HEADER.size)
    if values.size != n ** dim:
        raise DimensionError(f"{path}: expected {n ** dim} values, found {values.size}")
    return GridField(dim=dim, n=n, values=values.reshape((n,) * dim))


def write_sinogram(path: str | Path, sino: Sinogram) -> None:
    path = Path(path)
    g = sino.geometry
    payload = np.ascontiguousarray(sino.values, dtype="<f8").tobytes()
    path.write_bytes(_HEADER.pack(b"RSG1", g.n_theta, g.n_s) + payload)


def read_sinogram(path: str | Path, n: int) -> Sinogram:
    """Read an RSG1 file; the grid size ``n`` is not stored and must be supplied."""
    path = Path(path)
    data = path.read_bytes()
    n_theta, n_s = _read_header(data, b"RSG1", path)
    values = np.frombuffer(data, dtype="<f8", offset=_HEADER.size)
    if values.size != n_theta * n_s:
        raise DimensionError(f"{path}: expected {n_theta * n_s} values, found {values.size}")
    geometry = SinogramGeometry(n=n, n_theta=n_theta, n_s=n_s)
    return Sinogram(geometry=geometry, values=values.reshape(n_theta, n_s))


def write_mask(path: str | Path, mask: LineMask) -> None:
    path = Path(path)
    g = mask.geometry
    payload = np.ascontiguousarray(mask.values, dtype=np.uint8).tobytes()
    path.write_bytes(_HEADER.pack(b"RMK1", g.n_theta, g.n_s) + payload)


def read_mask(path: str | Path, n: int) -> LineMask:
    path = Path(path)
    data = path.read_bytes()
    n_theta, n_s = _read_header(data, b"RMK1", path)
    values = np.frombuffer(data, dtype=np.uint8, offset=_HEADER.size)
    if values.size != n_theta * n_s:
        raise DimensionError(f"{path}: expected {n_theta * n_s} bytes, found {values.size}")
    geometry = SinogramGeometry(n=n, n_theta=n_theta, n_s=n_s)
    return LineMask(geometry=geometry, values=values.reshape(n_theta, n_s).astype(bool))


def export_csv(path: str | Path, field: GridField) -> None:
    """One CSV row per grid row (2D fields only)."""
    if field.dim != 2:
        raise DimensionError("CSV export is only defined for 2D fields")
    np.savetxt(Path(path), field.values, delimiter=",", fmt="%.17g")


def read_key_values(path: str | Path) -> dict[str, str]:
    """Parse a ``key=value`` text file; ``#`` starts a comment."""
    path = Path(path)
    result: dict[str, str] = {}
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParameterError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ParameterError(f"{path}:{lineno}: empty key")
        result[key] = value
    return result


def write_key_values(path: str | Path, values: dict) -> None:
    Path(path).write_text("".join(f"{k}={v}\n" for k, v in values.items()))
