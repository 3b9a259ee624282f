"""Initial data families and the binary checkpoint format.

Checkpoint layout (all little-endian)::

    offset  0  4 bytes   magic b"CSSL"
    offset  4  u32       format version (1)
    offset  8  u32       n
    offset 12  f64       L
    offset 20  f64       t
    offset 28  f64       g (real part)
    offset 36  n*n*16    phi, row-major, interleaved (re, im) f64 pairs
"""

from __future__ import annotations

import os
import struct
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .covariant import OperatorContext, cov_grad, l2_sum
from .errors import CheckpointFormatError, ParameterError
from .evolution import SimulationState
from .gauge import make_coulomb_data
from .grid import SpectralGrid

MAGIC = b"CSSL"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sIIddd")
HEADER_SIZE = _HEADER.size

DATUM_KINDS = ("gaussian", "plane_wave", "ring", "file")


@dataclass(frozen=True)
class DatumSpec:
    """Initial-data family and its parameters.

    ``momentum`` is a pair of integer lattice modes (plane wave only);
    ``twist`` is the winding number of the ring datum.
    """

    kind: str = "gaussian"
    amplitude: float = 0.05
    width: float = 1.0
    momentum: tuple[int, int] = (0, 0)
    twist: int = 1
    path: str | None = None

    def validate(self) -> None:
        if self.kind not in DATUM_KINDS:
            raise ParameterError(f"unknown datum kind {self.kind!r}; expected one of {DATUM_KINDS}")
        if not np.isfinite(self.amplitude) or self.amplitude < 0:
            raise ParameterError(f"amplitude must be >= 0, got {self.amplitude}")
        if not np.isfinite(self.width) or self.width <= 0:
            raise ParameterError(f"width must be positive, got {self.width}")
        if any(int(m) != m for m in self.momentum):
            raise ParameterError(f"plane-wave momentum must be integer lattice modes, got {self.momentum}")
        if self.kind == "file" and not self.path:
            raise ParameterError("file datum needs a path")


@dataclass(frozen=True)
class NormInventory:
    """Weighted Sobolev sizes of a datum measured with its own Coulomb potentials."""

    l2: float
    cov_grad: float
    cov_hessian: float
    x_weighted: float
    x_cov_grad: float
    x2_weighted: float

    @property
    def total(self) -> float:
        return self.l2 + self.cov_grad + self.cov_hessian + self.x_weighted + self.x_cov_grad + self.x2_weighted

    def as_dict(self) -> dict:
        return {
            "l2": self.l2,
            "cov_grad": self.cov_grad,
            "cov_hessian": self.cov_hessian,
            "x_weighted": self.x_weighted,
            "x_cov_grad": self.x_cov_grad,
            "x2_weighted": self.x2_weighted,
            "total": self.total,
        }


def norm_inventory(grid: SpectralGrid, phi: np.ndarray) -> NormInventory:
    """``||phi||, ||D phi||, ||D^(2) phi||, || |x| phi ||, || |x| D phi ||, || |x|^2 phi ||``."""
    gauge, phi = make_coulomb_data(grid, phi)
    ctx = OperatorContext(grid, 0.0, gauge)
    first = [cov_grad(phi, ctx, j) for j in (1, 2)]
    second = [cov_grad(first[k], ctx, j) for j in (1, 2) for k in (0, 1)]
    r = np.sqrt(grid.r2)
    return NormInventory(
        l2=grid.lp_norm(phi, 2),
        cov_grad=l2_sum(grid, first),
        cov_hessian=l2_sum(grid, second),
        x_weighted=grid.lp_norm(r * phi, 2),
        x_cov_grad=l2_sum(grid, [r * d for d in first]),
        x2_weighted=grid.lp_norm(grid.r2 * phi, 2),
    )


def build_datum(spec: DatumSpec, grid: SpectralGrid) -> tuple[np.ndarray, NormInventory]:
    """Sample the datum on ``grid`` and report its norm inventory.

    * ``gaussian``: ``eps exp(-|x|^2 / (2 w^2))``
    * ``plane_wave``: ``eps exp(i k.x)`` with ``k = (2 pi / L) momentum``
    * ``ring``: ``eps ((x1 + i s x2) / w)^|m| exp(-|x|^2 / (2 w^2))``, ``s = sign(m)``
    * ``file``: samples read from a checkpoint; ``amplitude`` is ignored
    """
    spec.validate()
    eps = float(spec.amplitude)
    x1, x2 = grid.x
    w = float(spec.width)
    if spec.kind == "gaussian":
        phi = eps * np.exp(-grid.r2 / (2 * w * w)) + 0j
    elif spec.kind == "plane_wave":
        m1, m2 = (int(m) for m in spec.momentum)
        phi = eps * np.exp(1j * grid.dk * (m1 * x1 + m2 * x2))
    elif spec.kind == "ring":
        m = int(spec.twist)
        z = (x1 + 1j * np.sign(m) * x2) / w
        phi = eps * z ** abs(m) * np.exp(-grid.r2 / (2 * w * w))
    else:
        header, phi = read_checkpoint(spec.path)
        if header.n != grid.n or header.L != grid.L:
            raise ParameterError(
                f"checkpoint grid (n={header.n}, L={header.L}) differs from requested {grid}"
            )
    phi = np.asarray(phi, dtype=np.complex128)
    return phi, norm_inventory(grid, phi)


@dataclass(frozen=True)
class CheckpointHeader:
    version: int
    n: int
    L: float
    t: float
    g: float


def write_checkpoint(path: str | os.PathLike, state: SimulationState, L: float) -> None:
    """Write ``state`` in the binary layout; only ``Re(g)`` is stored.

    A nonzero imaginary part of ``g`` is dropped with a warning.
    """
    phi = np.ascontiguousarray(state.phi, dtype="<c16")
    n = phi.shape[0]
    if phi.shape != (n, n):
        raise ParameterError(f"state field must be square, got {phi.shape}")
    g = complex(state.g)
    if g.imag != 0:
        warnings.warn("checkpoint stores only Re(g); imaginary part dropped", stacklevel=2)
    header = _HEADER.pack(MAGIC, FORMAT_VERSION, n, float(L), float(state.t), g.real)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(phi.tobytes(order="C"))


def read_checkpoint(path: str | os.PathLike) -> tuple[CheckpointHeader, np.ndarray]:
    """Read a checkpoint; any layout violation raises :class:`CheckpointFormatError`."""
    data = Path(path).read_bytes()
    if len(data) < 4 or data[:4] != MAGIC:
        raise CheckpointFormatError(f"bad magic {data[:4]!r}, expected {MAGIC!r}", 0)
    if len(data) < 8:
        raise CheckpointFormatError("truncated header", len(data))
    (version,) = struct.unpack_from("<I", data, 4)
    if version != FORMAT_VERSION:
        raise CheckpointFormatError(f"unsupported format version {version}", 4)
    if len(data) < HEADER_SIZE:
        raise CheckpointFormatError("truncated header", len(data))
    _, _, n, L, t, g = _HEADER.unpack_from(data, 0)
    if n < 1:
        raise CheckpointFormatError(f"invalid grid size {n}", 8)
    expected = HEADER_SIZE + 16 * n * n
    if len(data) < expected:
        raise CheckpointFormatError(f"truncated samples: {len(data)} of {expected} bytes", len(data))
    if len(data) > expected:
        raise CheckpointFormatError(f"{len(data) - expected} trailing bytes", expected)
    phi = np.frombuffer(data, dtype="<c16", count=n * n, offset=HEADER_SIZE).reshape(n, n)
    return CheckpointHeader(version, n, L, t, g), phi.astype(np.complex128)


__all__ = [
    "CheckpointHeader",
    "DatumSpec",
    "NormInventory",
    "build_datum",
    "norm_inventory",
    "read_checkpoint",
    "write_checkpoint",
]
