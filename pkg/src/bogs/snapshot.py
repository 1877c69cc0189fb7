"""Binary snapshot files.

Layout, little endian throughout::

    magic      4 bytes  b'BOGS'
    version    u16
    equation   u8       0 = BO, 1 = mBO, 2 = DNLS
    n_points   u32
    length     f64
    time       f64
    samples    n f64 (real) or n (re, im) f64 pairs (DNLS)
"""

import struct
from pathlib import Path
from dataclasses import dataclass

import numpy as np

from bogs.errors import (
    FieldError,
    SnapshotError,
    SnapshotMagicError,
    SnapshotVersionError,
    SnapshotTruncatedError,
)
from bogs.spectral import Grid, Field, RealField, ComplexField
from bogs.equations import EquationKind

MAGIC = b'BOGS'
FORMAT_VERSION = 1
HEADER = struct.Struct('<4sHBIdd')
EQUATION_TAGS = {EquationKind.BO: 0, EquationKind.MBO: 1, EquationKind.DNLS: 2}
_KINDS = {tag: kind for kind, tag in EQUATION_TAGS.items()}


@dataclass(frozen=True)
class SnapshotFile:
    """One field at one time, tagged with its equation."""

    kind: EquationKind
    time: float
    field: Field

    def __post_init__(self) -> None:
        if (self.kind is EquationKind.DNLS) == self.field.is_real:
            expected = 'complex' if self.kind is EquationKind.DNLS else 'real'
            raise FieldError(f'{self.kind.value} snapshots hold {expected} samples')

    def to_bytes(self) -> bytes:
        """Encode header and payload."""
        grid = self.field.grid
        header = HEADER.pack(
            MAGIC, FORMAT_VERSION, EQUATION_TAGS[self.kind], grid.n_points, grid.length, self.time
        )
        dtype = '<f8' if self.field.is_real else '<c16'
        return header + np.asarray(self.field.samples, dtype=dtype).tobytes()

    @classmethod
    def from_bytes(cls, data: bytes, source: str = '<bytes>') -> 'SnapshotFile':
        """Decode a snapshot, naming ``source`` in error messages."""
        if len(data) < len(MAGIC) or data[: len(MAGIC)] != MAGIC:
            raise SnapshotMagicError(f'{source}: not a snapshot file (bad magic)')
        if len(data) < HEADER.size:
            raise SnapshotTruncatedError(
                f'{source}: header needs {HEADER.size} bytes, file has {len(data)}'
            )
        _, version, tag, n_points, length, time = HEADER.unpack_from(data)
        if version != FORMAT_VERSION:
            raise SnapshotVersionError(
                f'{source}: format version {version} is not supported (expected {FORMAT_VERSION})'
            )
        if tag not in _KINDS:
            raise SnapshotError(f'{source}: unknown equation tag {tag}')
        kind = _KINDS[tag]
        dtype = np.dtype('<c16' if kind is EquationKind.DNLS else '<f8')
        expected = HEADER.size + n_points * dtype.itemsize
        if len(data) < expected:
            raise SnapshotTruncatedError(
                f'{source}: payload needs {expected} bytes, file has {len(data)}'
            )
        if len(data) > expected:
            raise SnapshotError(f'{source}: {len(data) - expected} trailing bytes after the payload')
        samples = np.frombuffer(data, dtype=dtype, count=n_points, offset=HEADER.size)
        grid = Grid(n_points, length)
        f = ComplexField(grid, samples) if kind is EquationKind.DNLS else RealField(grid, samples)
        return cls(kind, time, f)

    def write(self, path: Path | str) -> None:
        """Write the encoded snapshot to ``path``."""
        path = Path(path)
        try:
            path.write_bytes(self.to_bytes())
        except OSError as e:
            raise SnapshotError(f'cannot write snapshot {path}: {e.strerror or e}') from e

    @classmethod
    def read(cls, path: Path | str) -> 'SnapshotFile':
        """Read and decode the snapshot at ``path``."""
        path = Path(path)
        try:
            data = path.read_bytes()
        except OSError as e:
            raise SnapshotError(f'cannot read snapshot {path}: {e.strerror or e}') from e
        return cls.from_bytes(data, str(path))


def write_snapshot(
    f: Field, path: Path | str, *, kind: EquationKind | None = None, time: float = 0.0
) -> None:
    """Write ``f``; the equation tag defaults to mBO for real and DNLS for complex fields."""
    if kind is None:
        kind = EquationKind.MBO if f.is_real else EquationKind.DNLS
    SnapshotFile(kind, time, f).write(path)


def read_snapshot(path: Path | str) -> Field:
    """Field stored in the snapshot at ``path``."""
    return SnapshotFile.read(path).field
