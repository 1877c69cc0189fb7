"""Run directories: CSV reports, snapshots and metadata of one command."""

import csv
import json
import logging
from typing import Any
from pathlib import Path
from datetime import datetime
from collections.abc import Mapping, Iterable, Sequence

import numpy as np

from bogs.errors import ArtifactError
from bogs.spectral import Field
from bogs.snapshot import write_snapshot
from bogs.equations import EquationKind

logger = logging.getLogger(__name__)

DEFAULT_OUT_DIR = Path('runs')
METADATA_FILE = 'metadata.json'


def format_cell(value: Any) -> str:
    """Render a CSV cell; floats use ``repr`` so equal values give equal text."""
    if isinstance(value, str):
        return value
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


class RunDirectory:
    """Output directory ``<out>/<YYYYmmdd-HHMMSS>-seed<seed>``.

    Files are only written through this object, which keeps the artifact list
    for ``metadata.json``.
    """

    def __init__(
        self,
        out_dir: Path | str,
        command: str,
        seed: int,
        config: Mapping[str, Any] | None = None,
        now: datetime | None = None,
    ) -> None:
        self.command = command
        self.seed = seed
        self.config = dict(config or {})
        self.timestamp = now or datetime.now()
        self.artifacts: list[str] = []
        base = Path(out_dir) / f'{self.timestamp:%Y%m%d-%H%M%S}-seed{seed}'
        path = base
        suffix = 1
        while path.exists():
            path = base.with_name(f'{base.name}-{suffix}')
            suffix += 1
        try:
            path.mkdir(parents=True)
        except OSError as e:
            raise ArtifactError(f'cannot create run directory {path}: {e.strerror or e}') from e
        self.path = path
        logger.debug('run directory %s', path)

    def _record(self, name: str) -> Path:
        if name not in self.artifacts:
            self.artifacts.append(name)
        return self.path / name

    def write_csv(self, name: str, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
        """Write a CSV table, rejecting rows whose width differs from the header."""
        path = self._record(name)
        try:
            with open(path, 'w', newline='', encoding='utf-8') as f:
                writer = csv.writer(f)
                writer.writerow(header)
                for row in rows:
                    if len(row) != len(header):
                        raise ArtifactError(
                            f'{name}: row has {len(row)} cells, header has {len(header)}'
                        )
                    writer.writerow([format_cell(cell) for cell in row])
        except OSError as e:
            raise ArtifactError(f'cannot write {path}: {e.strerror or e}') from e
        logger.debug('wrote %s', path)
        return path

    def write_snapshot(self, index: int, f: Field, kind: EquationKind, time: float) -> Path:
        """Write ``snapshot_<index>.bogs`` into the run directory."""
        path = self._record(f'snapshot_{index}.bogs')
        write_snapshot(f, path, kind=kind, time=time)
        return path

    def write_metadata(self, status: int, summary: Mapping[str, Any] | None = None) -> Path:
        """Write ``metadata.json`` listing the command, seed, configuration and artifacts."""
        path = self.path / METADATA_FILE
        metadata = {
            'command': self.command,
            'seed': self.seed,
            'timestamp': self.timestamp.isoformat(),
            'status': status,
            'config': self.config,
            'artifacts': list(self.artifacts),
            'summary': dict(summary or {}),
        }
        try:
            with open(path, 'w', encoding='utf-8') as f:
                json.dump(metadata, f, indent=2, default=_json_default)
        except OSError as e:
            raise ArtifactError(f'cannot write {path}: {e.strerror or e}') from e
        return path


def _json_default(value: Any) -> Any:
    if isinstance(value, np.generic):
        return value.item()  # pyright: ignore[reportUnknownMemberType, reportUnknownVariableType]
    if isinstance(value, (tuple, set)):
        return list(value)  # pyright: ignore[reportUnknownArgumentType]
    return str(value)
