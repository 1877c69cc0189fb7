"""Exception hierarchy and non-fatal diagnostics for bogs."""

import logging
from dataclasses import field, dataclass

logger = logging.getLogger(__name__)


class BogsError(Exception):
    """Base class for every error raised by bogs."""


class ConfigError(BogsError, ValueError):
    """Invalid configuration value, missing key or unknown key."""


class ScaleError(BogsError):
    """Dyadic scale that the grid cannot resolve."""


class OperatorError(BogsError):
    """Fourier multiplier with a non-finite value on the grid."""


class FieldError(BogsError):
    """Field samples that are non-finite or on a mismatched grid."""


class BlowUpError(BogsError):
    """Solution became non-finite or grew past the blow-up threshold."""

    def __init__(self, message: str, last_time: float) -> None:
        super().__init__(f'{message} (last valid time {last_time:.6g})')
        self.last_time = last_time


class RangeError(BogsError):
    """Time outside the range covered by a trajectory."""


class InsufficientDataError(BogsError):
    """Not enough snapshots for the requested computation."""


class SnapshotError(BogsError):
    """Malformed snapshot file."""


class SnapshotMagicError(SnapshotError):
    """Snapshot file does not start with the expected magic bytes."""


class SnapshotVersionError(SnapshotError):
    """Snapshot file was written by an unsupported format version."""


class SnapshotTruncatedError(SnapshotError):
    """Snapshot payload is shorter than the header announces."""


class ArtifactError(BogsError):
    """A run directory or one of its files could not be written."""


@dataclass(frozen=True)
class DiagnosticEntry:
    """One recorded diagnostic."""

    code: str
    message: str


@dataclass
class Diagnostics:
    """Collects non-fatal conditions raised while computing.

    The first entry of each code is logged at WARNING level; repeats only
    bump ``counts``.
    """

    entries: list[DiagnosticEntry] = field(default_factory=list[DiagnosticEntry])
    counts: dict[str, int] = field(default_factory=dict[str, int])

    def warn(self, code: str, message: str) -> None:
        """Record a diagnostic; only its first occurrence is logged."""
        if self._record(DiagnosticEntry(code, message)):
            logger.warning('%s: %s', code, message)

    def _record(self, entry: DiagnosticEntry) -> bool:
        seen = entry.code in self.counts
        self.counts[entry.code] = self.counts.get(entry.code, 0) + 1
        if not seen:
            self.entries.append(entry)
        return not seen

    def codes(self) -> list[str]:
        """Distinct codes in order of first occurrence."""
        return [entry.code for entry in self.entries]

    def has(self, code: str) -> bool:
        """Whether ``code`` was recorded at least once."""
        return code in self.counts

    def extend(self, other: 'Diagnostics') -> None:
        """Merge another record without logging again."""
        for entry in other.entries:
            self._record(entry)

    def __len__(self) -> int:
        return len(self.entries)
