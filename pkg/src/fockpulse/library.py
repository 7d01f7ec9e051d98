"""Content-addressed storage for designed pulses.

Every designed pulse is worth keeping: designs are expensive and their inputs
are fully deterministic, so a pulse is stored under a key derived from its
content (system, target, parameters).  Re-serializing an entry never changes
its key, and metadata like timestamps stays outside the hashed payload.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

from .fockspace import SystemConfig
from .pulses import CompositePulse

__all__ = [
    "PulseLibraryEntry",
    "entry_id",
    "save_entry",
    "load_entry",
    "find_entry",
    "list_entries",
]

_SCHEMA_VERSION = 1


@dataclass
class PulseLibraryEntry:
    """One stored pulse: the system it was designed on, for which target,
    the pulse train itself, and the loss it achieved."""

    system: SystemConfig
    target: str
    pulse: CompositePulse
    loss: float
    meta: dict[str, Any]

    @property
    def id(self) -> str:
        return entry_id(self.system, self.target, self.pulse)


def _hashed_payload(
    system: SystemConfig, target: str, pulse: CompositePulse
) -> dict[str, Any]:
    return {
        "system": asdict(system),
        "target": target,
        "pulses": pulse.to_dicts(),
    }


def entry_id(system: SystemConfig, target: str, pulse: CompositePulse) -> str:
    """Stable 16-hex-digit key of the entry's physical content."""
    canonical = json.dumps(
        _hashed_payload(system, target, pulse), sort_keys=True, separators=(",", ":")
    )
    return hashlib.sha256(canonical.encode()).hexdigest()[:16]


def save_entry(entry: PulseLibraryEntry, library_dir: Path | str) -> Path:
    """Write the entry as JSON under its content key; idempotent.

    An existing file for the same key is left untouched, so repeated runs of
    a deterministic design never churn bytes on disk.
    """
    library_dir = Path(library_dir)
    library_dir.mkdir(parents=True, exist_ok=True)
    path = library_dir / f"{entry.id}.json"
    if path.exists():
        return path
    document = {
        "version": _SCHEMA_VERSION,
        "id": entry.id,
        **_hashed_payload(entry.system, entry.target, entry.pulse),
        "loss": entry.loss,
        "meta": dict(entry.meta),
        "created": datetime.now(timezone.utc).isoformat(),
    }
    tmp = path.with_suffix(".tmp")
    tmp.write_text(json.dumps(document, indent=2, sort_keys=True) + "\n")
    tmp.replace(path)
    return path


def load_entry(path: Path | str) -> PulseLibraryEntry:
    """Read an entry back; validates schema version and content key."""
    document = json.loads(Path(path).read_text())
    version = document.get("version")
    if version != _SCHEMA_VERSION:
        raise ValueError(
            f"unsupported pulse-library schema version {version!r} in {path}"
        )
    system = SystemConfig(**document["system"])
    pulse = CompositePulse.from_dicts(document["pulses"])
    target = document["target"]
    stored_id = document.get("id")
    actual_id = entry_id(system, target, pulse)
    if stored_id != actual_id:
        raise ValueError(
            f"pulse entry {path} is corrupt: stored id {stored_id!r} "
            f"does not match content id {actual_id!r}"
        )
    return PulseLibraryEntry(
        system=system,
        target=target,
        pulse=pulse,
        loss=float(document["loss"]),
        meta=dict(document.get("meta", {})),
    )


def find_entry(library_dir: Path | str, key: str) -> Path:
    """Resolve a (possibly abbreviated) content key to an entry path."""
    library_dir = Path(library_dir)
    matches = sorted(library_dir.glob(f"{key}*.json"))
    if not matches:
        raise FileNotFoundError(f"no pulse with id {key!r} in {library_dir}")
    if len(matches) > 1:
        raise ValueError(
            f"id {key!r} is ambiguous in {library_dir}: "
            + ", ".join(p.stem for p in matches)
        )
    return matches[0]


def list_entries(library_dir: Path | str) -> list[PulseLibraryEntry]:
    library_dir = Path(library_dir)
    if not library_dir.is_dir():
        return []
    return [load_entry(p) for p in sorted(library_dir.glob("*.json"))]
