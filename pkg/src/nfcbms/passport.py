"""Append-only battery passport store.

One newline-delimited JSON entry per delivered diagnostic packet, so a
pack's history can be tracked across its lifetime.  Appends flush and
fsync before returning, and every open of the file takes an advisory
lock, so concurrent CLI invocations do not interleave half-written
lines.  A database backend would slot in behind the same two calls.
"""

from __future__ import annotations

import fcntl
import json
import os
from dataclasses import dataclass
from pathlib import Path

from .diagnostics import DiagPacket, packet_from_json, packet_to_json
from .errors import StoreError

ENV_STORE_PATH = "BMS_STORE_PATH"


@dataclass(frozen=True)
class PassportEntry:
    pack_id: bytes
    received_at: int
    diag: DiagPacket
    session_id: str
    source: str  # IDLE_DIAG or ACTIVE_DIAG

    def to_json(self) -> dict:
        return {
            "pack_id": self.pack_id.hex(),
            "received_at": self.received_at,
            "session_id": self.session_id,
            "source": self.source,
            "diag": packet_to_json(self.diag),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "PassportEntry":
        return cls(
            pack_id=bytes.fromhex(obj["pack_id"]),
            received_at=int(obj["received_at"]),
            diag=packet_from_json(obj["diag"]),
            session_id=obj["session_id"],
            source=obj["source"],
        )


class PassportStore:
    def __init__(self, path: str | Path):
        self.path = Path(path)

    def append(self, entry: PassportEntry) -> None:
        line = json.dumps(entry.to_json(), sort_keys=True)
        try:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.path, "a", encoding="utf-8") as fh:
                fcntl.flock(fh, fcntl.LOCK_EX)
                fh.write(line + "\n")
                fh.flush()
                os.fsync(fh.fileno())
        except OSError as exc:
            raise StoreError(f"cannot append to {self.path}: {exc}") from exc

    def entries(self) -> list[PassportEntry]:
        if not self.path.exists():
            return []
        try:
            with open(self.path, "r", encoding="utf-8") as fh:
                fcntl.flock(fh, fcntl.LOCK_SH)
                lines = fh.read().splitlines()
        except OSError as exc:
            raise StoreError(f"cannot read {self.path}: {exc}") from exc
        out = []
        for lineno, line in enumerate(lines, start=1):
            if not line.strip():
                continue
            try:
                out.append(PassportEntry.from_json(json.loads(line)))
            except (ValueError, KeyError, TypeError) as exc:
                raise StoreError(f"{self.path}:{lineno}: corrupt entry: {exc}") from exc
        return out

    def history(self, pack_id: bytes) -> list[PassportEntry]:
        """Entries covering one pack, time-ordered (stable for equal stamps).

        Aggregated readouts count: an entry matches if it is keyed by
        the pack or any of its reports came from the pack.
        """
        matching = [
            e
            for e in self.entries()
            if e.pack_id == pack_id or any(r.pack_id == pack_id for r in e.diag.reports)
        ]
        return sorted(matching, key=lambda e: e.received_at)


def default_store_path() -> Path:
    return Path(os.environ.get(ENV_STORE_PATH, "passport_store.ndjson"))
