"""Keyword registry mapping ontology URIs to the providers that speak them.

One entry per ontology URI; re-registering replaces the old entry, so a
provider that restarts on a new port just registers again.  Search is a
case-insensitive OR over keywords.  State can be mirrored to a JSON
snapshot that is written atomically and reloaded on startup.
"""

from __future__ import annotations

import json
import os
import re
import threading
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Iterable

_ADDRESS_RE = re.compile(r"(?P<host>[A-Za-z0-9_.-]+):(?P<port>\d{1,5})\Z")


class RegistryError(Exception):
    pass


@dataclass(frozen=True)
class RegistryEntry:
    ontology_uri: str
    keywords: frozenset[str]
    tbox_fingerprint: str
    provider_address: str  # host:port
    registered_at: str  # ISO-8601

    def to_dict(self) -> dict:
        return {
            "ontology_uri": self.ontology_uri,
            "keywords": sorted(self.keywords),
            "tbox_fingerprint": self.tbox_fingerprint,
            "provider_address": self.provider_address,
            "registered_at": self.registered_at,
        }


def validate_address(address: str) -> bool:
    match = _ADDRESS_RE.match(address)
    if not match:
        return False
    return 0 < int(match.group("port")) < 65536


def _default_clock() -> str:
    return datetime.now(timezone.utc).isoformat()


class Registry:
    """In-memory entry table with an optional on-disk JSON snapshot."""

    def __init__(self, snapshot_path: str | Path | None = None, clock: Callable[[], str] | None = None):
        self._entries: dict[str, RegistryEntry] = {}
        self._lock = threading.Lock()
        self._snapshot_path = Path(snapshot_path) if snapshot_path else None
        self._clock = clock or _default_clock
        if self._snapshot_path and self._snapshot_path.exists():
            self._load(self._snapshot_path)

    def register(
        self,
        ontology_uri: str,
        keywords: Iterable[str],
        tbox_fingerprint: str,
        provider_address: str,
    ) -> RegistryEntry:
        lowered = frozenset(k.lower() for k in keywords if k)
        if not ontology_uri:
            raise RegistryError("ontology uri must be non-empty")
        if not lowered:
            raise RegistryError("at least one keyword is required")
        if not tbox_fingerprint:
            raise RegistryError("fingerprint must be non-empty")
        if not validate_address(provider_address):
            raise RegistryError(f"bad provider address {provider_address!r}, want host:port")
        entry = RegistryEntry(
            ontology_uri=ontology_uri,
            keywords=lowered,
            tbox_fingerprint=tbox_fingerprint,
            provider_address=provider_address,
            registered_at=self._clock(),
        )
        with self._lock:
            self._entries[ontology_uri] = entry
            self._persist()
        return entry

    def deregister(self, ontology_uri: str) -> bool:
        with self._lock:
            removed = self._entries.pop(ontology_uri, None) is not None
            if removed:
                self._persist()
        return removed

    def search(self, keywords: Iterable[str]) -> list[RegistryEntry]:
        """Entries sharing at least one keyword (case-insensitive OR).

        An empty keyword set matches everything.
        """
        wanted = {k.lower() for k in keywords if k}
        with self._lock:
            entries = list(self._entries.values())
        hits = [e for e in entries if not wanted or e.keywords & wanted]
        hits.sort(key=lambda e: (e.registered_at, e.ontology_uri))
        return hits

    def list_all(self) -> list[RegistryEntry]:
        with self._lock:
            entries = list(self._entries.values())
        entries.sort(key=lambda e: (e.registered_at, e.ontology_uri))
        return entries

    def get(self, ontology_uri: str) -> RegistryEntry | None:
        with self._lock:
            return self._entries.get(ontology_uri)

    # Callers hold the lock.
    def _persist(self) -> None:
        if self._snapshot_path is None:
            return
        payload = {"entries": [e.to_dict() for e in self._entries.values()]}
        tmp = self._snapshot_path.with_name(self._snapshot_path.name + ".tmp")
        tmp.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        os.replace(tmp, self._snapshot_path)

    def _load(self, path: Path) -> None:
        payload = json.loads(path.read_text(encoding="utf-8"))
        for raw in payload.get("entries", []):
            entry = RegistryEntry(
                ontology_uri=raw["ontology_uri"],
                keywords=frozenset(raw["keywords"]),
                tbox_fingerprint=raw["tbox_fingerprint"],
                provider_address=raw["provider_address"],
                registered_at=raw["registered_at"],
            )
            self._entries[entry.ontology_uri] = entry
