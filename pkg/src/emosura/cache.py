"""Content-addressed response cache backed by append-only JSONL files.

One file per record kind (``cache/decompose.jsonl``, ``verify.jsonl``,
``match.jsonl``). Records are keyed by the chat-request digest; identical
logical requests replay from disk with zero network calls, which makes whole
runs reproducible. Writes are serialized by a lock (single-writer contract);
reads come from an in-memory index built at open time.
"""

from __future__ import annotations

import hashlib
import json
import logging
import threading
import time
from pathlib import Path

logger = logging.getLogger(__name__)


class ResponseCache:
    """Append-only JSONL cache of backend responses, keyed by request digest."""

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self._index: dict[tuple[str, str], dict] = {}
        for path in sorted(self.directory.glob("*.jsonl")):
            kind = path.stem
            for line in path.read_text(encoding="utf-8").splitlines():
                line = line.strip()
                if not line:
                    continue
                try:
                    record = json.loads(line)
                except json.JSONDecodeError:
                    logger.warning("skipping corrupt cache line in %s", path)
                    continue
                key = record.get("cache_key")
                if key:
                    self._index[(kind, key)] = record

    def __len__(self) -> int:
        return len(self._index)

    def get(self, kind: str, key: str) -> dict | None:
        with self._lock:
            return self._index.get((kind, key))

    def put(self, kind: str, key: str, record: dict) -> None:
        """Store one record; re-puts of an existing key are ignored."""
        row = dict(record)
        row["cache_key"] = key
        row.setdefault("timestamp", time.time())
        path = self.directory / f"{kind}.jsonl"
        with self._lock:
            if (kind, key) in self._index:
                return
            self._index[(kind, key)] = row
            with open(path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(row, ensure_ascii=False, sort_keys=True) + "\n")

    def compact(self) -> None:
        """Rewrite each JSONL file keeping one record per key."""
        with self._lock:
            by_kind: dict[str, list[dict]] = {}
            for (kind, _key), record in sorted(self._index.items()):
                by_kind.setdefault(kind, []).append(record)
            for kind, records in by_kind.items():
                path = self.directory / f"{kind}.jsonl"
                with open(path, "w", encoding="utf-8") as fh:
                    for record in records:
                        fh.write(json.dumps(record, ensure_ascii=False, sort_keys=True) + "\n")

    def file_digests(self) -> dict[str, str]:
        """sha256 per cache file, for run manifests."""
        digests = {}
        for path in sorted(self.directory.glob("*.jsonl")):
            digests[path.name] = hashlib.sha256(path.read_bytes()).hexdigest()
        return digests
