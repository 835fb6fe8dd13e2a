"""Append-only entity logs.

Each entity type persists as one JSONL file of canonical sorted-key
records; the latest record per key wins on replay. Deterministic,
diffable, and crash-recoverable at desk scale.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterator, Optional

from .crypto import canonical_json


class RecordLog:
    def __init__(self, path: Path, key_field: str):
        self.path = Path(path)
        self.key_field = key_field
        self._records: dict[str, dict] = {}
        if self.path.exists():
            with open(self.path, "r", encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if not line:
                        continue
                    record = json.loads(line)
                    self._records[record[self.key_field]] = record

    def append(self, record: dict) -> None:
        key = record[self.key_field]
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with open(self.path, "a", encoding="utf-8") as fh:
            fh.write(canonical_json(record).decode("utf-8") + "\n")
        self._records[key] = record

    def get(self, key: str) -> Optional[dict]:
        return self._records.get(key)

    def __contains__(self, key: str) -> bool:
        return key in self._records

    def __len__(self) -> int:
        return len(self._records)

    def values(self) -> Iterator[dict]:
        return iter(self._records.values())
