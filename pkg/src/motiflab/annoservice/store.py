"""Append-only line-delimited JSON log; the durable source of truth.

Sessions and tasks are written once at creation, votes appended as accepted.
Replaying the log rebuilds the exact service state (and hence aggregates).
"""

from __future__ import annotations

import json
from pathlib import Path

from ..errors import ContractError


class VoteLog:
    def __init__(self, path=None):
        self.path = Path(path) if path is not None else None
        self._fh = None
        if self.path is not None:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self._fh = open(self.path, "a", encoding="utf-8")

    def append(self, record: dict) -> None:
        if "type" not in record:
            raise ContractError("log records need a 'type'")
        if self._fh is not None:
            self._fh.write(json.dumps(record, sort_keys=True) + "\n")
            self._fh.flush()

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None

    @staticmethod
    def replay(path) -> list[dict]:
        records = []
        text = Path(path).read_text(encoding="utf-8")
        for i, line in enumerate(text.splitlines()):
            if not line.strip():
                continue
            try:
                records.append(json.loads(line))
            except json.JSONDecodeError as e:
                raise ContractError(f"{path}:{i + 1}: corrupt log line") from e
        return records
