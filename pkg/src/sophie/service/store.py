"""File-backed persistence for sessions and reports.

Sessions are append-only JSON-lines event logs (one file per session), so a
crash can lose at most a partially written final line. Reports are whole
files written atomically; the stored bytes are returned verbatim on read.
"""

from __future__ import annotations

import json
import os
import re
import uuid
from datetime import datetime, timezone
from pathlib import Path

_ID_RE = re.compile(r"^[0-9a-f]{32}$")


def new_id() -> str:
    return uuid.uuid4().hex


def valid_id(value: str) -> bool:
    return bool(_ID_RE.match(value))


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


class SessionLog:
    """One JSONL event file per session under <data_dir>/sessions."""

    def __init__(self, directory: Path):
        self.directory = directory
        directory.mkdir(parents=True, exist_ok=True)

    def _path(self, session_id: str) -> Path:
        return self.directory / f"{session_id}.jsonl"

    def append(self, session_id: str, event: dict) -> None:
        record = {"ts": _now(), **event}
        line = json.dumps(record, ensure_ascii=False)
        with open(self._path(session_id), "a", encoding="utf-8") as handle:
            handle.write(line + "\n")
            handle.flush()
            os.fsync(handle.fileno())

    def exists(self, session_id: str) -> bool:
        return valid_id(session_id) and self._path(session_id).is_file()

    def read(self, session_id: str) -> list:
        """All decodable events; a torn final line from a crash is dropped."""
        events: list = []
        with open(self._path(session_id), encoding="utf-8") as handle:
            for line in handle:
                line = line.strip()
                if not line:
                    continue
                try:
                    events.append(json.loads(line))
                except json.JSONDecodeError:
                    break
        return events


class ReportStore:
    """Canonical report JSON files under <data_dir>/reports, named by id."""

    def __init__(self, directory: Path):
        self.directory = directory
        directory.mkdir(parents=True, exist_ok=True)

    def _path(self, report_id: str) -> Path:
        return self.directory / f"{report_id}.json"

    def save(self, report_json: str, report_id: str | None = None) -> str:
        report_id = report_id or new_id()
        target = self._path(report_id)
        tmp = target.with_suffix(".tmp")
        tmp.write_text(report_json, encoding="utf-8")
        os.replace(tmp, target)
        return report_id

    def load(self, report_id: str) -> bytes | None:
        if not valid_id(report_id):
            return None
        path = self._path(report_id)
        if not path.is_file():
            return None
        return path.read_bytes()
