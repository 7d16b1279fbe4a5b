"""Persistence for the annotation service.

Two interchangeable backends: an embedded file store (default, hermetic) and
a relational store on sqlite. Writes are atomic per record and every rating
write is also appended to an audit log, so last-write-wins updates never lose
history.
"""

from __future__ import annotations

import json
import sqlite3
import threading
from pathlib import Path
from typing import Iterator, Protocol


class StorageError(Exception):
    pass


class Store(Protocol):
    """Record-oriented storage; all values are JSON-serializable dicts."""

    def put(self, collection: str, key: str, record: dict) -> None: ...

    def get(self, collection: str, key: str) -> dict | None: ...

    def items(self, collection: str) -> Iterator[tuple[str, dict]]: ...

    def append_log(self, log: str, record: dict) -> None: ...

    def read_log(self, log: str) -> list[dict]: ...


class FileStore:
    """One JSON file per collection plus JSONL audit logs, under a directory."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self._cache: dict[str, dict[str, dict]] = {}

    def _collection_path(self, collection: str) -> Path:
        return self.root / f"{collection}.json"

    def _load(self, collection: str) -> dict[str, dict]:
        if collection not in self._cache:
            path = self._collection_path(collection)
            if path.exists():
                self._cache[collection] = json.loads(path.read_text(encoding="utf-8"))
            else:
                self._cache[collection] = {}
        return self._cache[collection]

    def _flush(self, collection: str) -> None:
        path = self._collection_path(collection)
        tmp = path.with_suffix(".tmp")
        tmp.write_text(
            json.dumps(self._cache[collection], ensure_ascii=False, sort_keys=True, indent=1),
            encoding="utf-8",
        )
        tmp.replace(path)

    def put(self, collection: str, key: str, record: dict) -> None:
        with self._lock:
            data = self._load(collection)
            data[key] = record
            self._flush(collection)

    def get(self, collection: str, key: str) -> dict | None:
        with self._lock:
            return self._load(collection).get(key)

    def items(self, collection: str) -> Iterator[tuple[str, dict]]:
        with self._lock:
            snapshot = list(self._load(collection).items())
        return iter(sorted(snapshot))

    def append_log(self, log: str, record: dict) -> None:
        with self._lock:
            path = self.root / f"{log}.jsonl"
            with path.open("a", encoding="utf-8") as fh:
                fh.write(json.dumps(record, ensure_ascii=False, sort_keys=True) + "\n")

    def read_log(self, log: str) -> list[dict]:
        path = self.root / f"{log}.jsonl"
        if not path.exists():
            return []
        with self._lock:
            return [json.loads(line) for line in path.read_text(encoding="utf-8").splitlines() if line.strip()]


class SqliteStore:
    """Same interface on a sqlite database, for shared deployments."""

    def __init__(self, path: str | Path):
        self._conn = sqlite3.connect(str(path), check_same_thread=False)
        self._lock = threading.Lock()
        with self._lock:
            self._conn.execute(
                "CREATE TABLE IF NOT EXISTS records ("
                "collection TEXT NOT NULL, key TEXT NOT NULL, value TEXT NOT NULL,"
                "PRIMARY KEY (collection, key))"
            )
            self._conn.execute(
                "CREATE TABLE IF NOT EXISTS logs ("
                "id INTEGER PRIMARY KEY AUTOINCREMENT, log TEXT NOT NULL, value TEXT NOT NULL)"
            )
            self._conn.commit()

    def put(self, collection: str, key: str, record: dict) -> None:
        with self._lock:
            self._conn.execute(
                "INSERT INTO records (collection, key, value) VALUES (?, ?, ?) "
                "ON CONFLICT (collection, key) DO UPDATE SET value = excluded.value",
                (collection, key, json.dumps(record, ensure_ascii=False, sort_keys=True)),
            )
            self._conn.commit()

    def get(self, collection: str, key: str) -> dict | None:
        with self._lock:
            row = self._conn.execute(
                "SELECT value FROM records WHERE collection = ? AND key = ?", (collection, key)
            ).fetchone()
        return json.loads(row[0]) if row else None

    def items(self, collection: str) -> Iterator[tuple[str, dict]]:
        with self._lock:
            rows = self._conn.execute(
                "SELECT key, value FROM records WHERE collection = ? ORDER BY key", (collection,)
            ).fetchall()
        return iter((key, json.loads(value)) for key, value in rows)

    def append_log(self, log: str, record: dict) -> None:
        with self._lock:
            self._conn.execute(
                "INSERT INTO logs (log, value) VALUES (?, ?)",
                (log, json.dumps(record, ensure_ascii=False, sort_keys=True)),
            )
            self._conn.commit()

    def read_log(self, log: str) -> list[dict]:
        with self._lock:
            rows = self._conn.execute(
                "SELECT value FROM logs WHERE log = ? ORDER BY id", (log,)
            ).fetchall()
        return [json.loads(value) for (value,) in rows]


def open_store(kind: str, location: str | Path) -> Store:
    if kind == "file":
        return FileStore(location)
    if kind == "sqlite":
        return SqliteStore(location)
    raise StorageError(f"unknown storage backend {kind!r}")
