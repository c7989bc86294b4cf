"""Durable asset/price storage and the in-memory tuple cache.

The durable side is a single sqlite file holding JSON values in one
key-value table, namespaced by record type.  Interchange with other tools
goes through `export_dir` / `import_dir`, which write the whole store as a
directory of deterministic JSON files (sorted keys, stable ordering), so
two exports of equal stores are byte-identical.

The tuple cache is a byte-budgeted LRU over immutable simulation tuples,
keyed by ``(asset_id, seed, n, horizon)``.  Seeds already encode an
asset's generation counter, so a source change can never serve a stale
tuple; the cache's job is purely to skip regeneration cost, and results
must be identical with the cache on or off.
"""

from __future__ import annotations

import csv
import json
import os
import sqlite3
import threading
from collections import OrderedDict
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .errors import NotFoundError, OrderingError, ParameterError, ParseError
from .sampling import PriceHistory, marginal_from_payload

__all__ = [
    "AssetRecord",
    "AssetStore",
    "TupleCache",
    "DEFAULT_CACHE_BUDGET",
    "STORE_ENV_VAR",
    "default_store_path",
]

DEFAULT_CACHE_BUDGET = 256 * 1024 * 1024
STORE_ENV_VAR = "RISKPIPE_STORE"


def default_store_path() -> str | None:
    """Store path from the environment, or None when unset."""
    value = os.environ.get(STORE_ENV_VAR, "").strip()
    return value or None


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat()


@dataclass(frozen=True)
class AssetRecord:
    """Catalog entry for an asset.

    Exactly one return source must be present: an inline ``marginal``
    payload or a ``history_ref`` naming a stored price history.
    """

    asset_id: str
    name: str = ""
    marginal: dict | None = None
    history_ref: str | None = None
    updated_at: str = field(default_factory=_utc_now)

    def __post_init__(self):
        if not self.asset_id:
            raise ParameterError("asset_id must be a non-empty string")
        if (self.marginal is None) == (self.history_ref is None):
            raise ParameterError(
                "asset record needs exactly one of 'marginal' or 'history_ref'"
            )
        if self.marginal is not None:
            marginal_from_payload(self.marginal)  # validate eagerly

    def to_payload(self) -> dict:
        return {
            "asset_id": self.asset_id,
            "name": self.name,
            "marginal": self.marginal,
            "history_ref": self.history_ref,
            "updated_at": self.updated_at,
        }

    @classmethod
    def from_payload(cls, payload: dict) -> "AssetRecord":
        return cls(
            asset_id=payload["asset_id"],
            name=payload.get("name", ""),
            marginal=payload.get("marginal"),
            history_ref=payload.get("history_ref"),
            updated_at=payload.get("updated_at", ""),
        )


class AssetStore:
    """Single-file embedded store for asset records and price histories."""

    def __init__(self, path: str | Path):
        self.path = str(path)
        self._conn = sqlite3.connect(self.path, check_same_thread=False)
        self._lock = threading.Lock()
        with self._lock:
            self._conn.execute(
                "CREATE TABLE IF NOT EXISTS kv ("
                " ns TEXT NOT NULL, key TEXT NOT NULL, value TEXT NOT NULL,"
                " PRIMARY KEY (ns, key))"
            )
            self._conn.commit()

    # -- raw kv helpers ----------------------------------------------------

    def _put(self, ns: str, key: str, value: dict) -> None:
        blob = json.dumps(value, sort_keys=True)
        with self._lock:
            self._conn.execute(
                "INSERT INTO kv (ns, key, value) VALUES (?, ?, ?)"
                " ON CONFLICT (ns, key) DO UPDATE SET value = excluded.value",
                (ns, key, blob),
            )
            self._conn.commit()

    def _get(self, ns: str, key: str) -> dict:
        with self._lock:
            row = self._conn.execute(
                "SELECT value FROM kv WHERE ns = ? AND key = ?", (ns, key)
            ).fetchone()
        if row is None:
            raise NotFoundError(f"no {ns} record with id {key!r} in {self.path}")
        return json.loads(row[0])

    def _keys(self, ns: str) -> list[str]:
        with self._lock:
            rows = self._conn.execute(
                "SELECT key FROM kv WHERE ns = ? ORDER BY key", (ns,)
            ).fetchall()
        return [r[0] for r in rows]

    # -- assets ------------------------------------------------------------

    def put_asset(self, record: AssetRecord) -> None:
        self._put("asset", record.asset_id, record.to_payload())

    def get_asset(self, asset_id: str) -> AssetRecord:
        return AssetRecord.from_payload(self._get("asset", asset_id))

    def list_assets(self) -> list[str]:
        return self._keys("asset")

    # -- price histories ---------------------------------------------------

    def put_history(self, history: PriceHistory) -> None:
        self._put("history", history.asset_id, history.to_payload())

    def get_history(self, asset_id: str) -> PriceHistory:
        return PriceHistory.from_payload(self._get("history", asset_id))

    def list_histories(self) -> list[str]:
        return self._keys("history")

    def ingest_prices(self, source: str | Path, asset_id: str) -> PriceHistory:
        """Parse a ``timestamp,price`` CSV and persist it as a history.

        ``source`` is a Path to read or the CSV content itself as a str.
        Timestamps must be ISO-8601 and strictly increasing; prices must be
        positive numbers.  Errors carry the 1-based line number.
        """
        text = Path(source).read_text() if isinstance(source, Path) else str(source)
        reader = csv.reader(text.splitlines())
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("price file is empty", line=1) from None
        if [h.strip().lower() for h in header] != ["timestamp", "price"]:
            raise ParseError(
                f"expected header 'timestamp,price', got {','.join(header)!r}", line=1
            )
        timestamps: list[datetime] = []
        prices: list[float] = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise ParseError(f"expected 2 fields, got {len(row)}", line=lineno)
            try:
                ts = datetime.fromisoformat(row[0].strip())
            except ValueError:
                raise ParseError(f"bad ISO-8601 timestamp {row[0]!r}", line=lineno) from None
            try:
                price = float(row[1])
            except ValueError:
                raise ParseError(f"bad price {row[1]!r}", line=lineno) from None
            if not np.isfinite(price) or price <= 0:
                raise ParseError(f"price must be a positive number, got {row[1]!r}", line=lineno)
            if timestamps and not timestamps[-1] < ts:
                raise OrderingError(
                    f"timestamps must be strictly increasing; line {lineno} "
                    f"({row[0].strip()}) does not follow {timestamps[-1].isoformat()}"
                )
            timestamps.append(ts)
            prices.append(price)
        if not prices:
            raise ParseError("price file has a header but no rows", line=2)
        history = PriceHistory(
            asset_id=asset_id, timestamps=tuple(timestamps), prices=np.asarray(prices)
        )
        self.put_history(history)
        return history

    # -- interchange ---------------------------------------------------------

    def export_dir(self, directory: str | Path) -> None:
        """Write the full store to ``directory`` as deterministic JSON files."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        assets = [self._get("asset", k) for k in self.list_assets()]
        histories = [self._get("history", k) for k in self.list_histories()]
        for name, payload in (("assets.json", assets), ("histories.json", histories)):
            (directory / name).write_text(
                json.dumps(payload, sort_keys=True, indent=2) + "\n"
            )

    def import_dir(self, directory: str | Path) -> None:
        directory = Path(directory)
        assets_file = directory / "assets.json"
        histories_file = directory / "histories.json"
        if not assets_file.exists() and not histories_file.exists():
            raise NotFoundError(f"{directory} holds no assets.json or histories.json")
        if assets_file.exists():
            for payload in json.loads(assets_file.read_text()):
                self.put_asset(AssetRecord.from_payload(payload))
        if histories_file.exists():
            for payload in json.loads(histories_file.read_text()):
                self.put_history(PriceHistory.from_payload(payload))

    def close(self) -> None:
        with self._lock:
            self._conn.close()

    def __enter__(self) -> "AssetStore":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


class TupleCache:
    """Byte-budgeted LRU cache of immutable simulation tuples.

    Thread safe.  Entries larger than the whole budget are rejected (and
    counted) rather than thrashing the working set.
    """

    def __init__(self, budget_bytes: int = DEFAULT_CACHE_BUDGET):
        if budget_bytes < 0:
            raise ParameterError(f"cache budget must be >= 0, got {budget_bytes}")
        self.budget_bytes = int(budget_bytes)
        self._entries: OrderedDict = OrderedDict()
        self._bytes = 0
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0
        self.evictions = 0
        self.rejected = 0

    @staticmethod
    def _check_key(key) -> tuple:
        if not (isinstance(key, tuple) and len(key) == 4):
            raise ParameterError(f"cache key must be (asset_id, seed, n, horizon), got {key!r}")
        return key

    def get(self, key) -> np.ndarray | None:
        key = self._check_key(key)
        with self._lock:
            values = self._entries.get(key)
            if values is None:
                self.misses += 1
                return None
            self._entries.move_to_end(key)
            self.hits += 1
            return values

    def put(self, key, values: np.ndarray) -> bool:
        key = self._check_key(key)
        arr = np.ascontiguousarray(values, dtype=np.float64)
        arr.flags.writeable = False
        with self._lock:
            if arr.nbytes > self.budget_bytes:
                self.rejected += 1
                return False
            old = self._entries.pop(key, None)
            if old is not None:
                self._bytes -= old.nbytes
            while self._entries and self._bytes + arr.nbytes > self.budget_bytes:
                _, evicted = self._entries.popitem(last=False)
                self._bytes -= evicted.nbytes
                self.evictions += 1
            self._entries[key] = arr
            self._bytes += arr.nbytes
            return True

    def invalidate_asset(self, asset_id: str) -> int:
        with self._lock:
            doomed = [k for k in self._entries if k[0] == asset_id]
            for key in doomed:
                self._bytes -= self._entries.pop(key).nbytes
            return len(doomed)

    def clear(self) -> None:
        with self._lock:
            self._entries.clear()
            self._bytes = 0

    def stats(self) -> dict:
        with self._lock:
            return {
                "entries": len(self._entries),
                "bytes": self._bytes,
                "budget_bytes": self.budget_bytes,
                "hits": self.hits,
                "misses": self.misses,
                "evictions": self.evictions,
                "rejected": self.rejected,
            }
