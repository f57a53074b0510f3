"""Checksummed JSON record store for expensive artifacts (class and field polynomials)."""

import fcntl
import hashlib
import json
from logging import getLogger
from pathlib import Path
from typing import Any, Dict, Optional, Union

from .exceptions import CacheError

logger = getLogger(__name__)

SCHEMA_VERSION = 1


class RecordLock:
    """Context manager for safely reading/writing a cache record"""

    def __init__(self, record_file: Path, mode: str):
        self.file = open(record_file, mode)
        self.mode = mode

    def __enter__(self):
        # Use exclusive lock for writing, shared lock for reading
        writing = "w" in self.mode or "+" in self.mode
        fcntl.flock(self.file.fileno(), fcntl.LOCK_EX if writing else fcntl.LOCK_SH)
        return self.file

    def __exit__(self, exc_type, exc_val, exc_tb):
        fcntl.flock(self.file.fileno(), fcntl.LOCK_UN)
        self.file.close()


class ArtifactCache:
    """Store of JSON records keyed by (kind, key).

    Each record is written as ``{"schema", "kind", "key", "payload", "checksum"}``
    where ``checksum`` is the SHA-256 of the canonical JSON encoding of the
    payload. A record whose checksum does not match is reported as corrupt,
    never silently recomputed.

    Example:
        >>> cache = ArtifactCache("/tmp/iwasawa")
        >>> cache.store("hcp", "q23", {"q": 23, "coeffs": ["1", "3491750"]})
        >>> cache.load("hcp", "q23")["q"]
        23
    """

    def __init__(self, cache_dir: Union[str, Path]):
        self.cache_dir = Path(cache_dir)
        self.cache_dir.mkdir(parents=True, exist_ok=True)

    def _record_file(self, kind: str, key: str) -> Path:
        return self.cache_dir / f"{kind}_{key}.json"

    @staticmethod
    def checksum(payload: Dict[str, Any]) -> str:
        """Calculate SHA-256 hash of the canonical JSON encoding of ``payload``"""
        canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        sha256_hash = hashlib.sha256()
        sha256_hash.update(canonical.encode("utf-8"))
        return sha256_hash.hexdigest()

    def load(self, kind: str, key: str) -> Optional[Dict[str, Any]]:
        """Load a cached payload.

        Args:
            kind: Record family, e.g. 'hcp' or 'field'.
            key: Record key within the family, e.g. 'q23'.

        Returns:
            The payload, or None on a cache miss.

        Raises:
            CacheError: If the record is unreadable or its checksum does not match.
        """
        record_file = self._record_file(kind, key)
        if not record_file.exists():
            logger.debug(f"Cache miss for {kind}/{key}")
            return None
        try:
            with RecordLock(record_file, "r") as f:
                record = json.load(f)
        except (json.JSONDecodeError, OSError) as e:
            raise CacheError(f"Unreadable cache record {record_file}: {e}") from e
        try:
            payload = record["payload"]
            stored = record["checksum"]
        except (KeyError, TypeError) as e:
            raise CacheError(f"Malformed cache record {record_file}: missing {e}") from e
        if stored != self.checksum(payload):
            raise CacheError(f"Checksum mismatch in cache record {record_file}")
        logger.debug(f"Cache hit for {kind}/{key}")
        return payload

    def store(self, kind: str, key: str, payload: Dict[str, Any]) -> Path:
        """Write ``payload`` under (kind, key) and return the record path."""
        record_file = self._record_file(kind, key)
        record = {
            "schema": SCHEMA_VERSION,
            "kind": kind,
            "key": key,
            "payload": payload,
            "checksum": self.checksum(payload),
        }
        if not record_file.exists():
            record_file.touch()
        try:
            with RecordLock(record_file, "r+") as f:
                f.seek(0)
                f.truncate()
                json.dump(record, f, indent=2, sort_keys=True)
        except IOError as e:
            raise CacheError(f"Error saving cache record {record_file}: {e}") from e
        logger.debug(f"Stored {kind}/{key} in {record_file}")
        return record_file

    def version(self, kind: str, key: str) -> Optional[str]:
        """Short checksum identifying the cached artifact, or None if absent."""
        record_file = self._record_file(kind, key)
        if not record_file.exists():
            return None
        try:
            with RecordLock(record_file, "r") as f:
                return json.load(f).get("checksum", "")[:12]
        except (json.JSONDecodeError, OSError):
            return None
