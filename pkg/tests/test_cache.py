import json
import shutil
import tempfile
from pathlib import Path

import pytest

from iwasawa_cm.cache import ArtifactCache
from iwasawa_cm.exceptions import CacheError


@pytest.fixture
def test_dir():
    """Create a temporary directory for cache records"""
    temp_dir = tempfile.mkdtemp()
    yield temp_dir
    shutil.rmtree(temp_dir)


@pytest.fixture
def payload():
    return {"q": 23, "coeffs": ["1", "3491750", "-5151296875", "12771880859375"]}


def test_store_and_load(test_dir, payload):
    """Test that a stored payload comes back unchanged"""
    cache = ArtifactCache(test_dir)
    path = cache.store("hcp", "q23", payload)
    assert path.exists()
    assert cache.load("hcp", "q23") == payload


def test_miss_returns_none(test_dir):
    """Test that a missing record is a miss, not an error"""
    cache = ArtifactCache(test_dir)
    assert cache.load("hcp", "q31") is None
    assert cache.version("hcp", "q31") is None


def test_record_layout(test_dir, payload):
    """Test the fields written to a record"""
    cache = ArtifactCache(test_dir)
    path = cache.store("field", "q23", payload)
    record = json.loads(Path(path).read_text())
    assert set(record) == {"schema", "kind", "key", "payload", "checksum"}
    assert record["kind"] == "field"
    assert record["checksum"] == ArtifactCache.checksum(payload)


def test_checksum_is_canonical():
    """Test that key order does not change the checksum"""
    assert ArtifactCache.checksum({"a": 1, "b": 2}) == ArtifactCache.checksum({"b": 2, "a": 1})
    assert ArtifactCache.checksum({"a": 1}) != ArtifactCache.checksum({"a": 2})


def test_tampered_record(test_dir, payload):
    """Test that a payload edited on disk is reported as corrupt"""
    cache = ArtifactCache(test_dir)
    path = cache.store("hcp", "q23", payload)
    record = json.loads(Path(path).read_text())
    record["payload"]["coeffs"][1] = "3491751"
    Path(path).write_text(json.dumps(record))

    with pytest.raises(CacheError, match="Checksum mismatch"):
        cache.load("hcp", "q23")


def test_unreadable_record(test_dir):
    """Test that invalid JSON raises CacheError"""
    cache = ArtifactCache(test_dir)
    (Path(test_dir) / "hcp_q7.json").write_text("{not json")
    with pytest.raises(CacheError):
        cache.load("hcp", "q7")


def test_malformed_record(test_dir):
    """Test that a record without a checksum raises CacheError"""
    cache = ArtifactCache(test_dir)
    (Path(test_dir) / "hcp_q7.json").write_text(json.dumps({"payload": {}}))
    with pytest.raises(CacheError, match="Malformed"):
        cache.load("hcp", "q7")


def test_overwrite_and_version(test_dir, payload):
    """Test that storing twice replaces the record and updates the version"""
    cache = ArtifactCache(test_dir)
    cache.store("hcp", "q23", {"q": 23})
    first = cache.version("hcp", "q23")
    cache.store("hcp", "q23", payload)
    second = cache.version("hcp", "q23")

    assert len(first) == 12
    assert first != second
    assert second == ArtifactCache.checksum(payload)[:12]
    assert cache.load("hcp", "q23") == payload
