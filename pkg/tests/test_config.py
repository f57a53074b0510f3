import pytest
from pathlib import Path

from iwasawa_cm.config import Config
from iwasawa_cm.exceptions import PreconditionError


@pytest.fixture
def clean_env(monkeypatch):
    """Remove any IWASAWA_CM_* settings picked up from the environment or .env"""
    import os

    for name in list(os.environ):
        if name.startswith("IWASAWA_CM_"):
            monkeypatch.delenv(name)
    return monkeypatch


def test_defaults(clean_env):
    """Test default configuration values"""
    config = Config.from_env()
    assert config.complex_bits == 200
    assert config.padic_prec == 64
    assert config.series_degree == 32
    assert config.workers == 1
    assert config.generator == 5
    assert config.units_dir is None


def test_environment_values(clean_env, tmp_path):
    """Test that IWASAWA_CM_* variables are read"""
    clean_env.setenv("IWASAWA_CM_PADIC_PREC", "128")
    clean_env.setenv("IWASAWA_CM_WORKERS", "4")
    clean_env.setenv("IWASAWA_CM_CACHE_DIR", str(tmp_path))
    clean_env.setenv("IWASAWA_CM_LOG_LEVEL", "DEBUG")

    config = Config.from_env()
    assert config.padic_prec == 128
    assert config.workers == 4
    assert config.cache_dir == tmp_path
    assert config.log_level == "DEBUG"


def test_overrides_win_and_none_is_ignored(clean_env):
    """Test that explicit overrides beat the environment and None is skipped"""
    clean_env.setenv("IWASAWA_CM_WORKERS", "4")
    config = Config.from_env(workers=2, padic_prec=None, cache_dir="/tmp/iwasawa-test")
    assert config.workers == 2
    assert config.padic_prec == 64
    assert config.cache_dir == Path("/tmp/iwasawa-test")


def test_invalid_environment_number(clean_env):
    """Test that non-numeric settings raise PreconditionError"""
    clean_env.setenv("IWASAWA_CM_COMPLEX_BITS", "many")
    with pytest.raises(PreconditionError):
        Config.from_env()


@pytest.mark.parametrize(
    "overrides",
    [
        {"complex_bits": 32},
        {"padic_prec": 8},
        {"series_degree": 2},
        {"workers": 0},
        {"generator": 3},
        {"log_level": "LOUD"},
    ],
)
def test_validation(clean_env, overrides):
    """Test that out-of-range settings are rejected"""
    with pytest.raises(PreconditionError):
        Config.from_env(**overrides)


def test_generator_other_than_five(clean_env):
    """Test that any generator congruent to 5 mod 8 is accepted"""
    assert Config.from_env(generator=13).generator == 13


def test_with_overrides_and_to_dict(clean_env):
    """Test copying with overrides and serializing"""
    config = Config.from_env().with_overrides(series_degree=16, workers=None)
    assert config.series_degree == 16
    assert config.workers == 1
    data = config.to_dict()
    assert data["series_degree"] == 16
    assert isinstance(data["cache_dir"], str)
    assert data["units_dir"] is None
