"""Runtime configuration loaded from the environment and ``.env`` files."""

import os
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, Optional

from dotenv import load_dotenv

from .exceptions import PreconditionError
from .logger import parse_level

# Load environment variables
load_dotenv()

ENV_PREFIX = "IWASAWA_CM_"


def _default_cache_dir() -> Path:
    return Path(os.getenv("XDG_CACHE_HOME", Path.home() / ".cache")) / "iwasawa_cm"


def _env(name: str) -> Optional[str]:
    value = os.getenv(ENV_PREFIX + name)
    return value if value not in (None, "") else None


@dataclass(frozen=True)
class Config:
    """Resolved settings for a run.

    Attributes:
        complex_bits: Working precision for complex evaluations (j, theta, sigma).
        padic_prec: 2-adic precision N used for table work.
        series_degree: Truncation degree D for power series.
        cache_dir: Directory holding cached class and field polynomials.
        units_dir: Directory with user supplied unit files; None uses shipped data.
        workers: Parallelism width for independent rows and samples.
        log_level: Level passed to setup_logger.
        generator: Topological generator u of 1 + 4Z_2 used by the Gamma-transform.
    """

    complex_bits: int = 200
    padic_prec: int = 64
    series_degree: int = 32
    cache_dir: Path = field(default_factory=_default_cache_dir)
    units_dir: Optional[Path] = None
    workers: int = 1
    log_level: str = "INFO"
    generator: int = 5

    def __post_init__(self):
        if self.complex_bits < 64:
            raise PreconditionError(f"complex_bits must be >= 64, got {self.complex_bits}")
        if self.padic_prec < 16:
            raise PreconditionError(f"padic_prec must be >= 16, got {self.padic_prec}")
        if self.series_degree < 3:
            raise PreconditionError(f"series_degree must be >= 3, got {self.series_degree}")
        if self.workers < 1:
            raise PreconditionError(f"workers must be >= 1, got {self.workers}")
        if self.generator % 8 != 5:
            raise PreconditionError(
                f"generator must be = 5 mod 8 to generate 1 + 4Z_2, got {self.generator}"
            )
        try:
            parse_level(self.log_level)
        except ValueError as e:
            raise PreconditionError(str(e)) from e

    @classmethod
    def from_env(cls, **overrides: Any) -> "Config":
        """Build a Config from ``IWASAWA_CM_*`` variables, then apply overrides.

        Overrides whose value is None are ignored, so argparse namespaces can be
        passed through directly.
        """
        values: Dict[str, Any] = {}
        try:
            for name, cast in (
                ("complex_bits", int),
                ("padic_prec", int),
                ("series_degree", int),
                ("workers", int),
                ("generator", int),
            ):
                raw = _env(name.upper())
                if raw is not None:
                    values[name] = cast(raw)
        except ValueError as e:
            raise PreconditionError(f"Invalid numeric environment setting: {e}") from e
        if _env("CACHE_DIR"):
            values["cache_dir"] = Path(_env("CACHE_DIR"))
        if _env("UNITS_DIR"):
            values["units_dir"] = Path(_env("UNITS_DIR"))
        if _env("LOG_LEVEL"):
            values["log_level"] = _env("LOG_LEVEL")
        values.update({k: v for k, v in overrides.items() if v is not None})
        for key in ("cache_dir", "units_dir"):
            if values.get(key) is not None:
                values[key] = Path(values[key])
        return cls(**values)

    def with_overrides(self, **overrides: Any) -> "Config":
        return replace(self, **{k: v for k, v in overrides.items() if v is not None})

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["cache_dir"] = str(self.cache_dir)
        data["units_dir"] = str(self.units_dir) if self.units_dir else None
        return data
