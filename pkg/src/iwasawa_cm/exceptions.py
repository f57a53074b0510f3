"""Exceptions raised by iwasawa_cm.

Every failure the toolkit can report maps onto one class here; the CLI turns
them into exit codes (see ``cli.exit_code``).
"""

from typing import Any, Dict, Optional


class IwasawaCMError(RuntimeError):
    """Base class for all toolkit errors."""


class PreconditionError(IwasawaCMError, ValueError):
    """Input outside the supported domain (wrong residue class, non-prime q, ...)."""


class PrecisionError(IwasawaCMError):
    """A result could not be certified at the working precision.

    Attributes:
        worst: The offending quantity (rounding gap, residual, valuation bound).
        needed: Optional hint for the precision that would be required.
    """

    def __init__(self, message: str, worst: Any = None, needed: Optional[int] = None):
        super().__init__(message)
        self.worst = worst
        self.needed = needed


class VerificationError(IwasawaCMError):
    """An identity, congruence or certificate check failed.

    Attributes:
        witness: Data describing the failing case.
    """

    def __init__(self, message: str, witness: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.witness = witness or {}


class ConstructionError(IwasawaCMError):
    """A field or object could not be constructed (e.g. no usable primitive element)."""


class UnitSearchError(IwasawaCMError):
    """The unit search exhausted its effort before finding enough units."""


class CacheError(IwasawaCMError):
    """A cached record is unreadable or fails its checksum."""
