__version__ = "0.1.0"

from .cm import ClassGroup, HilbertClassPoly, class_group, hilbert_class_poly
from .config import Config
from .exceptions import (
    CacheError,
    ConstructionError,
    IwasawaCMError,
    PrecisionError,
    PreconditionError,
    UnitSearchError,
    VerificationError,
)
from .pipeline import TableRow, build_table, index_ord, verdict

__all__ = [
    "ClassGroup",
    "HilbertClassPoly",
    "class_group",
    "hilbert_class_poly",
    "Config",
    "IwasawaCMError",
    "PreconditionError",
    "PrecisionError",
    "VerificationError",
    "ConstructionError",
    "UnitSearchError",
    "CacheError",
    "TableRow",
    "build_table",
    "index_ord",
    "verdict",
]
