"""Verification reports and the JSON envelope every command emits."""

import json
import time
from dataclasses import dataclass, field
from typing import Any, Dict, Optional

import mpmath

SCHEMA = 1


def jsonable(value: Any) -> Any:
    """Convert mpmath numbers, Fractions and containers into plain JSON values."""
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if isinstance(value, (mpmath.mpf,)):
        return mpmath.nstr(value, 20)
    if isinstance(value, (mpmath.mpc, complex)):
        return {"re": mpmath.nstr(mpmath.mpf(value.real), 20), "im": mpmath.nstr(mpmath.mpf(value.imag), 20)}
    if hasattr(value, "to_dict"):
        return jsonable(value.to_dict())
    if isinstance(value, (str, int, float, bool)) or value is None:
        return value
    return str(value)


@dataclass
class VerificationReport:
    """Outcome of one numerical or congruence check.

    ``residual`` is the quantity compared against ``tolerance``; ``passed`` is
    decided by the producing check, not recomputed here.
    """

    identity: str
    parameters: Dict[str, Any]
    residual: Any
    precision: int
    passed: bool
    tolerance: Optional[Any] = None
    details: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return jsonable(
            {
                "identity": self.identity,
                "parameters": self.parameters,
                "residual": self.residual,
                "tolerance": self.tolerance,
                "precision": self.precision,
                "passed": self.passed,
                "details": self.details,
            }
        )


def envelope(command: str, config: Dict[str, Any], result: Any, started: float) -> Dict[str, Any]:
    return {
        "schema": SCHEMA,
        "command": command,
        "config": jsonable(config),
        "result": jsonable(result),
        "wall_clock": round(time.time() - started, 3),
    }


def dumps(payload: Dict[str, Any]) -> str:
    return json.dumps(payload, indent=2, sort_keys=True)
