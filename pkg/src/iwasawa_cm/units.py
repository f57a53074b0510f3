"""Units of the Hilbert class field: ingestion of published units, a small-degree
search, and the checks both must pass before a regulator is trusted."""

import json
from dataclasses import dataclass, field
from importlib import resources
from itertools import product
from logging import getLogger
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import mpmath
from sympy import ZZ
from sympy.polys.matrices import DomainMatrix

from .exceptions import PrecisionError, PreconditionError, UnitSearchError, VerificationError
from .nf import (
    FieldElem,
    NumberField,
    TwoAdicSplitting,
    _integral_basis,
    _lll_reduce,
    has_local_root,
    split_2,
    split_places,
    sqrt_in_field,
)
from .padic import Local2

logger = getLogger(__name__)

MAX_SEARCH_DEGREE = 6
LOG_SCALE_BITS = 50
RELATION_BITS = 25


@dataclass
class UnitSet:
    """Independent units of norm +-1 in a number field.

    Attributes:
        field: The field the unit coordinates refer to.
        units: h - 1 units.
        provenance: 'ingested' or 'searched'.
        source: Free-form origin of the data.
        certificate: Checks that were run (independence, 2-saturation, ...).
    """

    field: NumberField
    units: List[FieldElem]
    provenance: str
    source: str = ""
    certificate: Dict[str, object] = field(default_factory=dict)

    @property
    def r(self) -> int:
        return len(self.units)

    def complex_regulator(self, prec_bits: int = 128) -> mpmath.mpf:
        return complex_regulator(self.field, self.units, prec_bits)

    def local_images(self, splitting: TwoAdicSplitting, block: str = "p") -> List[List[Local2]]:
        """``images[i][j]``: unit i under the j-th embedding above the chosen prime of K."""
        roots = splitting.embeddings(block)
        return [[u.to_local(root) for root in roots] for u in self.units]

    def to_dict(self) -> dict:
        return {
            "q": self.field.q,
            "poly": [str(c) for c in self.field.poly],
            "units": [u.to_json() for u in self.units],
            "source": self.source,
        }


def log_vector(u: FieldElem, places: Sequence[mpmath.mpc]) -> List[mpmath.mpf]:
    """log |sigma(u)|^2 at each complex place."""
    return [2 * mpmath.log(abs(u.embed(p))) for p in places]


def complex_regulator(nf: NumberField, units: Sequence[FieldElem], prec_bits: int = 128) -> mpmath.mpf:
    """Absolute value of the (r x r) determinant of log |sigma_j(u_i)|^2 over the first r places."""
    if not units:
        return mpmath.mpf(1)
    with mpmath.workprec(prec_bits):
        _, places = split_places(nf.complex_roots(prec_bits), prec_bits)
        r = len(units)
        rows = [log_vector(u, places[:r]) for u in units]
        return abs(mpmath.det(mpmath.matrix(rows)))


def check_units(nf: NumberField, units: Sequence[FieldElem], prec_bits: int = 128) -> None:
    """Raise VerificationError unless every unit has norm +-1 and the set is independent of rank h - 1."""
    if len(units) != nf.h - 1:
        raise VerificationError(
            f"Expected {nf.h - 1} units for h = {nf.h}, got {len(units)}",
            witness={"count": len(units)},
        )
    for i, u in enumerate(units):
        norm = u.norm()
        if abs(norm) != 1:
            raise VerificationError(
                f"Unit {i} has norm {norm}, not +-1", witness={"index": i, "norm": str(norm)}
            )
    reg = complex_regulator(nf, units, prec_bits)
    if reg < mpmath.mpf(2) ** (-64):
        raise VerificationError(
            "Units are multiplicatively dependent", witness={"regulator": mpmath.nstr(reg, 10)}
        )


def _read_unit_file(path: Union[str, Path]) -> dict:
    path = Path(path)
    if not path.exists():
        raise PreconditionError(f"Unit file {path} does not exist")
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)


def shipped_units_path(q: int) -> Path:
    return Path(str(resources.files("iwasawa_cm") / "data" / f"units_q{q}.json"))


def ingest_units(path: Union[str, Path], nf: Optional[NumberField] = None, N: int = 64) -> UnitSet:
    """Load units from a JSON file ``{q, poly, units, source}``.

    Args:
        path: Unit file; coordinates are rationals over the power basis of ``poly``
            (lowest degree first), the polynomial is listed leading coefficient first.
        nf: Active field. If its polynomial differs from the file's, the file's
            polynomial must have a root in the 2-adic completion of ``nf``.
        N: 2-adic precision for that certificate.

    Returns:
        UnitSet over the file's field, norm and independence checked.

    Raises:
        PreconditionError: If the file is missing or malformed.
        VerificationError: On a norm, independence or field mismatch.
    """
    data = _read_unit_file(path)
    try:
        q = int(data["q"])
        poly = tuple(int(c) for c in data["poly"])
        coords = data["units"]
    except (KeyError, TypeError, ValueError) as e:
        raise PreconditionError(f"Malformed unit file {path}: {e}") from e
    if (len(poly) - 1) % 2:
        raise PreconditionError(f"Unit file {path} has a polynomial of odd degree")
    file_field = NumberField(poly, q, (len(poly) - 1) // 2, label=str(data.get("source", "")))
    if nf is not None and nf.poly != poly:
        if nf.q != q or nf.degree != file_field.degree:
            raise VerificationError(
                f"Unit file is for q = {q}, degree {file_field.degree}; active field is q = {nf.q}, degree {nf.degree}"
            )
        splitting = split_2(nf, N)
        if not has_local_root(poly, splitting.ring, N):
            raise VerificationError(
                f"Unit file polynomial has no root in the 2-adic completion of {nf}",
                witness={"poly": list(poly)},
            )
        logger.info(f"Unit file field matches the active field 2-adically (N = {N})")
    units = [file_field.element(c) for c in coords]
    check_units(file_field, units)
    logger.info(f"Ingested {len(units)} units for q = {q} from {path}")
    return UnitSet(file_field, units, "ingested", str(data.get("source", "")), {"independent": True})


def serialize_units(unit_set: UnitSet, path: Union[str, Path]) -> Path:
    path = Path(path)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(unit_set.to_dict(), f, indent=2)
    return path


def load_units(q: int, units_dir: Optional[Path] = None, nf: Optional[NumberField] = None) -> UnitSet:
    """Units for q from ``units_dir`` if present there, else from the shipped data."""
    candidates = []
    if units_dir is not None:
        candidates.append(Path(units_dir) / f"units_q{q}.json")
    candidates.append(shipped_units_path(q))
    for path in candidates:
        if path.exists():
            return ingest_units(path, nf)
    if nf is not None and nf.h == 1:
        return UnitSet(nf, [], "ingested", "rank 0")
    raise PreconditionError(f"No unit data for q = {q}")


def _is_torsion(values: Sequence[complex]) -> bool:
    return all(abs(abs(v) - 1) < 1e-9 for v in values)


def _short_units(
    nf: NumberField, basis: List[List], bound: int, max_candidates: int
) -> List[FieldElem]:
    n = nf.degree
    with mpmath.workprec(128):
        _, places = split_places(nf.complex_roots(128), 128)
        emb = [[complex(nf.element(b).embed(p)) for p in places] for b in basis]
    found: Dict[Tuple, Tuple[float, FieldElem]] = {}
    for vec in product(range(-bound, bound + 1), repeat=n):
        first = next((c for c in vec if c), 0)
        if first <= 0:
            continue
        values = [sum(c * emb[k][j] for k, c in enumerate(vec) if c) for j in range(len(places))]
        approx = 1.0
        for v in values:
            approx *= abs(v) ** 2
        if abs(approx - 1) > 1e-6 or _is_torsion(values):
            continue
        coords = [sum(c * basis[k][i] for k, c in enumerate(vec)) for i in range(n)]
        elem = nf.element(coords)
        if abs(elem.norm()) != 1:
            continue
        height = sum(abs(v) ** 2 for v in values)
        found[tuple(elem.coords)] = (height, elem)
    ranked = sorted(found.values(), key=lambda t: t[0])
    return [elem for _, elem in ranked[:max_candidates]]


def _independent_basis(nf: NumberField, candidates: List[FieldElem], r: int) -> List[FieldElem]:
    """Basis of the log lattice spanned by ``candidates`` via LLL on [2^50 log | I]."""
    m = len(candidates)
    with mpmath.workprec(128):
        _, places = split_places(nf.complex_roots(128), 128)
        scale = mpmath.mpf(2) ** LOG_SCALE_BITS
        rows = []
        for i, u in enumerate(candidates):
            logs = [int(mpmath.nint(scale * v)) for v in log_vector(u, places[:r])]
            rows.append(logs + [1 if j == i else 0 for j in range(m)])
    reduced = DomainMatrix([[ZZ(v) for v in row] for row in rows], (m, r + m), ZZ).lll().to_Matrix()
    generators = []
    for i in range(m):
        log_part = [abs(int(reduced[i, j])) for j in range(r)]
        if max(log_part) < 2 ** RELATION_BITS:
            continue
        exponents = [int(reduced[i, r + j]) for j in range(m)]
        unit = nf.one()
        for cand, e in zip(candidates, exponents):
            if e:
                unit = unit * cand ** e
        generators.append(unit)
    return generators


def saturate_2(nf: NumberField, units: List[FieldElem], max_rounds: int = 64) -> List[FieldElem]:
    """Replace units until no +-(product of a nonempty subset) is a square in the field."""
    units = list(units)
    r = len(units)
    for _ in range(max_rounds):
        replaced = False
        for e in product((0, 1), repeat=r):
            if not any(e):
                continue
            base = nf.one()
            for u, bit in zip(units, e):
                if bit:
                    base = base * u
            for sign in (1, -1):
                root = sqrt_in_field(nf, base * sign)
                if root is not None:
                    i = e.index(1)
                    logger.debug(f"Unit subset {e} (sign {sign}) is a square; replacing unit {i}")
                    units[i] = root
                    replaced = True
                    break
            if replaced:
                break
        if not replaced:
            return units
    raise UnitSearchError(f"2-saturation did not stabilise in {max_rounds} rounds")


def search_units(nf: NumberField, effort: int = 2, max_candidates: int = 24) -> UnitSet:
    """Search for h - 1 independent units of small height.

    Integral elements of norm +-1 are enumerated with coefficients in
    [-effort, effort] over an LLL-reduced integral basis; a basis of the
    logarithmic lattice they span is extracted by LLL and then made
    2-saturated, so its index in the full unit group is odd.

    Args:
        nf: Field of degree at most 6.
        effort: Coefficient bound for the enumeration.
        max_candidates: Number of shortest units kept.

    Returns:
        UnitSet with provenance 'searched'.

    Raises:
        PreconditionError: If the degree exceeds 6.
        UnitSearchError: If fewer than h - 1 independent units were found.
    """
    r = nf.h - 1
    if r == 0:
        return UnitSet(nf, [], "searched", "rank 0", {"effort": effort})
    if nf.degree > MAX_SEARCH_DEGREE:
        raise PreconditionError(f"Unit search supports degree <= {MAX_SEARCH_DEGREE}, got {nf.degree}")
    try:
        basis = _integral_basis(nf.as_poly())
    except (PrecisionError, VerificationError) as e:
        logger.warning(f"Integral basis failed ({e}); searching over the power basis")
        basis = [[1 if i == j else 0 for i in range(nf.degree)] for j in range(nf.degree)]
    basis = _lll_reduce(nf.as_poly(), basis, 256)
    candidates = _short_units(nf, basis, effort, max_candidates)
    logger.info(f"Unit search for q = {nf.q}: {len(candidates)} candidates at effort {effort}")
    if len(candidates) < r:
        raise UnitSearchError(f"Only {len(candidates)} units of norm +-1 found at effort {effort}")
    units = _independent_basis(nf, candidates, r)
    if len(units) != r:
        raise UnitSearchError(f"Candidates span rank {len(units)}, need {r}; raise effort")
    units = saturate_2(nf, units)
    check_units(nf, units)
    certificate = {"effort": effort, "candidates": len(candidates), "two_saturated": True}
    return UnitSet(nf, units, "searched", f"search effort {effort}", certificate)


def regulator_index(units: UnitSet, reference: UnitSet, prec_bits: int = 128) -> Tuple[int, float]:
    """Index of ``units`` against ``reference`` from complex regulators, with the rounding residual."""
    with mpmath.workprec(prec_bits):
        ratio = units.complex_regulator(prec_bits) / reference.complex_regulator(prec_bits)
        nearest = int(mpmath.nint(ratio))
        residual = float(abs(ratio - nearest))
    if nearest < 1 or residual > 1e-9:
        raise VerificationError(
            f"Regulator ratio {float(ratio):.6g} is not an integer", witness={"ratio": float(ratio)}
        )
    return nearest, residual
