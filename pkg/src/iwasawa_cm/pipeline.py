"""Evaluation of the index formula, the table over q = 7 mod 8 and the X(H_inf) verdict."""

import csv
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from logging import getLogger
from pathlib import Path
from typing import Dict, List, Optional, Union

from sympy import primerange

from .cache import ArtifactCache
from .cm import check_prime_q, class_group, hilbert_class_poly, prime_above_2_order
from .config import Config
from .exceptions import IwasawaCMError, PreconditionError, VerificationError
from .nf import NumberField, build_H, split_2
from .padic import RegulatorResult, regulator_2adic, regulator_variants, v2
from .units import UnitSet, load_units, regulator_index, search_units

logger = getLogger(__name__)

MODES = ("ingested", "computed", "hybrid")
VERDICTS = ("X_zero", "X_nonzero_infinite", "undetermined")
CSV_COLUMNS = ("q", "hK", "hH", "ord2_Rp", "ord2_index", "verdict", "provenance")
# Largest class number whose unit group the search can handle (degree 2h <= 6)
MAX_COMPUTED_H = 3


def euler_factor_ord(h: int, f: int) -> int:
    """ord_2 of prod over the primes P of H above p of (1 - 1/N(P)).

    There are h/f such primes, each of norm 2^f, and ord_2(1 - 2^(-f)) = -f.

    Raises:
        PreconditionError: If f does not divide h.
    """
    if h < 1 or f < 1 or h % f:
        raise PreconditionError(f"Residue degree {f} must divide h = {h}")
    return (h // f) * -f


@dataclass
class IndexTerms:
    """Contributions to ord_2 [M(H_n) : H_inf], one attribute per factor."""

    q: int
    n: int
    h_H: int
    ord2_Rp: int
    h: int
    f: int
    sqrt_disc_ord: int = 0

    @property
    def class_number(self) -> int:
        return v2(self.h_H)

    @property
    def roots_of_unity(self) -> int:
        # w(H_n) = 2 for every layer considered here
        return -1

    @property
    def euler(self) -> int:
        return euler_factor_ord(self.h, self.f)

    @property
    def total(self) -> int:
        return (
            self.class_number
            + self.ord2_Rp
            + self.roots_of_unity
            - self.sqrt_disc_ord
            + self.euler
            + self.n
            + 2
        )

    def to_dict(self) -> dict:
        return {
            "q": self.q,
            "n": self.n,
            "terms": {
                "ord2_hH": self.class_number,
                "ord2_Rp": self.ord2_Rp,
                "ord2_roots_of_unity": self.roots_of_unity,
                "ord2_sqrt_discriminant": -self.sqrt_disc_ord,
                "ord2_euler_factor": self.euler,
                "n_plus_2": self.n + 2,
            },
            "h": self.h,
            "f": self.f,
            "ord2_index": self.total,
        }


def index_terms(
    q: int,
    hH: int,
    ord2_Rp: int,
    n: int = 0,
    h: Optional[int] = None,
    f: Optional[int] = None,
    sqrt_disc_ord: int = 0,
) -> IndexTerms:
    """Itemised evaluation of the index formula; see ``index_ord``."""
    check_prime_q(q)
    if n < 0:
        raise PreconditionError(f"Layer n must be >= 0, got {n}")
    if hH < 1:
        raise PreconditionError(f"h(H) must be positive, got {hH}")
    if n == 0 and sqrt_disc_ord:
        raise PreconditionError("H/K is unramified; the discriminant term vanishes at n = 0")
    if h is None or f is None:
        cg = class_group(q)
        h = cg.h if h is None else h
        f = prime_above_2_order(cg) if f is None else f
    terms = IndexTerms(q, n, hH, ord2_Rp, h, f, sqrt_disc_ord)
    if terms.total < 0:
        raise VerificationError(
            f"Index order {terms.total} < 0 for q = {q}: inputs are inconsistent",
            witness=terms.to_dict(),
        )
    return terms


def index_ord(q: int, hH: int, ord2_Rp: int, n: int = 0, **kwargs) -> int:
    """ord_2 [M(H_n) : H_inf] from the class number and 2-adic regulator of H_n.

    ord_2(h(H_n) R_p(H_n) / (w(H_n) sqrt(Delta_p(H_n/K))) prod (1 - 1/N(P))) + n + 2,
    with w = 2 and, at n = 0, a trivial discriminant since H/K is unramified.

    Args:
        q: Prime with q = 7 mod 8.
        hH: Class number of H_n.
        ord2_Rp: ord_2 of the 2-adic regulator of H_n.
        n: Layer.
        **kwargs: ``h``, ``f`` (default from the class group) and ``sqrt_disc_ord`` for n > 0.

    Raises:
        VerificationError: If the result is negative.
    """
    return index_terms(q, hH, ord2_Rp, n, **kwargs).total


def verdict(ord2_index: Optional[int], hH: int = 1) -> str:
    """X_zero when the index order vanishes, X_nonzero_infinite when 2 | h(H)."""
    if ord2_index == 0:
        return "X_zero"
    if hH % 2 == 0:
        return "X_nonzero_infinite"
    return "undetermined"


@dataclass
class Lemma51Note:
    q: int
    applicable: bool
    conclusion: str
    conditions: Dict[str, bool] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "q": self.q,
            "applicable": self.applicable,
            "conclusion": self.conclusion,
            "conditions": self.conditions,
        }


def lemma51_note(q: int) -> Lemma51Note:
    """Applicability of X(K_inf) = 0: 2 splits in K and h(K) is odd.

    Raises:
        PreconditionError: If q is not a prime = 7 mod 8.
    """
    check_prime_q(q)
    h = class_group(q).h
    conditions = {"two_splits": q % 8 == 7, "h_odd": h % 2 == 1}
    return Lemma51Note(q, all(conditions.values()), "X(K_inf) = 0", conditions)


@dataclass
class TableRow:
    """One row of the table; ``provenance`` maps each field to computed, ingested or paper."""

    q: int
    hK: int
    hH: int = 1
    ord2_Rp: Optional[int] = None
    ord2_index: Optional[int] = None
    verdict: str = "undetermined"
    provenance: Dict[str, str] = field(default_factory=dict)
    error: Optional[str] = None
    note: Optional[str] = None

    def provenance_string(self) -> str:
        return ";".join(f"{k}:{self.provenance[k]}" for k in ("hK", "hH", "ord2_Rp", "ord2_index") if k in self.provenance)

    def csv_row(self) -> Dict[str, str]:
        values = {
            "q": self.q,
            "hK": self.hK,
            "hH": self.hH,
            "ord2_Rp": self.ord2_Rp,
            "ord2_index": self.ord2_index,
            "verdict": self.verdict,
            "provenance": self.provenance_string(),
        }
        return {k: "" if v is None else str(v) for k, v in values.items()}

    def to_dict(self) -> dict:
        data = {
            "q": self.q,
            "hK": self.hK,
            "hH": self.hH,
            "ord2_Rp": self.ord2_Rp,
            "ord2_index": self.ord2_index,
            "verdict": self.verdict,
            "provenance": dict(self.provenance),
        }
        if self.error:
            data["error"] = self.error
        if self.note:
            data["note"] = self.note
        return data


def _data_path(name: str) -> Path:
    return Path(str(resources.files("iwasawa_cm") / "data" / name))


def load_published_table(path: Optional[Union[str, Path]] = None) -> Dict[int, Dict[str, int]]:
    """Published rows keyed by q: hK, hH, ord2_Rp and ord2_index."""
    path = Path(path) if path else _data_path("published_table.csv")
    rows = {}
    with open(path, "r", encoding="utf-8", newline="") as f:
        for record in csv.DictReader(f):
            q = int(record["q"])
            rows[q] = {k: int(record[k]) for k in ("hK", "hH", "ord2_Rp", "ord2_index")}
    return rows


def golden_table_path() -> Path:
    return _data_path("golden_table.csv")


def field_for(q: int, config: Config, cache: Optional[ArtifactCache] = None) -> NumberField:
    """Defining polynomial of H, through the class polynomial, with both steps cached."""
    cache = cache if cache is not None else ArtifactCache(config.cache_dir)
    key = f"q{q}"
    record = cache.load("field", key)
    if record is not None:
        logger.debug(f"Using cached field for q = {q}")
        return NumberField.from_dict(record)
    hcp = hilbert_class_poly(q, cache=cache)
    nf = build_H(hcp, q)
    cache.store("field", key, nf.to_dict())
    return nf


def compute_regulator(
    q: int,
    config: Config,
    units: Optional[UnitSet] = None,
    search: bool = False,
    cache: Optional[ArtifactCache] = None,
    convention: str = "drop",
) -> RegulatorResult:
    """ord_2 of the 2-adic regulator of H for q.

    Units come from ``units``, a search in the constructed field (``search``), or the
    unit files under ``config.units_dir`` and the shipped data. Searched units for a q
    with published units are certified to have odd index against them.

    Raises:
        PreconditionError: If no units are available.
        VerificationError: If searched units have even index.
    """
    if units is None:
        nf = field_for(q, config, cache)
        if search:
            units = search_units(nf)
            try:
                reference = load_units(q, config.units_dir)
            except PreconditionError:
                reference = None
            if reference is not None and reference.r:
                index, _ = regulator_index(units, reference)
                if index % 2 == 0:
                    raise VerificationError(
                        f"Searched units for q = {q} have even index {index}", witness={"index": index}
                    )
                units.certificate["odd_index"] = index
        else:
            units = load_units(q, config.units_dir, nf)
    splitting = split_2(units.field, config.padic_prec)
    images = units.local_images(splitting, "p")
    result = regulator_2adic(images, convention=convention, ring=splitting.ring)
    result.choices["units"] = units.provenance
    logger.info(f"q = {q}: ord2(R_p) = {result.ord2} from {units.provenance} units")
    return result


def regulator_choices(units: UnitSet, N: int = 64) -> Dict[str, List[RegulatorResult]]:
    """Drop-convention regulators for both primes of K above 2 and every dropped embedding.

    The 2-adic embedding fixing p is a convention; the other block corresponds
    to the opposite sign of sqrt(-q). ord_2 must agree across each block.

    Raises:
        VerificationError: If ord_2 depends on the dropped embedding.
    """
    splitting = split_2(units.field, N)
    choices = {}
    for block in ("p", "pstar"):
        variants = regulator_variants(units.local_images(splitting, block), ring=splitting.ring)
        ords = {v.ord2 for v in variants}
        if len(ords) != 1:
            raise VerificationError(
                f"ord2 of the regulator depends on the dropped embedding: {sorted(ords)}",
                witness={"block": block, "ords": sorted(ords)},
            )
        for v in variants:
            v.choices["block"] = block
        choices[block] = variants
    return choices


def compute_row(q: int, mode: str, config: Config, published_rows: Optional[Dict[int, Dict[str, int]]] = None) -> TableRow:
    """One table row; failures are recorded on the row instead of raised."""
    published_rows = load_published_table() if published_rows is None else published_rows
    try:
        h = class_group(q).h
    except IwasawaCMError as e:
        logger.error(f"q = {q}: class group failed: {e}")
        return TableRow(q, 0, error=str(e))
    row = TableRow(q, h, provenance={"hK": "computed"})
    published = published_rows.get(q)
    if published is not None and published["hK"] != h:
        logger.warning(f"q = {q}: computed h = {h} differs from the published {published['hK']}")
    row.hH = published["hH"] if published else 1
    row.provenance["hH"] = "paper" if published else "ingested"

    use_computed = mode == "computed" or (mode == "hybrid" and h <= MAX_COMPUTED_H)
    try:
        if use_computed:
            row.ord2_Rp = compute_regulator(q, config, search=h > 1).ord2
            row.provenance["ord2_Rp"] = "computed"
        else:
            if published is None:
                raise PreconditionError(f"No published regulator for q = {q}")
            row.ord2_Rp = published["ord2_Rp"]
            row.provenance["ord2_Rp"] = "paper"
        row.ord2_index = index_ord(q, row.hH, row.ord2_Rp)
        row.provenance["ord2_index"] = "computed"
    except IwasawaCMError as e:
        logger.error(f"q = {q}: row failed: {e}")
        row.error = f"{type(e).__name__}: {e}"
        return row
    row.verdict = verdict(row.ord2_index, row.hH)
    if row.verdict == "undetermined":
        row.note = "M(H) != H_inf; X(H_inf) != 0 is asserted in print, not concluded here"
    return row


def _compute_row_star(args) -> TableRow:
    return compute_row(*args)


def build_table(q_max: int, mode: str = "ingested", config: Optional[Config] = None) -> List[TableRow]:
    """Rows for every prime q = 7 mod 8 up to ``q_max``, in increasing q.

    Args:
        q_max: Largest q considered.
        mode: 'ingested' takes ord2(R_p) from the published table, 'computed' runs
            the full pipeline, 'hybrid' computes rows with h <= 3 and ingests the rest.
        config: Settings; ``config.workers`` > 1 spreads rows over processes.

    Raises:
        PreconditionError: For an unknown mode.
    """
    if mode not in MODES:
        raise PreconditionError(f"Unknown mode {mode!r}; choose from {', '.join(MODES)}")
    config = config or Config.from_env()
    qs = [q for q in primerange(7, q_max + 1) if q % 8 == 7]
    published_rows = load_published_table()
    logger.info(f"Building table for {len(qs)} primes up to {q_max} in {mode} mode")
    jobs = [(q, mode, config, published_rows) for q in qs]
    if config.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            rows = list(pool.map(_compute_row_star, jobs))
    else:
        rows = [compute_row(*job) for job in jobs]
    failed = [row.q for row in rows if row.error]
    if failed:
        logger.warning(f"{len(failed)} rows failed: {failed}")
    return rows


def write_csv(rows: List[TableRow], path: Union[str, Path]) -> Path:
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=CSV_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow(row.csv_row())
    return path


def write_json(rows: List[TableRow], path: Union[str, Path]) -> Path:
    path = Path(path)
    with open(path, "w", encoding="utf-8") as f:
        json.dump([row.to_dict() for row in rows], f, indent=2)
    return path


def diff_against(rows: List[TableRow], reference: Union[str, Path]) -> List[Dict[str, str]]:
    """Fields where ``rows`` differ from a reference CSV; empty when they agree."""
    with open(reference, "r", encoding="utf-8", newline="") as f:
        expected = {record["q"]: record for record in csv.DictReader(f)}
    differences = []
    produced = {str(row.q): row.csv_row() for row in rows}
    for q in sorted(set(expected) | set(produced), key=int):
        a, b = produced.get(q), expected.get(q)
        if a is None or b is None:
            differences.append({"q": q, "field": "row", "got": str(a is not None), "expected": str(b is not None)})
            continue
        for column in CSV_COLUMNS:
            if a[column] != b[column]:
                differences.append({"q": q, "field": column, "got": a[column], "expected": b[column]})
    return differences
