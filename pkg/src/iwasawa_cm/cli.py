"""Command-line entry point: ``iwasawa-cm <command> ...`` prints one JSON envelope on stdout."""

import argparse
import random
import sys
import time
from pathlib import Path
from typing import Any, Callable, Dict, Iterable, List, Optional

from . import __version__
from .cache import ArtifactCache
from .cm import class_group, hilbert_class_poly, prime_above_2_order
from .config import Config
from .elliptic import (
    augmentation_check,
    cm_lattice,
    distribution_check,
    g2_check,
    hecke_check,
    identity25_check,
    lemma26_search,
    prop21_check,
    small_multipliers,
)
from .exceptions import (
    IwasawaCMError,
    PrecisionError,
    PreconditionError,
    VerificationError,
)
from .formalgroup import (
    WeierstrassCurve,
    composition_check,
    formal_expansions,
    frobenius_shape,
    group_law_check,
    lemma22_check,
    log_compatibility_check,
    multiplication_series,
)
from .iwasawa import (
    RationalMeasure,
    dirac,
    gamma_transform,
    inverse_mahler,
    iwasawa_asymptote_check,
    mahler,
    mu_lambda,
    sinnott_sweep,
)
from .logger import setup_logger
from .nf import GENERATORS, build_H, split_2
from .padic import iota_omega
from .pipeline import (
    MODES,
    build_table,
    compute_regulator,
    diff_against,
    field_for,
    golden_table_path,
    index_terms,
    lemma51_note,
    load_published_table,
    regulator_choices,
    write_csv,
    write_json,
)
from .report import VerificationReport, dumps, envelope
from .units import ingest_units, load_units

EXIT_OK = 0
EXIT_PRECONDITION = 2
EXIT_PRECISION = 3
EXIT_VERIFICATION = 4

ELLIPTIC_SUITES = ("25", "22", "prop21", "lemma26", "distribution", "hecke", "formal", "g2")
IWASAWA_SUITES = ("mahler", "gamma", "sinnott", "asymptote")
ARTIFACT_KINDS = ("hcp", "field")


def artifact_versions(config: Config, qs: Iterable[int]) -> Dict[str, Dict[str, Optional[str]]]:
    """Short checksums of the cached records a report depends on, keyed by "q<q>"; None where absent."""
    cache = ArtifactCache(config.cache_dir)
    return {f"q{q}": {kind: cache.version(kind, f"q{q}") for kind in ARTIFACT_KINDS} for q in qs}


def exit_code(error: BaseException) -> int:
    if isinstance(error, PreconditionError):
        return EXIT_PRECONDITION
    if isinstance(error, PrecisionError):
        return EXIT_PRECISION
    # verification, construction, unit search and cache failures
    return EXIT_VERIFICATION


# Commands


def cmd_classgroup(args: argparse.Namespace, config: Config) -> Dict[str, Any]:
    cg = class_group(args.q)
    return {
        "q": args.q,
        "h": cg.h,
        "forms": [list(f.as_tuple()) for f in cg.forms],
        "prime_above_2_order": prime_above_2_order(cg),
        "artifacts": artifact_versions(config, [args.q]),
    }


def cmd_hcp(args: argparse.Namespace, config: Config) -> Dict[str, Any]:
    cache = ArtifactCache(config.cache_dir)
    hcp = hilbert_class_poly(args.q, args.bits, cache)
    return {
        "polynomial": hcp.to_dict(),
        "expression": str(hcp),
        "artifacts": artifact_versions(config, [args.q]),
    }


def cmd_field(args: argparse.Namespace, config: Config) -> Dict[str, Any]:
    cache = ArtifactCache(config.cache_dir)
    cg = class_group(args.q)
    if args.generator == "j":
        # square mod 2, never split 2-adically
        nf = build_H(hilbert_class_poly(args.q, cache=cache), args.q, generator="j")
        return {
            "field": nf.to_dict(),
            "squarefree_mod_2": nf.is_squarefree_mod_2(),
            "h": cg.h,
            "artifacts": artifact_versions(config, [args.q]),
        }
    nf = field_for(args.q, config, cache)
    splitting = split_2(nf, config.padic_prec)
    return {
        "field": nf.to_dict(),
        "splitting": splitting.to_dict(),
        "local_degree_matches_order": splitting.f == prime_above_2_order(cg),
        "h": cg.h,
        "artifacts": artifact_versions(config, [args.q]),
    }


def cmd_regulator(args: argparse.Namespace, config: Config) -> Dict[str, Any]:
    units = None
    if args.units:
        nf = field_for(args.q, config)
        units = ingest_units(args.units, nf, config.padic_prec)
    result = compute_regulator(args.q, config, units=units, search=args.search, convention=args.convention)
    data = result.to_dict()
    data["q"] = args.q
    data["digits"] = result.digits(args.digits)
    if args.all_choices:
        if units is None:
            units = load_units(args.q, config.units_dir, field_for(args.q, config))
        data["choices"] = {
            block: [{**v.to_dict(), "exponents": v.exponents(args.digits)} for v in variants]
            for block, variants in regulator_choices(units, config.padic_prec).items()
        }
    data["artifacts"] = artifact_versions(config, [args.q])
    return data


def cmd_index(args: argparse.Namespace, config: Config) -> Dict[str, Any]:
    published = load_published_table()
    provenance = {}
    if args.ord2_rp is not None:
        ord2_Rp = args.ord2_rp
        provenance["ord2_Rp"] = "ingested"
    elif args.q in published and args.n == 0:
        ord2_Rp = published[args.q]["ord2_Rp"]
        provenance["ord2_Rp"] = "paper"
    else:
        ord2_Rp = compute_regulator(args.q, config).ord2
        provenance["ord2_Rp"] = "computed"
    if args.hH is not None:
        hH = args.hH
        provenance["hH"] = "ingested"
    elif args.q in published:
        hH = published[args.q]["hH"]
        provenance["hH"] = "paper"
    else:
        hH = 1
        provenance["hH"] = "ingested"
    terms = index_terms(args.q, hH, ord2_Rp, args.n, sqrt_disc_ord=args.sqrt_disc_ord)
    data = terms.to_dict()
    data["provenance"] = provenance
    data["lemma51"] = lemma51_note(args.q).to_dict()
    data["artifacts"] = artifact_versions(config, [args.q])
    return data


def cmd_table(args: argparse.Namespace, config: Config) -> Dict[str, Any]:
    rows = build_table(args.qmax, args.mode, config)
    if args.csv:
        write_csv(rows, args.csv)
    if args.json:
        write_json(rows, args.json)
    data = {"mode": args.mode, "qmax": args.qmax, "rows": [row.to_dict() for row in rows]}
    data["artifacts"] = artifact_versions(config, [row.q for row in rows])
    if args.golden:
        differences = diff_against(rows, golden_table_path())
        data["golden_differences"] = differences
        if differences:
            raise VerificationError(f"{len(differences)} fields differ from the golden table", witness={"first": differences[0]})
    return data


def _elliptic_suite(suite: str, q: int, config: Config) -> List[VerificationReport]:
    bits = config.complex_bits
    if suite == "22":
        return [lemma22_check(q, D=config.series_degree)]
    if suite == "formal":
        if q != 7:
            raise PreconditionError("The formal group suite uses the q = 7 curve")
        fs = formal_expansions(WeierstrassCurve.gross_q7(), min(config.series_degree, 24))
        pi_hat = iota_omega(q, config.padic_prec)
        reports = [group_law_check(fs), log_compatibility_check(fs, pi_hat), composition_check(fs, pi_hat, 3)]
        shape = frobenius_shape(multiplication_series(fs, pi_hat))
        if not shape:
            raise VerificationError("[pi](t) is not t^2 times a series in t^2 mod 2")
        return reports
    if suite == "lemma26":
        lam = lemma26_search(q)
        orders = augmentation_check(lam, config.generator, config.padic_prec)
        return [
            VerificationReport(
                identity="auxiliary multiplier",
                parameters={"q": q},
                residual=0,
                precision=config.padic_prec,
                passed=True,
                details={"lambda": lam.to_dict(), "exponent_valuations": orders},
            )
        ]
    if suite == "hecke":
        return [hecke_check(q, prec_bits=bits)]
    lattice = cm_lattice(q, 1, bits)
    if suite == "g2":
        return [g2_check(lattice)]
    lam = lemma26_search(q)
    if suite == "25":
        return [identity25_check(lattice, m.complex_value(bits)) for m in small_multipliers(q, 3)]
    if suite == "distribution":
        beta = small_multipliers(q, 1, exclude_norms=(lam.norm, q))[0]
        return [distribution_check(lattice, lam.complex_value(bits), beta.complex_value(bits))]
    if suite == "prop21":
        rho = [(lam.complex_value(bits), 1), (lam.conjugate().complex_value(bits), -1)]
        return [prop21_check(lattice, rho)]
    raise PreconditionError(f"Unknown elliptic suite {suite!r}")


def _iwasawa_suite(suite: str, config: Config) -> List[VerificationReport]:
    N, D = config.padic_prec, config.series_degree
    if suite == "mahler":
        moments = [n * n - 3 * n + 1 for n in range(D + 1)]
        ok = inverse_mahler(mahler(moments, N)) == moments
        return [VerificationReport("Mahler round trip", {"D": D}, 0 if ok else 1, N, ok)]
    if suite == "gamma":
        degree = D + (D + 1) // 2
        F = dirac(config.generator, degree, N)
        G = gamma_transform(F, u=config.generator, D=D)
        # <u>^s = u^s, so the transform is 1 + w
        ok = G.agrees_with(dirac(1, D, N))
        return [VerificationReport("Gamma-transform of a Dirac measure", {"u": config.generator, "D": D}, 0 if ok else 1, N, ok)]
    if suite == "sinnott":
        summary = sinnott_sweep(100, seed=0, D=40, N=N)
        missed = len(summary["failures"]) + len(summary["uncertified"])
        return [VerificationReport("mu identity sweep", {"samples": 100, "seed": 0}, missed, N, missed == 0, details=summary)]
    if suite == "asymptote":
        mu, lam, c = 0, 3, 2
        ords = [2 ** n * mu + lam * n + c for n in range(5)]
        found = iwasawa_asymptote_check(ords, mu, lam)
        rng = random.Random(0)
        violations = 0
        for _ in range(100):
            F = RationalMeasure.random(rng).to_series(D, N)
            try:
                base, scaled = mu_lambda(F), mu_lambda(F.scale(4))
            except PrecisionError:
                continue
            if base.certified and scaled.certified and (scaled.mu, scaled.lambda_) != (base.mu + 2, base.lambda_):
                violations += 1
        return [
            VerificationReport("growth law constant", {"mu": mu, "lambda": lam}, found - c, N, found == c),
            VerificationReport("mu shift under scaling by 4", {"samples": 100, "seed": 0}, violations, N, violations == 0),
        ]
    raise PreconditionError(f"Unknown iwasawa suite {suite!r}")


def cmd_verify(args: argparse.Namespace, config: Config) -> Dict[str, Any]:
    if args.family == "elliptic":
        reports = _elliptic_suite(args.suite, args.q, config)
    else:
        reports = _iwasawa_suite(args.suite, config)
    failed = [r for r in reports if not r.passed]
    data = {"family": args.family, "suite": args.suite, "reports": [r.to_dict() for r in reports]}
    data["artifacts"] = artifact_versions(config, [args.q] if args.family == "elliptic" else [])
    if failed:
        raise VerificationError(
            f"{len(failed)} of {len(reports)} checks failed in suite {args.suite}",
            witness={"reports": data["reports"]},
        )
    return data


COMMANDS: Dict[str, Callable[[argparse.Namespace, Config], Dict[str, Any]]] = {
    "classgroup": cmd_classgroup,
    "hcp": cmd_hcp,
    "field": cmd_field,
    "regulator": cmd_regulator,
    "index": cmd_index,
    "table": cmd_table,
    "verify": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="iwasawa-cm",
        description="Class fields, 2-adic regulators and Iwasawa checks for K = Q(sqrt(-q)), q = 7 mod 8.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING, ERROR or CRITICAL")
    parser.add_argument("--cache-dir", type=Path, default=None, help="Override the artifact cache directory")
    parser.add_argument("--workers", type=int, default=None, help="Processes for independent rows")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("classgroup", help="Reduced forms, h and the order of the prime above 2")
    p.add_argument("--q", type=int, required=True)

    p = sub.add_parser("hcp", help="Hilbert class polynomial (cached)")
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--bits", type=int, default=None)

    p = sub.add_parser("field", help="Defining polynomial of H and its 2-adic splitting")
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--generator", choices=GENERATORS, default="reduced", help="Primitive element of H over Q")

    p = sub.add_parser("regulator", help="2-adic regulator of H")
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--units", type=Path, default=None, help="Unit file {q, poly, units, source}")
    p.add_argument("--prec", type=int, default=None, help="2-adic precision N")
    p.add_argument("--search", action="store_true", help="Search units instead of ingesting them")
    p.add_argument("--convention", choices=("drop", "bordered"), default="drop")
    p.add_argument("--digits", type=int, default=24)
    p.add_argument("--all-choices", action="store_true", help="Report every dropped embedding for both primes above 2")

    p = sub.add_parser("index", help="ord_2 [M(H_n) : H_inf] with every term itemised")
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--n", type=int, default=0)
    p.add_argument("--hH", type=int, default=None)
    p.add_argument("--ord2-rp", type=int, default=None)
    p.add_argument("--sqrt-disc-ord", type=int, default=0)

    p = sub.add_parser("table", help="The table over primes q = 7 mod 8")
    p.add_argument("--qmax", type=int, required=True)
    p.add_argument("--mode", choices=MODES, default="ingested")
    p.add_argument("--csv", type=Path, default=None)
    p.add_argument("--json", type=Path, default=None)
    p.add_argument("--golden", action="store_true", help="Compare with the shipped golden table")

    p = sub.add_parser("verify", help="Numerical and congruence suites")
    vsub = p.add_subparsers(dest="family", required=True)
    e = vsub.add_parser("elliptic")
    e.add_argument("--suite", choices=ELLIPTIC_SUITES, required=True)
    e.add_argument("--q", type=int, default=7)
    i = vsub.add_parser("iwasawa")
    i.add_argument("--suite", choices=IWASAWA_SUITES, required=True)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    started = time.time()
    try:
        config = Config.from_env(
            log_level=args.log_level,
            cache_dir=args.cache_dir,
            workers=args.workers,
            padic_prec=getattr(args, "prec", None),
        )
    except PreconditionError as e:
        print(dumps({"schema": 1, "command": args.command, "error": str(e)}))
        return EXIT_PRECONDITION
    # stdout carries the JSON envelope
    logger = setup_logger(level=config.log_level, stream=sys.stderr)
    logger.info(f"iwasawa-cm {args.command} started")
    try:
        result = COMMANDS[args.command](args, config)
    except IwasawaCMError as e:
        code = exit_code(e)
        logger.error(f"{args.command} failed ({type(e).__name__}): {e}")
        failure = {"error": type(e).__name__, "message": str(e)}
        for attr in ("witness", "worst", "needed"):
            if getattr(e, attr, None) is not None:
                failure[attr] = getattr(e, attr)
        print(dumps(envelope(args.command, config.to_dict(), failure, started)))
        return code
    print(dumps(envelope(args.command, config.to_dict(), result, started)))
    logger.info(f"iwasawa-cm {args.command} finished in {time.time() - started:.2f}s")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
