"""The Hilbert class field H as an absolute number field, exact arithmetic in
it, and its splitting above 2."""

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import combinations, product
from logging import getLogger
from typing import Dict, List, Optional, Sequence, Tuple, Union

import mpmath
from sympy import QQ, ZZ, Poly, Rational, resultant, symbols
from sympy.polys.matrices import DomainMatrix

from .cm import HilbertClassPoly, check_prime_q
from .exceptions import ConstructionError, PreconditionError, VerificationError
from .padic import Local2, Local2Ring, evaluate, hensel_root, roots_mod_2

logger = getLogger(__name__)

x, y = symbols("x y")

MAX_SHIFT = 32
GENERATORS = ("reduced", "j")


def _fraction(value) -> Fraction:
    value = Rational(value)
    return Fraction(int(value.p), int(value.q))


@dataclass(frozen=True)
class NumberField:
    """Q[alpha] with alpha a root of the monic integer polynomial ``poly`` (leading coefficient first).

    Attributes:
        poly: Defining polynomial of degree 2h.
        q: The prime with K = Q(sqrt(-q)).
        h: Class number of K.
        label: How the defining polynomial was obtained.
        generator: Kind of primitive element, e.g. "gamma + k*omega"; empty for ingested fields.
        shift: The k of that primitive element, if any.
    """

    poly: Tuple[int, ...]
    q: int
    h: int
    label: str = ""
    generator: str = ""
    shift: Optional[int] = None

    def __post_init__(self):
        if self.poly[0] != 1:
            raise PreconditionError(f"Defining polynomial {self.poly} must be monic")
        if len(self.poly) - 1 != 2 * self.h:
            raise PreconditionError(
                f"Defining polynomial has degree {len(self.poly) - 1}, expected 2h = {2 * self.h}"
            )

    @property
    def degree(self) -> int:
        return len(self.poly) - 1

    def as_poly(self) -> Poly:
        return Poly(list(self.poly), x, domain=QQ)

    def element(self, coords: Sequence[Union[int, Fraction, str]]) -> "FieldElem":
        coords = [Fraction(c) for c in coords]
        if len(coords) > self.degree:
            return FieldElem.from_poly(self, Poly(list(reversed(coords)), x, domain=QQ))
        coords += [Fraction(0)] * (self.degree - len(coords))
        return FieldElem(self, tuple(coords))

    def zero(self) -> "FieldElem":
        return self.element([0])

    def one(self) -> "FieldElem":
        return self.element([1])

    def gen(self) -> "FieldElem":
        return self.element([0, 1])

    def is_squarefree_mod_2(self) -> bool:
        return Poly(list(self.poly), x, modulus=2).is_sqf

    def complex_roots(self, prec_bits: int = 256) -> List[mpmath.mpc]:
        return _complex_roots(self.poly, prec_bits)

    def to_dict(self) -> dict:
        return {
            "q": self.q,
            "h": self.h,
            "poly": [str(c) for c in self.poly],
            "label": self.label,
            "generator": {"kind": self.generator, "k": self.shift},
        }

    @classmethod
    def from_dict(cls, data: dict) -> "NumberField":
        generator = data.get("generator") or {}
        return cls(
            tuple(int(c) for c in data["poly"]),
            int(data["q"]),
            int(data["h"]),
            data.get("label", ""),
            generator.get("kind", ""),
            generator.get("k"),
        )

    def __str__(self) -> str:
        return str(self.as_poly().as_expr())


@lru_cache(maxsize=64)
def _complex_roots(poly: Tuple[int, ...], prec_bits: int) -> List[mpmath.mpc]:
    with mpmath.workprec(prec_bits):
        roots = mpmath.polyroots(list(poly), maxsteps=400, extraprec=2 * prec_bits)
    return [mpmath.mpc(r) for r in roots]


def mpf_to_fraction(value) -> Fraction:
    """Exact rational value of an mpmath real."""
    man, exp = mpmath.mpf(value).man_exp
    if exp >= 0:
        return Fraction(man * 2 ** exp)
    return Fraction(man, 2 ** -exp)


def split_places(roots: Sequence[mpmath.mpc], prec_bits: int) -> Tuple[list, list]:
    """Separate real roots from the upper-half-plane representatives of complex pairs."""
    eps = mpmath.mpf(2) ** (-(prec_bits // 2))
    real = sorted((mpmath.mpc(r.real, 0) for r in roots if abs(r.imag) < eps), key=lambda r: float(r.real))
    upper = sorted((r for r in roots if r.imag >= eps), key=lambda r: (float(r.real), float(r.imag)))
    return real, upper


@dataclass(frozen=True)
class FieldElem:
    """Element of a NumberField in the power basis 1, alpha, ..., lowest degree first."""

    field: NumberField
    coords: Tuple[Fraction, ...]

    @classmethod
    def from_poly(cls, nf: NumberField, p: Poly) -> "FieldElem":
        r = p.rem(nf.as_poly())
        coeffs = [_fraction(c) for c in reversed(r.all_coeffs())]
        coeffs += [Fraction(0)] * (nf.degree - len(coeffs))
        return cls(nf, tuple(coeffs[: nf.degree]))

    def to_poly(self) -> Poly:
        return Poly([Rational(c.numerator, c.denominator) for c in reversed(self.coords)], x, domain=QQ)

    def _coerce(self, other) -> "FieldElem":
        if isinstance(other, FieldElem):
            if other.field != self.field:
                raise PreconditionError("Cannot mix elements of different number fields")
            return other
        return self.field.element([other])

    def __add__(self, other):
        other = self._coerce(other)
        return FieldElem(self.field, tuple(a + b for a, b in zip(self.coords, other.coords)))

    __radd__ = __add__

    def __neg__(self):
        return FieldElem(self.field, tuple(-a for a in self.coords))

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        other = self._coerce(other)
        return FieldElem.from_poly(self.field, self.to_poly() * other.to_poly())

    __rmul__ = __mul__

    def inverse(self) -> "FieldElem":
        if self.is_zero():
            raise ZeroDivisionError("Inverse of zero in a number field")
        return FieldElem.from_poly(self.field, self.to_poly().invert(self.field.as_poly()))

    def __truediv__(self, other):
        return self * self._coerce(other).inverse()

    def __rtruediv__(self, other):
        return self._coerce(other) * self.inverse()

    def __pow__(self, n: int) -> "FieldElem":
        if n < 0:
            return self.inverse() ** (-n)
        result = self.field.one()
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def is_zero(self) -> bool:
        return all(c == 0 for c in self.coords)

    def norm(self) -> Fraction:
        """Absolute norm, the resultant of the defining polynomial and the coordinate polynomial."""
        return _fraction(resultant(self.field.as_poly().as_expr(), self.to_poly().as_expr(), x))

    def trace(self) -> Fraction:
        """Absolute trace, the trace of the multiplication matrix."""
        total = Fraction(0)
        power_ = self.field.one()
        a = self.field.gen()
        for i in range(self.field.degree):
            total += (self * power_).coords[i]
            power_ = power_ * a
        return total

    def charpoly(self) -> Poly:
        """Characteristic polynomial over Q, in y."""
        g = self.to_poly().as_expr()
        return Poly(resultant(self.field.as_poly().as_expr(), y - g, x), y, domain=QQ)

    def embed(self, root) -> mpmath.mpc:
        """Image under the complex embedding alpha -> root (at the current mpmath precision)."""
        value = mpmath.mpc(0)
        for c in reversed(self.coords):
            value = value * root + mpmath.mpf(c.numerator) / c.denominator
        return value

    def to_local(self, root: Local2) -> Local2:
        """Image under the 2-adic embedding alpha -> root; denominators must be odd."""
        try:
            return evaluate(self.coords, root)
        except PreconditionError as e:
            raise PreconditionError(f"Element is not 2-integral: {e}") from e

    def to_json(self) -> List[str]:
        return [str(c) for c in self.coords]

    def __str__(self) -> str:
        return str(self.to_poly().as_expr()).replace("x", "alpha")


def sqrt_in_field(
    nf: NumberField, value: Union[int, FieldElem], prec_bits: int = 384
) -> Optional[FieldElem]:
    """Square root of ``value`` in ``nf``, or None if it is not a square.

    The complex images of a root are fixed up to one sign per conjugate pair of
    embeddings; each sign pattern is interpolated back to the power basis,
    rationalised and verified exactly.

    Args:
        nf: Totally imaginary number field.
        value: Rational integer or field element.
        prec_bits: Working precision for the interpolation.

    Returns:
        y with y * y == value, or None.
    """
    target = value if isinstance(value, FieldElem) else nf.element([value])
    if target.is_zero():
        return nf.zero()
    n = nf.degree
    with mpmath.workprec(prec_bits):
        roots = nf.complex_roots(prec_bits)
        upper = [r for r in roots if r.imag > 0]
        if 2 * len(upper) != n:
            raise PreconditionError(f"{nf} is not totally imaginary")
        upper.sort(key=lambda r: (float(r.real), float(r.imag)))
        images = [mpmath.sqrt(target.embed(r)) for r in upper]
        points = upper + [mpmath.conj(r) for r in upper]
        vandermonde = mpmath.matrix([[p ** k for k in range(n)] for p in points])
        for signs in product((1, -1), repeat=len(upper) - 1):
            signs = (1,) + signs
            vals = [s * v for s, v in zip(signs, images)]
            rhs = mpmath.matrix(vals + [mpmath.conj(v) for v in vals])
            sol = mpmath.lu_solve(vandermonde, rhs)
            coords = []
            for k in range(n):
                c = sol[k]
                if abs(c.imag) > mpmath.mpf(2) ** (-prec_bits // 3):
                    break
                coords.append(mpf_to_fraction(c.real).limit_denominator(10 ** 12))
            else:
                candidate = nf.element(coords)
                if candidate * candidate == target:
                    return candidate
    return None


@lru_cache(maxsize=32)
def omega(nf: NumberField) -> FieldElem:
    """(1 + sqrt(-q)) / 2 in ``nf``, with the sign of sqrt(-q) fixed by the first upper-half-plane root."""
    s = sqrt_in_field(nf, -nf.q)
    if s is None:
        raise VerificationError(f"sqrt(-{nf.q}) not found in {nf}", witness={"poly": list(nf.poly)})
    return (s + 1) / 2


def _squarefree_mod_2(p: Poly) -> bool:
    return p.is_sqf and Poly(p.as_expr(), p.gens[0], modulus=2).is_sqf


def _integral_basis(g: Poly) -> List[List[Fraction]]:
    """Ring of integers of Q[x]/(g) as coordinate vectors over the power basis.

    Raises:
        VerificationError: If the index over Z[x]/(g) is not an integer whose square divides disc(g).
    """
    from sympy.polys.numberfields.basis import round_two

    g = Poly(g.as_expr(), x, domain=ZZ)
    ZK, _ = round_two(g)
    matrix = ZK.matrix.to_Matrix()
    denom = int(ZK.denom)
    n = g.degree()
    index = Fraction(denom ** n, abs(int(matrix.det())))
    disc = int(g.discriminant())
    if index.denominator != 1 or disc % (index.numerator ** 2):
        raise VerificationError(
            f"Integral basis of {g.as_expr()} has index {index}, incompatible with disc {disc}",
            witness={"index": str(index), "disc": disc},
        )
    return [[Fraction(int(matrix[i, j]), denom) for i in range(n)] for j in range(n)]


def _lll_reduce(nf_poly: Poly, basis: List[List[Fraction]], prec_bits: int, scale_bits: int = 40) -> List[List[Fraction]]:
    """LLL-reduce ``basis`` for the T2 norm sum |sigma(b)|^2 over complex embeddings."""
    n = nf_poly.degree()
    coeffs = tuple(int(c) for c in nf_poly.all_coeffs())
    with mpmath.workprec(prec_bits):
        real, upper = split_places(_complex_roots(coeffs, prec_bits), prec_bits)
        rows = []
        scale = mpmath.mpf(2) ** scale_bits
        for b in basis:
            vec = []
            for r in real + upper:
                value = mpmath.mpc(0)
                for c in reversed(b):
                    value = value * r + mpmath.mpf(c.numerator) / c.denominator
                if r in upper:
                    vec += [mpmath.sqrt(2) * value.real, mpmath.sqrt(2) * value.imag]
                else:
                    vec.append(value.real)
            rows.append([int(mpmath.nint(v * scale)) for v in vec])
    width = len(rows[0])
    if width != n:
        raise ConstructionError(f"Embedding matrix has {width} columns for degree {n}")
    _, transform = DomainMatrix([[ZZ(v) for v in row] for row in rows], (n, n), ZZ).lll_transform()
    T = transform.to_Matrix()
    reduced = []
    for i in range(n):
        vec = [Fraction(0)] * n
        for j in range(n):
            t = int(T[i, j])
            if t:
                for k in range(n):
                    vec[k] += t * basis[j][k]
        reduced.append(vec)
    return reduced


def _reduced_generator(hcp: HilbertClassPoly) -> Poly:
    """A defining polynomial of Q(j) with small coefficients that is squarefree mod 2."""
    H = Poly(list(hcp.coeffs), x, domain=QQ)
    basis = _lll_reduce(H, _integral_basis(H), 2 * hcp.prec_bits + 64)
    n = H.degree()
    candidates = list(basis)
    for i, j in combinations(range(n), 2):
        candidates.append([a + b for a, b in zip(basis[i], basis[j])])
        candidates.append([a - b for a, b in zip(basis[i], basis[j])])
    best = None
    for vec in candidates:
        elem = Poly([Rational(c.numerator, c.denominator) for c in reversed(vec)], x, domain=QQ)
        g = Poly(resultant(H.as_expr(), y - elem.as_expr(), x), y, domain=QQ)
        if not all(c.is_integer for c in g.all_coeffs()):
            continue
        g = Poly(g.as_expr().subs(y, x), x, domain=ZZ)
        if g.degree() != n or not _squarefree_mod_2(g):
            continue
        size = max(abs(int(c)) for c in g.all_coeffs())
        if best is None or size < best[0]:
            best = (size, g)
    if best is None:
        raise ConstructionError(f"No reduced generator of Q(j) for q = {hcp.q} is squarefree mod 2")
    logger.debug(f"Reduced generator of Q(j) for q = {hcp.q}: {best[1].as_expr()}")
    return best[1]


def build_H(hcp: HilbertClassPoly, q: int, generator: str = "reduced") -> NumberField:
    """Defining polynomial of the Hilbert class field H = K(j) of K = Q(sqrt(-q)).

    For h = 1 the field is K itself with polynomial x^2 + x + (q + 1)/4. Otherwise
    the primitive element depends on ``generator``:

    - 'reduced': a reduced generator gamma of Q(j) is found from an LLL-reduced
      integral basis and gamma + k*omega, omega = (1 + sqrt(-q))/2, is used for the
      smallest k <= 32 whose minimal polynomial is squarefree over Q and mod 2.
    - 'j': j + k*sqrt(-q) for the smallest k <= 32 whose minimal polynomial is
      squarefree over Q. Its reduction mod 2 is always a square, so the result
      cannot be split 2-adically.

    The choice is recorded in ``NumberField.generator`` and ``NumberField.shift``.

    Args:
        hcp: Hilbert class polynomial of discriminant -q.
        q: The prime q.
        generator: 'reduced' or 'j'.

    Returns:
        NumberField of degree 2h.

    Raises:
        ConstructionError: If no k <= 32 gives a usable polynomial.
    """
    check_prime_q(q)
    if hcp.q != q:
        raise PreconditionError(f"Class polynomial is for q = {hcp.q}, not {q}")
    if generator not in GENERATORS:
        raise PreconditionError(f"Unknown generator {generator!r}; choose from {', '.join(GENERATORS)}")
    if hcp.h == 1:
        return NumberField((1, 1, (q + 1) // 4), q, 1, label="omega - 1", generator="omega - 1")
    if generator == "j":
        return _build_H_from_j(hcp, q)
    G = _reduced_generator(hcp)
    c = Rational(q + 1, 4)
    for k in range(1, MAX_SHIFT + 1):
        t = y - x
        g = Poly(resultant(G.as_expr(), t ** 2 - k * t + k ** 2 * c, x), y, domain=QQ)
        if not all(coef.is_integer for coef in g.all_coeffs()):
            continue
        g = Poly(g.as_expr().subs(y, x), x, domain=ZZ)
        if g.degree() == 2 * hcp.h and _squarefree_mod_2(g):
            poly = tuple(int(coef) for coef in g.all_coeffs())
            logger.info(f"H for q = {q}: gamma + {k}*omega with gamma a root of {G.as_expr()}")
            return NumberField(
                poly, q, hcp.h, label=f"gamma + {k}*omega; gamma: {G.as_expr()}", generator="gamma + k*omega", shift=k
            )
    raise ConstructionError(f"No k <= {MAX_SHIFT} yields a polynomial squarefree mod 2 for q = {q}")


def _build_H_from_j(hcp: HilbertClassPoly, q: int) -> NumberField:
    H = Poly(list(hcp.coeffs), x, domain=ZZ)
    for k in range(1, MAX_SHIFT + 1):
        # (alpha - j)^2 = -q k^2
        g = Poly(resultant(H.as_expr(), (y - x) ** 2 + q * k ** 2, x), y, domain=ZZ)
        if g.LC() < 0:
            g = -g
        if g.degree() == 2 * hcp.h and g.is_sqf:
            poly = tuple(int(coef) for coef in g.all_coeffs())
            logger.info(f"H for q = {q}: j + {k}*sqrt(-{q})")
            return NumberField(poly, q, hcp.h, label=f"j + {k}*sqrt(-{q})", generator="j + k*sqrt(-q)", shift=k)
    raise ConstructionError(f"No k <= {MAX_SHIFT} makes j + k*sqrt(-{q}) primitive for q = {q}")


@dataclass
class LocalFactor:
    """One 2-adic factor of the defining polynomial with the embeddings it carries."""

    residue: Tuple[int, ...]
    coeffs: Tuple[int, ...]
    roots: List[Local2]
    above: str

    @property
    def degree(self) -> int:
        return len(self.residue) - 1


@dataclass
class TwoAdicSplitting:
    """Factorisation of the defining polynomial over Z_2 modulo 2^N.

    Attributes:
        ring: Unramified extension of degree f containing all roots.
        factors: Hensel-lifted factors, each labelled 'p' or 'p*'.
        N: Working precision.
    """

    ring: Local2Ring
    factors: List[LocalFactor]
    N: int

    @property
    def f(self) -> int:
        return self.ring.f

    @property
    def p_block(self) -> List[LocalFactor]:
        return [fac for fac in self.factors if fac.above == "p"]

    @property
    def pstar_block(self) -> List[LocalFactor]:
        return [fac for fac in self.factors if fac.above == "p*"]

    def embeddings(self, block: str = "p") -> List[Local2]:
        """Roots of the chosen block in factor order; Frobenius orbits stay contiguous."""
        chosen = self.p_block if block == "p" else self.pstar_block
        return [r for fac in chosen for r in fac.roots]

    def to_dict(self) -> Dict[str, object]:
        return {
            "local_degree": self.f,
            "N": self.N,
            "factors": [
                {"residue": list(fac.residue), "above": fac.above, "degree": fac.degree}
                for fac in self.factors
            ],
        }


def _residue_factors(poly: Sequence[int]) -> List[Tuple[Tuple[int, ...], int]]:
    _, factors = Poly(list(poly), x, modulus=2).factor_list()
    result = []
    for fac, mult in factors:
        coeffs = tuple(int(c) % 2 for c in reversed(fac.all_coeffs()))
        result.append((coeffs, mult))
    result.sort()
    return result


def split_2(nf: NumberField, N: int = 64) -> TwoAdicSplitting:
    """Split the defining polynomial of ``nf`` over the 2-adic integers.

    Args:
        nf: Number field with polynomial squarefree mod 2.
        N: 2-adic precision.

    Returns:
        TwoAdicSplitting with every factor of degree f and labelled by the prime of K below it.

    Raises:
        ConstructionError: If the polynomial is not squarefree mod 2.
        VerificationError: If local degrees differ or the blocks are unbalanced.
    """
    residues = _residue_factors(nf.poly)
    if any(mult > 1 for _, mult in residues):
        raise ConstructionError(
            f"{nf} is not squarefree mod 2 (index divisible by 2); choose another defining polynomial"
        )
    degrees = {len(res) - 1 for res, _ in residues}
    if len(degrees) != 1:
        raise VerificationError(f"Unequal local degrees {sorted(degrees)} for {nf}")
    f = degrees.pop()
    ring = Local2Ring(residues[0][0], N)
    low_first = tuple(reversed(nf.poly))
    w = omega(nf)
    factors = []
    all_roots = [hensel_root(low_first, seed, N) for seed in roots_mod_2(ring, low_first)]
    for residue, _ in residues:
        group = [r for r in all_roots if evaluate(residue, r.with_prec(1)).is_zero()]
        if len(group) != f:
            raise VerificationError(f"Factor {residue} has {len(group)} roots, expected {f}")
        group = _frobenius_order(group)
        lifted = [ring.one()]
        for r in group:
            nxt = [ring.zero()] + lifted
            for i in range(len(lifted)):
                nxt[i] = nxt[i] - r * lifted[i]
            lifted = nxt
        if any(any(c.coords[1:]) for c in lifted):
            raise VerificationError(f"Lifted factor of {residue} does not have 2-adic integer coefficients")
        above = "p" if w.to_local(group[0]).valuation() >= 1 else "p*"
        factors.append(LocalFactor(residue, tuple(c.coords[0] for c in lifted), group, above))
    p_count = sum(1 for fac in factors if fac.above == "p")
    if 2 * p_count != len(factors):
        raise VerificationError(f"Unbalanced blocks: {p_count} of {len(factors)} factors above p")
    logger.debug(f"split_2: {len(factors)} factors of degree {f} for {nf}")
    return TwoAdicSplitting(ring, factors, N)


def _frobenius_order(roots: List[Local2]) -> List[Local2]:
    """Order the roots of one factor as r, Frob(r), Frob^2(r), ..."""
    ordered = [roots[0]]
    while len(ordered) < len(roots):
        image = ordered[-1].frobenius()
        match = next((r for r in roots if r == image), None)
        if match is None:
            return roots
        ordered.append(match)
    return ordered


def has_local_root(poly: Sequence[int], ring: Local2Ring, N: int = 64) -> bool:
    """Whether the integer polynomial (leading first) has a root in ``ring`` modulo 2^N."""
    low_first = tuple(reversed(poly))
    for seed in roots_mod_2(ring, low_first):
        try:
            hensel_root(low_first, seed, N)
            return True
        except PreconditionError:
            continue
    return False
