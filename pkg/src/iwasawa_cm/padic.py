"""Finite-precision arithmetic in unramified extensions of Q_2, the 2-adic
logarithm and the 2-adic regulator."""

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache
from itertools import product
from logging import getLogger
from typing import Dict, List, Optional, Sequence, Tuple, Union

from .exceptions import PrecisionError, PreconditionError

logger = getLogger(__name__)

Scalar = Union[int, Fraction]

# Brute force over residue fields is only used for small local degrees
MAX_RESIDUE_DEGREE = 16


def v2(n: int) -> int:
    """2-adic valuation of a nonzero integer."""
    if n == 0:
        raise PreconditionError("v2(0) is undefined")
    return (n & -n).bit_length() - 1


@dataclass(frozen=True)
class Local2Ring:
    """Z_2[beta] / (modulus) truncated at 2^N, with modulus monic and irreducible mod 2.

    ``modulus`` lists coefficients lowest degree first; (0, 1) gives Z_2 itself.
    """

    modulus: Tuple[int, ...]
    N: int

    def __post_init__(self):
        if self.modulus[-1] != 1:
            raise PreconditionError(f"Modulus {self.modulus} must be monic")
        if self.N < 1:
            raise PreconditionError(f"Precision must be positive, got {self.N}")

    @classmethod
    def integers(cls, N: int) -> "Local2Ring":
        return cls((0, 1), N)

    @property
    def f(self) -> int:
        return len(self.modulus) - 1

    def element(self, coords: Sequence[int], prec: Optional[int] = None) -> "Local2":
        prec = self.N if prec is None else min(prec, self.N)
        coords = list(coords) + [0] * (self.f - len(coords))
        if len(coords) > self.f:
            coords = _reduce_poly(coords, self.modulus)
        m = 1 << prec
        return Local2(self, tuple(c % m for c in coords), prec)

    def zero(self) -> "Local2":
        return self.element([0])

    def one(self) -> "Local2":
        return self.element([1])

    def gen(self) -> "Local2":
        """The class of beta."""
        if self.f == 1:
            return self.element([-self.modulus[0]])
        return self.element([0, 1])

    def coerce(self, value: Union[Scalar, "Local2"]) -> "Local2":
        """Map an integer, a rational with odd denominator, or an element into this ring."""
        if isinstance(value, Local2):
            if value.ring != self:
                raise PreconditionError("Cannot mix elements of different local rings")
            return value
        value = Fraction(value)
        if value.denominator % 2 == 0:
            raise PreconditionError(
                f"{value} has an even denominator and is not a 2-adic integer"
            )
        m = 1 << self.N
        return self.element([value.numerator * pow(value.denominator, -1, m)])

    def residues(self):
        """All elements with coordinates in {0, 1}, i.e. representatives of the residue field."""
        if self.f > MAX_RESIDUE_DEGREE:
            raise PreconditionError(
                f"Residue field of degree {self.f} is too large for enumeration"
            )
        for bits in product((0, 1), repeat=self.f):
            yield self.element(bits, prec=1)

    @cached_property
    def frobenius_image(self) -> "Local2":
        """Frobenius of beta: the root of the modulus congruent to beta^2."""
        beta = self.gen()
        if self.f == 1:
            return beta
        return hensel_root(self.modulus, beta * beta, self.N)


def _reduce_poly(coords: List[int], modulus: Sequence[int]) -> List[int]:
    """Reduce an integer polynomial (low-first) modulo a monic modulus."""
    f = len(modulus) - 1
    coords = list(coords)
    for d in range(len(coords) - 1, f - 1, -1):
        c = coords[d]
        if c:
            for i in range(f + 1):
                coords[d - f + i] -= c * modulus[i]
    return coords[:f]


@dataclass(frozen=True)
class Local2:
    """Element of a Local2Ring known modulo 2^prec."""

    ring: Local2Ring
    coords: Tuple[int, ...]
    prec: int

    def _check(self, other: "Local2") -> "Local2":
        if not isinstance(other, Local2):
            other = self.ring.coerce(other)
        if other.ring != self.ring:
            raise PreconditionError("Cannot mix elements of different local rings")
        return other

    def __add__(self, other):
        other = self._check(other)
        return self.ring.element(
            [a + b for a, b in zip(self.coords, other.coords)], min(self.prec, other.prec)
        )

    __radd__ = __add__

    def __neg__(self):
        return self.ring.element([-a for a in self.coords], self.prec)

    def __sub__(self, other):
        return self + (-self._check(other))

    def __rsub__(self, other):
        return self._check(other) - self

    def __mul__(self, other):
        other = self._check(other)
        prec = min(self.prec, other.prec)
        f = self.ring.f
        prod = [0] * (2 * f - 1)
        for i, a in enumerate(self.coords):
            if a:
                for j, b in enumerate(other.coords):
                    prod[i + j] += a * b
        return self.ring.element(_reduce_poly(prod, self.ring.modulus), prec)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "Local2":
        if n < 0:
            return self.inverse() ** (-n)
        result = self.ring.element([1], self.prec)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def __eq__(self, other) -> bool:
        if not isinstance(other, (Local2, int, Fraction)):
            return NotImplemented
        return (self - other).is_zero()

    def is_zero(self) -> bool:
        return all(c == 0 for c in self.coords)

    def valuation(self) -> int:
        """Minimal coordinate valuation; equals ``prec`` when the element is zero at its precision."""
        vals = [v2(c) for c in self.coords if c]
        return min(vals) if vals else self.prec

    def is_unit(self) -> bool:
        return any(c % 2 for c in self.coords)

    def residue(self) -> Tuple[int, ...]:
        return tuple(c & 1 for c in self.coords)

    def with_prec(self, prec: int) -> "Local2":
        return self.ring.element(self.coords, min(prec, self.prec))

    def shift_down(self, k: int) -> "Local2":
        """Exact division by 2^k; precision drops by k."""
        if k == 0:
            return self
        if any(c % (1 << k) for c in self.coords):
            raise PrecisionError(f"Element is not divisible by 2^{k}", worst=self.valuation())
        if k >= self.prec:
            raise PrecisionError(f"Dividing by 2^{k} exhausts precision {self.prec}")
        return self.ring.element([c >> k for c in self.coords], self.prec - k)

    def inverse(self) -> "Local2":
        """Inverse of a unit by Newton iteration from the residue-field inverse."""
        if not self.is_unit():
            raise PreconditionError("Only units are invertible; use division for non-units")
        f = self.ring.f
        y = self.with_prec(1) ** ((1 << f) - 2)
        known = 1
        while known < self.prec:
            known = min(2 * known, self.prec)
            x = self.with_prec(known)
            y = y.ring.element(y.coords, known)
            y = y * (2 - x * y)
        return y.with_prec(self.prec)

    def __truediv__(self, other) -> "Local2":
        other = self._check(other)
        k = other.valuation()
        if other.is_zero():
            raise ZeroDivisionError("Division by an element that is zero at its precision")
        num = self.shift_down(k) if k else self
        den = other.shift_down(k) if k else other
        return num * den.inverse()

    def frobenius(self) -> "Local2":
        """Arithmetic Frobenius (lift of x -> x^2 on the residue field)."""
        image = self.ring.frobenius_image
        result = self.ring.element([0], self.prec)
        power_ = self.ring.element([1], self.prec)
        for c in self.coords:
            if c:
                result = result + power_ * c
            power_ = power_ * image
        return result

    def to_int(self) -> int:
        """Coordinate 0 as a signed representative, requiring the element to lie in Z_2."""
        if any(self.coords[1:]):
            raise PreconditionError(f"{self} does not lie in Z_2")
        c = self.coords[0]
        m = 1 << self.prec
        return c - m if c >= m // 2 else c

    def digits(self, count: Optional[int] = None) -> List[int]:
        """2-adic digits of coordinate 0, least significant first."""
        count = self.prec if count is None else min(count, self.prec)
        c = self.coords[0]
        return [(c >> i) & 1 for i in range(count)]

    def __repr__(self) -> str:
        return f"Local2({list(self.coords)} + O(2^{self.prec}))"


def evaluate(coeffs: Sequence[Union[Scalar, Local2]], point: Local2) -> Local2:
    """Horner evaluation of a polynomial with low-first coefficients."""
    ring = point.ring
    result = ring.element([0], point.prec)
    for c in reversed(coeffs):
        result = result * point + ring.coerce(c)
    return result


def derivative(coeffs: Sequence[Union[Scalar, Local2]]) -> List[Union[Scalar, Local2]]:
    return [c * i for i, c in enumerate(coeffs)][1:]


def hensel_root(
    poly: Sequence[Union[Scalar, Local2]], seed: Local2, N: Optional[int] = None
) -> Local2:
    """Lift a simple root mod 2 of ``poly`` to a root modulo 2^N.

    Args:
        poly: Coefficients lowest degree first (integers, odd-denominator rationals
            or elements of ``seed.ring``).
        seed: Element whose residue is a simple root of ``poly`` mod 2.
        N: Target precision; defaults to the ring precision.

    Returns:
        Root r with poly(r) = 0 mod 2^N.

    Raises:
        PreconditionError: If the seed is not a simple root mod 2.
        PrecisionError: If the lift fails to verify.
    """
    ring = seed.ring
    N = ring.N if N is None else min(N, ring.N)
    dpoly = derivative(poly)
    r = ring.element(seed.residue(), 1)
    if not evaluate(poly, r).is_zero():
        raise PreconditionError(f"Seed {seed.residue()} is not a root mod 2")
    if not evaluate(dpoly, r).is_unit():
        raise PreconditionError(f"Seed {seed.residue()} is not a simple root mod 2")
    known = 1
    while known < N:
        known = min(2 * known, N)
        r = ring.element(r.coords, known)
        r = r - evaluate(poly, r) * evaluate(dpoly, r).inverse()
    if not evaluate(poly, r).is_zero():
        raise PrecisionError("Hensel lift did not converge", worst=evaluate(poly, r).valuation())
    return r


def roots_mod_2(ring: Local2Ring, poly: Sequence[Scalar]) -> List[Local2]:
    """Residue-field roots (as precision-1 elements) of an integer polynomial."""
    return [x for x in ring.residues() if evaluate(poly, x).is_zero()]


@lru_cache(maxsize=None)
def iota_omega(q: int, N: int = 64) -> Local2:
    """Image of omega = (1 + sqrt(-q)) / 2 under the embedding K -> Q_2 with omega = 0 mod 2.

    This is the embedding at the prime p = (2, omega); the other root of
    x^2 - x + (q + 1)/4 is the image at p*.
    """
    if q % 8 != 7:
        raise PreconditionError(f"2 splits in Q(sqrt(-{q})) only for q = 7 mod 8")
    ring = Local2Ring.integers(N)
    return hensel_root([(q + 1) // 4, -1, 1], ring.zero(), N)


def iota_sqrt(q: int, N: int = 64) -> Local2:
    """Image of sqrt(-q) at p, i.e. 2 iota(omega) - 1."""
    return iota_omega(q, N) * 2 - 1


def log2(u: Local2, N: Optional[int] = None) -> Local2:
    """2-adic logarithm of a unit, normalised so that log(zeta) = 0 for roots of unity.

    With m = 2^f - 1, v = u^m is a principal unit and w = v^2 satisfies
    w = 1 mod 4, where the series converges with a controlled loss. The result
    is log(w) / (2m).

    Args:
        u: Unit of a Local2Ring.
        N: Optional cap on the output precision.

    Returns:
        log(u) with its tracked precision (at least ``u.prec - log2(u.prec) - 2``).

    Raises:
        PreconditionError: If ``u`` is not a unit.
    """
    if not u.is_unit():
        raise PreconditionError("log2 is defined here only on units")
    W = u.prec
    m = (1 << u.ring.f) - 1
    w = (u ** m) ** 2
    z = w - 1
    if z.is_zero():
        return u.ring.element([0], W - 1 if N is None else min(N, W - 1))
    total = u.ring.element([0], W)
    term = u.ring.element([1], W)
    max_shift = 0
    k = 1
    # z^k / k has valuation >= 2k - log2(k), which increases with k
    while 2 * k - (k.bit_length() - 1) < W:
        term = term * z
        e = v2(k)
        odd = k >> e
        piece = term.shift_down(e) if e else term
        piece = piece * pow(odd, -1, 1 << W)
        total = total + piece if k % 2 else total - piece
        max_shift = max(max_shift, e)
        k += 1
    total = total.with_prec(W - max_shift)
    result = total.shift_down(1) * pow(m, -1, 1 << W)
    if N is not None:
        result = result.with_prec(N)
    return result


@dataclass
class RegulatorResult:
    """2-adic regulator over the embeddings above the distinguished prime.

    Attributes:
        matrix: The square matrix whose determinant is taken: the logarithms with the
            dropped column removed, or bordered by a row of ones.
        det: Determinant of ``matrix``.
        ord2: 2-adic valuation of ``det``.
        choices: Labels describing the convention, dropped embedding and ordering.
        logs: All h - 1 by h logarithms before any column is dropped.
    """

    matrix: List[List[Local2]]
    det: Local2
    ord2: int
    choices: Dict[str, object] = field(default_factory=dict)
    logs: List[List[Local2]] = field(default_factory=list)

    def digits(self, count: Optional[int] = None) -> List[int]:
        return self.det.digits(count)

    def exponents(self, count: Optional[int] = None) -> List[int]:
        """Powers of 2 with a nonzero digit, as in 2^2 + 2^4 + ..."""
        return [i for i, d in enumerate(self.digits(count)) if d]

    def to_dict(self) -> dict:
        return {
            "ord2": self.ord2,
            "prec": self.det.prec,
            "exponents": self.exponents(),
            "choices": self.choices,
        }


def determinant(matrix: List[List[Local2]]) -> Local2:
    """Determinant by elimination with full minimal-valuation pivoting."""
    n = len(matrix)
    if n == 0:
        raise PreconditionError("determinant of an empty matrix needs a ring; handle r = 0 separately")
    a = [list(row) for row in matrix]
    ring = a[0][0].ring
    det = ring.element([1])
    sign = 1
    for k in range(n):
        best = None
        for i in range(k, n):
            for j in range(k, n):
                if a[i][j].is_zero():
                    continue
                if best is None or a[i][j].valuation() < a[best[0]][best[1]].valuation():
                    best = (i, j)
        if best is None:
            raise PrecisionError(
                "Matrix is singular at working precision; increase N",
                worst=min(x.prec for row in a for x in row),
            )
        i, j = best
        if i != k:
            a[k], a[i] = a[i], a[k]
            sign = -sign
        if j != k:
            for row in a:
                row[k], row[j] = row[j], row[k]
            sign = -sign
        pivot = a[k][k]
        det = det * pivot
        for i in range(k + 1, n):
            if a[i][k].is_zero():
                continue
            factor = a[i][k] / pivot
            for j in range(k, n):
                a[i][j] = a[i][j] - factor * a[k][j]
    return det if sign > 0 else -det


def regulator_2adic(
    embeddings: Sequence[Sequence[Local2]],
    convention: str = "drop",
    drop: int = -1,
    ring: Optional[Local2Ring] = None,
    labels: Optional[Sequence[str]] = None,
) -> RegulatorResult:
    """2-adic regulator from unit images under the embeddings above the distinguished prime.

    Args:
        embeddings: ``embeddings[i][j]`` is the image of unit i under embedding j
            (h embeddings, h - 1 units).
        convention: 'drop' removes column ``drop``; 'bordered' appends a row of ones
            and keeps all h columns (equal to +-h times any drop minor).
        drop: Column removed for the 'drop' convention.
        ring: Ring used for r = 0 (no units).
        labels: Embedding labels recorded in the result.

    Returns:
        RegulatorResult with the determinant and its valuation.

    Raises:
        PrecisionError: If the determinant vanishes at the working precision.
    """
    if convention not in ("drop", "bordered"):
        raise PreconditionError(f"Unknown regulator convention {convention!r}")
    r = len(embeddings)
    if r == 0:
        ring = ring or Local2Ring.integers(64)
        det = ring.one()
        return RegulatorResult([], det, 0, {"convention": convention, "units": 0})
    h = len(embeddings[0])
    if h != r + 1:
        raise PreconditionError(f"Need h - 1 = {h - 1} units for {h} embeddings, got {r}")
    logs = [[log2(x) for x in row] for row in embeddings]
    if convention == "drop":
        drop = drop % h
        matrix = [[row[j] for j in range(h) if j != drop] for row in logs]
    else:
        ones = [logs[0][0].ring.element([1], logs[0][0].prec) for _ in range(h)]
        matrix = [list(row) for row in logs] + [ones]
    det = determinant(matrix)
    if det.is_zero():
        raise PrecisionError(
            f"Regulator is 0 mod 2^{det.prec}; increase N", worst=det.prec, needed=2 * det.prec
        )
    choices = {"convention": convention, "units": r}
    if convention == "drop":
        choices["dropped"] = drop
    if labels is not None:
        choices["embeddings"] = list(labels)
    logger.debug(f"2-adic regulator: ord2 = {det.valuation()} at precision {det.prec}")
    return RegulatorResult(matrix, det, det.valuation(), choices, logs)


def regulator_variants(
    embeddings: Sequence[Sequence[Local2]],
    ring: Optional[Local2Ring] = None,
    labels: Optional[Sequence[str]] = None,
) -> List[RegulatorResult]:
    """The 'drop' regulator for every choice of dropped embedding.

    Reordering embeddings or units only flips the sign, so together with
    ``matches_expansion`` this covers the finite set of legal choices.
    """
    if not embeddings:
        return [regulator_2adic(embeddings, ring=ring, labels=labels)]
    h = len(embeddings[0])
    return [regulator_2adic(embeddings, "drop", j, ring, labels) for j in range(h)]


def matches_expansion(value: Local2, exponents: Sequence[int], bits: int) -> bool:
    """Whether ``value`` = +-(sum of 2^e) modulo 2^bits.

    Raises:
        PrecisionError: If ``value`` is known to fewer than ``bits`` bits.
    """
    if value.prec < bits:
        raise PrecisionError(
            f"Value known mod 2^{value.prec}, cannot compare mod 2^{bits}", worst=value.prec, needed=bits
        )
    target = sum(1 << e for e in exponents)
    m = 1 << bits
    if any(c % m for c in value.coords[1:]):
        return False
    c = value.coords[0] % m
    return c == target % m or c == (-target) % m
