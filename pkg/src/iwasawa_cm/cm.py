"""Class groups of Q(sqrt(-q)) via reduced binary quadratic forms, the modular
j-function and Hilbert class polynomials."""

import math
from dataclasses import dataclass
from logging import getLogger
from typing import Iterator, List, Optional, Sequence, Tuple

import mpmath
from sympy import Poly, isprime, symbols

from .cache import ArtifactCache
from .exceptions import PrecisionError, PreconditionError, VerificationError

logger = getLogger(__name__)

x = symbols("x")

# Largest rounding distance accepted for class polynomial coefficients
ROUNDING_GAP = 0.25
SAFETY_BITS = 64


def check_prime_q(q: int) -> None:
    """Raise PreconditionError unless q is a prime with q = 7 mod 8."""
    if not isinstance(q, int) or q < 7:
        raise PreconditionError(f"q must be an integer prime >= 7, got {q!r}")
    if q % 8 != 7:
        raise PreconditionError(f"q must be = 7 mod 8, got q = {q} = {q % 8} mod 8")
    if not isprime(q):
        raise PreconditionError(f"q must be prime, got {q}")


@dataclass(frozen=True)
class QuadForm:
    """Integral binary quadratic form a x^2 + b x y + c y^2."""

    a: int
    b: int
    c: int

    @property
    def discriminant(self) -> int:
        return self.b * self.b - 4 * self.a * self.c

    def normalized(self) -> "QuadForm":
        a, b, c = self.a, self.b, self.c
        if -a < b <= a:
            return self
        r = (a - b) // (2 * a)
        return QuadForm(a, b + 2 * r * a, a * r * r + b * r + c)

    def reduced(self) -> "QuadForm":
        """Reduced representative of the proper equivalence class."""
        form = self.normalized()
        a, b, c = form.a, form.b, form.c
        while a > c or (a == c and b < 0):
            s = (c + b) // (c + c)
            a, b, c = c, -b + 2 * s * c, c * s * s - b * s + a
        return QuadForm(a, b, c).normalized()

    def is_reduced(self) -> bool:
        a, b, c = self.a, self.b, self.c
        if not (abs(b) <= a <= c):
            return False
        if (abs(b) == a or a == c) and b < 0:
            return False
        return True

    def inverse(self) -> "QuadForm":
        return QuadForm(self.a, -self.b, self.c).reduced()

    def tau(self) -> mpmath.mpc:
        """CM point (-b + sqrt(D)) / (2a) in the upper half plane, at the current mpmath precision."""
        return mpmath.mpc(-self.b, mpmath.sqrt(-self.discriminant)) / (2 * self.a)

    def as_tuple(self) -> Tuple[int, int, int]:
        return (self.a, self.b, self.c)

    def __str__(self) -> str:
        return f"({self.a},{self.b},{self.c})"


def identity_form(q: int) -> QuadForm:
    return QuadForm(1, 1, (q + 1) // 4)


def compose(f1: QuadForm, f2: QuadForm) -> QuadForm:
    """Gauss composition of two forms of the same discriminant, reduced.

    Args:
        f1: First form.
        f2: Second form.

    Returns:
        The reduced form representing the product class.

    Raises:
        PreconditionError: If the discriminants differ.
    """
    disc = f1.discriminant
    if f2.discriminant != disc:
        raise PreconditionError(
            f"Cannot compose forms of discriminants {disc} and {f2.discriminant}"
        )
    if f1.a > f2.a:
        f1, f2 = f2, f1
    a1, b1 = f1.a, f1.b
    a2, b2, c2 = f2.a, f2.b, f2.c
    s = (b1 + b2) // 2
    n = b2 - s

    if a2 % a1 == 0:
        y1, d = 0, a1
    else:
        d, u, _ = _xgcd(a2, a1)
        y1 = u
    if s % d == 0:
        y2, x2, d1 = -1, 0, d
    else:
        d1, u, v = _xgcd(s, d)
        x2, y2 = u, -v

    v1 = a1 // d1
    v2 = a2 // d1
    r = (y1 * y2 * n - x2 * c2) % v1
    b3 = b2 + 2 * v2 * r
    a3 = v1 * v2
    c3 = (b3 * b3 - disc) // (4 * a3)
    return QuadForm(a3, b3, c3).reduced()


def _xgcd(a: int, b: int) -> Tuple[int, int, int]:
    """Return (g, u, v) with u*a + v*b = g = gcd(a, b) >= 0."""
    u0, v0, u1, v1 = 1, 0, 0, 1
    while b:
        t = a // b
        a, b = b, a - t * b
        u0, u1 = u1, u0 - t * u1
        v0, v1 = v1, v0 - t * v1
    if a < 0:
        return -a, -u0, -v0
    return a, u0, v0


def power(form: QuadForm, n: int) -> QuadForm:
    """n-th power of a class; negative n uses the inverse."""
    q = -form.discriminant
    if n < 0:
        form, n = form.inverse(), -n
    result = identity_form(q)
    base = form.reduced()
    while n > 0:
        if n & 1:
            result = compose(result, base)
        base = compose(base, base)
        n >>= 1
    return result


@dataclass(frozen=True)
class ClassGroup:
    """Reduced primitive forms of discriminant -q, ordered by (a, b)."""

    q: int
    forms: Tuple[QuadForm, ...]

    @property
    def h(self) -> int:
        return len(self.forms)

    @property
    def identity(self) -> QuadForm:
        return identity_form(self.q)

    def __iter__(self) -> Iterator[QuadForm]:
        return iter(self.forms)

    def __contains__(self, form: QuadForm) -> bool:
        return form.reduced() in self.forms

    def order(self, form: QuadForm) -> int:
        """Order of the class of ``form``."""
        current = form.reduced()
        k = 1
        while current != self.identity:
            current = compose(current, form)
            k += 1
            if k > self.h:
                raise VerificationError(f"Order of {form} exceeds h = {self.h}")
        return k

    def forms_with_a(self, a: int) -> List[QuadForm]:
        return [f for f in self.forms if f.a == a]


def class_group(q: int) -> ClassGroup:
    """Enumerate the class group of discriminant -q.

    Args:
        q: Prime with q = 7 mod 8.

    Returns:
        ClassGroup whose forms are all reduced primitive forms of discriminant -q,
        sorted lexicographically by (a, b).

    Raises:
        PreconditionError: If q is not a prime = 7 mod 8.
    """
    check_prime_q(q)
    forms = []
    a = 1
    while 3 * a * a <= q:
        for b in range(-a, a + 1):
            if b % 2 == 0:
                continue
            num = b * b + q
            if num % (4 * a):
                continue
            c = num // (4 * a)
            if c < a:
                continue
            if b < 0 and (-b == a or a == c):
                continue
            if math.gcd(math.gcd(a, b), c) != 1:
                continue
            forms.append(QuadForm(a, b, c))
        a += 1
    forms.sort(key=lambda f: (f.a, f.b))
    cg = ClassGroup(q, tuple(forms))
    if cg.h % 2 == 0:
        raise VerificationError(f"Class number {cg.h} of -{q} is even; enumeration is broken")
    logger.debug(f"class_group({q}): h = {cg.h}")
    return cg


def prime_above_2_order(cg: ClassGroup) -> int:
    """Order f of the class of a prime above 2, i.e. N(P) = 2^f for primes P of H above it."""
    prime_form = QuadForm(2, 1, (cg.q + 1) // 8).reduced()
    return cg.order(prime_form)


def reduce_tau(tau: mpmath.mpc, max_steps: int = 10_000) -> mpmath.mpc:
    """Move tau into the standard fundamental domain of SL2(Z)."""
    for _ in range(max_steps):
        tau = tau - mpmath.nint(tau.real)
        if abs(tau) < 1:
            tau = -1 / tau
        else:
            return tau
    raise PrecisionError(f"tau did not reduce within {max_steps} steps", worst=tau)


def j_tau(tau, prec_bits: int = 200) -> mpmath.mpc:
    """Klein's j-invariant as E4^3 / Delta with theta-constant expressions.

    Args:
        tau: Point of the upper half plane.
        prec_bits: Working precision.

    Returns:
        j(tau) as an mpmath complex number at ``prec_bits``.

    Raises:
        PreconditionError: If Im(tau) <= 0.
        PrecisionError: If tau is too close to the real axis to reduce reliably.
    """
    with mpmath.workprec(prec_bits + 16):
        tau = mpmath.mpc(tau)
        if tau.imag <= 0:
            raise PreconditionError(f"j_tau needs Im(tau) > 0, got {tau}")
        if tau.imag < mpmath.mpf(2) ** (-(prec_bits // 4)):
            raise PrecisionError(
                f"Im(tau) = {mpmath.nstr(tau.imag, 5)} too small for {prec_bits} bits",
                worst=float(tau.imag),
            )
        tau = reduce_tau(tau)
        nome = mpmath.exp(mpmath.pi * 1j * tau)
        t2 = mpmath.jtheta(2, 0, nome)
        t3 = mpmath.jtheta(3, 0, nome)
        t4 = mpmath.jtheta(4, 0, nome)
        e4 = (t2 ** 8 + t3 ** 8 + t4 ** 8) / 2
        delta = (t2 * t3 * t4 / 2) ** 8
        value = e4 ** 3 / delta
    return value


@dataclass(frozen=True)
class HilbertClassPoly:
    """Monic integer polynomial whose roots are j(tau_Q) over the reduced forms Q.

    Coefficients are stored with the leading coefficient first.
    """

    q: int
    coeffs: Tuple[int, ...]
    prec_bits: int
    worst_gap: float = 0.0
    from_cache: bool = False

    @property
    def h(self) -> int:
        return len(self.coeffs) - 1

    def as_poly(self) -> Poly:
        return Poly(list(self.coeffs), x)

    def is_irreducible(self) -> bool:
        return self.as_poly().is_irreducible

    def to_dict(self) -> dict:
        return {
            "q": self.q,
            "h": self.h,
            "coeffs": [str(c) for c in self.coeffs],
            "prec_bits": self.prec_bits,
        }

    @classmethod
    def from_dict(cls, data: dict, from_cache: bool = False) -> "HilbertClassPoly":
        coeffs = tuple(int(c) for c in data["coeffs"])
        if len(coeffs) - 1 != data["h"] or coeffs[0] != 1:
            raise PreconditionError(f"Malformed class polynomial record for q = {data['q']}")
        return cls(data["q"], coeffs, int(data["prec_bits"]), from_cache=from_cache)

    def __str__(self) -> str:
        return str(self.as_poly().as_expr())


def precision_bound(cg: ClassGroup) -> int:
    """Bits needed for the class polynomial of ``cg`` (height bound plus safety margin)."""
    height = math.pi * math.sqrt(cg.q) * sum(1.0 / f.a for f in cg.forms) / math.log(2)
    return math.ceil(height) + SAFETY_BITS


def _expand_roots(roots: Sequence[mpmath.mpc]) -> List[mpmath.mpc]:
    coeffs = [mpmath.mpc(1)]
    for r in roots:
        nxt = coeffs + [mpmath.mpc(0)]
        for i in range(1, len(nxt)):
            nxt[i] -= r * coeffs[i - 1]
        coeffs = nxt
    return coeffs


def hilbert_class_poly(
    q: int, prec_bits: Optional[int] = None, cache: Optional[ArtifactCache] = None
) -> HilbertClassPoly:
    """Hilbert class polynomial of discriminant -q.

    Args:
        q: Prime with q = 7 mod 8.
        prec_bits: Working precision; defaults to the height bound of ``precision_bound``.
        cache: Optional artifact cache; a hit with at least ``prec_bits`` bypasses evaluation.

    Returns:
        HilbertClassPoly with exact integer coefficients.

    Raises:
        PrecisionError: If some coefficient is not within 0.25 of an integer.
    """
    cg = class_group(q)
    bound = precision_bound(cg)
    bits = prec_bits if prec_bits is not None else bound
    if bits < bound:
        logger.warning(f"prec_bits = {bits} is below the height bound {bound} for q = {q}")

    key = f"q{q}"
    if cache is not None:
        record = cache.load("hcp", key)
        if record is not None and int(record["prec_bits"]) >= bits:
            logger.debug(f"Using cached class polynomial for q = {q}")
            return HilbertClassPoly.from_dict(record, from_cache=True)

    with mpmath.workprec(bits):
        roots = [j_tau(f.tau(), bits) for f in cg.forms]
        approx = _expand_roots(roots)
        coeffs = []
        worst = mpmath.mpf(0)
        for c in approx:
            nearest = int(mpmath.nint(c.real))
            gap = max(abs(c.real - nearest), abs(c.imag))
            worst = max(worst, gap)
            coeffs.append(nearest)
    worst_gap = float(worst)
    if worst_gap >= ROUNDING_GAP:
        raise PrecisionError(
            f"Class polynomial for q = {q} not integral at {bits} bits (worst gap {worst_gap:.3g})",
            worst=worst_gap,
            needed=2 * bits,
        )
    hcp = HilbertClassPoly(q, tuple(coeffs), bits, worst_gap)
    logger.info(f"Class polynomial for q = {q}: degree {hcp.h} at {bits} bits")
    if cache is not None:
        cache.store("hcp", key, hcp.to_dict())
    return hcp
