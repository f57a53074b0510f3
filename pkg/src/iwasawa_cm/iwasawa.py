"""Measures on the 2-adic integers through their Mahler series.

A measure m on Z_2 is stored as the power series sum_n (int binom(x, n) dm) w^n,
truncated at degree D, with a 2-adic precision attached to every coefficient.
The operators below act on that representation: restriction to the units and to
classes mod 4, the involution x -> -x, the Teichmueller twist, the derivation
(1 + w) d/dw, and the Gamma-transform interpolating s -> int <x>^s dm.
"""

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from logging import getLogger
from typing import Dict, List, Optional, Sequence, Tuple, Union

from sympy import I, Poly, expand, im, re, symbols
from sympy.functions.combinatorial.numbers import stirling
from sympy.polys.domains import QQ, QQ_I
from sympy.polys.ring_series import rs_mul, rs_series_inversion
from sympy.polys.rings import ring

from .exceptions import PrecisionError, PreconditionError, VerificationError
from .padic import Local2, Local2Ring, log2, v2

logger = getLogger(__name__)

T = symbols("T")

INF = math.inf
# Certification is refused below this many 2-adic digits
MIN_CERT_PREC = 16

Prec = Optional[int]


def val(c: Fraction) -> float:
    """2-adic valuation of a rational; +inf for zero."""
    if c == 0:
        return INF
    return v2(c.numerator) - v2(c.denominator)


def _as_prec(p: float) -> Prec:
    return None if p == INF else int(math.floor(p))


def _p(p: Prec) -> float:
    return INF if p is None else p


@dataclass(frozen=True)
class Series2:
    """Truncated power series in w with 2-adic precision per coefficient.

    Attributes:
        coeffs: c_0, ..., c_D as exact rationals.
        prec: For each coefficient, k when it is known modulo 2^k, None when exact.
        N: Global precision cap used for certification.
        exact_tail: True when every coefficient beyond D is exactly zero.
    """

    coeffs: Tuple[Fraction, ...]
    prec: Tuple[Prec, ...]
    N: int = 64
    exact_tail: bool = True

    def __post_init__(self):
        if len(self.coeffs) != len(self.prec):
            raise PreconditionError("coeffs and prec must have the same length")

    @classmethod
    def from_coeffs(
        cls,
        coeffs: Sequence[Union[int, Fraction]],
        D: Optional[int] = None,
        N: int = 64,
        prec: Optional[Sequence[Prec]] = None,
        exact_tail: bool = True,
    ) -> "Series2":
        coeffs = [Fraction(c) for c in coeffs]
        if D is None:
            D = len(coeffs) - 1
        if len(coeffs) > D + 1:
            coeffs = coeffs[: D + 1]
            exact_tail = False
        prec = list(prec) if prec is not None else [None] * len(coeffs)
        prec = prec[: D + 1]
        coeffs += [Fraction(0)] * (D + 1 - len(coeffs))
        prec += [None if exact_tail else 0] * (D + 1 - len(prec))
        return cls(tuple(coeffs), tuple(prec), N, exact_tail)

    @classmethod
    def one(cls, D: int, N: int = 64) -> "Series2":
        return cls.from_coeffs([1], D, N)

    @property
    def D(self) -> int:
        return len(self.coeffs) - 1

    def effective_prec(self, n: int) -> int:
        return min(_p(self.prec[n]), self.N)

    def determined(self, n: int) -> bool:
        """Whether the valuation of coefficient n is fixed at its precision."""
        c = self.coeffs[n]
        return c != 0 and val(c) < self.effective_prec(n)

    def agrees_with(self, other: "Series2", upto: Optional[int] = None) -> bool:
        """Coefficientwise equality up to the joint precision."""
        upto = min(self.D, other.D) if upto is None else upto
        for n in range(upto + 1):
            diff = self.coeffs[n] - other.coeffs[n]
            if diff and val(diff) < min(self.effective_prec(n), other.effective_prec(n)):
                return False
        return True

    def _combine(self, other: "Series2", sign: int) -> "Series2":
        D = min(self.D, other.D)
        coeffs = tuple(self.coeffs[n] + sign * other.coeffs[n] for n in range(D + 1))
        prec = tuple(_as_prec(min(_p(self.prec[n]), _p(other.prec[n]))) for n in range(D + 1))
        return Series2(coeffs, prec, min(self.N, other.N), self.exact_tail and other.exact_tail)

    def __add__(self, other: "Series2") -> "Series2":
        return self._combine(other, 1)

    def __sub__(self, other: "Series2") -> "Series2":
        return self._combine(other, -1)

    def __neg__(self) -> "Series2":
        return Series2(tuple(-c for c in self.coeffs), self.prec, self.N, self.exact_tail)

    def scale(self, c: Union[int, Fraction]) -> "Series2":
        c = Fraction(c)
        if c == 0:
            return Series2.from_coeffs([0], self.D, self.N)
        shift = val(c)
        prec = tuple(_as_prec(_p(p) + shift) for p in self.prec)
        return Series2(tuple(c * a for a in self.coeffs), prec, self.N, self.exact_tail)

    def __mul__(self, other: "Series2") -> "Series2":
        D = min(self.D, other.D)
        coeffs = []
        prec = []
        for n in range(D + 1):
            total = Fraction(0)
            p = INF
            for i in range(n + 1):
                a, b = self.coeffs[i], other.coeffs[n - i]
                total += a * b
                p = min(p, _p(self.prec[i]) + val(b), _p(other.prec[n - i]) + val(a))
            coeffs.append(total)
            prec.append(_as_prec(p))
        return Series2(tuple(coeffs), tuple(prec), min(self.N, other.N), self.exact_tail and other.exact_tail)

    def truncate(self, D: int) -> "Series2":
        if D >= self.D:
            return self
        tail_zero = self.exact_tail and all(c == 0 for c in self.coeffs[D + 1 :])
        return Series2(self.coeffs[: D + 1], self.prec[: D + 1], self.N, tail_zero)

    def with_cap(self, N: int) -> "Series2":
        return Series2(self.coeffs, self.prec, N, self.exact_tail)

    def to_dict(self) -> dict:
        return {
            "coeffs": [str(c) for c in self.coeffs],
            "prec": list(self.prec),
            "N": self.N,
        }


# Mahler transform


def binom(a: Union[int, Fraction], n: int) -> Fraction:
    """Generalised binomial coefficient a(a-1)...(a-n+1)/n!."""
    result = Fraction(1)
    for j in range(n):
        result *= Fraction(a) - j
    return result / math.factorial(n)


def mahler(moments: Sequence[Union[int, Fraction]], N: int = 64) -> Series2:
    """Series of the measure with int binom(x, n) dm = moments[n]."""
    return Series2.from_coeffs(moments, N=N, exact_tail=False)


def inverse_mahler(F: Series2) -> List[Fraction]:
    return list(F.coeffs)


def dirac(a: int, D: int, N: int = 64) -> Series2:
    """The Dirac measure at a, i.e. (1 + w)^a."""
    coeffs = [binom(a, n) for n in range(D + 1)]
    return Series2.from_coeffs(coeffs, D, N, exact_tail=0 <= a <= D)


def moment(F: Series2, s: int) -> Tuple[Fraction, float]:
    """int x^s dm and its precision, via x^s = sum_n S(s, n) n! binom(x, n)."""
    if s > F.D:
        raise PreconditionError(f"Moment {s} needs degree >= {s}, series has degree {F.D}")
    total = Fraction(0)
    p = INF
    for n in range(s + 1):
        weight = int(stirling(s, n)) * math.factorial(n)
        if weight == 0:
            continue
        total += weight * F.coeffs[n]
        p = min(p, _p(F.prec[n]) + v2(weight))
    return total, p


# Operators


def _gauss(c: Fraction, d: Fraction = Fraction(0)):
    return QQ_I(QQ(c.numerator, c.denominator), QQ(d.numerator, d.denominator))


def _frac(q) -> Fraction:
    return Fraction(int(q.numerator), int(q.denominator))


_ZETA4 = [QQ_I(1, 0), QQ_I(0, 1), QQ_I(-1, 0), QQ_I(0, -1)]
# valuation of zeta4^j - 1 in Z_2[i]
_ZETA4_SHIFT_VAL = [INF, 0.5, 1.0, 0.5]


def _compose_root_of_unity(F: Series2, j: int) -> Tuple[list, List[float]]:
    """Coefficients of F(zeta4^j (1 + w) - 1) over Q(i) and their precisions."""
    g1 = _ZETA4[j % 4]
    g0 = g1 - QQ_I(1, 0)
    nu = _ZETA4_SHIFT_VAL[j % 4]
    D = F.D
    g0_pows = [QQ_I(1, 0)]
    for _ in range(D):
        g0_pows.append(g0_pows[-1] * g0)
    coeffs = []
    precs = []
    g1_pow = QQ_I(1, 0)
    for k in range(D + 1):
        total = QQ_I(0, 0)
        p = INF
        for n in range(k, D + 1):
            c = F.coeffs[n]
            if c != 0 and (n == k or nu != INF):
                total += _gauss(c) * math.comb(n, k) * g0_pows[n - k] * g1_pow
            p = min(p, _p(F.prec[n]) + (0 if n == k else (n - k) * nu))
        if not F.exact_tail:
            p = min(p, (D + 1 - k) * nu)
        coeffs.append(total)
        precs.append(p)
        g1_pow = g1_pow * g1
    return coeffs, precs


def _check_integral(coeffs: Sequence[Fraction], prec: Sequence[Prec], what: str) -> None:
    for n, (c, p) in enumerate(zip(coeffs, prec)):
        if c != 0 and val(c) < 0 and val(c) < _p(p):
            raise PrecisionError(
                f"{what}: coefficient {n} = {c} is not 2-integral within precision {p}", worst=n
            )


def restrict_units(F: Series2) -> Series2:
    """(F(w) - F(-2 - w)) / 2: the measure restricted to Z_2^x."""
    comp, cprec = _compose_root_of_unity(F, 2)
    coeffs = []
    prec = []
    for k in range(F.D + 1):
        coeffs.append((F.coeffs[k] - _frac(comp[k].x)) / 2)
        prec.append(_as_prec(min(_p(F.prec[k]), cprec[k]) - 1))
    _check_integral(coeffs, prec, "restrict_units")
    return Series2(tuple(coeffs), tuple(prec), F.N, F.exact_tail)


def involution(F: Series2) -> Series2:
    """(F o (-1))(w) = F((1 + w)^(-1) - 1): the pushforward under x -> -x."""
    coeffs = [F.coeffs[0]]
    prec = [F.prec[0]]
    for k in range(1, F.D + 1):
        total = sum((math.comb(k - 1, n - 1) * F.coeffs[n] for n in range(1, k + 1)), Fraction(0))
        coeffs.append(total if k % 2 == 0 else -total)
        prec.append(_as_prec(min(_p(F.prec[n]) for n in range(1, k + 1))))
    constant = all(c == 0 for c in F.coeffs[1:]) and F.exact_tail
    return Series2(tuple(coeffs), tuple(prec), F.N, constant)


def _real_part(coeffs: list, precs: Sequence[float], scale: Fraction, loss: int, what: str) -> Tuple[list, list]:
    out = []
    prec = []
    for c, p in zip(coeffs, precs):
        real, imag = _frac(c.x) * scale, _frac(c.y) * scale
        p_out = p - loss
        if imag != 0 and val(imag) < p_out:
            raise PrecisionError(f"{what}: imaginary part {imag} above precision {p_out}")
        out.append(real)
        prec.append(_as_prec(p_out))
    return out, prec


def restrict_class(F: Series2, a: int) -> Series2:
    """The measure restricted to a + 4Z_2, via 1_{a+4Z_2}(x) = (1/4) sum_j zeta4^(j(x - a))."""
    total = None
    precs = [INF] * (F.D + 1)
    for j in range(4):
        comp, cprec = _compose_root_of_unity(F, j)
        weight = _ZETA4[(-j * a) % 4]
        terms = [c * weight for c in comp]
        total = terms if total is None else [t + s for t, s in zip(total, terms)]
        precs = [min(p, cp) for p, cp in zip(precs, cprec)]
    coeffs, prec = _real_part(total, precs, Fraction(1, 4), 2, "restrict_class")
    _check_integral(coeffs, prec, "restrict_class")
    return Series2(tuple(coeffs), tuple(prec), F.N, F.exact_tail)


def teichmueller_twist(F: Series2) -> Series2:
    """omega^(-1) * F, omega(x) = +-1 by x mod 4; equals (class 1 part) - (class 3 part)."""
    # (1/4) sum_j (i^(-j) - i^(-3j)) F_j collapses to (i/2)(F_3 - F_1)
    comp1, prec1 = _compose_root_of_unity(F, 1)
    comp3, prec3 = _compose_root_of_unity(F, 3)
    diff = [(c3 - c1) * QQ_I(0, 1) for c1, c3 in zip(comp1, comp3)]
    precs = [min(p1, p3) for p1, p3 in zip(prec1, prec3)]
    coeffs, prec = _real_part(diff, precs, Fraction(1, 2), 1, "teichmueller_twist")
    _check_integral(coeffs, prec, "teichmueller_twist")
    return Series2(tuple(coeffs), tuple(prec), F.N, F.exact_tail)


def derivation(F: Series2) -> Series2:
    """(1 + w) dF/dw, the series of the measure x dm(x)."""
    D = F.D
    coeffs = []
    prec = []
    for k in range(D + 1):
        if k < D:
            c = (k + 1) * F.coeffs[k + 1] + k * F.coeffs[k]
            p = min(_p(F.prec[k + 1]) + v2(k + 1), _p(F.prec[k]) + (v2(k) if k else INF))
        else:
            c = k * F.coeffs[k]
            p = _p(F.prec[k]) + v2(k) if k else _p(F.prec[k])
            if not F.exact_tail:
                p = min(p, v2(k + 1))
        coeffs.append(c)
        prec.append(_as_prec(p))
    return Series2(tuple(coeffs), tuple(prec), F.N, F.exact_tail)


# Invariants


@dataclass(frozen=True)
class MuLambda:
    """mu and lambda invariants of a series; ``lambda_`` because lambda is reserved.

    ``window`` is the last degree the certificate covers; None means the whole series.
    """

    mu: Optional[int]
    lambda_: Optional[int]
    certified: bool
    window: Optional[int] = None

    def to_dict(self) -> dict:
        return {"mu": self.mu, "lambda": self.lambda_, "certified": self.certified, "window": self.window}


def mu_lambda(F: Series2, upto: Optional[int] = None) -> MuLambda:
    """mu = minimal coefficient valuation, lambda = first index attaining it.

    Only coefficients of degree <= ``upto`` (default: all) are considered.
    Certified when a coefficient of valuation mu is determined, every earlier
    coefficient is known to exceed mu, no undetermined coefficient could fall
    below mu, and the precision cap is at least MIN_CERT_PREC.

    Raises:
        PrecisionError: If no coefficient is determined at the working precision.
    """
    upto = F.D if upto is None else min(upto, F.D)
    determined = [n for n in range(upto + 1) if F.determined(n)]
    if not determined:
        raise PrecisionError("Series vanishes at working precision; mu is not determined")
    mu = min(int(val(F.coeffs[n])) for n in determined)
    lam = min(n for n in determined if val(F.coeffs[n]) == mu)
    certified = F.N >= MIN_CERT_PREC
    for n in range(upto + 1):
        if F.determined(n):
            continue
        if F.effective_prec(n) < mu or (n < lam and F.effective_prec(n) <= mu):
            certified = False
            break
    return MuLambda(mu, lam, certified, upto)


def certified_mu_lambda(F: Series2) -> MuLambda:
    """mu and lambda on the longest leading window of degrees that certifies.

    Interpolated series lose precision towards their top degree; the invariants
    are read from the coefficients that are still known well enough.

    Raises:
        PrecisionError: If not even the constant term certifies.
    """
    for upto in range(F.D, -1, -1):
        try:
            result = mu_lambda(F, upto)
        except PrecisionError:
            continue
        # a known coefficient past the window must not undercut its mu
        below = any(F.determined(n) and val(F.coeffs[n]) < result.mu for n in range(upto + 1, F.D + 1))
        if result.certified and not below:
            return result
    raise PrecisionError(f"mu is not certified on any leading window of degree <= {F.D}")


# Gamma-transform


def gamma_transform(
    F: Series2,
    u: int = 5,
    D: Optional[int] = None,
    N: Optional[int] = None,
    twisted: Optional[Series2] = None,
) -> Series2:
    """The series G with G(u^s - 1) = int_{Z_2^x} <x>^s dm_F for all s.

    Values at s = 0..D come from the moments of F (even s) and of its
    Teichmueller twist (odd s); G is their Newton interpolant on the nodes
    u^s - 1. The result is re-evaluated at s = D+1 .. D + ceil(D/2).

    Args:
        F: Series of a measure supported on the units, of degree >= 3D/2.
        u: Topological generator of 1 + 4Z_2 (u = 5 mod 8).
        D: Output degree; defaults to floor(2 deg F / 3).
        N: Precision cap; defaults to F.N.
        twisted: The twist of F if already known exactly.

    Returns:
        Series2 of degree D, coefficient n known modulo 2^min(N, 2(D + 1 - n)).

    Raises:
        PreconditionError: If u is not = 5 mod 8 or F has too small a degree.
        PrecisionError: If a held-out value disagrees beyond the precision budget.
    """
    if u % 8 != 5:
        raise PreconditionError(f"u = {u} does not generate 1 + 4Z_2")
    N = F.N if N is None else N
    D = (2 * F.D) // 3 if D is None else D
    extra = (D + 1) // 2
    if F.D < D + extra:
        raise PreconditionError(f"Need series degree >= {D + extra} for output degree {D}, got {F.D}")
    twist = teichmueller_twist(F) if twisted is None else twisted
    values = []
    value_prec = INF
    for s in range(D + extra + 1):
        value, p = moment(F if s % 2 == 0 else twist, s)
        values.append(value)
        if s <= D:
            value_prec = min(value_prec, p)
    nodes = [u ** s - 1 for s in range(D + extra + 1)]

    dd = [Fraction(v) for v in values[: D + 1]]
    for j in range(1, D + 1):
        for i in range(D, j - 1, -1):
            dd[i] = (dd[i] - dd[i - 1]) / (nodes[i] - nodes[i - j])
    poly = [dd[D]]
    for k in range(D - 1, -1, -1):
        shifted = [Fraction(0)] + poly
        for i in range(len(poly)):
            shifted[i] -= nodes[k] * poly[i]
        shifted[0] += dd[k]
        poly = shifted

    loss = 2 * D + v2(math.factorial(D)) if D else 0
    input_bound = value_prec - loss
    prec = [_as_prec(min(N, 2 * (D + 1 - n), input_bound)) for n in range(D + 1)]

    threshold = min(N, 2 * (D + 1), input_bound)
    for s in range(D + 1, D + extra + 1):
        at = Fraction(0)
        for c in reversed(poly):
            at = at * nodes[s] + c
        residual = values[s] - at
        if residual != 0 and val(residual) < threshold:
            raise PrecisionError(
                f"Gamma-transform residual at s = {s} has valuation {val(residual)} < {threshold}",
                worst=val(residual),
            )
    logger.debug(f"gamma_transform: degree {D}, certified at {extra} held-out points")
    return Series2(tuple(poly), tuple(prec), N, False)


def binomial_series(t: Local2, D: int) -> Series2:
    """(1 + w)^t for a 2-adic integer t, coefficients binom(t, n) with tracked precision."""
    ring = t.ring
    coeffs = []
    prec = []
    numerator = ring.element([1], t.prec)
    for n in range(D + 1):
        if n:
            numerator = numerator * (t - (n - 1))
        e = v2(math.factorial(n))
        odd = math.factorial(n) >> e
        c = numerator.shift_down(e) * pow(odd, -1, 1 << ring.N)
        coeffs.append(Fraction(c.to_int()))
        prec.append(c.prec)
    return Series2(tuple(coeffs), tuple(prec), t.prec, False)


def gamma_exponent(a: int, u: int = 5, N: int = 64) -> Local2:
    """log <a> / log u for a 2-adic unit a, so that <a>^s = u^(s t)."""
    ring = Local2Ring.integers(N)
    bracket = a if a % 4 == 1 else -a
    return log2(ring.coerce(bracket)) / log2(ring.coerce(u))


# Rational functions of T = 1 + w


def _poly(coeffs: Sequence[int]) -> Poly:
    return Poly(list(reversed(list(coeffs))) or [0], T)


def _low_first(p: Poly) -> Tuple[int, ...]:
    coeffs = tuple(int(c) for c in reversed(p.all_coeffs()))
    return coeffs if coeffs else (0,)


@dataclass(frozen=True)
class RationalMeasure:
    """The measure whose Mahler series is P(T) / Q(T) with T = 1 + w and Q(1) odd.

    Polynomials are integer coefficient tuples, lowest degree first. Dirac
    measures at nonnegative integers are the monomials T^a.
    """

    num: Tuple[int, ...]
    den: Tuple[int, ...]

    def __post_init__(self):
        if sum(self.den) % 2 == 0:
            raise PreconditionError(f"Q(1) = {sum(self.den)} must be odd for a 2-adic measure")

    def __add__(self, other: "RationalMeasure") -> "RationalMeasure":
        num = _poly(self.num) * _poly(other.den) + _poly(other.num) * _poly(self.den)
        return RationalMeasure(_low_first(num), _low_first(_poly(self.den) * _poly(other.den)))

    def scale(self, c: int) -> "RationalMeasure":
        return RationalMeasure(tuple(c * a for a in self.num), self.den)

    def reflect(self) -> "RationalMeasure":
        """R(-T): the measure twisted by (-1)^x."""
        flip = lambda coeffs: tuple(c if i % 2 == 0 else -c for i, c in enumerate(coeffs))
        return RationalMeasure(flip(self.num), flip(self.den))

    def invert(self) -> "RationalMeasure":
        """R(1/T): the pushforward under x -> -x."""
        dp, dq = len(self.num) - 1, len(self.den) - 1
        num = tuple(reversed(self.num))
        den = tuple(reversed(self.den))
        if dq >= dp:
            num = (0,) * (dq - dp) + num
        else:
            den = (0,) * (dp - dq) + den
        return RationalMeasure(num, den)

    def odd_part(self) -> "RationalMeasure":
        """(R(T) - R(-T)) / 2: the measure restricted to the units."""
        a = _poly(self.num) * _poly(self.reflect().den)
        odd = tuple(c if i % 2 else 0 for i, c in enumerate(_low_first(a)))
        return RationalMeasure(odd, _low_first(_poly(self.den) * _poly(self.reflect().den)))

    def twist(self) -> "RationalMeasure":
        """Im R(iT): the units part multiplied by omega(x) = (-1)^((x-1)/2)."""
        P = _poly(self.num).as_expr()
        Q = _poly(self.den).as_expr()
        top = Poly(expand(P.subs(T, I * T) * Q.subs(T, -I * T)), T)
        bottom = Poly(expand(Q.subs(T, I * T) * Q.subs(T, -I * T)), T)
        num = tuple(int(im(c)) for c in reversed(top.all_coeffs()))
        den = tuple(int(re(c)) for c in reversed(bottom.all_coeffs()))
        return RationalMeasure(num, den)

    def to_series(self, D: int, N: int = 64) -> Series2:
        R, w = ring("w", QQ)
        P = sum((c * (1 + w) ** i for i, c in enumerate(self.num)), R.zero)
        Q = sum((c * (1 + w) ** i for i, c in enumerate(self.den)), R.zero)
        series = rs_mul(P, rs_series_inversion(Q, w, D + 1), w, D + 1)
        coeffs = [_frac(series.get((n,), QQ.zero)) for n in range(D + 1)]
        polynomial = len(self.den) == 1 or all(c == 0 for c in self.den[1:])
        exact = polynomial and len(self.num) - 1 <= D
        return Series2(tuple(coeffs), (None,) * (D + 1), N, exact)

    def is_zero(self) -> bool:
        return not any(self.num)

    def symmetrised_units(self) -> "RationalMeasure":
        """F~ + F~ o (-1): the units part plus its pushforward under x -> -x."""
        units = self.odd_part()
        return units + units.invert()

    def mu_lambda(self) -> MuLambda:
        """Exact invariants of P(T)/Q(T).

        Q(1 + w) has an odd constant term, so it is a unit series and mu and
        lambda are those of the polynomial P(1 + w).

        Raises:
            PrecisionError: For the zero measure.
        """
        coeffs = [sum(c * math.comb(i, k) for i, c in enumerate(self.num)) for k in range(len(self.num))]
        if not any(coeffs):
            raise PrecisionError("The zero measure has no mu")
        mu = min(v2(c) for c in coeffs if c)
        lam = next(k for k, c in enumerate(coeffs) if c and v2(c) == mu)
        return MuLambda(mu, lam, True)

    @classmethod
    def random(cls, rng: random.Random, max_degree: int = 4, bound: int = 8) -> "RationalMeasure":
        """A pseudorandom measure whose symmetrised units part is nonzero."""
        while True:
            num = tuple(rng.randint(-bound, bound) for _ in range(rng.randint(0, max_degree) + 1))
            den = tuple(rng.randint(-bound, bound) for _ in range(rng.randint(0, max_degree) + 1))
            if sum(den) % 2 == 0 or not any(num):
                continue
            measure = cls(num, den)
            if not measure.symmetrised_units().is_zero():
                return measure

    def to_dict(self) -> dict:
        return {"num": list(self.num), "den": list(self.den)}


@dataclass
class SinnottResult:
    holds: bool
    gamma_side: MuLambda
    even_side: MuLambda
    witness: Dict[str, object] = field(default_factory=dict)


def sinnott_mu_identity_check(
    measure: RationalMeasure, D: int = 40, N: int = 64, u: int = 5, max_doublings: int = 2
) -> SinnottResult:
    """Compare mu(Gamma(F)) with mu(F~ + F~ o (-1)) for F = P(T)/Q(T).

    The symmetrised side is exact. The Gamma side is certified on a leading
    window of degrees; the series degree is doubled up to ``max_doublings``
    times until it certifies.

    Raises:
        PreconditionError: If the symmetrised units part of the measure is zero.
        PrecisionError: If the Gamma side is still not certified.
    """
    even = measure.symmetrised_units()
    if even.is_zero():
        raise PreconditionError(f"Symmetrised units part of {measure.to_dict()} is zero; both sides vanish")
    right = even.mu_lambda()
    units = measure.odd_part()
    twisted = measure.twist()
    left = None
    degree = D
    for _ in range(max_doublings + 1):
        G = gamma_transform(units.to_series(degree, N), u=u, twisted=twisted.to_series(degree, N))
        try:
            left = certified_mu_lambda(G)
            break
        except PrecisionError:
            logger.debug(f"Gamma side of {measure.to_dict()} uncertified at degree {degree}")
            degree *= 2
    witness = {"measure": measure.to_dict(), "even": right.to_dict(), "degree": degree}
    if left is None:
        raise PrecisionError(f"Gamma side not certified for {measure.to_dict()}", worst=witness)
    witness["gamma"] = left.to_dict()
    holds = left.mu == right.mu
    if not holds:
        logger.warning(f"mu identity fails for {measure.to_dict()}: {left.mu} != {right.mu}")
    return SinnottResult(holds, left, right, witness)


def sinnott_sweep(samples: int = 100, seed: int = 0, D: int = 40, N: int = 64) -> Dict[str, object]:
    """Run the mu identity on seeded pseudorandom rational functions.

    A sample that cannot be certified is reported under ``uncertified`` with its
    measure; callers treat any entry there as a failed sweep.
    """
    rng = random.Random(seed)
    failures = []
    uncertified = []
    for _ in range(samples):
        measure = RationalMeasure.random(rng)
        try:
            result = sinnott_mu_identity_check(measure, D, N)
        except PrecisionError:
            uncertified.append(measure.to_dict())
            continue
        if not result.holds:
            failures.append(result.witness)
    return {"samples": samples, "seed": seed, "failures": failures, "uncertified": uncertified}


def iwasawa_asymptote_check(ords: Sequence[int], mu: int, lambda_: int, n0: int = 0) -> int:
    """Constant c with ords[i] = 2^n mu + lambda n + c for n = n0 + i.

    Raises:
        PreconditionError: With fewer than three levels.
        VerificationError: If no single c fits.
    """
    if len(ords) < 3:
        raise PreconditionError(f"Need at least 3 consecutive levels, got {len(ords)}")
    constants = [o - (2 ** (n0 + i)) * mu - lambda_ * (n0 + i) for i, o in enumerate(ords)]
    if len(set(constants)) != 1:
        raise VerificationError(
            "No constant c fits the growth law", witness={"constants": constants, "mu": mu, "lambda": lambda_}
        )
    return constants[0]
