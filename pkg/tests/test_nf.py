from fractions import Fraction

import pytest

from iwasawa_cm.cm import class_group, hilbert_class_poly, prime_above_2_order
from iwasawa_cm.exceptions import ConstructionError, PreconditionError
from iwasawa_cm.nf import NumberField, build_H, has_local_root, omega, split_2, sqrt_in_field

Q23_POLY = (1, -3, 5, -5, 5, -3, 1)


@pytest.fixture
def h23():
    """The published sextic defining H for q = 23"""
    return NumberField(Q23_POLY, 23, 3, label="published")


def test_field_validation():
    """Test that the polynomial must be monic of degree 2h"""
    with pytest.raises(PreconditionError):
        NumberField((2, 1, 1), 7, 1)
    with pytest.raises(PreconditionError):
        NumberField(Q23_POLY, 23, 2)


def test_arithmetic(h23):
    """Test field operations in the power basis"""
    a = h23.gen()
    assert a ** 6 == 3 * a ** 5 - 5 * a ** 4 + 5 * a ** 3 - 5 * a ** 2 + 3 * a - 1
    b = a * a + 1
    assert b * b.inverse() == h23.one()
    assert (b / a) * a == b
    assert (1 - a) + a == h23.one()
    assert a ** -1 == a.inverse()
    with pytest.raises(ZeroDivisionError):
        h23.zero().inverse()


def test_norm_trace_charpoly(h23):
    """Test norm and trace of the generator against the defining polynomial"""
    a = h23.gen()
    assert a.norm() == 1
    assert a.trace() == 3
    assert a.charpoly().all_coeffs() == list(Q23_POLY)
    assert h23.element([2]).norm() == 64


def test_element_reduces_long_coordinates(h23):
    """Test that coordinates beyond the degree are reduced"""
    high = h23.element([0, 0, 0, 0, 0, 0, 1])
    assert high == h23.gen() ** 6


def test_mixing_fields_fails(h23):
    """Test that elements of different fields do not combine"""
    other = NumberField((1, 1, 2), 7, 1)
    with pytest.raises(PreconditionError):
        h23.gen() + other.gen()


def test_sqrt_in_field(h23):
    """Test square roots found and refused"""
    a = h23.gen()
    root = sqrt_in_field(h23, a * a * 4)
    assert root is not None and root * root == a * a * 4
    assert sqrt_in_field(h23, 2) is None


def test_omega(h23):
    """Test that omega satisfies x^2 - x + (q + 1) / 4"""
    w = omega(h23)
    assert w * w - w + 6 == h23.zero()


def test_q23_splits_as_two_cubics(h23):
    """Test the factorisation mod 2 and the local degree"""
    assert h23.is_squarefree_mod_2()
    splitting = split_2(h23, 64)
    assert splitting.f == 3
    assert splitting.f == prime_above_2_order(class_group(23))
    assert {fac.residue for fac in splitting.factors} == {(1, 1, 0, 1), (1, 0, 1, 1)}
    assert {fac.above for fac in splitting.factors} == {"p", "p*"}
    assert len(splitting.embeddings("p")) == 3
    data = splitting.to_dict()
    assert data["local_degree"] == 3


def test_embeddings_are_roots(h23):
    """Test that every embedding is a root of the defining polynomial"""
    splitting = split_2(h23, 48)
    for root in splitting.embeddings("p") + splitting.embeddings("pstar"):
        assert h23.gen().to_local(root) == root
        value = h23.element([Fraction(1, 3), 1]).to_local(root)
        assert value * 3 == root * 3 + 1


def test_non_squarefree_polynomial_rejected():
    """Test that a polynomial with a repeated factor mod 2 is refused"""
    nf = NumberField((1, 0, 0, 0, 0, 0, 9), 23, 3)
    assert not nf.is_squarefree_mod_2()
    with pytest.raises(ConstructionError):
        split_2(nf, 32)


def test_build_H_q7():
    """Test that for h = 1 the field is K itself"""
    nf = build_H(hilbert_class_poly(7), 7)
    assert nf.poly == (1, 1, 2)
    assert nf.degree == 2
    splitting = split_2(nf, 32)
    assert splitting.f == 1


def test_build_H_rejects_mismatched_q():
    """Test that the class polynomial must match q"""
    with pytest.raises(PreconditionError):
        build_H(hilbert_class_poly(7), 23)


@pytest.mark.parametrize("q", [23, 31])
def test_build_H(q):
    """Test that the constructed field has degree 2h and splits with local degree f"""
    nf = build_H(hilbert_class_poly(q), q)
    assert nf.degree == 6
    assert nf.is_squarefree_mod_2()
    assert split_2(nf, 32).f == prime_above_2_order(class_group(q))


def test_published_field_embeds_in_constructed(h23):
    """Test that the published sextic has a root in the 2-adic completion of the constructed field"""
    nf = build_H(hilbert_class_poly(23), 23)
    splitting = split_2(nf, 48)
    assert has_local_root(Q23_POLY, splitting.ring, 48)


def test_round_trip_dict(h23):
    """Test serialization of a field"""
    assert NumberField.from_dict(h23.to_dict()) == h23


def test_build_H_records_generator():
    """Test that the primitive element is recorded in the field and its dict"""
    nf = build_H(hilbert_class_poly(23), 23)
    assert nf.generator == "gamma + k*omega"
    assert 1 <= nf.shift <= 32
    assert nf.to_dict()["generator"] == {"kind": "gamma + k*omega", "k": nf.shift}
    assert NumberField.from_dict(nf.to_dict()) == nf
    assert build_H(hilbert_class_poly(7), 7).to_dict()["generator"] == {"kind": "omega - 1", "k": None}


def test_build_H_from_j():
    """Test the j + k sqrt(-q) primitive element: squarefree over Q, a square mod 2"""
    nf = build_H(hilbert_class_poly(23), 23, generator="j")
    assert nf.degree == 6
    assert nf.generator == "j + k*sqrt(-q)"
    assert nf.shift == 1
    assert nf.as_poly().is_sqf
    assert not nf.is_squarefree_mod_2()
    with pytest.raises(ConstructionError):
        split_2(nf, 32)


def test_build_H_unknown_generator():
    """Test that an unknown generator is refused"""
    with pytest.raises(PreconditionError):
        build_H(hilbert_class_poly(23), 23, generator="eta")


def test_integral_basis_index_divides_discriminant(h23):
    """Test that the integral basis passes its discriminant certificate for q = 23"""
    from iwasawa_cm.nf import _integral_basis

    basis = _integral_basis(h23.as_poly())
    assert len(basis) == 6
    assert all(len(v) == 6 for v in basis)
