import mpmath
import pytest

from iwasawa_cm.elliptic import (
    CMLattice,
    CMMultiplier,
    augmentation_check,
    cm_lattice,
    cm_number,
    distribution_check,
    division_points,
    eisenstein,
    eisenstein_g2_hecke,
    eisenstein_g2_quasimodular,
    g2_check,
    gaussian_lattice,
    hecke_L_h1,
    hecke_check,
    hecke_regulariser,
    identity25_check,
    invariants,
    lemma26_search,
    prop21_check,
    r_lambda,
    row_tail_bound,
    small_multipliers,
    twelfth_root_index,
    weierstrass_residual,
    wp,
)
from iwasawa_cm.exceptions import PreconditionError, VerificationError


@pytest.fixture(scope="module")
def lattice():
    """O_K for q = 7 at 200 bits"""
    return cm_lattice(7, 1, 200)


def test_cm_number_parity():
    """Test that (a + b sqrt(-q))/2 needs a = b mod 2"""
    assert abs(cm_number(7, 1, 1) - (1 + mpmath.sqrt(7) * 1j) / 2) < 1e-15
    with pytest.raises(PreconditionError):
        cm_number(7, 1, 2)


def test_lattice_orientation():
    """Test that the basis must be positively oriented"""
    with pytest.raises(PreconditionError):
        CMLattice(mpmath.mpc(0, 1), mpmath.mpc(1))


def test_multipliers(lattice):
    """Test that elements of O_K act on O_K and 1/2 does not"""
    with mpmath.workprec(232):
        assert lattice.is_multiplier(cm_number(7, 1, 1))
        assert lattice.is_multiplier(cm_number(7, 3, -1))
        assert not lattice.is_multiplier(mpmath.mpf(1) / 2)


def test_weierstrass_equation(lattice):
    """Test p'^2 = 4p^3 - g2 p - g3 at a generic point"""
    z = 0.3 * lattice.omega1 + 0.2 * lattice.omega2
    assert weierstrass_residual(z, lattice) < mpmath.mpf(10) ** -40


def test_wp_is_even_and_periodic(lattice):
    """Test symmetries of the Weierstrass function"""
    z = 0.17 * lattice.omega1 + 0.31 * lattice.omega2
    with mpmath.workprec(200):
        assert abs(wp(z, lattice) - wp(-z, lattice)) < mpmath.mpf(10) ** -40
        assert abs(wp(z, lattice) - wp(z + lattice.omega2, lattice)) < mpmath.mpf(10) ** -40


def test_wp_rejects_lattice_points(lattice):
    """Test that p is not evaluated at a pole"""
    with pytest.raises(PreconditionError):
        wp(lattice.omega1, lattice)


def test_invariants_match_curve_j(lattice):
    """Test j(O_K) = -3375 for q = 7"""
    with mpmath.workprec(232):
        g2, g3, delta = invariants(lattice)
        j = 1728 * g2 ** 3 / delta
        assert abs(j + 3375) < mpmath.mpf(10) ** -30


def test_division_points(lattice):
    """Test the count of division classes modulo sign"""
    lam = cm_number(7, 4, 2)
    points = division_points(lattice, lam)
    assert len(points) == 5
    with mpmath.workprec(232):
        for m in points:
            assert lattice.contains(lam * m)
    assert len(division_points(lattice, lam, modulo_sign=False)) == 10
    with pytest.raises(PreconditionError):
        division_points(lattice, mpmath.mpf(1) / 3)


def test_r_lambda_is_even(lattice):
    """Test that R_lambda depends on z only through p(z)"""
    lam = small_multipliers(7, 2)[1]
    with mpmath.workprec(232):
        z = mpmath.mpf("0.31") * lattice.omega1 + mpmath.mpf("0.17") * lattice.omega2
        value = r_lambda(lattice, lam.complex_value(200), z)
        assert abs(r_lambda(lattice, lam.complex_value(200), -z) - value) < mpmath.mpf(10) ** -40 * abs(value)


def test_r_lambda_preconditions(lattice):
    """Test that even norms and division points are rejected"""
    with pytest.raises(PreconditionError, match="odd norm"):
        r_lambda(lattice, cm_number(7, 1, 1), mpmath.mpf("0.3"))
    lam = small_multipliers(7, 1)[0].complex_value(200)
    points = division_points(lattice, lam)
    with pytest.raises(PreconditionError, match="division point"):
        r_lambda(lattice, lam, points[0], points=points)


def test_small_multipliers():
    """Test the smallest odd norms represented by O_K for q = 7"""
    assert [m.norm for m in small_multipliers(7, 3)] == [7, 11, 23]
    assert [m.norm for m in small_multipliers(7, 2, exclude_norms=(7,))] == [11, 23]


def test_lemma26_search_q7():
    """Test the auxiliary multiplier for q = 7"""
    lam = lemma26_search(7)
    assert (lam.a, lam.b) == (-2, -4)
    assert lam.norm == 29


@pytest.mark.parametrize("q", [7, 23, 31, 47])
def test_lemma26_congruences(q):
    """Test lambda = 1 and lambda-bar = 5 mod 8 at p, coprimality and the parity claim"""
    lam = lemma26_search(q)
    assert lam.norm % 2 and lam.norm % 3 and lam.norm % q
    assert lam.local(16).to_int() % 8 == 1
    assert lam.conjugate().local(16).to_int() % 8 == 5
    orders = augmentation_check(lam)
    assert orders["lambda"] >= 1
    assert orders["lambda_bar"] == 0


def test_multiplier_local_image():
    """Test that lambda times lambda-bar maps to the norm"""
    lam = CMMultiplier(23, 3, 1)
    assert lam.norm == 8
    product = lam.local(32) * lam.conjugate().local(32)
    assert product == lam.norm


def test_lemma26_rejects_bad_q():
    """Test that q must be 7 mod 8"""
    with pytest.raises(PreconditionError):
        lemma26_search(11)


def test_hecke_preconditions():
    """Test class number and weight restrictions"""
    with pytest.raises(PreconditionError):
        hecke_L_h1(23, 4)
    with pytest.raises(PreconditionError):
        hecke_L_h1(7, 2)
    assert hecke_L_h1(7, 5) == 0


def test_hecke_check():
    """Test the L-value sum against the row-by-row lattice sum"""
    report = hecke_check(7, ks=(4, 6), prec_bits=200)
    assert report.passed


def test_g2_regularisations_agree(lattice):
    """Test the regularised G_2 against the quasimodular value and the double-precision annulus sums"""
    value = eisenstein(lattice, 2)
    assert abs(value - eisenstein_g2_quasimodular(lattice)) < mpmath.mpf(10) ** -50
    assert abs(eisenstein_g2_hecke(lattice) - complex(value)) < 0.1


def test_g2_check(lattice):
    """Test the G_2 report, including homogeneity under scaling"""
    report = g2_check(lattice)
    assert report.passed, report.to_dict()
    assert report.parameters["shifts"] == [0.5, 0.25, 0.125]


def test_hecke_regulariser_limit(lattice):
    """Test that the constant modes tend to -pi / Im tau"""
    limit, estimates = hecke_regulariser(lattice)
    with mpmath.workprec(232):
        assert abs(limit + mpmath.pi / lattice.tau.imag) < mpmath.mpf(10) ** -50
    assert len(estimates) > 3


def test_g2_of_square_lattice_vanishes():
    """Test that iL = L forces G_2 = 0"""
    assert abs(eisenstein(gaussian_lattice(), 2)) < mpmath.mpf(10) ** -50


def test_g4_of_square_lattice():
    """Test G_4(Z[i]) against Gamma(1/4)^8 / (960 pi^2)"""
    with mpmath.workprec(232):
        expected = mpmath.gamma(mpmath.mpf(1) / 4) ** 8 / (960 * mpmath.pi ** 2)
        assert abs(eisenstein(gaussian_lattice(), 4) - expected) < mpmath.mpf(10) ** -50


def test_row_tail_bound(lattice):
    """Test that the row tail bound covers the next row and decays geometrically"""
    with mpmath.workprec(232):
        tau = lattice.tau
        next_row = abs(2 * (mpmath.zeta(4, 3 * tau) + mpmath.zeta(4, 1 - 3 * tau)))
        assert next_row <= row_tail_bound(4, tau, 2)
        assert row_tail_bound(4, tau, 3) < row_tail_bound(4, tau, 2) * mpmath.exp(-2 * mpmath.pi * tau.imag) * 1.01


@pytest.mark.parametrize("k", [4, 6])
def test_eisenstein_homogeneity(lattice, k):
    """Test G_k(cL) = c^(-k) G_k(L)"""
    c = mpmath.mpc(0.75, -1.5)
    with mpmath.workprec(232):
        assert abs(eisenstein(lattice.scaled(c), k) * c ** k - eisenstein(lattice, k)) < mpmath.mpf(10) ** -50


def test_g6_of_square_lattice_vanishes():
    """Test that G_6(Z[i]) = 0 by symmetry"""
    assert abs(eisenstein(gaussian_lattice(), 6)) < mpmath.mpf(10) ** -50


def test_eisenstein_odd_weight_vanishes(lattice):
    """Test that G_k vanishes for odd k"""
    assert abs(eisenstein(lattice, 5)) < mpmath.mpf(10) ** -40


@pytest.mark.slow
def test_identity25(lattice):
    """Test the theta product formula for three multipliers"""
    for m in small_multipliers(7, 3):
        report = identity25_check(lattice, m.complex_value(), count=5)
        assert report.passed, report.to_dict()


@pytest.mark.slow
def test_distribution_relation(lattice):
    """Test the distribution relation for R_lambda"""
    lam = lemma26_search(7)
    beta = small_multipliers(7, 1, exclude_norms=(lam.norm, 7))[0]
    report = distribution_check(lattice, lam.complex_value(), beta.complex_value())
    assert report.passed
    assert report.details["branch"] in range(12)


@pytest.mark.slow
def test_distribution_relation_wrong_branch(lattice):
    """Test that shifting the comparison by a 12th root of unity is caught"""
    lam = lemma26_search(7)
    beta = small_multipliers(7, 1, exclude_norms=(lam.norm, 7))[0]
    branch = distribution_check(lattice, lam.complex_value(), beta.complex_value(), count=1).details["branch"]
    with pytest.raises(VerificationError):
        distribution_check(
            lattice, lam.complex_value(), beta.complex_value(), count=1, expected_branch=(branch + 1) % 12
        )


def test_twelfth_root_index():
    """Test reading the branch off a ratio"""
    assert twelfth_root_index(mpmath.mpc(1)) == 0
    assert twelfth_root_index(mpmath.expjpi(mpmath.mpf(5) / 6)) == 5
    assert twelfth_root_index(mpmath.expjpi(mpmath.mpf(-1) / 6) * 1.001) == 11


@pytest.mark.slow
def test_prop21(lattice):
    """Test the Taylor expansion of the log-derivative against Eisenstein values"""
    lam = lemma26_search(7)
    rho = [(lam.complex_value(), 1), (lam.conjugate().complex_value(), -1)]
    assert prop21_check(lattice, rho, K_max=8).passed


def test_prop21_needs_balanced_rho(lattice):
    """Test the degree condition on rho"""
    with pytest.raises(PreconditionError):
        prop21_check(lattice, [(cm_number(7, 4, 2), 1)])
