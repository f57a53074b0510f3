import json
import shutil
import tempfile
from fractions import Fraction
from pathlib import Path

import pytest

from iwasawa_cm.exceptions import PreconditionError, VerificationError
from iwasawa_cm.nf import NumberField
from iwasawa_cm.units import (
    UnitSet,
    check_units,
    ingest_units,
    load_units,
    regulator_index,
    saturate_2,
    search_units,
    serialize_units,
    shipped_units_path,
)


@pytest.fixture
def test_dir():
    """Create a temporary directory for unit files"""
    test_dir = tempfile.mkdtemp()
    yield Path(test_dir)
    shutil.rmtree(test_dir)


@pytest.fixture
def h23():
    return NumberField((1, -3, 5, -5, 5, -3, 1), 23, 3)


@pytest.fixture
def q23_units(h23):
    return ingest_units(shipped_units_path(23), h23)


def test_ingest_shipped_units(q23_units):
    """Test that the shipped q = 23 units load with norm +-1"""
    assert q23_units.r == 2
    assert q23_units.provenance == "ingested"
    assert q23_units.certificate["independent"] is True
    assert all(abs(u.norm()) == 1 for u in q23_units.units)
    assert q23_units.complex_regulator() > 0


def test_check_units_count(h23, q23_units):
    """Test that a wrong number of units is rejected"""
    with pytest.raises(VerificationError, match="Expected 2 units"):
        check_units(h23, q23_units.units[:1])


def test_check_units_norm(h23):
    """Test that a non-unit is rejected"""
    with pytest.raises(VerificationError, match="norm"):
        check_units(h23, [h23.element([2]), h23.one()])


def test_check_units_dependent(h23, q23_units):
    """Test that a repeated unit is reported as dependent"""
    u = q23_units.units[0]
    with pytest.raises(VerificationError, match="dependent"):
        check_units(h23, [u, u * u])


def test_missing_unit_file(test_dir):
    """Test that a missing unit file is a precondition failure"""
    with pytest.raises(PreconditionError, match="does not exist"):
        ingest_units(test_dir / "units_q999.json")


def test_malformed_unit_file(test_dir):
    """Test that a unit file without units is rejected"""
    path = test_dir / "units_q23.json"
    path.write_text(json.dumps({"q": 23, "poly": ["1", "-3", "5", "-5", "5", "-3", "1"]}))
    with pytest.raises(PreconditionError, match="Malformed"):
        ingest_units(path)


def test_unit_file_for_other_field(test_dir, h23):
    """Test that units for a different q do not attach to the active field"""
    path = test_dir / "units_q7.json"
    shutil.copy(shipped_units_path(7), path)
    with pytest.raises(VerificationError, match="active field"):
        ingest_units(path, h23)


def test_load_units_rank_zero():
    """Test loading the empty unit set for q = 7"""
    nf = NumberField((1, 1, 2), 7, 1)
    units = load_units(7, nf=nf)
    assert units.r == 0
    assert units.complex_regulator() == 1


def test_load_units_missing():
    """Test that q without unit data fails unless h = 1"""
    with pytest.raises(PreconditionError, match="No unit data"):
        load_units(31)


def test_load_units_prefers_units_dir(test_dir, q23_units):
    """Test that a file in units_dir shadows the shipped data"""
    q23_units.source = "local copy"
    serialize_units(q23_units, test_dir / "units_q23.json")
    loaded = load_units(23, test_dir)
    assert loaded.source == "local copy"
    assert [u.coords for u in loaded.units] == [u.coords for u in q23_units.units]


def test_serialize_units(test_dir, q23_units):
    """Test the layout of a written unit file"""
    path = serialize_units(q23_units, test_dir / "out.json")
    data = json.loads(path.read_text())
    assert data["q"] == 23
    assert data["poly"] == ["1", "-3", "5", "-5", "5", "-3", "1"]
    assert len(data["units"]) == 2
    assert [Fraction(c) for c in data["units"][0]] == list(q23_units.units[0].coords)


def test_regulator_index_self(q23_units):
    """Test that a unit set has index 1 against itself"""
    index, residual = regulator_index(q23_units, q23_units)
    assert index == 1
    assert residual < 1e-9


def test_regulator_index_square(h23, q23_units):
    """Test that squaring one unit doubles the index"""
    u1, u2 = q23_units.units
    squared = UnitSet(h23, [u1 * u1, u2], "ingested")
    index, _ = regulator_index(squared, q23_units)
    assert index == 2


def test_saturate_removes_square(h23, q23_units):
    """Test that 2-saturation undoes a squared unit"""
    u1, u2 = q23_units.units
    units = saturate_2(h23, [u1 * u1, u2])
    index, _ = regulator_index(UnitSet(h23, units, "searched"), q23_units)
    assert index % 2 == 1


def test_search_rank_zero():
    """Test that the search for h = 1 returns no units"""
    units = search_units(NumberField((1, 1, 2), 7, 1))
    assert units.r == 0
    assert units.provenance == "searched"


def test_search_degree_limit():
    """Test that the search refuses fields of degree above 6"""
    nf = NumberField((1, 0, 0, 0, 0, 0, 0, 0, 1), 47, 4)
    with pytest.raises(PreconditionError, match="degree"):
        search_units(nf)


@pytest.mark.slow
def test_search_units_q23(h23, q23_units):
    """Test that searched units for q = 23 have odd index against the published ones"""
    searched = search_units(h23)
    assert searched.r == 2
    assert searched.certificate["two_saturated"] is True
    index, _ = regulator_index(searched, q23_units)
    assert index % 2 == 1


def test_search_does_not_swallow_unexpected_errors(h23, monkeypatch):
    """Test that only certification failures of the integral basis fall back to the power basis"""

    def broken(poly):
        raise RuntimeError("not a certification failure")

    monkeypatch.setattr("iwasawa_cm.units._integral_basis", broken)
    with pytest.raises(RuntimeError):
        search_units(h23)


def test_search_falls_back_to_power_basis(h23, monkeypatch):
    """Test that an uncertified integral basis falls back to the power basis"""
    seen = {}

    def uncertified(poly):
        raise VerificationError("index does not divide the discriminant")

    def capture(poly, basis, prec_bits):
        seen["basis"] = basis
        raise RuntimeError("stop after the basis is chosen")

    monkeypatch.setattr("iwasawa_cm.units._integral_basis", uncertified)
    monkeypatch.setattr("iwasawa_cm.units._lll_reduce", capture)
    with pytest.raises(RuntimeError):
        search_units(h23)
    assert seen["basis"] == [[1 if i == j else 0 for i in range(6)] for j in range(6)]
