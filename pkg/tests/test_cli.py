import csv
import json
import shutil
import tempfile
from pathlib import Path

import pytest

from iwasawa_cm import __version__
from iwasawa_cm.cli import EXIT_OK, EXIT_PRECONDITION, EXIT_VERIFICATION, exit_code, main
from iwasawa_cm.exceptions import CacheError, PrecisionError, PreconditionError, UnitSearchError


@pytest.fixture
def test_dir():
    """Create a temporary directory for the cache and outputs"""
    test_dir = tempfile.mkdtemp()
    yield Path(test_dir)
    shutil.rmtree(test_dir)


@pytest.fixture
def run(test_dir, capsys, monkeypatch):
    """Run the CLI against a private cache and return (exit code, envelope)"""
    for name in ("IWASAWA_CM_CACHE_DIR", "IWASAWA_CM_WORKERS", "IWASAWA_CM_PADIC_PREC", "IWASAWA_CM_LOG_LEVEL"):
        monkeypatch.delenv(name, raising=False)

    def _run(*argv):
        code = main(["--cache-dir", str(test_dir / "cache"), *argv])
        out = capsys.readouterr().out
        return code, json.loads(out)

    return _run


def test_exit_codes():
    """Test the mapping from exceptions to exit codes"""
    assert exit_code(PreconditionError("q")) == 2
    assert exit_code(PrecisionError("gap", worst=0.3)) == 3
    assert exit_code(UnitSearchError("none")) == 4
    assert exit_code(CacheError("checksum")) == 4


def test_version(capsys):
    """Test that --version prints the package version"""
    with pytest.raises(SystemExit) as exc_info:
        main(["--version"])
    assert exc_info.value.code == 0
    assert __version__ in capsys.readouterr().out


def test_classgroup(run):
    """Test the classgroup envelope"""
    code, payload = run("classgroup", "--q", "23")
    assert code == EXIT_OK
    assert payload["schema"] == 1
    assert payload["command"] == "classgroup"
    assert payload["result"]["h"] == 3
    assert payload["result"]["forms"][0] == [1, 1, 6]
    assert payload["result"]["prime_above_2_order"] == 3
    assert "wall_clock" in payload
    assert payload["config"]["cache_dir"].endswith("cache")


def test_classgroup_bad_q(run):
    """Test that q = 1 mod 8 exits with the precondition code"""
    code, payload = run("classgroup", "--q", "17")
    assert code == EXIT_PRECONDITION
    assert payload["result"]["error"] == "PreconditionError"


def test_invalid_workers(run):
    """Test that invalid settings are reported before any command runs"""
    code, payload = run("--workers", "0", "classgroup", "--q", "7")
    assert code == EXIT_PRECONDITION
    assert "error" in payload


def test_hcp_cached(run):
    """Test that the class polynomial is cached and versioned"""
    code, payload = run("hcp", "--q", "23")
    assert code == EXIT_OK
    assert payload["result"]["polynomial"]["coeffs"] == ["1", "3491750", "-5151296875", "12771880859375"]
    version = payload["result"]["artifacts"]["q23"]["hcp"]
    assert len(version) == 12
    code, payload = run("hcp", "--q", "23")
    assert payload["result"]["artifacts"]["q23"]["hcp"] == version


def test_index_431(run):
    """Test the itemised index for q = 431 from the published regulator"""
    code, payload = run("index", "--q", "431")
    assert code == EXIT_OK
    result = payload["result"]
    assert result["ord2_index"] == 5
    assert result["terms"]["ord2_Rp"] == 25
    assert result["terms"]["ord2_euler_factor"] == -21
    assert result["provenance"] == {"ord2_Rp": "paper", "hH": "paper"}
    assert result["lemma51"]["applicable"] is True


def test_index_negative(run):
    """Test that an inconsistent regulator order exits with the verification code"""
    code, payload = run("index", "--q", "23", "--ord2-rp", "0")
    assert code == EXIT_VERIFICATION
    assert payload["result"]["error"] == "VerificationError"
    assert payload["result"]["witness"]["ord2_index"] == -2


def test_table_golden(run, test_dir):
    """Test the ingested table against the golden file, with CSV output"""
    out = test_dir / "table.csv"
    code, payload = run("table", "--qmax", "500", "--mode", "ingested", "--golden", "--csv", str(out))
    assert code == EXIT_OK
    assert payload["result"]["golden_differences"] == []
    assert len(payload["result"]["rows"]) == 25
    with open(out, newline="") as f:
        assert len(list(csv.DictReader(f))) == 25


def test_table_embeds_artifact_versions(run):
    """Test that the table report carries the cached record versions of its rows"""
    code, payload = run("hcp", "--q", "23")
    version = payload["result"]["artifacts"]["q23"]["hcp"]
    code, payload = run("table", "--qmax", "100")
    assert code == EXIT_OK
    artifacts = payload["result"]["artifacts"]
    assert set(artifacts) == {f"q{row['q']}" for row in payload["result"]["rows"]}
    assert artifacts["q23"] == {"hcp": version, "field": None}
    assert artifacts["q7"]["hcp"] is None


def test_table_golden_mismatch(run):
    """Test that a partial table differs from the golden file"""
    code, payload = run("table", "--qmax", "100", "--golden")
    assert code == EXIT_VERIFICATION
    assert payload["result"]["witness"]["first"]["field"] == "row"


def test_regulator_q23_all_choices(run):
    """Test the q = 23 regulator from the shipped units with every choice reported"""
    code, payload = run("regulator", "--q", "23", "--digits", "8", "--all-choices")
    assert code == EXIT_OK
    result = payload["result"]
    assert result["ord2"] == 2
    assert set(result["choices"]) == {"p", "pstar"}
    assert all(v["ord2"] == 2 for v in result["choices"]["p"])
    assert set(result["artifacts"]["q23"]) == {"hcp", "field"}
    assert result["artifacts"]["q23"]["field"] is not None


def test_verify_iwasawa_mahler(run):
    """Test the Mahler round-trip suite"""
    code, payload = run("verify", "iwasawa", "--suite", "mahler")
    assert code == EXIT_OK
    assert payload["result"]["reports"][0]["passed"] is True


def test_verify_iwasawa_asymptote(run):
    """Test the growth law suite"""
    code, payload = run("verify", "iwasawa", "--suite", "asymptote")
    assert code == EXIT_OK
    assert [r["passed"] for r in payload["result"]["reports"]] == [True, True]


def test_verify_formal_needs_q7(run):
    """Test that the formal group suite rejects other q"""
    code, payload = run("verify", "elliptic", "--suite", "formal", "--q", "23")
    assert code == EXIT_PRECONDITION


def test_verify_hecke(run):
    """Test the Hecke L-value suite for q = 7"""
    code, payload = run("verify", "elliptic", "--suite", "hecke")
    assert code == EXIT_OK
    assert payload["result"]["reports"][0]["passed"] is True


def test_verify_g2(run):
    """Test the regularised G_2 suite and its artifact block"""
    code, payload = run("verify", "elliptic", "--suite", "g2")
    assert code == EXIT_OK
    assert payload["result"]["reports"][0]["passed"] is True
    assert payload["result"]["artifacts"] == {"q7": {"hcp": None, "field": None}}


def test_verify_iwasawa_has_no_artifacts(run):
    """Test that suites without a field report an empty artifact block"""
    code, payload = run("verify", "iwasawa", "--suite", "mahler")
    assert payload["result"]["artifacts"] == {}


def test_field_reports_generator(run):
    """Test that the field command names the primitive element it used"""
    code, payload = run("field", "--q", "23")
    assert code == EXIT_OK
    assert payload["result"]["field"]["generator"]["kind"] == "gamma + k*omega"
    code, payload = run("field", "--q", "23", "--generator", "j")
    assert code == EXIT_OK
    assert payload["result"]["field"]["generator"] == {"kind": "j + k*sqrt(-q)", "k": 1}
    assert payload["result"]["squarefree_mod_2"] is False


def test_cli_loads_with_higher_moments():
    """Test that the command line module imports and moments with s >= 2 evaluate"""
    import iwasawa_cm.cli as cli_module
    from iwasawa_cm.iwasawa import dirac, moment

    assert "verify" in cli_module.COMMANDS
    assert moment(dirac(3, 8), 2)[0] == 9
