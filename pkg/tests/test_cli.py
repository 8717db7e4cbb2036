"""Command line surface: subcommands, exit codes, report artifacts.

Commands run in-process through `main(argv)` so the tests see the exit
code directly; one subprocess test checks the installed console script.
Numeric report payloads must be byte-stable across reruns and across
worker counts; only the invocation echo may differ.
"""

import json
import subprocess
import sys
import xml.etree.ElementTree as ET

import pytest

from hopfmass.cli import (
    DEFAULT_TOLERANCES,
    EXIT_CHECK_FAILED,
    EXIT_OK,
    EXIT_USAGE,
    _parse_grid,
    _parse_tolerances,
    main,
    max_threads,
)

MONOMIAL = "monomial_ideal(m=[[1,0],[0,2]],w=[1,1])"
RADIAL = "radial(profile=log,c=1)"
NON_INVARIANT = ("smooth_poly(terms=[(1,[1,0],[1,0]),(1,[0,1],[0,1]),"
                 "(0.2,[1,0],[0,0]),(0.2,[0,0],[1,0])])")


def run_cli(*argv):
    return main(list(argv))


# ---------------------------------------------------------------------------
# argument plumbing
# ---------------------------------------------------------------------------

def test_parse_grid():
    assert _parse_grid("-5,-10, -20", "--t-grid") == (-5.0, -10.0, -20.0)
    with pytest.raises(ValueError):
        _parse_grid("a,b", "--t-grid")
    with pytest.raises(ValueError):
        _parse_grid(" , ", "--t-grid")


def test_parse_tolerances():
    tol = _parse_tolerances(["frames_residual=1e-7"])
    assert tol["frames_residual"] == 1e-7
    assert tol["sigma_factor"] == DEFAULT_TOLERANCES["sigma_factor"]
    with pytest.raises(ValueError):
        _parse_tolerances(["no_such_key=1"])
    with pytest.raises(ValueError):
        _parse_tolerances(["frames_residual"])


def test_max_threads_env(monkeypatch):
    monkeypatch.delenv("MAMASS_THREADS", raising=False)
    assert max_threads() == 1
    monkeypatch.setenv("MAMASS_THREADS", "8")
    assert max_threads() == 8
    monkeypatch.setenv("MAMASS_THREADS", "0")
    assert max_threads() == 1
    monkeypatch.setenv("MAMASS_THREADS", "9999")
    assert max_threads() == 64
    monkeypatch.setenv("MAMASS_THREADS", "two")
    with pytest.raises(ValueError):
        max_threads()


def test_bad_threads_env_is_usage_error(monkeypatch, capsys):
    monkeypatch.setenv("MAMASS_THREADS", "two")
    assert run_cli("analyze", "--function", RADIAL) == EXIT_USAGE
    assert "MAMASS_THREADS" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# analyze
# ---------------------------------------------------------------------------

def test_analyze_monomial_full_artifacts(tmp_path):
    js, cs, sv = (str(tmp_path / x) for x in ("r.json", "r.csv", "r.svg"))
    code = run_cli("analyze", "--function", MONOMIAL, "--seed", "3",
                   "--json", js, "--csv", cs, "--svg", sv)
    assert code == EXIT_OK

    doc = json.load(open(js))
    assert doc["schema"] == "mamass-report/1"
    assert abs(doc["nu"]["extrapolated"] - 1.0) < 1e-9
    assert abs(doc["lambda"]["extrapolated"] - 2.0) < 1e-6
    assert abs(doc["tau"]["extrapolated"] - 2.0) < 1e-6
    assert doc["tau"]["uncertainty"] < 1e-6
    assert all(iq["verdict"] in ("pass", "inconclusive")
               for iq in doc["inequalities"])
    assert doc["config"]["function"] == MONOMIAL
    assert doc["quadrature"]["kind"] == "tensor"

    rows = open(cs).read().splitlines()
    assert rows[0] == "t,boundary_mass,stderr,I_over_pin,E_0,E_1"
    assert len(rows) == 1 + len(doc["config"]["t_grid"])
    first = rows[1].split(",")
    assert float(first[0]) == doc["config"]["t_grid"][0]
    assert abs(float(first[1]) - 2.0) < 1e-9

    root = ET.parse(sv).getroot()
    assert root.tag.endswith("svg")
    ns = "{http://www.w3.org/2000/svg}"
    assert len(root.findall(f".//{ns}polyline")) == 2


def test_analyze_stdout_json(capsys):
    code = run_cli("analyze", "--function", MONOMIAL)
    assert code == EXIT_OK
    doc = json.loads(capsys.readouterr().out)
    assert doc["schema"] == "mamass-report/1"
    assert doc["config"]["json"] is None


def test_analyze_rerun_bit_identical(tmp_path):
    js = str(tmp_path / "rep.json")
    assert run_cli("analyze", "--function", MONOMIAL, "--seed", "5",
                   "--json", js) == EXIT_OK
    first = open(js, "rb").read()
    assert run_cli("analyze", "--function", MONOMIAL, "--seed", "5",
                   "--json", js) == EXIT_OK
    assert open(js, "rb").read() == first


def test_analyze_usage_errors(capsys):
    assert run_cli("analyze", "--function", NON_INVARIANT) == EXIT_USAGE
    assert "not circle invariant" in capsys.readouterr().err
    assert run_cli("analyze", "--function", "nope(") == EXIT_USAGE
    capsys.readouterr()
    assert run_cli("analyze", "--function", RADIAL,
                   "--t-grid=-3,4") == EXIT_USAGE
    capsys.readouterr()
    assert run_cli("analyze", "--function", RADIAL,
                   "--A-grid", "0.2,4") == EXIT_USAGE
    capsys.readouterr()
    assert run_cli("analyze", "--function", RADIAL,
                   "--tol", "frames_residual=hot") == EXIT_USAGE
    capsys.readouterr()


# ---------------------------------------------------------------------------
# constants and identities
# ---------------------------------------------------------------------------

def test_constants_table_and_json(tmp_path, capsys):
    js = str(tmp_path / "c.json")
    assert run_cli("constants", "--max-n", "5", "--json", js) == EXIT_OK
    out = capsys.readouterr().out.splitlines()
    assert out[0].split() == ["k", "B_k", "C_k"]
    # exact rows: Bell numbers alongside the dimensional constants
    assert out[1].split() == ["0", "1", "-"]
    assert out[4].split() == ["3", "5", "24"]
    assert out[6].split() == ["5", "52", "418"]

    doc = json.load(open(js))
    assert doc["bell"] == [1, 1, 2, 5, 15, 52, 203]
    assert doc["dimensional"] == [2, 7, 24, 96, 418]


def test_identities_pass_and_fault(tmp_path, capsys):
    js = str(tmp_path / "i.json")
    assert run_cli("identities", "--max-n", "8", "--json", js) == EXIT_OK
    out = capsys.readouterr().out
    assert out.count("pass") == 3 and "FAIL" not in out
    doc = json.load(open(js))
    assert [r["passed"] for r in doc["identities"]] == [True] * 3
    assert {r["name"] for r in doc["identities"]} == \
        {"df019", "gr004", "gr0066"}

    assert run_cli("identities", "--inject-fault") == EXIT_CHECK_FAILED
    out = capsys.readouterr().out
    assert out.count("FAIL") == 3


# ---------------------------------------------------------------------------
# verify suites
# ---------------------------------------------------------------------------

def _statuses(path):
    doc = json.load(open(path))
    return {c["name"]: c["status"] for c in doc["checks"]}


def test_verify_mass_oracles(tmp_path):
    js = str(tmp_path / "m.json")
    code = run_cli("verify", "--suite", "mass-oracles",
                   "--function", "loglinear(A=[[1,1],[0,1]])", "--json", js)
    assert code == EXIT_OK
    assert _statuses(js) == {"shell_oracle_consistency": "pass",
                             "alternating_form_agreement": "pass",
                             "transversal_positivity": "pass"}


def test_verify_frames_invariant_and_not(tmp_path):
    js = str(tmp_path / "f.json")
    assert run_cli("verify", "--suite", "frames", "--function", MONOMIAL,
                   "--json", js) == EXIT_OK
    assert _statuses(js) == {"hessian_decomposition": "pass",
                             "restriction_bridge": "pass",
                             "connection_antisymmetry": "pass"}

    assert run_cli("verify", "--suite", "frames",
                   "--function", NON_INVARIANT, "--json", js) == EXIT_OK
    st = _statuses(js)
    assert st["restriction_bridge"] == "skipped"
    assert st["hessian_decomposition"] == "pass"


def test_verify_frames_tight_tolerance_fails(tmp_path):
    # an absurd tolerance must flip the verdict and the exit code, while
    # still writing the report
    js = str(tmp_path / "f.json")
    code = run_cli("verify", "--suite", "frames", "--function", MONOMIAL,
                   "--json", js, "--tol", "frames_residual=1e-14")
    assert code == EXIT_CHECK_FAILED
    assert _statuses(js)["hessian_decomposition"] == "fail"


def test_verify_regularize_default_member(tmp_path):
    js = str(tmp_path / "r.json")
    assert run_cli("verify", "--suite", "regularize", "--json", js) == EXIT_OK
    assert _statuses(js) == {"monotone_regularization": "pass",
                             "friedrichs_commutator": "pass",
                             "slope_envelope": "pass",
                             "mass_convergence": "pass"}
    gaps = [c for c in json.load(open(js))["checks"]
            if c["name"] == "mass_convergence"][0]["gaps"]
    assert gaps[0] > gaps[1] > gaps[2]


def test_verify_regularize_rejects_dim2(capsys):
    assert run_cli("verify", "--suite", "regularize",
                   "--dim", "2") == EXIT_USAGE
    assert "n = 1 only" in capsys.readouterr().err


def test_verify_energy(tmp_path):
    js = str(tmp_path / "e.json")
    assert run_cli("verify", "--suite", "energy", "--function", MONOMIAL,
                   "--json", js) == EXIT_OK
    assert _statuses(js) == {"binomial_energy_identity": "pass",
                             "energy_derivative_relation": "pass",
                             "primitive_concavity": "pass",
                             "lowest_level_lelong_limit": "pass"}


def test_verify_needs_function(capsys):
    assert run_cli("verify", "--suite", "energy") == EXIT_USAGE
    assert "needs --function" in capsys.readouterr().err


def test_thread_count_does_not_change_payload(tmp_path, monkeypatch):
    a, b = str(tmp_path / "a.json"), str(tmp_path / "b.json")
    monkeypatch.setenv("MAMASS_THREADS", "4")
    assert run_cli("verify", "--suite", "frames", "--function", MONOMIAL,
                   "--json", a) == EXIT_OK
    monkeypatch.setenv("MAMASS_THREADS", "1")
    assert run_cli("verify", "--suite", "frames", "--function", MONOMIAL,
                   "--json", b) == EXIT_OK
    da, db = json.load(open(a)), json.load(open(b))
    da["config"] = db["config"] = None
    assert da == db


def test_console_script_installed():
    proc = subprocess.run([sys.executable, "-m", "hopfmass.cli",
                           "constants", "--max-n", "1"],
                          capture_output=True, text=True)
    assert proc.returncode == EXIT_OK
    assert proc.stdout.splitlines()[1].split() == ["0", "1", "-"]
