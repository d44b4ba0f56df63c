import json
import re
import subprocess
import sys
from fractions import Fraction
from pathlib import Path

import pytest

from superslow import document
from superslow.cli import EXIT_MISMATCH, EXIT_NONCONVERGENCE, EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, main

GOLDEN = Path(__file__).parent / "golden"


def run(args, capsys):
    code = main(args)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_bad_arguments_exit_1(capsys):
    assert run(["derive"], capsys)[0] == EXIT_USAGE
    assert run(["derive", "--system", "nonsense"], capsys)[0] == EXIT_USAGE
    assert run(["derive", "--system", "averaged", "--noise-modes", "-1"], capsys)[0] == EXIT_USAGE


def test_non_convergence_exit_2(capsys):
    code, _, err = run(["derive", "--system", "averaged", "--max-iter", "2"], capsys)
    assert code == EXIT_NONCONVERGENCE
    assert "not zero" in err


def test_iteration_cap_from_environment(capsys, monkeypatch):
    monkeypatch.setenv("SSM_MAX_ITER", "1")
    assert run(["derive", "--system", "averaged"], capsys)[0] == EXIT_NONCONVERGENCE


def test_json_round_trip(tmp_path, capsys, averaged_model):
    out = tmp_path / "m.json"
    assert run(["derive", "--system", "averaged", "--format", "json", "--out", str(out)], capsys)[0] == EXIT_OK
    m = document.load(out)
    assert m.g == averaged_model.g and m.u == averaged_model.u
    assert document.dumps(document.loads(document.dumps(m))) == document.dumps(m)
    doc = json.loads(out.read_text())
    assert doc["metadata"]["trunc_order"] == 6
    lin = [t for t in doc["terms"] if t["a_pow"] == 1 and t["lam_pow"] == 1 and not t["noise"]]
    assert lin == [{"coeff": {"num": "1", "den": "1"}, "small_pow": 2, "eps_pow": 0, "rooteps_pow": 0,
                    "sigma_pow": 0, "lam_pow": 1, "a_pow": 1, "mode": 0, "noise": []}]


def test_fastslow_document_round_trip(fastslow_model):
    back = document.loads(document.dumps(fastslow_model))
    assert back.g == fastslow_model.g
    assert back.u == fastslow_model.u
    assert back.v == fastslow_model.v


def test_surd_terms_round_trip():
    from superslow.exprcore import Expression

    e = Expression.monomial(Fraction(3, 7), surd=10, a=1)
    assert document.terms_to_expression(document.expression_to_terms(e)) == e


def test_malformed_documents():
    with pytest.raises(document.DocumentError):
        document.loads("{not json")
    with pytest.raises(document.DocumentError):
        document.loads(json.dumps({"system": "averaged"}))
    with pytest.raises(document.DocumentError):
        document.loads(json.dumps({"system": "other", "terms": [], "metadata": {}}))


def _rationals(text):
    return sorted(re.findall(r"\d+/\d+", text))


def test_text_and_latex_share_coefficients(capsys):
    _, text, _ = run(["derive", "--system", "fastslow", "--format", "text"], capsys)
    _, latex, _ = run(["derive", "--system", "fastslow", "--format", "latex"], capsys)
    assert latex.startswith("\\dot a = ")
    body = text.split("gssm = ", 1)[1]
    fracs_latex = sorted(f"{n}/{d}" for n, d in re.findall(r"\\t?frac\{(\d+)\}\{(\d+)\}", latex))
    # coefficients and convolution rates, as multisets
    assert _rationals(body) == fracs_latex


def test_zero_noise_modes_is_deterministic(capsys):
    _, text, _ = run(["derive", "--system", "averaged", "--noise-modes", "0"], capsys)
    assert "phi" not in text and "sigma" not in text


def test_transform_prints_coefficients(tmp_path, capsys):
    m = tmp_path / "fs.json"
    run(["derive", "--system", "fastslow", "--format", "json", "--out", str(m)], capsys)
    code, out, _ = run(["transform", "--in", str(m)], capsys)
    assert code == EXIT_OK
    lines = out.splitlines()
    assert lines[0] == "c20 = 0"
    assert lines[1] == "c21mean = -0.0030245*eps - 0.0030776*eps*lam - 0.0008697*eps^2"
    assert lines[2].startswith("c21 = (0.000006132 + 0.000014796*lam")
    code, out, _ = run(["transform", "--in", str(m), "--format", "json"], capsys)
    assert json.loads(out)["c20"] == "0"


def test_transform_missing_file(capsys, tmp_path):
    assert run(["transform", "--in", str(tmp_path / "nope.json")], capsys)[0] == EXIT_USAGE


def test_validate_long_rule(capsys):
    code, out, _ = run(["validate", "long-rule", "--i", "1", "--j", "3", "--k", "7.6", "--seed", "1"], capsys)
    rep = json.loads(out)
    assert code == EXIT_OK and rep["pass"]
    assert abs(rep["estimate"]["mean_rate"]) < 3 * rep["stderr"]["mean_rate"]


def test_validate_failure_exit_4(capsys):
    code, out, _ = run(["validate", "convolution", "--t-end", "2", "--tol", "1e-9"], capsys)
    assert code == EXIT_VALIDATION
    assert json.loads(out)["pass"] is False


def test_regress_clean_tree(capsys):
    code, out, _ = run(["regress", "--golden", str(GOLDEN)], capsys)
    assert code == EXIT_OK
    assert "averaged.json: ok" in out and "fastslow.json: ok" in out


def test_regress_detects_mismatch(tmp_path, capsys):
    doc = json.loads((GOLDEN / "averaged.json").read_text())
    doc["terms"][0]["coeff"]["num"] = str(int(doc["terms"][0]["coeff"]["num"]) + 1)
    (tmp_path / "averaged.json").write_text(json.dumps(doc))
    code, out, _ = run(["regress", "--golden", str(tmp_path)], capsys)
    assert code == EXIT_MISMATCH
    assert "golden" in out


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "superslow", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.startswith("superslow ")
