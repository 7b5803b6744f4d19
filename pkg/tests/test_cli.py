import json
import math
import subprocess
import sys
from pathlib import Path

import pytest

from packlp.cli import main


def _run(tmp_path, *argv, name="out.json"):
    out = tmp_path / name
    code = main(list(argv) + ["--out", str(out)])
    return code, (json.loads(out.read_text()) if out.exists() else None)


def test_bound_line(tmp_path):
    code, d = _run(tmp_path, "bound", "--geometry", "euclidean", "--n", "1", "--radius", "0.5")
    assert code == 0
    assert d["bound"] == pytest.approx(1.0, abs=1e-9)
    assert d["status"] == "certified"


def test_certify_accepts_emitted_certificate(tmp_path):
    _run(tmp_path, "bound", "--geometry", "euclidean", "--n", "1", "--radius", "0.5", name="cert.json")
    code, rep = _run(tmp_path, "certify", str(tmp_path / "cert.json"), name="check.json")
    assert code == 0
    assert rep["status"] == "certified"
    assert rep["input_bound"] == pytest.approx(rep["bound"], rel=1e-12)


def test_certify_rejects_tampered_certificate(tmp_path):
    _run(tmp_path, "bound", "--geometry", "euclidean", "--n", "1", "--radius", "0.5", name="cert.json")
    d = json.loads((tmp_path / "cert.json").read_text())
    d["coefficients"] = [-c for c in d["coefficients"]]
    (tmp_path / "bad.json").write_text(json.dumps(d))
    code, rep = _run(tmp_path, "certify", str(tmp_path / "bad.json"), name="check.json")
    assert code == 1 and rep["status"] == "rejected"


def test_replay_is_byte_identical(tmp_path):
    cfg = tmp_path / "run.json"
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["bound", "--geometry", "euclidean", "--n", "2", "--radius", "0.5", "--degree", "12",
                 "--save-config", str(cfg), "--out", str(a)]) == 0
    assert main(["bound", "--config", str(cfg), "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert json.loads(cfg.read_text())["subcommand"] == "bound"


def test_timestamp_is_opt_in(tmp_path):
    _, d = _run(tmp_path, "density", "--lattice", "A2")
    assert "_run" not in d
    _, d = _run(tmp_path, "density", "--lattice", "A2", "--timestamp")
    assert "timestamp" in d["_run"]


def test_density(tmp_path):
    code, d = _run(tmp_path, "density", "--lattice", "A2")
    assert code == 0
    assert d["density"] == pytest.approx(math.pi / math.sqrt(12), rel=1e-12)
    assert d["lambda1"] == pytest.approx(1.0)


def test_density_bad_lattice(tmp_path):
    code, _ = _run(tmp_path, "density", "--lattice", str(tmp_path / "missing.json"))
    assert code == 2


def test_kissing(tmp_path):
    code, d = _run(tmp_path, "kissing")
    assert code == 0
    assert 12.0 <= d["delsarte_bound"] <= 13.2
    assert d["lower_anchor"]["points"] == 12 and d["lower_anchor"]["valid"]


def test_transform_closed_vs_quadrature(tmp_path):
    code, d = _run(tmp_path, "transform", "--geometry", "hyperbolic", "--n", "3", "--degree", "4",
                   "--coef", "1", "0.5", "--kind", "hyperbolic_real", "--values", "0.5", "2", "--method", "both")
    assert code == 0
    assert d["max_abs_difference"] <= 1e-7 * max(abs(v) for v in d["closed_form"])


def test_transform_wrong_family(tmp_path):
    code, _ = _run(tmp_path, "transform", "--geometry", "euclidean", "--n", "2", "--kind", "sphere",
                   "--values", "1")
    assert code == 2


def test_abel_roundtrip(tmp_path):
    code, d = _run(tmp_path, "abel", "--dir", "fwd", "--n", "3")
    assert code == 0
    assert d["max_abs_difference"] <= 1e-8
    code, d = _run(tmp_path, "abel", "--dir", "inv", "--n", "3", "--t", "0", "1", "2")
    assert code == 0 and len(d["values"]) == 3


def test_abel_bad_dimension(tmp_path):
    code, _ = _run(tmp_path, "abel", "--n", "1")
    assert code == 2


@pytest.mark.parametrize("argv", [
    ["bound", "--geometry", "euclidean", "--n", "1", "--radius", "-1"],
    ["bound", "--geometry", "sphere", "--n", "1", "--radius", "0.5"],
    ["certify", "/nonexistent/cert.json"],
    ["selftest", "nosuchmodule"],
])
def test_usage_errors_exit_2(argv):
    assert main(argv) == 2


def test_argparse_error_exits_2():
    with pytest.raises(SystemExit) as exc:
        main(["bound", "--geometry", "torus"])
    assert exc.value.code == 2


def test_budget_exhausted_exit_1(tmp_path):
    code, d = _run(tmp_path, "bound", "--geometry", "euclidean", "--n", "2", "--radius", "0.5",
                   "--degree", "0", "--budget", "1")
    assert code == 1
    assert d["status"] == "budget_exhausted"


def test_selftest_all(capsys):
    assert main(["selftest", "all"]) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out and "PASS" in out


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "packlp.cli", "density", "--lattice", "Z:2"],
                          capture_output=True, text=True, check=True)
    assert json.loads(proc.stdout)["density"] == pytest.approx(math.pi / 4)


DOCS = Path(__file__).resolve().parent.parent / "docs"


def _validate(doc, schema_name):
    jsonschema = pytest.importorskip("jsonschema")
    jsonschema.validate(doc, json.loads((DOCS / schema_name).read_text()))


@pytest.mark.parametrize("argv", [
    ["bound", "--geometry", "euclidean", "--n", "1", "--radius", "0.5"],
    ["bound", "--geometry", "sphere", "--n", "2", "--radius", "0.5235987755982988", "--degree", "10"],
    ["bound", "--geometry", "hyperbolic", "--n", "3", "--radius", "0.5", "--degree", "12"],
])
def test_outputs_match_schemas(tmp_path, argv):
    cfg = tmp_path / "cfg.json"
    code, cert = _run(tmp_path, *argv, "--save-config", str(cfg))
    assert code == 0
    _validate(cert, "certificate.schema.json")
    _validate(json.loads(cfg.read_text()), "runconfig.schema.json")
    _, rep = _run(tmp_path, "certify", str(tmp_path / "out.json"), name="check.json")
    _validate(rep, "certificate.schema.json")


def test_density_schema(tmp_path):
    for name in ("Z:3", "A2", "D4", "E8"):
        _, d = _run(tmp_path, "density", "--lattice", name)
        _validate(d, "density.schema.json")
