import json

import pytest

from tacodiag import modelio
from tacodiag.cli import EXIT_BUDGET, EXIT_INPUT, EXIT_NOT_CODIAG, EXIT_OK, main
from tacodiag.dta_game import Resource
from tacodiag.fixtures import gen_fixture


@pytest.fixture
def files(tmp_path):
    paths = {}
    for name in ("REMARK", "REMARK-U", "CONF", "CONF-TA"):
        p = tmp_path / f"{name.lower()}.model"
        p.write_text(modelio.write_model(gen_fixture(name).model))
        paths[name] = str(p)
    paths["dir"] = tmp_path
    return paths


def test_validate(files, capsys):
    assert main(["validate", files["REMARK"]]) == EXIT_OK
    assert "ok: TA" in capsys.readouterr().out


def test_validate_reports_position(tmp_path, capsys):
    bad = tmp_path / "bad.model"
    bad.write_text("tacodiag-model 1\nkind FA\nlocations a\nedge a -> on b\n")
    assert main(["validate", str(bad)]) == EXIT_INPUT
    assert f"{bad}:4:" in capsys.readouterr().err


def test_check_delta_and_verify_witness(files, capsys):
    assert main(["check-delta", files["REMARK"], "--delta", "1", "--family", "a"]) == EXIT_OK
    report = files["dir"] / "r.json"
    code = main(["check-delta", files["REMARK-U"], "--delta", "2", "--family", "a", "--report", str(report)])
    assert code == EXIT_NOT_CODIAG
    data = json.loads(report.read_text())
    assert data["verdict"] == "NotCodiagnosable"
    assert main(["verify-witness", files["REMARK-U"], "--family", "a", "--witness", str(report)]) == EXIT_OK
    assert "witness verified" in capsys.readouterr().out


def test_check_and_optimal_delay(files, capsys):
    assert main(["check", files["CONF"], "--family", "a|b"]) == EXIT_NOT_CODIAG
    assert main(["optimal-delay", files["CONF"], "--family", "a,b"]) == EXIT_OK
    assert "optimal delay: 2" in capsys.readouterr().out


def test_budget_exit_code(files):
    assert main(["check-delta", files["CONF-TA"], "--delta", "2", "--family", "a|b", "--budget", "3"]) == EXIT_BUDGET


def test_synthesize_writes_models(files, capsys):
    out = files["dir"] / "diag"
    assert main(["synthesize", files["CONF"], "--delta", "2", "--family", "a,b", "--out", str(out)]) == EXIT_OK
    m = modelio.parse_model((out / "site1.model").read_text())
    assert m.kind == "FA" and m.final
    assert main(["synthesize", files["REMARK"], "--delta", "1", "--family", "a", "--out", str(out)]) == EXIT_INPUT


def test_estimate(files, capsys):
    trace = files["dir"] / "t.trace"
    trace.write_text("2 a\n")
    assert main(["estimate", files["REMARK"], "--site", "1", "--delta", "1", "--trace", str(trace),
                 "--family", "a"]) == EXIT_OK
    assert "verdict: 1" in capsys.readouterr().out
    trace.write_text("2.5 a\n")
    assert main(["estimate", files["REMARK"], "--delta", "1", "--trace", str(trace), "--family", "a"]) == EXIT_INPUT


def test_region_graph(files, capsys):
    out = files["dir"] / "rg.model"
    assert main(["region-graph", files["REMARK"], "--out", str(out)]) == EXIT_OK
    assert modelio.parse_model(out.read_text()).kind == "FA"
    assert main(["region-graph", files["CONF"]]) == EXIT_INPUT


def test_dta_synth(files, capsys):
    res = files["dir"] / "mu.res"
    res.write_text(modelio.write_resources([Resource({"a"}, ("y",), 2, 1)]))
    out = files["dir"] / "dta"
    assert main(["dta-synth", files["REMARK"], "--delta", "1", "--resources", str(res), "--out", str(out)]) == EXIT_OK
    dta = modelio.parse_model((out / "site1.dta.model").read_text())
    assert dta.kind == "TA" and dta.clocks == ("y",)


def test_gen_fixture(tmp_path, capsys):
    assert main(["gen-fixture", "REDUCTION-B(2)", "--out", str(tmp_path), "--seed", "3"]) == EXIT_OK
    assert (tmp_path / "reduction-b-2.model").exists()
    assert (tmp_path / "reduction-b-2.family").exists()
    assert main(["gen-fixture", "NOPE"]) == EXIT_INPUT


def test_fault_types_view(tmp_path, capsys):
    p = tmp_path / "two.model"
    p.write_text(
        "tacodiag-model 1\nkind FA\nalphabet a f1 f2\nlocations 0 1 2\ninitial 0\n"
        "edge 0 -> 1 on f1\nedge 0 -> 2 on f2\nedge 1 -> 1 on a\nedge 2 -> 2 on a\n"
    )
    code = main(["check-delta", str(p), "--delta", "1", "--family", "a", "--fault-types", "f1,f2"])
    out = capsys.readouterr().out
    assert "[f1] NotCodiagnosable" in out and "[f2] NotCodiagnosable" in out
    assert code == EXIT_NOT_CODIAG


def test_usage_errors(capsys):
    assert main([]) == EXIT_INPUT
    assert main(["check-delta", "/nonexistent", "--delta", "1", "--family", "a"]) == EXIT_INPUT
