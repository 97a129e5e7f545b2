import json

import pytest

from asmflat import check, corpus, is_normal_form, parse
from asmflat.cli import BAD_INPUT, FAILED, OK, USAGE, main


@pytest.fixture
def model_file(tmp_path):
    def write(name):
        p = tmp_path / f"{name}.asm"
        p.write_text(corpus.source(name))
        return p
    return write


def test_flatten_writes_normal_form(model_file, tmp_path, capsys):
    src = model_file("atm")
    out = tmp_path / "atm_flat.asm"
    assert main(["flatten", str(src), "-o", str(out)]) == OK
    flat = parse(out.read_text(), allow_reserved=True)
    assert is_normal_form(flat)[0]
    table = capsys.readouterr().out.splitlines()
    assert table[0].split()[:3] == ["Model", "MCR", "FR"]


def test_flatten_mcr_only_keeps_macro_free_model(model_file, tmp_path):
    src = model_file("gameoflife_mini")
    out = tmp_path / "g.asm"
    assert main(["flatten", str(src), "-o", str(out), "--passes", "MCR", "--stats", "none"]) == OK
    assert parse(out.read_text()) == parse(src.read_text())


def test_flatten_refuses_to_overwrite_input(model_file):
    src = model_file("counter3")
    before = src.read_text()
    assert main(["flatten", str(src), "-o", str(src)]) == USAGE
    assert src.read_text() == before


def test_flatten_to_stdout_and_csv(model_file, tmp_path, capsys):
    src = model_file("mutex")
    csv = tmp_path / "s.csv"
    assert main(["flatten", str(src), "--stats", "csv", "--csv", str(csv)]) == OK
    out, err = capsys.readouterr()
    assert parse(out, allow_reserved=True)
    assert err.startswith("model,MCR,FR,ChR,AR,LR,CaR,NR,TS,RS,Time")
    assert csv.read_text().splitlines()[1].startswith("mutex,")


def test_flatten_output_is_deterministic(model_file, tmp_path):
    src = model_file("philosophers")
    a, b = tmp_path / "a.asm", tmp_path / "b.asm"
    main(["flatten", str(src), "-o", str(a), "--stats", "none"])
    main(["flatten", str(src), "-o", str(b), "--stats", "none"])
    assert a.read_bytes() == b.read_bytes()


def test_bad_pass_and_dependency(model_file):
    src = model_file("atm")
    assert main(["flatten", str(src), "--passes", "XYZ"]) == USAGE
    assert main(["flatten", str(src), "--passes", "LR"]) == USAGE


def test_parse_error_exit_code(tmp_path, capsys):
    p = tmp_path / "bad.asm"
    p.write_text("asm bad\nsignature:\n  controlled a : Boolean\n")
    assert main(["flatten", str(p)]) == BAD_INPUT
    assert "bad.asm:" in capsys.readouterr().err


def test_type_error_json_diagnostics(tmp_path, capsys):
    p = tmp_path / "bad.asm"
    p.write_text(corpus.source("counter3").replace("parity := not(parity)", "inc := true"))
    assert main(["--json-diagnostics", "flatten", str(p)]) == BAD_INPUT
    data = json.loads(capsys.readouterr().err)
    assert data["diagnostics"][0]["code"] == "E_NONCONTROLLED"
    assert data["diagnostics"][0]["line"] > 0


def test_missing_file_and_usage():
    assert main(["flatten", "/nonexistent/x.asm"]) == USAGE
    assert main([]) == USAGE
    assert main(["frobnicate"]) == USAGE
    assert main(["simulate", "x.asm", "--steps", "-1"]) == USAGE


def test_simulate_golden_inputs(model_file, tmp_path, capsys):
    src = model_file("counter3")
    rows = json.loads(corpus.text("counter3.inputs.json"))
    inp = tmp_path / "in.json"
    inp.write_text(json.dumps([{"inc": "true" if r["inc"] else "false"} for r in rows]))
    assert main(["simulate", str(src), "--steps", "20", "--deterministic", "--inputs", str(inp)]) == OK
    assert capsys.readouterr().out == corpus.text("counter3.trace")


def test_simulate_rejects_bad_inputs(model_file, tmp_path):
    src = model_file("counter3")
    inp = tmp_path / "in.json"
    for bad in ([{"inc": 3}], [{"c": 1}], [{"nope": True}], {"inc": True}, [{"inc": True}]):
        inp.write_text(json.dumps(bad))
        assert main(["simulate", str(src), "--steps", "2", "--inputs", str(inp)]) == USAGE


def test_simulate_seed_env(model_file, capsys, monkeypatch):
    src = model_file("philosophers")
    main(["simulate", str(src), "--steps", "8", "--seed", "5"])
    first = capsys.readouterr().out
    monkeypatch.setenv("ASMF_SEED", "5")
    main(["simulate", str(src), "--steps", "8"])
    assert capsys.readouterr().out == first
    monkeypatch.setenv("ASMF_SEED", "five")
    assert main(["simulate", str(src), "--steps", "8"]) == USAGE


def test_scenario_command(model_file, tmp_path, capsys):
    src = model_file("dijkstra_mini")
    scen = tmp_path / "d.scen"
    scen.write_text(corpus.scenario("dijkstra_mini"))
    assert main(["scenario", str(src), str(scen)]) == OK
    assert main(["scenario", str(src), str(scen), "--flatten"]) == OK
    scen.write_text("step; check finished = true;")
    assert main(["scenario", str(src), str(scen)]) == FAILED
    scen.write_text("step")
    assert main(["scenario", str(src), str(scen)]) == BAD_INPUT
    assert "FAIL" in capsys.readouterr().out


def test_diff_command(model_file, capsys):
    src = model_file("elevator")
    assert main(["diff", str(src), "--runs", "100", "--steps", "20", "--seed", "7"]) == OK
    assert capsys.readouterr().out.strip() == "100/100 equivalent"


def test_diff_partial_selection(model_file, capsys):
    src = model_file("landing_gear")
    assert main(["diff", str(src), "--runs", "5", "--steps", "10", "--passes", "MCR,CaR"]) == OK


def test_fuzz_command(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"max_depth": 3, "agents": False}))
    assert main(["fuzz", "--config", str(cfg), "--runs", "10", "--steps", "5", "--seed", "3",
                 "--workers", "1"]) == OK
    assert capsys.readouterr().out.startswith("10/10 cases ok")
    cfg.write_text(json.dumps({"bogus": 1}))
    assert main(["fuzz", "--config", str(cfg), "--runs", "1"]) == USAGE


def test_stats_command(model_file, tmp_path, capsys):
    src = model_file("coffee_vending")
    csv = tmp_path / "s.csv"
    assert main(["stats", str(src), "--csv", str(csv)]) == OK
    out = capsys.readouterr().out
    assert "total" in out and "normal form: yes" in out and "delta%:" in out
    assert csv.read_text().startswith("model,MCR")
