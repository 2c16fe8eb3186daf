import argparse
import hashlib
import json
from importlib import resources

import pytest

from tttbench import cli

EXAMPLES = str(resources.files("tttbench.data").joinpath("examples.jsonl"))


def run(*argv):
    return cli.main([str(a) for a in argv])


def test_generate_small_and_deterministic(tmp_path):
    assert run("generate", "--games", "oTTT", "--per-game", 10, "--out", tmp_path / "a") == 0
    assert run("generate", "--games", "oTTT", "--per-game", 10, "--out", tmp_path / "b") == 0
    a, b = tmp_path / "a", tmp_path / "b"
    assert len((a / "dataset.jsonl").read_text().splitlines()) == 10
    for name in ("dataset.jsonl", "pool_summary.json", "verification.json", "manifest.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes(), name
    manifest = json.loads((a / "manifest.json").read_text())
    for art in manifest["artifacts"]:
        assert hashlib.sha256((a / art["path"]).read_bytes()).hexdigest() == art["sha256"]
    summary = json.loads((a / "pool_summary.json").read_text())
    assert summary["pools"]["pool_sizes"] == {"oTTT": {"4": 700, "5": 624}}
    assert summary["dataset"]["total"] == 10


def test_game_subset_does_not_change_draws(tmp_path):
    run("generate", "--games", "oTTT", "--per-game", 6, "--out", tmp_path / "a")
    run("generate", "--games", "oTTT,cTTT", "--per-game", 6, "--out", tmp_path / "b")
    a = (tmp_path / "a" / "dataset.jsonl").read_text().splitlines()
    b = (tmp_path / "b" / "dataset.jsonl").read_text().splitlines()
    assert b[:6] == a and len(b) == 12


def test_generate_options(tmp_path):
    out = tmp_path / "o"
    assert run("generate", "--games", "cTTT", "--per-game", 5, "--no-suffix", "--preamble", "reference",
               "--strategy", "uniform", "--backend", "numpy", "--out", out) == 0  # fmt: skip
    rows = [json.loads(x) for x in (out / "dataset.jsonl").read_text().splitlines()]
    assert all(r["question"].endswith("play next?") for r in rows)
    assert all(r["generator_metadata"]["preamble"] == "reference" for r in rows)


def test_config_file_and_env_precedence(tmp_path, monkeypatch):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# options\nper-game = 4\nseed = 9\ngames = dTTT\n", encoding="utf-8")
    monkeypatch.setenv("TTTBENCH_PER_GAME", "7")
    monkeypatch.setenv("TTTBENCH_STRATEGY", "uniform")
    ns = cli.resolve(cli.build_parser().parse_args(["generate", "--config", str(cfg), "--out", "x", "--seed", "3"]))
    assert ns.seed == 3  # flag beats config
    assert ns.per_game == 4  # config beats env
    assert ns.strategy == "uniform"  # env beats default
    assert ns.games == ["dTTT"]
    assert ns.jobs == 1


def test_bad_config(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("colour = blue\n", encoding="utf-8")
    with pytest.raises(SystemExit) as e:
        run("generate", "--config", cfg, "--out", tmp_path)
    assert e.value.code == 2
    with pytest.raises(cli.UsageError):
        cli.resolve(argparse.Namespace(config=None, seed=None), environ={"TTTBENCH_SEED": "abc"})


@pytest.mark.parametrize(
    "argv",
    [
        ["generate", "--out", "x", "--bogus"],
        ["generate", "--out", "x", "--suffix", "s", "--no-suffix"],
        ["generate", "--out", "x", "--games", "xTTT"],
        ["grade", "d.jsonl", "--out", "x", "--ledger", "l", "--records", "r"],
        ["evaluate", "d.jsonl", "--out", "x", "--model", "m", "--mock-script", "s.json", "--base-url", "http://h"],
        ["evaluate", "d.jsonl", "--out", "x", "--model", "m"],
    ],
)
def test_usage_errors_exit_2(argv, tmp_path, capsys):
    (tmp_path / "d.jsonl").write_text("", encoding="utf-8")
    with pytest.raises(SystemExit) as e:
        cli.main([a.replace("d.jsonl", str(tmp_path / "d.jsonl")).replace("x", str(tmp_path / "o")) if a in ("d.jsonl", "x") else a for a in argv])
    assert e.value.code == 2
    assert capsys.readouterr().err.strip()


def test_verify_examples_and_tampered(tmp_path, capsys):
    assert run("verify", EXAMPLES, "--out", tmp_path / "v") == 0
    audit = json.loads((tmp_path / "v" / "audit.json").read_text())
    assert audit["counts"] == {"items": 8, "engine": {"pass": 8}, "oracle": {"pass": 8}}
    lines = open(EXAMPLES, encoding="utf-8").read().splitlines()
    row = json.loads(lines[1])
    row["solutions"] = ["A"]
    row["justification"] = {"A": "Win with A-D-G"}
    bad = tmp_path / "bad.jsonl"
    bad.write_text("\n".join([lines[0], json.dumps(row), *lines[2:]]) + "\n", encoding="utf-8")
    assert run("verify", bad) == 1
    out = capsys.readouterr().out
    assert f"FAIL {row['item_id']}" in out
    assert out.count("FAIL ") == 1


def test_verify_solve_flag(tmp_path):
    small = tmp_path / "small.jsonl"
    small.write_text("".join(x for x in open(EXAMPLES, encoding="utf-8") if '"sTTT"' not in x), encoding="utf-8")
    assert run("verify", small, "--solve", "--out", tmp_path) == 0
    audit = json.loads((tmp_path / "audit.json").read_text())
    assert audit["counts"]["items"] == 6 and audit["failures"] == []


def test_data_errors_exit_4(tmp_path):
    assert run("verify", tmp_path / "missing.jsonl") == 4
    bad = tmp_path / "bad.jsonl"
    bad.write_text("{oops\n", encoding="utf-8")
    assert run("verify", bad) == 4


def test_render(capsys):
    assert run("render", "--game", "oTTT", "--moves", "A", "B", "H", "C") == 0
    out = capsys.readouterr().out
    assert "G: Fork with A-D-G & G-H-I" in out and "○ ● ●" in out
    assert run("render", "--dataset", EXAMPLES, "--item", json.loads(open(EXAMPLES).readline())["item_id"]) == 0
    assert "Where should Alice play next?" in capsys.readouterr().out


def _mock_script(path, items_path):
    items = [json.loads(x) for x in open(items_path, encoding="utf-8").read().splitlines()]
    script = {
        "default": "hmm",
        "responses": {
            it["item_id"]: [f"\\boxed{{{it['solutions'][0]}}}", "\\boxed{Y}", "no boxed answer", f"\\boxed{{{it['solutions'][-1]}}}"]
            for it in items
        },
    }
    path.write_text(json.dumps(script), encoding="utf-8")
    return path


def test_evaluate_grade_report_against_mock(tmp_path):
    script = _mock_script(tmp_path / "script.json", EXAMPLES)
    ev = tmp_path / "ev"
    common = ["--mock-script", script, "--model", "mock", "--samples", 4, "--api-key-env", "", "--out", ev]
    assert run("evaluate", EXAMPLES, *common, "--max-requests", 10) == 0
    assert run("evaluate", EXAMPLES, *common) == 0
    records = (ev / "records.jsonl").read_text()
    assert len(records.splitlines()) == 32
    assert run("grade", EXAMPLES, "--records", ev / "records.jsonl", "--model", "mock", "--out", tmp_path / "gr") == 0
    report = json.loads((tmp_path / "gr" / "report.json").read_text())
    assert set(report["items"].values()) == {0.5}
    assert run("report", tmp_path / "gr" / "report.json", "--out", tmp_path / "rp") == 0
    t5 = (tmp_path / "rp" / "table5.csv").read_text().splitlines()
    assert t5[1].startswith("mock,")
    # a second end-to-end pass reproduces the graded output exactly
    ev2 = tmp_path / "ev2"
    assert run("evaluate", EXAMPLES, *common[:-1], ev2) == 0
    assert (ev2 / "records.jsonl").read_text() == records


def test_report_from_reference_table(tmp_path, capsys):
    assert run("report", "--out", tmp_path) == 0
    out = capsys.readouterr().out
    assert "QwQ-32B\toTTT - MATH500\t-2.97" in out
    assert "QwQ-32B\toTTT - AIME2024\t+12.86" in out
    t4 = (tmp_path / "table4.csv").read_text().splitlines()
    assert t4[0] == "model,oTTT,dTTT,cTTT,sTTT,AIME2024,MATH500" and len(t4) == 27


def test_evaluate_network_error_exit_3(tmp_path):
    # nothing listens on port 9 on the loopback interface
    code = run("evaluate", EXAMPLES, "--base-url", "http://127.0.0.1:9/v1", "--model", "m", "--samples", 1,
               "--max-attempts", 1, "--api-key-env", "", "--max-requests", 1, "--out", tmp_path)  # fmt: skip
    assert code == 3


def test_version(capsys):
    with pytest.raises(SystemExit) as e:
        run("--version")
    assert e.value.code == 0 and "tttbench" in capsys.readouterr().out
