import json

import pytest

from dgcc.cli import main, _parse_values
from dgcc.instance import GeneratorSpec, generate_instance, load_instance, save_instance


@pytest.fixture
def gen_spec_file(tmp_path):
    spec = {"m": 2, "cluster_sizes": [5, 5], "margin": 1.5, "name": "cli-demo"}
    path = tmp_path / "gen.json"
    path.write_text(json.dumps(spec))
    return path


@pytest.fixture
def instance_file(tmp_path):
    inst = generate_instance(GeneratorSpec(m=2, cluster_sizes=(6, 6), name="cli-inst"), seed=4)
    path = tmp_path / "inst.json"
    save_instance(inst, path)
    return path


def test_parse_values():
    assert _parse_values("1..4") == (1, 2, 3, 4)
    assert _parse_values("2,6,10") == (2, 6, 10)


def test_generate_and_check(gen_spec_file, tmp_path, capsys):
    out = tmp_path / "inst.json"
    assert main(["generate", "--spec", str(gen_spec_file), "--seed", "5", "--out", str(out)]) == 0
    inst = load_instance(out)
    assert inst.n_pois == 10

    assert main(["check", str(out)]) == 0
    lines = [l for l in capsys.readouterr().out.splitlines() if l.startswith("{")]
    assert len(lines) == 2
    reports = [json.loads(l) for l in lines]
    assert {r["channel"] for r in reports} == {"time", "cost"}
    assert all(r["satisfied"] for r in reports)


def test_check_single_channel(instance_file, capsys):
    assert main(["check", str(instance_file), "--channel", "cost"]) == 0
    lines = [l for l in capsys.readouterr().out.splitlines() if l.startswith("{")]
    assert len(lines) == 1
    assert json.loads(lines[0])["channel"] == "cost"


def test_generate_determinism(gen_spec_file, tmp_path):
    out_a, out_b = tmp_path / "a.json", tmp_path / "b.json"
    main(["generate", "--spec", str(gen_spec_file), "--seed", "9", "--out", str(out_a)])
    main(["generate", "--spec", str(gen_spec_file), "--seed", "9", "--out", str(out_b)])
    assert out_a.read_bytes() == out_b.read_bytes()


def test_run_writes_outputs(instance_file, tmp_path):
    cfg = {"n": 8, "M": 3, "I_bas": 40, "I_add": 40, "max_fes": 600, "L": 2}
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(cfg))
    out = tmp_path / "run"
    code = main(
        ["run", "--instance", str(instance_file), "--days", "4", "--config", str(cfg_path),
         "--seed", "12", "--out", str(out)]
    )
    assert code == 0
    assert (out / "archive.csv").exists()
    assert (out / "history.jsonl").exists()
    summary = json.loads((out / "summary.json").read_text())
    assert summary["variant"] == "dgcc"
    assert summary["seed"] == 12
    assert summary["fes_total"] <= 600


def test_run_baseline_and_ablation(instance_file, tmp_path):
    cfg = {"n": 8, "M": 3, "I_bas": 40, "I_add": 40, "max_fes": 600}
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(cfg))
    out_b = tmp_path / "baseline"
    assert main(
        ["run", "--instance", str(instance_file), "--days", "4", "--config", str(cfg_path),
         "--baseline", "global-nsga2", "--out", str(out_b)]
    ) == 0
    assert json.loads((out_b / "summary.json").read_text())["variant"] == "global-nsga2"
    assert (out_b / "history.jsonl").read_text() == ""

    out_a = tmp_path / "ablated"
    assert main(
        ["run", "--instance", str(instance_file), "--days", "4", "--config", str(cfg_path),
         "--ablation", "structure", "--ablation", "inheritance", "--out", str(out_a)]
    ) == 0


def test_run_determinism_byte_identical(instance_file, tmp_path):
    cfg = {"n": 8, "M": 3, "I_bas": 40, "I_add": 40, "max_fes": 600, "L": 2}
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(cfg))
    outs = []
    for name in ("r1", "r2"):
        out = tmp_path / name
        main(["run", "--instance", str(instance_file), "--days", "4", "--config", str(cfg_path),
              "--seed", "3", "--out", str(out)])
        outs.append(out)
    assert (outs[0] / "archive.csv").read_bytes() == (outs[1] / "archive.csv").read_bytes()
    assert (outs[0] / "history.jsonl").read_bytes() == (outs[1] / "history.jsonl").read_bytes()


def test_bench_and_report(instance_file, tmp_path, capsys):
    spec = {
        "instances": [str(instance_file)],
        "durations": [4],
        "repeats": 2,
        "variants": ["dgcc", "global-nsga2"],
        "seed_base": 5,
        "config": {"n": 8, "M": 3, "I_bas": 40, "I_add": 40, "max_fes": 600, "L": 2},
    }
    spec_path = tmp_path / "spec.json"
    spec_path.write_text(json.dumps(spec))
    out = tmp_path / "bench"
    assert main(["bench", "--spec", str(spec_path), "--out", str(out)]) == 0
    assert (out / "results.csv").exists()

    capsys.readouterr()
    assert main(["report", str(out)]) == 0
    text = capsys.readouterr().out
    assert "dgcc" in text and "global-nsga2" in text


def test_sweep_cli(instance_file, tmp_path):
    cfg = {"n": 8, "M": 3, "I_bas": 40, "I_add": 40, "max_fes": 600}
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(cfg))
    out = tmp_path / "sweep"
    code = main(
        ["sweep", "--param", "L", "--values", "1,3", "--instance", str(instance_file),
         "--days", "4", "--repeats", "1", "--config", str(cfg_path), "--out", str(out)]
    )
    assert code == 0
    curves = list(out.glob("curve_L_*.csv"))
    assert len(curves) == 1
    lines = curves[0].read_text().splitlines()
    assert lines[0] == "L,normalized_hv"
    assert len(lines) == 3


def test_error_paths(tmp_path, capsys):
    assert main(["check", str(tmp_path / "missing.json")]) == 2
    assert "error:" in capsys.readouterr().err
