import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from girp.cli import main

SERVER = str(Path(__file__).parent / "fixture_server.py")
GOLDEN = Path(__file__).parent / "golden"


@pytest.fixture()
def synth_dir(tmp_path):
    out = tmp_path / "data"
    code = main(["synth", "--preset", "two-rule", "--rows", "400",
                 "--seed", "3", "--out-dir", str(out)])
    assert code == 0
    return out


def build_args(data_dir: Path, out_dir: Path, *extra: str) -> list[str]:
    return ["build",
            "--features", str(data_dir / "features.csv"),
            "--contributions", str(data_dir / "contributions.csv"),
            "--schema", str(data_dir / "schema.json"),
            "--out", str(out_dir / "tree.json"), *extra]


def test_synth_writes_fixture_files(synth_dir):
    for name in ("features.csv", "contributions.csv", "schema.json", "truth.json"):
        assert (synth_dir / name).exists()
    truth = json.loads((synth_dir / "truth.json").read_text())
    assert len(truth["rules"]) == 2


def test_build_pipeline(synth_dir, tmp_path):
    out = tmp_path / "out"
    out.mkdir()
    code = main(build_args(synth_dir, out, "--min-node", "10",
                           "--sequence", str(out / "seq.json"),
                           "--dot", str(out / "tree.dot")))
    assert code == 0
    tree = json.loads((out / "tree.json").read_text())
    assert tree["tree"]["split"]["var_name"] == "x2"
    report = json.loads((out / "report.json").read_text())
    assert report["chosen_k"] == tree["chosen_k"]
    assert len(report["per_tree"]) == report["sequence_length"]
    seq = json.loads((out / "seq.json").read_text())
    assert len(seq["trees"]) == len(seq["lambdas"]) + 1
    assert (out / "tree.dot").read_text().startswith("digraph")


def test_build_missing_file_exits_2(tmp_path, capsys):
    code = main(["build", "--features", str(tmp_path / "nope.csv"),
                 "--contributions", str(tmp_path / "nope2.csv"),
                 "--schema", str(tmp_path / "nope.json"),
                 "--out", str(tmp_path / "tree.json")])
    assert code == 2
    assert "error" in capsys.readouterr().err


def test_build_bad_data_exits_2(synth_dir, tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    lines = (synth_dir / "contributions.csv").read_text().splitlines()
    fields = lines[1].split(",")
    fields[1] = "inf"
    lines[1] = ",".join(fields)
    bad.write_text("\n".join(lines) + "\n")
    code = main(["build", "--features", str(synth_dir / "features.csv"),
                 "--contributions", str(bad),
                 "--schema", str(synth_dir / "schema.json"),
                 "--out", str(tmp_path / "tree.json")])
    assert code == 2


def test_config_precedence(synth_dir, tmp_path):
    config = tmp_path / "config.json"
    config.write_text(json.dumps({"min_node_size": 10, "seed": 3}))
    out1 = tmp_path / "a"
    out1.mkdir()
    code = main(build_args(synth_dir, out1, "--config", str(config)))
    assert code == 0
    report = json.loads((out1 / "report.json").read_text())
    assert report["seed"] == 3
    out2 = tmp_path / "b"
    out2.mkdir()
    code = main(build_args(synth_dir, out2, "--config", str(config), "--seed", "9"))
    assert code == 0
    report2 = json.loads((out2 / "report.json").read_text())
    assert report2["seed"] == 9


def test_explain_then_build_round_trip(synth_dir, tmp_path):
    contribs_out = tmp_path / "contribs.csv"
    code = main(["explain",
                 "--features", str(synth_dir / "features.csv"),
                 "--schema", str(synth_dir / "schema.json"),
                 "--cmd", f"{sys.executable} {SERVER} --model linear "
                          f"--weights 1,0,0,0,2,0 --bias 0.5",
                 "--out", str(contribs_out)])
    assert code == 0
    header = contribs_out.read_text().splitlines()[0]
    assert header.endswith("__predicted_score")
    code = main(["build", "--features", str(synth_dir / "features.csv"),
                 "--contributions", str(contribs_out),
                 "--schema", str(synth_dir / "schema.json"),
                 "--min-node", "10",
                 "--out", str(tmp_path / "tree.json")])
    assert code == 0


def test_explain_unreachable_endpoint_exits_4(synth_dir, tmp_path, capsys):
    code = main(["explain",
                 "--features", str(synth_dir / "features.csv"),
                 "--schema", str(synth_dir / "schema.json"),
                 "--cmd", "/no/such/binary",
                 "--out", str(tmp_path / "c.csv")])
    assert code == 4
    assert "endpoint" in capsys.readouterr().err


def test_explain_server_death_exits_4(synth_dir, tmp_path):
    code = main(["explain",
                 "--features", str(synth_dir / "features.csv"),
                 "--schema", str(synth_dir / "schema.json"),
                 "--cmd", f"{sys.executable} {SERVER} --fail-after 2",
                 "--out", str(tmp_path / "c.csv")])
    assert code == 4


def test_render_roundtrip(synth_dir, tmp_path, capsys):
    out = tmp_path / "out"
    out.mkdir()
    assert main(build_args(synth_dir, out, "--min-node", "10")) == 0
    assert main(["render", "--tree", str(out / "tree.json"),
                 "--format", "ascii"]) == 0
    text = capsys.readouterr().out
    assert "x2 < 0.5" in text
    assert main(["render", "--tree", str(out / "tree.json"),
                 "--format", "dot", "--out", str(out / "r.dot")]) == 0
    assert (out / "r.dot").read_text().startswith("digraph")
    assert main(["render", "--tree", str(out / "tree.json"),
                 "--format", "json", "--out", str(out / "r.json")]) == 0
    assert json.loads((out / "r.json").read_text())["tree"]["node_id"] == 0


def test_render_max_levels(synth_dir, tmp_path, capsys):
    out = tmp_path / "out"
    out.mkdir()
    assert main(build_args(synth_dir, out, "--min-node", "10")) == 0
    assert main(["render", "--tree", str(out / "tree.json"),
                 "--format", "ascii", "--max-levels", "1"]) == 0
    text = capsys.readouterr().out
    assert "…" in text


def test_cli_entry_point_runs():
    proc = subprocess.run([sys.executable, "-m", "girp.cli", "--help"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "build" in proc.stdout


def test_golden_dot_for_handcrafted_dataset(tmp_path):
    """Byte-stable pipeline output for a dataset with no RNG involvement."""
    data = GOLDEN / "input"
    out = tmp_path / "out"
    out.mkdir()
    code = main(["build", "--features", str(data / "features.csv"),
                 "--contributions", str(data / "contributions.csv"),
                 "--schema", str(data / "schema.json"),
                 "--min-node", "2", "--validation-fraction", "0.25",
                 "--seed", "42",
                 "--out", str(out / "tree.json"),
                 "--dot", str(out / "tree.dot")])
    assert code == 0
    assert (out / "tree.dot").read_bytes() == (GOLDEN / "tree.dot").read_bytes()
    assert (out / "tree.json").read_bytes() == (GOLDEN / "tree.json").read_bytes()


def test_invariant_breach_exits_3(synth_dir, tmp_path, monkeypatch, capsys):
    import girp.cli as cli_mod
    from girp.grow import InvariantError

    def broken(*args, **kwargs):
        raise InvariantError("forced for the exit-code contract")

    monkeypatch.setattr(cli_mod, "validate_tree", broken)
    code = main(build_args(synth_dir, tmp_path))
    assert code == 3
    assert "invariant" in capsys.readouterr().err
