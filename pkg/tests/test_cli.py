import json

import pytest

from firecausal.cli import EXIT_CONVERGENCE, EXIT_IO, EXIT_OK, EXIT_USAGE, main
from firecausal import load_csv


def run(argv, capsys):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


@pytest.fixture
def synth_csv(tmp_path):
    out = tmp_path / "data"
    assert main(["synth", "--n", "144", "--out", str(out)]) == EXIT_OK
    return str(out / "synthetic.csv")


def test_usage_error_exit_code(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["study", "--kind", "bogus"])
    assert exc.value.code == EXIT_USAGE
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == EXIT_USAGE


def test_synth_file_shape(tmp_path, capsys):
    out = tmp_path / "o"
    code, stdout, _ = run(["synth", "--n", "144", "--out", str(out)], capsys)
    assert code == EXIT_OK
    lines = (out / "synthetic.csv").read_text().splitlines()
    assert len(lines) == 145
    assert lines[0] == "W,r,L,fc,K,C,P,FR"
    assert "| Average |" in stdout


def test_synth_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    run(["synth", "--n", "100", "--out", str(a)], capsys)
    run(["synth", "--n", "100", "--out", str(b)], capsys)
    assert (a / "synthetic.csv").read_bytes() == (b / "synthetic.csv").read_bytes()


def test_summarize_outputs(tmp_path, synth_csv, capsys):
    out = tmp_path / "s"
    code, stdout, _ = run(["summarize", "--data", synth_csv, "--out", str(out)], capsys)
    assert code == EXIT_OK
    md = (out / "summary.md").read_text()
    payload = json.loads((out / "summary.json").read_text())
    assert set(payload["columns"]) == {"W", "r", "L", "fc", "K", "C", "P", "FR"}
    # same numbers in both formats
    mean_w = payload["columns"]["W"]["mean"]
    assert f"{mean_w:.4f}" in md


def test_summarize_missing_data_exit_io(tmp_path, capsys):
    code, _, err = run(["summarize", "--data", str(tmp_path / "nope.csv")], capsys)
    assert code == EXIT_IO
    assert "error" in err


def test_discover_outputs_and_determinism(tmp_path, synth_csv, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    code, stdout, _ = run(["discover", "--data", synth_csv, "--out", str(a)], capsys)
    assert code == EXIT_OK
    assert stdout.startswith("digraph")
    run(["discover", "--data", synth_csv, "--out", str(b)], capsys)
    assert (a / "dag.dot").read_bytes() == (b / "dag.dot").read_bytes()
    assert (a / "dag.json").read_bytes() == (b / "dag.json").read_bytes()


def test_discover_forbid_all(tmp_path, synth_csv, capsys):
    names = ["W", "r", "L", "fc", "K", "C", "P", "FR"]
    constraints = {
        "required": [],
        "forbidden": [[u, v] for u in names for v in names if u != v],
    }
    cpath = tmp_path / "c.json"
    cpath.write_text(json.dumps(constraints))
    out = tmp_path / "o"
    code, stdout, _ = run(
        ["discover", "--data", synth_csv, "--constraints", str(cpath), "--out", str(out)],
        capsys,
    )
    assert code == EXIT_OK
    assert "->" not in (out / "dag.dot").read_text()


def test_study_hypothetical_schema(tmp_path, synth_csv, capsys):
    out = tmp_path / "o"
    code, stdout, _ = run(
        ["study", "--data", synth_csv, "--kind", "hypothetical", "--out", str(out)],
        capsys,
    )
    assert code == EXIT_OK
    rows = json.loads((out / "study.json").read_text())
    assert [r["treatment"] for r in rows] == ["W", "r", "L", "fc", "K", "C", "P"]
    header = (out / "study.md").read_text().splitlines()[0]
    for col in (
        "Treatment variable",
        "Mean value",
        "p-value",
        "Random Common Cause",
        "Data Subset Refuter",
        "Placebo Treatment",
    ):
        assert col in header


def test_study_deterministic(tmp_path, synth_csv, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        code, _, _ = run(
            ["study", "--data", synth_csv, "--kind", "domain", "--out", str(out)], capsys
        )
        assert code == EXIT_OK
    assert (a / "study.json").read_bytes() == (b / "study.json").read_bytes()
    assert (a / "study.md").read_bytes() == (b / "study.md").read_bytes()


def test_compare_fix_and_determinism(tmp_path, synth_csv, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        code, _, _ = run(
            ["compare", "--data", synth_csv, "--fix", "W", "--out", str(out)], capsys
        )
        assert code == EXIT_OK
    assert (a / "compare_plot.csv").read_bytes() == (b / "compare_plot.csv").read_bytes()
    assert (a / "compare.json").read_bytes() == (b / "compare.json").read_bytes()
    payload = json.loads((a / "compare.json").read_text())
    assert {m["method"] for m in payload["methods"]} == {"linear_regression", "bagged_trees"}
    assert payload["causal"][0]["treatment"] == "W"


def test_compare_fix_nothing_validation_only(tmp_path, synth_csv, capsys):
    out = tmp_path / "o"
    code, stdout, _ = run(["compare", "--data", synth_csv, "--out", str(out)], capsys)
    assert code == EXIT_OK
    assert "validation only" in stdout


def test_env_var_default_out(tmp_path, synth_csv, capsys, monkeypatch):
    monkeypatch.setenv("FIRECAUSAL_OUT", str(tmp_path / "envout"))
    code, _, _ = run(["summarize", "--data", synth_csv], capsys)
    assert code == EXIT_OK
    assert (tmp_path / "envout" / "summary.md").exists()
