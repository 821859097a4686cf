import json

import pytest

import app
from llm_client import echo_last_user, with_mock_responder
from pipeline import STATUS_OK, RunRecord, write_runs


def run(argv):
    return app.main([str(a) for a in argv])


def test_evaluate_prints_one_row(capsys, corpus_path, run_paths):
    code = run(["evaluate", "--task", "1.1", "--corpus", corpus_path, "--runs", run_paths["gpt-4.1"], "--format", "md"])
    out = capsys.readouterr().out
    assert code == 0
    assert out.splitlines()[0] == "| Model | SARI | BLEU | FKGL | Compression ratio |"
    assert "| gpt-4.1 | 100.00 | 100.00 | -0.74 | 0.75 |" in out


def test_evaluate_label_override(capsys, corpus_path, run_paths):
    run(["evaluate", "--corpus", corpus_path, "--runs", run_paths["gpt-4.1-nano-ft"], "--label", "nano-ft"])
    assert "| nano-ft | / | / | / | / |" in capsys.readouterr().out


def test_missing_corpus_is_a_usage_error(capsys, run_paths):
    code = run(["evaluate", "--task", "1.1", "--runs", run_paths["gpt-4.1"]])
    err = capsys.readouterr().err
    assert code == 1
    assert "usage:" in err
    assert "--corpus" in err


@pytest.mark.parametrize("argv", [
    ["baselines", "--corpus", "c.jsonl", "--colour"],
    ["evaluate", "--corpus", "c.jsonl", "--runs", "r.jsonl", "--task", "3"],
    ["simplify", "--corpus", "c.jsonl", "--model", "m", "--out", "o.jsonl", "--max-attempts", "0"],
    ["report", "--corpus", "c.jsonl", "--runs", "a=x.jsonl", "a=y.jsonl"],
    ["report", "--corpus", "c.jsonl", "--runs", "a=x.jsonl", "--chart", "chart.txt"],
    [],
])
def test_invalid_arguments_exit_1(argv):
    assert run(argv) == 1


def test_help_exits_0(capsys):
    assert run(["--help"]) == 0
    assert "simplify" in capsys.readouterr().out


def test_baselines(capsys, corpus_path):
    assert run(["baselines", "--corpus", corpus_path]) == 0
    out = capsys.readouterr().out
    assert "| Source | 70.36 | 45.18 | -0.66 | 1.00 |" in out
    assert "| Reference | 100.00 | 100.00 | -0.74 | 0.75 |" in out


def test_report_matches_golden_file(tmp_path, corpus_path, run_paths, fixtures_dir):
    out = tmp_path / "report.md"
    runs = [f"{label}={path}" for label, path in run_paths.items()]
    assert run(["report", "--corpus", corpus_path, "--runs", *runs, "--out", out]) == 0
    assert out.read_bytes() == (fixtures_dir / "report_golden.md").read_bytes()


def test_report_csv_and_chart(tmp_path, corpus_path, run_paths):
    out = tmp_path / "report.csv"
    chart = tmp_path / "scores.html"
    code = run(["report", "--corpus", corpus_path, "--runs", f"gpt-4.1={run_paths['gpt-4.1']}",
                "--format", "csv", "--out", out, "--chart", chart])
    assert code == 0
    assert out.read_text(encoding="utf-8").splitlines()[0] == "model,sari,bleu,fkgl,compression"
    assert chart.exists()
    assert (tmp_path / "scores-fkgl.html").exists()


def test_evaluate_all_omitted_run_prints_absent_row(tmp_path, capsys, corpus_path):
    runs = tmp_path / "silent.jsonl"
    write_runs([
        RunRecord(doc_id, "sentence", "m", 1, STATUS_OK, ("",), None, 1) for doc_id in ("d1", "d2")
    ], runs)
    assert run(["evaluate", "--corpus", corpus_path, "--runs", runs, "--label", "silent"]) == 0
    assert "| silent | / | / | / | / |" in capsys.readouterr().out


def test_runtime_failure_exits_2(tmp_path, capsys):
    code = run(["baselines", "--corpus", tmp_path / "missing.jsonl"])
    assert code == 2
    assert "error" in capsys.readouterr().err


def test_bad_run_file_exits_2(tmp_path, corpus_path):
    runs = tmp_path / "runs.jsonl"
    runs.write_text("{broken\n", encoding="utf-8")
    assert run(["evaluate", "--corpus", corpus_path, "--runs", runs]) == 2


# ─────────────────────────────────────────────
#  simplify and ft-build
# ─────────────────────────────────────────────


@pytest.fixture
def mock_client(monkeypatch):
    monkeypatch.setattr(app, "make_client", lambda config: with_mock_responder(echo_last_user, config=config))


def test_simplify_writes_identical_artifacts(tmp_path, corpus_path, mock_client):
    first, second = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    for out in (first, second):
        code = run(["simplify", "--task", "1.1", "--corpus", corpus_path, "--model", "gpt-4.1-mini",
                    "--finetune-prompts", "--concurrency", "2", "--out", out])
        assert code == 0
    assert first.read_bytes() == second.read_bytes()

    records = [json.loads(line) for line in first.read_text(encoding="utf-8").splitlines()]
    assert [r["doc_id"] for r in records] == ["d1", "d2"]
    assert records[0]["output_sentences"] == ["The cat sat on the mat."]
    assert records[0]["model"] == "gpt-4.1-mini"


def test_simplify_without_key_exits_2(tmp_path, corpus_path, monkeypatch, capsys):
    monkeypatch.delenv("OPENAI_API_KEY", raising=False)
    code = run(["simplify", "--corpus", corpus_path, "--model", "gpt-4.1", "--out", tmp_path / "r.jsonl"])
    assert code == 2
    assert "OPENAI_API_KEY" in capsys.readouterr().err
    assert not (tmp_path / "r.jsonl").exists()


def test_ft_build(tmp_path, fixtures_dir):
    out_dir = tmp_path / "ft"
    code = run(["ft-build", "--task", "1.1", "--pairs", fixtures_dir / "pairs_sentence.jsonl",
                "--validation-pairs", fixtures_dir / "pairs_sentence.jsonl",
                "--model", "gpt-4.1-mini", "--out", out_dir])
    assert code == 0
    assert len((out_dir / "train.jsonl").read_text(encoding="utf-8").splitlines()) == 2
    assert (out_dir / "validation.jsonl").exists()

    spec = json.loads((out_dir / "job_spec.json").read_text(encoding="utf-8"))
    assert spec["base_model"] == "gpt-4.1-mini"
    assert spec["epochs"] == 3
    assert spec["seed"] == 69517706
    assert spec["estimated_tokens"] > 0
    assert spec["validation_file"].endswith("validation.jsonl")


def test_ft_build_rejects_misaligned_pairs(tmp_path):
    pairs = tmp_path / "pairs.jsonl"
    pairs.write_text(json.dumps({"source": ["a.", "b.", "c."], "target": ["a.", "b."]}) + "\n", encoding="utf-8")
    code = run(["ft-build", "--task", "1.1", "--pairs", pairs, "--model", "gpt-4.1-nano", "--out", tmp_path / "ft"])
    assert code == 2
