import json
import random

import pytest

from errors import DuplicateDocIdError, EmptyCorpusError, SchemaError, UnknownDocIdError
from harness import (
    CorpusPair,
    ReportRow,
    baseline_rows,
    build_report,
    document_text,
    emit_report,
    evaluate_run,
    grade_target_note,
    load_corpus,
    render_report,
    save_corpus,
)
from pipeline import COUNT_MISMATCH, STATUS_FAILED, STATUS_OK, RunRecord, read_runs


def write_lines(path, rows):
    path.write_text("".join(json.dumps(r) + "\n" for r in rows), encoding="utf-8")
    return path


def ok_record(doc_id, sentences, model="m"):
    return RunRecord(doc_id, "sentence", model, 1, STATUS_OK, tuple(sentences), None, len(sentences))


# ─────────────────────────────────────────────
#  Corpus files
# ─────────────────────────────────────────────


def test_load_fixture_corpus(corpus_path):
    pairs, stats = load_corpus(corpus_path)
    assert [p.doc_id for p in pairs] == ["d1", "d2"]
    assert (stats.num_docs, stats.num_source_sentences, stats.num_reference_sentences) == (2, 2, 2)
    assert pairs[0].reference_text == "A cat sat."


def test_raw_source_is_segmented(tmp_path):
    path = write_lines(tmp_path / "c.jsonl", [
        {"doc_id": "a", "source": "Smith et al. ran a trial. It worked.", "reference": "A trial worked."},
    ])
    pairs, stats = load_corpus(path, "document_pairs")
    assert list(pairs[0].source_sentences) == ["Smith et al. ran a trial.", "It worked."]
    assert stats.num_source_sentences == 2


def test_missing_reference_names_the_line(tmp_path):
    path = write_lines(tmp_path / "c.jsonl", [{"doc_id": "a", "source": "Text."}])
    with pytest.raises(SchemaError) as info:
        load_corpus(path)
    assert info.value.line == 1
    assert "line 1" in str(info.value)


def test_bad_json_line(tmp_path):
    path = tmp_path / "c.jsonl"
    path.write_text('{"doc_id": "a", "source": "A.", "reference": "B."}\n[oops\n', encoding="utf-8")
    with pytest.raises(SchemaError) as info:
        load_corpus(path)
    assert info.value.line == 2


def test_duplicate_doc_id(tmp_path):
    row = {"doc_id": "a", "source": "A.", "reference": "B."}
    with pytest.raises(DuplicateDocIdError):
        load_corpus(write_lines(tmp_path / "c.jsonl", [row, row]))


def test_unknown_layout(corpus_path):
    with pytest.raises(ValueError):
        load_corpus(corpus_path, "paragraphs")


def test_statistics_at_test_set_scale(tmp_path):
    rows = []
    for i in range(37):
        n_source = 16 if i < 32 else 15
        n_reference = 11 if i < 18 else 10
        references = [f"Plain sentence {j} of doc {i}." for j in range(n_reference)]
        rows.append({
            "doc_id": f"review-{i:02d}",
            "source_sentences": [f"Source sentence {j} of doc {i}." for j in range(n_source)],
            "reference": " ".join(references),
            "reference_sentences": references,
        })
    _, stats = load_corpus(write_lines(tmp_path / "c.jsonl", rows))
    assert (stats.num_docs, stats.num_source_sentences, stats.num_reference_sentences) == (37, 587, 388)


def test_corpus_round_trip(tmp_path, corpus):
    pairs = corpus + [CorpusPair("d3", ["One.", "Two."], "Short. Text.", ["Short.", "Text."])]
    path = tmp_path / "saved.jsonl"
    assert save_corpus(pairs, path) == 3
    loaded, _ = load_corpus(path)
    assert loaded == pairs


def test_document_text_joins_sentences():
    pair = CorpusPair("d", ["One.", "Two."], "Ref.")
    assert document_text(pair) == "One. Two."


# ─────────────────────────────────────────────
#  Evaluation
# ─────────────────────────────────────────────


def test_candidates_equal_to_references_score_100(corpus):
    records = [ok_record("d1", ["A cat sat."]), ok_record("d2", ["The drug helps people."])]
    row = evaluate_run(records, corpus, "echo")
    assert row.sari == 100.0
    assert row.bleu == 100.0
    assert row.compression == 9 / 12


def test_failed_record_blanks_the_row(corpus):
    records = [
        RunRecord("d1", "sentence", "nano-ft", 3, STATUS_FAILED, None, COUNT_MISMATCH, 1),
        ok_record("d2", ["The drug helps people."]),
    ]
    row = evaluate_run(records, corpus)
    assert row.is_absent
    assert row.label == "nano-ft"
    assert "| / | / | / | / |" in render_report([row], "markdown")


def test_run_missing_a_document_is_absent(corpus):
    row = evaluate_run([ok_record("d1", ["A cat sat."])], corpus, "partial")
    assert row.is_absent
    assert row.label == "partial"


def test_all_omitted_adaptations_give_an_absent_row(corpus):
    records = [ok_record("d1", [""]), ok_record("d2", [""])]
    row = evaluate_run(records, corpus, "silent")
    assert row.is_absent
    assert "| silent | / | / | / | / |" in render_report([row], "markdown")


def test_unknown_doc_id(corpus):
    with pytest.raises(UnknownDocIdError):
        evaluate_run([ok_record("d9", ["x."])], corpus)


def test_evaluation_ignores_record_order(corpus, run_paths):
    records = read_runs(run_paths["gpt-4.1-mini"])
    assert evaluate_run(records, corpus, "x") == evaluate_run(list(reversed(records)), corpus, "x")


def test_evaluation_ignores_corpus_order(corpus, run_paths):
    records = read_runs(run_paths["gpt-4.1-mini"])
    forward = evaluate_run(records, corpus, "x")
    backward = evaluate_run(records, list(reversed(corpus)), "x")
    assert backward.sari == pytest.approx(forward.sari, abs=1e-9)
    assert backward.bleu == pytest.approx(forward.bleu, abs=1e-9)
    assert backward.fkgl == pytest.approx(forward.fkgl, abs=1e-9)
    assert backward.compression == pytest.approx(forward.compression, abs=1e-12)


def test_document_task_records(corpus):
    records = [
        RunRecord("d1", "document", "m", 1, STATUS_OK, "A cat sat."),
        RunRecord("d2", "document", "m", 1, STATUS_OK, "The drug helps people."),
    ]
    assert evaluate_run(records, corpus).sari == 100.0


def _random_corpus(rng):
    words = ["the", "patients", "trial", "drug", "improved", "risk", "a", "was", "lower"]
    pairs = []
    for i in range(rng.randint(1, 5)):
        source = [" ".join(rng.choice(words) for _ in range(rng.randint(1, 8))).capitalize() + "."
                  for _ in range(rng.randint(1, 4))]
        reference = " ".join(rng.choice(words) for _ in range(rng.randint(1, 8))).capitalize() + "."
        pairs.append(CorpusPair(f"d{i}", source, reference))
    return pairs


def test_baseline_identities_hold_for_any_corpus():
    rng = random.Random(99)
    for _ in range(30):
        source, reference = baseline_rows(_random_corpus(rng))
        assert source.label == "Source"
        assert source.compression == 1.0
        assert reference.label == "Reference"
        assert reference.sari == 100.0
        assert reference.bleu == 100.0


def test_baselines_coincide_when_reference_is_the_source():
    corpus = [CorpusPair("d", ["The cat sat.", "The dog ran."], "The cat sat. The dog ran.")]
    source, reference = baseline_rows(corpus)
    assert (source.sari, source.bleu, source.fkgl, source.compression) == (
        reference.sari, reference.bleu, reference.fkgl, reference.compression
    )


def test_baselines_need_a_corpus():
    with pytest.raises(EmptyCorpusError):
        baseline_rows([])


# ─────────────────────────────────────────────
#  Reports
# ─────────────────────────────────────────────


def test_golden_markdown_report(tmp_path, corpus, fixtures_dir, run_paths):
    runs = {label: read_runs(path) for label, path in run_paths.items()}
    rows = build_report(corpus, runs)
    assert [r.label for r in rows] == ["Source", "Reference", "gpt-4.1", "gpt-4.1-mini", "gpt-4.1-nano-ft"]

    out = tmp_path / "report.md"
    emit_report(rows, "markdown", out)
    assert out.read_bytes() == (fixtures_dir / "report_golden.md").read_bytes()

    again = tmp_path / "again.md"
    emit_report(rows, "md", again)
    assert again.read_bytes() == out.read_bytes()


def test_rounding_and_negative_zero():
    text = render_report([ReportRow("x", 43.336, 0.0, -0.001, 1.0)], "markdown")
    assert text.splitlines()[-1] == "| x | 43.34 | 0.00 | 0.00 | 1.00 |"


def test_csv_report():
    rows = [ReportRow("Source", 12.034, 20.53, 13.54, 1.0), ReportRow.absent("gpt-4.1-nano-ft")]
    lines = render_report(rows, "csv").splitlines()
    assert lines[0] == "model,sari,bleu,fkgl,compression"
    assert lines[1] == "Source,12.03,20.53,13.54,1.00"
    assert lines[2] == "gpt-4.1-nano-ft,/,/,/,/"


def test_json_report():
    rows = [ReportRow("Reference", 100.0, 100.0, 11.734, 0.56), ReportRow.absent("ft")]
    data = json.loads(render_report(rows, "json"))
    assert data[0] == {"model": "Reference", "sari": 100.0, "bleu": 100.0, "fkgl": 11.73, "compression": 0.56}
    assert data[1]["sari"] == "/"


def test_report_needs_rows_and_a_known_format():
    with pytest.raises(ValueError):
        render_report([], "markdown")
    with pytest.raises(ValueError):
        render_report([ReportRow.absent("x")], "html")


def test_report_row_is_all_or_nothing():
    with pytest.raises(ValueError):
        ReportRow("x", sari=1.0)


def test_grade_target_note():
    assert "at or below" in grade_target_note(ReportRow("a", 40.0, 10.0, 7.9, 0.5))
    assert "above" in grade_target_note(ReportRow("b", 40.0, 10.0, 11.73, 0.5))
    assert "no readability" in grade_target_note(ReportRow.absent("c"))
