# harness.py  –  Corpus ingestion, run evaluation, baseline rows and report files

from __future__ import annotations

import io
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import pandas as pd

from config import READABILITY_TARGET_GRADE
from errors import (
    CorpusError,
    DuplicateDocIdError,
    EmptyCorpusError,
    NoWordsError,
    SchemaError,
    TextError,
    UnknownDocIdError,
)
from metrics import MetricReport, score_corpus
from pipeline import RunRecord
from prompts import SENTENCE_TASK
from textproc import SentenceList, segment_sentences, tokenize

logger = logging.getLogger(__name__)

SENTENCE_PAIRS = "sentence_pairs"
DOCUMENT_PAIRS = "document_pairs"
LAYOUTS = (SENTENCE_PAIRS, DOCUMENT_PAIRS)

SOURCE_LABEL = "Source"
REFERENCE_LABEL = "Reference"
ABSENT = "/"

REPORT_FORMATS = {"markdown": "markdown", "md": "markdown", "csv": "csv", "json": "json"}
MARKDOWN_HEADER = ("Model", "SARI", "BLEU", "FKGL", "Compression ratio")
CSV_HEADER = ("model", "sari", "bleu", "fkgl", "compression")


@dataclass(frozen=True)
class CorpusPair:
    doc_id: str
    source_sentences: SentenceList
    reference_text: str
    reference_sentences: Optional[SentenceList] = None

    def __post_init__(self):
        if not isinstance(self.doc_id, str) or not self.doc_id:
            raise CorpusError("doc_id must be a non-empty string")
        if not isinstance(self.source_sentences, SentenceList):
            object.__setattr__(self, "source_sentences", SentenceList(tuple(self.source_sentences)))
        if not len(self.source_sentences):
            raise CorpusError(f"{self.doc_id}: no source sentences")
        if not self.reference_text or not self.reference_text.strip():
            raise CorpusError(f"{self.doc_id}: reference text is empty")
        if self.reference_sentences is not None and not isinstance(self.reference_sentences, SentenceList):
            object.__setattr__(self, "reference_sentences", SentenceList(tuple(self.reference_sentences)))

    def reference_segments(self, abbreviations: Optional[Iterable[str]] = None) -> SentenceList:
        """The given reference sentences, or the reference text segmented."""
        if self.reference_sentences is not None and len(self.reference_sentences):
            return self.reference_sentences
        return segment_sentences(self.reference_text, abbreviations)


@dataclass(frozen=True)
class CorpusStats:
    num_docs: int
    num_source_sentences: int
    num_reference_sentences: int


@dataclass(frozen=True)
class ReportRow:
    label: str
    sari: Optional[float] = None
    bleu: Optional[float] = None
    fkgl: Optional[float] = None
    compression: Optional[float] = None

    def __post_init__(self):
        present = [v is not None for v in (self.sari, self.bleu, self.fkgl, self.compression)]
        if any(present) and not all(present):
            raise ValueError(f"{self.label}: scores must be all present or all absent")

    @property
    def is_absent(self) -> bool:
        return self.sari is None

    @classmethod
    def absent(cls, label: str) -> "ReportRow":
        return cls(label)

    @classmethod
    def from_report(cls, label: str, report: MetricReport) -> "ReportRow":
        return cls(label, report.sari, report.bleu, report.fkgl, report.compression)


def document_text(pair: CorpusPair) -> str:
    """Source sentences joined with single spaces: the document-task input."""
    return pair.source_sentences.join()


# ─────────────────────────────────────────────
#  Corpus files
# ─────────────────────────────────────────────

def _string_list(value, key: str, lineno: int) -> SentenceList:
    if not isinstance(value, list) or not all(isinstance(s, str) for s in value):
        raise SchemaError(f"'{key}' must be a list of strings", lineno)
    return SentenceList.of(value)


def _parse_pair(data, lineno: int, abbreviations: Optional[Iterable[str]]) -> CorpusPair:
    if not isinstance(data, dict):
        raise SchemaError("corpus line must be a JSON object", lineno)
    doc_id = data.get("doc_id")
    if not isinstance(doc_id, str) or not doc_id:
        raise SchemaError("missing or empty 'doc_id'", lineno)

    if "source_sentences" in data:
        source = _string_list(data["source_sentences"], "source_sentences", lineno)
    elif isinstance(data.get("source"), str):
        try:
            source = segment_sentences(data["source"], abbreviations)
        except TextError as exc:
            raise SchemaError(f"'source': {exc}", lineno) from exc
    else:
        raise SchemaError("missing 'source' or 'source_sentences'", lineno)
    if not len(source):
        raise SchemaError("no source sentences", lineno)

    reference = data.get("reference")
    if not isinstance(reference, str) or not reference.strip():
        raise SchemaError("missing or empty 'reference'", lineno)

    reference_sentences = None
    if data.get("reference_sentences") is not None:
        reference_sentences = _string_list(data["reference_sentences"], "reference_sentences", lineno)

    return CorpusPair(doc_id, source, reference.strip(), reference_sentences)


def corpus_stats(pairs: Sequence[CorpusPair], abbreviations: Optional[Iterable[str]] = None) -> CorpusStats:
    return CorpusStats(
        num_docs=len(pairs),
        num_source_sentences=sum(len(p.source_sentences) for p in pairs),
        num_reference_sentences=sum(len(p.reference_segments(abbreviations)) for p in pairs),
    )


def load_corpus(
    path: Union[str, Path],
    layout: str = SENTENCE_PAIRS,
    abbreviations: Optional[Iterable[str]] = None,
) -> Tuple[List[CorpusPair], CorpusStats]:
    """Read a corpus JSONL file.

    Each line holds ``doc_id``, the source (``source`` text, segmented here,
    or ``source_sentences``), ``reference`` and optionally
    ``reference_sentences``.  Both layouts share this schema.
    """
    if layout not in LAYOUTS:
        raise ValueError(f"layout must be one of {LAYOUTS}, got {layout!r}")
    abbreviations = tuple(abbreviations) if abbreviations is not None else None

    pairs: List[CorpusPair] = []
    seen: Dict[str, int] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                data = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"invalid JSON: {exc.msg}", lineno) from exc
            pair = _parse_pair(data, lineno, abbreviations)
            if pair.doc_id in seen:
                raise DuplicateDocIdError(
                    f"line {lineno}: doc_id {pair.doc_id!r} already used on line {seen[pair.doc_id]}"
                )
            seen[pair.doc_id] = lineno
            pairs.append(pair)

    stats = corpus_stats(pairs, abbreviations)
    logger.info(
        "Loaded %s (%s): %d docs, %d source sentences, %d reference sentences",
        path, layout, stats.num_docs, stats.num_source_sentences, stats.num_reference_sentences,
    )
    return pairs, stats


def save_corpus(pairs: Iterable[CorpusPair], path: Union[str, Path]) -> int:
    count = 0
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for pair in pairs:
            data = {
                "doc_id": pair.doc_id,
                "source_sentences": list(pair.source_sentences),
                "reference": pair.reference_text,
            }
            if pair.reference_sentences is not None:
                data["reference_sentences"] = list(pair.reference_sentences)
            fh.write(json.dumps(data, ensure_ascii=False) + "\n")
            count += 1
    return count


# ─────────────────────────────────────────────
#  Evaluation
# ─────────────────────────────────────────────

def _score(
    pairs: Sequence[CorpusPair],
    candidate_texts: Sequence[str],
    candidate_sentences: Sequence[SentenceList],
) -> MetricReport:
    sources = [tokenize(document_text(p)) for p in pairs]
    references = [tokenize(p.reference_text) for p in pairs]
    candidates = [tokenize(text) for text in candidate_texts]
    return score_corpus(sources, candidates, references, candidate_sentences)


def _candidate_text(record: RunRecord) -> str:
    if record.task == SENTENCE_TASK:
        return " ".join(s.strip() for s in record.output if s and s.strip())
    return record.output.strip()


def evaluate_run(
    records: Sequence[RunRecord],
    corpus: Sequence[CorpusPair],
    label: Optional[str] = None,
    abbreviations: Optional[Iterable[str]] = None,
) -> ReportRow:
    """Score one run against the corpus.

    Records are joined to the corpus by doc_id.  A failed record, a corpus
    document the run does not cover, or a run with no words left to read
    makes the whole row absent.
    """
    if not records:
        raise EmptyCorpusError("run contains no records")
    label = label or records[0].model_id

    by_id = {p.doc_id: p for p in corpus}
    outputs: Dict[str, RunRecord] = {}
    for record in records:
        if record.doc_id not in by_id:
            raise UnknownDocIdError(f"run references unknown doc_id {record.doc_id!r}")
        if record.doc_id in outputs:
            raise DuplicateDocIdError(f"run holds doc_id {record.doc_id!r} twice")
        outputs[record.doc_id] = record

    failed = [r.doc_id for r in records if not r.ok]
    if failed:
        logger.warning("%s: %d failed document(s), first %s; row left empty", label, len(failed), failed[0])
        return ReportRow.absent(label)

    missing = [p.doc_id for p in corpus if p.doc_id not in outputs]
    if missing:
        logger.warning("%s: run is missing %d of %d corpus documents, first %s; row left empty",
                       label, len(missing), len(corpus), missing[0])
        return ReportRow.absent(label)

    abbreviations = tuple(abbreviations) if abbreviations is not None else None
    texts = [_candidate_text(outputs[p.doc_id]) for p in corpus]
    sentences = [segment_sentences(t, abbreviations) if t.strip() else SentenceList(()) for t in texts]
    try:
        report = _score(corpus, texts, sentences)
    except NoWordsError:
        logger.warning("%s: every adaptation is empty; row left empty", label)
        return ReportRow.absent(label)
    return ReportRow.from_report(label, report)


def baseline_rows(corpus: Sequence[CorpusPair], abbreviations: Optional[Iterable[str]] = None) -> List[ReportRow]:
    """Source scored as its own candidate, then the references."""
    if not corpus:
        raise EmptyCorpusError("baselines need a non-empty corpus")
    abbreviations = tuple(abbreviations) if abbreviations is not None else None

    source = _score(corpus, [document_text(p) for p in corpus], [p.source_sentences for p in corpus])
    reference = _score(
        corpus,
        [p.reference_text for p in corpus],
        [p.reference_segments(abbreviations) for p in corpus],
    )
    return [ReportRow.from_report(SOURCE_LABEL, source), ReportRow.from_report(REFERENCE_LABEL, reference)]


def build_report(
    corpus: Sequence[CorpusPair],
    runs_by_label: Mapping[str, Sequence[RunRecord]],
    abbreviations: Optional[Iterable[str]] = None,
) -> List[ReportRow]:
    rows = baseline_rows(corpus, abbreviations)
    for label, records in runs_by_label.items():
        rows.append(evaluate_run(records, corpus, label, abbreviations))
    return rows


def grade_target_note(row: ReportRow, target: float = READABILITY_TARGET_GRADE) -> str:
    if row.is_absent:
        return f"{row.label}: no readability score"
    verdict = "at or below" if row.fkgl <= target else "above"
    return f"{row.label}: FKGL {_cell(row.fkgl)} is {verdict} the grade {target:g} target"


# ─────────────────────────────────────────────
#  Report files
# ─────────────────────────────────────────────

def _cell(value: Optional[float]) -> str:
    if value is None:
        return ABSENT
    text = f"{value:.2f}"
    return "0.00" if text == "-0.00" else text


def _cells(row: ReportRow) -> List[str]:
    return [_cell(v) for v in (row.sari, row.bleu, row.fkgl, row.compression)]


def _markdown(rows: Sequence[ReportRow]) -> str:
    lines = [
        "| " + " | ".join(MARKDOWN_HEADER) + " |",
        "| :--- | ---: | ---: | ---: | ---: |",
    ]
    for row in rows:
        lines.append("| " + " | ".join([row.label] + _cells(row)) + " |")
    return "\n".join(lines) + "\n"


def _csv(rows: Sequence[ReportRow]) -> str:
    frame = pd.DataFrame([[row.label] + _cells(row) for row in rows], columns=list(CSV_HEADER))
    buf = io.StringIO()
    frame.to_csv(buf, index=False, lineterminator="\n")
    return buf.getvalue()


def _json(rows: Sequence[ReportRow]) -> str:
    def number(value: Optional[float]):
        return ABSENT if value is None else float(_cell(value))

    data = [
        {
            "model": row.label,
            "sari": number(row.sari),
            "bleu": number(row.bleu),
            "fkgl": number(row.fkgl),
            "compression": number(row.compression),
        }
        for row in rows
    ]
    return json.dumps(data, indent=2) + "\n"


_RENDERERS = {"markdown": _markdown, "csv": _csv, "json": _json}


def render_report(rows: Sequence[ReportRow], fmt: str = "markdown") -> str:
    if not rows:
        raise ValueError("a report needs at least one row")
    if fmt not in REPORT_FORMATS:
        raise ValueError(f"unknown report format {fmt!r}")
    return _RENDERERS[REPORT_FORMATS[fmt]](rows)


def emit_report(rows: Sequence[ReportRow], fmt: str, out: Union[str, Path]) -> None:
    text = render_report(rows, fmt)
    with open(out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    logger.info("Wrote %d-row %s report to %s", len(rows), REPORT_FORMATS[fmt], out)
