# pipeline.py  –  Simplification runs with the N-in / N-out alignment contract

from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Protocol, Sequence, Tuple, Union

from config import DEFAULTS
from errors import AuthError, LLMClientError, PromptError, SchemaError
from llm_client import ChatClient
from prompts import (
    DOCUMENT_TASK,
    SENTENCE_TASK,
    TASKS,
    PromptBundle,
    parse_list_literal,
    render_document_prompt,
    render_sentence_prompt,
)

logger = logging.getLogger(__name__)

STATUS_OK = "ok"
STATUS_FAILED = "failed"

COUNT_MISMATCH = "count_mismatch"
PARSE_ERROR = "parse_error"
TRANSPORT_ERROR = "transport_error"
FAILURE_REASONS = (COUNT_MISMATCH, PARSE_ERROR, TRANSPORT_ERROR)

Output = Union[Tuple[str, ...], str, None]


@dataclass(frozen=True)
class RunRecord:
    doc_id: str
    task: str
    model_id: str
    attempts: int
    status: str
    output: Output = None
    failure_reason: Optional[str] = None
    input_count: Optional[int] = None

    def __post_init__(self):
        if self.task not in TASKS:
            raise ValueError(f"unknown task {self.task!r}")
        if self.attempts < 1:
            raise ValueError("attempts must be >= 1")
        if self.status == STATUS_OK:
            if self.output is None:
                raise ValueError("an ok record needs an output")
            if self.task == SENTENCE_TASK:
                object.__setattr__(self, "output", tuple(self.output))
                if self.input_count is not None and len(self.output) != self.input_count:
                    raise ValueError(f"{self.doc_id}: {len(self.output)} outputs for {self.input_count} inputs")
        elif self.status == STATUS_FAILED:
            if self.failure_reason not in FAILURE_REASONS:
                raise ValueError(f"a failed record needs a failure reason, got {self.failure_reason!r}")
        else:
            raise ValueError(f"unknown status {self.status!r}")

    @property
    def ok(self) -> bool:
        return self.status == STATUS_OK

    def to_json(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {
            "doc_id": self.doc_id,
            "task": self.task,
            "model": self.model_id,
            "status": self.status,
            "attempts": self.attempts,
            "failure_reason": self.failure_reason,
        }
        if self.task == SENTENCE_TASK:
            data["input_count"] = self.input_count
            data["output_sentences"] = list(self.output) if self.output is not None else None
        else:
            data["output_text"] = self.output
        return data

    @classmethod
    def from_json(cls, data: Dict[str, Any], line: Optional[int] = None) -> "RunRecord":
        if not isinstance(data, dict):
            raise SchemaError("run record must be a JSON object", line)
        missing = [k for k in ("doc_id", "task", "model", "status", "attempts") if k not in data]
        if missing:
            raise SchemaError(f"run record lacks '{missing[0]}'", line)
        output_key = "output_sentences" if data["task"] == SENTENCE_TASK else "output_text"
        output = data.get(output_key)
        try:
            return cls(
                doc_id=str(data["doc_id"]),
                task=data["task"],
                model_id=data["model"],
                attempts=int(data["attempts"]),
                status=data["status"],
                output=tuple(output) if isinstance(output, list) else output,
                failure_reason=data.get("failure_reason"),
                input_count=data.get("input_count"),
            )
        except (TypeError, ValueError) as exc:
            raise SchemaError(str(exc), line) from exc


class Document(Protocol):
    doc_id: str
    source_sentences: Sequence[str]


def _failed(doc_id: str, task: str, model_id: str, attempts: int, reason: str, input_count: Optional[int] = None) -> RunRecord:
    logger.warning("%s: failed after %d attempt(s): %s", doc_id, attempts, reason)
    return RunRecord(doc_id, task, model_id, attempts, STATUS_FAILED, None, reason, input_count)


def simplify_sentences(
    doc_id: str,
    sentences: Sequence[str],
    bundle: PromptBundle,
    client: ChatClient,
    max_attempts: int = DEFAULTS["max_attempts"],
) -> RunRecord:
    """Ask for one adaptation per input sentence, re-sending the identical
    prompt until the returned list has exactly N elements or attempts run out."""
    if max_attempts < 1:
        raise ValueError("max_attempts must be >= 1")
    messages = render_sentence_prompt(bundle, sentences)
    expected = len(sentences)
    model_id = client.config.model_id

    reason = TRANSPORT_ERROR
    attempt = 0
    while attempt < max_attempts:
        attempt += 1
        try:
            reply = client.chat_complete(messages)
        except AuthError as exc:
            logger.error("%s: %s", doc_id, exc)
            return _failed(doc_id, SENTENCE_TASK, model_id, attempt, TRANSPORT_ERROR, expected)
        except LLMClientError as exc:
            logger.warning("%s: attempt %d transport failure: %s", doc_id, attempt, exc)
            reason = TRANSPORT_ERROR
            continue
        try:
            adaptations = parse_list_literal(reply)
        except PromptError as exc:
            logger.warning("%s: attempt %d unparseable output: %s", doc_id, attempt, exc)
            reason = PARSE_ERROR
            continue
        if len(adaptations) != expected:
            logger.warning("%s: attempt %d returned %d elements for %d sentences", doc_id, attempt, len(adaptations), expected)
            reason = COUNT_MISMATCH
            continue

        logger.info("%s: ok after %d attempt(s)", doc_id, attempt)
        return RunRecord(doc_id, SENTENCE_TASK, model_id, attempt, STATUS_OK, adaptations.items, None, expected)

    return _failed(doc_id, SENTENCE_TASK, model_id, attempt, reason, expected)


def simplify_document(
    doc_id: str,
    document: str,
    bundle: PromptBundle,
    client: ChatClient,
    max_attempts: int = DEFAULTS["max_attempts"],
) -> RunRecord:
    """First non-blank reply wins; it is stored verbatim."""
    if max_attempts < 1:
        raise ValueError("max_attempts must be >= 1")
    messages = render_document_prompt(bundle, document)
    model_id = client.config.model_id

    reason = TRANSPORT_ERROR
    attempt = 0
    while attempt < max_attempts:
        attempt += 1
        try:
            reply = client.chat_complete(messages)
        except AuthError as exc:
            logger.error("%s: %s", doc_id, exc)
            return _failed(doc_id, DOCUMENT_TASK, model_id, attempt, TRANSPORT_ERROR)
        except LLMClientError as exc:
            logger.warning("%s: attempt %d transport failure: %s", doc_id, attempt, exc)
            reason = TRANSPORT_ERROR
            continue
        if not reply.strip():
            logger.warning("%s: attempt %d returned an empty reply", doc_id, attempt)
            reason = PARSE_ERROR
            continue

        logger.info("%s: ok after %d attempt(s)", doc_id, attempt)
        return RunRecord(doc_id, DOCUMENT_TASK, model_id, attempt, STATUS_OK, reply)

    return _failed(doc_id, DOCUMENT_TASK, model_id, attempt, reason)


def run_corpus(
    corpus: Sequence[Document],
    bundle: PromptBundle,
    client: ChatClient,
    max_attempts: int = DEFAULTS["max_attempts"],
    concurrency_limit: int = DEFAULTS["concurrency"],
) -> List[RunRecord]:
    """One record per document, in corpus order, with at most
    *concurrency_limit* documents (hence requests) in flight."""
    if not corpus:
        raise ValueError("corpus must not be empty")
    if concurrency_limit < 1:
        raise ValueError("concurrency_limit must be >= 1")

    def work(doc: Document) -> RunRecord:
        if bundle.task == SENTENCE_TASK:
            return simplify_sentences(doc.doc_id, list(doc.source_sentences), bundle, client, max_attempts)
        return simplify_document(doc.doc_id, " ".join(doc.source_sentences), bundle, client, max_attempts)

    with ThreadPoolExecutor(max_workers=concurrency_limit) as pool:
        futures = [pool.submit(work, doc) for doc in corpus]
        records = [f.result() for f in futures]

    failed = sum(1 for r in records if not r.ok)
    logger.info("%s: %d/%d documents ok", client.config.model_id, len(records) - failed, len(records))
    return records


# ─────────────────────────────────────────────
#  Run artifacts (JSONL)
# ─────────────────────────────────────────────

def write_runs(records: Iterable[RunRecord], path: Union[str, Path]) -> int:
    count = 0
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for record in records:
            fh.write(json.dumps(record.to_json(), ensure_ascii=False) + "\n")
            count += 1
    return count


def read_runs(path: Union[str, Path]) -> List[RunRecord]:
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                data = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"invalid JSON: {exc.msg}", lineno) from exc
            records.append(RunRecord.from_json(data, lineno))
    return records
