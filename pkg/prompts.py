# prompts.py  –  Prompt assets, chat message rendering and list-literal parsing
#
# The prompt texts live in assets/prompts/ exactly as published and are
# checked against assets/prompts/SHA256SUMS whenever they are loaded.

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from config import PROMPT_DIR
from errors import (
    EmptyInputError,
    MalformedLiteralError,
    MultipleListsError,
    NoListFoundError,
    PromptError,
    WrongTaskError,
)
from llm_client import ChatMessage

logger = logging.getLogger(__name__)

SENTENCE_TASK = "sentence"
DOCUMENT_TASK = "document"
TASKS = (SENTENCE_TASK, DOCUMENT_TASK)

# CLI task codes -> task names
TASK_CODES = {"1.1": SENTENCE_TASK, "1.2": DOCUMENT_TASK}

# The user prompt shows this list; rendering swaps in the real sentences.
INPUT_PLACEHOLDER = "['SENTENCE_1', 'SENTENCE_2', …, 'SENTENCE_N']"
DOCUMENT_PLACEHOLDER = "{{DOCUMENT}}"

ASSET_FILES = {
    "task11_ft_system": "task11_ft_system.txt",
    "task12_ft_system": "task12_ft_system.txt",
    "task11_system": "task11_system.txt",
    "task11_user": "task11_user.txt",
    "task12_system": "task12_system.txt",
    "task12_user": "task12_user.txt",
    "guidelines": "guidelines.txt",
}
CHECKSUM_FILE = "SHA256SUMS"

_ESCAPES = {"\\": "\\\\", "'": "\\'", "\n": "\\n", "\r": "\\r", "\t": "\\t"}
_UNESCAPES = {"\\": "\\", "'": "'", '"': '"', "n": "\n", "r": "\r", "t": "\t"}


@dataclass(frozen=True)
class PromptBundle:
    task: str
    system_text: str
    user_template: str
    guidelines_text: Optional[str] = None
    is_finetune_variant: bool = False

    def __post_init__(self):
        if self.task not in TASKS:
            raise PromptError(f"unknown task {self.task!r}")
        if not self.system_text.strip() or not self.user_template.strip():
            raise PromptError("system text and user template must not be empty")
        placeholder = INPUT_PLACEHOLDER if self.task == SENTENCE_TASK else DOCUMENT_PLACEHOLDER
        if self.user_template.count(placeholder) != 1:
            raise PromptError(f"{self.task} user template must contain {placeholder} exactly once")


@dataclass(frozen=True)
class AdaptationList:
    """Model output for the sentence task; '' marks an omitted sentence."""

    items: Tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "items", tuple(self.items))

    def __len__(self) -> int:
        return len(self.items)

    def __iter__(self):
        return iter(self.items)

    def render(self) -> str:
        return render_list_literal(self.items)


# ─────────────────────────────────────────────
#  Assets
# ─────────────────────────────────────────────

def _read_checksums(prompt_dir: Path) -> Dict[str, str]:
    sums = {}
    with open(prompt_dir / CHECKSUM_FILE, "r", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                digest, name = line.split(None, 1)
                sums[name.strip().lstrip("*")] = digest
    return sums


def verify_assets(prompt_dir: Path = PROMPT_DIR) -> None:
    """Raise PromptError unless every asset matches its recorded digest."""
    sums = _read_checksums(Path(prompt_dir))
    for filename in ASSET_FILES.values():
        expected = sums.get(filename)
        if expected is None:
            raise PromptError(f"{filename} is missing from {CHECKSUM_FILE}")
        actual = hashlib.sha256((Path(prompt_dir) / filename).read_bytes()).hexdigest()
        if actual != expected:
            raise PromptError(f"{filename} does not match its recorded sha256")


@lru_cache(maxsize=None)
def read_asset(name: str, prompt_dir: Path = PROMPT_DIR) -> str:
    """Asset text with trailing newlines removed, after a digest check."""
    filename = ASSET_FILES[name]
    raw = (Path(prompt_dir) / filename).read_bytes()
    expected = _read_checksums(Path(prompt_dir)).get(filename)
    if expected != hashlib.sha256(raw).hexdigest():
        raise PromptError(f"prompt asset {filename} has drifted from {CHECKSUM_FILE}")
    return raw.decode("utf-8").rstrip("\n")


def load_bundle(task: str, finetune: bool = False, with_guidelines: bool = False, prompt_dir: Path = PROMPT_DIR) -> PromptBundle:
    """Bundle for *task* ('sentence'/'document' or '1.1'/'1.2').

    Fine-tune variants pair the training system prompt with a bare user
    message (the input list, or the document) matching the training records.
    """
    task = TASK_CODES.get(task, task)
    if task not in TASKS:
        raise PromptError(f"unknown task {task!r}")
    prompt_dir = Path(prompt_dir)

    if task == SENTENCE_TASK:
        if finetune:
            system, template = read_asset("task11_ft_system", prompt_dir), INPUT_PLACEHOLDER
        else:
            system, template = read_asset("task11_system", prompt_dir), read_asset("task11_user", prompt_dir)
    else:
        if finetune:
            system, template = read_asset("task12_ft_system", prompt_dir), DOCUMENT_PLACEHOLDER
        else:
            system = read_asset("task12_system", prompt_dir)
            template = read_asset("task12_user", prompt_dir).rstrip() + "\n\n" + DOCUMENT_PLACEHOLDER

    guidelines = read_asset("guidelines", prompt_dir) if with_guidelines else None
    logger.debug("Prompt bundle: task=%s finetune=%s guidelines=%s", task, finetune, with_guidelines)
    return PromptBundle(
        task=task,
        system_text=system,
        user_template=template,
        guidelines_text=guidelines,
        is_finetune_variant=finetune,
    )


# ─────────────────────────────────────────────
#  Rendering
# ─────────────────────────────────────────────

def _escape(text: str) -> str:
    return "".join(_ESCAPES.get(ch, ch) for ch in text)


def render_list_literal(items: Iterable[str]) -> str:
    """``['a', 'it\\'s']`` – single quotes, backslash escapes."""
    return "[" + ", ".join(f"'{_escape(item)}'" for item in items) + "]"


def render_sentence_prompt(bundle: PromptBundle, sentences: Sequence[str]) -> List[ChatMessage]:
    if bundle.task != SENTENCE_TASK:
        raise WrongTaskError(f"bundle is for the {bundle.task} task")
    sentences = list(sentences)
    if not sentences:
        raise PromptError("at least one input sentence is required")

    user = bundle.user_template.replace(INPUT_PLACEHOLDER, render_list_literal(sentences), 1)
    if bundle.guidelines_text:
        user = f"{user}\n\n{bundle.guidelines_text}"
    return [ChatMessage("system", bundle.system_text), ChatMessage("user", user)]


def render_document_prompt(bundle: PromptBundle, document: str) -> List[ChatMessage]:
    """Task block, then the guidelines (if any), then the document last."""
    if bundle.task != DOCUMENT_TASK:
        raise WrongTaskError(f"bundle is for the {bundle.task} task")
    if not document or not document.strip():
        raise EmptyInputError("document is empty")

    head, tail = bundle.user_template.split(DOCUMENT_PLACEHOLDER, 1)
    if bundle.guidelines_text:
        head = f"{head}{bundle.guidelines_text}\n\n"
    return [ChatMessage("system", bundle.system_text), ChatMessage("user", head + document.strip() + tail)]


# ─────────────────────────────────────────────
#  Parsing model output
# ─────────────────────────────────────────────

def _skip_ws(text: str, pos: int) -> int:
    while pos < len(text) and text[pos].isspace():
        pos += 1
    return pos


def _parse_string(text: str, pos: int) -> Tuple[str, int]:
    quote = text[pos]
    pos += 1
    buf = []
    while True:
        if pos >= len(text):
            raise MalformedLiteralError("unterminated string")
        ch = text[pos]
        if ch == "\\":
            if pos + 1 >= len(text):
                raise MalformedLiteralError("dangling backslash")
            nxt = text[pos + 1]
            buf.append(_UNESCAPES.get(nxt, "\\" + nxt))
            pos += 2
        elif ch == quote:
            return "".join(buf), pos + 1
        else:
            buf.append(ch)
            pos += 1


def _parse_list_at(text: str, pos: int) -> Tuple[List[str], int]:
    """Parse the list opening at ``text[pos] == '['``; return items and end."""
    items: List[str] = []
    pos = _skip_ws(text, pos + 1)
    if pos < len(text) and text[pos] == "]":
        return items, pos + 1
    while True:
        if pos >= len(text):
            raise MalformedLiteralError("unbalanced brackets")
        if text[pos] not in "'\"":
            raise MalformedLiteralError(f"expected a quoted string at offset {pos}")
        item, pos = _parse_string(text, pos)
        items.append(item)
        pos = _skip_ws(text, pos)
        if pos >= len(text):
            raise MalformedLiteralError("unbalanced brackets")
        if text[pos] == "]":
            return items, pos + 1
        if text[pos] != ",":
            raise MalformedLiteralError(f"expected ',' or ']' at offset {pos}")
        pos = _skip_ws(text, pos + 1)
        if pos < len(text) and text[pos] == "]":
            return items, pos + 1


def parse_list_literal(text: str) -> AdaptationList:
    """Extract the one list of quoted strings in *text*.

    Prose around the list is tolerated.  Brackets whose first element is
    not a quoted string (``[1]``, ``[see above]``) are prose.  A bracket
    that opens with a quote but never closes into a valid list is reported
    as malformed when no other list is found.
    """
    found: List[List[str]] = []
    first_error: Optional[MalformedLiteralError] = None
    pos = 0
    while True:
        start = text.find("[", pos)
        if start < 0:
            break
        try:
            items, pos = _parse_list_at(text, start)
        except MalformedLiteralError as exc:
            head = _skip_ws(text, start + 1)
            if head < len(text) and text[head] in "'\"":
                first_error = first_error or exc
            pos = start + 1
            continue
        found.append(items)

    if len(found) > 1:
        raise MultipleListsError(f"found {len(found)} lists in model output")
    if found:
        return AdaptationList(tuple(found[0]))
    if first_error is not None:
        raise first_error
    raise NoListFoundError("model output contains no list")
