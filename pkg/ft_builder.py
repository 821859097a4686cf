# ft_builder.py  –  Chat-format fine-tuning datasets, job specs and cost estimates
#
# Nothing here talks to a provider: the job spec is a JSON sidecar that
# records what a fine-tune would be run with and roughly what it would cost.

from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

from config import FINETUNE_HYPERPARAMETERS, TRAINING_PRICES
from errors import (
    EmptyPairsError,
    FinetuneError,
    InvalidPairError,
    PromptError,
    SchemaError,
    UnknownModelError,
)
from prompts import SENTENCE_TASK, TASK_CODES, parse_list_literal, render_list_literal

logger = logging.getLogger(__name__)

CHARS_PER_TOKEN = 4


@dataclass(frozen=True)
class FinetunePair:
    source: str
    target: str

    def __post_init__(self):
        if not isinstance(self.source, str) or not self.source.strip():
            raise InvalidPairError("pair source must be a non-empty string")
        if not isinstance(self.target, str) or not self.target.strip():
            raise InvalidPairError("pair target must be a non-empty string")


@dataclass(frozen=True)
class CostModel:
    price_per_million_tokens: Dict[str, float] = field(default_factory=lambda: dict(TRAINING_PRICES))

    def __post_init__(self):
        for model, price in self.price_per_million_tokens.items():
            if price <= 0:
                raise FinetuneError(f"price for {model} must be positive")


@dataclass(frozen=True)
class FinetuneJobSpec:
    training_file: str
    base_model: str
    validation_file: Optional[str] = None
    epochs: int = FINETUNE_HYPERPARAMETERS["epochs"]
    batch_size: int = FINETUNE_HYPERPARAMETERS["batch_size"]
    lr_multiplier: float = FINETUNE_HYPERPARAMETERS["lr_multiplier"]
    seed: int = FINETUNE_HYPERPARAMETERS["seed"]
    estimated_tokens: int = 0
    estimated_cost_usd: Optional[float] = None

    def to_json(self) -> Dict[str, Any]:
        return asdict(self)


def _check_alignment(pair: FinetunePair, index: int) -> None:
    try:
        source = parse_list_literal(pair.source)
        target = parse_list_literal(pair.target)
    except PromptError as exc:
        raise InvalidPairError(f"pair {index}: not a list literal ({exc})") from exc
    if len(source) != len(target):
        raise InvalidPairError(f"pair {index}: {len(source)} source sentences but {len(target)} adaptations")


def training_record(pair: FinetunePair, system_text: str) -> Dict[str, Any]:
    return {
        "messages": [
            {"role": "system", "content": system_text},
            {"role": "user", "content": pair.source},
            {"role": "assistant", "content": pair.target},
        ]
    }


def build_jsonl(
    pairs: Sequence[FinetunePair],
    system_text: str,
    out: Union[str, Path],
    task: Optional[str] = None,
) -> int:
    """Write one ``{"messages": [system, user, assistant]}`` line per pair.

    With ``task`` set to the sentence task every pair must hold two list
    literals of equal length.  All pairs are checked before anything is
    written.
    """
    if not pairs:
        raise EmptyPairsError("no fine-tuning pairs to write")
    if not system_text or not system_text.strip():
        raise FinetuneError("system text must not be empty")
    if TASK_CODES.get(task, task) == SENTENCE_TASK:
        for index, pair in enumerate(pairs, start=1):
            _check_alignment(pair, index)

    lines = 0
    with open(out, "w", encoding="utf-8", newline="\n") as fh:
        for pair in pairs:
            fh.write(json.dumps(training_record(pair, system_text), ensure_ascii=False) + "\n")
            lines += 1
    logger.info("Wrote %d training records to %s", lines, out)
    return lines


def estimate_tokens(text: str) -> int:
    """Rough count: one token per four characters, rounded up.

    Indicative only; provider tokenizers will differ.
    """
    return math.ceil(len(text) / CHARS_PER_TOKEN)


def dataset_tokens(pairs: Sequence[FinetunePair], system_text: str) -> int:
    """Estimated tokens across every message of every training record."""
    return sum(
        estimate_tokens(system_text) + estimate_tokens(p.source) + estimate_tokens(p.target)
        for p in pairs
    )


def estimate_cost(total_tokens: int, model_id: str, costs: Optional[CostModel] = None) -> float:
    """USD for *total_tokens* training tokens at the model's per-million price."""
    costs = costs or CostModel()
    if model_id not in costs.price_per_million_tokens:
        raise UnknownModelError(f"no training price for {model_id}")
    return total_tokens * costs.price_per_million_tokens[model_id] / 1_000_000


def build_job_spec(
    training_file: Union[str, Path],
    base_model: str,
    total_tokens: int,
    costs: Optional[CostModel] = None,
    hyperparameters: Optional[Dict[str, Any]] = None,
    validation_file: Optional[Union[str, Path]] = None,
) -> FinetuneJobSpec:
    params = dict(FINETUNE_HYPERPARAMETERS)
    params.update(hyperparameters or {})
    try:
        cost: Optional[float] = round(estimate_cost(total_tokens, base_model, costs), 2)
    except UnknownModelError:
        logger.warning("No training price known for %s; leaving the cost estimate empty", base_model)
        cost = None
    return FinetuneJobSpec(
        training_file=str(training_file),
        base_model=base_model,
        validation_file=str(validation_file) if validation_file else None,
        epochs=int(params["epochs"]),
        batch_size=int(params["batch_size"]),
        lr_multiplier=float(params["lr_multiplier"]),
        seed=int(params["seed"]),
        estimated_tokens=total_tokens,
        estimated_cost_usd=cost,
    )


def write_job_spec(spec: FinetuneJobSpec, path: Union[str, Path]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(spec.to_json(), fh, indent=2)
        fh.write("\n")


def _pair_field(value: Any, task: str, name: str, lineno: int) -> str:
    if isinstance(value, list):
        if task != SENTENCE_TASK:
            raise SchemaError(f"'{name}' must be a string for the document task", lineno)
        if not all(isinstance(v, str) for v in value):
            raise SchemaError(f"'{name}' must be a list of strings", lineno)
        return render_list_literal(value)
    if isinstance(value, str):
        return value
    raise SchemaError(f"'{name}' must be a string or a list of strings", lineno)


def load_pairs(path: Union[str, Path], task: str) -> List[FinetunePair]:
    """Read ``{"source": ..., "target": ...}`` lines.  For the sentence task
    either field may be a JSON array, rendered as a list literal."""
    task = TASK_CODES.get(task, task)
    pairs = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                data = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"invalid JSON: {exc.msg}", lineno) from exc
            if not isinstance(data, dict):
                raise SchemaError("pair must be a JSON object", lineno)
            for key in ("source", "target"):
                if key not in data:
                    raise SchemaError(f"pair lacks '{key}'", lineno)
            try:
                pairs.append(FinetunePair(
                    source=_pair_field(data["source"], task, "source", lineno),
                    target=_pair_field(data["target"], task, "target", lineno),
                ))
            except InvalidPairError as exc:
                raise SchemaError(str(exc), lineno) from exc
    return pairs
