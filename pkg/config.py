# config.py - Application configuration and constants

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

import yaml

from errors import ConfigError

logger = logging.getLogger(__name__)

APP_NAME = "plainlang-simplify"
APP_TAGLINE = "Scientific text simplification pipeline and evaluation harness"

ROOT_DIR = Path(__file__).resolve().parent
PROMPT_DIR = ROOT_DIR / "assets" / "prompts"

# Abbreviations that never end a sentence. Matching is case-insensitive.
DEFAULT_ABBREVIATIONS: Tuple[str, ...] = (
    "e.g.",
    "i.e.",
    "vs.",
    "et al.",
    "Dr.",
    "Fig.",
    "No.",
    "approx.",
)

DEFAULT_BASE_URL = "https://api.openai.com"
DEFAULT_API_KEY_ENV = "OPENAI_API_KEY"
MODEL_VERSION = "2025-04-14"

# Chat models evaluated in the result tables, all at MODEL_VERSION
MODEL_REGISTRY: Dict[str, Dict[str, Any]] = {
    "gpt-4.1": {"model_id": "gpt-4.1"},
    "gpt-4.1-mini": {"model_id": "gpt-4.1-mini"},
    "gpt-4.1-nano": {"model_id": "gpt-4.1-nano"},
}

# USD per million training tokens
TRAINING_PRICES: Dict[str, float] = {
    "gpt-4.1": 25.0,
    "gpt-4.1-mini": 5.0,
    "gpt-4.1-nano": 1.5,
}

FINETUNE_HYPERPARAMETERS: Dict[str, Any] = {
    "epochs": 3,
    "batch_size": 1,
    "lr_multiplier": 2.0,
    "seed": 69517706,
}

# CLI defaults. Temperature 0 is our choice; the runs being reproduced never stated one.
DEFAULTS: Dict[str, Any] = {
    "max_attempts": 3,
    "concurrency": 4,
    "temperature": 0.0,
    "format": "markdown",
    "request_timeout": 60.0,
    "max_transport_retries": 3,
}

# Transport backoff: exponential from BACKOFF_BASE seconds, full jitter, capped
BACKOFF_BASE = 1.0
BACKOFF_CAP = 30.0

# US school grade recommended for written health materials
READABILITY_TARGET_GRADE = 8.0

TASK_LABELS = {
    "1.1": "Sentence-level Scientific Text Simplification",
    "1.2": "Document-level Scientific Text Simplification",
}

_SETTINGS_KEYS = {"abbreviations", "prices", "models", "finetune", "defaults"}


@dataclass(frozen=True)
class Settings:
    """Effective configuration: the constants above, optionally overridden
    by a YAML file.  Never holds credentials, only variable names."""

    abbreviations: Tuple[str, ...] = DEFAULT_ABBREVIATIONS
    prices: Dict[str, float] = field(default_factory=lambda: dict(TRAINING_PRICES))
    models: Dict[str, Dict[str, Any]] = field(default_factory=lambda: {k: dict(v) for k, v in MODEL_REGISTRY.items()})
    finetune: Dict[str, Any] = field(default_factory=lambda: dict(FINETUNE_HYPERPARAMETERS))
    defaults: Dict[str, Any] = field(default_factory=lambda: dict(DEFAULTS))

    def with_abbreviations(self, abbreviations: Tuple[str, ...]) -> "Settings":
        return replace(self, abbreviations=tuple(abbreviations))


def _merged(base: Dict[str, Any], override: Any, key: str) -> Dict[str, Any]:
    if override is None:
        return base
    if not isinstance(override, dict):
        raise ConfigError(f"settings key '{key}' must be a mapping")
    merged = dict(base)
    merged.update(override)
    return merged


def load_settings(path: Optional[str | Path] = None) -> Settings:
    """Return the built-in settings, overridden by the YAML file at *path*."""
    if path is None:
        return Settings()

    with open(path, "r", encoding="utf-8") as fh:
        raw = yaml.safe_load(fh) or {}
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a mapping")

    unknown = sorted(set(raw) - _SETTINGS_KEYS)
    if unknown:
        raise ConfigError(f"{path}: unknown settings key '{unknown[0]}'")

    base = Settings()
    abbreviations = base.abbreviations
    if "abbreviations" in raw:
        items = raw["abbreviations"]
        if not isinstance(items, list) or not all(isinstance(a, str) and a.strip() for a in items):
            raise ConfigError(f"{path}: 'abbreviations' must be a list of non-empty strings")
        abbreviations = tuple(a.strip() for a in items)

    prices = _merged(base.prices, raw.get("prices"), "prices")
    for model, price in prices.items():
        if not isinstance(price, (int, float)) or price <= 0:
            raise ConfigError(f"{path}: price for '{model}' must be a positive number")

    models = dict(base.models)
    for name, entry in (raw.get("models") or {}).items():
        models[name] = _merged(models.get(name, {"model_id": name}), entry, f"models.{name}")

    settings = Settings(
        abbreviations=abbreviations,
        prices={k: float(v) for k, v in prices.items()},
        models=models,
        finetune=_merged(base.finetune, raw.get("finetune"), "finetune"),
        defaults=_merged(base.defaults, raw.get("defaults"), "defaults"),
    )
    logger.debug("Loaded settings from %s", path)
    return settings


def load_abbreviations(path: str | Path) -> Tuple[str, ...]:
    """Read an abbreviation list: one per line, '#' comments and blanks skipped."""
    items = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            text = line.strip()
            if text and not text.startswith("#"):
                items.append(text)
    return tuple(items)
