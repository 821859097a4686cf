# errors.py  –  Exception hierarchy shared by every module

from __future__ import annotations


class SimplifyError(Exception):
    """Root of every error this package raises on purpose."""


class ConfigError(SimplifyError, ValueError):
    pass


# ── text processing ───────────────────────────────────────────
class TextError(SimplifyError, ValueError):
    pass


class EmptyInputError(TextError):
    pass


class NonAlphabeticError(TextError):
    pass


# ── metrics ───────────────────────────────────────────────────
class MetricError(SimplifyError, ValueError):
    pass


class EmptyCorpusError(MetricError):
    pass


class LengthMismatchError(MetricError):
    pass


class NoWordsError(MetricError):
    pass


class ZeroSourceTokensError(MetricError):
    pass


# ── chat client ───────────────────────────────────────────────
class LLMClientError(SimplifyError):
    pass


class AuthError(LLMClientError):
    """401/403 or a missing credential.  Never retried."""


class RateLimitedError(LLMClientError):
    """HTTP 429 that outlived every transport retry."""


class TransportError(LLMClientError):
    """Network failure, timeout or 5xx that outlived every transport retry."""

    def __init__(self, message: str, retryable: bool = True):
        self.retryable = retryable
        super().__init__(message)


class MalformedResponseError(LLMClientError):
    pass


class ScriptExhaustedError(LLMClientError):
    """The mock transport ran out of canned responses."""


# ── prompts ───────────────────────────────────────────────────
class PromptError(SimplifyError, ValueError):
    pass


class WrongTaskError(PromptError):
    pass


class NoListFoundError(PromptError):
    pass


class MalformedLiteralError(PromptError):
    pass


class MultipleListsError(PromptError):
    pass


# ── fine-tune builder ─────────────────────────────────────────
class FinetuneError(SimplifyError, ValueError):
    pass


class EmptyPairsError(FinetuneError):
    pass


class InvalidPairError(FinetuneError):
    pass


class UnknownModelError(FinetuneError):
    pass


# ── corpus / harness ──────────────────────────────────────────
class CorpusError(SimplifyError, ValueError):
    pass


class SchemaError(CorpusError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class DuplicateDocIdError(CorpusError):
    pass


class UnknownDocIdError(CorpusError):
    pass
