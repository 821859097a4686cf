# llm_client.py  –  OpenAI-compatible chat-completions client with a mock transport

from __future__ import annotations

import logging
import os
import threading
import time
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Optional, Sequence, Union

import requests
from tenacity import Retrying, retry_if_exception, stop_after_attempt, wait_random_exponential

from config import (
    BACKOFF_BASE,
    BACKOFF_CAP,
    DEFAULT_API_KEY_ENV,
    DEFAULT_BASE_URL,
    DEFAULTS,
    Settings,
)
from errors import (
    AuthError,
    MalformedResponseError,
    RateLimitedError,
    ScriptExhaustedError,
    TransportError,
)

logger = logging.getLogger(__name__)

ROLES = ("system", "user", "assistant")
CHAT_PATH = "/v1/chat/completions"


@dataclass(frozen=True)
class ChatMessage:
    role: str
    content: str

    def __post_init__(self):
        if self.role not in ROLES:
            raise ValueError(f"role must be one of {ROLES}, got {self.role!r}")
        if not isinstance(self.content, str):
            raise ValueError("message content must be a string")
        if not self.content and self.role != "assistant":
            raise ValueError(f"{self.role} message content must not be empty")

    def to_dict(self) -> Dict[str, str]:
        return {"role": self.role, "content": self.content}


@dataclass(frozen=True)
class ModelConfig:
    model_id: str
    base_url: str = DEFAULT_BASE_URL
    api_key_env: str = DEFAULT_API_KEY_ENV
    temperature: float = DEFAULTS["temperature"]
    seed: Optional[int] = None
    request_timeout: float = DEFAULTS["request_timeout"]
    max_transport_retries: int = DEFAULTS["max_transport_retries"]
    label: Optional[str] = None

    def __post_init__(self):
        if not self.model_id or not self.model_id.strip():
            raise ValueError("model_id must not be empty")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_transport_retries < 0:
            raise ValueError("max_transport_retries must be >= 0")
        if self.request_timeout <= 0:
            raise ValueError("request_timeout must be positive")

    @property
    def display_label(self) -> str:
        return self.label or self.model_id

    @property
    def endpoint(self) -> str:
        return self.base_url.rstrip("/") + CHAT_PATH

    def describe(self) -> Dict[str, Any]:
        """Loggable view of the config.  Holds the key's variable name only."""
        return {
            "model_id": self.model_id,
            "base_url": self.base_url,
            "api_key_env": self.api_key_env,
            "temperature": self.temperature,
            "seed": self.seed,
            "request_timeout": self.request_timeout,
            "max_transport_retries": self.max_transport_retries,
        }


def resolve_model(name: str, settings: Optional[Settings] = None, **overrides: Any) -> ModelConfig:
    """Look *name* up in the registry; fine-tuned ids (``ft:...`` or ``...-ft``)
    and names unknown to the registry are passed through as model ids.
    Keyword overrides that are ``None`` are ignored."""
    settings = settings or Settings()
    fields: Dict[str, Any] = {"model_id": name}
    fields.update(settings.models.get(name, {}))
    for key in ("request_timeout", "max_transport_retries", "temperature"):
        fields.setdefault(key, settings.defaults.get(key, DEFAULTS[key]))
    fields.update({k: v for k, v in overrides.items() if v is not None})
    if name.startswith("ft:") or name.endswith("-ft"):
        logger.debug("Using fine-tuned model id %s", name)
    return ModelConfig(**fields)


# ─────────────────────────────────────────────
#  Transports
# ─────────────────────────────────────────────

@dataclass(frozen=True)
class TransportResponse:
    status: int
    body: Any


class HttpTransport:
    """POSTs JSON with ``requests``.  Network errors surface as TransportError."""

    needs_credentials = True

    def send(self, url: str, headers: Dict[str, str], payload: Dict[str, Any], timeout: float) -> TransportResponse:
        try:
            response = requests.post(url, headers=headers, json=payload, timeout=timeout)
        except requests.Timeout as exc:
            raise TransportError(f"request timed out after {timeout}s") from exc
        except requests.RequestException as exc:
            raise TransportError(f"request failed: {exc.__class__.__name__}") from exc
        try:
            body = response.json()
        except ValueError:
            body = None
        return TransportResponse(status=response.status_code, body=body)


@dataclass(frozen=True)
class MockFailure:
    """A scripted failure: an HTTP status, or a timeout when ``status`` is None."""

    status: Optional[int] = None
    message: str = "scripted failure"


ScriptItem = Union[str, MockFailure, Callable[[Dict[str, Any]], Union[str, MockFailure]]]


def failure(status: Optional[int] = None, message: str = "scripted failure") -> MockFailure:
    return MockFailure(status=status, message=message)


def echo_last_user(payload: Dict[str, Any]) -> str:
    """Responder that answers with the last user message verbatim."""
    users = [m["content"] for m in payload["messages"] if m["role"] == "user"]
    return users[-1] if users else ""


def _completion_body(content: str) -> Dict[str, Any]:
    return {"choices": [{"index": 0, "message": {"role": "assistant", "content": content}}]}


class MockTransport:
    """In-memory transport.  Plays *script* in order, or asks *responder* for
    every request.  Keeps a call log and the peak number of concurrent calls."""

    needs_credentials = False

    def __init__(
        self,
        script: Optional[Sequence[ScriptItem]] = None,
        responder: Optional[Callable[[Dict[str, Any]], Union[str, MockFailure]]] = None,
        delay: float = 0.0,
    ):
        if script is None and responder is None:
            raise ValueError("MockTransport needs a script or a responder")
        self._script: List[ScriptItem] = list(script or [])
        self._responder = responder
        self._delay = delay
        self._lock = threading.Lock()
        self._in_flight = 0
        self.max_in_flight = 0
        self.calls: List[Dict[str, Any]] = []

    @property
    def remaining(self) -> int:
        return len(self._script)

    def _next_item(self, payload: Dict[str, Any]) -> ScriptItem:
        with self._lock:
            self.calls.append(payload)
            if self._responder is not None:
                return self._responder
            if not self._script:
                raise ScriptExhaustedError(f"mock script exhausted after {len(self.calls) - 1} calls")
            return self._script.pop(0)

    def send(self, url: str, headers: Dict[str, str], payload: Dict[str, Any], timeout: float) -> TransportResponse:
        item = self._next_item(payload)
        with self._lock:
            self._in_flight += 1
            self.max_in_flight = max(self.max_in_flight, self._in_flight)
        try:
            if self._delay:
                time.sleep(self._delay)
            if callable(item):
                item = item(payload)
            if isinstance(item, MockFailure):
                if item.status is None:
                    raise TransportError(f"mock timeout: {item.message}")
                return TransportResponse(status=item.status, body={"error": {"message": item.message}})
            return TransportResponse(status=200, body=_completion_body(item))
        finally:
            with self._lock:
                self._in_flight -= 1


# ─────────────────────────────────────────────
#  Client
# ─────────────────────────────────────────────

def _is_retryable(exc: BaseException) -> bool:
    if isinstance(exc, RateLimitedError):
        return True
    return isinstance(exc, TransportError) and exc.retryable


def _no_sleep(_seconds: float) -> None:
    return None


def _extract_content(body: Any) -> str:
    """Pull ``choices[0].message.content`` out of a response body."""
    try:
        content = body["choices"][0]["message"]["content"]
    except (KeyError, IndexError, TypeError) as exc:
        raise MalformedResponseError("response lacks choices[0].message.content") from exc
    if not isinstance(content, str):
        raise MalformedResponseError("assistant content is not a string")
    return content


class ChatClient:
    """A handle on one model behind one transport.

    Safe to share between threads: retry state lives in each call.
    """

    def __init__(self, config: ModelConfig, transport=None, sleep: Callable[[float], None] = time.sleep):
        self.config = config
        self.transport = transport or HttpTransport()
        self._sleep = sleep

    def _headers(self) -> Dict[str, str]:
        headers = {"Content-Type": "application/json"}
        if getattr(self.transport, "needs_credentials", True):
            key = os.environ.get(self.config.api_key_env, "").strip()
            if not key:
                raise AuthError(f"environment variable {self.config.api_key_env} is not set")
            headers["Authorization"] = f"Bearer {key}"
        return headers

    def check_credentials(self) -> None:
        """Raise AuthError now if the key variable is unset (real transports only)."""
        self._headers()

    def _payload(self, messages: Sequence[ChatMessage]) -> Dict[str, Any]:
        payload: Dict[str, Any] = {
            "model": self.config.model_id,
            "messages": [m.to_dict() for m in messages],
            "temperature": self.config.temperature,
        }
        if self.config.seed is not None:
            payload["seed"] = self.config.seed
        return payload

    def _attempt(self, headers: Dict[str, str], payload: Dict[str, Any]) -> str:
        response = self.transport.send(self.config.endpoint, headers, payload, self.config.request_timeout)
        status = response.status
        if status in (401, 403):
            raise AuthError(f"endpoint rejected credentials (HTTP {status})")
        if status == 429:
            raise RateLimitedError("rate limited (HTTP 429)")
        if status >= 500:
            raise TransportError(f"server error (HTTP {status})")
        if status >= 400:
            raise TransportError(f"request rejected (HTTP {status})", retryable=False)
        return _extract_content(response.body)

    def _log_retry(self, retry_state) -> None:
        exc = retry_state.outcome.exception()
        logger.warning(
            "%s: attempt %d failed (%s); retrying in %.1fs",
            self.config.model_id,
            retry_state.attempt_number,
            exc,
            retry_state.next_action.sleep if retry_state.next_action else 0.0,
        )

    def chat_complete(self, messages: Sequence[ChatMessage]) -> str:
        """Send *messages*; return the first choice's content verbatim."""
        if not messages:
            raise ValueError("messages must not be empty")
        if messages[0].role != "system":
            raise ValueError("the first message must have role 'system'")

        headers = self._headers()
        payload = self._payload(messages)
        retrying = Retrying(
            stop=stop_after_attempt(1 + self.config.max_transport_retries),
            wait=wait_random_exponential(multiplier=BACKOFF_BASE, max=BACKOFF_CAP),
            retry=retry_if_exception(_is_retryable),
            sleep=self._sleep,
            before_sleep=self._log_retry,
            reraise=True,
        )
        return retrying(self._attempt, headers, payload)


def chat_complete(config: ModelConfig, messages: Sequence[ChatMessage], transport=None) -> str:
    return ChatClient(config, transport).chat_complete(messages)


def with_mock_transport(
    script: Sequence[ScriptItem],
    config: Optional[ModelConfig] = None,
    delay: float = 0.0,
) -> ChatClient:
    """Client whose calls consume *script* in order; backoff does not sleep."""
    if not script:
        raise ValueError("mock script must not be empty")
    return ChatClient(config or ModelConfig(model_id="mock-model"), MockTransport(script=script, delay=delay), sleep=_no_sleep)


def with_mock_responder(
    responder: Callable[[Dict[str, Any]], Union[str, MockFailure]],
    config: Optional[ModelConfig] = None,
    delay: float = 0.0,
) -> ChatClient:
    """Client whose every call is answered by *responder(payload)*."""
    return ChatClient(config or ModelConfig(model_id="mock-model"), MockTransport(responder=responder, delay=delay), sleep=_no_sleep)
