import logging

import pytest
import requests

from errors import (
    AuthError,
    MalformedResponseError,
    RateLimitedError,
    ScriptExhaustedError,
    TransportError,
)
from llm_client import (
    ChatClient,
    ChatMessage,
    ModelConfig,
    MockTransport,
    echo_last_user,
    failure,
    resolve_model,
    with_mock_responder,
    with_mock_transport,
)

MESSAGES = [ChatMessage("system", "You simplify text."), ChatMessage("user", "['A sentence.']")]


class FakeResponse:
    def __init__(self, status, body):
        self.status_code = status
        self._body = body

    def json(self):
        if self._body is None:
            raise ValueError("no JSON")
        return self._body


def completion(content):
    return {"choices": [{"message": {"role": "assistant", "content": content}}]}


@pytest.fixture
def http(monkeypatch):
    """Scripted replacement for requests.post; records every call."""
    calls = []
    script = []

    def post(url, headers=None, json=None, timeout=None):
        calls.append({"url": url, "headers": headers, "json": json, "timeout": timeout})
        item = script.pop(0)
        if isinstance(item, Exception):
            raise item
        return item

    monkeypatch.setattr(requests, "post", post)
    monkeypatch.setenv("TEST_LLM_KEY", "sk-secret-value")
    return calls, script


def client(**overrides):
    config = ModelConfig(model_id="gpt-4.1-mini", base_url="http://llm.test/", api_key_env="TEST_LLM_KEY", **overrides)
    sleeps = []
    return ChatClient(config, sleep=sleeps.append), sleeps


def test_request_shape(http):
    calls, script = http
    script.append(FakeResponse(200, completion("['Short.']")))
    chat, _ = client(seed=42)

    assert chat.chat_complete(MESSAGES) == "['Short.']"
    call = calls[0]
    assert call["url"] == "http://llm.test/v1/chat/completions"
    assert call["headers"]["Authorization"] == "Bearer sk-secret-value"
    assert call["json"]["model"] == "gpt-4.1-mini"
    assert call["json"]["temperature"] == 0.0
    assert call["json"]["seed"] == 42
    assert call["json"]["messages"][0] == {"role": "system", "content": "You simplify text."}
    assert call["timeout"] == 60.0


def test_seed_is_omitted_when_unset(http):
    calls, script = http
    script.append(FakeResponse(200, completion("ok")))
    chat, _ = client()
    chat.chat_complete(MESSAGES)
    assert "seed" not in calls[0]["json"]


def test_missing_key_fails_before_any_request(http, monkeypatch):
    calls, _ = http
    monkeypatch.delenv("TEST_LLM_KEY")
    chat, _ = client()
    with pytest.raises(AuthError):
        chat.chat_complete(MESSAGES)
    with pytest.raises(AuthError):
        chat.check_credentials()
    assert calls == []


@pytest.mark.parametrize("status", [401, 403])
def test_auth_failures_are_not_retried(http, status):
    calls, script = http
    script.append(FakeResponse(status, {"error": {"message": "bad key"}}))
    chat, sleeps = client()
    with pytest.raises(AuthError):
        chat.chat_complete(MESSAGES)
    assert len(calls) == 1
    assert sleeps == []


def test_rate_limit_is_retried_with_backoff(http):
    calls, script = http
    script.extend([FakeResponse(429, None), FakeResponse(429, None), FakeResponse(200, completion("done"))])
    chat, sleeps = client()
    assert chat.chat_complete(MESSAGES) == "done"
    assert len(calls) == 3
    assert len(sleeps) == 2
    assert all(0 <= s <= 30 for s in sleeps)


def test_rate_limit_outlives_retries(http):
    calls, script = http
    script.extend([FakeResponse(429, None)] * 3)
    chat, _ = client(max_transport_retries=2)
    with pytest.raises(RateLimitedError):
        chat.chat_complete(MESSAGES)
    assert len(calls) == 3


def test_server_errors_and_timeouts_are_retried(http):
    calls, script = http
    script.extend([FakeResponse(503, None), requests.Timeout("slow"), FakeResponse(200, completion("fine"))])
    chat, sleeps = client()
    assert chat.chat_complete(MESSAGES) == "fine"
    assert len(sleeps) == 2


def test_transport_error_after_retries(http):
    calls, script = http
    script.extend([requests.ConnectionError("down")] * 4)
    chat, _ = client()
    with pytest.raises(TransportError):
        chat.chat_complete(MESSAGES)
    assert len(calls) == 4


def test_client_error_is_not_retried(http):
    calls, script = http
    script.append(FakeResponse(400, {"error": {"message": "bad request"}}))
    chat, _ = client()
    with pytest.raises(TransportError):
        chat.chat_complete(MESSAGES)
    assert len(calls) == 1


@pytest.mark.parametrize("body", [{}, {"choices": []}, {"choices": [{"message": {}}]}, None])
def test_malformed_body(http, body):
    _, script = http
    script.append(FakeResponse(200, body))
    chat, _ = client()
    with pytest.raises(MalformedResponseError):
        chat.chat_complete(MESSAGES)


def test_key_never_reaches_the_log(http, caplog):
    _, script = http
    script.extend([FakeResponse(500, None), FakeResponse(200, completion("ok"))])
    chat, _ = client()
    with caplog.at_level(logging.DEBUG):
        chat.chat_complete(MESSAGES)
    assert "retrying" in caplog.text
    assert "sk-secret-value" not in caplog.text


def test_first_message_must_be_system():
    chat = with_mock_transport(["x"])
    with pytest.raises(ValueError):
        chat.chat_complete([ChatMessage("user", "hi")])
    with pytest.raises(ValueError):
        chat.chat_complete([])


def test_chat_message_validation():
    with pytest.raises(ValueError):
        ChatMessage("tool", "x")
    with pytest.raises(ValueError):
        ChatMessage("user", "")
    assert ChatMessage("assistant", "").content == ""


# ─────────────────────────────────────────────
#  Mock transport
# ─────────────────────────────────────────────

def test_mock_script_plays_in_order_and_retries_failures():
    chat = with_mock_transport([failure(500), failure(None), "['One.']", "['Two.']"])
    assert chat.chat_complete(MESSAGES) == "['One.']"
    assert chat.chat_complete(MESSAGES) == "['Two.']"
    assert chat.transport.remaining == 0
    assert len(chat.transport.calls) == 4


def test_mock_script_exhausted():
    chat = with_mock_transport(["only"])
    chat.chat_complete(MESSAGES)
    with pytest.raises(ScriptExhaustedError):
        chat.chat_complete(MESSAGES)


def test_mock_needs_no_credentials(monkeypatch):
    monkeypatch.delenv("OPENAI_API_KEY", raising=False)
    assert with_mock_transport(["ok"]).chat_complete(MESSAGES) == "ok"


def test_mock_responder_sees_the_payload():
    chat = with_mock_responder(echo_last_user)
    assert chat.chat_complete(MESSAGES) == "['A sentence.']"
    assert chat.transport.calls[0]["model"] == "mock-model"


def test_empty_script_is_rejected():
    with pytest.raises(ValueError):
        with_mock_transport([])
    with pytest.raises(ValueError):
        MockTransport()


# ─────────────────────────────────────────────
#  Model configuration
# ─────────────────────────────────────────────

def test_describe_holds_variable_name_only(monkeypatch):
    monkeypatch.setenv("OPENAI_API_KEY", "sk-do-not-print")
    described = ModelConfig(model_id="gpt-4.1").describe()
    assert described["api_key_env"] == "OPENAI_API_KEY"
    assert "sk-do-not-print" not in repr(described)


def test_resolve_model_registry_and_overrides():
    config = resolve_model("gpt-4.1-nano", temperature=None, seed=7)
    assert config.model_id == "gpt-4.1-nano"
    assert config.temperature == 0.0
    assert config.seed == 7
    assert config.display_label == "gpt-4.1-nano"


def test_resolve_model_passes_fine_tuned_ids_through():
    model_id = "ft:gpt-4.1-mini-2025-04-14:lab::abc123"
    config = resolve_model(model_id, label="gpt-4.1-mini-ft", base_url="http://local:8000")
    assert config.model_id == model_id
    assert config.display_label == "gpt-4.1-mini-ft"
    assert config.endpoint == "http://local:8000/v1/chat/completions"


def test_model_config_validation():
    with pytest.raises(ValueError):
        ModelConfig(model_id="")
    with pytest.raises(ValueError):
        ModelConfig(model_id="m", temperature=-1)
