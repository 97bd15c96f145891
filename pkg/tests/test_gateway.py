import json
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import pytest

from capgen.gateway import (
    DEFAULT_PROFILES,
    LIVE,
    REPLAY,
    CompletionRequest,
    CompletionResult,
    FixtureNotFoundError,
    MissingCredentialsError,
    ProviderError,
    ProviderProfile,
    complete,
    compute_cost,
    cost_report,
    guard_context,
)
from capgen.prompts import estimate_tokens

from .study_reference import CONTEXT_WINDOWS, MEAN_COST_PER_PROMPT


# -- context guard -----------------------------------------------------------

def _profile(window: int, name: str = "p") -> ProviderProfile:
    return ProviderProfile(
        name=name, model_id="m", context_window=window,
        input_rate=0.01, output_rate=0.03, endpoint="http://unused",
        auth_env_var="UNUSED_KEY")


def _long_prompt() -> str:
    # sized like the one-shot parity prompt
    return "x" * (22_730 * 4)


def test_guard_rejects_small_window():
    req = CompletionRequest(
        provider=_profile(CONTEXT_WINDOWS["gemini"], "gemini"),
        prompt=_long_prompt(), max_output_tokens=10_000)
    decision = guard_context(req)
    assert not decision.accepted
    assert "gemini" in decision.reason
    assert decision.overflow > 0


def test_guard_accepts_large_windows():
    for name in ("gpt", "claude"):
        req = CompletionRequest(
            provider=_profile(CONTEXT_WINDOWS[name], name),
            prompt=_long_prompt(), max_output_tokens=10_000)
        assert guard_context(req).accepted


def test_guard_accepts_empty_prompt():
    req = CompletionRequest(provider=_profile(1000), prompt="", max_output_tokens=100)
    assert guard_context(req).accepted


# -- replay mode -------------------------------------------------------------

def test_replay_returns_fixture_verbatim(tmp_path):
    (tmp_path / "gpt").mkdir()
    body = "@prefix ex: <http://e/> .\nex:a ex:p ex:b .\n"
    (tmp_path / "gpt" / "C1-zero.txt").write_text(body)
    req = CompletionRequest(
        provider=_profile(100_000, "gpt"), prompt="hello",
        experiment_key="C1-zero-gpt")
    result = complete(req, mode=REPLAY, fixtures_dir=tmp_path)
    assert result.text == body
    assert result.mode == REPLAY
    assert result.input_tokens == estimate_tokens("hello")
    assert result.cost_consistent(req.provider)


def test_replay_missing_fixture(tmp_path):
    req = CompletionRequest(
        provider=_profile(100_000, "gpt"), prompt="hello",
        experiment_key="C9-zero-gpt")
    with pytest.raises(FixtureNotFoundError):
        complete(req, mode=REPLAY, fixtures_dir=tmp_path)


def test_replay_determinism(tmp_path):
    (tmp_path / "gpt").mkdir()
    (tmp_path / "gpt" / "C1-zero.txt").write_text("same body")
    req = CompletionRequest(
        provider=_profile(100_000, "gpt"), prompt="p", experiment_key="C1-zero-gpt")
    a = complete(req, mode=REPLAY, fixtures_dir=tmp_path)
    b = complete(req, mode=REPLAY, fixtures_dir=tmp_path)
    assert (a.text, a.input_tokens, a.output_tokens, a.cost) == \
        (b.text, b.input_tokens, b.output_tokens, b.cost)


# -- live mode against a local stub ------------------------------------------

class _StubState:
    def __init__(self, failures=0, status=500):
        self.failures = failures
        self.status = status
        self.requests: list[dict] = []


def _make_handler(state: _StubState):
    class Handler(BaseHTTPRequestHandler):
        def do_POST(self):
            length = int(self.headers.get("Content-Length", 0))
            payload = json.loads(self.rfile.read(length))
            state.requests.append(
                {"path": self.path, "body": payload,
                 "auth": self.headers.get("Authorization", "")})
            if state.failures > 0:
                state.failures -= 1
                self.send_response(state.status)
                self.end_headers()
                self.wfile.write(b"{}")
                return
            body = json.dumps({
                "choices": [{"message": {"role": "assistant", "content": "canned body"}}],
                "usage": {"prompt_tokens": 12, "completion_tokens": 3},
            }).encode()
            self.send_response(200)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def log_message(self, *args):
            pass

    return Handler


@pytest.fixture
def stub_server():
    state = _StubState()
    server = HTTPServer(("127.0.0.1", 0), _make_handler(state))
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield state, f"http://127.0.0.1:{server.server_port}/v1/chat/completions"
    server.shutdown()


def _live_profile(url: str) -> ProviderProfile:
    return ProviderProfile(
        name="stub", model_id="stub-model", context_window=100_000,
        input_rate=0.01, output_rate=0.03, endpoint=url,
        auth_env_var="STUB_API_KEY")


def test_live_returns_canned_body_without_retries(stub_server, monkeypatch):
    state, url = stub_server
    monkeypatch.setenv("STUB_API_KEY", "sk-test")
    sleeps: list[float] = []
    req = CompletionRequest(provider=_live_profile(url), prompt="ping",
                            experiment_key="x")
    result = complete(req, mode=LIVE, sleep=sleeps.append)
    assert result.text == "canned body"
    assert result.mode == LIVE
    assert (result.input_tokens, result.output_tokens) == (12, 3)
    assert result.cost_consistent(req.provider)
    assert len(state.requests) == 1
    assert not [s for s in sleeps if s > 0]  # no retry backoff
    # request shape: model, messages, temperature 0, auth header
    body = state.requests[0]["body"]
    assert body["model"] == "stub-model"
    assert body["temperature"] == 0.0
    assert body["messages"][0]["content"] == "ping"
    assert state.requests[0]["auth"] == "Bearer sk-test"


def test_live_retries_on_transient_failures(stub_server, monkeypatch):
    state, url = stub_server
    state.failures = 2
    state.status = 500
    monkeypatch.setenv("STUB_API_KEY", "sk-test")
    sleeps: list[float] = []
    req = CompletionRequest(provider=_live_profile(url), prompt="ping")
    result = complete(req, mode=LIVE, sleep=sleeps.append)
    assert result.text == "canned body"
    assert len(state.requests) == 3
    backoffs = [s for s in sleeps if s > 0]
    assert backoffs == [1.0, 2.0]  # exponential, base one second


def test_live_gives_up_after_retry_budget(stub_server, monkeypatch):
    state, url = stub_server
    state.failures = 99
    state.status = 429
    monkeypatch.setenv("STUB_API_KEY", "sk-test")
    req = CompletionRequest(provider=_live_profile(url), prompt="ping")
    with pytest.raises(ProviderError) as exc:
        complete(req, mode=LIVE, sleep=lambda s: None)
    assert exc.value.attempts == 3
    assert len(state.requests) == 3


def test_live_does_not_retry_client_errors(stub_server, monkeypatch):
    state, url = stub_server
    state.failures = 99
    state.status = 400
    monkeypatch.setenv("STUB_API_KEY", "sk-test")
    req = CompletionRequest(provider=_live_profile(url), prompt="ping")
    with pytest.raises(ProviderError):
        complete(req, mode=LIVE, sleep=lambda s: None)
    assert len(state.requests) == 1


def test_live_requires_credentials(monkeypatch):
    monkeypatch.delenv("STUB_API_KEY", raising=False)
    req = CompletionRequest(provider=_live_profile("http://127.0.0.1:1/x"), prompt="p")
    with pytest.raises(MissingCredentialsError) as exc:
        complete(req, mode=LIVE)
    assert exc.value.env_var == "STUB_API_KEY"


# -- cost accounting ----------------------------------------------------------

def _result(cost: float) -> CompletionResult:
    return CompletionResult(text="", input_tokens=0, output_tokens=0,
                            cost=cost, latency=0.0, mode=REPLAY)


def test_cost_report_empty():
    summary = cost_report([])
    assert (summary.total, summary.mean_per_prompt) == (0.0, 0.0)


def test_cost_report_mean():
    summary = cost_report([_result(0.10), _result(0.30)])
    assert summary.mean_per_prompt == pytest.approx(0.20)
    assert summary.total == pytest.approx(0.40)


def test_cost_formula_holds():
    profile = DEFAULT_PROFILES["gpt"]
    assert compute_cost(profile, 1000, 1000) == pytest.approx(0.01 + 0.03)


def test_replayed_gpt_study_mean_cost(corpus, fixtures_dir):
    # 21 replayed prompts with corpus token counts and study-era rates
    from capgen.pipeline import TECHNIQUE_SHORT
    from capgen.prompts import render_prompt

    profile = DEFAULT_PROFILES["gpt"]
    results = []
    for cap in corpus.ordered_capabilities():
        if not cap.is_study_target:
            continue
        for technique, short in TECHNIQUE_SHORT.items():
            template = corpus.templates[technique]
            pairs = [corpus.examples[e] for e in template.example_ids]
            prompt = render_prompt(template, corpus.tbox_text, pairs, cap.description)
            req = CompletionRequest(
                provider=profile, prompt=prompt.rendered_text,
                experiment_key=f"{cap.id}-{short}-gpt")
            results.append(complete(req, mode=REPLAY, fixtures_dir=fixtures_dir))
    assert len(results) == 21
    mean = cost_report(results).mean_per_prompt
    reference = MEAN_COST_PER_PROMPT["gpt"]
    assert reference * 0.75 <= mean <= reference * 1.25
