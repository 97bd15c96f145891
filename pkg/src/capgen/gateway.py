"""Chat-completion gateway: context guards, retries, cost accounting, replay.

LIVE mode talks HTTP to a provider endpoint through a small per-flavor
adapter (request/response field names differ between vendors). REPLAY mode
reads stored response fixtures and never touches the network, which keeps
every study run deterministic and offline.
"""
from __future__ import annotations

import json
import os
import threading
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Optional, Sequence

import requests

from .prompts import estimate_tokens

LIVE = "LIVE"
REPLAY = "REPLAY"

RETRY_ATTEMPTS = 3
RETRY_BASE_DELAY = 1.0
RETRYABLE_STATUS = {429, 500, 502, 503, 504}
DEFAULT_MAX_OUTPUT_TOKENS = 4096


class GatewayError(Exception):
    pass


class MissingCredentialsError(GatewayError):
    def __init__(self, env_var: str, provider: str):
        self.env_var = env_var
        super().__init__(f"environment variable {env_var} is not set (provider {provider})")


class FixtureNotFoundError(GatewayError):
    def __init__(self, key: str, path: Path):
        self.key = key
        self.path = path
        super().__init__(f"no fixture for experiment {key!r} at {path}")


class ProviderError(GatewayError):
    def __init__(self, provider: str, detail: str, attempts: int):
        self.provider = provider
        self.attempts = attempts
        super().__init__(f"provider {provider} failed after {attempts} attempt(s): {detail}")


class ContextGuardRejected(GatewayError):
    pass


@dataclass(frozen=True)
class ProviderProfile:
    name: str
    model_id: str
    context_window: int
    input_rate: float  # currency per 1000 input tokens
    output_rate: float  # currency per 1000 output tokens
    endpoint: str
    auth_env_var: str
    api_flavor: str = "openai"  # openai | anthropic | gemini
    requests_per_minute: Optional[int] = None

    def __post_init__(self) -> None:
        if self.context_window <= 0:
            raise ValueError("context window must be positive")

    @classmethod
    def from_dict(cls, data: dict) -> "ProviderProfile":
        return cls(
            name=data["name"],
            model_id=data["model_id"],
            context_window=int(data["context_window"]),
            input_rate=float(data["input_rate"]),
            output_rate=float(data["output_rate"]),
            endpoint=data.get("endpoint", ""),
            auth_env_var=data.get("auth_env_var", ""),
            api_flavor=data.get("api_flavor", "openai"),
            requests_per_minute=data.get("requests_per_minute"),
        )


# Profiles matching the study setup; windows are vendor-reported token limits
# and rates are the vendors' published per-1k-token prices at study time.
DEFAULT_PROFILES = {
    "gpt": ProviderProfile(
        name="gpt", model_id="gpt-4-turbo-2024-04-09", context_window=128_000,
        input_rate=0.01, output_rate=0.03,
        endpoint="https://api.openai.com/v1/chat/completions",
        auth_env_var="OPENAI_API_KEY", api_flavor="openai"),
    "claude": ProviderProfile(
        name="claude", model_id="claude-3-opus-20240229", context_window=200_000,
        input_rate=0.015, output_rate=0.075,
        endpoint="https://api.anthropic.com/v1/messages",
        auth_env_var="ANTHROPIC_API_KEY", api_flavor="anthropic"),
    "gemini": ProviderProfile(
        name="gemini", model_id="gemini-1.0-pro", context_window=30_720,
        input_rate=0.0005, output_rate=0.0015,
        endpoint="https://generativelanguage.googleapis.com/v1beta/models/gemini-1.0-pro:generateContent",
        auth_env_var="GOOGLE_API_KEY", api_flavor="gemini"),
}


@dataclass(frozen=True)
class CompletionRequest:
    provider: ProviderProfile
    prompt: str
    temperature: float = 0.0
    max_output_tokens: int = DEFAULT_MAX_OUTPUT_TOKENS
    experiment_key: str = ""


@dataclass(frozen=True)
class CompletionResult:
    text: str
    input_tokens: int
    output_tokens: int
    cost: float
    latency: float
    mode: str

    def cost_consistent(self, profile: ProviderProfile) -> bool:
        expected = compute_cost(profile, self.input_tokens, self.output_tokens)
        return abs(expected - self.cost) < 1e-9


@dataclass(frozen=True)
class GuardDecision:
    accepted: bool
    provider: str
    prompt_tokens: int
    budget: int
    overflow: int = 0
    reason: str = ""


def compute_cost(profile: ProviderProfile, input_tokens: int, output_tokens: int) -> float:
    return input_tokens * profile.input_rate / 1000 + output_tokens * profile.output_rate / 1000


def guard_context(req: CompletionRequest) -> GuardDecision:
    """Reject requests whose prompt plus output budget exceeds the window."""
    prompt_tokens = estimate_tokens(req.prompt)
    needed = prompt_tokens + req.max_output_tokens
    window = req.provider.context_window
    if needed > window:
        return GuardDecision(
            accepted=False, provider=req.provider.name,
            prompt_tokens=prompt_tokens, budget=window, overflow=needed - window,
            reason=(f"prompt ({prompt_tokens} tokens) plus output budget "
                    f"({req.max_output_tokens}) exceeds {req.provider.name} window "
                    f"of {window} by {needed - window} tokens"))
    return GuardDecision(
        accepted=True, provider=req.provider.name,
        prompt_tokens=prompt_tokens, budget=window)


# -- provider adapters -------------------------------------------------------

def _openai_request(req: CompletionRequest, key: str):
    headers = {"Authorization": f"Bearer {key}", "Content-Type": "application/json"}
    body = {
        "model": req.provider.model_id,
        "messages": [{"role": "user", "content": req.prompt}],
        "temperature": req.temperature,
        "max_tokens": req.max_output_tokens,
    }
    return req.provider.endpoint, headers, body


def _openai_parse(payload: dict) -> tuple[str, Optional[int], Optional[int]]:
    text = payload["choices"][0]["message"]["content"]
    usage = payload.get("usage", {})
    return text, usage.get("prompt_tokens"), usage.get("completion_tokens")


def _anthropic_request(req: CompletionRequest, key: str):
    headers = {
        "x-api-key": key,
        "anthropic-version": "2023-06-01",
        "Content-Type": "application/json",
    }
    body = {
        "model": req.provider.model_id,
        "messages": [{"role": "user", "content": req.prompt}],
        "temperature": req.temperature,
        "max_tokens": req.max_output_tokens,
    }
    return req.provider.endpoint, headers, body


def _anthropic_parse(payload: dict) -> tuple[str, Optional[int], Optional[int]]:
    text = "".join(block.get("text", "") for block in payload["content"])
    usage = payload.get("usage", {})
    return text, usage.get("input_tokens"), usage.get("output_tokens")


def _gemini_request(req: CompletionRequest, key: str):
    headers = {"Content-Type": "application/json"}
    url = f"{req.provider.endpoint}?key={key}"
    body = {
        "contents": [{"parts": [{"text": req.prompt}]}],
        "generationConfig": {
            "temperature": req.temperature,
            "maxOutputTokens": req.max_output_tokens,
        },
    }
    return url, headers, body


def _gemini_parse(payload: dict) -> tuple[str, Optional[int], Optional[int]]:
    candidate = payload["candidates"][0]
    text = "".join(part.get("text", "") for part in candidate["content"]["parts"])
    usage = payload.get("usageMetadata", {})
    return text, usage.get("promptTokenCount"), usage.get("candidatesTokenCount")


_ADAPTERS = {
    "openai": (_openai_request, _openai_parse),
    "anthropic": (_anthropic_request, _anthropic_parse),
    "gemini": (_gemini_request, _gemini_parse),
}


class _RateGate:
    """Serializes requests to one provider and enforces a minimum interval."""

    def __init__(self, requests_per_minute: Optional[int]):
        self._lock = threading.Lock()
        self._interval = 60.0 / requests_per_minute if requests_per_minute else 0.0
        self._last = 0.0

    def wait(self, sleep: Callable[[float], None]) -> None:
        with self._lock:
            now = time.monotonic()
            delay = self._last + self._interval - now
            if delay > 0:
                sleep(delay)
            self._last = time.monotonic()


_rate_gates: dict[str, _RateGate] = {}
_rate_gates_lock = threading.Lock()


def _gate_for(profile: ProviderProfile) -> _RateGate:
    with _rate_gates_lock:
        gate = _rate_gates.get(profile.name)
        if gate is None:
            gate = _RateGate(profile.requests_per_minute)
            _rate_gates[profile.name] = gate
        return gate


def fixture_path(fixtures_dir: Path, experiment_key: str) -> Path:
    """Map an experiment key like 'C1-zero-gpt' to fixtures/gpt/C1-zero.txt."""
    direct = Path(fixtures_dir) / f"{experiment_key}.txt"
    if direct.is_file():
        return direct
    stem, _, provider = experiment_key.rpartition("-")
    return Path(fixtures_dir) / provider / f"{stem}.txt"


def complete(
    req: CompletionRequest,
    mode: str = REPLAY,
    fixtures_dir: Optional[Path] = None,
    sleep: Callable[[float], None] = time.sleep,
    timeout: float = 120.0,
) -> CompletionResult:
    """Run one completion. REPLAY returns the stored fixture byte-identically;
    LIVE performs an HTTP call with retry-with-backoff on transient failures."""
    decision = guard_context(req)
    if not decision.accepted:
        raise ContextGuardRejected(decision.reason)

    if mode == REPLAY:
        if fixtures_dir is None:
            raise GatewayError("replay mode needs a fixtures directory")
        path = fixture_path(fixtures_dir, req.experiment_key)
        if not path.is_file():
            raise FixtureNotFoundError(req.experiment_key, path)
        text = path.read_text(encoding="utf-8")
        input_tokens = estimate_tokens(req.prompt)
        output_tokens = estimate_tokens(text)
        return CompletionResult(
            text=text,
            input_tokens=input_tokens,
            output_tokens=output_tokens,
            cost=compute_cost(req.provider, input_tokens, output_tokens),
            latency=0.0,
            mode=REPLAY,
        )

    if mode != LIVE:
        raise GatewayError(f"unknown mode {mode!r}")

    key = os.environ.get(req.provider.auth_env_var, "")
    if not key:
        raise MissingCredentialsError(req.provider.auth_env_var, req.provider.name)
    try:
        build_request, parse_response = _ADAPTERS[req.provider.api_flavor]
    except KeyError:
        raise GatewayError(f"unknown api flavor {req.provider.api_flavor!r}") from None

    url, headers, body = build_request(req, key)
    gate = _gate_for(req.provider)
    last_detail = ""
    start = time.monotonic()
    for attempt in range(1, RETRY_ATTEMPTS + 1):
        gate.wait(sleep)
        try:
            response = requests.post(url, headers=headers, json=body, timeout=timeout)
        except requests.RequestException as exc:
            last_detail = f"transport error: {exc}"
        else:
            if response.status_code == 200:
                payload = response.json()
                text, in_tok, out_tok = parse_response(payload)
                input_tokens = in_tok if in_tok is not None else estimate_tokens(req.prompt)
                output_tokens = out_tok if out_tok is not None else estimate_tokens(text)
                return CompletionResult(
                    text=text,
                    input_tokens=input_tokens,
                    output_tokens=output_tokens,
                    cost=compute_cost(req.provider, input_tokens, output_tokens),
                    latency=time.monotonic() - start,
                    mode=LIVE,
                )
            last_detail = f"HTTP {response.status_code}: {response.text[:200]}"
            if response.status_code not in RETRYABLE_STATUS:
                raise ProviderError(req.provider.name, last_detail, attempt)
        if attempt < RETRY_ATTEMPTS:
            sleep(RETRY_BASE_DELAY * 2 ** (attempt - 1))
    raise ProviderError(req.provider.name, last_detail, RETRY_ATTEMPTS)


@dataclass(frozen=True)
class CostSummary:
    total: float
    mean_per_prompt: float


def cost_report(results: Sequence[CompletionResult]) -> CostSummary:
    if not results:
        return CostSummary(total=0.0, mean_per_prompt=0.0)
    total = sum(r.cost for r in results)
    return CostSummary(total=total, mean_per_prompt=total / len(results))
