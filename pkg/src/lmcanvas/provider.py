"""Completion backends: a deterministic offline mock and a thin HTTP adapter.

The mock is the default provider. It is a pure function of (prompt, params),
so whole test suites and CLI sessions replay byte-identically: it echoes the
last line of the prompt with its word order reversed, prefixed with a marker
that makes the sampled temperature visible, truncated to ``max_tokens``
whitespace-delimited words.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import httpx

from lmcanvas.blocks import ModelParams
from lmcanvas.errors import ProviderError

MOCK_FAILURE_PROMPT = "[[FAIL]]"


@dataclass(frozen=True)
class CompletionRequest:
    prompt: str
    params: ModelParams


@dataclass(frozen=True)
class CompletionResult:
    text: str
    finish_reason: str  # "stop" | "length" | "error"
    provider_name: str


class MockProvider:
    """Deterministic offline completion backend."""

    name = "mock"

    def complete(self, request: CompletionRequest) -> CompletionResult:
        if request.prompt == MOCK_FAILURE_PROMPT:
            raise ProviderError("mock provider failure hook")
        params = request.params
        last_line = request.prompt.split("\n")[-1]
        words = last_line.split()
        words.reverse()
        text = f"MOCK[t={params.temperature:.1f}] " + " ".join(words)
        tokens = text.split()
        if len(tokens) > params.max_tokens:
            return CompletionResult(
                " ".join(tokens[: params.max_tokens]), "length", self.name
            )
        return CompletionResult(text, "stop", self.name)


class HttpProvider:
    """Adapter for a JSON-over-HTTP completion endpoint.

    Posts the request to the configured URL and maps the response. The API
    key is held on the instance only; it is never written into documents,
    histories or logs.
    """

    name = "http"

    def __init__(
        self,
        base_url: str,
        api_key: str | None = None,
        timeout: float = 30.0,
        client: httpx.Client | None = None,
    ):
        if not base_url:
            raise ProviderError("http provider requires a base URL")
        self.base_url = base_url
        self._api_key = api_key
        self._client = client or httpx.Client(timeout=timeout)

    def complete(self, request: CompletionRequest) -> CompletionResult:
        params = request.params
        payload = {
            "model": params.model_name,
            "prompt": request.prompt,
            "temperature": params.temperature,
            "top_p": params.top_p,
            "max_tokens": params.max_tokens,
            "stop": list(params.stop_sequences),
            "presence_penalty": params.presence_penalty,
            "frequency_penalty": params.frequency_penalty,
        }
        headers = {}
        if self._api_key:
            headers["Authorization"] = f"Bearer {self._api_key}"
        try:
            response = self._client.post(self.base_url, json=payload, headers=headers)
        except httpx.HTTPError as exc:
            raise ProviderError(f"completion request failed: {exc}") from exc
        if response.status_code != 200:
            raise ProviderError(f"completion endpoint returned {response.status_code}")
        try:
            data = response.json()
        except ValueError as exc:
            raise ProviderError("completion endpoint returned invalid JSON") from exc

        text = data.get("text")
        if text is None:
            choices = data.get("choices") or []
            if choices and isinstance(choices[0], dict):
                text = choices[0].get("text")
        if not isinstance(text, str):
            raise ProviderError("completion response carries no text")
        finish_reason = data.get("finish_reason", "stop")
        if finish_reason not in ("stop", "length", "error"):
            finish_reason = "stop"
        return CompletionResult(text, finish_reason, self.name)


ENV_PROVIDER = "LMCANVAS_PROVIDER"
ENV_API_BASE = "LMCANVAS_API_BASE"
ENV_API_KEY = "LMCANVAS_API_KEY"


def provider_from_env(env=os.environ, override: str | None = None):
    """Build the provider selected by ``LMCANVAS_PROVIDER`` (default mock)."""
    choice = override or env.get(ENV_PROVIDER, "mock")
    if choice == "mock":
        return MockProvider()
    if choice == "http":
        return HttpProvider(env.get(ENV_API_BASE, ""), api_key=env.get(ENV_API_KEY))
    raise ProviderError(f"unknown provider {choice!r} (expected mock or http)")
