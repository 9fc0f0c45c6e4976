"""Logit backends: a deterministic mock for tests plus HTTP clients.

The wire protocol owned by this repo is::

    POST {base_url}/v1/logits
    request  {"prompt": str, "candidate_words": [str], "max_generate": int}
    response {"logits": {word: number}, "generated_text": str | null}
    error    {"error": {"code": str, "message": str}}   (4xx/5xx status)

The mock computes per-class scores as bias + the sum of planted token
weights matched against the prompt's whitespace tokens (unigrams and
space-joined bigrams, punctuation-stripped), then gives each candidate word
the score of its class.  An optional positional gain makes the score depend
on where in the prompt a token sits, which is how order-sensitivity is
planted for the prompt-order experiments.
"""

from __future__ import annotations

import os
import string
import time
from dataclasses import dataclass, field
from typing import Mapping, Protocol, Sequence

import requests

from .errors import BackendError, ConfigError, ContractError
from .rng import SplitMix64, fnv1a64

ENV_SERVER_URL = "OOVTAB_SERVER_URL"

DEFAULT_STOP = "@@@"


@dataclass(frozen=True)
class LogitRequest:
    prompt: str
    candidate_words: tuple[str, ...] = ()
    max_generate: int = 0

    def __post_init__(self):
        if not self.prompt:
            raise ConfigError("prompt must be non-empty", module="backend", stage="request")
        if self.max_generate == 0 and not self.candidate_words:
            raise ConfigError("candidate_words required when max_generate is 0",
                              module="backend", stage="request")
        if self.max_generate < 0:
            raise ConfigError("max_generate must be >= 0", module="backend", stage="request")


@dataclass(frozen=True)
class LogitResponse:
    logits: dict[str, float]
    generated_text: str | None = None


class LogitBackend(Protocol):
    def query(self, request: LogitRequest) -> LogitResponse: ...


def _strip_token(tok: str) -> str:
    return tok.strip(string.punctuation)


def prompt_tokens(prompt: str) -> list[str]:
    """Whitespace tokens with leading/trailing punctuation stripped."""
    return [t for t in (_strip_token(tok) for tok in prompt.split()) if t]


@dataclass(frozen=True)
class MockModelSpec:
    """Planted-rule model: token weights are per-class score contributions.

    Weight keys may be single tokens or two-token phrases ("Category 4");
    both are matched against the stripped whitespace token stream.  Every
    candidate word must appear in word_classes, which names the class whose
    score it inherits.  position_gain > 0 scales each matched weight by
    1 + gain * i/(T-1) where i is the match's token position, making the
    score order-sensitive.  text_noise is the seeded probability that
    generated text is garbled (fails exact matching; logits unaffected).
    """

    token_weights: Mapping[str, tuple[float, ...]] = field(default_factory=dict)
    bias: tuple[float, ...] = (0.0, 0.0)
    noise_seed: int = 0
    word_classes: Mapping[str, int] = field(default_factory=dict)
    class_texts: tuple[str, ...] = ()
    position_gain: float = 0.0
    text_noise: float = 0.0

    def __post_init__(self):
        n = len(self.bias)
        for tok, w in self.token_weights.items():
            if len(w) != n:
                raise ConfigError(f"weight for {tok!r} has {len(w)} entries, expected {n}",
                                  module="backend", stage="mock_spec")
        for word, c in self.word_classes.items():
            if not 0 <= c < n:
                raise ConfigError(f"word {word!r} mapped to class {c}, have {n} classes",
                                  module="backend", stage="mock_spec")
        if self.class_texts and len(self.class_texts) != n:
            raise ConfigError("class_texts must have one entry per class",
                              module="backend", stage="mock_spec")

    @staticmethod
    def from_json(doc: Mapping) -> "MockModelSpec":
        return MockModelSpec(
            token_weights={k: tuple(v) for k, v in doc.get("token_weights", {}).items()},
            bias=tuple(doc.get("bias", (0.0, 0.0))),
            noise_seed=int(doc.get("noise_seed", 0)),
            word_classes=dict(doc.get("word_classes", {})),
            class_texts=tuple(doc.get("class_texts", ())),
            position_gain=float(doc.get("position_gain", 0.0)),
            text_noise=float(doc.get("text_noise", 0.0)),
        )


class MockBackend:
    """Deterministic logit source driven by a MockModelSpec."""

    def __init__(self, spec: MockModelSpec):
        self.spec = spec

    def class_scores(self, prompt: str) -> list[float]:
        tokens = prompt_tokens(prompt)
        scores = list(self.spec.bias)
        denom = max(1, len(tokens) - 1)
        for i, tok in enumerate(tokens):
            for key in (tok, f"{tok} {tokens[i + 1]}" if i + 1 < len(tokens) else None):
                if key is None:
                    continue
                weights = self.spec.token_weights.get(key)
                if weights is None:
                    continue
                gain = 1.0 + self.spec.position_gain * i / denom
                for c, w in enumerate(weights):
                    scores[c] += w * gain
        return scores

    def query(self, request: LogitRequest) -> LogitResponse:
        scores = self.class_scores(request.prompt)
        logits = {}
        for word in request.candidate_words:
            if word not in self.spec.word_classes:
                raise ContractError(f"mock has no class for candidate word {word!r}",
                                    module="backend", stage="query_logits")
            logits[word] = scores[self.spec.word_classes[word]]
        generated = None
        if request.max_generate > 0:
            generated = self._generate(request.prompt, scores)
        return LogitResponse(logits=logits, generated_text=generated)

    def _class_text(self, c: int) -> str:
        if self.spec.class_texts:
            return self.spec.class_texts[c]
        for word, klass in self.spec.word_classes.items():
            if klass == c:
                return word
        raise ContractError(f"mock has no word for class {c}",
                            module="backend", stage="generate_text")

    def _generate(self, prompt: str, scores: list[float]) -> str:
        best = max(range(len(scores)), key=lambda c: (scores[c], -c))
        text = self._class_text(best)
        if self.spec.text_noise > 0:
            rng = SplitMix64(self.spec.noise_seed ^ fnv1a64(prompt))
            if rng.random() < self.spec.text_noise:
                text = text.lower() + "?"
        return text + DEFAULT_STOP


def query_logits(backend: LogitBackend, request: LogitRequest) -> LogitResponse:
    """Query any backend; validates that the response covers every candidate."""
    response = backend.query(request)
    for word in request.candidate_words:
        if word not in response.logits:
            raise ContractError(f"response is missing candidate word {word!r}",
                                module="backend", stage="query_logits")
    return response


def generate_text(backend: LogitBackend, prompt: str, stop: str = DEFAULT_STOP) -> str:
    """Generate a continuation and truncate it at the first stop marker."""
    if not stop:
        raise ConfigError("stop string must be non-empty",
                          module="backend", stage="generate_text")
    response = backend.query(LogitRequest(prompt=prompt, max_generate=64))
    text = response.generated_text or ""
    cut = text.find(stop)
    return text[:cut] if cut >= 0 else text


def parse_generated_label(text: str, class_names: Sequence[str]) -> str | None:
    """Trimmed case-sensitive exact match against class names; None otherwise."""
    cleaned = text.strip()
    return cleaned if cleaned in class_names else None


class HttpLogitBackend:
    """Client for the /v1/logits wire protocol.

    Transport failures are retried with exponential backoff; 4xx responses
    are contract errors and are never retried.
    """

    def __init__(self, base_url: str | None = None, timeout: float = 30.0,
                 max_retries: int = 3, backoff: float = 0.5,
                 session: requests.Session | None = None):
        url = base_url or os.environ.get(ENV_SERVER_URL)
        if not url:
            raise ConfigError(f"no server URL given and {ENV_SERVER_URL} is unset",
                              module="backend", stage="http")
        self.base_url = url.rstrip("/")
        self.timeout = timeout
        self.max_retries = max_retries
        self.backoff = backoff
        self.session = session or requests.Session()

    def query(self, request: LogitRequest) -> LogitResponse:
        body = {"prompt": request.prompt,
                "candidate_words": list(request.candidate_words),
                "max_generate": request.max_generate}
        last_error: Exception | None = None
        for attempt in range(self.max_retries):
            try:
                resp = self.session.post(f"{self.base_url}/v1/logits", json=body,
                                         timeout=self.timeout)
            except requests.RequestException as e:
                last_error = e
                time.sleep(self.backoff * (2 ** attempt))
                continue
            if 400 <= resp.status_code < 500:
                raise ContractError(self._error_message(resp),
                                    module="backend", stage="query_logits")
            if resp.status_code >= 500:
                last_error = BackendError(self._error_message(resp),
                                          module="backend", stage="query_logits")
                time.sleep(self.backoff * (2 ** attempt))
                continue
            doc = resp.json()
            logits = {w: float(x) for w, x in doc.get("logits", {}).items()}
            return LogitResponse(logits=logits, generated_text=doc.get("generated_text"))
        raise BackendError(f"transport failed after {self.max_retries} attempts: {last_error}",
                           module="backend", stage="query_logits",
                           attempts=self.max_retries)

    @staticmethod
    def _error_message(resp: requests.Response) -> str:
        try:
            err = resp.json().get("error", {})
            return f"{err.get('code', resp.status_code)}: {err.get('message', 'no message')}"
        except ValueError:
            return f"http {resp.status_code}"


class OpenAICompletionsBackend:
    """Adapter from the logit contract onto an OpenAI-style completions API.

    Candidate logits are read from the first generated position's
    top_logprobs ("word" and " word" spellings are both tried).  A candidate
    absent from the returned logprobs is a contract error, never a silent
    zero.
    """

    def __init__(self, base_url: str, model: str, timeout: float = 60.0,
                 top_logprobs: int = 20, api_key: str | None = None,
                 session: requests.Session | None = None):
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.timeout = timeout
        self.top_logprobs = top_logprobs
        self.api_key = api_key
        self.session = session or requests.Session()

    def query(self, request: LogitRequest) -> LogitResponse:
        headers = {}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        body = {"model": self.model, "prompt": request.prompt,
                "max_tokens": max(1, request.max_generate),
                "logprobs": self.top_logprobs, "echo": False}
        try:
            resp = self.session.post(f"{self.base_url}/v1/completions", json=body,
                                     headers=headers, timeout=self.timeout)
            resp.raise_for_status()
            doc = resp.json()
        except requests.RequestException as e:
            raise BackendError(f"completions request failed: {e}",
                               module="backend", stage="query_logits") from e
        choice = doc["choices"][0]
        top = (choice.get("logprobs") or {}).get("top_logprobs") or [{}]
        first = top[0]
        logits = {}
        for word in request.candidate_words:
            if word in first:
                logits[word] = float(first[word])
            elif f" {word}" in first:
                logits[word] = float(first[f" {word}"])
            else:
                raise ContractError(
                    f"completions endpoint returned no logprob for candidate {word!r}",
                    module="backend", stage="query_logits")
        generated = choice.get("text") if request.max_generate > 0 else None
        return LogitResponse(logits=logits, generated_text=generated)


def check_protocol_conformance(base_url: str, timeout: float = 10.0) -> list[str]:
    """Exercise a /v1/logits server and return a list of violations (empty = pass).

    Checks: candidate coverage with finite values, text generation when
    max_generate > 0, and 4xx error objects for malformed bodies, empty
    prompts, and missing candidate words.
    """
    failures: list[str] = []
    url = base_url.rstrip("/") + "/v1/logits"

    def post_raw(data: bytes) -> requests.Response:
        return requests.post(url, data=data,
                             headers={"Content-Type": "application/json"},
                             timeout=timeout)

    resp = requests.post(url, json={"prompt": "alpha is Category 1. What is the class?",
                                    "candidate_words": ["Yes", "No"],
                                    "max_generate": 0}, timeout=timeout)
    if resp.status_code != 200:
        failures.append(f"valid logit request returned status {resp.status_code}")
    else:
        doc = resp.json()
        logits = doc.get("logits", {})
        for word in ("Yes", "No"):
            if word not in logits:
                failures.append(f"response missing candidate word {word!r}")
            elif not isinstance(logits[word], (int, float)):
                failures.append(f"logit for {word!r} is not a number")

    resp = requests.post(url, json={"prompt": "alpha is Category 1. What is the class?",
                                    "candidate_words": ["Yes", "No"],
                                    "max_generate": 8}, timeout=timeout)
    if resp.status_code != 200:
        failures.append(f"generation request returned status {resp.status_code}")
    elif not isinstance(resp.json().get("generated_text"), str):
        failures.append("generated_text missing for max_generate > 0")

    for label, payload in [
        ("malformed JSON body", b"{not json"),
        ("empty prompt", b'{"prompt": "", "candidate_words": ["Yes"], "max_generate": 0}'),
        ("no candidates with max_generate 0", b'{"prompt": "x", "candidate_words": [], "max_generate": 0}'),
    ]:
        resp = post_raw(payload)
        if not 400 <= resp.status_code < 500:
            failures.append(f"{label}: expected 4xx, got {resp.status_code}")
            continue
        try:
            err = resp.json().get("error", {})
        except ValueError:
            failures.append(f"{label}: error body is not JSON")
            continue
        if "code" not in err or "message" not in err:
            failures.append(f"{label}: error object lacks code/message")

    return failures
