"""Remote generation/scoring contract with a deterministic in-process fake.

The mechanism only ever needs two capabilities from a model service: sample m
completions for a query (each with the log-probability the sampler actually
assigned it) and score an arbitrary (query, reply) pair under a named model.
Anything that provides those two calls can back an auction; this module ships
an HTTP client for them and a scripted fake for tests.

Wire protocol (normative, JSON over POST):

* ``{endpoint}/generate``  request ``{"query": str, "n": int,
  "sampling": {"temperature": float, "top_p": float}}`` and response
  ``{"replies": [{"text": str, "logprob": float}, ...]}``;
* ``{endpoint}/score``  request ``{"model": str, "query": str, "reply": str}``
  and response ``{"logprob": float}``.

The reference model is addressed as ``"ref"`` and advertiser models carry
caller-chosen names.  The endpoint comes from explicit config or the
``REPLYAUCTION_GATEWAY`` environment variable.  Remote-backed auctions never
construct finite policies, so the enumeration oracles cannot be pointed at a
remote model by construction.

Cost accounting: one auction with m candidates and n advertisers issues
exactly m generate-equivalents and m*(n+1) score calls.
"""

from __future__ import annotations

import os
import threading
from dataclasses import dataclass, field

import numpy as np
import requests

from . import seeds
from .allocation import softmax
from .errors import (
    GatewayTimeoutError,
    InvalidRangeError,
    MalformedResponseError,
    UnavailableError,
)
from .payments import BetaVector, offset_c, rochet_payment

ENDPOINT_ENV_VAR = "REPLYAUCTION_GATEWAY"
REFERENCE_MODEL = "ref"


@dataclass(frozen=True)
class GatewayConfig:
    endpoint: str = ""
    timeout: float = 10.0
    temperature: float = 0.8
    top_p: float = 0.95
    max_candidates: int = 64
    parallelism: int = 1  # concurrent score calls; scoring is idempotent

    def __post_init__(self) -> None:
        if not self.temperature > 0:
            raise InvalidRangeError(f"temperature must be positive, got {self.temperature}")
        if not 0 < self.top_p <= 1:
            raise InvalidRangeError(f"top_p must lie in (0, 1], got {self.top_p}")
        if self.parallelism < 1:
            raise InvalidRangeError(f"parallelism must be at least 1, got {self.parallelism}")

    def resolved_endpoint(self) -> str:
        endpoint = self.endpoint or os.environ.get(ENDPOINT_ENV_VAR, "")
        if not endpoint:
            raise UnavailableError(
                f"no gateway endpoint configured (set {ENDPOINT_ENV_VAR} or pass one)"
            )
        return endpoint.rstrip("/")


@dataclass
class CallCounters:
    """Thread-safe generate-equivalent and score tallies."""

    generate_calls: int = 0
    score_calls: int = 0
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def count_generate(self, candidates: int) -> None:
        with self._lock:
            self.generate_calls += candidates

    def count_score(self) -> None:
        with self._lock:
            self.score_calls += 1

    def snapshot(self) -> tuple[int, int]:
        with self._lock:
            return self.generate_calls, self.score_calls


class FakeBackend:
    """Scripted backend: fixed generation order and per-model score tables.

    ``script`` is the cyclic list of (text, logprob) pairs generate emits;
    ``score_tables`` maps model name -> {reply text -> logprob}.  Scoring an
    unknown model or reply is a contract violation, as a real service would
    return an error body.
    """

    def __init__(
        self,
        script: list[tuple[str, float]],
        score_tables: dict[str, dict[str, float]],
    ) -> None:
        if not script:
            raise InvalidRangeError("fake backend needs at least one scripted reply")
        self.script = list(script)
        self.score_tables = {m: dict(t) for m, t in score_tables.items()}
        self._cursor = 0

    def generate(self, query: str, n: int, sampling: dict) -> list[dict]:
        replies = []
        for _ in range(n):
            text, logprob = self.script[self._cursor % len(self.script)]
            self._cursor += 1
            replies.append({"text": text, "logprob": logprob})
        return replies

    def score(self, model: str, query: str, reply: str) -> float:
        table = self.score_tables.get(model)
        if table is None or reply not in table:
            raise MalformedResponseError(f"fake backend has no score for {model!r} / {reply!r}")
        return table[reply]


class HttpBackend:
    """The wire protocol above, over requests."""

    def __init__(self, config: GatewayConfig) -> None:
        self.config = config
        self.base = config.resolved_endpoint()

    def _post(self, path: str, body: dict) -> dict:
        try:
            response = requests.post(
                f"{self.base}/{path}", json=body, timeout=self.config.timeout
            )
        except requests.Timeout as exc:
            raise GatewayTimeoutError(f"gateway timed out on /{path}") from exc
        except requests.ConnectionError as exc:
            raise UnavailableError(f"gateway unreachable on /{path}: {exc}") from exc
        if response.status_code != 200:
            raise MalformedResponseError(f"/{path} returned HTTP {response.status_code}")
        try:
            return response.json()
        except ValueError as exc:
            raise MalformedResponseError(f"/{path} returned non-JSON body") from exc

    def generate(self, query: str, n: int, sampling: dict) -> list[dict]:
        doc = self._post("generate", {"query": query, "n": n, "sampling": sampling})
        replies = doc.get("replies")
        if not isinstance(replies, list):
            raise MalformedResponseError("generate response missing 'replies' list")
        return replies

    def score(self, model: str, query: str, reply: str) -> float:
        doc = self._post("score", {"model": model, "query": query, "reply": reply})
        logprob = doc.get("logprob")
        if not isinstance(logprob, (int, float)):
            raise MalformedResponseError("score response missing numeric 'logprob'")
        return float(logprob)


def remote_generate(backend, config: GatewayConfig, query: str, m: int) -> list[tuple[str, float]]:
    """m completions with the log-probability of each under the sampler used."""
    if m < 0 or m > config.max_candidates:
        raise InvalidRangeError(f"m must lie in [0, {config.max_candidates}], got {m}")
    if m == 0:
        return []
    sampling = {"temperature": config.temperature, "top_p": config.top_p}
    replies = backend.generate(query, m, sampling)
    if len(replies) != m:
        raise MalformedResponseError(f"asked for {m} replies, backend returned {len(replies)}")
    out = []
    for entry in replies:
        text = entry.get("text") if isinstance(entry, dict) else None
        logprob = entry.get("logprob") if isinstance(entry, dict) else None
        if not isinstance(text, str) or not isinstance(logprob, (int, float)):
            raise MalformedResponseError(f"reply entry malformed: {entry!r}")
        out.append((text, float(logprob)))
    return out


def remote_score(backend, query: str, reply_text: str, model: str = REFERENCE_MODEL) -> float:
    return backend.score(model, query, reply_text)


@dataclass(frozen=True)
class RemoteAdvertiser:
    """An advertiser backed by a named scorable model."""

    model: str
    tau_i: float = 1.0
    log_z_i: float = 0.0


@dataclass(frozen=True)
class RemoteOutcome:
    """Auction result over gateway-backed models; carries texts, not policies."""

    texts: tuple[str, ...]
    logits: np.ndarray
    distribution: np.ndarray
    chosen_slot: int
    chosen_text: str
    payments: tuple[float, ...]
    utilities: tuple[float, ...]
    revenue: float
    generate_calls: int
    score_calls: int


def auction_over_gateway(
    backend,
    config: GatewayConfig,
    query: str,
    advertisers: list[RemoteAdvertiser],
    tau: float,
    m: int,
    seed: int,
    counters: CallCounters | None = None,
) -> RemoteOutcome:
    """Run one auction end to end against a generation/scoring service.

    Candidates come from the service's sampler; each is scored once under the
    reference model and once per advertiser model, giving the log-ratio
    rewards.  Only the final draw consumes local randomness.
    """
    if m < 1:
        raise InvalidRangeError(f"an auction needs at least one candidate, got m={m}")
    counters = counters if counters is not None else CallCounters()
    generated = remote_generate(backend, config, query, m)
    counters.count_generate(len(generated))
    texts = tuple(t for t, _ in generated)
    log_gen = np.array([lp for _, lp in generated])

    # one score per (model, candidate); independent, so a thread pool may
    # issue them concurrently up to config.parallelism
    jobs = [(REFERENCE_MODEL, j) for j in range(m)]
    for i, adv in enumerate(advertisers):
        jobs.extend((adv.model, j) for j in range(m))

    def _score(job):
        model, j = job
        value = remote_score(backend, query, texts[j], model)
        counters.count_score()
        return value

    if config.parallelism > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=config.parallelism) as pool:
            scores = list(pool.map(_score, jobs))
    else:
        scores = [_score(job) for job in jobs]

    log_ref = np.array(scores[:m])
    rewards = np.zeros((len(advertisers), m))
    for i, adv in enumerate(advertisers):
        block = np.array(scores[(i + 1) * m : (i + 2) * m])
        rewards[i] = adv.tau_i * (block - log_ref) + adv.log_z_i

    logits = rewards.sum(axis=0) / tau + log_ref - log_gen
    distribution = softmax(logits)
    final_rng = seeds.substream(seed, seeds.PHASE_FINAL_DRAW)
    cum = np.cumsum(np.exp(logits - logits.max()))
    slot = int(min(np.searchsorted(cum, final_rng.random() * cum[-1], side="right"), m - 1))

    payments = []
    utilities = []
    for i in range(len(advertisers)):
        beta = BetaVector(values=logits - rewards[i] / tau, advertiser=i)
        c = offset_c(beta, tau)
        payment = rochet_payment(rewards[i], distribution, beta, tau, c)
        payments.append(payment)
        utilities.append(float(distribution @ rewards[i] - payment))

    generate_calls, score_calls = counters.snapshot()
    return RemoteOutcome(
        texts=texts,
        logits=logits,
        distribution=distribution,
        chosen_slot=slot,
        chosen_text=texts[slot],
        payments=tuple(payments),
        utilities=tuple(utilities),
        revenue=float(sum(payments)),
        generate_calls=generate_calls,
        score_calls=score_calls,
    )
