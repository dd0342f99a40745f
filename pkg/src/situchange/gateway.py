"""Chat-completion client with content-addressed caching, bounded retries,
rate limiting, and the 1-5 judge protocol.

A warm cache serves identical requests without any remote call, so offline
evaluation replays are exact. Transports are injectable; the default speaks
the provider-agnostic chat-completions JSON shape over HTTPS.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

from .config import GatewayConfig
from .prompts import render_prompt


class GatewayError(Exception):
    pass


class NoCredentials(GatewayError):
    pass


class RemoteError(GatewayError):
    pass


class RateLimited(GatewayError):
    def __init__(self, message: str, retry_after: float | None = None):
        super().__init__(message)
        self.retry_after = retry_after


class UnparseableRating(GatewayError):
    pass


Transport = Callable[[dict], str]


def http_transport(config: GatewayConfig, api_key: str) -> Transport:
    """POST chat-completion requests; 429 raises RateLimited, 5xx RemoteError."""
    import httpx

    def call(request: dict) -> str:
        response = httpx.post(
            f"{config.base_url.rstrip('/')}/chat/completions",
            json=request,
            headers={"Authorization": f"Bearer {api_key}"},
            timeout=config.timeout_s,
        )
        if response.status_code == 429:
            retry_after = response.headers.get("retry-after")
            raise RateLimited(
                "rate limited by remote service",
                retry_after=float(retry_after) if retry_after else None,
            )
        if response.status_code >= 500:
            raise RemoteError(f"remote error {response.status_code}")
        if response.status_code != 200:
            raise GatewayError(f"remote call failed: {response.status_code} {response.text[:200]}")
        return response.json()["choices"][0]["message"]["content"]

    return call


class _TokenBucket:
    def __init__(self, rate_per_s: float, burst: int):
        self.rate = max(rate_per_s, 1e-6)
        self.capacity = max(burst, 1)
        self.tokens = float(self.capacity)
        self.updated = time.monotonic()
        self.lock = threading.Lock()

    def acquire(self) -> None:
        while True:
            with self.lock:
                now = time.monotonic()
                self.tokens = min(self.capacity, self.tokens + (now - self.updated) * self.rate)
                self.updated = now
                if self.tokens >= 1.0:
                    self.tokens -= 1.0
                    return
                wait = (1.0 - self.tokens) / self.rate
            time.sleep(wait)


@dataclass(frozen=True)
class CompletionRecord:
    cache_key: str
    request: dict
    response: str
    timestamp: float
    usage: dict


class ChatGateway:
    """Shared, thread-safe completion client.

    Cache keys hash the rendered messages plus model id and decoding
    parameters; identical keys never trigger a second remote call.
    """

    def __init__(
        self,
        config: GatewayConfig | None = None,
        cache_dir: str | Path | None = None,
        transport: Transport | None = None,
    ):
        self.config = config or GatewayConfig()
        self.cache_dir = Path(cache_dir if cache_dir is not None else self.config.cache_dir)
        self._transport = transport
        self._semaphore = threading.Semaphore(self.config.concurrency)
        self._bucket = _TokenBucket(self.config.requests_per_second, self.config.concurrency)
        self._inflight = 0
        self._inflight_peak = 0
        self._inflight_lock = threading.Lock()

    # -- cache ------------------------------------------------------------

    def cache_key(self, messages: list[dict], params: dict) -> str:
        blob = json.dumps(
            {"messages": messages, "model": self.config.model, "params": params},
            sort_keys=True,
            ensure_ascii=False,
        )
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()

    def _cache_path(self, key: str) -> Path:
        return self.cache_dir / f"{key}.json"

    def _cache_get(self, key: str) -> Optional[str]:
        path = self._cache_path(key)
        if not path.exists():
            return None
        return json.loads(path.read_text("utf-8"))["response"]

    def _cache_put(self, record: CompletionRecord) -> None:
        self.cache_dir.mkdir(parents=True, exist_ok=True)
        path = self._cache_path(record.cache_key)
        tmp = path.with_suffix(f".tmp.{os.getpid()}.{threading.get_ident()}")
        tmp.write_text(
            json.dumps(
                {
                    "cache_key": record.cache_key,
                    "request": record.request,
                    "response": record.response,
                    "timestamp": record.timestamp,
                    "usage": record.usage,
                },
                sort_keys=True,
                ensure_ascii=False,
            ),
            "utf-8",
        )
        os.replace(tmp, path)

    # -- completion --------------------------------------------------------

    def _resolve_transport(self) -> Transport:
        if self._transport is not None:
            return self._transport
        api_key = os.environ.get(self.config.api_key_env, "")
        if not api_key:
            raise NoCredentials(
                f"no cached response and no credentials ({self.config.api_key_env} unset)"
            )
        transport = http_transport(self.config, api_key)
        self._transport = transport
        return transport

    def complete(self, messages: list[dict], temperature: float = 0.0, max_tokens: int | None = None) -> str:
        params: dict = {"temperature": temperature}
        if max_tokens is not None:
            params["max_tokens"] = max_tokens
        key = self.cache_key(messages, params)
        cached = self._cache_get(key)
        if cached is not None:
            return cached
        transport = self._resolve_transport()
        request = {"model": self.config.model, "messages": messages, **params}
        delay = 0.5
        last_error: Exception | None = None
        for _attempt in range(self.config.max_retries + 1):
            self._bucket.acquire()
            with self._semaphore:
                with self._inflight_lock:
                    self._inflight += 1
                    self._inflight_peak = max(self._inflight_peak, self._inflight)
                try:
                    text = transport(request)
                except RateLimited as e:
                    last_error = e
                    time.sleep(e.retry_after if e.retry_after is not None else delay)
                    delay *= 2
                    continue
                except RemoteError as e:
                    last_error = e
                    time.sleep(delay)
                    delay *= 2
                    continue
                finally:
                    with self._inflight_lock:
                        self._inflight -= 1
            self._cache_put(
                CompletionRecord(
                    cache_key=key,
                    request=request,
                    response=text,
                    timestamp=time.time(),
                    usage={},
                )
            )
            return text
        raise last_error if last_error is not None else RemoteError("remote call failed")

    # -- judging -----------------------------------------------------------

    _JUDGE_RUBRICS = ("judge_general", "judge_direction", "judge_longform")

    def judge(self, question: str, ground_truth: str, response: str, rubric: str) -> int:
        """1-5 rating of a response; re-prompts once when the reply carries no
        parseable score."""
        if rubric not in self._JUDGE_RUBRICS:
            raise GatewayError(f"'{rubric}' is not a judge rubric")
        messages = render_prompt(
            rubric, {"question": question, "ground_truth": ground_truth, "response": response}
        )
        text = self.complete(messages, temperature=self.config.temperature_judge)
        rating = _extract_rating(text)
        if rating is not None:
            return rating
        retry_messages = messages + [
            {"role": "assistant", "content": text},
            {"role": "user", "content": "Output only the score."},
        ]
        text = self.complete(retry_messages, temperature=self.config.temperature_judge)
        rating = _extract_rating(text)
        if rating is None:
            raise UnparseableRating(f"no 1-5 rating in judge reply: {text[:80]!r}")
        return rating


_RATING_RE = re.compile(r"\b([1-5])\b")


def _extract_rating(text: str) -> Optional[int]:
    m = _RATING_RE.search(text)
    return int(m.group(1)) if m else None
