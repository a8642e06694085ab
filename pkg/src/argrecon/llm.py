"""Chat-completion access and parsing of the constrained model outputs.

Three backends share one ``complete(request)`` method:

* :class:`HttpBackend` talks to a chat-completions style HTTP/JSON endpoint,
* :class:`ReplayBackend` serves responses from a recorded transcript,
* :class:`RecordingBackend` wraps any backend and records what it answers.

:class:`FunctionBackend` adapts a plain callable, which is handy for stubs.
"""

from __future__ import annotations

import hashlib
import json
import logging
import re
import threading
import time
from collections import defaultdict, deque
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Deque, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import httpx

from .errors import (
    EmptyList,
    ProviderError,
    ReplayMiss,
    SchemaViolation,
    TransportFailure,
    UnparseableResponse,
)
from .graph import Polarity

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ChatRequest:
    system_prompt: str
    user_prompt: str
    model_name: str
    temperature: float = 0.0
    seed: Optional[int] = None
    max_output_tokens: int = 2048

    def __post_init__(self):
        if not self.system_prompt or not self.user_prompt:
            raise ValueError("prompts must be non-empty")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_output_tokens <= 0:
            raise ValueError("max_output_tokens must be positive")

    def digest(self) -> str:
        """Content hash over the fields that determine the model's answer."""
        payload = json.dumps(
            [self.system_prompt, self.user_prompt, self.model_name,
             float(self.temperature), self.seed],
            ensure_ascii=False, separators=(",", ":"),
        )
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()

    def to_dict(self) -> dict:
        return {
            "system_prompt": self.system_prompt,
            "user_prompt": self.user_prompt,
            "model_name": self.model_name,
            "temperature": self.temperature,
            "seed": self.seed,
            "max_output_tokens": self.max_output_tokens,
        }


@dataclass(frozen=True)
class ChatResponse:
    text: str
    token_usage: Optional[Tuple[int, int]] = None

    def __post_init__(self):
        if self.token_usage is not None and min(self.token_usage) < 0:
            raise ValueError("token counts must be >= 0")

    def to_dict(self) -> dict:
        return {"text": self.text,
                "token_usage": list(self.token_usage) if self.token_usage else None}


@dataclass
class TranscriptEntry:
    digest: str
    request: ChatRequest
    response: ChatResponse


@dataclass
class Transcript:
    """Ordered record of request/response pairs, stored as JSON Lines.

    The first line holds ``{"meta": {...}}``; every following line is one
    entry. Identical requests may appear several times and replay in order.
    """

    entries: List[TranscriptEntry] = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self._lock = threading.Lock()

    def append(self, request: ChatRequest, response: ChatResponse) -> None:
        with self._lock:
            self.entries.append(TranscriptEntry(request.digest(), request, response))

    def dumps(self) -> str:
        lines = [json.dumps({"meta": self.meta}, ensure_ascii=False, sort_keys=True)]
        for e in self.entries:
            lines.append(json.dumps(
                {"digest": e.digest, "request": e.request.to_dict(),
                 "response": e.response.to_dict()},
                ensure_ascii=False, sort_keys=True))
        return "\n".join(lines) + "\n"

    def save(self, path: Union[str, Path]) -> None:
        Path(path).write_text(self.dumps(), encoding="utf-8")

    @classmethod
    def load(cls, path: Union[str, Path]) -> "Transcript":
        path = Path(path)
        meta: dict = {}
        entries = []
        with path.open(encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                if not line.strip():
                    continue
                try:
                    raw = json.loads(line)
                    if "meta" in raw and "request" not in raw:
                        meta = raw["meta"]
                        continue
                    req = ChatRequest(**raw["request"])
                    usage = raw["response"].get("token_usage")
                    resp = ChatResponse(raw["response"]["text"],
                                        tuple(usage) if usage else None)
                except (KeyError, TypeError, ValueError) as exc:
                    raise SchemaViolation(f"{path}:{lineno}: bad transcript entry ({exc})") from None
                entries.append(TranscriptEntry(raw.get("digest") or req.digest(), req, resp))
        return cls(entries, meta)


class Backend:
    """Anything with ``complete(request) -> ChatResponse``.

    Backends are service handles: copying one (as ``sklearn.base.clone``
    does) returns the same object, except for replay, see below.
    """

    def complete(self, request: ChatRequest) -> ChatResponse:  # pragma: no cover
        raise NotImplementedError

    def __deepcopy__(self, memo):
        return self


class FunctionBackend(Backend):
    def __init__(self, fn: Callable[[ChatRequest], Union[str, ChatResponse]]):
        self.fn = fn

    def complete(self, request: ChatRequest) -> ChatResponse:
        out = self.fn(request)
        return out if isinstance(out, ChatResponse) else ChatResponse(str(out))


class ReplayBackend(Backend):
    """Serves stored responses by request digest.

    Matching is by digest rather than position, so skipping a stage does not
    desynchronise the stages after it.
    """

    def __init__(self, transcript: Transcript):
        self.transcript = transcript
        self._queues: Dict[str, Deque[ChatResponse]] = defaultdict(deque)
        for e in transcript.entries:
            self._queues[e.digest].append(e.response)
        self._lock = threading.Lock()

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> "ReplayBackend":
        return cls(Transcript.load(path))

    def __deepcopy__(self, memo):
        # a copy replays the same transcript from the start
        return ReplayBackend(self.transcript)

    def complete(self, request: ChatRequest) -> ChatResponse:
        digest = request.digest()
        with self._lock:
            queue = self._queues.get(digest)
            if not queue:
                state = "exhausted" if digest in self._queues else "not found"
                raise ReplayMiss(f"request {digest[:12]} {state} in transcript")
            return queue.popleft()


class RecordingBackend(Backend):
    def __init__(self, inner: Backend, transcript: Optional[Transcript] = None):
        self.inner = inner
        self.transcript = transcript if transcript is not None else Transcript()
        self.transcript.meta.setdefault("created_at", datetime.now(timezone.utc).isoformat())

    def complete(self, request: ChatRequest) -> ChatResponse:
        response = self.inner.complete(request)
        self.transcript.meta.setdefault("model_name", request.model_name)
        self.transcript.append(request, response)
        return response


class HttpBackend(Backend):
    """Chat-completions over HTTP/JSON with bounded exponential backoff.

    Transport errors, HTTP 429 and 5xx responses are retried; other
    non-success statuses raise :class:`ProviderError` right away.
    """

    def __init__(self, endpoint: str, api_key: str, *, timeout: float = 120.0,
                 max_attempts: int = 3, backoff: float = 1.0,
                 sleep: Callable[[float], None] = time.sleep,
                 client: Optional[httpx.Client] = None):
        if not api_key:
            raise ValueError("a credential is required for the live backend")
        self.endpoint = endpoint
        self.api_key = api_key
        self.max_attempts = max_attempts
        self.backoff = backoff
        self.sleep = sleep
        self.client = client or httpx.Client(timeout=timeout)

    def _payload(self, request: ChatRequest) -> dict:
        payload = {
            "model": request.model_name,
            "messages": [
                {"role": "system", "content": request.system_prompt},
                {"role": "user", "content": request.user_prompt},
            ],
            "temperature": request.temperature,
            "max_tokens": request.max_output_tokens,
        }
        if request.seed is not None:
            payload["seed"] = request.seed
        return payload

    def complete(self, request: ChatRequest) -> ChatResponse:
        headers = {"Authorization": f"Bearer {self.api_key}",
                   "Content-Type": "application/json"}
        last_error: Optional[Exception] = None
        for attempt in range(self.max_attempts):
            if attempt:
                self.sleep(self.backoff * 2 ** (attempt - 1))
            try:
                resp = self.client.post(self.endpoint, json=self._payload(request), headers=headers)
            except httpx.TransportError as exc:
                logger.warning("transport error on attempt %d: %s", attempt + 1, exc)
                last_error = exc
                continue
            if resp.status_code == 429 or resp.status_code >= 500:
                logger.warning("provider status %d on attempt %d", resp.status_code, attempt + 1)
                last_error = ProviderError(resp.status_code, resp.text)
                continue
            if resp.status_code >= 400:
                raise ProviderError(resp.status_code, resp.text)
            return self._parse(resp)
        if isinstance(last_error, ProviderError):
            raise last_error
        raise TransportFailure(f"giving up after {self.max_attempts} attempts: {last_error}")

    @staticmethod
    def _parse(resp: httpx.Response) -> ChatResponse:
        try:
            body = resp.json()
            text = body["choices"][0]["message"]["content"] or ""
        except (ValueError, KeyError, IndexError, TypeError):
            raise ProviderError(resp.status_code, resp.text) from None
        usage = body.get("usage") or {}
        tokens = None
        if "prompt_tokens" in usage and "completion_tokens" in usage:
            tokens = (int(usage["prompt_tokens"]), int(usage["completion_tokens"]))
        return ChatResponse(text, tokens)


# ---------------------------------------------------------------------------
# response parsing

_ENUM_LINE = re.compile(r"^\s*(\d+)\s*[.):]\s*(\S.*?)\s*$")
_LABEL = re.compile(r"(?<![\w.'])(\d+'*)(?![\w]|\.\d)")


def parse_enumerated_components(text: str) -> List[str]:
    """Contents of ``<number>. <content>`` lines, in listed order.

    ``)`` or ``:`` may replace the dot; gaps in the numbering and any
    non-matching lines are ignored.
    """
    items = [m.group(2) for m in map(_ENUM_LINE.match, text.splitlines()) if m]
    if not items:
        raise EmptyList("no enumerated items in response")
    return items


def _label_index(valid_ids: Iterable) -> Dict[str, object]:
    return {str(v): v for v in valid_ids}


def parse_id_list(text: str, valid_ids: Iterable) -> list:
    """Component labels mentioned in ``text`` that belong to ``valid_ids``.

    Labels are integers, optionally primed (``6'``). Order follows first
    mention and duplicates are dropped. A bare ``0`` means "none".
    """
    valid = _label_index(valid_ids)
    tokens = _LABEL.findall(text)
    out: list = []
    for tok in tokens:
        if tok in valid and valid[tok] not in out:
            out.append(valid[tok])
    if out:
        return out
    if "0" in tokens:
        return []
    raise UnparseableResponse(f"no valid label in response {text[:80]!r}")


_POLARITY_WORDS = (
    (re.compile(r"partial(ly)?[\s_-]*attack", re.I), Polarity.PARTIAL_ATTACK),
    (re.compile(r"attack|rebut|oppos|undercut", re.I), Polarity.ATTACK),
    (re.compile(r"support", re.I), Polarity.SUPPORT),
)


def parse_polarity(text: str, default: Polarity = Polarity.SUPPORT) -> Polarity:
    for pattern, pol in _POLARITY_WORDS:
        if pattern.search(text):
            return pol
    return default


def parse_labeled_ids(text: str, valid_ids: Iterable) -> List[Tuple[object, Polarity]]:
    """Parse ``<label>: support|attack|partial attack`` lines.

    A line naming several labels gives them all the line's polarity; lines
    without a polarity word default to support. ``0`` alone means "none".
    """
    valid = _label_index(valid_ids)
    out: List[Tuple[object, Polarity]] = []
    seen = set()
    saw_zero = False
    for line in text.splitlines():
        tokens = _LABEL.findall(line)
        saw_zero = saw_zero or "0" in tokens
        labels = [valid[t] for t in tokens if t in valid]
        if not labels:
            continue
        pol = parse_polarity(line)
        for lab in labels:
            if lab not in seen:
                seen.add(lab)
                out.append((lab, pol))
    if out or saw_zero:
        return out
    raise UnparseableResponse(f"no valid label in response {text[:80]!r}")


def parse_groups(text: str) -> List[List[str]]:
    """One group of raw labels per line; ``0`` alone means no groups.

    Labels are not validated here: callers decide whether an unknown label
    voids one group or the whole answer.
    """
    groups: List[List[str]] = []
    saw_zero = False
    for line in text.splitlines():
        tokens = _LABEL.findall(line)
        if tokens == ["0"]:
            saw_zero = True
            continue
        if tokens:
            groups.append(list(dict.fromkeys(tokens)))
    if groups or saw_zero:
        return groups
    raise UnparseableResponse(f"no groups in response {text[:80]!r}")


def enumerate_lines(items: Sequence[Tuple[str, str]]) -> str:
    """Render ``(label, text)`` pairs as the numbered list the prompts use."""
    return "\n".join(f"{label}. {text}" for label, text in items)
