"""Chat-completion backends.

``HttpBackend`` speaks the OpenAI-compatible chat-completions wire format.
The gold, scripted and corrupting backends are deterministic stand-ins used
for tests, acceptance runs and demos; they learn which sentence a prompt is
about from ``CompletionRequest.metadata``, never from the prompt text.
"""

from __future__ import annotations

import enum
import json
import logging
import os
import random
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterable, Mapping, Optional, Sequence, Union

import httpx

from .core import GoldSentence, Language, PredicateArgumentStructure, PredicateInstance
from .corrections import (
    MENU,
    Corruption,
    corrupt_arguments,
    corrupt_predicates,
    describe_argument_issues,
    describe_predicate_issues,
)
from .prompting import Conversation, Speaker, TemplateSet
from .tagging import parse_arguments, parse_predicates, render_arguments, render_predicates

log = logging.getLogger(__name__)

API_KEY_ENV = "SRL_FORGE_API_KEY"


class BackendError(RuntimeError):
    pass


class BackendTimeout(BackendError):
    pass


class TransportError(BackendError):
    pass


class RateLimited(BackendError):
    pass


class ScriptMismatch(BackendError):
    pass


class OracleMiss(BackendError):
    pass


class BackendKind(str, enum.Enum):
    HTTP = "http"
    GOLD = "gold"
    SCRIPTED = "scripted"
    CORRUPTING = "corrupt"


@dataclass(frozen=True)
class CompletionRequest:
    conversation: Conversation
    max_tokens: int = 1024
    temperature: float = 0.0
    seed: Optional[int] = None
    # sentence_id / stage / predicate / round; never sent over the wire
    metadata: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be at least 1")
        if self.temperature < 0:
            raise ValueError("temperature must be non-negative")


@dataclass(frozen=True)
class BackendConfig:
    kind: BackendKind = BackendKind.GOLD
    endpoint: Optional[str] = None
    model_name: Optional[str] = None
    timeout: float = 60.0
    max_retries: int = 3
    corruption_rate: Optional[float] = None
    seed: int = 0
    max_in_flight: int = 8
    backoff_base: float = 0.5
    backoff_max: float = 30.0

    def __post_init__(self):
        object.__setattr__(self, "kind", BackendKind(self.kind))
        if self.kind is BackendKind.HTTP and not (self.endpoint and self.model_name):
            raise ValueError("the http backend needs both endpoint and model_name")
        if self.corruption_rate is not None and not 0.0 <= self.corruption_rate <= 1.0:
            raise ValueError("corruption_rate must lie in [0, 1]")
        if self.max_retries < 0 or self.max_in_flight < 1:
            raise ValueError("max_retries must be >= 0 and max_in_flight >= 1")


class Backend:
    """Base class; subclasses implement ``_complete``."""

    def __init__(self):
        self._count_lock = threading.Lock()
        self.calls = 0

    def complete(self, req: CompletionRequest) -> str:
        with self._count_lock:
            self.calls += 1
        return self._complete(req)

    def _complete(self, req: CompletionRequest) -> str:
        raise NotImplementedError


class HttpBackend(Backend):
    def __init__(self, cfg: BackendConfig, client: Optional[httpx.Client] = None,
                 api_key: Optional[str] = None, sleep: Callable[[float], None] = time.sleep):
        super().__init__()
        if not (cfg.endpoint and cfg.model_name):
            raise ValueError("the http backend needs both endpoint and model_name")
        self.cfg = cfg
        self.client = client or httpx.Client()
        self.api_key = api_key if api_key is not None else os.environ.get(API_KEY_ENV)
        self.sleep = sleep
        self.attempts = 0
        self._slots = threading.BoundedSemaphore(cfg.max_in_flight)

    def payload(self, req: CompletionRequest) -> dict:
        body = {"model": self.cfg.model_name, "messages": req.conversation.messages(),
                "temperature": req.temperature, "max_tokens": req.max_tokens}
        if req.seed is not None:
            body["seed"] = req.seed
        return body

    def _delay(self, attempt: int, response: Optional[httpx.Response]) -> float:
        if response is not None:
            retry_after = response.headers.get("retry-after", "")
            if retry_after.replace(".", "", 1).isdigit():
                return min(self.cfg.backoff_max, float(retry_after))
        return min(self.cfg.backoff_max, self.cfg.backoff_base * 2 ** attempt)

    def _complete(self, req: CompletionRequest) -> str:
        headers = {"Authorization": f"Bearer {self.api_key}"} if self.api_key else {}
        body = self.payload(req)
        error: BackendError = TransportError("no attempt made")
        with self._slots:
            for attempt in range(self.cfg.max_retries + 1):
                self.attempts += 1
                response = None
                try:
                    response = self.client.post(self.cfg.endpoint, json=body, headers=headers,
                                                timeout=self.cfg.timeout)
                except httpx.TimeoutException as e:
                    error = BackendTimeout(f"request timed out: {e}")
                except httpx.TransportError as e:
                    error = TransportError(f"transport failure: {e}")
                else:
                    if response.status_code == 429:
                        error = RateLimited("rate limited (HTTP 429)")
                    elif response.status_code >= 500:
                        error = TransportError(f"server error (HTTP {response.status_code})")
                    elif response.status_code >= 400:
                        raise TransportError(
                            f"request rejected (HTTP {response.status_code}): {response.text[:200]}")
                    else:
                        return _message_text(response)
                if attempt < self.cfg.max_retries:
                    delay = self._delay(attempt, response)
                    log.warning("%s; retrying in %.2fs", error, delay)
                    self.sleep(delay)
        raise error


def _message_text(response: httpx.Response) -> str:
    try:
        data = response.json()
        content = data["choices"][0]["message"]["content"]
    except (ValueError, KeyError, IndexError, TypeError):
        raise TransportError(f"malformed chat-completions response: {response.text[:200]}") from None
    return content if isinstance(content, str) else ""


def _meta(req: CompletionRequest) -> tuple[str, str, Optional[int], int]:
    m = req.metadata
    try:
        return str(m["sentence_id"]), str(m["stage"]), m.get("predicate"), int(m.get("round", 0))
    except KeyError as e:
        raise OracleMiss(f"request metadata lacks {e}") from None


class GoldOracleBackend(Backend):
    """Answers every initial prompt with the gold rendering and every
    correction prompt with the stop phrase."""

    def __init__(self, gold: Union[Mapping[str, GoldSentence], Iterable[GoldSentence]],
                 templates: Optional[Mapping[Language, TemplateSet]] = None):
        super().__init__()
        if isinstance(gold, Mapping):
            self.gold = dict(gold)
        else:
            self.gold = {g.sentence.id: g for g in gold}
        self._templates = dict(templates or {})

    def templates(self, language: Language) -> TemplateSet:
        if language not in self._templates:
            self._templates[language] = TemplateSet.default(language)
        return self._templates[language]

    def lookup(self, sentence_id: str) -> GoldSentence:
        try:
            return self.gold[sentence_id]
        except KeyError:
            raise OracleMiss(f"unknown sentence id {sentence_id!r}") from None

    def gold_text(self, g: GoldSentence, stage: str, predicate: Optional[int]) -> str:
        if stage == "predicate":
            return render_predicates(g.sentence, g.predicate_tokens).text
        return render_arguments(g.sentence, self.gold_structure(g, predicate)).text

    @staticmethod
    def gold_structure(g: GoldSentence, predicate: Optional[int]) -> PredicateArgumentStructure:
        if predicate is None:
            raise OracleMiss("argument-stage request without a predicate index")
        structure = g.structure_for(predicate)
        if structure is None:
            return PredicateArgumentStructure(PredicateInstance.at(g.sentence, predicate))
        return structure

    def _complete(self, req: CompletionRequest) -> str:
        sid, stage, predicate, rnd = _meta(req)
        g = self.lookup(sid)
        if rnd > 0:
            return self.templates(g.sentence.language).stop_phrase
        return self.gold_text(g, stage, predicate)


class CorruptingBackend(GoldOracleBackend):
    """Gold oracle that damages initial answers and repairs them on the first
    correction round.  Every decision is seeded per (sentence, stage,
    predicate), so results do not depend on call order."""

    def __init__(self, gold, seed: int = 0, rate: float = 1.0,
                 menu: Sequence[Corruption] = MENU, templates=None):
        super().__init__(gold, templates)
        self.seed, self.rate, self.menu = seed, rate, tuple(menu)

    def _rng(self, sid: str, stage: str, predicate: Optional[int]) -> random.Random:
        return random.Random(f"{self.seed}|{sid}|{stage}|{predicate}")

    def corruption(self, g: GoldSentence, stage: str,
                   predicate: Optional[int]) -> Optional[tuple[str, Corruption]]:
        """The damaged initial answer and its kind, or None when left intact."""
        rng = self._rng(g.sentence.id, stage, predicate)
        if rng.random() >= self.rate:
            return None
        if stage == "predicate":
            text, kind = corrupt_predicates(g.sentence, g.predicate_tokens, rng, self.menu)
        else:
            text, kind = corrupt_arguments(g.sentence, self.gold_structure(g, predicate), rng, self.menu)
        return (text, kind) if kind is not None else None

    def _complete(self, req: CompletionRequest) -> str:
        sid, stage, predicate, rnd = _meta(req)
        g = self.lookup(sid)
        tpl = self.templates(g.sentence.language)
        damage = self.corruption(g, stage, predicate)
        bad = damage[0] if damage else None
        if rnd == 0:
            return bad if bad is not None else self.gold_text(g, stage, predicate)
        if rnd > 1 or bad is None:
            return tpl.stop_phrase
        s = g.sentence
        if stage == "predicate":
            parsed, devs = parse_predicates(bad, s)
            issues = describe_predicate_issues(s, g.predicate_tokens, parsed, devs)
        else:
            args, devs = parse_arguments(bad, s, predicate)
            issues = describe_argument_issues(s, self.gold_structure(g, predicate), args, devs)
        return correction_answer(tpl, stage, issues, self.gold_text(g, stage, predicate))


def correction_answer(tpl: TemplateSet, stage: str, issues: str, revised: str) -> str:
    """A self-correction reply in the requested "Issues ... result:" layout."""
    if not issues:
        return tpl.stop_phrase
    return f"{tpl.fragments['issues_prefix']} {issues} {tpl.result_label(stage)} {revised}"


@dataclass(frozen=True)
class ScriptStep:
    response: str
    expect: Optional[str] = None  # substring required in the last user turn


class ScriptedBackend(Backend):
    """Replays a fixed transcript, one response per call."""

    def __init__(self, steps: Iterable[Union[str, ScriptStep, tuple]]):
        super().__init__()
        self.steps: list[ScriptStep] = []
        for step in steps:
            if isinstance(step, str):
                step = ScriptStep(step)
            elif isinstance(step, tuple):
                step = ScriptStep(step[1], step[0])
            self.steps.append(step)
        self._pos = 0
        self._lock = threading.Lock()

    @classmethod
    def load(cls, path: Union[str, Path]) -> "ScriptedBackend":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(ScriptStep(d["response"], d.get("expect")) for d in data)

    def _complete(self, req: CompletionRequest) -> str:
        with self._lock:
            if self._pos >= len(self.steps):
                raise ScriptMismatch(f"script exhausted after {len(self.steps)} responses")
            step = self.steps[self._pos]
            self._pos += 1
        if step.expect is not None:
            user = next((t.text for t in reversed(req.conversation.turns)
                         if t.speaker is Speaker.USER), "")
            if step.expect not in user:
                raise ScriptMismatch(f"step {self._pos}: prompt lacks {step.expect!r}")
        return step.response


def make_backend(cfg: BackendConfig, gold: Optional[Iterable[GoldSentence]] = None,
                 script: Optional[Iterable] = None, client: Optional[httpx.Client] = None) -> Backend:
    if cfg.kind is BackendKind.HTTP:
        return HttpBackend(cfg, client=client)
    if cfg.kind is BackendKind.SCRIPTED:
        if script is None:
            raise ValueError("scripted backend needs a script")
        return ScriptedBackend(script)
    if gold is None:
        raise ValueError(f"{cfg.kind.value} backend needs the gold corpus")
    if cfg.kind is BackendKind.GOLD:
        return GoldOracleBackend(gold)
    rate = 1.0 if cfg.corruption_rate is None else cfg.corruption_rate
    return CorruptingBackend(gold, seed=cfg.seed, rate=rate)


def complete(req: CompletionRequest, backend: Backend) -> str:
    return backend.complete(req)
