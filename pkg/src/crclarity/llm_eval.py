"""Zero-shot clarity judging through a chat-completions endpoint.

The prompt walks the model through the task, the three attributes with
their criteria, the aggregation rule, and a fixed output template, then
presents the normalized diff and the comment.  Responses are parsed
leniently (any casing, any order, surrounding prose tolerated); a call
whose output cannot be parsed is retried a bounded number of times and
finally falls back to an all-negative verdict flagged as such.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import IO, Callable, Mapping, Sequence

import requests

from .corpus import ReviewInstance
from .criteria import CATALOG, Attribute, Criterion, Kind
from .errors import TransportError, ValidationError
from .preprocess import NormalizedInput, normalize_instance

PROMPT_VERSION = "v1"

TASK_INSTRUCTION = (
    "You are reviewing the clarity of a code review comment. Judge the "
    "comment on three attributes: Relevance, Informativeness, and "
    "Expression. Judge each attribute independently of the others."
)

AGGREGATION_RULE = (
    "Answer Yes for an attribute only when the comment satisfies every "
    "essential criterion of that attribute and at least one of its optional "
    "criteria. Otherwise answer No."
)

OUTPUT_TEMPLATE = (
    "Reply with exactly three lines in this format and nothing else:\n"
    "Relevance: Yes or No\n"
    "Informativeness: Yes or No\n"
    "Expression: Yes or No"
)

DEFAULT_MAX_NEW_TOKENS = 32


class InvalidOutput(ValueError):
    """The model reply did not contain a usable verdict for each attribute."""

    def __init__(self, message: str, raw: str) -> None:
        super().__init__(message)
        self.raw = raw


def _criteria_section(catalog: Sequence[Criterion]) -> str:
    lines = []
    for attribute in Attribute:
        lines.append(f"{attribute.value}:")
        for criterion in catalog:
            if criterion.attribute is not attribute:
                continue
            kind = "essential" if criterion.kind is Kind.ESSENTIAL else "optional"
            lines.append(f"- ({kind}) {criterion.description}")
        lines.append("")
    return "\n".join(lines).rstrip()


@dataclass(frozen=True)
class PromptBundle:
    """The ordered sections of one judging prompt."""

    instruction: str
    criteria: str
    rule: str
    output_format: str
    data: str
    max_new_tokens: int = DEFAULT_MAX_NEW_TOKENS

    @property
    def text(self) -> str:
        return "\n\n".join(
            (self.instruction, self.criteria, self.rule, self.output_format, self.data)
        )

    @property
    def sha256(self) -> str:
        return hashlib.sha256(self.text.encode("utf-8")).hexdigest()


def build_prompt(
    ninput: NormalizedInput,
    catalog: Sequence[Criterion] = CATALOG,
    max_new_tokens: int = DEFAULT_MAX_NEW_TOKENS,
) -> PromptBundle:
    data = (
        f"Code change:\n{ninput.normalized_diff or '(no changed lines)'}\n\n"
        f"Review comment:\n{ninput.comment}"
    )
    return PromptBundle(
        instruction=TASK_INSTRUCTION,
        criteria=_criteria_section(catalog),
        rule=AGGREGATION_RULE,
        output_format=OUTPUT_TEMPLATE,
        data=data,
        max_new_tokens=max_new_tokens,
    )


def render_verdicts(verdicts: Mapping[Attribute, bool]) -> str:
    """The canonical reply a fully compliant model would produce."""
    return "\n".join(
        f"{attribute.value}: {'Yes' if verdicts[attribute] else 'No'}"
        for attribute in Attribute
    )


_VERDICT_LINE = re.compile(
    r"\b(relevance|informativeness|expression)\b\s*\**\s*[:=\-]?\s*\**\s*\b(yes|no)\b",
    re.IGNORECASE,
)


def parse_response(raw: str) -> dict[Attribute, bool]:
    """Extract one Yes/No per attribute from a model reply.

    Tolerates reordered lines, extra prose, and arbitrary casing.  Raises
    :class:`InvalidOutput` when an attribute is missing or answered both
    ways.
    """
    found: dict[Attribute, set[bool]] = {a: set() for a in Attribute}
    for match in _VERDICT_LINE.finditer(raw):
        attribute = Attribute.parse(match.group(1))
        found[attribute].add(match.group(2).lower() == "yes")
    verdicts: dict[Attribute, bool] = {}
    for attribute in Attribute:
        answers = found[attribute]
        if not answers:
            raise InvalidOutput(f"no verdict for {attribute.value}", raw)
        if len(answers) > 1:
            raise InvalidOutput(f"contradictory verdicts for {attribute.value}", raw)
        verdicts[attribute] = answers.pop()
    return verdicts


@dataclass(frozen=True)
class EndpointConfig:
    """Connection settings for an OpenAI-style chat-completions endpoint."""

    url: str
    model: str
    api_key: str | None = None
    max_new_tokens: int = DEFAULT_MAX_NEW_TOKENS
    temperature: float = 0.0
    retries: int = 2
    concurrency: int = 4
    timeout: float = 60.0

    def __post_init__(self) -> None:
        if not self.url:
            raise ValidationError("endpoint url must be non-empty")
        if not self.model:
            raise ValidationError("endpoint model must be non-empty")
        if self.retries < 0:
            raise ValidationError("retries must be non-negative")
        if self.concurrency < 1:
            raise ValidationError("concurrency must be at least 1")

    @classmethod
    def from_env(cls, **overrides) -> "EndpointConfig":
        url = overrides.pop("url", None) or os.environ.get("CRCLARITY_LLM_URL")
        model = overrides.pop("model", None) or os.environ.get("CRCLARITY_LLM_MODEL")
        api_key = overrides.pop("api_key", None) or os.environ.get("CRCLARITY_LLM_API_KEY")
        if not url or not model:
            raise ValidationError(
                "LLM endpoint not configured: set CRCLARITY_LLM_URL and "
                "CRCLARITY_LLM_MODEL or pass --llm-url/--llm-model"
            )
        return cls(url=url, model=model, api_key=api_key, **overrides)


FALLBACK_VERDICTS: dict[Attribute, bool] = {a: False for a in Attribute}


@dataclass(frozen=True)
class LlmVerdict:
    """Parsed verdicts for one instance, plus how the call went."""

    instance_id: str
    attribute_verdicts: Mapping[Attribute, bool]
    raw_response: str
    attempts: int
    fallback: bool = False
    error: str | None = None

    def positive(self, attribute: Attribute) -> bool:
        return bool(self.attribute_verdicts[attribute])


Transport = Callable[[dict], str]


def http_transport(config: EndpointConfig) -> Transport:
    """POST a chat-completions body and return the assistant message text."""
    session = requests.Session()
    headers = {"Content-Type": "application/json"}
    if config.api_key:
        headers["Authorization"] = f"Bearer {config.api_key}"

    def send(body: dict) -> str:
        try:
            response = session.post(
                config.url, json=body, headers=headers, timeout=config.timeout
            )
        except requests.RequestException as exc:
            raise TransportError(f"request failed: {exc}") from None
        if response.status_code != 200:
            raise TransportError(
                f"endpoint returned {response.status_code}: {response.text[:200]}"
            )
        try:
            return response.json()["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise TransportError(f"malformed endpoint reply: {exc}") from None

    return send


def _request_body(config: EndpointConfig, prompt: PromptBundle) -> dict:
    return {
        "model": config.model,
        "messages": [{"role": "user", "content": prompt.text}],
        "max_tokens": prompt.max_new_tokens,
        "temperature": config.temperature,
    }


def evaluate_remote(
    config: EndpointConfig,
    instances: Sequence[ReviewInstance],
    transport: Transport | None = None,
    transcript: IO[str] | None = None,
) -> list[LlmVerdict]:
    """Judge every instance, preserving order, with bounded concurrency.

    ``transport`` may be swapped out for testing; the default posts to the
    configured endpoint.  When ``transcript`` is given, one JSON line per
    attempt is written (prompt hash, raw reply, latency, outcome).
    """
    send = transport if transport is not None else http_transport(config)
    lock = threading.Lock()

    def log(entry: dict) -> None:
        if transcript is None:
            return
        with lock:
            transcript.write(json.dumps(entry, sort_keys=True) + "\n")

    def judge(inst: ReviewInstance) -> LlmVerdict:
        ninput = normalize_instance(inst.comment, inst.diff_hunk)
        prompt = build_prompt(ninput, max_new_tokens=config.max_new_tokens)
        raw = ""
        error = ""
        for attempt in range(1, config.retries + 2):
            started = time.perf_counter()
            try:
                raw = send(_request_body(config, prompt))
                verdicts = parse_response(raw)
            except (TransportError, InvalidOutput) as exc:
                error = str(exc)
                log(
                    {
                        "instance": inst.id,
                        "attempt": attempt,
                        "prompt_sha256": prompt.sha256,
                        "prompt_version": PROMPT_VERSION,
                        "raw_response": raw if isinstance(exc, InvalidOutput) else "",
                        "latency_ms": round(1000 * (time.perf_counter() - started), 3),
                        "ok": False,
                        "error": error,
                    }
                )
                continue
            log(
                {
                    "instance": inst.id,
                    "attempt": attempt,
                    "prompt_sha256": prompt.sha256,
                    "prompt_version": PROMPT_VERSION,
                    "raw_response": raw,
                    "latency_ms": round(1000 * (time.perf_counter() - started), 3),
                    "ok": True,
                }
            )
            return LlmVerdict(
                instance_id=inst.id,
                attribute_verdicts=verdicts,
                raw_response=raw,
                attempts=attempt,
            )
        return LlmVerdict(
            instance_id=inst.id,
            attribute_verdicts=dict(FALLBACK_VERDICTS),
            raw_response=raw,
            attempts=config.retries + 1,
            fallback=True,
            error=error,
        )

    if not instances:
        return []
    with ThreadPoolExecutor(max_workers=config.concurrency) as pool:
        return list(pool.map(judge, instances))
