"""Judge abstraction: prompt construction, response parsing, and judge backends.

Three judges share one interface. The deterministic oracle selects by known
latent quality and exists to verify tournament properties. The synthetic judge
draws winners from a Plackett-Luce model over ``exp(beta * utility)`` and adds
configurable position and verbosity biases, emulating the failure modes real
LLM judges are known for. The remote judge speaks a chat-completions-style
HTTP protocol with retries and an explicit fallback policy.

All three return a raw response text (local judges synthesize the canonical
JSON), so callers run every verdict through the same parsers and every judge
call is auditable the same way.
"""

from __future__ import annotations

import json
import math
import os
import threading
import time
from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np
import requests

from .core import (
    RangeError,
    Rollout,
    Rubric,
    RubricSet,
    SchemaError,
    rubric_from_dict,
)
from .format import GrammarError, parse_trace

PROMPT_KINDS = (
    "tournament",
    "pairwise",
    "implicit",
    "explicit_single_rubric",
    "rubric_generation",
)

FALLBACK_POLICIES = ("fail", "lowest_index")


class JudgeError(Exception):
    """Base class for judge failures."""


class ParseError(JudgeError):
    """No JSON object with the expected key could be extracted from a response."""


class CountError(JudgeError):
    """A winners list has the wrong number of entries."""


class DuplicateError(JudgeError):
    """A winners list repeats a candidate."""


class MissingLatentError(JudgeError):
    """An oracle or synthetic judge was given a rollout without latent quality."""


class MissingFieldError(JudgeError):
    """A prompt template slot was not provided."""


class TransportError(JudgeError):
    """The remote judge endpoint could not be reached or returned a bad envelope."""


class ExhaustedRetriesError(JudgeError):
    """Every attempt against the remote judge failed and the fallback policy is fail."""


@dataclass(frozen=True)
class Winners:
    """0-based indices of the selected candidates, in the judge's stated order."""

    indices: tuple[int, ...]


@dataclass(frozen=True)
class Score:
    """A pointwise judge score in [0, 10]."""

    value: float


# --- prompt templates --------------------------------------------------------

_TOURNAMENT_TEMPLATE = """You are an expert judge for deep-research quality.
Compare the candidate responses to the same query using the rubric below.

Query:
{query}

Rubric (description, dimension, importance, title):
{rubric_block}

Candidates:
{candidate_block}

Selection rule:
- Select exactly {num_winners} winner(s).
- Prefer responses that are accurate, complete, well-supported, and directly answer the query.
- Return JSON only, without markdown or explanations.
- Use 1-based candidate numbers with this schema:
  {{"winners": [1]}}
"""

_PAIRWISE_TEMPLATE = """You are an expert judge for deep-research quality.
Compare the candidate responses to the same query using the rubric below.

Query:
{query}

Rubric (description, dimension, importance, title):
{rubric_block}

Candidates:
{candidate_block}

Selection rule:
- Select exactly 1 winner.
- Prefer responses that are accurate, complete, well-supported, and directly answer the query.
- Return JSON only, without markdown or explanations.
- Use 1-based candidate numbers with this schema:
{{
  "winners": [1]
}}
"""

_IMPLICIT_TEMPLATE = """You are an expert scorer for deep-research quality.
Using the provided rubric, score the response to the query below.

Query:
{query}

Response:
{response}

Rubric (description, dimension, importance, title):
{rubric_block}

Scoring rule:
- Return one final score in [0, 10], where 0 is worst and 10 is best.
- Do not output explanations.
- Output must be JSON only, with this schema:
{{
  "score": 7.5
}}
"""

_EXPLICIT_TEMPLATE = """You are an expert scorer for deep-research quality.
You must score the response against exactly ONE rubric only.
Do not aggregate across any other rubrics.

Query:
{query}

Response:
{response}

Single rubric to score:
title: {title}
dimension: {dimension}
importance: {importance}
description: {description}

Scoring rule:
- Evaluate only this single rubric.
- Return one final score in [0, 10], where 0 is worst and 10 is best.
- Do not output explanations.
- Output must be JSON only, with this schema:
{{
  "score": 7.5
}}
"""

_RUBRIC_GENERATION_TEMPLATE = """Create a query-specific evaluation rubric for the user query below.

User query:
{query}

Return JSON only in this exact shape:
{{
  "query": "<original query>",
  "rubrics": [
    {{
      "dimension": "Coverage / Completeness",
      "title": "<short rubric title>",
      "description": "<one concise query-specific sentence>",
      "importance": "critical"
    }}
  ]
}}

Rules:
- Generate exactly 5 to 7 rubric items.
- Use only these dimensions:
  - Coverage / Completeness
  - Depth / Insight / Explanation
  - Grounding / Citation Quality
  - Instruction / Context Alignment
  - Communication Quality
- Use only these importance values:
  - critical
  - important
  - nice_to_have
- Make each item specific, observable, and non-overlapping.
- Cover at least 3 dimensions when possible.
- Reflect comparisons, recommendations, trade-offs, critiques, benchmarks, or uncertainty when relevant.
- If the query needs evidence, citations, freshness, or benchmarks, include grounding/citation quality.
- Do not add extra keys.
- No markdown. No explanation. JSON only.
"""


def rubric_block(rubrics: RubricSet | Sequence[Rubric]) -> str:
    """Render rubrics one per line, fields labeled in (description, dimension, importance, title) order."""
    return "\n".join(
        f"- description: {r.description} | dimension: {r.dimension}"
        f" | importance: {r.importance} | title: {r.title}"
        for r in rubrics
    )


def candidate_block(texts: Sequence[str]) -> str:
    """Number candidates 1-based in presentation order."""
    return "\n\n".join(f"Candidate {i}:\n{t}" for i, t in enumerate(texts, start=1))


def tournament_prompt(
    query: str, rubrics: RubricSet | Sequence[Rubric], candidates: Sequence[str], num_winners: int
) -> str:
    if len(candidates) < 2:
        raise MissingFieldError("tournament prompt needs at least 2 candidates")
    if not 1 <= num_winners <= len(candidates):
        raise MissingFieldError(f"num_winners {num_winners} out of range for {len(candidates)} candidates")
    return _TOURNAMENT_TEMPLATE.format(
        query=query,
        rubric_block=rubric_block(rubrics),
        candidate_block=candidate_block(candidates),
        num_winners=num_winners,
    )


def pairwise_prompt(query: str, rubrics: RubricSet | Sequence[Rubric], candidates: Sequence[str]) -> str:
    if len(candidates) != 2:
        raise MissingFieldError("pairwise prompt needs exactly 2 candidates")
    return _PAIRWISE_TEMPLATE.format(
        query=query,
        rubric_block=rubric_block(rubrics),
        candidate_block=candidate_block(candidates),
    )


def implicit_prompt(query: str, rubrics: RubricSet | Sequence[Rubric], response: str) -> str:
    return _IMPLICIT_TEMPLATE.format(
        query=query, response=response, rubric_block=rubric_block(rubrics)
    )


def explicit_prompt(query: str, rubric: Rubric, response: str) -> str:
    if not isinstance(rubric, Rubric):
        raise MissingFieldError("explicit scoring needs exactly one Rubric")
    return _EXPLICIT_TEMPLATE.format(
        query=query,
        response=response,
        title=rubric.title,
        dimension=rubric.dimension,
        importance=rubric.importance,
        description=rubric.description,
    )


def rubric_generation_prompt(query: str) -> str:
    return _RUBRIC_GENERATION_TEMPLATE.format(query=query)


def render_prompt(kind: str, group: Any = None, **extras: Any) -> str:
    """Render a judge prompt by kind. Deterministic and byte-stable for identical inputs.

    ``group`` supplies ``query``/``rubrics`` when given; kind-specific slots
    come from ``extras`` (``candidates`` + ``num_winners`` for tournament,
    ``response`` for pointwise kinds, ``rubric`` for explicit_single_rubric).
    Raises :class:`MissingFieldError` when a required slot is absent.
    """
    if kind not in PROMPT_KINDS:
        raise MissingFieldError(f"unknown prompt kind {kind!r}")
    query = extras.get("query", getattr(group, "query", None))
    if query is None:
        raise MissingFieldError("query")
    if kind == "rubric_generation":
        return rubric_generation_prompt(query)

    rubrics = extras.get("rubrics", getattr(group, "rubrics", None))
    if rubrics is None:
        raise MissingFieldError("rubrics")
    if kind == "tournament":
        if "candidates" not in extras:
            raise MissingFieldError("candidates")
        if "num_winners" not in extras:
            raise MissingFieldError("num_winners")
        return tournament_prompt(query, rubrics, extras["candidates"], extras["num_winners"])
    if kind == "pairwise":
        if "candidates" not in extras:
            raise MissingFieldError("candidates")
        return pairwise_prompt(query, rubrics, extras["candidates"])
    if kind == "implicit":
        if "response" not in extras:
            raise MissingFieldError("response")
        return implicit_prompt(query, rubrics, extras["response"])
    # explicit_single_rubric
    if "rubric" not in extras:
        raise MissingFieldError("rubric")
    if "response" not in extras:
        raise MissingFieldError("response")
    return explicit_prompt(query, extras["rubric"], extras["response"])


# --- response parsing --------------------------------------------------------

_DECODER = json.JSONDecoder()


def extract_json_object(text: str, required_key: str, *, strict: bool = False) -> dict:
    """Pull the first JSON object containing ``required_key`` out of a response.

    Tolerates markdown fencing and surrounding prose by scanning every ``{``
    for a decodable object. In strict mode the whole response must be exactly
    one JSON object.
    """
    if strict:
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(f"response is not a JSON object: {exc}") from exc
        if not isinstance(obj, dict):
            raise ParseError("response is not a JSON object")
        if required_key not in obj:
            raise ParseError(f"response lacks the {required_key!r} key")
        return obj

    found_object = False
    start = text.find("{")
    while start != -1:
        try:
            obj, _ = _DECODER.raw_decode(text, start)
        except json.JSONDecodeError:
            start = text.find("{", start + 1)
            continue
        if isinstance(obj, dict):
            found_object = True
            if required_key in obj:
                return obj
        start = text.find("{", start + 1)
    if found_object:
        raise ParseError(f"no JSON object with a {required_key!r} key in the response")
    raise ParseError("no JSON object in the response")


def parse_winner_response(
    text: str, num_winners: int, group_size: int, *, strict: bool = False
) -> Winners:
    """Parse a winner-selection response into 0-based :class:`Winners`.

    Validates distinctness, range (1-based, within the comparison group), and
    exact count, in that order.
    """
    if num_winners < 1:
        raise ValueError("num_winners must be >= 1")
    if group_size < num_winners:
        raise ValueError("group_size must be >= num_winners")
    obj = extract_json_object(text, "winners", strict=strict)
    raw = obj["winners"]
    if not isinstance(raw, list):
        raise ParseError("'winners' is not a list")
    for entry in raw:
        if isinstance(entry, bool) or not isinstance(entry, int):
            raise ParseError(f"winner {entry!r} is not an integer")
    if len(set(raw)) != len(raw):
        raise DuplicateError(f"winners {raw} contain duplicates")
    for entry in raw:
        if not 1 <= entry <= group_size:
            raise RangeError(f"winner {entry} outside [1, {group_size}]")
    if len(raw) != num_winners:
        raise CountError(f"expected {num_winners} winner(s), got {len(raw)}")
    return Winners(tuple(entry - 1 for entry in raw))


def parse_score_response(text: str, *, strict: bool = False) -> Score:
    """Parse a pointwise scoring response; scores outside [0, 10] are errors, not clamped."""
    obj = extract_json_object(text, "score", strict=strict)
    raw = obj["score"]
    if isinstance(raw, bool) or not isinstance(raw, (int, float)):
        raise ParseError(f"score {raw!r} is not a number")
    value = float(raw)
    if not math.isfinite(value) or not 0.0 <= value <= 10.0:
        raise RangeError(f"score {value} outside [0, 10]")
    return Score(value)


def parse_rubric_set(text: str, *, strict: bool = False) -> RubricSet:
    """Validate a rubric-generation response against the exact document schema.

    Requires the keys ``query``/``rubrics`` and nothing else, 5 to 7 items,
    and closed-enum dimension/importance values per item. Raises
    :class:`SchemaError` naming the first violated rule.
    """
    try:
        obj = extract_json_object(text, "rubrics", strict=strict)
    except ParseError as exc:
        raise SchemaError("not-object", str(exc)) from exc
    extra = obj.keys() - {"query", "rubrics"}
    if extra:
        raise SchemaError("extra-key", f"unexpected keys {sorted(extra)}")
    if "query" not in obj:
        raise SchemaError("missing-key", "document lacks 'query'")
    if not isinstance(obj["query"], str) or not obj["query"].strip():
        raise SchemaError("empty-field", "query must be a non-empty string")
    items = obj["rubrics"]
    if not isinstance(items, list):
        raise SchemaError("type", "'rubrics' must be a list")
    if not 5 <= len(items) <= 7:
        raise SchemaError("count", f"expected 5 to 7 rubric items, got {len(items)}")
    return RubricSet(query=obj["query"], rubrics=tuple(rubric_from_dict(i) for i in items))


# --- selection primitives ----------------------------------------------------


def _require_qualities(latent_qualities: Sequence[float | None]) -> list[float]:
    values = []
    for i, q in enumerate(latent_qualities):
        if q is None:
            raise MissingLatentError(f"candidate {i} has no latent_quality")
        values.append(float(q))
    return values


def oracle_select(latent_qualities: Sequence[float | None], num_winners: int) -> Winners:
    """Pick the ``num_winners`` highest latent qualities, ties toward the lower index."""
    qualities = _require_qualities(latent_qualities)
    if not 1 <= num_winners <= len(qualities):
        raise ValueError(f"num_winners {num_winners} out of range for {len(qualities)} candidates")
    order = sorted(range(len(qualities)), key=lambda i: (-qualities[i], i))
    return Winners(tuple(order[:num_winners]))


def synthetic_select(
    latent_qualities: Sequence[float | None],
    num_winners: int,
    beta: float,
    *,
    position_bonus: float = 0.0,
    length_bonus: float = 0.0,
    lengths: Sequence[int] | None = None,
    rng: np.random.Generator,
) -> Winners:
    """Draw winners without replacement with weights ``exp(beta * utility)``.

    Utility is the latent quality plus a position bonus for the first-listed
    candidate and a verbosity bonus proportional to relative text length.
    ``beta=0`` is a uniform judge; large ``beta`` recovers the oracle on
    well-separated qualities.
    """
    if beta < 0:
        raise ValueError("beta must be >= 0")
    qualities = _require_qualities(latent_qualities)
    n = len(qualities)
    if not 1 <= num_winners <= n:
        raise ValueError(f"num_winners {num_winners} out of range for {n} candidates")
    utility = np.asarray(qualities, dtype=float)
    if position_bonus:
        utility = utility.copy()
        utility[0] += position_bonus
    if length_bonus and lengths is not None:
        scale = max(lengths) or 1
        utility = utility + length_bonus * (np.asarray(lengths, dtype=float) / scale)
    scaled = beta * utility

    active = list(range(n))
    picks = []
    for _ in range(num_winners):
        z = scaled[active]
        weights = np.exp(z - z.max())
        cumulative = np.cumsum(weights)
        draw = rng.random() * cumulative[-1]
        j = int(np.searchsorted(cumulative, draw, side="right"))
        picks.append(active.pop(min(j, len(active) - 1)))
    return Winners(tuple(picks))


# --- judge backends ----------------------------------------------------------


@dataclass(frozen=True)
class SelectionRequest:
    """One winner-selection call: rendered prompt plus the candidates as presented."""

    prompt: str
    candidates: tuple[Rollout, ...]
    num_winners: int
    rng: np.random.Generator | None = None


@dataclass(frozen=True)
class ScoringRequest:
    """One pointwise scoring call for a single rollout."""

    prompt: str
    rollout: Rollout
    rng: np.random.Generator | None = None


@dataclass(frozen=True)
class JudgeReply:
    """Raw judge response text plus retry/fallback bookkeeping."""

    text: str
    retries: int = 0
    fallback_used: bool = False


def candidate_text(rollout: Rollout, answer_only: bool = False) -> str:
    """Judge input for one rollout: the full trajectory, or just its answer block.

    In answer-only mode a rollout that fails the tag grammar falls back to its
    full text, so ablation never hides a malformed candidate from the judge.
    """
    if not answer_only:
        return rollout.text
    try:
        trace = parse_trace(rollout.text)
    except GrammarError:
        return rollout.text
    return trace.answer if trace.answer is not None else rollout.text


class OracleJudge:
    """Deterministic test judge: winners by latent quality, scores 10x quality."""

    name = "oracle"

    def select(self, request: SelectionRequest) -> JudgeReply:
        qualities = [c.latent_quality for c in request.candidates]
        winners = oracle_select(qualities, request.num_winners)
        return JudgeReply(json.dumps({"winners": [i + 1 for i in winners.indices]}))

    def score(self, request: ScoringRequest) -> JudgeReply:
        quality = request.rollout.latent_quality
        if quality is None:
            raise MissingLatentError(f"rollout {request.rollout.index} has no latent_quality")
        value = 10.0 * min(max(float(quality), 0.0), 1.0)
        return JudgeReply(json.dumps({"score": value}))


class SyntheticJudge:
    """Noisy judge for simulation: Plackett-Luce selection, noisy monotone scoring.

    ``beta`` sharpens both selection and scoring (score noise has standard
    deviation ``1/beta``). ``score_buckets`` quantizes pointwise scores into
    that many levels over [0, 10]; one bucket makes every score identical,
    which models a fully saturated pointwise reward.
    """

    name = "synthetic"

    def __init__(
        self,
        beta: float = 2.0,
        position_bonus: float = 0.0,
        length_bonus: float = 0.0,
        score_buckets: int | None = None,
        length_scale: float = 1000.0,
    ):
        if beta < 0:
            raise ValueError("beta must be >= 0")
        if score_buckets is not None and score_buckets < 1:
            raise ValueError("score_buckets must be >= 1")
        self.beta = beta
        self.position_bonus = position_bonus
        self.length_bonus = length_bonus
        self.score_buckets = score_buckets
        self.length_scale = length_scale

    def select(self, request: SelectionRequest) -> JudgeReply:
        if request.rng is None:
            raise ValueError("the synthetic judge needs a caller-provided rng")
        qualities = [c.latent_quality for c in request.candidates]
        lengths = [len(c.text) for c in request.candidates]
        winners = synthetic_select(
            qualities,
            request.num_winners,
            self.beta,
            position_bonus=self.position_bonus,
            length_bonus=self.length_bonus,
            lengths=lengths if self.length_bonus else None,
            rng=request.rng,
        )
        return JudgeReply(json.dumps({"winners": [i + 1 for i in winners.indices]}))

    def score(self, request: ScoringRequest) -> JudgeReply:
        if request.rng is None:
            raise ValueError("the synthetic judge needs a caller-provided rng")
        quality = request.rollout.latent_quality
        if quality is None:
            raise MissingLatentError(f"rollout {request.rollout.index} has no latent_quality")
        if self.beta > 0:
            noisy = float(quality) + request.rng.normal(0.0, 1.0 / self.beta)
        else:
            noisy = request.rng.uniform(0.0, 1.0)
        if self.length_bonus:
            noisy += self.length_bonus * len(request.rollout.text) / self.length_scale
        value = 10.0 * min(max(noisy, 0.0), 1.0)
        if self.score_buckets is not None:
            b = self.score_buckets
            bucket = min(b - 1, int(value / 10.0 * b))
            value = 10.0 * (bucket + 0.5) / b
        return JudgeReply(json.dumps({"score": value}))


@dataclass(frozen=True)
class RemoteJudgeConfig:
    """Connection and sampling settings for a chat-completions-style judge endpoint."""

    endpoint: str
    model: str
    temperature: float = 0.0
    top_p: float = 0.95
    max_retries: int = 3
    timeout_s: float = 60.0
    fallback: str = "fail"
    api_key: str | None = None
    retry_backoff_s: float = 0.5
    strict_json: bool = False

    def __post_init__(self) -> None:
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if not 0 < self.top_p <= 1:
            raise ValueError("top_p must be in (0, 1]")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")
        if self.fallback not in FALLBACK_POLICIES:
            raise ValueError(f"fallback must be one of {FALLBACK_POLICIES}")

    @classmethod
    def from_env(cls, **overrides: Any) -> "RemoteJudgeConfig":
        """Build from JUDGE_ENDPOINT / JUDGE_API_KEY / JUDGE_MODEL, plus overrides."""
        endpoint = overrides.pop("endpoint", os.environ.get("JUDGE_ENDPOINT"))
        model = overrides.pop("model", os.environ.get("JUDGE_MODEL"))
        api_key = overrides.pop("api_key", os.environ.get("JUDGE_API_KEY"))
        if not endpoint:
            raise ValueError("no judge endpoint configured (set JUDGE_ENDPOINT)")
        if not model:
            raise ValueError("no judge model configured (set JUDGE_MODEL)")
        return cls(endpoint=endpoint, model=model, api_key=api_key, **overrides)


class RemoteJudge:
    """HTTP judge client with retries, a fallback policy, and an in-flight cap.

    Each attempt sends the prompt as a single user message and parses the first
    choice's message content. Parse and transport failures both count against
    ``max_retries``; on exhaustion the fallback policy either raises
    :class:`ExhaustedRetriesError` or returns the lowest-index verdict flagged
    as a fallback.
    """

    name = "remote"

    def __init__(self, config: RemoteJudgeConfig, max_in_flight: int | None = None):
        self.config = config
        self._gate = threading.Semaphore(max_in_flight) if max_in_flight else None

    def _post(self, prompt: str) -> str:
        cfg = self.config
        headers = {"Content-Type": "application/json"}
        if cfg.api_key:
            headers["Authorization"] = f"Bearer {cfg.api_key}"
        payload = {
            "model": cfg.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": cfg.temperature,
            "top_p": cfg.top_p,
        }
        try:
            if self._gate is not None:
                with self._gate:
                    response = requests.post(
                        cfg.endpoint, json=payload, headers=headers, timeout=cfg.timeout_s
                    )
            else:
                response = requests.post(
                    cfg.endpoint, json=payload, headers=headers, timeout=cfg.timeout_s
                )
            response.raise_for_status()
            data = response.json()
            return data["choices"][0]["message"]["content"]
        except requests.RequestException as exc:
            raise TransportError(f"judge request failed: {exc}") from exc
        except (KeyError, IndexError, TypeError, ValueError) as exc:
            raise TransportError(f"malformed judge response envelope: {exc}") from exc

    def _attempt(self, prompt: str, check: Any) -> JudgeReply:
        cfg = self.config
        last_error: Exception | None = None
        for attempt in range(cfg.max_retries + 1):
            if attempt and cfg.retry_backoff_s:
                time.sleep(cfg.retry_backoff_s * attempt)
            try:
                text = self._post(prompt)
                check(text)
                return JudgeReply(text, retries=attempt)
            except (TransportError, ParseError, CountError, DuplicateError, RangeError) as exc:
                last_error = exc
        if cfg.fallback == "fail":
            raise ExhaustedRetriesError(
                f"judge failed after {cfg.max_retries + 1} attempts: {last_error}"
            ) from last_error
        return JudgeReply("", retries=cfg.max_retries, fallback_used=True)

    def select(self, request: SelectionRequest) -> JudgeReply:
        cfg = self.config
        reply = self._attempt(
            request.prompt,
            lambda text: parse_winner_response(
                text, request.num_winners, len(request.candidates), strict=cfg.strict_json
            ),
        )
        if reply.fallback_used:
            winners = list(range(1, request.num_winners + 1))
            return JudgeReply(
                json.dumps({"winners": winners}), retries=reply.retries, fallback_used=True
            )
        return reply

    def score(self, request: ScoringRequest) -> JudgeReply:
        cfg = self.config
        reply = self._attempt(
            request.prompt, lambda text: parse_score_response(text, strict=cfg.strict_json)
        )
        if reply.fallback_used:
            # The scoring analog of lowest_index: the lowest legal score.
            return JudgeReply(json.dumps({"score": 0.0}), retries=reply.retries, fallback_used=True)
        return reply
