"""Domain types, tournament configuration validation, and the judge-call predictor.

The central planning tool here is :func:`validate_config`, which unrolls the
candidate-count recurrence ``n_0 = K, n_{j+1} = (n_j / G) * K_win`` and rejects
any configuration whose round sizes are not divisible by the comparison-group
size. Validation is strict by design: padding or remainder groups would change
the reward distribution, so invalid shapes are errors, never silently patched.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Sequence

DIMENSIONS = (
    "Coverage / Completeness",
    "Depth / Insight / Explanation",
    "Grounding / Citation Quality",
    "Instruction / Context Alignment",
    "Communication Quality",
)

IMPORTANCE_LEVELS = ("critical", "important", "nice_to_have")

DEFAULT_EPSILON = 1e-8


class ConfigError(ValueError):
    """Base class for tournament-configuration failures."""


class DegenerateError(ConfigError):
    """Config is structurally impossible (K_win >= G, K_final >= K, G < 2, ...)."""


class DivisibilityError(ConfigError):
    """Some active-candidate count above the final threshold is not divisible by G."""


class ConfigMismatchError(ConfigError):
    """A validated config was used with a different group size than it was validated for."""


class SchemaError(ValueError):
    """A rubric or group document violates the expected schema.

    ``rule`` names the first violated rule (e.g. ``count``, ``enum``, ``extra-key``).
    """

    def __init__(self, rule: str, message: str):
        super().__init__(f"{rule}: {message}")
        self.rule = rule


class RangeError(ValueError):
    """A numeric value is outside its documented domain."""


class LengthMismatchError(ValueError):
    """Two parallel sequences have different lengths."""


@dataclass(frozen=True)
class Rubric:
    """One evaluation criterion: dimension, short title, description, importance."""

    dimension: str
    title: str
    description: str
    importance: str

    def __post_init__(self) -> None:
        if self.dimension not in DIMENSIONS:
            raise SchemaError("enum", f"unknown dimension {self.dimension!r}")
        if self.importance not in IMPORTANCE_LEVELS:
            raise SchemaError("enum", f"unknown importance {self.importance!r}")
        if not isinstance(self.title, str) or not self.title.strip():
            raise SchemaError("empty-field", "rubric title must be non-empty")
        if not isinstance(self.description, str) or not self.description.strip():
            raise SchemaError("empty-field", "rubric description must be non-empty")


@dataclass(frozen=True)
class RubricSet:
    """A query plus its ordered evaluation rubrics.

    Hand-authored sets may have any count >= 1; the generation-response parser
    additionally enforces the 5-to-7 item rule.
    """

    query: str
    rubrics: tuple[Rubric, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "rubrics", tuple(self.rubrics))
        if not isinstance(self.query, str) or not self.query.strip():
            raise SchemaError("empty-field", "query must be non-empty")
        if len(self.rubrics) < 1:
            raise SchemaError("count", "a rubric set needs at least one rubric")

    def __len__(self) -> int:
        return len(self.rubrics)

    def __iter__(self):
        return iter(self.rubrics)

    def to_dict(self) -> dict[str, Any]:
        return {
            "query": self.query,
            "rubrics": [
                {
                    "dimension": r.dimension,
                    "title": r.title,
                    "description": r.description,
                    "importance": r.importance,
                }
                for r in self.rubrics
            ],
        }


@dataclass(frozen=True)
class Rollout:
    """One sampled trajectory. ``latent_quality`` exists only for oracle/synthetic judging."""

    index: int
    text: str
    latent_quality: float | None = None


@dataclass(frozen=True)
class QueryGroup:
    """The K same-query rollouts that form one reward group."""

    query: str
    rubrics: RubricSet
    rollouts: tuple[Rollout, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "rollouts", tuple(self.rollouts))
        if len(self.rollouts) < 2:
            raise ValueError("a query group needs at least 2 rollouts")
        for pos, rollout in enumerate(self.rollouts):
            if rollout.index != pos:
                raise ValueError(
                    f"rollout at position {pos} has index {rollout.index}; "
                    "indices must be 0-based and in order"
                )

    @property
    def k(self) -> int:
        return len(self.rollouts)

    @classmethod
    def from_texts(
        cls,
        query: str,
        rubrics: RubricSet,
        texts: Sequence[str],
        latent_qualities: Sequence[float] | None = None,
    ) -> "QueryGroup":
        if latent_qualities is not None and len(latent_qualities) != len(texts):
            raise LengthMismatchError("texts and latent_qualities differ in length")
        rollouts = tuple(
            Rollout(
                index=i,
                text=t,
                latent_quality=None if latent_qualities is None else float(latent_qualities[i]),
            )
            for i, t in enumerate(texts)
        )
        return cls(query=query, rubrics=rubrics, rollouts=rollouts)


@dataclass(frozen=True)
class TournamentConfig:
    """Tournament shape: repeats M, group size G, winners per group, stop threshold.

    ``omega`` is the per-round point schedule: a scalar applies to every round,
    a sequence is indexed by 0-based round number. ``repeats=0`` is accepted and
    means "no judging": all raw scores stay zero.
    """

    repeats: int
    group_size: int
    winners_per_group: int
    final_threshold: int
    omega: float | tuple[float, ...] = 1.0
    epsilon: float = DEFAULT_EPSILON
    seed: int = 0

    def __post_init__(self) -> None:
        if isinstance(self.omega, (list, tuple)):
            object.__setattr__(self, "omega", tuple(float(w) for w in self.omega))
        if self.repeats < 0:
            raise DegenerateError("repeats must be >= 0")
        if self.group_size < 2:
            raise DegenerateError("group_size must be >= 2")
        if not 1 <= self.winners_per_group < self.group_size:
            raise DegenerateError("winners_per_group must satisfy 1 <= K_win < G")
        if self.final_threshold < 1:
            raise DegenerateError("final_threshold must be >= 1")
        if self.epsilon <= 0:
            raise DegenerateError("epsilon must be > 0")
        omegas = self.omega if isinstance(self.omega, tuple) else (self.omega,)
        if any(w < 0 for w in omegas):
            raise DegenerateError("omega weights must be nonnegative")

    def omega_for_round(self, round_index: int) -> float:
        if isinstance(self.omega, tuple):
            return self.omega[round_index]
        return float(self.omega)


@dataclass(frozen=True)
class ValidatedConfig:
    """A :class:`TournamentConfig` checked against a specific group size K.

    ``round_sizes`` is the full active-candidate sequence, from ``K`` down to
    the first value at or below the final threshold.
    """

    config: TournamentConfig
    k: int
    round_sizes: tuple[int, ...]

    @property
    def num_rounds(self) -> int:
        return len(self.round_sizes) - 1

    @property
    def calls_per_repeat(self) -> int:
        g = self.config.group_size
        return sum(n // g for n in self.round_sizes[:-1])


def validate_config(cfg: TournamentConfig, k: int) -> ValidatedConfig:
    """Check that a tournament config is runnable for a group of size ``k``.

    Simulates the size sequence ``n_0 = k``, ``n_{j+1} = (n_j / G) * K_win`` and
    requires every count above the final threshold to be divisible by G. Raises
    :class:`DegenerateError` or :class:`DivisibilityError`; returns the config
    together with the resolved round sizes.
    """
    if k < 2:
        raise DegenerateError(f"group size must be >= 2, got {k}")
    if cfg.final_threshold >= k:
        raise DegenerateError(
            f"final_threshold {cfg.final_threshold} must be < group size {k}"
        )
    sizes = [k]
    n = k
    while n > cfg.final_threshold:
        if n % cfg.group_size != 0:
            raise DivisibilityError(
                f"active count {n} is not divisible by group_size {cfg.group_size} "
                f"(size sequence so far: {sizes})"
            )
        n = (n // cfg.group_size) * cfg.winners_per_group
        sizes.append(n)
    num_rounds = len(sizes) - 1
    if isinstance(cfg.omega, tuple) and len(cfg.omega) < num_rounds:
        raise DegenerateError(
            f"omega schedule has {len(cfg.omega)} entries but the tournament "
            f"runs {num_rounds} rounds for K={k}"
        )
    return ValidatedConfig(config=cfg, k=k, round_sizes=tuple(sizes))


def predicted_judge_calls(validated: ValidatedConfig, k: int | None = None) -> int:
    """Closed-form judge-call count: M times the sum of groups per round.

    Equals ``M * sum_t (n_t / G)`` over executed rounds, which for the uniform
    divisibility case is the geometric series ``M * sum (K/G) (K_win/G)^(t-1)``.
    """
    if k is not None and k != validated.k:
        raise ConfigMismatchError(
            f"config was validated for K={validated.k}, asked about K={k}"
        )
    return validated.config.repeats * validated.calls_per_repeat


@dataclass(frozen=True)
class RewardBreakdown:
    """Per-rollout reward decomposition for one design.

    ``raw_score`` is the design's pre-normalization quantity (accumulated
    tournament points, 0-10 judge score, pairwise win count, or the weighted
    rubric mean for the explicit design). ``quality_reward`` is the design's
    normalized reward; ``advantage`` is filled once the whole group is known.
    """

    raw_score: float
    quality_reward: float
    fmt_reward: float
    final_reward: float
    advantage: float | None = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "raw_score": self.raw_score,
            "quality_reward": self.quality_reward,
            "fmt_reward": self.fmt_reward,
            "final_reward": self.final_reward,
            "advantage": self.advantage,
        }


@dataclass(frozen=True)
class JudgeCallRecord:
    """Full audit of one judge invocation.

    For tournaments, ``repeat``/``round_index`` locate the call in the bracket.
    Pointwise and pairwise designs set ``repeat=0`` and use ``round_index`` as
    the call ordinal. ``verdict`` is the parsed winners (0-based member ids for
    tournaments) or score; ``None`` only when recording a failed call.
    """

    repeat: int
    round_index: int
    members: tuple[int, ...]
    prompt: str
    response: str
    verdict: Any
    retries: int = 0
    fallback_used: bool = False

    def to_dict(self) -> dict[str, Any]:
        verdict: Any = None
        if self.verdict is not None:
            if hasattr(self.verdict, "indices"):
                verdict = {"winners": list(self.verdict.indices)}
            elif hasattr(self.verdict, "value"):
                verdict = {"score": self.verdict.value}
            else:
                verdict = self.verdict
        return {
            "repeat": self.repeat,
            "round_index": self.round_index,
            "members": list(self.members),
            "prompt": self.prompt,
            "response": self.response,
            "verdict": verdict,
            "retries": self.retries,
            "fallback_used": self.fallback_used,
        }


def write_audit_log(records: Iterable[JudgeCallRecord], path: str | Path) -> None:
    """Write audit records as line-delimited JSON."""
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record.to_dict(), ensure_ascii=False) + "\n")


# --- document loading -------------------------------------------------------
#
# The group document is one JSON object per group:
#   {"query": ..., "rubrics": [<rubric item>...], "rollouts": [{"text": ..., "latent_quality"?: ...}]}
# The rubric item schema matches the rubric-generation response, so a generated
# rubric document round-trips into the group format unchanged.

_RUBRIC_KEYS = {"dimension", "title", "description", "importance"}


def rubric_from_dict(item: Any, *, allow_extra_keys: bool = False) -> Rubric:
    """Build a :class:`Rubric` from a parsed JSON item, checking the exact schema."""
    if not isinstance(item, dict):
        raise SchemaError("item-not-object", f"rubric item must be an object, got {type(item).__name__}")
    missing = _RUBRIC_KEYS - item.keys()
    if missing:
        raise SchemaError("missing-key", f"rubric item lacks {sorted(missing)}")
    if not allow_extra_keys:
        extra = item.keys() - _RUBRIC_KEYS
        if extra:
            raise SchemaError("extra-key", f"rubric item has unexpected keys {sorted(extra)}")
    for key in _RUBRIC_KEYS:
        if not isinstance(item[key], str):
            raise SchemaError("type", f"rubric field {key!r} must be a string")
    return Rubric(
        dimension=item["dimension"],
        title=item["title"],
        description=item["description"],
        importance=item["importance"],
    )


def group_from_dict(doc: Any) -> QueryGroup:
    """Build a :class:`QueryGroup` from the group document schema."""
    if not isinstance(doc, dict):
        raise SchemaError("not-object", "group document must be a JSON object")
    for key in ("query", "rubrics", "rollouts"):
        if key not in doc:
            raise SchemaError("missing-key", f"group document lacks {key!r}")
    if not isinstance(doc["query"], str) or not doc["query"].strip():
        raise SchemaError("empty-field", "query must be a non-empty string")
    if not isinstance(doc["rubrics"], list):
        raise SchemaError("type", "rubrics must be a list")
    rubrics = RubricSet(
        query=doc["query"],
        rubrics=tuple(rubric_from_dict(item) for item in doc["rubrics"]),
    )
    if not isinstance(doc["rollouts"], list) or len(doc["rollouts"]) < 2:
        raise SchemaError("count", "rollouts must be a list with at least 2 entries")
    rollouts = []
    for i, entry in enumerate(doc["rollouts"]):
        if not isinstance(entry, dict) or "text" not in entry:
            raise SchemaError("type", f"rollout {i} must be an object with a 'text' field")
        if not isinstance(entry["text"], str):
            raise SchemaError("type", f"rollout {i} text must be a string")
        quality = entry.get("latent_quality")
        if quality is not None and not isinstance(quality, (int, float)):
            raise SchemaError("type", f"rollout {i} latent_quality must be a number")
        rollouts.append(
            Rollout(index=i, text=entry["text"], latent_quality=None if quality is None else float(quality))
        )
    return QueryGroup(query=doc["query"], rubrics=rubrics, rollouts=tuple(rollouts))


def load_query_group(path: str | Path) -> QueryGroup:
    with open(path, "r", encoding="utf-8") as fh:
        return group_from_dict(json.load(fh))


_CONFIG_KEYS = {
    "repeats",
    "group_size",
    "winners_per_group",
    "final_threshold",
    "omega",
    "epsilon",
    "seed",
}


def config_from_dict(doc: Any) -> TournamentConfig:
    """Build a :class:`TournamentConfig` from the flat JSON config document."""
    if not isinstance(doc, dict):
        raise SchemaError("not-object", "config document must be a JSON object")
    extra = doc.keys() - _CONFIG_KEYS
    if extra:
        raise SchemaError("extra-key", f"unknown config keys {sorted(extra)}")
    for key in ("repeats", "group_size", "winners_per_group", "final_threshold"):
        if key not in doc:
            raise SchemaError("missing-key", f"config lacks {key!r}")
        if not isinstance(doc[key], int) or isinstance(doc[key], bool):
            raise SchemaError("type", f"config field {key!r} must be an integer")
    omega = doc.get("omega", 1.0)
    if isinstance(omega, list):
        omega = tuple(float(w) for w in omega)
    elif isinstance(omega, (int, float)) and not isinstance(omega, bool):
        omega = float(omega)
    else:
        raise SchemaError("type", "omega must be a number or a list of numbers")
    return TournamentConfig(
        repeats=doc["repeats"],
        group_size=doc["group_size"],
        winners_per_group=doc["winners_per_group"],
        final_threshold=doc["final_threshold"],
        omega=omega,
        epsilon=float(doc.get("epsilon", DEFAULT_EPSILON)),
        seed=int(doc.get("seed", 0)),
    )


def load_tournament_config(path: str | Path) -> TournamentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return config_from_dict(json.load(fh))
