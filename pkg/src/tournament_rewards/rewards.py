"""Per-group reward computation for every design, with a uniform audit trail.

This is the layer the CLI, the HTTP service, and the simulation harness share:
given a query group, a design name, and a judge, it produces one
:class:`RewardBreakdown` per rollout plus the judge-call audit. All randomness
is derived from the supplied seed, so identical inputs give bit-identical
outputs for the oracle and synthetic judges.
"""

from __future__ import annotations

from dataclasses import dataclass

from .baselines import ImportanceWeights, explicit_reward, implicit_reward, pairwise_rewards
from .core import (
    DEFAULT_EPSILON,
    JudgeCallRecord,
    QueryGroup,
    RewardBreakdown,
    TournamentConfig,
    ValidatedConfig,
    validate_config,
)
from .format import format_reward
from .grpo import combine_rewards, group_advantages
from .judges import (
    ScoringRequest,
    candidate_text,
    explicit_prompt,
    implicit_prompt,
    parse_score_response,
)
from .seeding import derive_rng
from .tournament import run_tournament

DESIGNS = ("tournament", "implicit", "explicit", "pairwise")


@dataclass(frozen=True)
class GroupRewardResult:
    """Everything one reward computation produced for a group."""

    design: str
    breakdowns: tuple[RewardBreakdown, ...]
    judge_calls: int
    audit: tuple[JudgeCallRecord, ...]

    @property
    def final_rewards(self) -> list[float]:
        return [b.final_reward for b in self.breakdowns]

    @property
    def advantages(self) -> list[float]:
        return [b.advantage for b in self.breakdowns]


def _pointwise_score(group, index, judge, prompt, seed, design, call_ordinal):
    rollout = group.rollouts[index]
    reply = judge.score(
        ScoringRequest(prompt=prompt, rollout=rollout, rng=derive_rng(seed, design, call_ordinal))
    )
    score = parse_score_response(reply.text)
    record = JudgeCallRecord(
        repeat=0,
        round_index=call_ordinal,
        members=(index,),
        prompt=prompt,
        response=reply.text,
        verdict=score,
        retries=reply.retries,
        fallback_used=reply.fallback_used,
    )
    return score.value, record


def compute_group_rewards(
    group: QueryGroup,
    design: str,
    judge,
    *,
    tournament_config: TournamentConfig | ValidatedConfig | None = None,
    seed: int | None = None,
    weights: ImportanceWeights | None = None,
    epsilon: float = DEFAULT_EPSILON,
    answer_only: bool = False,
    max_concurrency: int = 1,
) -> GroupRewardResult:
    """Compute per-rollout reward breakdowns for one design.

    The tournament design requires ``tournament_config`` (validated here if
    raw) and uses its epsilon and seed unless overridden. Other designs use
    ``epsilon`` for the advantage denominator and ``seed`` (default 0) for
    judge randomness.
    """
    if design not in DESIGNS:
        raise ValueError(f"unknown design {design!r}; expected one of {DESIGNS}")
    fmt = [float(format_reward(r.text)) for r in group.rollouts]
    k = group.k

    if design == "tournament":
        if tournament_config is None:
            raise ValueError("the tournament design requires a tournament_config")
        if isinstance(tournament_config, ValidatedConfig):
            validated = tournament_config
        else:
            validated = validate_config(tournament_config, k)
        result = run_tournament(
            group,
            validated,
            judge,
            seed=seed,
            answer_only=answer_only,
            max_concurrency=max_concurrency,
        )
        quality = list(result.tour_rewards)
        raw = list(result.raw_scores)
        audit = result.audit
        finals = combine_rewards(quality, fmt)
        adv_epsilon = validated.config.epsilon
    elif design == "pairwise":
        pw = pairwise_rewards(group, judge, seed=seed or 0, answer_only=answer_only)
        quality = list(pw.rewards)
        raw = [float(w) for w in pw.win_counts]
        audit = pw.audit
        finals = combine_rewards(quality, fmt)
        adv_epsilon = epsilon
    elif design == "implicit":
        base = seed or 0
        records = []
        quality, raw = [], []
        for i in range(k):
            prompt = implicit_prompt(
                group.query, group.rubrics, candidate_text(group.rollouts[i], answer_only)
            )
            value, record = _pointwise_score(group, i, judge, prompt, base, "implicit", i)
            raw.append(value)
            quality.append(implicit_reward(value))
            records.append(record)
        audit = tuple(records)
        finals = combine_rewards(quality, fmt)
        adv_epsilon = epsilon
    else:  # explicit
        base = seed or 0
        weights = weights or ImportanceWeights()
        records = []
        quality, raw, finals = [], [], []
        ordinal = 0
        for i in range(k):
            text = candidate_text(group.rollouts[i], answer_only)
            per_rubric = []
            for rubric in group.rubrics:
                prompt = explicit_prompt(group.query, rubric, text)
                value, record = _pointwise_score(
                    group, i, judge, prompt, base, "explicit", ordinal
                )
                per_rubric.append(value / 10.0)
                records.append(record)
                ordinal += 1
            breakdown = explicit_reward(per_rubric, group.rubrics, fmt[i], weights)
            quality.append(breakdown.quality_reward)
            raw.append(breakdown.raw_score)
            finals.append(breakdown.final_reward)
        audit = tuple(records)
        adv_epsilon = epsilon

    advantages = group_advantages(finals, adv_epsilon)
    breakdowns = tuple(
        RewardBreakdown(
            raw_score=raw[i],
            quality_reward=quality[i],
            fmt_reward=fmt[i],
            final_reward=finals[i],
            advantage=advantages[i],
        )
        for i in range(k)
    )
    return GroupRewardResult(
        design=design,
        breakdowns=breakdowns,
        judge_calls=len(audit),
        audit=audit,
    )
