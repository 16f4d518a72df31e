"""Baseline reward designs: implicit pointwise, explicit weighted-rubric, pairwise win rate."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .core import (
    JudgeCallRecord,
    LengthMismatchError,
    QueryGroup,
    RangeError,
    RewardBreakdown,
    RubricSet,
)
from .judges import (
    SelectionRequest,
    Winners,
    candidate_text,
    pairwise_prompt,
    parse_winner_response,
)
from .seeding import derive_rng


@dataclass(frozen=True)
class ImportanceWeights:
    """Per-importance weights for the explicit design (defaults 3 / 2 / 1)."""

    critical: float = 3.0
    important: float = 2.0
    nice_to_have: float = 1.0

    def __post_init__(self) -> None:
        if min(self.critical, self.important, self.nice_to_have) <= 0:
            raise ValueError("importance weights must be > 0")

    def weight_for(self, importance: str) -> float:
        return {
            "critical": self.critical,
            "important": self.important,
            "nice_to_have": self.nice_to_have,
        }[importance]


def implicit_reward(score: float) -> float:
    """Map a 0-10 pointwise judge score to a reward in [0, 1]."""
    value = float(getattr(score, "value", score))
    if not 0.0 <= value <= 10.0:
        raise RangeError(f"score {value} outside [0, 10]")
    return value / 10.0


def explicit_reward(
    per_rubric_scores: Sequence[float],
    rubrics: RubricSet,
    fmt: float,
    weights: ImportanceWeights = ImportanceWeights(),
) -> RewardBreakdown:
    """Importance-weighted mean of normalized per-rubric scores, averaged with the format bit.

    Scores are already normalized to [0, 1]. Unlike the other designs, the
    final reward here is the equal-weight mean of the rubric reward and the
    format reward, so it stays in [0, 1] rather than [0, 2). The advantage slot
    is filled by the group-level pipeline.
    """
    if len(per_rubric_scores) != len(rubrics):
        raise LengthMismatchError(
            f"{len(per_rubric_scores)} scores for {len(rubrics)} rubrics"
        )
    for z in per_rubric_scores:
        if not 0.0 <= float(z) <= 1.0:
            raise RangeError(f"per-rubric score {z} outside [0, 1]")
    if fmt not in (0, 1):
        raise RangeError(f"format reward must be 0 or 1, got {fmt}")
    total_weight = 0.0
    weighted = 0.0
    for z, rubric in zip(per_rubric_scores, rubrics):
        w = weights.weight_for(rubric.importance)
        total_weight += w
        weighted += w * float(z)
    rubric_reward = weighted / total_weight
    return RewardBreakdown(
        raw_score=rubric_reward,
        quality_reward=rubric_reward,
        fmt_reward=float(fmt),
        final_reward=(rubric_reward + float(fmt)) / 2.0,
    )


@dataclass(frozen=True)
class PairwiseResult:
    """Win counts, win-rate rewards, and the per-comparison audit."""

    win_counts: tuple[int, ...]
    rewards: tuple[float, ...]
    audit: tuple[JudgeCallRecord, ...]


def pairwise_rewards(
    group: QueryGroup,
    judge,
    seed: int = 0,
    *,
    answer_only: bool = False,
) -> PairwiseResult:
    """Exhaustive pairwise comparison: reward is wins / (K - 1).

    One judge call per unordered pair, K(K-1)/2 in total, with the pair's
    presentation order randomized per (seed, i, j). The rewards always sum to
    K/2 because every comparison awards exactly one win.
    """
    k = group.k
    texts = [candidate_text(r, answer_only) for r in group.rollouts]
    wins = [0] * k
    audit: list[JudgeCallRecord] = []
    call_ordinal = 0
    for i in range(k):
        for j in range(i + 1, k):
            rng = derive_rng(seed, "pair", i, j)
            pair = [i, j] if rng.random() < 0.5 else [j, i]
            prompt = pairwise_prompt(group.query, group.rubrics, [texts[p] for p in pair])
            request = SelectionRequest(
                prompt=prompt,
                candidates=tuple(group.rollouts[p] for p in pair),
                num_winners=1,
                rng=rng,
            )
            reply = judge.select(request)
            local = parse_winner_response(reply.text, 1, 2)
            winner = pair[local.indices[0]]
            wins[winner] += 1
            audit.append(
                JudgeCallRecord(
                    repeat=0,
                    round_index=call_ordinal,
                    members=tuple(pair),
                    prompt=prompt,
                    response=reply.text,
                    verdict=Winners((winner,)),
                    retries=reply.retries,
                    fallback_used=reply.fallback_used,
                )
            )
            call_ordinal += 1
    rewards = tuple(w / (k - 1) for w in wins)
    return PairwiseResult(win_counts=tuple(wins), rewards=rewards, audit=tuple(audit))
