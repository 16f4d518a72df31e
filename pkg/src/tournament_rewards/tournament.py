"""Repeated multi-round elimination tournaments over a same-query rollout group.

Each repeat starts from all K rollouts. Every round shuffles the active
candidates with a seed derived from (seed, repeat, round), partitions them
sequentially into comparison groups of size G, asks the judge for exactly
K_win winners per group, awards the round's omega points to each winner, and
continues while more than K_final candidates remain. Raw scores accumulate
across repeats in one shared vector and are min-max normalized at the end.

Shuffle and judge randomness are derived per (repeat, round, group), so a run
is bit-identical for a fixed (group, config, judge, seed) regardless of how
judge calls are scheduled.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

from .core import (
    ConfigMismatchError,
    JudgeCallRecord,
    QueryGroup,
    ValidatedConfig,
)
from .judges import (
    SelectionRequest,
    Winners,
    candidate_text,
    parse_winner_response,
    tournament_prompt,
)
from .seeding import derive_rng


@dataclass(frozen=True)
class GroupVerdict:
    """One comparison group's members and its judged winners (global rollout ids)."""

    members: tuple[int, ...]
    winners: tuple[int, ...]


@dataclass(frozen=True)
class RoundRecord:
    round_index: int
    groups: tuple[GroupVerdict, ...]


@dataclass(frozen=True)
class TournamentResult:
    """Raw accumulated scores, their normalized rewards, the audit, and per-repeat brackets."""

    raw_scores: tuple[float, ...]
    tour_rewards: tuple[float, ...]
    audit: tuple[JudgeCallRecord, ...]
    brackets: tuple[tuple[RoundRecord, ...], ...]


def normalize_minmax(scores: Sequence[float], epsilon: float) -> list[float]:
    """Min-max normalize: (s - min) / (max - min + epsilon).

    The minimum maps to exactly 0 and every output lies in [0, 1); an
    all-equal vector maps to all zeros because of the epsilon.
    """
    if not scores:
        raise ValueError("scores must be non-empty")
    if epsilon <= 0:
        raise ValueError("epsilon must be > 0")
    lo = min(scores)
    span = max(scores) - lo + epsilon
    return [(s - lo) / span for s in scores]


def run_tournament(
    group: QueryGroup,
    validated: ValidatedConfig,
    judge,
    seed: int | None = None,
    *,
    answer_only: bool = False,
    max_concurrency: int = 1,
) -> TournamentResult:
    """Run M repeats of the multi-round tournament and normalize the scores.

    ``seed`` overrides the config seed. Judge calls within a round may run
    concurrently (``max_concurrency`` > 1); rounds are strict barriers because
    the next round's candidates depend on every verdict. The audit holds one
    record per judge call, so its length always equals the call predictor.
    """
    cfg = validated.config
    k = group.k
    if validated.k != k:
        raise ConfigMismatchError(
            f"config was validated for K={validated.k} but the group has K={k}"
        )
    base_seed = cfg.seed if seed is None else seed
    texts = [candidate_text(r, answer_only) for r in group.rollouts]

    scores = [0.0] * k
    audit: list[JudgeCallRecord] = []
    brackets: list[tuple[RoundRecord, ...]] = []

    def judge_one(repeat: int, round_index: int, group_index: int, members: list[int]):
        prompt = tournament_prompt(
            group.query,
            group.rubrics,
            [texts[i] for i in members],
            cfg.winners_per_group,
        )
        request = SelectionRequest(
            prompt=prompt,
            candidates=tuple(group.rollouts[i] for i in members),
            num_winners=cfg.winners_per_group,
            rng=derive_rng(base_seed, "judge", repeat, round_index, group_index),
        )
        reply = judge.select(request)
        local = parse_winner_response(reply.text, cfg.winners_per_group, len(members))
        winners = tuple(members[j] for j in local.indices)
        record = JudgeCallRecord(
            repeat=repeat,
            round_index=round_index,
            members=tuple(members),
            prompt=prompt,
            response=reply.text,
            verdict=Winners(winners),
            retries=reply.retries,
            fallback_used=reply.fallback_used,
        )
        return winners, record

    pool = ThreadPoolExecutor(max_workers=max_concurrency) if max_concurrency > 1 else None
    try:
        for repeat in range(cfg.repeats):
            active = list(range(k))
            rounds: list[RoundRecord] = []
            round_index = 0
            while len(active) > cfg.final_threshold:
                rng = derive_rng(base_seed, "shuffle", repeat, round_index)
                shuffled = [active[i] for i in rng.permutation(len(active))]
                comparison_groups = [
                    shuffled[i : i + cfg.group_size]
                    for i in range(0, len(shuffled), cfg.group_size)
                ]
                if pool is not None:
                    outcomes = list(
                        pool.map(
                            lambda args: judge_one(*args),
                            [
                                (repeat, round_index, gi, members)
                                for gi, members in enumerate(comparison_groups)
                            ],
                        )
                    )
                else:
                    outcomes = [
                        judge_one(repeat, round_index, gi, members)
                        for gi, members in enumerate(comparison_groups)
                    ]
                omega = cfg.omega_for_round(round_index)
                next_active: list[int] = []
                verdicts: list[GroupVerdict] = []
                for members, (winners, record) in zip(comparison_groups, outcomes):
                    for i in winners:
                        scores[i] += omega
                    next_active.extend(winners)
                    audit.append(record)
                    verdicts.append(GroupVerdict(tuple(members), winners))
                rounds.append(RoundRecord(round_index, tuple(verdicts)))
                active = next_active
                round_index += 1
            brackets.append(tuple(rounds))
    finally:
        if pool is not None:
            pool.shutdown(wait=True)

    return TournamentResult(
        raw_scores=tuple(scores),
        tour_rewards=tuple(normalize_minmax(scores, cfg.epsilon)),
        audit=tuple(audit),
        brackets=tuple(brackets),
    )
