"""Synthetic-group simulation comparing reward designs on fidelity vs judge-call cost.

Downstream benchmark quality is not reproducible at desk scale, so the harness
measures the next best thing: how faithfully each design's reward vector ranks
rollouts of known latent quality, against how many judge calls it spends. Each
trial samples a group of latent qualities and synthetic texts, evaluates every
requested design with the same noisy judge, and records Kendall tau, top-1
accuracy, within-group reward variance, and the exact judge-call count.
"""

from __future__ import annotations

import csv
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .baselines import ImportanceWeights, explicit_reward, implicit_reward, pairwise_rewards
from .core import (
    DIMENSIONS,
    IMPORTANCE_LEVELS,
    QueryGroup,
    Rubric,
    RubricSet,
    TournamentConfig,
    predicted_judge_calls,
    validate_config,
)
from .judges import ScoringRequest, SyntheticJudge, explicit_prompt, implicit_prompt, parse_score_response
from .seeding import derive_rng, subseed
from .tournament import run_tournament

QUALITY_DISTRIBUTIONS = ("uniform", "two_cluster", "normal")


@dataclass(frozen=True)
class Scenario:
    """One simulation setting: group shape, quality distribution, judge noise model."""

    k: int = 8
    quality_dist: str = "uniform"
    cluster_gap: float = 0.5
    normal_mu: float = 0.5
    normal_sigma: float = 0.15
    beta: float = 2.0
    position_bias: float = 0.0
    length_bias: float = 0.0
    saturation_clip: int | None = None
    trials: int = 100
    seed: int = 0
    rubric_count: int = 5

    def __post_init__(self) -> None:
        if self.k < 2:
            raise ValueError("k must be >= 2")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.quality_dist not in QUALITY_DISTRIBUTIONS:
            raise ValueError(f"quality_dist must be one of {QUALITY_DISTRIBUTIONS}")
        if self.beta < 0:
            raise ValueError("beta must be >= 0")
        if self.saturation_clip is not None and self.saturation_clip < 1:
            raise ValueError("saturation_clip must be >= 1 bucket")
        if self.rubric_count < 1:
            raise ValueError("rubric_count must be >= 1")

    def to_dict(self) -> dict[str, Any]:
        return {
            "k": self.k,
            "quality_dist": self.quality_dist,
            "cluster_gap": self.cluster_gap,
            "normal_mu": self.normal_mu,
            "normal_sigma": self.normal_sigma,
            "beta": self.beta,
            "position_bias": self.position_bias,
            "length_bias": self.length_bias,
            "saturation_clip": self.saturation_clip,
            "trials": self.trials,
            "seed": self.seed,
            "rubric_count": self.rubric_count,
        }


def scenario_from_dict(doc: dict[str, Any]) -> Scenario:
    known = {f for f in Scenario.__dataclass_fields__}
    extra = doc.keys() - known
    if extra:
        raise ValueError(f"unknown scenario keys {sorted(extra)}")
    return Scenario(**doc)


@dataclass(frozen=True)
class DesignSpec:
    """A design to evaluate; tournament entries carry their config."""

    name: str
    tournament: TournamentConfig | None = None
    label: str = ""

    def __post_init__(self) -> None:
        if self.name not in ("tournament", "implicit", "explicit", "pairwise"):
            raise ValueError(f"unknown design {self.name!r}")
        if self.name == "tournament" and self.tournament is None:
            raise ValueError("tournament design needs a TournamentConfig")
        if not self.label:
            label = self.name
            if self.tournament is not None:
                cfg = self.tournament
                label = (
                    f"tournament(M={cfg.repeats},G={cfg.group_size},"
                    f"Kwin={cfg.winners_per_group},Kfin={cfg.final_threshold})"
                )
            object.__setattr__(self, "label", label)


@dataclass(frozen=True)
class DesignMetrics:
    """Aggregated fidelity and cost metrics for one design under one scenario."""

    design: str
    mean_kendall_tau: float
    tau_ci_low: float
    tau_ci_high: float
    mean_top1_accuracy: float
    mean_reward_variance: float
    judge_calls_per_group: float
    wall_time_s: float
    per_trial_taus: tuple[float, ...] = field(repr=False, default=())

    def to_dict(self, include_timings: bool = False) -> dict[str, Any]:
        doc = {
            "design": self.design,
            "mean_kendall_tau": self.mean_kendall_tau,
            "tau_ci_low": self.tau_ci_low,
            "tau_ci_high": self.tau_ci_high,
            "mean_top1_accuracy": self.mean_top1_accuracy,
            "mean_reward_variance": self.mean_reward_variance,
            "judge_calls_per_group": self.judge_calls_per_group,
        }
        if include_timings:
            doc["wall_time_s"] = self.wall_time_s
        return doc


def _sample_qualities(scenario: Scenario, rng: np.random.Generator) -> np.ndarray:
    if scenario.quality_dist == "uniform":
        return rng.uniform(0.0, 1.0, scenario.k)
    if scenario.quality_dist == "two_cluster":
        half_gap = scenario.cluster_gap / 2.0
        centers = np.where(rng.random(scenario.k) < 0.5, 0.5 - half_gap, 0.5 + half_gap)
        return np.clip(centers + rng.uniform(-0.05, 0.05, scenario.k), 0.0, 1.0)
    return rng.normal(scenario.normal_mu, scenario.normal_sigma, scenario.k)


def _synthetic_rubrics(scenario: Scenario) -> RubricSet:
    rubrics = tuple(
        Rubric(
            dimension=DIMENSIONS[i % len(DIMENSIONS)],
            title=f"Synthetic criterion {i + 1}",
            description=f"Synthetic rubric {i + 1} for simulated judging.",
            importance=IMPORTANCE_LEVELS[i % len(IMPORTANCE_LEVELS)],
        )
        for i in range(scenario.rubric_count)
    )
    return RubricSet(query="Synthetic simulation query.", rubrics=rubrics)


def _sample_group(scenario: Scenario, rubrics: RubricSet, trial: int) -> QueryGroup:
    rng = derive_rng(scenario.seed, "trial", trial)
    qualities = _sample_qualities(scenario, rng)
    lengths = rng.integers(200, 1200, scenario.k)
    texts = [f"synthetic rollout {i} " + "x" * int(lengths[i]) for i in range(scenario.k)]
    return QueryGroup.from_texts(rubrics.query, rubrics, texts, qualities)


def kendall_tau(rewards: Sequence[float], qualities: Sequence[float]) -> float:
    """Kendall tau-b between rewards and latent quality; 0 when either side is constant.

    Counted over explicit pairs with integer arithmetic so that a perfectly
    concordant ranking scores exactly 1.0. Groups are small, so the O(K^2)
    enumeration is cheap.
    """
    x = [float(v) for v in rewards]
    y = [float(v) for v in qualities]
    n = len(x)
    concordant = discordant = tied_x = tied_y = 0
    for i in range(n):
        for j in range(i + 1, n):
            dx = (x[i] > x[j]) - (x[i] < x[j])
            dy = (y[i] > y[j]) - (y[i] < y[j])
            if dx == 0 and dy == 0:
                tied_x += 1
                tied_y += 1
            elif dx == 0:
                tied_x += 1
            elif dy == 0:
                tied_y += 1
            elif dx == dy:
                concordant += 1
            else:
                discordant += 1
    total = n * (n - 1) // 2
    denom_x = total - tied_x
    denom_y = total - tied_y
    if denom_x == 0 or denom_y == 0:
        return 0.0
    if denom_x == denom_y:
        # No sqrt needed when the tie corrections agree; the ratio is exact
        # for fully concordant or discordant rankings.
        return (concordant - discordant) / denom_x
    return (concordant - discordant) / math.sqrt(denom_x * denom_y)


def top1_accuracy(rewards: Sequence[float], qualities: Sequence[float]) -> float:
    """1 if the best-quality rollout attains the maximum reward (ties allowed)."""
    best = int(np.argmax(qualities))
    return 1.0 if rewards[best] == max(rewards) else 0.0


def _score_pointwise(group, judge, scenario, trial, design, rubric=None):
    scores = []
    for i, rollout in enumerate(group.rollouts):
        if rubric is None:
            prompt = implicit_prompt(group.query, group.rubrics, rollout.text)
            path = (scenario.seed, "trial", trial, design, i)
        else:
            prompt = explicit_prompt(group.query, rubric[1], rollout.text)
            path = (scenario.seed, "trial", trial, design, i, rubric[0])
        reply = judge.score(ScoringRequest(prompt=prompt, rollout=rollout, rng=derive_rng(*path)))
        scores.append(parse_score_response(reply.text).value)
    return scores


def _evaluate_design(
    spec: DesignSpec,
    scenario: Scenario,
    group: QueryGroup,
    judge: SyntheticJudge,
    trial: int,
    weights: ImportanceWeights,
) -> tuple[list[float], int]:
    """Return (quality rewards, judge calls) for one design on one sampled group."""
    k = scenario.k
    if spec.name == "implicit":
        scores = _score_pointwise(group, judge, scenario, trial, "implicit")
        return [implicit_reward(z) for z in scores], k
    if spec.name == "explicit":
        per_rollout = [[] for _ in range(k)]
        calls = 0
        for ri, rubric in enumerate(group.rubrics):
            scores = _score_pointwise(group, judge, scenario, trial, "explicit", rubric=(ri, rubric))
            calls += k
            for i, z in enumerate(scores):
                per_rollout[i].append(z / 10.0)
        rewards = [
            explicit_reward(per_rollout[i], group.rubrics, 0, weights).quality_reward
            for i in range(k)
        ]
        return rewards, calls
    if spec.name == "pairwise":
        result = pairwise_rewards(group, judge, seed=subseed(scenario.seed, "trial", trial, "pairwise"))
        return list(result.rewards), len(result.audit)
    validated = validate_config(spec.tournament, k)
    result = run_tournament(
        group, validated, judge, seed=subseed(scenario.seed, "trial", trial, spec.label)
    )
    expected = predicted_judge_calls(validated)
    if len(result.audit) != expected:
        raise RuntimeError(
            f"judge-call accounting broke: audit={len(result.audit)} expected={expected}"
        )
    return list(result.tour_rewards), len(result.audit)


def _bootstrap_ci(
    values: np.ndarray, rng: np.random.Generator, n_boot: int = 2000, alpha: float = 0.05
) -> tuple[float, float]:
    if len(values) == 1:
        return float(values[0]), float(values[0])
    idx = rng.integers(0, len(values), size=(n_boot, len(values)))
    means = values[idx].mean(axis=1)
    return float(np.quantile(means, alpha / 2)), float(np.quantile(means, 1 - alpha / 2))


def run_scenario(
    scenario: Scenario,
    designs: Sequence[DesignSpec],
    *,
    workers: int = 1,
) -> list[DesignMetrics]:
    """Evaluate every design over the scenario's trials; deterministic given the seed.

    Per-trial randomness is derived from (seed, trial index), so results do not
    depend on scheduling order when ``workers`` > 1. Tournament configs are
    validated against the scenario's K up front.
    """
    for spec in designs:
        if spec.tournament is not None:
            validate_config(spec.tournament, scenario.k)
    rubrics = _synthetic_rubrics(scenario)
    judge = SyntheticJudge(
        beta=scenario.beta,
        position_bonus=scenario.position_bias,
        length_bonus=scenario.length_bias,
        score_buckets=scenario.saturation_clip,
    )
    weights = ImportanceWeights()

    taus = {spec.label: np.zeros(scenario.trials) for spec in designs}
    top1 = {spec.label: np.zeros(scenario.trials) for spec in designs}
    variances = {spec.label: np.zeros(scenario.trials) for spec in designs}
    calls = {spec.label: np.zeros(scenario.trials) for spec in designs}
    elapsed = {spec.label: 0.0 for spec in designs}

    def run_trial(trial: int) -> dict[str, tuple[float, float, float, float, float]]:
        group = _sample_group(scenario, rubrics, trial)
        qualities = [r.latent_quality for r in group.rollouts]
        out = {}
        for spec in designs:
            start = time.perf_counter()
            rewards, ncalls = _evaluate_design(spec, scenario, group, judge, trial, weights)
            wall = time.perf_counter() - start
            out[spec.label] = (
                kendall_tau(rewards, qualities),
                top1_accuracy(rewards, qualities),
                float(np.var(rewards)),
                float(ncalls),
                wall,
            )
        return out

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run_trial, range(scenario.trials)))
    else:
        results = [run_trial(t) for t in range(scenario.trials)]

    for trial, out in enumerate(results):
        for label, (tau, acc, var, ncalls, wall) in out.items():
            taus[label][trial] = tau
            top1[label][trial] = acc
            variances[label][trial] = var
            calls[label][trial] = ncalls
            elapsed[label] += wall

    metrics = []
    for di, spec in enumerate(designs):
        ci_rng = derive_rng(scenario.seed, "bootstrap", di)
        lo, hi = _bootstrap_ci(taus[spec.label], ci_rng)
        metrics.append(
            DesignMetrics(
                design=spec.label,
                mean_kendall_tau=float(taus[spec.label].mean()),
                tau_ci_low=lo,
                tau_ci_high=hi,
                mean_top1_accuracy=float(top1[spec.label].mean()),
                mean_reward_variance=float(variances[spec.label].mean()),
                judge_calls_per_group=float(calls[spec.label].mean()),
                wall_time_s=elapsed[spec.label],
                per_trial_taus=tuple(taus[spec.label]),
            )
        )
    return metrics


_CSV_SCENARIO_COLUMNS = (
    "k",
    "quality_dist",
    "beta",
    "position_bias",
    "length_bias",
    "saturation_clip",
    "trials",
    "seed",
)


def write_metrics_csv(
    metrics: Sequence[DesignMetrics],
    scenario: Scenario,
    path: str | Path,
    *,
    include_timings: bool = False,
) -> None:
    """One CSV row per (design, scenario). Timings are opt-in to keep output byte-stable."""
    scenario_doc = scenario.to_dict()
    with open(path, "w", encoding="utf-8", newline="") as fh:
        first = metrics[0].to_dict(include_timings)
        writer = csv.writer(fh)
        writer.writerow(list(_CSV_SCENARIO_COLUMNS) + list(first.keys()))
        for m in metrics:
            doc = m.to_dict(include_timings)
            writer.writerow([scenario_doc[c] for c in _CSV_SCENARIO_COLUMNS] + list(doc.values()))


def write_metrics_json(
    metrics: Sequence[DesignMetrics],
    scenario: Scenario,
    path: str | Path,
    *,
    include_timings: bool = False,
) -> None:
    doc = {
        "scenario": scenario.to_dict(),
        "designs": [m.to_dict(include_timings) for m in metrics],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
