"""Acceptance gate: every primary criterion at its stated tolerance.

Each test prints one PASS/FAIL line (run with ``pytest -s`` to see them live)
and enforces its runtime budget. Downstream benchmark scores are out of scope;
acceptance is property- and oracle-based plus the exactly-reproducible
arithmetic of the logged case study.
"""

from __future__ import annotations

import json
import time
from contextlib import contextmanager
from fractions import Fraction

import numpy as np
import pytest
from fastapi.testclient import TestClient

from tournament_rewards import (
    DegenerateError,
    DivisibilityError,
    ImportanceWeights,
    OracleJudge,
    Rubric,
    RubricSet,
    SyntheticJudge,
    TournamentConfig,
    combine_rewards,
    compute_group_rewards,
    explicit_reward,
    format_reward,
    group_advantages,
    group_from_dict,
    implicit_reward,
    normalize_minmax,
    pairwise_rewards,
    parse_trace,
    predicted_judge_calls,
    run_tournament,
    validate_config,
)
from tournament_rewards.core import config_from_dict
from tournament_rewards.format import Answer, GrammarError, Think, ToolCall, ToolOutput
from tournament_rewards.sim import DesignSpec, Scenario, run_scenario
from tournament_rewards.service import create_app

from conftest import PROTOCOL_EXAMPLE, make_group, make_rubrics, minimal_trace
from format_corpus import CASES


@contextmanager
def criterion(name: str, limit_s: float):
    start = time.perf_counter()
    try:
        yield
    except BaseException:
        print(f"ACCEPTANCE {name}: FAIL ({time.perf_counter() - start:.2f}s)")
        raise
    elapsed = time.perf_counter() - start
    assert elapsed < limit_s, f"{name} took {elapsed:.2f}s, budget {limit_s}s"
    print(f"ACCEPTANCE {name}: PASS ({elapsed:.2f}s < {limit_s:.0f}s)")


def _binary(m: int, seed: int = 0) -> TournamentConfig:
    return TournamentConfig(
        repeats=m, group_size=2, winners_per_group=1, final_threshold=1, seed=seed
    )


# --- 1. logged case-study golden test -----------------------------------------


def test_case_study_golden():
    with criterion("case-study-golden", 1.0):
        raw = [3.0, 0.0]
        fmt = [1.0, 1.0]
        tour = normalize_minmax(raw, 1e-8)
        assert abs(tour[0] - 1.0) <= 1e-6
        assert tour[1] == 0.0
        finals = combine_rewards(tour, fmt)
        assert abs(finals[0] - 2.0) <= 1e-6
        assert finals[1] == 1.0


# --- 2. call-count suite --------------------------------------------------------


def _geometric_series_calls(k: int, g: int, k_win: int, k_final: int, m: int) -> int:
    """Exact-rational evaluation of the closed-form geometric series."""
    total = Fraction(0)
    remaining = Fraction(k)
    while remaining > k_final:
        total += remaining / g
        remaining *= Fraction(k_win, g)
    assert total.denominator == 1
    return m * int(total)


def test_call_count_suite():
    with criterion("call-count-suite", 10.0):
        rng = np.random.default_rng(100)
        groups = {k: make_group(list(rng.permutation(k) / k)) for k in (2, 4, 8, 16)}
        named = {}
        checked = 0
        for k in (2, 4, 8, 16):
            for g in (2, 4):
                for k_win in range(1, g):
                    for k_final in (1, 2):
                        for m in (1, 2, 3, 4, 8):
                            try:
                                cfg = TournamentConfig(
                                    repeats=m,
                                    group_size=g,
                                    winners_per_group=k_win,
                                    final_threshold=k_final,
                                )
                                validated = validate_config(cfg, k)
                            except (DivisibilityError, DegenerateError):
                                continue
                            result = run_tournament(groups[k], validated, OracleJudge(), seed=m)
                            predicted = predicted_judge_calls(validated, k)
                            closed_form = _geometric_series_calls(k, g, k_win, k_final, m)
                            assert len(result.audit) == predicted == closed_form
                            named[(k, g, k_win, k_final, m)] = predicted
                            checked += 1
        # The two named structures: 7M and 3M calls at K=8.
        for m in (1, 2, 3, 4, 8):
            assert named[(8, 2, 1, 1, m)] == 7 * m
            assert named[(8, 4, 2, 2, m)] == 3 * m
        assert checked >= 50


# --- 3. oracle dominance ---------------------------------------------------------


def test_oracle_dominance():
    with criterion("oracle-dominance", 30.0):
        rng = np.random.default_rng(7)
        validated = validate_config(_binary(m=3), 8)
        wins = 0
        for trial in range(1000):
            qualities = list(rng.permutation(8) / 8.0 + rng.uniform(0, 1e-6, 8))
            group = make_group(qualities)
            result = run_tournament(group, validated, OracleJudge(), seed=trial)
            best = int(np.argmax(qualities))
            top_reward = result.tour_rewards[best]
            others = [r for i, r in enumerate(result.tour_rewards) if i != best]
            if top_reward == max(result.tour_rewards) and top_reward > max(others):
                wins += 1
        assert wins == 1000


# --- 4. pairwise exactness --------------------------------------------------------


def test_pairwise_exactness():
    with criterion("pairwise-exactness", 10.0):
        rng = np.random.default_rng(9)
        for k in (4, 8):
            for trial in range(30):
                qualities = list(rng.permutation(k) / k)
                group = make_group(qualities)
                result = pairwise_rewards(group, OracleJudge(), seed=trial)
                ranks = np.argsort(np.argsort([-q for q in qualities]))
                for i in range(k):
                    expected = (k - 1 - ranks[i]) / (k - 1)
                    assert result.rewards[i] == pytest.approx(expected, abs=1e-12)
                assert sum(result.rewards) == pytest.approx(k / 2, abs=1e-9)
        # The sum identity holds for noisy judges too.
        for k in (4, 8):
            for beta in (0.0, 0.5, 2.0):
                judge = SyntheticJudge(beta=beta, position_bonus=0.2, length_bonus=0.1)
                for trial in range(10):
                    group = make_group(list(rng.uniform(0, 1, k)))
                    noisy = pairwise_rewards(group, judge, seed=trial)
                    assert sum(noisy.rewards) == pytest.approx(k / 2, abs=1e-9)


# --- 5. tournament fidelity trend ---------------------------------------------------


def test_tournament_fidelity_trend():
    with criterion("fidelity-trend", 300.0):
        scenario = Scenario(k=8, trials=500, seed=20240501, beta=2.0)
        designs = [
            DesignSpec("tournament", tournament=_binary(1), label="binary-m1"),
            DesignSpec("tournament", tournament=_binary(8), label="binary-m8"),
        ]
        metrics = {m.design: m for m in run_scenario(scenario, designs)}
        tau_m1 = np.array(metrics["binary-m1"].per_trial_taus)
        tau_m8 = np.array(metrics["binary-m8"].per_trial_taus)
        assert tau_m8.mean() > tau_m1.mean()
        # Paired bootstrap: the trials share groups, so resample the per-trial
        # differences and demand the 99% one-sided lower bound stay positive.
        diffs = tau_m8 - tau_m1
        rng = np.random.default_rng(0)
        idx = rng.integers(0, len(diffs), size=(10_000, len(diffs)))
        lower = float(np.quantile(diffs[idx].mean(axis=1), 0.01))
        assert lower > 0.0, f"99% lower bound {lower}"


# --- 6. formula suite ----------------------------------------------------------------


def test_formula_suite():
    with criterion("formula-suite", 10.0):
        # Implicit: z / 10.
        assert implicit_reward(7.5) == pytest.approx(0.75, abs=1e-9)
        assert implicit_reward(0.0) == pytest.approx(0.0, abs=1e-9)
        assert implicit_reward(10.0) == pytest.approx(1.0, abs=1e-9)

        # Explicit: importance weights 3/2/1 and the half-half combination.
        def rubric(importance, i=0):
            return Rubric("Coverage / Completeness", f"t{i}", f"d{i}", importance)

        pair = RubricSet("q", (rubric("critical"), rubric("nice_to_have", 1)))
        breakdown = explicit_reward([1.0, 0.0], pair, 0, ImportanceWeights())
        assert breakdown.quality_reward == pytest.approx(3.0 / 4.0, abs=1e-9)
        assert breakdown.final_reward == pytest.approx(0.375, abs=1e-9)
        trio = RubricSet(
            "q", (rubric("critical"), rubric("important", 1), rubric("nice_to_have", 2))
        )
        constant = explicit_reward([0.6, 0.6, 0.6], trio, 1)
        assert constant.quality_reward == pytest.approx(0.6, abs=1e-9)
        assert constant.final_reward == pytest.approx(0.8, abs=1e-9)
        assert explicit_reward([0.0, 0.0, 0.0], trio, 0).final_reward == pytest.approx(0.0, abs=1e-9)

        # Min-max normalization.
        assert normalize_minmax([3.0, 0.0], 1e-8) == pytest.approx(
            [3.0 / (3.0 + 1e-8), 0.0], abs=1e-9
        )
        assert normalize_minmax([5.0, 5.0, 5.0], 1e-8) == [0.0, 0.0, 0.0]
        assert normalize_minmax([0.0, 1.0, 2.0], 1e-8) == pytest.approx(
            [0.0, 1.0 / (2.0 + 1e-8), 2.0 / (2.0 + 1e-8)], abs=1e-9
        )

        # Group-relative advantages.
        assert group_advantages([2.0, 1.0], 1e-8) == pytest.approx(
            [0.5 / (0.5 + 1e-8), -0.5 / (0.5 + 1e-8)], abs=1e-9
        )
        assert group_advantages([4.2, 4.2, 4.2], 1e-8) == [0.0, 0.0, 0.0]
        sigma = float(np.std([0.0, 1.0, 2.0]))
        assert group_advantages([0.0, 1.0, 2.0], 1e-8) == pytest.approx(
            [-1.0 / (sigma + 1e-8), 0.0, 1.0 / (sigma + 1e-8)], abs=1e-9
        )


# --- 7. format grammar -------------------------------------------------------------


def test_format_grammar():
    with criterion("format-grammar", 60.0):
        trace = parse_trace(PROTOCOL_EXAMPLE)
        assert format_reward(PROTOCOL_EXAMPLE) == 1
        assert trace.count(Think) == 3
        assert trace.count(ToolCall) == 2
        assert trace.count(ToolOutput) == 2
        assert trace.count(Answer) == 1

        # Violate-iff-reject over the hand-labeled corpus.
        assert len(CASES) == 50
        for n, (valid, rule, text) in enumerate(CASES):
            try:
                parse_trace(text)
                outcome, got = True, None
            except GrammarError as exc:
                outcome, got = False, exc.rule
            assert outcome == valid, f"corpus case {n}"
            if rule is not None:
                assert got == rule, f"corpus case {n}: {got} != {rule}"
            assert format_reward(text) == (1 if valid else 0)

        # 10k random tag soups must never crash the parser.
        rng = np.random.default_rng(2024)
        fragments = [
            "<think>", "</think>", "<answer>", "</answer>", "<tool_output>", "</tool_output>",
            '<call_tool name="google_search">', '<call_tool name="browse_webpage">',
            '<call_tool name="x">', "</call_tool>", "<think>t</think>", "<answer>a</answer>",
            "plain words ", "\n", "  ", "<snippet>s</snippet>", "<", ">", '"', "https://x.io",
        ]
        alphabet = np.array(list("<>/abctho \n\"=_"))
        for i in range(10_000):
            if i % 2:
                soup = "".join(
                    fragments[j] for j in rng.integers(0, len(fragments), rng.integers(1, 12))
                )
            else:
                soup = "".join(rng.choice(alphabet, rng.integers(0, 60)))
            assert format_reward(soup) in (0, 1)


# --- 8. service/library equivalence ---------------------------------------------------


def test_service_library_equivalence():
    with criterion("service-equivalence", 120.0):
        client = TestClient(create_app())
        rng = np.random.default_rng(55)
        designs = ("tournament", "implicit", "explicit", "pairwise")
        for trial in range(100):
            k = int(rng.choice([2, 4, 8]))
            design = designs[trial % 4]
            seed = int(rng.integers(0, 1 << 31))
            beta = float(rng.uniform(0.5, 4.0))
            rubrics = make_rubrics(count=int(rng.integers(1, 4)))
            rollouts = []
            for i in range(k):
                text = minimal_trace(f"t{trial}-{i}") if rng.random() < 0.8 else f"bare {i}"
                rollouts.append({"text": text, "latent_quality": float(rng.uniform(0, 1))})
            body = {
                "query": rubrics.query,
                "rubrics": rubrics.to_dict()["rubrics"],
                "rollouts": rollouts,
                "design": design,
                "seed": seed,
                "judge": {"kind": "synthetic", "beta": beta},
            }
            config = None
            if design == "tournament":
                body["config"] = {
                    "repeats": int(rng.integers(1, 4)),
                    "group_size": 2,
                    "winners_per_group": 1,
                    "final_threshold": 1,
                }
                config = config_from_dict(body["config"])
            response = client.post("/v1/rewards", json=body)
            assert response.status_code == 200, response.text
            served = response.json()["rewards"]

            group = group_from_dict({key: body[key] for key in ("query", "rubrics", "rollouts")})
            direct = compute_group_rewards(
                group,
                design,
                SyntheticJudge(beta=beta),
                tournament_config=config,
                seed=seed,
            )
            expected = [b.to_dict() for b in direct.breakdowns]
            assert json.dumps(served, sort_keys=True) == json.dumps(expected, sort_keys=True)
