from __future__ import annotations

import json
from fractions import Fraction

import pytest

from tournament_rewards import (
    ConfigMismatchError,
    DegenerateError,
    DivisibilityError,
    QueryGroup,
    Rollout,
    Rubric,
    RubricSet,
    SchemaError,
    TournamentConfig,
    group_from_dict,
    load_tournament_config,
    predicted_judge_calls,
    validate_config,
)
from tournament_rewards.core import config_from_dict


def _cfg(g: int, k_win: int, k_final: int, m: int = 1, **kwargs) -> TournamentConfig:
    return TournamentConfig(
        repeats=m,
        group_size=g,
        winners_per_group=k_win,
        final_threshold=k_final,
        **kwargs,
    )


def geometric_series_calls(k: int, g: int, k_win: int, k_final: int, m: int) -> int:
    """Independent oracle: exact-rational geometric series for judge calls.

    Runs the closed form M * sum_t (K/G) (K_win/G)^(t-1) with Fractions, with
    the round count from the stopping rule, so no integer recurrence is shared
    with the implementation under test.
    """
    total = Fraction(0)
    remaining = Fraction(k)
    while remaining > k_final:
        total += remaining / g
        remaining = remaining * Fraction(k_win, g)
    assert total.denominator == 1
    return m * int(total)


# --- validate_config ---------------------------------------------------------


def test_binary_tournament_config_is_valid_with_three_rounds():
    validated = validate_config(_cfg(2, 1, 1), 8)
    assert validated.num_rounds == 3
    assert validated.round_sizes == (8, 4, 2, 1)


def test_group_of_four_config_is_valid_with_two_rounds():
    validated = validate_config(_cfg(4, 2, 2), 8)
    assert validated.num_rounds == 2
    assert validated.round_sizes == (8, 4, 2)


def test_indivisible_group_size_is_rejected():
    with pytest.raises(DivisibilityError):
        validate_config(_cfg(3, 1, 1), 8)


def test_divisibility_checked_at_every_round():
    # 16 -> 4 -> 1 works for K_win=1, but K_win=2 strands 2 candidates above K_final=1.
    validate_config(_cfg(4, 1, 1), 16)
    with pytest.raises(DivisibilityError):
        validate_config(_cfg(4, 2, 1), 16)


def test_final_threshold_must_be_below_group_size():
    with pytest.raises(DegenerateError):
        validate_config(_cfg(2, 1, 2), 2)


def test_degenerate_shapes_rejected_at_construction():
    with pytest.raises(DegenerateError):
        _cfg(1, 1, 1)
    with pytest.raises(DegenerateError):
        _cfg(2, 2, 1)
    with pytest.raises(DegenerateError):
        _cfg(2, 0, 1)
    with pytest.raises(DegenerateError):
        _cfg(2, 1, 0)
    with pytest.raises(DegenerateError):
        _cfg(2, 1, 1, epsilon=0.0)


def test_omega_schedule_must_cover_every_round():
    validate_config(_cfg(2, 1, 1, omega=(1.0, 2.0, 3.0)), 8)
    with pytest.raises(DegenerateError):
        validate_config(_cfg(2, 1, 1, omega=(1.0, 2.0)), 8)
    with pytest.raises(DegenerateError):
        _cfg(2, 1, 1, omega=(1.0, -2.0))


def test_validation_rejects_exactly_the_bad_size_sequences():
    # Exhaustive over small shapes: accepted iff the simulated sequence never
    # hits an indivisible count above the threshold.
    for k in (2, 4, 8, 16):
        for g in range(2, k + 1):
            for k_win in range(1, g):
                for k_final in range(1, k):
                    ok, n = True, k
                    while n > k_final:
                        if n % g != 0:
                            ok = False
                            break
                        n = (n // g) * k_win
                    try:
                        validate_config(_cfg(g, k_win, k_final), k)
                        accepted = True
                    except DivisibilityError:
                        accepted = False
                    assert accepted == ok, (k, g, k_win, k_final)


# --- predicted_judge_calls ---------------------------------------------------


def test_predicted_calls_binary_tournament():
    validated = validate_config(_cfg(2, 1, 1, m=1), 8)
    assert predicted_judge_calls(validated, 8) == 7


def test_predicted_calls_group_of_four_with_repeats():
    validated = validate_config(_cfg(4, 2, 2, m=8), 8)
    assert predicted_judge_calls(validated, 8) == 24


def test_predicted_calls_zero_repeats():
    validated = validate_config(_cfg(2, 1, 1, m=0), 8)
    assert predicted_judge_calls(validated) == 0


def test_predicted_calls_linear_in_repeats():
    for k in (2, 4, 8, 16):
        for g in (2, 4):
            for k_win in range(1, g):
                for k_final in (1, 2):
                    try:
                        base = predicted_judge_calls(validate_config(_cfg(g, k_win, k_final, m=1), k))
                    except (DivisibilityError, DegenerateError):
                        continue
                    for m in range(2, 17):
                        validated = validate_config(_cfg(g, k_win, k_final, m=m), k)
                        assert predicted_judge_calls(validated) == m * base


def test_predicted_calls_match_geometric_series_oracle():
    for k in (2, 4, 8, 16):
        for g in (2, 4, 8):
            for k_win in range(1, g):
                for k_final in (1, 2, 4):
                    for m in (1, 3, 8):
                        try:
                            validated = validate_config(_cfg(g, k_win, k_final, m=m), k)
                        except (DivisibilityError, DegenerateError):
                            continue
                        assert predicted_judge_calls(validated) == geometric_series_calls(
                            k, g, k_win, k_final, m
                        )


def test_predicted_calls_rejects_mismatched_group_size():
    validated = validate_config(_cfg(2, 1, 1), 8)
    with pytest.raises(ConfigMismatchError):
        predicted_judge_calls(validated, 4)


# --- domain types ------------------------------------------------------------


def test_rubric_enums_are_closed():
    with pytest.raises(SchemaError):
        Rubric("Coverage", "t", "d", "critical")
    with pytest.raises(SchemaError):
        Rubric("Coverage / Completeness", "t", "d", "high")
    with pytest.raises(SchemaError):
        Rubric("Coverage / Completeness", "", "d", "critical")


def test_group_requires_ordered_unique_indices(rubrics):
    with pytest.raises(ValueError):
        QueryGroup(
            query="q",
            rubrics=rubrics,
            rollouts=(Rollout(0, "a"), Rollout(0, "b")),
        )
    with pytest.raises(ValueError):
        QueryGroup(query="q", rubrics=rubrics, rollouts=(Rollout(0, "a"),))


def test_group_document_round_trips(rubrics):
    doc = {
        "query": rubrics.query,
        "rubrics": rubrics.to_dict()["rubrics"],
        "rollouts": [{"text": "a", "latent_quality": 0.5}, {"text": "b"}],
    }
    group = group_from_dict(doc)
    assert group.k == 2
    assert group.rollouts[0].latent_quality == 0.5
    assert group.rollouts[1].latent_quality is None
    assert group.rubrics.to_dict()["rubrics"] == doc["rubrics"]


def test_group_document_names_offending_field(rubrics):
    doc = {
        "query": rubrics.query,
        "rubrics": [{"dimension": "Coverage / Completeness", "title": "t", "description": "d"}],
        "rollouts": [{"text": "a"}, {"text": "b"}],
    }
    with pytest.raises(SchemaError) as excinfo:
        group_from_dict(doc)
    assert excinfo.value.rule == "missing-key"


# --- config documents --------------------------------------------------------


def test_config_file_round_trip(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(
        json.dumps(
            {
                "repeats": 3,
                "group_size": 4,
                "winners_per_group": 2,
                "final_threshold": 2,
                "omega": [1.0, 2.0],
                "epsilon": 1e-8,
                "seed": 99,
            }
        ),
        encoding="utf-8",
    )
    cfg = load_tournament_config(path)
    assert cfg.repeats == 3
    assert cfg.omega == (1.0, 2.0)
    assert cfg.omega_for_round(1) == 2.0
    assert cfg.seed == 99


def test_config_document_rejects_unknown_keys():
    with pytest.raises(SchemaError):
        config_from_dict(
            {
                "repeats": 1,
                "group_size": 2,
                "winners_per_group": 1,
                "final_threshold": 1,
                "rounds": 3,
            }
        )
