"""Group-wise tournament rewards for judge-based RL over same-query rollout groups.

Converts rubric-guided judge decisions into normalized group rewards through
repeated multi-round elimination tournaments, alongside implicit, explicit,
and pairwise baseline designs, a synthetic-judge simulation harness, a CLI,
and an HTTP reward service.
"""

from .baselines import ImportanceWeights, PairwiseResult, explicit_reward, implicit_reward, pairwise_rewards
from .core import (
    DIMENSIONS,
    IMPORTANCE_LEVELS,
    ConfigError,
    ConfigMismatchError,
    DegenerateError,
    DivisibilityError,
    JudgeCallRecord,
    LengthMismatchError,
    QueryGroup,
    RangeError,
    RewardBreakdown,
    Rollout,
    Rubric,
    RubricSet,
    SchemaError,
    TournamentConfig,
    ValidatedConfig,
    group_from_dict,
    load_query_group,
    load_tournament_config,
    predicted_judge_calls,
    validate_config,
    write_audit_log,
)
from .format import (
    Answer,
    GrammarError,
    TagTrace,
    Think,
    ToolCall,
    ToolOutput,
    format_reward,
    parse_trace,
    render_trace,
)
from .grpo import combine_rewards, group_advantages
from .judges import (
    CountError,
    DuplicateError,
    ExhaustedRetriesError,
    JudgeError,
    MissingFieldError,
    MissingLatentError,
    OracleJudge,
    ParseError,
    RemoteJudge,
    RemoteJudgeConfig,
    Score,
    SyntheticJudge,
    TransportError,
    Winners,
    oracle_select,
    parse_rubric_set,
    parse_score_response,
    parse_winner_response,
    render_prompt,
    synthetic_select,
)
from .rewards import DESIGNS, GroupRewardResult, compute_group_rewards
from .sim import DesignMetrics, DesignSpec, Scenario, run_scenario
from .tournament import TournamentResult, normalize_minmax, run_tournament

__version__ = "0.1.0"

__all__ = [
    "DIMENSIONS",
    "DESIGNS",
    "IMPORTANCE_LEVELS",
    "Answer",
    "ConfigError",
    "ConfigMismatchError",
    "CountError",
    "DegenerateError",
    "DesignMetrics",
    "DesignSpec",
    "DivisibilityError",
    "DuplicateError",
    "ExhaustedRetriesError",
    "GrammarError",
    "GroupRewardResult",
    "ImportanceWeights",
    "JudgeCallRecord",
    "JudgeError",
    "LengthMismatchError",
    "MissingFieldError",
    "MissingLatentError",
    "OracleJudge",
    "PairwiseResult",
    "ParseError",
    "QueryGroup",
    "RangeError",
    "RemoteJudge",
    "RemoteJudgeConfig",
    "RewardBreakdown",
    "Rollout",
    "Rubric",
    "RubricSet",
    "Scenario",
    "SchemaError",
    "Score",
    "SyntheticJudge",
    "TagTrace",
    "Think",
    "ToolCall",
    "ToolOutput",
    "TournamentConfig",
    "TournamentResult",
    "TransportError",
    "ValidatedConfig",
    "Winners",
    "combine_rewards",
    "compute_group_rewards",
    "explicit_reward",
    "format_reward",
    "group_advantages",
    "group_from_dict",
    "implicit_reward",
    "load_query_group",
    "load_tournament_config",
    "normalize_minmax",
    "oracle_select",
    "pairwise_rewards",
    "parse_rubric_set",
    "parse_score_response",
    "parse_trace",
    "parse_winner_response",
    "predicted_judge_calls",
    "render_prompt",
    "render_trace",
    "run_scenario",
    "run_tournament",
    "synthetic_select",
    "validate_config",
    "write_audit_log",
]
