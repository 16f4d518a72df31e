"""Final reward assembly and group-relative advantage computation."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .core import DEFAULT_EPSILON, LengthMismatchError


def combine_rewards(
    quality_rewards: Sequence[float], fmt_rewards: Sequence[float]
) -> list[float]:
    """Additive combination r_i = quality_i + fmt_i, each in [0, 2)."""
    if len(quality_rewards) != len(fmt_rewards):
        raise LengthMismatchError(
            f"{len(quality_rewards)} quality rewards vs {len(fmt_rewards)} format rewards"
        )
    return [float(q) + float(f) for q, f in zip(quality_rewards, fmt_rewards)]


def group_advantages(rewards: Sequence[float], epsilon: float = DEFAULT_EPSILON) -> list[float]:
    """Group-relative advantages (r - mean) / (std + epsilon).

    Uses the population standard deviation over the fixed group. A
    zero-variance group yields all-zero advantages via the epsilon.
    """
    if len(rewards) < 2:
        raise ValueError("advantages need at least 2 rewards")
    if epsilon <= 0:
        raise ValueError("epsilon must be > 0")
    values = np.asarray(rewards, dtype=float)
    centered = values - values.mean()
    return [float(a) for a in centered / (values.std() + epsilon)]
