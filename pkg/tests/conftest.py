from __future__ import annotations

import pytest

from tournament_rewards import QueryGroup, Rubric, RubricSet

PROTOCOL_EXAMPLE = """<think>I should first confirm the capital of France, then gather one well-known museum in that city before answering.</think>

<call_tool name="google_search">
  capital of France famous museum in Paris
  </call_tool>

<tool_output>
  <snippet>
  Title: Paris - Wikipedia
  URL: https://en.wikipedia.org/wiki/Paris
  Search Snippet: Paris is the capital and most populous city of France.
  </snippet>

  <snippet>
  Title: Louvre Museum
  URL: https://www.louvre.fr/en
  Search Snippet: The Louvre is a world-famous museum in Paris, France.
  </snippet>
</tool_output>

<think>The search results identify a strong candidate, and I should browse the museum's official page before answering.</think>

<call_tool name="browse_webpage">
  https://www.louvre.fr/en
  </call_tool>

<tool_output>
  <webpage>
  Title: Louvre Museum
  URL: https://www.louvre.fr/en
  Content: The Louvre is a museum in Paris and is one of the most famous museums in the world.
  </webpage>
</tool_output>

<think>I now have enough information to answer concisely.</think>
<answer>Paris is the capital of France. One famous museum there is the Louvre Museum.</answer>"""


def minimal_trace(answer: str = "fine") -> str:
    return f"<think>plan</think><answer>{answer}</answer>"


def make_rubrics(query: str = "What is the best approach to X?", count: int = 2) -> RubricSet:
    from tournament_rewards import DIMENSIONS, IMPORTANCE_LEVELS

    rubrics = tuple(
        Rubric(
            dimension=DIMENSIONS[i % len(DIMENSIONS)],
            title=f"Criterion {i + 1}",
            description=f"Checks aspect {i + 1} of the response.",
            importance=IMPORTANCE_LEVELS[i % len(IMPORTANCE_LEVELS)],
        )
        for i in range(count)
    )
    return RubricSet(query=query, rubrics=rubrics)


def make_group(
    qualities,
    query: str = "What is the best approach to X?",
    valid_format: bool = True,
    rubric_count: int = 2,
) -> QueryGroup:
    rubrics = make_rubrics(query, rubric_count)
    texts = []
    for i, _ in enumerate(qualities):
        if valid_format:
            texts.append(minimal_trace(f"answer variant {i}"))
        else:
            texts.append(f"unformatted answer {i}")
    return QueryGroup.from_texts(query, rubrics, texts, list(qualities))


@pytest.fixture
def rubrics() -> RubricSet:
    return make_rubrics()


@pytest.fixture
def protocol_example() -> str:
    return PROTOCOL_EXAMPLE
