"""Parser for the tagged rollout protocol and the binary format reward.

A conforming rollout is a flat sequence of blocks::

    trace      = think , { cycle } , answer ;
    cycle      = tool_call , tool_output , think ;
    think      = "<think>" , text , "</think>" ;
    tool_call  = '<call_tool name="' , tool_name , '">' , body , "</call_tool>" ;
    tool_name  = "google_search" | "browse_webpage" ;
    tool_output= "<tool_output>" , opaque_text , "</tool_output>" ;
    answer     = "<answer>" , text , "</answer>" ;

with whitespace permitted between blocks and nowhere else. The opening think
must be non-empty, a google_search body must be non-empty, and a
browse_webpage body must be a single non-empty line. Nested protocol tags are
rejected; system-inserted tags inside a tool output (snippet, webpage) are
not protocol tags and pass through as opaque text.

``parse_trace`` raises :class:`GrammarError` with the first violation;
``format_reward`` maps success/failure to 1/0 and never raises.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union

TOOL_NAMES = ("google_search", "browse_webpage")

DEFAULT_MAX_INPUT_BYTES = 256 * 1024


class GrammarError(ValueError):
    """A rollout violates the tag grammar. Carries the rule id and char offset."""

    def __init__(self, rule: str, position: int, message: str):
        super().__init__(f"{rule} at {position}: {message}")
        self.rule = rule
        self.position = position


@dataclass(frozen=True)
class Think:
    text: str


@dataclass(frozen=True)
class ToolCall:
    tool: str
    body: str


@dataclass(frozen=True)
class ToolOutput:
    text: str


@dataclass(frozen=True)
class Answer:
    text: str


Block = Union[Think, ToolCall, ToolOutput, Answer]


@dataclass(frozen=True)
class TagTrace:
    """Parsed block sequence of one rollout."""

    blocks: tuple[Block, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "blocks", tuple(self.blocks))
        answer_positions = [i for i, b in enumerate(self.blocks) if isinstance(b, Answer)]
        if len(answer_positions) > 1:
            raise ValueError("a trace may contain at most one answer block")
        if answer_positions and answer_positions[0] != len(self.blocks) - 1:
            raise ValueError("the answer block must be last")
        for block in self.blocks:
            if isinstance(block, ToolCall) and block.tool not in TOOL_NAMES:
                raise ValueError(f"unknown tool {block.tool!r}")

    @property
    def answer(self) -> str | None:
        if self.blocks and isinstance(self.blocks[-1], Answer):
            return self.blocks[-1].text
        return None

    def count(self, block_type: type) -> int:
        return sum(1 for b in self.blocks if isinstance(b, block_type))


# Tokens are the protocol tags only; anything else (including <snippet> and
# <webpage>) is plain text to the lexer.
_TOKEN_RE = re.compile(
    r"</?think>"
    r"|</?answer>"
    r"|</?tool_output>"
    r"|<call_tool\s+name=\"[^\"\n>]*\"\s*>"
    r"|</call_tool>"
)

_CALL_NAME_RE = re.compile(r'name="([^"\n>]*)"')

# Anything that looks like a tag but is not a protocol token.
_TAGLIKE_RE = re.compile(r"</?[A-Za-z_][^<>]*>?")


def _classify(tag: str) -> tuple[str, str, str | None]:
    """Map a matched tag to (open|close, kind, tool_name)."""
    if tag.startswith("</"):
        return "close", tag[2:-1].strip(), None
    if tag.startswith("<call_tool"):
        name_match = _CALL_NAME_RE.search(tag)
        return "open", "call_tool", name_match.group(1) if name_match else ""
    return "open", tag[1:-1], None


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = [(m.start(), m.end(), *_classify(m.group(0))) for m in _TOKEN_RE.finditer(text)]
        self.i = 0
        self.cursor = 0

    def _fail(self, rule: str, position: int, message: str) -> None:
        raise GrammarError(rule, position, message)

    def _check_gap(self, upto: int) -> None:
        """Text between blocks must be whitespace only."""
        gap = self.text[self.cursor : upto]
        if gap.strip():
            offset = self.cursor + (len(gap) - len(gap.lstrip()))
            if _TAGLIKE_RE.match(gap.lstrip()):
                self._fail("unknown-tag", offset, f"unrecognized tag near {gap.strip()[:40]!r}")
            self._fail("stray-text", offset, f"text outside tags: {gap.strip()[:40]!r}")

    def _peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else None

    def _read_block(self) -> tuple[str, str, str | None, int]:
        """Consume an open token plus its matching close; return (kind, body, tool, open_pos).

        The body may not contain protocol tags: the token after an open must be
        the matching close.
        """
        start, end, role, kind, tool = self.tokens[self.i]
        self.i += 1
        nxt = self._peek()
        if nxt is None:
            self._fail("unclosed-tag", start, f"<{kind}> is never closed")
        n_start, n_end, n_role, n_kind, _ = nxt
        if n_role == "open":
            self._fail("nested-tag", n_start, f"<{n_kind}> nested inside <{kind}>")
        if n_kind != kind:
            self._fail("unclosed-tag", start, f"<{kind}> closed by </{n_kind}>")
        body = self.text[end:n_start]
        self.i += 1
        self.cursor = n_end
        return kind, body, tool, start

    def parse(self) -> TagTrace:
        blocks: list[Block] = []

        first = self._peek()
        if first is None or first[3] != "think" or first[2] != "open":
            # Stray leading text is the more precise report when present.
            position = first[0] if first is not None else len(self.text)
            self._check_gap(position)
            self._fail("missing-think", position, "rollout must begin with a think block")
        self._check_gap(first[0])
        _, body, _, open_pos = self._read_block()
        if not body.strip():
            self._fail("empty-think", open_pos, "the opening think block is empty")
        blocks.append(Think(body.strip()))

        answered = False
        while True:
            token = self._peek()
            if token is None:
                self._check_gap(len(self.text))
                if answered:
                    return TagTrace(tuple(blocks))
                self._fail("missing-answer", len(self.text), "rollout has no answer block")
            t_start, _, role, kind, tool = token
            self._check_gap(t_start)
            if answered:
                if role == "open" and kind == "answer":
                    self._fail("multiple-answers", t_start, "answer may appear only once")
                self._fail("misordered-cycle", t_start, f"content after the answer block: <{kind}>")
            if role == "close":
                self._fail("misordered-cycle", t_start, f"unexpected </{kind}>")
            if kind == "answer":
                _, body, _, _ = self._read_block()
                blocks.append(Answer(body.strip()))
                answered = True
                continue
            if kind == "call_tool":
                if tool not in TOOL_NAMES:
                    self._fail("unknown-tool", t_start, f"unknown tool {tool!r}")
                _, body, _, open_pos = self._read_block()
                body = body.strip()
                if not body:
                    self._fail("empty-tool-body", open_pos, f"{tool} body is empty")
                if tool == "browse_webpage" and "\n" in body:
                    self._fail("multiline-tool-body", open_pos, "browse_webpage body must be a single line")
                blocks.append(ToolCall(tool, body))

                token = self._peek()
                if token is None:
                    self._fail("misordered-cycle", len(self.text), "tool call without tool output")
                self._check_gap(token[0])
                if token[2] != "open" or token[3] != "tool_output":
                    self._fail("misordered-cycle", token[0], "tool call must be followed by a tool output")
                _, body, _, _ = self._read_block()
                blocks.append(ToolOutput(body.strip()))

                token = self._peek()
                if token is None:
                    self._fail("misordered-cycle", len(self.text), "tool output without a follow-up think")
                self._check_gap(token[0])
                if token[2] != "open" or token[3] != "think":
                    self._fail("misordered-cycle", token[0], "tool output must be followed by a think block")
                _, body, _, _ = self._read_block()
                blocks.append(Think(body.strip()))
                continue
            # An open think or tool_output where a cycle or answer should start.
            self._fail("misordered-cycle", t_start, f"unexpected <{kind}> here")


def parse_trace(text: str | bytes, max_bytes: int = DEFAULT_MAX_INPUT_BYTES) -> TagTrace:
    """Parse a raw rollout into its block sequence or raise :class:`GrammarError`."""
    if isinstance(text, bytes):
        if len(text) > max_bytes:
            raise GrammarError("input-too-long", 0, f"input exceeds {max_bytes} bytes")
        text = text.decode("utf-8", errors="replace")
    elif len(text.encode("utf-8", errors="replace")) > max_bytes:
        raise GrammarError("input-too-long", 0, f"input exceeds {max_bytes} bytes")
    return _Parser(text).parse()


def format_reward(text: str | bytes, max_bytes: int = DEFAULT_MAX_INPUT_BYTES) -> int:
    """1 if the rollout conforms to the tag grammar, else 0. Never raises."""
    try:
        parse_trace(text, max_bytes=max_bytes)
    except GrammarError:
        return 0
    return 1


def render_trace(trace: TagTrace) -> str:
    """Serialize a trace back to tagged text; re-parsing yields an equal trace."""
    parts = []
    for block in trace.blocks:
        if isinstance(block, Think):
            parts.append(f"<think>{block.text}</think>")
        elif isinstance(block, ToolCall):
            parts.append(f'<call_tool name="{block.tool}">\n{block.body}\n</call_tool>')
        elif isinstance(block, ToolOutput):
            parts.append(f"<tool_output>\n{block.text}\n</tool_output>")
        else:
            parts.append(f"<answer>{block.text}</answer>")
    return "\n\n".join(parts)
