"""Hand-labeled corpus for the trace grammar: exactly 50 cases, valid and invalid.

Each entry is (valid, expected_rule_or_None, text). For invalid cases the rule
is the grammar rule the parser must report.
"""

from __future__ import annotations

GOOGLE_CYCLE = (
    '<call_tool name="google_search">quantum computing basics</call_tool>'
    "<tool_output>result text</tool_output><think>digest</think>"
)

BROWSE_CYCLE = (
    '<call_tool name="browse_webpage">https://example.com/page</call_tool>'
    "<tool_output>page text</tool_output><think>digest</think>"
)

CASES: list[tuple[bool, str | None, str]] = [
    # --- valid -----------------------------------------------------------
    (True, None, "<think>plan</think><answer>done</answer>"),
    (True, None, "\n  <think>plan</think>\n\n  <answer>done</answer>\n  "),
    (True, None, f"<think>plan</think>{GOOGLE_CYCLE}<answer>done</answer>"),
    (True, None, f"<think>plan</think>{BROWSE_CYCLE}<answer>done</answer>"),
    (True, None, f"<think>plan</think>{GOOGLE_CYCLE}{BROWSE_CYCLE}<answer>done</answer>"),
    (True, None, f"<think>plan</think>{GOOGLE_CYCLE}{GOOGLE_CYCLE}<answer>done</answer>"),
    (True, None, f"<think>plan</think>{BROWSE_CYCLE}{GOOGLE_CYCLE}{BROWSE_CYCLE}<answer>done</answer>"),
    (True, None, "<think>plan</think><answer></answer>"),
    # Only the opening think must be non-empty.
    (
        True,
        None,
        '<think>plan</think><call_tool name="google_search">q</call_tool>'
        "<tool_output>r</tool_output><think></think><answer>done</answer>",
    ),
    (
        True,
        None,
        '<think>plan</think><call_tool name="google_search">q</call_tool>'
        "<tool_output><snippet>Title: A</snippet><snippet>Title: B</snippet></tool_output>"
        "<think>ok</think><answer>done</answer>",
    ),
    (
        True,
        None,
        '<think>plan</think><call_tool name="browse_webpage">https://a.io</call_tool>'
        "<tool_output><webpage>Content: words</webpage></tool_output>"
        "<think>ok</think><answer>done</answer>",
    ),
    (
        True,
        None,
        '<think>plan</think><call_tool name="google_search">q</call_tool>'
        "<tool_output></tool_output><think>empty result</think><answer>done</answer>",
    ),
    # A google_search body may span lines; only non-emptiness is required.
    (
        True,
        None,
        '<think>plan</think><call_tool name="google_search">\nline one\nline two\n</call_tool>'
        "<tool_output>r</tool_output><think>ok</think><answer>done</answer>",
    ),
    # A browse_webpage body may carry surrounding whitespace, one line after trimming.
    (
        True,
        None,
        '<think>plan</think><call_tool name="browse_webpage">\n   https://example.com \n</call_tool>'
        "<tool_output>r</tool_output><think>ok</think><answer>done</answer>",
    ),
    (True, None, "<think>multi\nline\nthought</think><answer>done</answer>"),
    # Unrecognized tag-like text inside a block body is plain text.
    (True, None, "<think>plan</think><answer>use <b>bold</b> markup</answer>"),
    (True, None, "<think>check a < b and c > d</think><answer>a < b</answer>"),
    (
        True,
        None,
        "<think>plan</think>\n\n"
        '<call_tool name="google_search">\n  spaced query\n  </call_tool>\n\n'
        "<tool_output>\n  indented result\n</tool_output>\n\n"
        "<think>ok</think>\n<answer>done</answer>",
    ),
    # --- invalid ----------------------------------------------------------
    (False, "missing-think", ""),
    (False, "missing-think", "   \n\t  "),
    (False, "stray-text", "Sure, here is my answer: <think>plan</think><answer>done</answer>"),
    (False, "missing-think", "<answer>done</answer>"),
    (
        False,
        "missing-think",
        '<call_tool name="google_search">q</call_tool><tool_output>r</tool_output>'
        "<think>ok</think><answer>done</answer>",
    ),
    (False, "empty-think", "<think></think><answer>done</answer>"),
    (False, "empty-think", "<think>   \n </think><answer>done</answer>"),
    (False, "missing-answer", "<think>plan</think>"),
    (False, "missing-answer", f"<think>plan</think>{GOOGLE_CYCLE}"),
    (False, "multiple-answers", "<think>plan</think><answer>one</answer><answer>two</answer>"),
    (False, "misordered-cycle", f"<think>plan</think><answer>early</answer>{GOOGLE_CYCLE}"),
    (
        False,
        "misordered-cycle",
        '<think>plan</think><call_tool name="google_search">q</call_tool><answer>done</answer>',
    ),
    (
        False,
        "misordered-cycle",
        '<think>plan</think><call_tool name="google_search">q</call_tool>'
        "<tool_output>r</tool_output><answer>done</answer>",
    ),
    (False, "misordered-cycle", "<think>plan</think><tool_output>r</tool_output><answer>done</answer>"),
    (False, "misordered-cycle", "<think>plan</think><think>again</think><answer>done</answer>"),
    (False, "stray-text", "<think>plan</think>loose words<answer>done</answer>"),
    (False, "stray-text", "<think>plan</think><answer>done</answer>trailing words"),
    (False, "unknown-tag", "<plan>outline</plan><think>plan</think><answer>done</answer>"),
    (False, "unknown-tag", "<think>plan</think><scratchpad>notes</scratchpad><answer>done</answer>"),
    (
        False,
        "unknown-tag",
        "<think>plan</think><call_tool>q</call_tool><answer>done</answer>",
    ),
    (
        False,
        "unknown-tool",
        '<think>plan</think><call_tool name="wiki_search">q</call_tool>'
        "<tool_output>r</tool_output><think>ok</think><answer>done</answer>",
    ),
    (False, "unclosed-tag", "<think>plan"),
    (False, "unclosed-tag", "<think>plan</think><answer>done"),
    (
        False,
        "unclosed-tag",
        '<think>plan</think><call_tool name="google_search">q</call_tool><tool_output>r',
    ),
    (False, "unclosed-tag", "<think>plan</answer><answer>done</answer>"),
    (False, "nested-tag", "<think>plan</think><answer>outer <think>inner</think></answer>"),
    (False, "nested-tag", "<think>outer <answer>inner</answer></think><answer>done</answer>"),
    (
        False,
        "nested-tag",
        '<think>plan</think><call_tool name="google_search">q</call_tool>'
        "<tool_output>before <answer>inside</answer> after</tool_output>"
        "<think>ok</think><answer>done</answer>",
    ),
    (False, "misordered-cycle", "<think>plan</think></think><answer>done</answer>"),
    (
        False,
        "empty-tool-body",
        '<think>plan</think><call_tool name="google_search"></call_tool>'
        "<tool_output>r</tool_output><think>ok</think><answer>done</answer>",
    ),
    (
        False,
        "empty-tool-body",
        '<think>plan</think><call_tool name="browse_webpage">   \n</call_tool>'
        "<tool_output>r</tool_output><think>ok</think><answer>done</answer>",
    ),
    (
        False,
        "multiline-tool-body",
        '<think>plan</think><call_tool name="browse_webpage">https://a.io\nhttps://b.io</call_tool>'
        "<tool_output>r</tool_output><think>ok</think><answer>done</answer>",
    ),
]

assert len(CASES) == 50, f"corpus must hold exactly 50 cases, found {len(CASES)}"
