"""Prompt templates and user-prompt builders.

System prompts are versioned resource files whose first line is a sentinel
recognized by the offline chat stub; user prompts carry the data. The data
line anchors below are shared with the stub parser so the two cannot drift.
"""

from __future__ import annotations

from functools import lru_cache
from importlib import resources

ANSWER_SENTINEL = "[LEXGUIDE-TEMPLATE answer v1]"
FOLLOWUP_SENTINEL = "[LEXGUIDE-TEMPLATE followup v1]"
QUESTION_SENTINEL = "[LEXGUIDE-TEMPLATE question v1]"

CONTEXT_HEADER = "Context passages:"
TOPIC_WORDS_PREFIX = "Topic words:"
HISTORY_HEADER = "Recent turns:"
TITLE_PREFIX = "Title:"
PARAGRAPH_PREFIX = "Paragraph:"


@lru_cache(maxsize=None)
def load_template(name: str) -> str:
    path = resources.files("lexguide").joinpath(f"resources/prompts/{name}.txt")
    return path.read_text(encoding="utf-8").strip()


def build_answer_prompt(context: list[tuple[str, str]], question: str) -> tuple[str, str]:
    """Return (system, user) for an answer request.

    context: ordered (fragment_id, text) pairs; each appears exactly once.
    """
    lines = [CONTEXT_HEADER]
    lines.extend(f"[{fid}] {text}" for fid, text in context)
    lines.append("")
    lines.append(f"Question: {question}")
    return load_template("answer"), "\n".join(lines)


def build_followup_prompt(topic_words: list[str], history: list[tuple[str, str]]) -> tuple[str, str]:
    """Return (system, user) for a follow-up request.

    history: (user utterance, system response) pairs, already windowed;
    the history block is omitted entirely when there are none.
    """
    lines = [f"{TOPIC_WORDS_PREFIX} {', '.join(topic_words)}"]
    if history:
        lines.append("")
        lines.append(HISTORY_HEADER)
        for user, response in history:
            lines.append(f"User: {user}")
            lines.append(f"System: {response}")
    lines.append("")
    lines.append("Write the follow-up question.")
    return load_template("followup"), "\n".join(lines)


def build_question_prompt(title: str, paragraph: str) -> tuple[str, str]:
    """Return (system, user) for a question-standardization request."""
    user = (
        f'{TITLE_PREFIX} "{title}"\n'
        "\n"
        f'{PARAGRAPH_PREFIX} "{paragraph}"\n'
        "\n"
        "What is the citizen's question?"
    )
    return load_template("question"), user
