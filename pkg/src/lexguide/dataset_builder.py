"""Transform single-turn QA documents into multi-turn dialogue records.

A source document with k sections becomes a dialogue of exactly 2k records:
the citizen's question, then for each section a grounded reply carrying an
[ANSWER] summary plus a [FOLLOWUP QUESTION] pointing at the next section,
with a templated citizen acknowledgment in between. The final reply omits
the follow-up marker.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from . import prompts
from .corpus import DocumentRecord, split_sentences
from .errors import EmptyDataset, IOFailure, MalformedInput, NoQuestionInferred
from .providers import ChatRequest

ROLE_CITIZEN = "citizen"
ROLE_EPRS = "eprs"
ANSWER_MARKER = "[ANSWER]"
FOLLOWUP_MARKER = "[FOLLOWUP QUESTION]"
SCHEMA_VERSION = "eudial/1"
SUMMARY_WORD_CAP = 60


@dataclass(frozen=True)
class EUDialTurnRecord:
    role: str
    utterance: str
    section: str | None = None


@dataclass(frozen=True)
class EUDialDialogue:
    id: str
    source_doc_id: str
    turns: tuple[EUDialTurnRecord, ...]


@dataclass(frozen=True)
class DatasetStats:
    n_dialogues: int
    n_turn_pairs: int
    mean_turn_pairs: float
    min_turn_pairs: int
    max_turn_pairs: int
    mean_citizen_words: float
    mean_eprs_words: float
    mean_q_to_a_ratio: float
    mean_fre_per_turn: float
    mean_fre_per_dialogue: float


def normalize_question(chatter, title: str, paragraph: str, temperature: float = 0.3) -> str:
    """Standardize a blog title + intro into one citizen question."""
    if not title or not title.strip():
        raise ValueError("title must be non-empty")
    system, user = prompts.build_question_prompt(title, paragraph)
    completion = chatter.complete(
        ChatRequest(system_prompt=system, user_prompt=user, temperature=temperature)
    ).strip()
    if completion.upper().rstrip(".") == "N/A":
        raise NoQuestionInferred(f"no question inferred for title {title!r}")
    return completion


def _cap_words(text: str, cap: int = SUMMARY_WORD_CAP) -> str:
    """Drop trailing whole sentences until the text fits the word cap."""
    if len(text.split()) <= cap:
        return text
    sentences = split_sentences(text)
    while len(sentences) > 1 and len(" ".join(sentences).split()) > cap:
        sentences.pop()
    return " ".join(sentences)


def build_dialogue(doc: DocumentRecord, chatter, temperature: float = 0.3) -> EUDialDialogue:
    """Expand one document into an alternating citizen/eprs dialogue."""
    if not doc.sections:
        raise ValueError(f"document {doc.id} has no sections")
    turns: list[EUDialTurnRecord] = [
        EUDialTurnRecord(role=ROLE_CITIZEN, utterance=doc.question)
    ]
    history: list[tuple[str, str]] = []
    k = len(doc.sections)
    for j, section in enumerate(doc.sections):
        system, user = prompts.build_answer_prompt(
            [(f"{doc.id}:s{j}", section.content)],
            f"What should citizens know about {section.header}?",
        )
        summary = _cap_words(
            chatter.complete(
                ChatRequest(system_prompt=system, user_prompt=user, temperature=temperature)
            ).strip()
        )
        if j < k - 1:
            next_header = doc.sections[j + 1].header
            fsystem, fuser = prompts.build_followup_prompt([next_header], history[-3:])
            followup = chatter.complete(
                ChatRequest(system_prompt=fsystem, user_prompt=fuser, temperature=temperature)
            ).strip()
            if not followup.endswith("?"):
                followup += "?"
            utterance = f"{ANSWER_MARKER} {summary} {FOLLOWUP_MARKER} {followup}"
        else:
            utterance = f"{ANSWER_MARKER} {summary}"
        turns.append(EUDialTurnRecord(role=ROLE_EPRS, utterance=utterance, section=section.header))
        history.append((turns[-2].utterance, utterance))
        if j < k - 1:
            ack = f"Yes, tell me about {doc.sections[j + 1].header}."
            turns.append(EUDialTurnRecord(role=ROLE_CITIZEN, utterance=ack))
    dialogue = EUDialDialogue(id=f"eud-{doc.id}", source_doc_id=doc.id, turns=tuple(turns))
    validate_dialogue(dialogue)
    return dialogue


def validate_dialogue(dialogue: EUDialDialogue) -> None:
    eprs_turns = [t for t in dialogue.turns if t.role == ROLE_EPRS]
    for i, turn in enumerate(dialogue.turns):
        expected = ROLE_CITIZEN if i % 2 == 0 else ROLE_EPRS
        if turn.role != expected:
            raise MalformedInput(f"{dialogue.id}: roles must alternate starting with citizen")
        if turn.role == ROLE_CITIZEN and turn.section is not None:
            raise MalformedInput(f"{dialogue.id}: citizen turns must not carry a section")
        if turn.role == ROLE_EPRS and not turn.section:
            raise MalformedInput(f"{dialogue.id}: eprs turns must carry a section")
    for i, turn in enumerate(eprs_turns):
        if ANSWER_MARKER not in turn.utterance:
            raise MalformedInput(f"{dialogue.id}: eprs turn missing {ANSWER_MARKER}")
        if i < len(eprs_turns) - 1 and FOLLOWUP_MARKER not in turn.utterance:
            raise MalformedInput(f"{dialogue.id}: non-final eprs turn missing {FOLLOWUP_MARKER}")


def split_eprs_utterance(utterance: str) -> tuple[str, str | None]:
    """Split an eprs utterance into (answer text, follow-up text or None)."""
    body = utterance
    if ANSWER_MARKER in body:
        body = body.split(ANSWER_MARKER, 1)[1]
    if FOLLOWUP_MARKER in body:
        answer, followup = body.split(FOLLOWUP_MARKER, 1)
        return answer.strip(), followup.strip() or None
    return body.strip(), None


def compute_dataset_stats(dialogues: list[EUDialDialogue]) -> DatasetStats:
    """Aggregate turn-pair counts, word counts, q/a ratios, and readability."""
    from .evaluation import flesch_reading_ease

    if not dialogues:
        raise EmptyDataset("no dialogues")
    pair_counts = []
    citizen_words: list[int] = []
    eprs_words: list[int] = []
    ratios: list[float] = []
    turn_fres: list[float] = []
    dialogue_fres: list[float] = []
    for dialogue in dialogues:
        pairs = 0
        local_fres = []
        previous_citizen_len = None
        for turn in dialogue.turns:
            if turn.role == ROLE_CITIZEN:
                n = len(turn.utterance.split())
                citizen_words.append(n)
                previous_citizen_len = n
            else:
                pairs += 1
                answer, _ = split_eprs_utterance(turn.utterance)
                n = len(answer.split())
                eprs_words.append(n)
                if previous_citizen_len and n:
                    ratios.append(previous_citizen_len / n)
                if answer.split():
                    fre = flesch_reading_ease(answer)
                    turn_fres.append(fre)
                    local_fres.append(fre)
        pair_counts.append(pairs)
        if local_fres:
            dialogue_fres.append(sum(local_fres) / len(local_fres))
    return DatasetStats(
        n_dialogues=len(dialogues),
        n_turn_pairs=sum(pair_counts),
        mean_turn_pairs=sum(pair_counts) / len(pair_counts),
        min_turn_pairs=min(pair_counts),
        max_turn_pairs=max(pair_counts),
        mean_citizen_words=_mean(citizen_words),
        mean_eprs_words=_mean(eprs_words),
        mean_q_to_a_ratio=_mean(ratios),
        mean_fre_per_turn=_mean(turn_fres),
        mean_fre_per_dialogue=_mean(dialogue_fres),
    )


def _mean(values) -> float:
    values = list(values)
    return sum(values) / len(values) if values else 0.0


def export_eudial(dialogues: list[EUDialDialogue], path: str | Path) -> None:
    """Write the dialogue file: schema version plus the dialogue array."""
    for dialogue in dialogues:
        validate_dialogue(dialogue)
    payload = {
        "schema": SCHEMA_VERSION,
        "dialogues": [
            {
                "id": d.id,
                "source_doc_id": d.source_doc_id,
                "turns": [
                    {"role": t.role, "utterance": t.utterance, "section": t.section}
                    if t.role == ROLE_EPRS
                    else {"role": t.role, "utterance": t.utterance}
                    for t in d.turns
                ],
            }
            for d in dialogues
        ],
    }
    try:
        Path(path).write_text(
            json.dumps(payload, indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
        )
    except OSError as exc:
        raise IOFailure(f"cannot write {path}: {exc}") from exc


def import_eudial(path: str | Path) -> list[EUDialDialogue]:
    """Read a dialogue file; accepts the wrapped object or a bare array."""
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise IOFailure(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise MalformedInput(f"{path}: not valid JSON ({exc})") from exc
    if isinstance(raw, dict):
        items = raw.get("dialogues")
        if not isinstance(items, list):
            raise MalformedInput(f"{path}: missing 'dialogues' array")
    elif isinstance(raw, list):
        items = raw
    else:
        raise MalformedInput(f"{path}: unsupported top-level JSON value")
    dialogues = []
    for i, item in enumerate(items):
        try:
            turns = tuple(
                EUDialTurnRecord(
                    role=t["role"],
                    utterance=t["utterance"],
                    section=t.get("section") if t["role"] == ROLE_EPRS else None,
                )
                for t in item["turns"]
            )
            dialogues.append(
                EUDialDialogue(
                    id=str(item.get("id", f"dialogue-{i}")),
                    source_doc_id=str(item.get("source_doc_id", "")),
                    turns=turns,
                )
            )
        except (KeyError, TypeError) as exc:
            raise MalformedInput(f"{path}: dialogue {i} malformed ({exc})") from exc
    return dialogues
