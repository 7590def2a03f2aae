"""Metric suite over generated transcripts vs gold dialogues.

Eight metrics per dialogue: groundedness, completeness (ROUGE-L recall),
relevance (embedding cosine), readability (Flesch Reading Ease), follow-up
diversity, temporal consistency, and word- and content-based topic
coverage. Aggregates are arithmetic means of per-dialogue values.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .corpus import Fragment, split_sentences, tokenize
from .dataset_builder import EUDialDialogue, ROLE_EPRS, split_eprs_utterance
from .errors import EmptyGold, EmptyText, NoTree
from .retrieval import cosine_similarity
from .topics import TopicTree, topic_word_list

DEFAULT_THETA = 0.5
DEFAULT_TAU_COV = 0.5

# Where this suite substitutes a practical stand-in for a named metric, the
# report says so explicitly.
DEVIATIONS = [
    "semantic_relevance approximates token-level matching score with whole-text embedding cosine",
    "temporal_consistency is consecutive follow-up vs next-turn embedding similarity",
]

_VOWEL_GROUPS = re.compile(r"[aeiouy]+")


@dataclass(frozen=True)
class MetricsReport:
    groundedness: float
    completeness_rougeL: float
    relevance: float
    readability_fre: float
    followup_diversity: float
    temporal_consistency: float
    topic_coverage_word: float | None
    topic_coverage_content: float
    per_dialogue: list = field(default_factory=list)


@dataclass
class SessionView:
    """The slice of a finished run that coverage evaluation needs."""

    mode: str
    responses: list[str]
    followups: list[str]
    tree: TopicTree | None = None
    visited: list[str] = field(default_factory=list)


def syllable_count(word: str) -> int:
    """Vowel-group heuristic: drop a silent trailing 'e', minimum 1 per word."""
    word = re.sub(r"[^a-z]", "", word.lower())
    if not word:
        return 1
    if word.endswith("e"):
        word = word[:-1]
    return max(1, len(_VOWEL_GROUPS.findall(word)))


def flesch_reading_ease(text: str) -> float:
    """206.835 - 1.015 * (words/sentences) - 84.6 * (syllables/words)."""
    words = text.split()
    if not words:
        raise EmptyText("readability needs at least one word")
    sentences = split_sentences(text) or [text]
    syllables = sum(syllable_count(w) for w in words)
    return 206.835 - 1.015 * (len(words) / len(sentences)) - 84.6 * (syllables / len(words))


def rouge_l_recall(generated: str, gold: str) -> float:
    """LCS(tokens(generated), tokens(gold)) / |tokens(gold)|."""
    gold_tokens = tokenize(gold)
    if not gold_tokens:
        raise EmptyGold("gold text has no tokens")
    generated_tokens = tokenize(generated)
    if not generated_tokens:
        return 0.0
    vocab: dict[str, int] = {}
    for token in gold_tokens + generated_tokens:
        vocab.setdefault(token, len(vocab))
    a = [vocab[t] for t in generated_tokens]
    b = [vocab[t] for t in gold_tokens]
    return _kernels.lcs_length(a, b) / len(gold_tokens)


def groundedness(response: str, fragments: list[Fragment], theta: float = DEFAULT_THETA) -> float:
    """Fraction of response sentences with token overlap >= theta to some fragment."""
    if not 0.0 < theta <= 1.0:
        raise ValueError("theta must be in (0, 1]")
    sentences = [s for s in split_sentences(response) if tokenize(s)]
    if not sentences:
        return 1.0
    if not fragments:
        return 0.0
    fragment_tokens = [set(tokenize(f.text)) for f in fragments]
    grounded = 0
    for sentence in sentences:
        tokens = set(tokenize(sentence))
        best = max(len(tokens & ft) / len(tokens) for ft in fragment_tokens)
        if best >= theta:
            grounded += 1
    return grounded / len(sentences)


def semantic_relevance(embedder, generated: str, gold: str) -> float:
    """Whole-text embedding cosine between generated and gold."""
    if not generated or not gold:
        raise ValueError("both texts must be non-empty")
    if generated == gold:
        return 1.0
    vec_gen, vec_gold = embedder.embed_texts([generated, gold])
    return cosine_similarity(vec_gen, vec_gold)


def followup_diversity(embedder, followups: list[str]) -> float:
    """Mean pairwise (1 - cosine) over the follow-ups; fewer than two -> 0.0."""
    if len(followups) < 2:
        return 0.0
    vectors = embedder.embed_texts(list(followups))
    total = 0.0
    pairs = 0
    for i in range(len(vectors)):
        for j in range(i + 1, len(vectors)):
            total += 1.0 - cosine_similarity(vectors[i], vectors[j])
            pairs += 1
    return total / pairs


def temporal_consistency(embedder, turns: list[dict]) -> float:
    """Mean cosine between each follow-up and the next turn's utterance+response.

    Turns are transcript dicts with "user", "response", "followup". Pairs
    without a follow-up are skipped; with nothing to compare the value is
    1.0 by convention.
    """
    if len(turns) < 2:
        return 1.0
    sims = []
    for current, following in zip(turns, turns[1:]):
        followup = current.get("followup")
        if not followup:
            continue
        continuation = f"{following.get('user', '')} {following.get('response', '')}".strip()
        if not continuation:
            continue
        vec_f, vec_next = embedder.embed_texts([followup, continuation])
        sims.append(cosine_similarity(vec_f, vec_next))
    return float(np.mean(sims)) if sims else 1.0


def topic_coverage(
    session,
    gold_sections: list[tuple[str, str]],
    embedder,
    tau_cov: float = DEFAULT_TAU_COV,
    word_based: bool = True,
) -> dict[str, float]:
    """Fraction of gold sections reached by the dialogue.

    word_based: a section counts when its embedding clears tau_cov against
    the joined topic words of some visited node; requires a topic tree and
    raises NoTree for baseline sessions (pass word_based=False there).
    content_based: a section counts when it clears tau_cov against some
    system response. gold_sections are (header, content) pairs.
    """
    view = _as_view(session)
    if word_based and view.tree is None:
        raise NoTree("word-based coverage requires a topic tree (lexguide mode)")
    if not gold_sections:
        return {"word_based": 1.0, "content_based": 1.0} if word_based else {"content_based": 1.0}
    section_texts = [f"{header} {content}".strip() for header, content in gold_sections]
    section_vecs = embedder.embed_texts(section_texts)

    content_hits = 0
    responses = [r for r in view.responses if r.strip()]
    response_vecs = embedder.embed_texts(responses) if responses else []
    for vec in section_vecs:
        if any(cosine_similarity(vec, rv) >= tau_cov for rv in response_vecs):
            content_hits += 1
    result = {"content_based": content_hits / len(section_vecs)}
    if not word_based:
        return result

    word_texts = []
    for nid in view.visited:
        words = topic_word_list(view.tree.nodes[nid])
        if words:
            word_texts.append(" ".join(words))
    word_vecs = embedder.embed_texts(word_texts) if word_texts else []
    word_hits = 0
    for vec in section_vecs:
        if any(cosine_similarity(vec, wv) >= tau_cov for wv in word_vecs):
            word_hits += 1
    result["word_based"] = word_hits / len(section_vecs)
    return result


def _as_view(session) -> SessionView:
    if isinstance(session, SessionView):
        return session
    # engine.Session duck-typing: config/state/tree/transcript
    visited: list[str] = []
    state = getattr(session, "state", None)
    if state is not None:
        visited = list(state.visited)
        if state.current not in visited:
            visited.append(state.current)
    transcript = getattr(session, "transcript", [])
    return SessionView(
        mode=session.config.mode,
        responses=[t.response for t in transcript],
        followups=[t.followup for t in transcript if t.followup],
        tree=getattr(session, "tree", None),
        visited=visited,
    )


def gold_sections_of(dialogue: EUDialDialogue) -> list[tuple[str, str]]:
    """Gold (header, answer text) pairs from a dialogue's system turns."""
    out = []
    for turn in dialogue.turns:
        if turn.role == ROLE_EPRS:
            answer, _ = split_eprs_utterance(turn.utterance)
            out.append((turn.section or "", answer))
    return out


def evaluate_dialogue(
    gold: EUDialDialogue,
    transcript: list[dict],
    fragments_by_id: dict[str, Fragment],
    embedder,
    view: SessionView,
    theta: float = DEFAULT_THETA,
    tau_cov: float = DEFAULT_TAU_COV,
) -> dict:
    """All per-dialogue metrics for one generated run against its gold dialogue."""
    gold_answers = [split_eprs_utterance(t.utterance)[0] for t in gold.turns if t.role == ROLE_EPRS]
    responses = [t.get("response", "") for t in transcript]

    grounded_scores = []
    for turn in transcript:
        supports = [
            fragments_by_id[fid]
            for fid in turn.get("supporting_fragment_ids", [])
            if fid in fragments_by_id
        ]
        grounded_scores.append(groundedness(turn.get("response", ""), supports, theta))

    paired = list(zip(responses, gold_answers))
    rouge_scores = [rouge_l_recall(gen, ref) for gen, ref in paired if tokenize(ref)]
    relevance_scores = [
        semantic_relevance(embedder, gen, ref) for gen, ref in paired if gen.strip() and ref.strip()
    ]
    fre_scores = [flesch_reading_ease(r) for r in responses if r.split()]

    coverage = topic_coverage(
        view, gold_sections_of(gold), embedder, tau_cov, word_based=view.tree is not None
    )
    return {
        "dialogue_id": gold.id,
        "groundedness": _mean(grounded_scores),
        "completeness_rougeL": _mean(rouge_scores),
        "relevance": _mean(relevance_scores),
        "readability_fre": _mean(fre_scores),
        "followup_diversity": followup_diversity(embedder, view.followups),
        "temporal_consistency": temporal_consistency(embedder, transcript),
        "topic_coverage_word": coverage.get("word_based"),
        "topic_coverage_content": coverage["content_based"],
    }


def aggregate_reports(per_dialogue: list[dict]) -> MetricsReport:
    if not per_dialogue:
        raise EmptyGold("nothing to aggregate")

    def mean_of(key: str):
        values = [d[key] for d in per_dialogue if d.get(key) is not None]
        return _mean(values) if values else None

    return MetricsReport(
        groundedness=mean_of("groundedness"),
        completeness_rougeL=mean_of("completeness_rougeL"),
        relevance=mean_of("relevance"),
        readability_fre=mean_of("readability_fre"),
        followup_diversity=mean_of("followup_diversity"),
        temporal_consistency=mean_of("temporal_consistency"),
        topic_coverage_word=mean_of("topic_coverage_word"),
        topic_coverage_content=mean_of("topic_coverage_content"),
        per_dialogue=per_dialogue,
    )


def report_to_dict(report: MetricsReport, config: dict) -> dict:
    return {
        "config": config,
        "aggregates": {
            "groundedness": report.groundedness,
            "completeness_rougeL": report.completeness_rougeL,
            "relevance": report.relevance,
            "readability_fre": report.readability_fre,
            "followup_diversity": report.followup_diversity,
            "temporal_consistency": report.temporal_consistency,
            "topic_coverage_word": report.topic_coverage_word,
            "topic_coverage_content": report.topic_coverage_content,
        },
        "per_dialogue": report.per_dialogue,
        "deviations": list(DEVIATIONS),
    }


def report_to_csv(report: MetricsReport, config: dict) -> str:
    """One-row CSV table of the aggregates, mirroring the comparison layout."""
    columns = [
        "mode", "groundedness", "completeness_rougeL", "relevance", "readability_fre",
        "followup_diversity", "temporal_consistency", "topic_coverage_word",
        "topic_coverage_content",
    ]
    values = [str(config.get("mode", ""))]
    data = report_to_dict(report, config)["aggregates"]
    for column in columns[1:]:
        value = data[column]
        values.append("" if value is None else f"{value:.4f}")
    return ",".join(columns) + "\n" + ",".join(values) + "\n"


def _mean(values) -> float:
    values = list(values)
    return float(sum(values) / len(values)) if values else 0.0
