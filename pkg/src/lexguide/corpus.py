"""Document ingestion, segmentation, fragmentation, and corpus statistics.

Documents follow the QA-JSON schema: a citizen question plus an answer made
of ordered sections, with per-section hyperlinks and document metadata. All
values are immutable after construction.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path

from .errors import EmptyCorpus, MalformedInput

logger = logging.getLogger(__name__)

DEFAULT_MAX_FRAGMENT_TOKENS = 128
MIN_FRAGMENT_TOKENS = 16

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)
# Sentence boundary: terminal punctuation, then whitespace, then an uppercase letter.
_BOUNDARY_RE = re.compile(r"[.?!](?=\s+[A-Z])")
_LATIN_RE = re.compile(r"[A-Za-zÀ-ɏ]")


@lru_cache(maxsize=None)
def _abbreviations() -> frozenset[str]:
    text = resources.files("lexguide").joinpath("resources/abbreviations.txt").read_text("utf-8")
    out = set()
    for line in text.splitlines():
        line = line.strip().lower()
        if line and not line.startswith("#"):
            out.add(line)
    return frozenset(out)


@lru_cache(maxsize=None)
def stopwords() -> frozenset[str]:
    text = resources.files("lexguide").joinpath("resources/stopwords.txt").read_text("utf-8")
    out = set()
    for line in text.splitlines():
        line = line.strip().lower()
        if line and not line.startswith("#"):
            out.add(line)
    return frozenset(out)


@dataclass(frozen=True)
class Link:
    anchor: str
    url: str


@dataclass(frozen=True)
class Section:
    header: str
    content: str
    links: tuple[Link, ...] = ()


@dataclass(frozen=True)
class Metadata:
    date: str = ""
    tags: tuple[str, ...] = ()


@dataclass(frozen=True)
class DocumentRecord:
    id: str
    question: str
    sections: tuple[Section, ...]
    metadata: Metadata = field(default_factory=Metadata)

    @property
    def links(self) -> tuple[Link, ...]:
        """Document-level view: the concatenation of all section links."""
        return tuple(link for section in self.sections for link in section.links)

    @property
    def answer_text(self) -> str:
        return " ".join(section.content for section in self.sections)


@dataclass(frozen=True)
class Fragment:
    id: str
    doc_id: str
    position: int
    text: str
    source_url: str | None = None


@dataclass(frozen=True)
class CorpusStats:
    n_documents: int
    n_fragments: int
    mean_sections_per_answer: float
    mean_section_tokens: float
    mean_question_tokens: float
    question_to_answer_ratio: float
    mean_fre: float


def tokenize(text: str) -> list[str]:
    """Lowercase tokens split on maximal runs of non-alphanumerics."""
    return _TOKEN_RE.findall(text.lower())


def split_sentences(text: str) -> list[str]:
    """Split text into sentences at [.?!] + whitespace + uppercase boundaries.

    A fixed abbreviation list suppresses splits after tokens like "Art." or
    "e.g.". Returned sentences are exact substrings of the input; only the
    whitespace between them is dropped.
    """
    if not text or not text.strip():
        return []
    sentences: list[str] = []
    start = 0
    for match in _BOUNDARY_RE.finditer(text):
        if match.group() == "." and _preceding_token_is_abbreviation(text, match.start()):
            continue
        end = match.end()
        piece = text[start:end].strip()
        if piece:
            sentences.append(piece)
        start = end
    tail = text[start:].strip()
    if tail:
        sentences.append(tail)
    return sentences


def _preceding_token_is_abbreviation(text: str, period_index: int) -> bool:
    chunk = re.search(r"(\S+)$", text[:period_index])
    if not chunk:
        return False
    token = chunk.group(1).strip(".,;:()[]\"'").lower()
    return token in _abbreviations()


def normalize_whitespace(text: str) -> str:
    return re.sub(r"\s+", " ", text).strip()


def _looks_latin(text: str) -> bool:
    letters = [c for c in text if c.isalpha()]
    if not letters:
        return True
    latin = sum(1 for c in letters if _LATIN_RE.match(c))
    return latin / len(letters) >= 0.5


def fragment_document(
    doc: DocumentRecord, max_fragment_tokens: int = DEFAULT_MAX_FRAGMENT_TOKENS
) -> list[Fragment]:
    """Pack each section's sentences greedily into fragments.

    A fragment never exceeds max_fragment_tokens unless a single sentence
    does, in which case that sentence stands alone. Fragments never cross
    section boundaries; source_url is the section's first link URL.
    """
    if max_fragment_tokens < MIN_FRAGMENT_TOKENS:
        raise ValueError(f"max_fragment_tokens must be >= {MIN_FRAGMENT_TOKENS}")
    fragments: list[Fragment] = []
    position = 0

    def emit(sentences: list[str], url: str | None) -> None:
        nonlocal position
        text = " ".join(sentences)
        fragments.append(
            Fragment(
                id=f"{doc.id}:{position:04d}",
                doc_id=doc.id,
                position=position,
                text=text,
                source_url=url,
            )
        )
        position += 1

    for section in doc.sections:
        url = section.links[0].url if section.links else None
        run: list[str] = []
        run_tokens = 0
        for sentence in split_sentences(section.content):
            n = len(tokenize(sentence))
            if run and run_tokens + n > max_fragment_tokens:
                emit(run, url)
                run, run_tokens = [], 0
            run.append(sentence)
            run_tokens += n
            if run_tokens > max_fragment_tokens:
                # single oversize sentence stands alone
                emit(run, url)
                run, run_tokens = [], 0
        if run:
            emit(run, url)
    return fragments


def _parse_links(raw, where: str) -> tuple[Link, ...]:
    if raw is None:
        return ()
    if not isinstance(raw, list):
        raise MalformedInput(f"{where}: 'links' must be a list")
    out = []
    for item in raw:
        if not isinstance(item, dict) or "anchor" not in item or "url" not in item:
            raise MalformedInput(f"{where}: link entries need 'anchor' and 'url'")
        out.append(Link(anchor=str(item["anchor"]), url=str(item["url"])))
    return tuple(out)


def _parse_record(raw: dict, index: int) -> DocumentRecord | None:
    rid = raw.get("id")
    where = f"record {index} (id={rid!r})"
    if not isinstance(rid, str) or not rid:
        raise MalformedInput(f"record {index}: missing or empty 'id'")
    if not isinstance(raw.get("question"), str) or not raw["question"].strip():
        raise MalformedInput(f"{where}: missing or empty 'question'")
    if "sections" not in raw or not isinstance(raw["sections"], list) or not raw["sections"]:
        raise MalformedInput(f"{where}: missing or empty 'sections'")

    sections = []
    for j, sec in enumerate(raw["sections"]):
        if not isinstance(sec, dict) or "header" not in sec or "content" not in sec:
            raise MalformedInput(f"{where}, section {j}: needs 'header' and 'content'")
        content = normalize_whitespace(str(sec["content"]))
        if not content:
            logger.warning("%s, section %d: empty after normalization, dropped", where, j)
            continue
        if not _looks_latin(content):
            logger.warning("%s, section %d: non-Latin content, dropped", where, j)
            continue
        sections.append(
            Section(
                header=normalize_whitespace(str(sec["header"])),
                content=content,
                links=_parse_links(sec.get("links"), f"{where}, section {j}"),
            )
        )
    if not sections:
        logger.warning("%s: no usable sections after filtering, record skipped", where)
        return None

    anchors = [link.anchor for s in sections for link in s.links]
    if len(anchors) != len(set(anchors)):
        raise MalformedInput(f"{where}: duplicate link anchors across sections")

    meta = raw.get("metadata") or {}
    if not isinstance(meta, dict):
        raise MalformedInput(f"{where}: 'metadata' must be an object")
    return DocumentRecord(
        id=rid,
        question=normalize_whitespace(raw["question"]),
        sections=tuple(sections),
        metadata=Metadata(
            date=str(meta.get("date", "")),
            tags=tuple(str(t) for t in meta.get("tags", []) or []),
        ),
    )


def ingest_documents(path: str | Path, format: str = "qa-json") -> list[DocumentRecord]:
    """Load a QA-JSON corpus file into validated DocumentRecords, in file order."""
    if format != "qa-json":
        raise ValueError(f"unsupported corpus format: {format}")
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise MalformedInput(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(raw, list):
        raise MalformedInput(f"{path}: top level must be an array of records")
    records = []
    for i, item in enumerate(raw):
        if not isinstance(item, dict):
            raise MalformedInput(f"record {i}: must be an object")
        record = _parse_record(item, i)
        if record is not None:
            records.append(record)
    if not records:
        raise EmptyCorpus(f"{path}: no usable records")
    ids = [r.id for r in records]
    if len(ids) != len(set(ids)):
        raise MalformedInput(f"{path}: duplicate document ids")
    return records


def export_documents(docs: list[DocumentRecord], path: str | Path) -> None:
    """Write records back to the QA-JSON schema (inverse of ingest)."""
    payload = []
    for doc in docs:
        payload.append(
            {
                "id": doc.id,
                "question": doc.question,
                "sections": [
                    {
                        "header": s.header,
                        "content": s.content,
                        "links": [{"anchor": l.anchor, "url": l.url} for l in s.links],
                    }
                    for s in doc.sections
                ],
                "metadata": {
                    "date": doc.metadata.date,
                    "tags": list(doc.metadata.tags),
                    "links": [{"anchor": l.anchor, "url": l.url} for l in doc.links],
                },
            }
        )
    Path(path).write_text(
        json.dumps(payload, indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
    )


def write_fragments(fragments: list[Fragment], path: str | Path) -> None:
    """Fragment store: one JSON object per line."""
    with open(path, "w", encoding="utf-8") as fh:
        for frag in fragments:
            fh.write(
                json.dumps(
                    {
                        "id": frag.id,
                        "doc_id": frag.doc_id,
                        "position": frag.position,
                        "text": frag.text,
                        "source_url": frag.source_url,
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )


def read_fragments(path: str | Path) -> list[Fragment]:
    fragments = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh):
            line = line.strip()
            if not line:
                continue
            try:
                raw = json.loads(line)
                fragments.append(
                    Fragment(
                        id=raw["id"],
                        doc_id=raw["doc_id"],
                        position=int(raw["position"]),
                        text=raw["text"],
                        source_url=raw.get("source_url"),
                    )
                )
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise MalformedInput(f"{path}, line {lineno}: {exc}") from exc
    return fragments


def compute_corpus_stats(
    docs: list[DocumentRecord], max_fragment_tokens: int = DEFAULT_MAX_FRAGMENT_TOKENS
) -> CorpusStats:
    """Document-level statistics over a corpus (counts, lengths, readability)."""
    from .evaluation import flesch_reading_ease  # local import: evaluation depends on corpus

    if not docs:
        raise EmptyCorpus("no documents")
    n_fragments = sum(len(fragment_document(d, max_fragment_tokens)) for d in docs)
    section_counts = [len(d.sections) for d in docs]
    section_tokens = [len(tokenize(s.content)) for d in docs for s in d.sections]
    question_tokens = [len(tokenize(d.question)) for d in docs]
    ratios = []
    fres = []
    for d in docs:
        q = len(tokenize(d.question))
        a = sum(len(tokenize(s.content)) for s in d.sections)
        if a > 0:
            ratios.append(q / a)
        fres.append(flesch_reading_ease(d.answer_text))
    return CorpusStats(
        n_documents=len(docs),
        n_fragments=n_fragments,
        mean_sections_per_answer=_mean(section_counts),
        mean_section_tokens=_mean(section_tokens),
        mean_question_tokens=_mean(question_tokens),
        question_to_answer_ratio=_mean(ratios),
        mean_fre=_mean(fres),
    )


def _mean(values) -> float:
    values = list(values)
    return sum(values) / len(values) if values else 0.0
