"""Regenerate the synthetic dialogue fixture used by the statistics tests.

204 dialogues totalling 880 citizen/system turn pairs (mean ~4.31), with
pair counts ranging 1..9. Everything is produced through the stub chat
provider, so reruns are byte-identical.

Usage: python tools/make_fixtures.py [out_path]
"""

from __future__ import annotations

import sys
from pathlib import Path

from lexguide.corpus import DocumentRecord, Metadata, Section
from lexguide.dataset_builder import build_dialogue, export_eudial
from lexguide.providers import StubChat

# 204 documents, section counts summing to 880.
PAIR_DISTRIBUTION = (
    [1] * 4 + [2] * 16 + [3] * 40 + [4] * 66 + [5] * 38
    + [6] * 20 + [7] * 12 + [8] * 6 + [9] * 2
)

TOPICS = [
    "energy labels", "rail passenger rights", "parental leave", "roaming charges",
    "organic farming", "asylum procedures", "consumer guarantees", "air quality",
    "posting of workers", "digital identity", "customs duties", "student mobility",
]


def synthetic_documents() -> list[DocumentRecord]:
    assert len(PAIR_DISTRIBUTION) == 204 and sum(PAIR_DISTRIBUTION) == 880
    docs = []
    for i, k in enumerate(PAIR_DISTRIBUTION):
        topic = TOPICS[i % len(TOPICS)]
        sections = []
        for j in range(k):
            sections.append(
                Section(
                    header=f"Aspect {j + 1} of {topic}",
                    content=(
                        f"Rule {i}-{j} explains how {topic} works for citizens in every member state. "
                        f"Authorities publish guidance {j + 1} so households can claim benefit {j + 1} without delay."
                    ),
                )
            )
        docs.append(
            DocumentRecord(
                id=f"syn-{i:03d}",
                question=f"What should citizens know about {topic} (case {i})?",
                sections=tuple(sections),
                metadata=Metadata(date="2025-01-01", tags=(topic,)),
            )
        )
    return docs


def main() -> None:
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else (
        Path(__file__).resolve().parent.parent / "tests" / "data" / "eudial_synthetic.json"
    )
    out.parent.mkdir(parents=True, exist_ok=True)
    chatter = StubChat(seed=0)
    dialogues = [build_dialogue(doc, chatter) for doc in synthetic_documents()]
    export_eudial(dialogues, out)
    print(f"wrote {out} ({len(dialogues)} dialogues)")


if __name__ == "__main__":
    main()
