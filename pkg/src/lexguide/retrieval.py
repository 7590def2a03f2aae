"""Immutable cosine vector index with diversity-aware MMR retrieval.

The backend is an exact exhaustive scan; entries are kept sorted by
fragment id so that score ties resolve to the lexicographically smaller id.
The greedy selection loop itself lives in `_kernels`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import _kernels
from .corpus import Fragment
from .errors import DimensionMismatch, DuplicateFragmentId, MalformedInput, ZeroVector

INDEX_FORMAT = "lexguide-index/1"

# Defaults used across the engine: lambda balances relevance vs diversity,
# the large k feeds topic building, the small one answering.
DEFAULT_LAMBDA = 0.6
DEFAULT_K_TOPIC = 500
DEFAULT_K_ANSWER = 10


@dataclass(frozen=True)
class ScoredFragment:
    fragment_id: str
    score: float
    rank: int


class VectorIndex:
    """Frozen snapshot of (fragment_id, vector) entries."""

    def __init__(self, ids: list[str], matrix: np.ndarray):
        self._ids = list(ids)
        self._row = {fid: i for i, fid in enumerate(self._ids)}
        self._matrix = matrix
        norms = np.linalg.norm(matrix, axis=1) if len(ids) else np.zeros(0)
        if np.any(norms == 0.0):
            bad = self._ids[int(np.argmin(norms))]
            raise ZeroVector(f"zero vector for fragment {bad}")
        self._unit = matrix / norms[:, None] if len(ids) else matrix

    @property
    def size(self) -> int:
        return len(self._ids)

    @property
    def dim(self) -> int:
        return int(self._matrix.shape[1]) if self._matrix.size else 0

    @property
    def fragment_ids(self) -> list[str]:
        return list(self._ids)

    def vector_for(self, fragment_id: str) -> np.ndarray:
        return self._matrix[self._row[fragment_id]]

    def vectors_for(self, fragment_ids: list[str]) -> np.ndarray:
        return self._matrix[[self._row[fid] for fid in fragment_ids]]

    def query_similarities(self, query: np.ndarray) -> np.ndarray:
        """Cosine similarity of the query against every entry."""
        query = np.asarray(query, dtype=np.float64)
        if self.size and query.shape[0] != self.dim:
            raise DimensionMismatch(f"query dim {query.shape[0]} != index dim {self.dim}")
        norm = np.linalg.norm(query)
        if norm == 0.0:
            raise ZeroVector("query vector is zero")
        return self._unit @ (query / norm)

    def unit_matrix(self) -> np.ndarray:
        return self._unit


def build_index(fragments: list[Fragment], vectors: list[np.ndarray]) -> VectorIndex:
    """Freeze aligned fragments and vectors into a queryable index."""
    if len(fragments) != len(vectors):
        raise ValueError("fragments and vectors must be aligned")
    ids = [f.id for f in fragments]
    seen = set()
    for fid in ids:
        if fid in seen:
            raise DuplicateFragmentId(fid)
        seen.add(fid)
    if not fragments:
        return VectorIndex([], np.zeros((0, 0)))
    dims = {int(np.asarray(v).shape[0]) for v in vectors}
    if len(dims) != 1:
        raise DimensionMismatch(f"mixed vector dims: {sorted(dims)}")
    order = sorted(range(len(ids)), key=lambda i: ids[i])
    matrix = np.asarray([np.asarray(vectors[i], dtype=np.float64) for i in order])
    return VectorIndex([ids[i] for i in order], matrix)


def cosine_similarity(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine of the angle between u and v, exactly 1.0 for identical vectors."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise DimensionMismatch(f"{u.shape} vs {v.shape}")
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        raise ZeroVector("cosine similarity undefined for zero vectors")
    if np.array_equal(u, v):
        return 1.0
    return float(np.clip(np.dot(u, v) / (nu * nv), -1.0, 1.0))


def mmr_retrieve(
    query: np.ndarray,
    index: VectorIndex,
    k: int,
    lam: float = DEFAULT_LAMBDA,
) -> list[ScoredFragment]:
    """Greedy MMR selection of up to k fragments.

    Iteration i picks the unselected candidate maximizing
    lam * sim(c, query) - (1 - lam) * max sim(c, already selected); the
    first pick maximizes query similarity alone. The recorded score is that
    objective value, so for lam=1 scores are the plain cosine ranking.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if not 0.0 <= lam <= 1.0:
        raise ValueError("lambda must be in [0, 1]")
    if index.size == 0:
        return []
    query_sims = index.query_similarities(query)
    picks = _kernels.mmr_select(query_sims, index.unit_matrix(), min(k, index.size), lam)
    ids = index.fragment_ids
    unit = index.unit_matrix()
    out = []
    max_to_selected = np.zeros(index.size)
    for rank, pick in enumerate(picks):
        if rank == 0:
            score = float(query_sims[pick])
        else:
            score = float(lam * query_sims[pick] - (1.0 - lam) * max_to_selected[pick])
        out.append(ScoredFragment(fragment_id=ids[pick], score=score, rank=rank))
        np.maximum(max_to_selected, unit @ unit[pick], out=max_to_selected)
    return out


def top_k_retrieve(query: np.ndarray, index: VectorIndex, k: int) -> list[ScoredFragment]:
    """Plain top-k by cosine similarity; ties break toward the smaller id."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if index.size == 0:
        return []
    sims = index.query_similarities(query)
    ids = index.fragment_ids
    order = sorted(range(index.size), key=lambda i: (-sims[i], ids[i]))[: min(k, index.size)]
    return [
        ScoredFragment(fragment_id=ids[i], score=float(sims[i]), rank=rank)
        for rank, i in enumerate(order)
    ]


def rank_by_similarity(
    query: np.ndarray, index: VectorIndex, fragment_ids: list[str], k: int
) -> list[ScoredFragment]:
    """Top-k among a restricted id subset, by cosine similarity to the query."""
    if not fragment_ids:
        return []
    sims = index.query_similarities(query)
    pairs = sorted(
        ((fid, float(sims[index._row[fid]])) for fid in fragment_ids),
        key=lambda p: (-p[1], p[0]),
    )[: max(k, 0)]
    return [
        ScoredFragment(fragment_id=fid, score=score, rank=rank)
        for rank, (fid, score) in enumerate(pairs)
    ]


def save_index(index: VectorIndex, path: str | Path) -> None:
    """JSONL snapshot: a format-version header line, then one entry per line."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps({"format": INDEX_FORMAT, "dim": index.dim}) + "\n")
        rows = index._matrix
        for i, fid in enumerate(index.fragment_ids):
            fh.write(json.dumps({"fragment_id": fid, "vector": rows[i].tolist()}) + "\n")


def load_index(path: str | Path) -> VectorIndex:
    with open(path, encoding="utf-8") as fh:
        header_line = fh.readline()
        try:
            header = json.loads(header_line)
        except json.JSONDecodeError as exc:
            raise MalformedInput(f"{path}: bad index header") from exc
        if header.get("format") != INDEX_FORMAT:
            raise MalformedInput(f"{path}: unsupported index format {header.get('format')!r}")
        ids = []
        rows = []
        for line in fh:
            line = line.strip()
            if not line:
                continue
            entry = json.loads(line)
            ids.append(entry["fragment_id"])
            rows.append(entry["vector"])
    if not ids:
        return VectorIndex([], np.zeros((0, 0)))
    matrix = np.asarray(rows, dtype=np.float64)
    if matrix.shape[1] != header["dim"]:
        raise MalformedInput(f"{path}: vectors do not match declared dim {header['dim']}")
    return VectorIndex(ids, matrix)
