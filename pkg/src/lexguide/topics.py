"""Hierarchical topic organization over retrieved fragments.

Fragments are clustered by deterministic average-linkage agglomeration on
cosine distance, the dendrogram is cut at the largest gap between merge
heights, and the clusters become a tree whose nodes carry tf-idf topic
words, a centroid, and their member fragments.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.cluster.hierarchy import fcluster, linkage
from scipy.spatial.distance import pdist

from .corpus import Fragment, stopwords, tokenize
from .errors import EmptyInput, MalformedInput

DEFAULT_MIN_CLUSTER_SIZE = 2
DEFAULT_LEVELS = 2
DEFAULT_TOP_WORDS = 10
OUTLIER_LABEL = -1

TREE_FORMAT = "lexguide-tree/1"


@dataclass
class TopicNode:
    id: str
    centroid: np.ndarray
    fragment_ids: tuple[str, ...]
    parent: str | None = None
    children: list[str] = field(default_factory=list)
    words: list[tuple[str, float]] = field(default_factory=list)
    is_outlier: bool = False


@dataclass
class TopicTree:
    nodes: dict[str, TopicNode]
    root_id: str
    depth: int

    @property
    def root(self) -> TopicNode:
        return self.nodes[self.root_id]

    def children_of(self, node_id: str) -> list[str]:
        return list(self.nodes[node_id].children)

    def parent_of(self, node_id: str) -> str | None:
        return self.nodes[node_id].parent

    def targetable_ids(self) -> list[str]:
        """All non-outlier node ids, in level order."""
        return [nid for nid in self.level_order() if not self.nodes[nid].is_outlier]

    def level_order(self) -> list[str]:
        order = [self.root_id]
        queue = [self.root_id]
        while queue:
            nid = queue.pop(0)
            for child in self.nodes[nid].children:
                order.append(child)
                queue.append(child)
        return order

    def preorder(self) -> list[str]:
        order: list[str] = []

        def walk(nid: str) -> None:
            order.append(nid)
            for child in self.nodes[nid].children:
                walk(child)

        walk(self.root_id)
        return order


def cluster_fragments(
    vectors: list[np.ndarray] | np.ndarray, min_cluster_size: int = DEFAULT_MIN_CLUSTER_SIZE
) -> list[int]:
    """Label vectors by cutting an average-linkage dendrogram at its largest gap.

    Clusters smaller than min_cluster_size are relabeled -1. Labels are
    assigned 0.. in order of first appearance. A single vector gets label 0;
    with no usable gap everything lands in one cluster.
    """
    if min_cluster_size < 2:
        raise ValueError("min_cluster_size must be >= 2")
    matrix = np.asarray(vectors, dtype=np.float64)
    n = matrix.shape[0]
    if n == 0:
        raise EmptyInput("no vectors to cluster")
    if n == 1:
        return [0]

    raw = _cut_labels(matrix)
    counts: dict[int, int] = {}
    for label in raw:
        counts[label] = counts.get(label, 0) + 1
    relabel: dict[int, int] = {}
    out = []
    for label in raw:
        if counts[label] < min_cluster_size:
            out.append(OUTLIER_LABEL)
            continue
        if label not in relabel:
            relabel[label] = len(relabel)
        out.append(relabel[label])
    return out


def _cut_labels(matrix: np.ndarray) -> list[int]:
    n = matrix.shape[0]
    if n == 2:
        return [0, 0]
    distances = pdist(matrix, metric="cosine")
    merged = linkage(distances, method="average")
    heights = merged[:, 2]
    gaps = np.diff(heights)
    if gaps.size == 0 or float(np.max(gaps)) <= 1e-12:
        return [0] * n
    cut_at = int(np.argmax(gaps))
    threshold = (heights[cut_at] + heights[cut_at + 1]) / 2.0
    labels = fcluster(merged, t=threshold, criterion="distance")
    return [int(l) for l in labels]


def build_topic_tree(
    fragments: list[Fragment],
    vectors: list[np.ndarray],
    min_cluster_size: int = DEFAULT_MIN_CLUSTER_SIZE,
    levels: int = DEFAULT_LEVELS,
) -> TopicTree:
    """Organize fragments into a topic tree of up to `levels` cluster tiers.

    The root holds every fragment; first-tier nodes are the clusters, with
    outliers pooled into a single miscellaneous child of the root. Clusters
    large enough to split again are re-cut by the same procedure; fragments
    a re-cut leaves unassigned are absorbed by their nearest subcluster so
    children always partition the parent.
    """
    if not fragments:
        raise EmptyInput("no fragments")
    if len(fragments) != len(vectors):
        raise ValueError("fragments and vectors must be aligned")
    if levels < 1:
        raise ValueError("levels must be >= 1")

    matrix = np.asarray(vectors, dtype=np.float64)
    ids = [f.id for f in fragments]
    nodes: dict[str, TopicNode] = {}
    root = TopicNode(id="t0", centroid=matrix.mean(axis=0), fragment_ids=tuple(ids))
    nodes[root.id] = root

    labels = cluster_fragments(list(matrix), min_cluster_size)
    proper = sorted(set(labels) - {OUTLIER_LABEL})
    if len(proper) >= 2:
        level_counters = {1: 0}
        for label in proper:
            member_idx = [i for i, l in enumerate(labels) if l == label]
            node = _make_node(1, level_counters, root.id, member_idx, ids, matrix, nodes)
            _split_node(
                node, member_idx, ids, matrix, nodes, min_cluster_size, levels, 2, level_counters
            )
        outlier_idx = [i for i, l in enumerate(labels) if l == OUTLIER_LABEL]
        if outlier_idx:
            node = _make_node(1, level_counters, root.id, outlier_idx, ids, matrix, nodes)
            node.is_outlier = True
    return TopicTree(nodes=nodes, root_id=root.id, depth=_tree_depth(nodes, root.id))


def _tree_depth(nodes: dict[str, TopicNode], root_id: str) -> int:
    def walk(nid: str) -> int:
        children = nodes[nid].children
        return 1 + (max(walk(c) for c in children) if children else 0)

    return walk(root_id)


def _make_node(
    level: int,
    counters: dict[int, int],
    parent_id: str,
    member_idx: list[int],
    ids: list[str],
    matrix: np.ndarray,
    nodes: dict[str, TopicNode],
) -> TopicNode:
    ordinal = counters.get(level, 0)
    counters[level] = ordinal + 1
    node = TopicNode(
        id=f"t{level}.{ordinal}",
        centroid=matrix[member_idx].mean(axis=0),
        fragment_ids=tuple(ids[i] for i in member_idx),
        parent=parent_id,
    )
    nodes[parent_id].children.append(node.id)
    nodes[node.id] = node
    return node


def _split_node(
    node: TopicNode,
    member_idx: list[int],
    ids: list[str],
    matrix: np.ndarray,
    nodes: dict[str, TopicNode],
    min_cluster_size: int,
    levels: int,
    level: int,
    counters: dict[int, int],
) -> None:
    if level > levels or len(member_idx) < 2 * min_cluster_size:
        return
    sub_labels = cluster_fragments([matrix[i] for i in member_idx], min_cluster_size)
    proper = sorted(set(sub_labels) - {OUTLIER_LABEL})
    if len(proper) < 2:
        return
    groups = {
        label: [member_idx[i] for i, l in enumerate(sub_labels) if l == label] for label in proper
    }
    # Absorb re-cut strays into the nearest subcluster so children partition the parent.
    strays = [member_idx[i] for i, l in enumerate(sub_labels) if l == OUTLIER_LABEL]
    centroids = {label: matrix[groups[label]].mean(axis=0) for label in proper}
    for idx in strays:
        best = max(proper, key=lambda label: (_safe_cos(matrix[idx], centroids[label]), -label))
        groups[best].append(idx)
    for label in proper:
        members = sorted(groups[label])
        child = _make_node(level, counters, node.id, members, ids, matrix, nodes)
        _split_node(
            child, members, ids, matrix, nodes, min_cluster_size, levels, level + 1, counters
        )


def _safe_cos(u: np.ndarray, v: np.ndarray) -> float:
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        return -1.0
    return float(np.dot(u, v) / (nu * nv))


def extract_topic_words(
    tree: TopicTree,
    texts_by_fragment_id: dict[str, str],
    top_l: int = DEFAULT_TOP_WORDS,
) -> TopicTree:
    """Populate every node's ranked topic words via tf-idf.

    Each node's member texts form one pseudo-document; document frequency is
    computed over leaf pseudo-documents only. Stopwords are removed before
    scoring and zero-scoring terms are never kept.
    """
    if top_l < 1:
        raise ValueError("top_l must be >= 1")
    stop = stopwords()

    def node_tokens(node: TopicNode) -> list[str]:
        text = " ".join(texts_by_fragment_id.get(fid, "") for fid in node.fragment_ids)
        return [t for t in tokenize(text) if t not in stop]

    leaves = [n for n in tree.nodes.values() if not n.children]
    n_leaves = len(leaves)
    df: dict[str, int] = {}
    for leaf in leaves:
        for term in set(node_tokens(leaf)):
            df[term] = df.get(term, 0) + 1

    for node in tree.nodes.values():
        tokens = node_tokens(node)
        total = len(tokens)
        if total == 0:
            node.words = []
            continue
        counts: dict[str, int] = {}
        for term in tokens:
            counts[term] = counts.get(term, 0) + 1
        scored = []
        for term, count in counts.items():
            term_df = df.get(term, 0)
            if term_df == 0:
                continue
            idf = math.log(n_leaves / term_df)
            score = (count / total) * idf
            if score > 0.0:
                scored.append((term, score))
        scored.sort(key=lambda pair: (-pair[1], pair[0]))
        node.words = scored[:top_l]
    return tree


def topic_word_list(node: TopicNode) -> list[str]:
    return [term for term, _ in node.words]


def tree_to_snapshot(tree: TopicTree) -> dict:
    return {
        "format": TREE_FORMAT,
        "root_id": tree.root_id,
        "depth": tree.depth,
        "nodes": {
            nid: {
                "parent": node.parent,
                "children": list(node.children),
                "words": [{"term": t, "score": s} for t, s in node.words],
                "fragment_ids": list(node.fragment_ids),
                "centroid": node.centroid.tolist(),
                "is_outlier": node.is_outlier,
            }
            for nid, node in tree.nodes.items()
        },
    }


def tree_from_snapshot(snapshot: dict) -> TopicTree:
    if snapshot.get("format") != TREE_FORMAT:
        raise MalformedInput(f"unsupported tree format: {snapshot.get('format')!r}")
    nodes = {}
    for nid, raw in snapshot["nodes"].items():
        nodes[nid] = TopicNode(
            id=nid,
            centroid=np.asarray(raw["centroid"], dtype=np.float64),
            fragment_ids=tuple(raw["fragment_ids"]),
            parent=raw["parent"],
            children=list(raw["children"]),
            words=[(w["term"], float(w["score"])) for w in raw["words"]],
            is_outlier=bool(raw.get("is_outlier", False)),
        )
    return TopicTree(nodes=nodes, root_id=snapshot["root_id"], depth=int(snapshot["depth"]))


def save_tree(tree: TopicTree, path: str | Path) -> None:
    Path(path).write_text(json.dumps(tree_to_snapshot(tree), indent=2) + "\n", encoding="utf-8")


def load_tree(path: str | Path) -> TopicTree:
    return tree_from_snapshot(json.loads(Path(path).read_text(encoding="utf-8")))
