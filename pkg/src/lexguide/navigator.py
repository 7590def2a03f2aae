"""Navigation state over a topic tree: traversal, routing, termination.

The state tracks visited nodes, the current focus, the walk taken so far,
and the dialogue history. Movement happens through five operations
(descend, lateral, ascend, jump, backtrack) or through strategy-driven
advancement (BFS/DFS) when the user accepts a proposed follow-up.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .corpus import tokenize
from .errors import BadBacktrack, NoParent, UnknownNode
from .retrieval import cosine_similarity
from .topics import TopicTree

DEFAULT_TAU = 0.5

STRATEGY_BFS = "BFS"
STRATEGY_DFS = "DFS"
STRATEGY_USER = "user-driven"
STRATEGIES = (STRATEGY_BFS, STRATEGY_DFS, STRATEGY_USER)

_AFFIRMATIVES = {
    "yes", "yes please", "sure", "ok", "okay", "go ahead", "tell me more", "please do",
}
_INTERROGATIVES = {"what", "why", "how", "when", "where", "who", "whom", "which", "whose"}


@dataclass
class HistoryEntry:
    user: str
    response: str
    followup: str | None = None


@dataclass
class NavigationState:
    current: str
    strategy: str = STRATEGY_BFS
    visited: list[str] = field(default_factory=list)
    path: list[str] = field(default_factory=list)
    history: list[HistoryEntry] = field(default_factory=list)

    def unexplored_children(self, tree: TopicTree) -> list[str]:
        seen = set(self.visited)
        return [c for c in tree.children_of(self.current) if c not in seen]

    def mark_visited(self, node_id: str) -> None:
        if node_id not in self.visited:
            self.visited.append(node_id)


@dataclass(frozen=True)
class RoutingDecision:
    kind: str  # revisit-visited | descend-unexplored | global-jump | rebuild-tree | clarify
    target: str | None
    similarity: float


@dataclass(frozen=True)
class TerminationStatus:
    terminated: bool
    reason: str | None = None  # complete-coverage | user-satisfied | abandoned


def init_state(tree: TopicTree, strategy: str = STRATEGY_BFS) -> NavigationState:
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy: {strategy}")
    return NavigationState(current=tree.root_id, strategy=strategy, path=[tree.root_id])


def next_node(state: NavigationState, tree: TopicTree) -> str | None:
    """Earliest unvisited non-outlier node: level order for BFS, preorder for DFS.

    The user-driven strategy has no automatic successor of its own and
    falls back to BFS order for follow-up targeting.
    """
    order = tree.preorder() if state.strategy == STRATEGY_DFS else tree.level_order()
    blocked = set(state.visited) | {state.current}
    for nid in order:
        if nid in blocked or tree.nodes[nid].is_outlier:
            continue
        return nid
    return None


def apply_operation(
    state: NavigationState,
    tree: TopicTree,
    op: str,
    target: str | None = None,
    steps: int | None = None,
) -> NavigationState:
    """Apply descend/lateral/jump/ascend/backtrack; the old focus becomes visited."""
    previous = state.current
    if op == "descend":
        if target not in tree.children_of(state.current):
            raise UnknownNode(f"{target!r} is not a child of {state.current}")
        state.path.append(target)
        state.current = target
    elif op == "lateral":
        parent = tree.parent_of(state.current)
        siblings = tree.children_of(parent) if parent is not None else []
        if target == state.current or target not in siblings:
            raise UnknownNode(f"{target!r} is not a sibling of {state.current}")
        state.path.append(target)
        state.current = target
    elif op == "jump":
        if target not in tree.nodes:
            raise UnknownNode(f"{target!r} is not in the tree")
        state.path.append(target)
        state.current = target
    elif op == "ascend":
        parent = tree.parent_of(state.current)
        if parent is None:
            raise NoParent(f"{state.current} has no parent")
        state.path.append(parent)
        state.current = parent
    elif op == "backtrack":
        if steps is None or steps < 0 or steps >= len(state.path):
            raise BadBacktrack(f"cannot backtrack {steps} steps on a path of {len(state.path)}")
        state.current = state.path[len(state.path) - 1 - steps]
        del state.path[len(state.path) - steps:]
    else:
        raise ValueError(f"unknown operation: {op}")
    state.mark_visited(previous)
    return state


def advance_to(state: NavigationState, tree: TopicTree, target: str) -> NavigationState:
    """Strategy-driven move used when a follow-up is accepted or a route lands."""
    if target not in tree.nodes:
        raise UnknownNode(target)
    state.mark_visited(state.current)
    state.path.append(target)
    state.current = target
    return state


def is_acknowledgment(utterance: str, proposed_followup: str) -> bool:
    """True when the utterance accepts the proposed follow-up.

    Either it repeats the follow-up (modulo case/punctuation), or its first
    clause is a fixed affirmative and nothing interrogative follows.
    """
    if not proposed_followup:
        raise ValueError("proposed_followup must be non-empty")
    norm_utt = " ".join(tokenize(utterance))
    if not norm_utt:
        return False
    if norm_utt == " ".join(tokenize(proposed_followup)):
        return True
    if "?" in utterance:
        return False
    first_clause = " ".join(
        tokenize(utterance.replace(";", ",").replace(".", ",").split(",")[0])
    )
    if first_clause not in _AFFIRMATIVES:
        return False
    lexicon_tokens = {t for phrase in _AFFIRMATIVES for t in phrase.split()}
    extra = [t for t in tokenize(utterance) if t not in lexicon_tokens]
    return not any(t in _INTERROGATIVES for t in extra)


def route_query(
    state: NavigationState,
    tree: TopicTree,
    query_vec: np.ndarray,
    tau: float = DEFAULT_TAU,
    interactive: bool = False,
) -> RoutingDecision:
    """Route a fresh query against the active tree.

    Priority: visited nodes, then unexplored children of the current node,
    then any node; each accepted when its centroid similarity clears tau.
    Below tau everywhere, interactive mode asks to clarify and batch mode
    rebuilds the tree. Ties break toward the smaller node id.
    """
    if not 0.0 < tau < 1.0:
        raise ValueError("tau must be in (0, 1)")

    def best(candidates: list[str]) -> tuple[str | None, float]:
        top_id, top_sim = None, -1.0
        for nid in sorted(candidates):
            sim = _centroid_similarity(query_vec, tree, nid)
            if sim > top_sim:
                top_id, top_sim = nid, sim
        return top_id, top_sim

    visited_best, visited_sim = best(state.visited)
    if visited_best is not None and visited_sim >= tau:
        return RoutingDecision("revisit-visited", visited_best, visited_sim)

    child_best, child_sim = best(state.unexplored_children(tree))
    if child_best is not None and child_sim >= tau:
        return RoutingDecision("descend-unexplored", child_best, child_sim)

    global_best, global_sim = best(list(tree.nodes))
    if global_best is not None and global_sim >= tau:
        return RoutingDecision("global-jump", global_best, global_sim)

    kind = "clarify" if interactive else "rebuild-tree"
    return RoutingDecision(kind, None, global_sim)


def _centroid_similarity(query_vec: np.ndarray, tree: TopicTree, node_id: str) -> float:
    centroid = tree.nodes[node_id].centroid
    if np.linalg.norm(centroid) == 0.0 or np.linalg.norm(np.asarray(query_vec)) == 0.0:
        return -1.0
    return cosine_similarity(query_vec, centroid)


def check_termination(
    state: NavigationState, tree: TopicTree, signal: str = "none"
) -> TerminationStatus:
    """Coverage completes when every non-outlier node is visited or in focus."""
    covered = set(state.visited) | {state.current}
    if all(nid in covered for nid in tree.targetable_ids()):
        return TerminationStatus(True, "complete-coverage")
    if signal == "user-satisfied":
        return TerminationStatus(True, "user-satisfied")
    if signal == "timeout-or-quit":
        return TerminationStatus(True, "abandoned")
    return TerminationStatus(False, None)


def state_to_snapshot(state: NavigationState, tree: TopicTree) -> dict:
    return {
        "visited": list(state.visited),
        "current": state.current,
        "unexplored": state.unexplored_children(tree),
        "strategy": state.strategy,
        "path": list(state.path),
        "history": [
            {"user": h.user, "response": h.response, "followup": h.followup}
            for h in state.history
        ],
    }
