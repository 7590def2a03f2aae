import type {
  FragmentPayload,
  SessionCreated,
  StateSnapshot,
  TreeSnapshot,
  Turn,
  TurnEnvelope,
} from "./types.js";

/** One transcript row as displayed: answer and follow-up separated. */
export interface TurnView {
  user: string;
  answer: string;
  followup: string | null;
  nodeId: string | null;
  attribution: string[];
}

export type NodeMarker = "current" | "visited" | "unexplored" | "plain";

/**
 * Everything the console renders. All fields are copied verbatim from API
 * payloads; the console itself decides nothing about the dialogue.
 */
export interface ConsoleViewState {
  sessionId: string | null;
  turns: TurnView[];
  tree: TreeSnapshot | null;
  nav: StateSnapshot | null;
  pending: boolean;
  completed: boolean;
  terminationReason: string | null;
  errorBanner: string | null;
  tooltip: string | null;
  fragments: Record<string, FragmentPayload>;
}

export function initialViewState(): ConsoleViewState {
  return {
    sessionId: null,
    turns: [],
    tree: null,
    nav: null,
    pending: false,
    completed: false,
    terminationReason: null,
    errorBanner: null,
    tooltip: null,
    fragments: {},
  };
}

function toTurnView(turn: Turn): TurnView {
  return {
    user: turn.user,
    answer: turn.response,
    followup: turn.followup,
    nodeId: turn.node_id,
    attribution: [...turn.supporting_fragment_ids],
  };
}

export function applyCreated(state: ConsoleViewState, payload: SessionCreated): void {
  state.sessionId = payload.session_id;
  state.turns = [toTurnView(payload.first_turn)];
  state.completed = payload.status === "terminated";
  state.terminationReason = payload.termination_reason;
  state.errorBanner = null;
  state.tooltip = null;
}

export function applyTurn(state: ConsoleViewState, envelope: TurnEnvelope): void {
  state.turns.push(toTurnView(envelope.turn));
  state.completed = envelope.status === "terminated";
  state.terminationReason = envelope.termination_reason;
  state.tooltip = null;
}

export function applySnapshots(
  state: ConsoleViewState,
  tree: TreeSnapshot | null,
  nav: StateSnapshot | null,
): void {
  if (tree) state.tree = tree;
  if (nav) state.nav = nav;
}

/** The follow-up the "Yes, continue" affordance would post, verbatim. */
export function pendingFollowup(state: ConsoleViewState): string | null {
  if (state.completed || state.turns.length === 0) return null;
  const last = state.turns[state.turns.length - 1];
  return last ? last.followup : null;
}

/** Marker for a tree node, read purely from the latest state snapshot. */
export function nodeMarker(state: ConsoleViewState, nodeId: string): NodeMarker {
  if (!state.nav) return "plain";
  if (state.nav.current === nodeId) return "current";
  if (state.nav.visited.includes(nodeId)) return "visited";
  if (state.nav.unexplored.includes(nodeId)) return "unexplored";
  return "plain";
}
