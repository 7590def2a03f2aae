/** Wire types mirroring the API's published JSON schemas. */

export type SessionStatus = "active" | "terminated";

export interface Turn {
  session_id: string;
  turn_index: number;
  user: string;
  response: string;
  followup: string | null;
  node_id: string | null;
  supporting_fragment_ids: string[];
  timestamps: { started: string; completed: string };
}

export interface SessionCreated {
  session_id: string;
  status: SessionStatus;
  termination_reason: string | null;
  first_turn: Turn;
}

export interface TurnEnvelope {
  status: SessionStatus;
  termination_reason: string | null;
  turn: Turn;
}

export interface HistoryEntry {
  user: string;
  response: string;
  followup: string | null;
}

export interface StateSnapshot {
  visited: string[];
  current: string;
  unexplored: string[];
  strategy: string;
  path: string[];
  history: HistoryEntry[];
}

export interface TreeNode {
  parent: string | null;
  children: string[];
  words: { term: string; score: number }[];
  fragment_ids: string[];
  centroid: number[];
  is_outlier: boolean;
}

export interface TreeSnapshot {
  format?: string;
  root_id: string;
  depth?: number;
  nodes: Record<string, TreeNode>;
}

export interface TranscriptSnapshot {
  session_id: string;
  status: SessionStatus;
  termination_reason: string | null;
  turns: Turn[];
}

export interface FragmentPayload {
  id: string;
  doc_id: string;
  position: number;
  text: string;
  source_url: string | null;
}

export interface WireError {
  code: string;
  message: string;
}
