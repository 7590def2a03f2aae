import { ApiClient, ApiError } from "./api.js";
import {
  ConsoleViewState,
  applyCreated,
  applySnapshots,
  applyTurn,
  initialViewState,
  pendingFollowup,
} from "./state.js";

export type Listener = (state: ConsoleViewState) => void;

/**
 * Drives the dialogue API and owns the view state. Exactly one request is
 * in flight at any time: actions invoked while pending are ignored, which
 * also makes double-clicks harmless.
 */
export class ConsoleController {
  readonly state: ConsoleViewState = initialViewState();
  private listeners: Listener[] = [];

  constructor(private readonly api: ApiClient) {}

  onChange(listener: Listener): void {
    this.listeners.push(listener);
  }

  private notify(): void {
    for (const listener of this.listeners) listener(this.state);
  }

  private async guarded(action: () => Promise<void>): Promise<void> {
    if (this.state.pending) return;
    this.state.pending = true;
    this.notify();
    try {
      await action();
      this.state.errorBanner = null;
    } catch (err) {
      this.absorb(err);
    } finally {
      this.state.pending = false;
      this.notify();
    }
  }

  private absorb(err: unknown): void {
    if (err instanceof ApiError) {
      if (err.status === 410) {
        // session finished server-side; fetch the recorded reason
        this.state.completed = true;
        this.state.terminationReason = this.state.terminationReason ?? "terminated";
        return;
      }
      if (err.status === 400) {
        this.state.tooltip = err.message;
        return;
      }
      this.state.errorBanner = `${err.code}: ${err.message}`;
      return;
    }
    this.state.errorBanner = err instanceof Error ? err.message : String(err);
  }

  private async refreshSnapshots(): Promise<void> {
    const sid = this.state.sessionId;
    if (!sid) return;
    const tree = await this.api.getTree(sid);
    const nav = await this.api.getState(sid);
    applySnapshots(this.state, tree, nav);
  }

  async start(query: string): Promise<void> {
    const trimmed = query.trim();
    if (!trimmed) {
      this.state.tooltip = "enter a question first";
      this.notify();
      return; // local validation: no network call for an empty query
    }
    await this.guarded(async () => {
      applyCreated(this.state, await this.api.createSession(trimmed));
      await this.refreshSnapshots();
    });
  }

  /** Post the proposed follow-up verbatim as the next utterance. */
  async acceptFollowup(): Promise<void> {
    const followup = pendingFollowup(this.state);
    if (!followup || !this.state.sessionId) return;
    await this.sendUtterance(followup);
  }

  async sendUtterance(utterance: string): Promise<void> {
    const sid = this.state.sessionId;
    if (!sid || !utterance.trim() || this.state.completed) return;
    await this.guarded(async () => {
      applyTurn(this.state, await this.api.postTurn(sid, utterance));
      await this.refreshSnapshots();
    });
  }

  async navigate(operation: string, target?: string, steps?: number): Promise<void> {
    const sid = this.state.sessionId;
    if (!sid) return;
    await this.guarded(async () => {
      const nav = await this.api.navigate(sid, operation, target, steps);
      applySnapshots(this.state, null, nav);
    });
  }

  /** Lazily fetch fragment payloads for a turn's attribution drawer. */
  async loadAttribution(fragmentIds: string[]): Promise<void> {
    const missing = fragmentIds.filter((fid) => !(fid in this.state.fragments));
    if (missing.length === 0) return;
    await this.guarded(async () => {
      for (const fid of missing) {
        this.state.fragments[fid] = await this.api.getFragment(fid);
      }
    });
  }

  async end(): Promise<void> {
    const sid = this.state.sessionId;
    if (!sid) return;
    await this.guarded(async () => {
      await this.api.deleteSession(sid);
      this.state.completed = true;
      this.state.terminationReason = "user-satisfied";
    });
  }
}
