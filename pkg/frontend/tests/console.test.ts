import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import { describe, expect, it } from "vitest";

import { ApiClient, HttpFn } from "../src/api.js";
import { ConsoleController } from "../src/controller.js";
import { nodeMarker } from "../src/state.js";
import type { StateSnapshot, TreeSnapshot } from "../src/types.js";

interface Exchange {
  method: string;
  path: string;
  body: unknown;
  status: number;
  response: unknown;
}

interface Recording {
  query: string;
  exchanges: Exchange[];
}

const here = dirname(fileURLToPath(import.meta.url));
const fixture = JSON.parse(
  readFileSync(join(here, "..", "fixtures", "walkthrough.json"), "utf-8"),
) as { walkthrough: Recording; ascend_at_root: Recording };

/** Replays recorded exchanges in order and verifies each request matches. */
function replayHttp(recording: Recording): { http: HttpFn; remaining: () => number } {
  const queue = [...recording.exchanges];
  const http: HttpFn = async (method, path, body) => {
    const expected = queue.shift();
    if (!expected) throw new Error(`unexpected request ${method} ${path}`);
    expect(`${method} ${path}`).toBe(`${expected.method} ${expected.path}`);
    if (expected.method === "POST") {
      expect(body).toEqual(expected.body);
    }
    return { status: expected.status, json: expected.response };
  };
  return { http, remaining: () => queue.length };
}

function levelOrder(tree: TreeSnapshot): string[] {
  const order: string[] = [];
  const queue = [tree.root_id];
  while (queue.length > 0) {
    const nid = queue.shift()!;
    order.push(nid);
    queue.push(...(tree.nodes[nid]?.children ?? []));
  }
  return order.filter((nid) => !tree.nodes[nid]?.is_outlier);
}

function recordedStates(recording: Recording): StateSnapshot[] {
  return recording.exchanges
    .filter((e) => e.path.endsWith("/state"))
    .map((e) => e.response as StateSnapshot);
}

describe("console contract against the recorded API fixture", () => {
  it("start + accept-followup x3 renders four turns and completes on termination", async () => {
    const { http, remaining } = replayHttp(fixture.walkthrough);
    const controller = new ConsoleController(new ApiClient(http));
    const snapshots = recordedStates(fixture.walkthrough);

    await controller.start(fixture.walkthrough.query);
    expect(controller.state.turns).toHaveLength(1);
    expect(controller.state.tree).not.toBeNull();
    expect(controller.state.nav).toEqual(snapshots[0]);
    expect(controller.state.completed).toBe(false);

    const currents: string[] = [controller.state.nav!.current];
    for (let step = 0; step < 3; step++) {
      const beforeCompleted = controller.state.completed;
      expect(beforeCompleted).toBe(false); // banner only once the API terminates
      await controller.acceptFollowup();
      currents.push(controller.state.nav!.current);
      expect(controller.state.turns).toHaveLength(step + 2);
      expect(controller.state.nav).toEqual(snapshots[step + 1]);
    }

    expect(controller.state.turns).toHaveLength(4);
    expect(controller.state.completed).toBe(true);
    expect(controller.state.terminationReason).toBe("complete-coverage");

    // current-node marker advanced in BFS order over the recorded tree
    const expectedOrder = levelOrder(controller.state.tree!);
    expect(currents).toEqual(expectedOrder.slice(0, currents.length));
    expect(nodeMarker(controller.state, currents[currents.length - 1]!)).toBe("current");
    for (const visited of currents.slice(0, -1)) {
      expect(nodeMarker(controller.state, visited)).toBe("visited");
    }
    expect(remaining()).toBe(0); // every recorded exchange was consumed
  });

  it("renders displayed facts straight from snapshots (no dialogue logic)", async () => {
    const { http } = replayHttp(fixture.walkthrough);
    const controller = new ConsoleController(new ApiClient(http));
    await controller.start(fixture.walkthrough.query);
    const created = fixture.walkthrough.exchanges[0]!.response as {
      first_turn: { response: string; followup: string; supporting_fragment_ids: string[] };
    };
    const turn = controller.state.turns[0]!;
    expect(turn.answer).toBe(created.first_turn.response);
    expect(turn.followup).toBe(created.first_turn.followup);
    expect(turn.attribution).toEqual(created.first_turn.supporting_fragment_ids);
  });

  it("ignores a second accept while one request is pending", async () => {
    const { http, remaining } = replayHttp(fixture.walkthrough);
    const controller = new ConsoleController(new ApiClient(http));
    await controller.start(fixture.walkthrough.query);
    const before = remaining();
    const first = controller.acceptFollowup();
    const second = controller.acceptFollowup(); // double-click: must be a no-op
    await Promise.all([first, second]);
    expect(before - remaining()).toBe(3); // one POST + tree + state, not six
  });

  it("ascend at the root shows a tooltip and leaves the state unchanged", async () => {
    const { http, remaining } = replayHttp(fixture.ascend_at_root);
    const controller = new ConsoleController(new ApiClient(http));
    await controller.start(fixture.ascend_at_root.query);
    const navBefore = structuredClone(controller.state.nav);
    const turnsBefore = controller.state.turns.length;

    await controller.navigate("ascend");
    expect(controller.state.tooltip).toContain("NoParent");
    expect(controller.state.nav).toEqual(navBefore);
    expect(controller.state.turns).toHaveLength(turnsBefore);
    expect(controller.state.completed).toBe(false);
    expect(remaining()).toBe(0);
  });

  it("rejects an empty query locally without any network call", async () => {
    const { http, remaining } = replayHttp(fixture.walkthrough);
    const controller = new ConsoleController(new ApiClient(http));
    const total = remaining();
    await controller.start("   ");
    expect(remaining()).toBe(total);
    expect(controller.state.tooltip).toBeTruthy();
    expect(controller.state.sessionId).toBeNull();
  });
});
