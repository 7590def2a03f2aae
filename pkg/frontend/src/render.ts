import { ConsoleViewState, nodeMarker, pendingFollowup } from "./state.js";
import type { ConsoleController } from "./controller.js";
import type { TreeSnapshot } from "./types.js";

export interface Elements {
  transcript: HTMLElement;
  tree: HTMLElement;
  breadcrumb: HTMLElement;
  banner: HTMLElement;
  tooltip: HTMLElement;
  acceptButton: HTMLButtonElement;
  queryInput: HTMLInputElement;
  sendButton: HTMLButtonElement;
  ascendButton: HTMLButtonElement;
  backButton: HTMLButtonElement;
  endButton: HTMLButtonElement;
}

const MARKER_SYMBOL: Record<string, string> = {
  current: "▶",
  visited: "✓",
  unexplored: "○",
  plain: "·",
};

export function render(state: ConsoleViewState, el: Elements, controller: ConsoleController): void {
  renderTranscript(state, el, controller);
  renderTree(state, el, controller);
  renderChrome(state, el);
}

function renderTranscript(state: ConsoleViewState, el: Elements, controller: ConsoleController): void {
  el.transcript.replaceChildren();
  for (const turn of state.turns) {
    const item = document.createElement("article");
    item.className = "turn";

    const user = document.createElement("p");
    user.className = "utterance";
    user.textContent = turn.user;
    item.appendChild(user);

    const answer = document.createElement("p");
    answer.className = "answer";
    answer.textContent = turn.answer;
    item.appendChild(answer);

    if (turn.followup) {
      const followup = document.createElement("p");
      followup.className = "followup";
      followup.textContent = turn.followup;
      item.appendChild(followup);
    }

    if (turn.attribution.length > 0) {
      item.appendChild(attributionDrawer(state, turn.attribution, controller));
    }
    el.transcript.appendChild(item);
  }
}

function attributionDrawer(
  state: ConsoleViewState,
  fragmentIds: string[],
  controller: ConsoleController,
): HTMLElement {
  const drawer = document.createElement("details");
  drawer.className = "attribution";
  const summary = document.createElement("summary");
  summary.textContent = `sources (${fragmentIds.length})`;
  drawer.appendChild(summary);
  drawer.addEventListener("toggle", () => {
    if (drawer.open) void controller.loadAttribution(fragmentIds);
  });
  const list = document.createElement("ul");
  for (const fid of fragmentIds) {
    const row = document.createElement("li");
    const fragment = state.fragments[fid];
    if (fragment) {
      row.textContent = `${fid} — ${fragment.text}`;
      if (fragment.source_url) {
        const link = document.createElement("a");
        link.href = fragment.source_url;
        link.textContent = " source";
        link.rel = "noopener";
        row.appendChild(link);
      }
    } else {
      row.textContent = fid;
    }
    list.appendChild(row);
  }
  drawer.appendChild(list);
  return drawer;
}

function renderTree(state: ConsoleViewState, el: Elements, controller: ConsoleController): void {
  el.tree.replaceChildren();
  if (!state.tree) {
    const note = document.createElement("p");
    note.className = "muted";
    note.textContent = state.sessionId ? "no tree for this mode" : "no session yet";
    el.tree.appendChild(note);
    return;
  }
  el.tree.appendChild(outline(state.tree, state.tree.root_id, state, controller));
}

function outline(
  tree: TreeSnapshot,
  nodeId: string,
  state: ConsoleViewState,
  controller: ConsoleController,
): HTMLElement {
  const node = tree.nodes[nodeId];
  const marker = nodeMarker(state, nodeId);
  const li = document.createElement("li");
  const button = document.createElement("button");
  button.type = "button";
  button.className = `node node-${marker}`;
  button.dataset.node = nodeId;
  button.dataset.marker = marker;
  button.textContent = `${MARKER_SYMBOL[marker]} ${nodeId}`;
  if (node && node.words.length > 0) {
    button.title = node.words.map((w) => w.term).join(", ");
  }
  button.addEventListener("click", () => void controller.navigate("jump", nodeId));
  li.appendChild(button);

  if (node && node.children.length > 0) {
    const details = document.createElement("details");
    details.open = true;
    const summary = document.createElement("summary");
    summary.textContent = `${node.children.length} subtopics`;
    details.appendChild(summary);
    const ul = document.createElement("ul");
    for (const child of node.children) {
      ul.appendChild(outline(tree, child, state, controller));
    }
    details.appendChild(ul);
    li.appendChild(details);
  }
  const root = document.createElement("ul");
  root.className = "outline";
  root.appendChild(li);
  return root;
}

function renderChrome(state: ConsoleViewState, el: Elements): void {
  el.breadcrumb.textContent = state.nav ? state.nav.path.join(" › ") : "";

  const followup = pendingFollowup(state);
  el.acceptButton.disabled = state.pending || state.completed || !followup;
  el.acceptButton.textContent = followup ? `Yes, continue: ${followup}` : "Yes, continue";

  el.sendButton.disabled = state.pending || state.completed || !state.sessionId;
  el.ascendButton.disabled = state.pending || !state.sessionId || state.completed;
  el.backButton.disabled = state.pending || !state.sessionId || state.completed;
  el.endButton.disabled = state.pending || !state.sessionId || state.completed;

  if (state.completed) {
    el.banner.textContent =
      state.terminationReason === "complete-coverage"
        ? "All topics explored — the conversation is complete."
        : `Conversation ended (${state.terminationReason ?? "terminated"}).`;
    el.banner.className = "banner done";
  } else if (state.errorBanner) {
    el.banner.textContent = `${state.errorBanner} — retry the last action.`;
    el.banner.className = "banner error";
  } else {
    el.banner.textContent = "";
    el.banner.className = "banner hidden";
  }

  el.tooltip.textContent = state.tooltip ?? "";
  el.tooltip.className = state.tooltip ? "tooltip" : "tooltip hidden";
}
