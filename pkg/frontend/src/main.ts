import { ApiClient, fetchHttp } from "./api.js";
import { ConsoleController } from "./controller.js";
import { Elements, render } from "./render.js";

declare global {
  interface Window {
    LEXGUIDE_API_BASE?: string;
  }
}

function apiBase(): string {
  const meta = document.querySelector('meta[name="lexguide-api-base"]');
  return window.LEXGUIDE_API_BASE ?? meta?.getAttribute("content") ?? "http://127.0.0.1:8000";
}

function grab<T extends HTMLElement>(id: string): T {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
}

function boot(): void {
  const controller = new ConsoleController(new ApiClient(fetchHttp(apiBase())));
  const elements: Elements = {
    transcript: grab("transcript"),
    tree: grab("tree"),
    breadcrumb: grab("breadcrumb"),
    banner: grab("banner"),
    tooltip: grab("tooltip"),
    acceptButton: grab<HTMLButtonElement>("accept"),
    queryInput: grab<HTMLInputElement>("query"),
    sendButton: grab<HTMLButtonElement>("send"),
    ascendButton: grab<HTMLButtonElement>("ascend"),
    backButton: grab<HTMLButtonElement>("back"),
    endButton: grab<HTMLButtonElement>("end"),
  };

  controller.onChange(() => render(controller.state, elements, controller));

  const submit = () => {
    const text = elements.queryInput.value;
    elements.queryInput.value = "";
    if (controller.state.sessionId) {
      void controller.sendUtterance(text);
    } else {
      void controller.start(text);
    }
  };

  elements.sendButton.addEventListener("click", submit);
  elements.queryInput.addEventListener("keydown", (event) => {
    if (event.key === "Enter") submit();
  });
  elements.acceptButton.addEventListener("click", () => void controller.acceptFollowup());
  elements.ascendButton.addEventListener("click", () => void controller.navigate("ascend"));
  elements.backButton.addEventListener("click", () => void controller.navigate("backtrack", undefined, 1));
  elements.endButton.addEventListener("click", () => void controller.end());

  render(controller.state, elements, controller);
}

document.addEventListener("DOMContentLoaded", boot);
