// DOM bootstrap: canvas preview with click selection, the three-group
// panel, the peripheral status bar, and event toasts.
//
// Server URL comes from the `?server=` query parameter and defaults to
// the visguardian service on localhost.

import { HttpTransport, attachStream, browserSocket } from "./api.js";
import { Controller } from "./controller.js";
import { ClientState } from "./state.js";
import { drawFrame } from "./render.js";
import type { Dimension } from "./types.js";

const params = new URLSearchParams(window.location.search);
const serverUrl = (params.get("server") ?? "http://127.0.0.1:8710").replace(/\/$/, "");
const wsUrl = serverUrl.replace(/^http/, "ws") + "/stream";

const state = new ClientState();
const transport = new HttpTransport(serverUrl);
const controller = new Controller(state, transport);

const canvas = document.getElementById("preview") as HTMLCanvasElement;
const panelEl = document.getElementById("panel") as HTMLDivElement;
const statusBar = document.getElementById("status-bar") as HTMLDivElement;
const toastsEl = document.getElementById("toasts") as HTMLDivElement;
const bannerEl = document.getElementById("banner") as HTMLDivElement;
const drawerEl = document.getElementById("drawer") as HTMLDivElement;

let needsRedraw = false;

function connect(): void {
  state.onConnectionChange("connecting");
  const socket = browserSocket(wsUrl);
  attachStream(state, socket, () => {
    needsRedraw = true;
  });
  socket.onClose(() => {
    setTimeout(connect, 1500); // reconnect banner stays up meanwhile
  });
}

canvas.addEventListener("click", (event) => {
  const rect = canvas.getBoundingClientRect();
  const x = Math.round(((event.clientX - rect.left) / rect.width) * canvas.width);
  const y = Math.round(((event.clientY - rect.top) / rect.height) * canvas.height);
  void controller.click(x, y).then(() => {
    renderPanel();
    needsRedraw = true;
  });
});

function renderPanel(): void {
  const panel = state.panel;
  if (!panel) {
    panelEl.classList.add("hidden");
    panelEl.innerHTML = "";
    return;
  }
  panelEl.classList.remove("hidden");
  const groupRow = (label: string, dimension: Dimension, classes: string[]) => `
    <div class="group-row" data-dimension="${dimension}">
      <div class="group-head">${label}: ${classes.join(", ")}</div>
      <button data-action="Hide" data-dimension="${dimension}">Hide group</button>
      <button data-action="Reveal" data-dimension="${dimension}">Reveal group</button>
    </div>`;
  panelEl.innerHTML = `
    <div class="panel-title">selected: ${panel.anchor} (preview paused)</div>
    ${groupRow("privacy sensitivity", "Sensitivity", panel.groups.sensitivity)}
    ${groupRow("object category", "Category", panel.groups.category)}
    ${groupRow("spatial proximity", "Spatial", panel.groups.spatial)}
    <div class="group-row">
      <button data-action="toggle">Toggle ${panel.anchor} only</button>
      <button data-action="close">Close</button>
    </div>
    ${panel.error ? `<div class="panel-error">${panel.error}</div>` : ""}`;
  panelEl.querySelectorAll("button").forEach((button) => {
    button.addEventListener("click", () => {
      const action = button.getAttribute("data-action");
      let done: Promise<void>;
      if (action === "close") {
        done = controller.closePanel();
      } else if (action === "toggle") {
        done = controller.toggleClass();
      } else {
        const dimension = button.getAttribute("data-dimension") as Dimension;
        done = controller.applyGroup(dimension, action as "Hide" | "Reveal");
      }
      void done.then(() => {
        renderPanel();
        needsRedraw = true;
      });
    });
  });
}

function renderToasts(): void {
  toastsEl.innerHTML = "";
  for (const toast of state.toasts) {
    const el = document.createElement("div");
    el.className = "toast";
    el.innerHTML = `<span>${toast.text}</span>`;
    const review = document.createElement("button");
    review.textContent = "review";
    review.addEventListener("click", () => {
      state.dismissToast(toast.id);
      if (toast.className && state.displayed) {
        const det = state.displayed.meta.detections.find((d) => d.class === toast.className);
        if (det) {
          void controller
            .click(det.bbox[0] + 1, det.bbox[1] + 1)
            .then(() => renderPanel());
        }
      }
      renderToasts();
    });
    const dismiss = document.createElement("button");
    dismiss.textContent = "x";
    dismiss.addEventListener("click", () => {
      state.dismissToast(toast.id);
      renderToasts();
    });
    el.append(review, dismiss);
    toastsEl.appendChild(el);
  }
}

statusBar.addEventListener("click", () => {
  void transport.getPolicy().then((policy) => {
    drawerEl.classList.toggle("hidden");
    drawerEl.innerHTML = Object.entries(policy.states)
      .map(([name, st]) => `<div class="drawer-row ${st}">${name}: ${st}</div>`)
      .join("");
  });
});

let lastToastCount = -1;

function tick(): void {
  const now = Date.now();
  bannerEl.classList.toggle("hidden", state.connection === "open");
  statusBar.textContent = `● ${state.hiddenCount} hidden in view · policy ${state.shortDigest()} · frame ${state.serverFrameCounter}`;
  if (state.toasts.length !== lastToastCount) {
    lastToastCount = state.toasts.length;
    renderToasts();
  }
  if (needsRedraw || state.activeHighlight(now).size > 0) {
    needsRedraw = false;
    void drawFrame(canvas, state, now);
  }
  window.requestAnimationFrame(tick);
}

connect();
window.requestAnimationFrame(tick);
