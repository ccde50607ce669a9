// Wires user intent to the server: click -> SelectObject + group query ->
// panel; panel action -> interaction POST -> close + 1 s highlight.
// The server is the single source of truth: the client never mutates
// policy except through POST /interactions. Interaction POSTs are
// serialized - at most one in flight, later ones queue.

import { ClientState } from "./state.js";
import type { Dimension, InteractionBody, Transport } from "./types.js";

export class Controller {
  private queue: Promise<void> = Promise.resolve();

  constructor(
    readonly state: ClientState,
    readonly transport: Transport,
    private readonly now: () => number = () => Date.now(),
  ) {}

  /** Serialize an interaction; resolves when this action has completed. */
  private enqueue(task: () => Promise<void>): Promise<void> {
    this.queue = this.queue.then(task, task);
    return this.queue;
  }

  /** Handle a preview click at frame coordinates. */
  click(x: number, y: number): Promise<void> {
    return this.enqueue(async () => {
      const hit = this.state.hitTest(x, y);
      if (!hit) {
        this.state.clearSelection();
        return;
      }
      if (hit.state === "NotSensitive") {
        return; // nothing to control for unmapped objects
      }
      const selection: InteractionBody = {
        kind: "SelectObject",
        track: hit.track,
        class: hit.class,
      };
      const posted = await this.transport.postInteraction(selection);
      if (!posted.ok) {
        return;
      }
      const groups = await this.transport.getGroups(hit.class);
      this.state.openPanel(hit.track, groups);
    });
  }

  /** Apply one of the three group choices from the open panel. */
  applyGroup(dimension: Dimension, action: "Hide" | "Reveal"): Promise<void> {
    return this.enqueue(async () => {
      const panel = this.state.panel;
      if (!panel) {
        return;
      }
      await this.post({
        kind: "ApplyGroup",
        anchor: panel.anchor,
        dimension,
        action,
      });
    });
  }

  /** Toggle just the selected object's class. */
  toggleClass(): Promise<void> {
    return this.enqueue(async () => {
      const panel = this.state.panel;
      if (!panel) {
        return;
      }
      await this.post({ kind: "ToggleClass", class: panel.anchor });
    });
  }

  closePanel(): Promise<void> {
    return this.enqueue(async () => {
      this.state.clearSelection();
    });
  }

  private async post(body: InteractionBody): Promise<void> {
    const result = await this.transport.postInteraction(body);
    if (!result.ok) {
      this.state.setPanelError(
        result.status === 409 ? `not available in this mode: ${result.error}` : result.error,
      );
      return;
    }
    this.state.applyAudit(result.record, this.now());
    this.state.clearSelection(); // close the panel, resume the stream
  }
}
