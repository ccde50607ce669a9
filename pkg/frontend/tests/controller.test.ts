import { describe, expect, it } from "vitest";

import { Controller } from "../src/controller.js";
import { ClientState } from "../src/state.js";
import type {
  GroupsResponse,
  InteractionBody,
  PolicyResponse,
  PostResult,
  Transport,
} from "../src/types.js";

class FakeTransport implements Transport {
  posts: InteractionBody[] = [];
  groupCalls: string[] = [];
  failNonSelect: { status: number; error: string } | null = null;
  gate: Promise<void> | null = null;

  async postInteraction(body: InteractionBody): Promise<PostResult> {
    if (this.gate) {
      await this.gate;
    }
    this.posts.push(body);
    if (body.kind !== "SelectObject" && this.failNonSelect) {
      return { ok: false, ...this.failNonSelect };
    }
    const cls = "class" in body ? body.class : body.anchor;
    return {
      ok: true,
      record: {
        event: body as never,
        delta: body.kind === "SelectObject" ? [] : [{ class: cls, old: "Hidden", new: "Revealed" }],
        digest: "9".repeat(64),
      },
    };
  }

  async getGroups(anchor: string): Promise<GroupsResponse> {
    this.groupCalls.push(anchor);
    return {
      anchor,
      sensitivity: [anchor, "medicine"],
      category: [anchor, "file cabinet"],
      spatial: [anchor, "calendar"],
    };
  }

  async getPolicy(): Promise<PolicyResponse> {
    return { app_id: "a", mode: "VisGuardian", digest: "0".repeat(64), states: {}, slider_level: 5 };
  }
}

function stateWithFrame(): ClientState {
  const state = new ClientState();
  state.onFrame({
    meta: {
      frame: 0,
      policy_digest: "a".repeat(64),
      detections: [
        { track: 1, class: "book", bbox: [10, 10, 20, 20], state: "Hidden" },
        { track: 2, class: "coffee mug", bbox: [40, 10, 10, 10], state: "NotSensitive" },
      ],
    },
    png: null,
  });
  return state;
}

describe("click flow", () => {
  it("posts SelectObject then opens the panel from the group query", async () => {
    const state = stateWithFrame();
    const transport = new FakeTransport();
    const controller = new Controller(state, transport);
    await controller.click(15, 15);
    expect(transport.posts).toEqual([{ kind: "SelectObject", track: 1, class: "book" }]);
    expect(transport.groupCalls).toEqual(["book"]);
    expect(state.panel?.anchor).toBe("book");
    expect(state.frozen).toBe(true);
  });

  it("clicking empty space clears selection and closes the panel", async () => {
    const state = stateWithFrame();
    const transport = new FakeTransport();
    const controller = new Controller(state, transport);
    await controller.click(15, 15);
    await controller.click(5, 5);
    expect(state.panel).toBeNull();
    expect(state.selectedTrack).toBeNull();
    expect(transport.posts).toHaveLength(1); // no event for the empty click
  });

  it("ignores clicks on not-sensitive objects", async () => {
    const state = stateWithFrame();
    const transport = new FakeTransport();
    const controller = new Controller(state, transport);
    await controller.click(45, 15);
    expect(transport.posts).toHaveLength(0);
    expect(state.panel).toBeNull();
  });
});

describe("panel actions", () => {
  it("apply-group posts the event, closes the panel, and highlights the delta", async () => {
    const state = stateWithFrame();
    const transport = new FakeTransport();
    const controller = new Controller(state, transport, () => 5000);
    await controller.click(15, 15);
    await controller.applyGroup("Category", "Reveal");
    expect(transport.posts[1]).toEqual({
      kind: "ApplyGroup",
      anchor: "book",
      dimension: "Category",
      action: "Reveal",
    });
    expect(state.panel).toBeNull(); // closed, stream resumed
    expect(state.frozen).toBe(false);
    expect([...state.activeHighlight(5500)]).toEqual(["book"]);
    expect(state.shortDigest()).toBe("99999999");
  });

  it("toggle acts on the selected class only", async () => {
    const state = stateWithFrame();
    const transport = new FakeTransport();
    const controller = new Controller(state, transport);
    await controller.click(15, 15);
    await controller.toggleClass();
    expect(transport.posts[1]).toEqual({ kind: "ToggleClass", class: "book" });
  });

  it("a 409 keeps the panel open and shows a mode error", async () => {
    const state = stateWithFrame();
    const transport = new FakeTransport();
    transport.failNonSelect = { status: 409, error: "SetSlider only" };
    const controller = new Controller(state, transport);
    await controller.click(15, 15);
    await controller.applyGroup("Spatial", "Hide");
    expect(state.panel).not.toBeNull();
    expect(state.panel?.error).toContain("not available in this mode");
  });
});

describe("interaction serialization", () => {
  it("keeps at most one interaction POST in flight", async () => {
    const state = stateWithFrame();
    const transport = new FakeTransport();
    let release: () => void = () => undefined;
    transport.gate = new Promise((resolve) => {
      release = resolve;
    });
    const controller = new Controller(state, transport);
    const first = controller.click(15, 15);
    const second = controller.click(15, 15);
    await new Promise((resolve) => setTimeout(resolve, 20));
    expect(transport.posts).toHaveLength(0); // gated: nothing issued yet
    release();
    await first;
    await second;
    // Both clicks went through, strictly one after the other.
    expect(transport.posts.map((p) => p.kind)).toEqual(["SelectObject", "SelectObject"]);
  });
});
