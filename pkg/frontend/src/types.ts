// Wire types for the visguardian service endpoints and stream messages.

export type VisibilityLabel = "Hidden" | "Revealed" | "NotSensitive";

export interface DetectionInfo {
  track: number;
  class: string;
  bbox: [number, number, number, number]; // x, y, w, h in frame pixels
  state: VisibilityLabel;
}

export interface FrameMessage {
  frame: number;
  detections: DetectionInfo[];
  policy_digest: string;
}

export type ApiEventKind = "NewClass" | "PolicyChanged" | "PromptRequested";

export interface ApiEventMessage {
  kind: ApiEventKind;
  payload: unknown;
  sequence: number;
}

export interface AuditDelta {
  class: string;
  old: "Hidden" | "Revealed";
  new: "Hidden" | "Revealed";
}

export interface AuditRecord {
  event: Record<string, unknown>;
  delta: AuditDelta[];
  digest: string;
}

export interface GroupsResponse {
  anchor: string;
  sensitivity: string[];
  category: string[];
  spatial: string[];
}

export interface PolicyResponse {
  app_id: string;
  mode: string;
  digest: string;
  states: Record<string, "Hidden" | "Revealed">;
  slider_level: number;
}

export type Dimension = "Sensitivity" | "Category" | "Spatial";

export type InteractionBody =
  | { kind: "SelectObject"; track: number; class: string }
  | { kind: "ToggleClass"; class: string }
  | { kind: "ApplyGroup"; anchor: string; dimension: Dimension; action: "Hide" | "Reveal" };

export type PostResult =
  | { ok: true; record: AuditRecord }
  | { ok: false; status: number; error: string };

/** Transport the controller talks through; swapped for a fake in tests. */
export interface Transport {
  getGroups(anchor: string): Promise<GroupsResponse>;
  postInteraction(body: InteractionBody): Promise<PostResult>;
  getPolicy(): Promise<PolicyResponse>;
}
