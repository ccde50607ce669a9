// Client-side state: the preview, selection, group panel, toasts, and the
// freeze semantics. The preview freezes while the panel is open — frames
// keep arriving and the newest one is buffered, so closing the panel jumps
// straight to the present. The server-side stream never pauses.

import type {
  ApiEventMessage,
  AuditRecord,
  DetectionInfo,
  FrameMessage,
  GroupsResponse,
} from "./types.js";

export interface ReceivedFrame {
  meta: FrameMessage;
  /** Binary PNG as delivered; the DOM layer turns it into an image. */
  png: Uint8Array | null;
}

export interface PanelState {
  anchor: string;
  track: number;
  groups: GroupsResponse;
  error: string | null;
}

export interface Toast {
  id: number;
  kind: "NewClass" | "PromptRequested";
  text: string;
  className: string | null;
}

export type ConnectionStatus = "connecting" | "open" | "closed";

export const HIGHLIGHT_MS = 1000;
const MAX_TOASTS = 8;

export class ClientState {
  connection: ConnectionStatus = "connecting";
  /** Newest frame received from the server. */
  latest: ReceivedFrame | null = null;
  /** Frame the preview shows; differs from latest only while frozen. */
  displayed: ReceivedFrame | null = null;
  private buffered: ReceivedFrame | null = null;
  selectedTrack: number | null = null;
  panel: PanelState | null = null;
  toasts: Toast[] = [];
  /** Digest of the policy as last reported by the server. */
  digest = "";
  hiddenCount = 0;
  serverFrameCounter = -1;
  eventsSeen = 0;
  lastEventSequence = -1;
  private highlightClasses: Set<string> = new Set();
  private highlightUntil = 0;
  private toastId = 0;

  get frozen(): boolean {
    return this.panel !== null;
  }

  onConnectionChange(status: ConnectionStatus): void {
    this.connection = status;
  }

  onFrame(frame: ReceivedFrame): void {
    this.latest = frame;
    this.serverFrameCounter = frame.meta.frame;
    this.digest = frame.meta.policy_digest;
    this.hiddenCount = frame.meta.detections.filter((d) => d.state === "Hidden").length;
    if (this.frozen) {
      this.buffered = frame; // latest-wins while the preview is paused
    } else {
      this.displayed = frame;
    }
  }

  onEvent(event: ApiEventMessage): void {
    this.eventsSeen += 1;
    this.lastEventSequence = event.sequence;
    if (event.kind === "NewClass") {
      const className = String(event.payload);
      this.pushToast("NewClass", `new sensitive class: ${className} (hidden by default)`, className);
    } else if (event.kind === "PromptRequested") {
      this.pushToast("PromptRequested", `app ${String(event.payload)} requests visual permissions`, null);
    } else if (event.kind === "PolicyChanged") {
      const record = event.payload as AuditRecord;
      if (record && typeof record.digest === "string") {
        this.digest = record.digest;
      }
    }
  }

  private pushToast(kind: Toast["kind"], text: string, className: string | null): void {
    this.toastId += 1;
    this.toasts.push({ id: this.toastId, kind, text, className });
    if (this.toasts.length > MAX_TOASTS) {
      this.toasts.shift();
    }
  }

  dismissToast(id: number): void {
    this.toasts = this.toasts.filter((t) => t.id !== id);
  }

  /** Detection under a preview point; the smallest-area box wins ties,
   * and among equal areas the topmost (drawn last) wins. */
  hitTest(x: number, y: number): DetectionInfo | null {
    const detections = this.displayed?.meta.detections ?? [];
    const hits = detections
      .map((det, index) => ({ det, index }))
      .filter(({ det }) => {
        const [bx, by, bw, bh] = det.bbox;
        return x >= bx && x < bx + bw && y >= by && y < by + bh;
      });
    if (hits.length === 0) {
      return null;
    }
    hits.sort((a, b) => {
      const areaA = a.det.bbox[2] * a.det.bbox[3];
      const areaB = b.det.bbox[2] * b.det.bbox[3];
      return areaA !== areaB ? areaA - areaB : b.index - a.index;
    });
    return hits[0].det;
  }

  /** Panel open implies a selected track (state invariant). */
  openPanel(track: number, groups: GroupsResponse): void {
    this.selectedTrack = track;
    this.panel = { anchor: groups.anchor, track, groups, error: null };
  }

  setPanelError(message: string): void {
    if (this.panel) {
      this.panel.error = message;
    }
  }

  closePanel(): void {
    this.panel = null;
    if (this.buffered) {
      this.displayed = this.buffered; // resume on the newest frame
      this.buffered = null;
    }
  }

  clearSelection(): void {
    this.selectedTrack = null;
    this.closePanel();
  }

  applyAudit(record: AuditRecord, now: number): void {
    this.digest = record.digest;
    this.highlightClasses = new Set(record.delta.map((d) => d.class));
    this.highlightUntil = now + HIGHLIGHT_MS;
  }

  activeHighlight(now: number): Set<string> {
    return now < this.highlightUntil ? this.highlightClasses : new Set();
  }

  shortDigest(): string {
    return this.digest.slice(0, 8);
  }
}

/** Outline colors; kept identical to the server's overlay constants. */
export function boxColor(
  state: DetectionInfo["state"],
  highlighted: boolean,
): string | null {
  if (highlighted) {
    return "#ffff00";
  }
  if (state === "Hidden") {
    return "#ff0000";
  }
  if (state === "Revealed") {
    return "#00ff00";
  }
  return null; // NotSensitive boxes carry no outline
}
