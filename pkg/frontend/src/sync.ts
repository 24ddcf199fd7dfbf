/** Shared cursor state: every plot renders the identical x-range at all
 * times, and the current-timestep cursor is global.  Broadcasts are
 * idempotent (resetting the same range does not re-notify), which keeps
 * cross-window propagation loops stable. */

export interface XRange {
  min: number;
  max: number;
}

type RangeListener = (range: XRange, source: string) => void;
type CursorListener = (timeS: number | null, source: string) => void;

export class CursorState {
  private range: XRange;
  private cursor: number | null = null;
  private rangeListeners = new Set<RangeListener>();
  private cursorListeners = new Set<CursorListener>();

  constructor(initial: XRange = { min: 0, max: 3600 }) {
    this.range = { ...initial };
  }

  getRange(): XRange {
    return { ...this.range };
  }

  getCursor(): number | null {
    return this.cursor;
  }

  setRange(range: XRange, source = "unknown"): void {
    if (!(range.max > range.min)) return;
    if (range.min === this.range.min && range.max === this.range.max) return;
    this.range = { ...range };
    for (const listener of this.rangeListeners) listener(this.getRange(), source);
  }

  setCursor(timeS: number | null, source = "unknown"): void {
    if (timeS === this.cursor) return;
    this.cursor = timeS;
    for (const listener of this.cursorListeners) listener(timeS, source);
  }

  zoom(factor: number, centerS?: number, source = "zoom"): void {
    const { min, max } = this.range;
    const center = centerS ?? (min + max) / 2;
    const half = ((max - min) * factor) / 2;
    this.setRange({ min: center - half, max: center + half }, source);
  }

  pan(deltaS: number, source = "pan"): void {
    this.setRange({ min: this.range.min + deltaS, max: this.range.max + deltaS }, source);
  }

  panTo(centerS: number, source = "panTo"): void {
    const width = this.range.max - this.range.min;
    this.setRange({ min: centerS - width / 2, max: centerS + width / 2 }, source);
  }

  /** Ensure [startS, endS] is visible, panning minimally. */
  reveal(startS: number, endS: number, source = "reveal"): void {
    const width = this.range.max - this.range.min;
    if (startS >= this.range.min && endS <= this.range.max) return;
    if (endS - startS >= width) {
      this.panTo((startS + endS) / 2, source);
      return;
    }
    if (startS < this.range.min) {
      this.setRange({ min: startS, max: startS + width }, source);
    } else {
      this.setRange({ min: endS - width, max: endS }, source);
    }
  }

  onRange(listener: RangeListener): () => void {
    this.rangeListeners.add(listener);
    return () => this.rangeListeners.delete(listener);
  }

  onCursor(listener: CursorListener): () => void {
    this.cursorListeners.add(listener);
    return () => this.cursorListeners.delete(listener);
  }
}

/** Mirror cursor state across windows (tab popouts) over a broadcast channel. */
export function bridgeAcrossWindows(
  state: CursorState,
  channel: Pick<BroadcastChannel, "postMessage" | "addEventListener">,
  windowId: string,
): void {
  state.onRange((range, source) => {
    if (source !== "remote") channel.postMessage({ kind: "range", range, from: windowId });
  });
  state.onCursor((timeS, source) => {
    if (source !== "remote") channel.postMessage({ kind: "cursor", timeS, from: windowId });
  });
  channel.addEventListener("message", (event: MessageEvent) => {
    const msg = (event as MessageEvent).data;
    if (!msg || msg.from === windowId) return;
    if (msg.kind === "range") state.setRange(msg.range, "remote");
    if (msg.kind === "cursor") state.setCursor(msg.timeS, "remote");
  });
}
