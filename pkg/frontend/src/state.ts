/**
 * Triage queue state.
 *
 * Verdicts apply optimistically (the card leaves the queue at once) and
 * roll back if the API call fails.  Counts shown to the reviewer are never
 * computed locally: every acknowledged decision carries fresh server
 * counts, and those are the only numbers the UI displays.
 */

import { BatchCounts, PendingItem, ReviewApi, Verdict } from "./api.js";

export type Phase = "loading" | "reviewing" | "complete" | "error";

export interface TriageSnapshot {
  phase: Phase;
  batchId: string | null;
  queue: PendingItem[];
  cursor: number;
  counts: BatchCounts | null;
  error: string | null;
  readyToMerge: boolean;
}

type Listener = (snapshot: TriageSnapshot) => void;

export class TriageState {
  private queue: PendingItem[] = [];
  private cursor = 0;
  private counts: BatchCounts | null = null;
  private phase: Phase = "loading";
  private error: string | null = null;
  private batchId: string | null = null;
  private listeners: Listener[] = [];
  private inFlight = false;

  constructor(private readonly api: ReviewApi) {}

  subscribe(listener: Listener): void {
    this.listeners.push(listener);
  }

  snapshot(): TriageSnapshot {
    const required = this.counts?.required ?? 0;
    const accepted = this.counts?.accepted ?? 0;
    return {
      phase: this.phase,
      batchId: this.batchId,
      queue: [...this.queue],
      cursor: this.cursor,
      counts: this.counts,
      error: this.error,
      readyToMerge: required > 0 && accepted >= required,
    };
  }

  get current(): PendingItem | null {
    return this.queue[this.cursor] ?? null;
  }

  private emit(): void {
    const snap = this.snapshot();
    for (const l of this.listeners) l(snap);
  }

  async loadBatch(batchId: string): Promise<void> {
    this.batchId = batchId;
    this.phase = "loading";
    this.error = null;
    this.emit();
    try {
      const page = await this.api.pending(batchId);
      this.queue = page.items;
      this.cursor = 0;
      this.counts = page.counts;
      this.phase = this.queue.length > 0 ? "reviewing" : "complete";
    } catch (err) {
      this.phase = "error";
      this.error = err instanceof Error ? err.message : String(err);
    }
    this.emit();
  }

  move(delta: number): void {
    if (this.queue.length === 0) return;
    const max = this.queue.length - 1;
    this.cursor = Math.min(max, Math.max(0, this.cursor + delta));
    this.emit();
  }

  /** Optimistic verdict on the current card; rollback on API failure. */
  async decide(verdict: Verdict): Promise<void> {
    const item = this.current;
    if (!item || !this.batchId || this.inFlight) return;
    const removedAt = this.cursor;
    this.queue.splice(removedAt, 1);
    this.cursor = Math.min(this.cursor, Math.max(0, this.queue.length - 1));
    this.inFlight = true;
    this.emit();
    try {
      const resp = await this.api.decide(this.batchId, item.index, verdict);
      this.counts = resp.counts;
      this.error = null;
      if (this.queue.length === 0) this.phase = "complete";
    } catch (err) {
      // restore the card exactly where it was
      this.queue.splice(removedAt, 0, item);
      this.cursor = removedAt;
      this.error = `decision failed: ${
        err instanceof Error ? err.message : String(err)
      }`;
    } finally {
      this.inFlight = false;
      this.emit();
    }
  }
}
