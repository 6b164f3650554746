import { JobFailed, PollTimeout, ServiceClient, ServiceError } from "./api.js";
import * as st from "./state.js";
import type { EditorState } from "./state.js";

export type Listener = (state: EditorState) => void;

function describe(err: unknown): string {
  if (err instanceof ServiceError) return `${err.kind}: ${err.message}`;
  if (err instanceof JobFailed) return `${err.kind}: ${err.message}`;
  if (err instanceof PollTimeout) return `timed out: ${err.message}`;
  if (err instanceof Error) return err.message;
  return String(err);
}

/**
 * Alignment review session: owns the state history, talks to the service,
 * and notifies listeners after every state change. All document mutations go
 * through the service; the browser never computes alignment itself.
 */
export class Editor {
  private hist: st.History;
  private listeners: Listener[] = [];

  constructor(readonly client: ServiceClient, initial: EditorState) {
    this.hist = st.history(initial);
  }

  get state(): EditorState {
    return this.hist.present;
  }

  onChange(listener: Listener): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  private emit(): void {
    for (const listener of this.listeners) listener(this.state);
  }

  /** Replace the present state; only document changes record history. */
  private set(next: EditorState): void {
    this.hist = st.replace(this.hist, next);
    this.emit();
  }

  private record(next: EditorState, base: EditorState): void {
    this.hist = st.push(this.hist, next, base);
    this.emit();
  }

  /**
   * Open an alignment job in the editor. A job that is not done yet (or
   * failed) yields a disabled viewer with the reason in the banner.
   */
  static async load(client: ServiceClient, jobId: string): Promise<Editor> {
    let record;
    try {
      record = await client.getJob(jobId);
    } catch (err) {
      return new Editor(client, st.disabledState(jobId, describe(err)));
    }
    if (record.state === "failed") {
      const e = record.error ?? { kind: "JobFailed", message: "job failed" };
      return new Editor(client, st.disabledState(jobId, `${e.kind}: ${e.message}`));
    }
    if (record.state !== "done") {
      return new Editor(
        client, st.disabledState(jobId, `job ${jobId} is ${record.state}`));
    }
    try {
      const [doc, peaks] = await Promise.all([
        client.getAnnotation(jobId),
        client.getPeaks(jobId),
      ]);
      const audio: st.AudioRef = {
        duration: peaks.duration,
        sampleRate: peaks.sample_rate,
        peaks: peaks.peaks,
      };
      return new Editor(client, st.sessionState(jobId, doc, audio));
    } catch (err) {
      return new Editor(client, st.disabledState(jobId, describe(err)));
    }
  }

  select(t0: number, t1: number): void {
    this.set(st.select(this.state, t0, t1));
  }

  clearSelection(): void {
    this.set(st.clearSelection(this.state));
  }

  clickInterval(tierIndex: number, intervalIndex: number): void {
    this.set(st.clickInterval(this.state, tierIndex, intervalIndex));
  }

  playbackDone(): void {
    this.set(st.playbackDone(this.state));
  }

  setWords(words: string[] | null): void {
    this.set(st.setPendingWords(this.state, words));
  }

  zoom(factor: number, center?: number): void {
    this.set(st.zoom(this.state, factor, center));
  }

  scroll(dt: number): void {
    this.set(st.scroll(this.state, dt));
  }

  undo(): void {
    this.hist = st.undo(this.hist);
    this.emit();
  }

  redo(): void {
    this.hist = st.redo(this.hist);
    this.emit();
  }

  get canUndo(): boolean {
    return st.canUndo(this.hist);
  }

  get canRedo(): boolean {
    return st.canRedo(this.hist);
  }

  /**
   * Re-align the selected region through the service, using the pending word
   * edits (or identity when none are set). Rejects synchronously with
   * RealignInFlight while an earlier request is pending; on failure the
   * selection and edits survive so the request can simply be retried.
   */
  async requestRealign(): Promise<void> {
    const before = this.state;
    if (!before.enabled || before.doc === null) {
      throw new Error("editor is not loaded");
    }
    const region = before.selection;
    if (region === null) {
      throw new Error("no region selected");
    }
    this.set(st.beginRealign(before));
    try {
      const { id } = await this.client.postRealign(
        before.jobId, region, before.pendingWords);
      this.set(st.realignSubmitted(this.state, id));
      await this.client.waitForJob(id);
      const doc = await this.client.getAnnotation(id);
      this.record(st.realignDone(this.state, doc), before);
    } catch (err) {
      this.set(st.realignFailed(this.state, describe(err)));
    }
  }
}
