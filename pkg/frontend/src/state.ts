/**
 * Editor state and its pure transitions.
 *
 * Every transition returns a brand-new frozen state that has passed the tier
 * invariant check; nothing here touches the network or the DOM. Undo/redo is
 * a plain state stack over these values.
 */

import type { AnnotationDoc, Region } from "./types.js";
import { assertTiers, InvariantViolation, Tier, tiersOf } from "./annotation.js";

export class RealignInFlight extends Error {}

export type RealignPhase =
  | { kind: "idle" }
  | { kind: "submitting" }
  | { kind: "waiting"; jobId: string }
  | { kind: "error"; message: string };

export interface AudioRef {
  duration: number;
  sampleRate: number;
  peaks: [number, number][];
}

export interface EditorState {
  /** The alignment job this session edits. */
  jobId: string;
  /** False while the job is not done (or failed): viewer only, no edits. */
  enabled: boolean;
  /** Status or error text shown above the waveform; null hides the banner. */
  banner: string | null;
  audio: AudioRef | null;
  doc: AnnotationDoc | null;
  /** Rendered projection of `doc`; recomputed whenever `doc` changes. */
  tiers: Tier[];
  /** Visible time window, seconds. */
  view: Region;
  selection: Region | null;
  /** Replacement words for the selected region; null means identity. */
  pendingWords: string[] | null;
  realign: RealignPhase;
  /** Region queued for playback after a click, consumed by the view layer. */
  playing: Region | null;
}

const MIN_VIEW = 0.001;

function commit(state: EditorState): EditorState {
  assertTiers(state.tiers);
  if (state.selection !== null && !(state.selection.t0 < state.selection.t1)) {
    throw new InvariantViolation("selection must have t0 < t1");
  }
  if (!(state.view.t0 <= state.view.t1)) {
    throw new InvariantViolation("view window inverted");
  }
  return Object.freeze(state);
}

export function disabledState(jobId: string, banner: string): EditorState {
  return commit({
    jobId,
    enabled: false,
    banner,
    audio: null,
    doc: null,
    tiers: [],
    view: { t0: 0, t1: 0 },
    selection: null,
    pendingWords: null,
    realign: { kind: "idle" },
    playing: null,
  });
}

export function sessionState(
  jobId: string,
  doc: AnnotationDoc,
  audio: AudioRef,
): EditorState {
  return commit({
    jobId,
    enabled: true,
    banner: null,
    audio,
    doc,
    tiers: tiersOf(doc),
    view: { t0: 0, t1: audio.duration },
    selection: null,
    pendingWords: null,
    realign: { kind: "idle" },
    playing: null,
  });
}

function duration(state: EditorState): number {
  return state.audio ? state.audio.duration : 0;
}

const clamp = (x: number, lo: number, hi: number) => Math.min(hi, Math.max(lo, x));

export function select(state: EditorState, t0: number, t1: number): EditorState {
  const dur = duration(state);
  const a = clamp(Math.min(t0, t1), 0, dur);
  const b = clamp(Math.max(t0, t1), 0, dur);
  const selection = b - a > 0 ? { t0: a, t1: b } : null;
  return commit({ ...state, selection, pendingWords: selection ? state.pendingWords : null });
}

export function clearSelection(state: EditorState): EditorState {
  return commit({ ...state, selection: null, pendingWords: null, playing: null });
}

/** Click on an interval: select it and queue it for playback. */
export function clickInterval(
  state: EditorState,
  tierIndex: number,
  intervalIndex: number,
): EditorState {
  const tier = state.tiers[tierIndex];
  const iv = tier?.intervals[intervalIndex];
  if (iv === undefined) return state;
  const region = { t0: iv.start, t1: Math.max(iv.end, iv.start + MIN_VIEW) };
  return commit({ ...state, selection: region, playing: region });
}

export function playbackDone(state: EditorState): EditorState {
  return state.playing === null ? state : commit({ ...state, playing: null });
}

export function setPendingWords(state: EditorState, words: string[] | null): EditorState {
  const cleaned = words?.map((w) => w.trim()).filter((w) => w.length > 0) ?? null;
  return commit({
    ...state,
    pendingWords: cleaned !== null && cleaned.length > 0 ? cleaned : null,
  });
}

export function zoom(state: EditorState, factor: number, center?: number): EditorState {
  if (!(factor > 0)) return state;
  const dur = duration(state);
  const { t0, t1 } = state.view;
  const c = center !== undefined ? clamp(center, 0, dur) : (t0 + t1) / 2;
  const half = Math.max((t1 - t0) / factor, MIN_VIEW) / 2;
  let a = c - half;
  let b = c + half;
  if (a < 0) { b -= a; a = 0; }
  if (b > dur) { a -= b - dur; b = dur; }
  return commit({ ...state, view: { t0: Math.max(0, a), t1: Math.min(dur, b) } });
}

export function scroll(state: EditorState, dt: number): EditorState {
  const dur = duration(state);
  const width = state.view.t1 - state.view.t0;
  const t0 = clamp(state.view.t0 + dt, 0, Math.max(0, dur - width));
  return commit({ ...state, view: { t0, t1: t0 + width } });
}

/**
 * Enter the submitting phase. Rejects with RealignInFlight while an earlier
 * request is still submitting or waiting — at most one mutation in flight.
 */
export function beginRealign(state: EditorState): EditorState {
  if (state.realign.kind === "submitting" || state.realign.kind === "waiting") {
    throw new RealignInFlight("a re-alignment request is already in flight");
  }
  return commit({ ...state, realign: { kind: "submitting" }, banner: null });
}

export function realignSubmitted(state: EditorState, jobId: string): EditorState {
  return commit({ ...state, realign: { kind: "waiting", jobId } });
}

/** Merge the re-aligned document returned by the service. */
export function realignDone(state: EditorState, doc: AnnotationDoc): EditorState {
  return commit({
    ...state,
    doc,
    tiers: tiersOf(doc),
    pendingWords: null,
    realign: { kind: "idle" },
    banner: null,
    playing: null,
  });
}

/**
 * Failure keeps the selection and pending words intact so the same request
 * can be retried, and surfaces the service message verbatim.
 */
export function realignFailed(state: EditorState, message: string): EditorState {
  return commit({ ...state, realign: { kind: "error", message }, banner: message });
}

// --- undo/redo ------------------------------------------------------------

export interface History {
  past: EditorState[];
  present: EditorState;
  future: EditorState[];
}

export function history(present: EditorState): History {
  return { past: [], present, future: [] };
}

/**
 * Record a new present. `base` overrides which state undo should restore —
 * used to skip transient submitting/waiting states.
 */
export function push(h: History, next: EditorState, base?: EditorState): History {
  return { past: [...h.past, base ?? h.present], present: next, future: [] };
}

/** Replace the present without recording history (view changes, transients). */
export function replace(h: History, next: EditorState): History {
  return { past: h.past, present: next, future: h.future };
}

export const canUndo = (h: History): boolean => h.past.length > 0;
export const canRedo = (h: History): boolean => h.future.length > 0;

export function undo(h: History): History {
  if (!canUndo(h)) return h;
  const past = h.past.slice(0, -1);
  const present = h.past[h.past.length - 1]!;
  return { past, present, future: [h.present, ...h.future] };
}

export function redo(h: History): History {
  if (!canRedo(h)) return h;
  const [present, ...future] = h.future as [EditorState, ...EditorState[]];
  return { past: [...h.past, h.present], present, future };
}
