import { describe, expect, it } from "vitest";

import { invariantStats } from "../src/annotation.js";
import * as st from "../src/state.js";
import type { EditorState } from "../src/state.js";
import { FIXTURE_ANNOTATION, FIXTURE_PEAKS, editedAnnotation } from "./fixtures.js";

const audio: st.AudioRef = {
  duration: FIXTURE_PEAKS.duration,
  sampleRate: FIXTURE_PEAKS.sample_rate,
  peaks: FIXTURE_PEAKS.peaks,
};

const fresh = () => st.sessionState("J1", FIXTURE_ANNOTATION, audio);

describe("state transitions", () => {
  it("builds an enabled session with two tiers", () => {
    const s = fresh();
    expect(s.enabled).toBe(true);
    expect(s.banner).toBeNull();
    expect(s.tiers.map((t) => t.name)).toEqual(["words", "phones"]);
    expect(s.view).toEqual({ t0: 0, t1: audio.duration });
    expect(Object.isFrozen(s)).toBe(true);
  });

  it("runs the invariant check on every transition", () => {
    const before = invariantStats.checks;
    let s = fresh();
    s = st.select(s, 0.2, 0.9);
    s = st.zoom(s, 2);
    s = st.scroll(s, 0.1);
    s = st.clearSelection(s);
    expect(invariantStats.checks - before).toBeGreaterThanOrEqual(5);
  });

  it("orders and clamps selections", () => {
    const s = st.select(fresh(), 5.0, -1.0);
    expect(s.selection).toEqual({ t0: 0, t1: audio.duration });
    expect(st.select(fresh(), 0.4, 0.4).selection).toBeNull();
  });

  it("selects and queues playback on interval click", () => {
    const s = st.clickInterval(fresh(), 0, 1);
    const iv = fresh().tiers[0]!.intervals[1]!;
    expect(s.selection!.t0).toBeCloseTo(iv.start, 9);
    expect(s.playing).toEqual(s.selection);
    expect(st.playbackDone(s).playing).toBeNull();
  });

  it("ignores clicks on nothing", () => {
    const s = fresh();
    expect(st.clickInterval(s, 7, 0)).toBe(s);
  });

  it("zoom halves the window and clamps at the edges", () => {
    const s = st.zoom(fresh(), 2);
    expect(s.view.t1 - s.view.t0).toBeCloseTo(audio.duration / 2, 9);
    const out = st.zoom(st.zoom(fresh(), 2), 0.25);
    expect(out.view.t0).toBe(0);
    expect(out.view.t1).toBeCloseTo(audio.duration, 9);
  });

  it("scroll stays inside the audio", () => {
    let s = st.zoom(fresh(), 4);
    s = st.scroll(s, 1e6);
    expect(s.view.t1).toBeCloseTo(audio.duration, 9);
    s = st.scroll(s, -1e6);
    expect(s.view.t0).toBe(0);
  });

  it("normalizes pending words", () => {
    const s = st.setPendingWords(fresh(), ["  mama ", "", "kot"]);
    expect(s.pendingWords).toEqual(["mama", "kot"]);
    expect(st.setPendingWords(s, ["   "]).pendingWords).toBeNull();
    expect(st.setPendingWords(s, null).pendingWords).toBeNull();
  });
});

describe("realign phases", () => {
  it("allows only one request in flight", () => {
    let s = st.beginRealign(st.select(fresh(), 0.9, 1.5));
    expect(() => st.beginRealign(s)).toThrow(st.RealignInFlight);
    s = st.realignSubmitted(s, "R1");
    expect(() => st.beginRealign(s)).toThrow(st.RealignInFlight);
  });

  it("failure keeps the request ingredients for a retry", () => {
    let s = st.select(fresh(), 0.9, 1.5);
    s = st.setPendingWords(s, ["mama"]);
    s = st.realignFailed(st.realignSubmitted(st.beginRealign(s), "R1"),
      "RegionOutOfRange: region [9, 12] outside [0, 2.155]");
    expect(s.selection).toEqual({ t0: 0.9, t1: 1.5 });
    expect(s.pendingWords).toEqual(["mama"]);
    expect(s.banner).toContain("RegionOutOfRange");
    // the editor may try again from the error phase
    expect(() => st.beginRealign(s)).not.toThrow();
  });

  it("completion swaps the document and clears the edit", () => {
    let s = st.setPendingWords(st.select(fresh(), 0.9, 1.5), ["mama"]);
    s = st.realignDone(s, editedAnnotation());
    expect(s.pendingWords).toBeNull();
    expect(s.realign).toEqual({ kind: "idle" });
    expect(s.tiers[0]!.intervals.map((iv) => iv.label)).toEqual(["pan", "mama", "kot"]);
  });
});

describe("undo/redo stack", () => {
  const docState = (label: string): EditorState =>
    st.realignDone(fresh(), (() => {
      const doc = JSON.parse(JSON.stringify(FIXTURE_ANNOTATION));
      doc.levels[0].items[0].label = label;
      return doc;
    })());

  it("undo(redo(h)) and redo(undo(h)) are identities", () => {
    let h = st.history(fresh());
    h = st.push(h, docState("a"));
    h = st.push(h, docState("b"));
    h = st.undo(h);
    expect(st.canUndo(h) && st.canRedo(h)).toBe(true);

    const afterRedo = st.redo(h);
    expect(st.undo(afterRedo)).toEqual(h);
    const afterUndo = st.undo(h);
    expect(st.redo(afterUndo)).toEqual(h);
    expect(st.undo(afterRedo).present).toBe(h.present);
  });

  it("survives a random walk of operations", () => {
    // tiny deterministic LCG; no RNG dependency needed for this
    let seed = 20240817;
    const rand = () => {
      seed = (seed * 1103515245 + 12345) % 2147483648;
      return seed / 2147483648;
    };
    let h = st.history(docState("w0"));
    for (let i = 0; i < 300; i++) {
      const r = rand();
      if (r < 0.4) {
        h = st.push(h, docState(`w${i}`));
      } else if (r < 0.7) {
        const u = st.undo(h);
        if (st.canUndo(h)) {
          expect(st.redo(u)).toEqual(h);
        } else {
          expect(u).toBe(h);
        }
        h = u;
      } else {
        const d = st.redo(h);
        if (st.canRedo(h)) {
          expect(st.undo(d)).toEqual(h);
        } else {
          expect(d).toBe(h);
        }
        h = d;
      }
    }
  });

  it("push with an explicit base skips transient states", () => {
    const base = fresh();
    const transient = st.beginRealign(st.select(base, 0.9, 1.5));
    let h = st.history(base);
    h = st.replace(h, transient);
    h = st.push(h, st.realignDone(transient, editedAnnotation()), base);
    expect(st.undo(h).present).toBe(base);
  });
});
