/**
 * Pure projection of EditorState to a pixel layout: what the DOM layer (or a
 * test) draws, with no side effects. Rendering re-asserts the tier invariant
 * so a corrupted state can never be drawn.
 */

import type { EditorState } from "./state.js";
import { assertTiers } from "./annotation.js";
import { timeToX } from "./waveform.js";

export interface IntervalBox {
  label: string;
  /** Index into the tier's interval list (click target). */
  index: number;
  x: number;
  width: number;
  selected: boolean;
  score?: number;
}

export interface TierRow {
  name: string;
  boxes: IntervalBox[];
}

export function layoutTiers(state: EditorState, width: number): TierRow[] {
  assertTiers(state.tiers);
  const view = state.view;
  const sel = state.selection;
  return state.tiers.map((tier) => {
    const boxes: IntervalBox[] = [];
    tier.intervals.forEach((iv, index) => {
      if (iv.end <= view.t0 || iv.start >= view.t1) return;
      const x0 = Math.max(0, timeToX(iv.start, view, width));
      const x1 = Math.min(width, timeToX(iv.end, view, width));
      const box: IntervalBox = {
        label: iv.label,
        index,
        x: x0,
        width: Math.max(1, x1 - x0),
        selected: sel !== null && iv.start < sel.t1 && iv.end > sel.t0,
      };
      if (iv.score !== undefined) box.score = iv.score;
      boxes.push(box);
    });
    return { name: tier.name, boxes };
  });
}
