import type { Region } from "./types.js";
import type { AudioRef } from "./state.js";

export interface WaveformColumn {
  x: number;
  yMin: number;
  yMax: number;
}

export const timeToX = (t: number, view: Region, width: number): number =>
  view.t1 > view.t0 ? ((t - view.t0) / (view.t1 - view.t0)) * width : 0;

export const xToTime = (x: number, view: Region, width: number): number =>
  width > 0 ? view.t0 + (x / width) * (view.t1 - view.t0) : view.t0;

/**
 * Project the server-provided peak envelope onto pixel columns for the
 * current view window. Columns outside the audio come back flat at mid-height.
 */
export function waveformColumns(
  audio: AudioRef,
  view: Region,
  width: number,
  height: number,
): WaveformColumn[] {
  const mid = height / 2;
  const columns: WaveformColumn[] = [];
  const nBins = audio.peaks.length;
  const binDt = nBins > 0 ? audio.duration / nBins : 0;
  for (let x = 0; x < width; x++) {
    const tA = xToTime(x, view, width);
    const tB = xToTime(x + 1, view, width);
    let lo = 0;
    let hi = 0;
    if (binDt > 0 && tB > 0 && tA < audio.duration) {
      const first = Math.max(0, Math.floor(tA / binDt));
      const last = Math.min(nBins - 1, Math.max(first, Math.ceil(tB / binDt) - 1));
      for (let b = first; b <= last; b++) {
        const pair = audio.peaks[b]!;
        if (pair[0] < lo) lo = pair[0];
        if (pair[1] > hi) hi = pair[1];
      }
    }
    columns.push({
      x,
      yMin: mid - hi * mid,
      yMax: mid - lo * mid,
    });
  }
  return columns;
}

/** SVG path tracing the min/max envelope (top edge left-to-right, bottom back). */
export function envelopePath(columns: WaveformColumn[]): string {
  if (columns.length === 0) return "";
  const fmt = (v: number) => (Math.round(v * 100) / 100).toString();
  const top = columns.map((c, i) =>
    `${i === 0 ? "M" : "L"}${fmt(c.x)} ${fmt(c.yMin)}`);
  const bottom = [...columns].reverse().map((c) => `L${fmt(c.x)} ${fmt(c.yMax)}`);
  return top.join(" ") + " " + bottom.join(" ") + " Z";
}
