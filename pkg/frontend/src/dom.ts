/**
 * Minimal DOM binding: renders the current EditorState into a container and
 * wires clicks back into the editor. Rendering is a full rebuild from the
 * layout projection — state is small, so this stays simple and obviously
 * consistent with the model.
 */

import type { Editor } from "./editor.js";
import type { EditorState } from "./state.js";
import { layoutTiers } from "./layout.js";
import { envelopePath, timeToX, waveformColumns, xToTime } from "./waveform.js";

const SVG_NS = "http://www.w3.org/2000/svg";

export interface MountOptions {
  width?: number;
  waveHeight?: number;
}

function el<K extends keyof HTMLElementTagNameMap>(
  doc: Document,
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = doc.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function renderWave(
  doc: Document,
  state: EditorState,
  width: number,
  height: number,
  editor: Editor,
): SVGSVGElement {
  const svg = doc.createElementNS(SVG_NS, "svg");
  svg.setAttribute("class", "waveform");
  svg.setAttribute("width", String(width));
  svg.setAttribute("height", String(height));
  if (state.audio !== null) {
    const path = doc.createElementNS(SVG_NS, "path");
    path.setAttribute("class", "envelope");
    path.setAttribute(
      "d", envelopePath(waveformColumns(state.audio, state.view, width, height)));
    svg.appendChild(path);
    if (state.selection !== null) {
      const rect = doc.createElementNS(SVG_NS, "rect");
      const x0 = Math.max(0, timeToX(state.selection.t0, state.view, width));
      const x1 = Math.min(width, timeToX(state.selection.t1, state.view, width));
      rect.setAttribute("class", "selection");
      rect.setAttribute("x", String(x0));
      rect.setAttribute("y", "0");
      rect.setAttribute("width", String(Math.max(0, x1 - x0)));
      rect.setAttribute("height", String(height));
      svg.appendChild(rect);
    }
    svg.addEventListener("click", (ev) => {
      const t = xToTime((ev as MouseEvent).offsetX ?? 0, state.view, width);
      editor.select(t, t + (state.view.t1 - state.view.t0) / 20);
    });
  }
  return svg;
}

export function render(editor: Editor, container: HTMLElement, opts: MountOptions = {}): void {
  const doc = container.ownerDocument;
  const width = opts.width ?? 800;
  const waveHeight = opts.waveHeight ?? 120;
  const state = editor.state;
  container.textContent = "";
  container.classList.toggle("disabled", !state.enabled);

  const banner = el(doc, "div", "banner", state.banner ?? "");
  banner.hidden = state.banner === null;
  container.appendChild(banner);

  container.appendChild(renderWave(doc, state, width, waveHeight, editor));

  const tiersBox = el(doc, "div", "tiers");
  layoutTiers(state, width).forEach((row, tierIndex) => {
    const rowEl = el(doc, "div", "tier");
    rowEl.dataset.name = row.name;
    rowEl.appendChild(el(doc, "span", "tier-name", row.name));
    const lane = el(doc, "div", "lane");
    for (const box of row.boxes) {
      const ivEl = el(doc, "div", box.selected ? "interval selected" : "interval",
        box.label);
      ivEl.style.left = `${box.x}px`;
      ivEl.style.width = `${box.width}px`;
      if (box.score !== undefined) ivEl.title = box.score.toFixed(2);
      ivEl.addEventListener("click", () => editor.clickInterval(tierIndex, box.index));
      lane.appendChild(ivEl);
    }
    rowEl.appendChild(lane);
    tiersBox.appendChild(rowEl);
  });
  container.appendChild(tiersBox);

  const controls = el(doc, "div", "controls");
  const button = (label: string, cls: string, onClick: () => void, enabled = true) => {
    const b = el(doc, "button", cls, label);
    b.disabled = !enabled;
    b.addEventListener("click", onClick);
    controls.appendChild(b);
  };
  button("−", "zoom-out", () => editor.zoom(0.5), state.enabled);
  button("+", "zoom-in", () => editor.zoom(2), state.enabled);
  button("undo", "undo", () => editor.undo(), editor.canUndo);
  button("redo", "redo", () => editor.redo(), editor.canRedo);
  const busy = state.realign.kind === "submitting" || state.realign.kind === "waiting";
  button(
    state.realign.kind === "error" ? "retry re-align" : "re-align",
    "realign",
    () => { void editor.requestRealign(); },
    state.enabled && state.selection !== null && !busy,
  );
  if (busy) controls.appendChild(el(doc, "span", "spinner", "aligning…"));

  const words = el(doc, "input", "words") as HTMLInputElement;
  words.placeholder = "corrected words for the selected region";
  words.value = state.pendingWords?.join(" ") ?? "";
  words.disabled = !state.enabled || state.selection === null;
  words.addEventListener("change", () => {
    editor.setWords(words.value.trim() === "" ? null : words.value.split(/\s+/));
  });
  controls.appendChild(words);
  container.appendChild(controls);
}

/** Render now and on every state change; returns an unmount function. */
export function mount(editor: Editor, container: HTMLElement, opts: MountOptions = {}): () => void {
  const draw = () => render(editor, container, opts);
  const unsubscribe = editor.onChange(draw);
  draw();
  return () => {
    unsubscribe();
    container.textContent = "";
  };
}
