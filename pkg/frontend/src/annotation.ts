import type { AnnotationDoc, AnnotationItem, AnnotationLevel, Region } from "./types.js";

export const ANNOTATION_VERSION = 1;

export class AnnotationError extends Error {}

/** Thrown when a state update produces tiers that violate the layout rules. */
export class InvariantViolation extends Error {}

/** One rendered interval, in seconds. */
export interface TierInterval {
  label: string;
  start: number;
  end: number;
  score?: number;
}

export interface Tier {
  name: string;
  intervals: TierInterval[];
}

function asItem(raw: unknown, where: string): AnnotationItem {
  if (typeof raw !== "object" || raw === null) {
    throw new AnnotationError(`${where}: item is not an object`);
  }
  const rec = raw as Record<string, unknown>;
  const { label, start, duration, score } = rec;
  if (typeof label !== "string") {
    throw new AnnotationError(`${where}: missing string label`);
  }
  if (!Number.isInteger(start) || (start as number) < 0) {
    throw new AnnotationError(`${where}: start must be a non-negative integer`);
  }
  if (!Number.isInteger(duration) || (duration as number) < 0) {
    throw new AnnotationError(`${where}: duration must be a non-negative integer`);
  }
  const item: AnnotationItem = {
    label,
    start: start as number,
    duration: duration as number,
  };
  if (score !== undefined) {
    if (typeof score !== "number" || !Number.isFinite(score)) {
      throw new AnnotationError(`${where}: score must be a finite number`);
    }
    item.score = score;
  }
  return item;
}

/**
 * Parse and validate an annotation document (string or decoded JSON).
 *
 * Rejects unknown versions and malformed items up front so downstream code
 * can treat the document as trusted.
 */
export function parseAnnotation(payload: unknown): AnnotationDoc {
  let raw: unknown = payload;
  if (typeof raw === "string") {
    try {
      raw = JSON.parse(raw);
    } catch (e) {
      throw new AnnotationError(`annotation is not valid JSON: ${String(e)}`);
    }
  }
  if (typeof raw !== "object" || raw === null) {
    throw new AnnotationError("annotation is not an object");
  }
  const doc = raw as Record<string, unknown>;
  if (doc.version !== ANNOTATION_VERSION) {
    throw new AnnotationError(`unsupported annotation version ${String(doc.version)}`);
  }
  const sampleRate = doc.sample_rate;
  if (!Number.isInteger(sampleRate) || (sampleRate as number) <= 0) {
    throw new AnnotationError("sample_rate must be a positive integer");
  }
  if (!Array.isArray(doc.levels)) {
    throw new AnnotationError("levels must be an array");
  }
  const levels: AnnotationLevel[] = doc.levels.map((lvl, i) => {
    if (typeof lvl !== "object" || lvl === null) {
      throw new AnnotationError(`level ${i} is not an object`);
    }
    const rec = lvl as Record<string, unknown>;
    if (typeof rec.name !== "string") {
      throw new AnnotationError(`level ${i}: missing string name`);
    }
    if (!Array.isArray(rec.items)) {
      throw new AnnotationError(`level ${i}: items must be an array`);
    }
    return {
      name: rec.name,
      type: typeof rec.type === "string" ? rec.type : "interval",
      items: rec.items.map((it, j) => asItem(it, `level ${rec.name} item ${j}`)),
    };
  });
  return {
    version: ANNOTATION_VERSION,
    sample_rate: sampleRate as number,
    audio: typeof doc.audio === "string" ? doc.audio : "",
    levels,
  };
}

/** Convert one level to a rendered tier (seconds). */
export function tierFromLevel(level: AnnotationLevel, sampleRate: number): Tier {
  return {
    name: level.name,
    intervals: level.items.map((it) => {
      const iv: TierInterval = {
        label: it.label,
        start: it.start / sampleRate,
        end: (it.start + it.duration) / sampleRate,
      };
      if (it.score !== undefined) iv.score = it.score;
      return iv;
    }),
  };
}

export function tiersOf(doc: AnnotationDoc | null): Tier[] {
  if (doc === null) return [];
  return doc.levels.map((lvl) => tierFromLevel(lvl, doc.sample_rate));
}

/**
 * Counters around the tier invariant check, so a scripted test run can
 * verify the assertion actually executed on every state update (and that it
 * never threw).
 */
export const invariantStats = { checks: 0, violations: 0 };

const EPS = 1e-9;

/**
 * Assert the rendering invariant: in every tier, intervals are sorted by
 * start time, have non-negative length, and do not overlap.
 */
export function assertTiers(tiers: Tier[]): void {
  invariantStats.checks += 1;
  for (const tier of tiers) {
    let prevEnd = -Infinity;
    let prevStart = -Infinity;
    for (const iv of tier.intervals) {
      if (!(iv.end >= iv.start - EPS)) {
        invariantStats.violations += 1;
        throw new InvariantViolation(
          `tier ${tier.name}: interval "${iv.label}" ends before it starts`);
      }
      if (iv.start < prevStart - EPS) {
        invariantStats.violations += 1;
        throw new InvariantViolation(`tier ${tier.name}: intervals out of order`);
      }
      if (iv.start < prevEnd - EPS) {
        invariantStats.violations += 1;
        throw new InvariantViolation(
          `tier ${tier.name}: interval "${iv.label}" overlaps its predecessor`);
      }
      prevStart = iv.start;
      prevEnd = iv.end;
    }
  }
}

export function levelByName(doc: AnnotationDoc, name: string): AnnotationLevel {
  const level = doc.levels.find((l) => l.name === name);
  if (level === undefined) {
    throw new AnnotationError(`annotation has no level named "${name}"`);
  }
  return level;
}

/** Items of one level that lie entirely outside [region.t0, region.t1]. */
export function itemsOutside(
  doc: AnnotationDoc,
  name: string,
  region: Region,
): AnnotationItem[] {
  const sr = doc.sample_rate;
  return levelByName(doc, name).items.filter(
    (it) => (it.start + it.duration) / sr <= region.t0 + EPS
      || it.start / sr >= region.t1 - EPS,
  );
}

export function sameDoc(a: AnnotationDoc | null, b: AnnotationDoc | null): boolean {
  return JSON.stringify(a) === JSON.stringify(b);
}
