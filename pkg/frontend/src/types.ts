/**
 * Wire formats shared with the alignment service.
 *
 * The annotation document is the service's `alignment.json` artifact:
 * sample-accurate interval levels ("words", "phones") over one audio file.
 * Offsets are integer sample counts, never seconds, so values survive a
 * round trip through JSON without drift.
 */

export interface AnnotationItem {
  label: string;
  /** Start offset in samples. */
  start: number;
  /** Length in samples. */
  duration: number;
  /** Mean per-frame acoustic score, when the producer had one. */
  score?: number;
}

export interface AnnotationLevel {
  name: string;
  /** Currently always "interval". */
  type: string;
  items: AnnotationItem[];
}

export interface AnnotationDoc {
  version: number;
  sample_rate: number;
  audio: string;
  levels: AnnotationLevel[];
}

export interface ArtifactInfo {
  size: number;
  media_type: string;
}

export interface JobError {
  kind: string;
  message: string;
}

export type JobState = "queued" | "running" | "done" | "failed";

/** Public job record returned by GET /jobs/{id}. */
export interface JobRecord {
  id: string;
  tool: string;
  state: JobState;
  params: Record<string, unknown>;
  inputs: Record<string, ArtifactInfo>;
  results: Record<string, ArtifactInfo>;
  error: JobError | null;
  created: number;
  started: number | null;
  finished: number | null;
}

/** Downsampled waveform envelope from GET /jobs/{id}/peaks. */
export interface PeaksResponse {
  duration: number;
  sample_rate: number;
  bins: number;
  /** Per-bin [min, max] sample values in [-1, 1]. */
  peaks: [number, number][];
}

/** Half-open-ish time region in seconds, t0 < t1. */
export interface Region {
  t0: number;
  t1: number;
}
