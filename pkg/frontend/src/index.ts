export * from "./types.js";
export {
  ANNOTATION_VERSION,
  AnnotationError,
  InvariantViolation,
  Tier,
  TierInterval,
  assertTiers,
  invariantStats,
  itemsOutside,
  levelByName,
  parseAnnotation,
  sameDoc,
  tiersOf,
} from "./annotation.js";
export * from "./state.js";
export * from "./api.js";
export * from "./waveform.js";
export * from "./layout.js";
export * from "./editor.js";
export * from "./dom.js";
