// Canonical class order shared with the service: manifests, model outputs,
// and score objects all use this ordering, and ties resolve to the earliest
// entry.
export const CANONICAL_LABELS = [
  "balcony",
  "bathroom",
  "bedroom",
  "hall",
  "kitchen",
  "others",
] as const;

export type ClassLabel = (typeof CANONICAL_LABELS)[number];

export type PredictionScores = Record<ClassLabel, number>;
