// Shapes of the /api/v1 payloads. Field names mirror the service exactly.

export interface ConceptGroup {
  name: string;
  dims: number;
  kind: string;
}

export interface Schema {
  format_version: number;
  groups: ConceptGroup[];
  num_classes: number;
  class_names: string[] | null;
}

export interface Meta {
  schema: Schema;
  schema_fingerprint: string;
  class_names: string[];
  n_rows: number;
  splits: Record<string, number>;
}

export interface InstanceRow {
  index: number;
  concepts: number[];
  label: number;
  identity: string | null;
  split: string;
  true_concepts: number[] | null;
}

export interface Prediction {
  probs: number[];
  entropy_nats: number;
}

export interface PredictBody {
  concepts: number[];
  mask: number[];
}

export interface SelectBody {
  method: string;
  k: number | null;
  seed: number;
  level?: string;
  instance?: number;
  locked_in?: number[];
  excluded?: number[];
}

export interface SelectionStep {
  group: number;
  entropy_nats: number | null;
  size_after: number;
}

export interface SelectionTrace {
  format_version: number;
  method: string;
  level: string;
  n_groups: number;
  locked_in: number[];
  excluded: number[];
  instance_index: number | null;
  schema_fingerprint: string;
  initial_entropy_nats: number;
  steps: SelectionStep[];
}

export interface Selection {
  k: number;
  selected: number[];
  selected_names: string[];
  trace: SelectionTrace;
}

export interface InterveneBody {
  instance: number;
  mask: number[];
  fix_groups: number[];
  oracle: string;
}

export interface Intervention extends Prediction {
  intervened_concepts: number[];
}

export interface EvaluateBody {
  mask: number[];
  split: string;
}

export interface Evaluation {
  accuracy: number;
  mean_entropy_nats: number;
}

export interface ApiErrorBody {
  code: string;
  message: string;
  detail: unknown;
}
