// Wire shapes of the carenet HTTP API. The dashboard never invents
// numbers: everything rendered is traceable to one of these payloads.

export type DayStatus = "positive" | "negative" | "missing";

export interface GateDayEntry {
  date: string;
  likelihood: number | null;
  status: DayStatus;
}

export interface GateCriterion {
  label: string;
  present: boolean;
  positive_days: number;
  days: GateDayEntry[];
}

export interface GateView {
  as_of: string;
  user_id: string;
  window_days: number;
  required_days: number;
  threshold: number;
  config_hash: string;
  criteria: Record<string, GateCriterion>;
  present_count: number;
  episode: boolean;
  dataset?: string;
}

export interface EpisodeView {
  as_of: string;
  user_id: string;
  config_hash: string;
  min_criteria: number;
  core_criteria: string[];
  present: Record<string, boolean>;
  present_count: number;
  core_present: string[];
  episode: boolean;
  dataset?: string;
}

export interface SeriesDay {
  date: string;
  likelihood: number | null;
  valid: boolean;
  positive: boolean | null;
}

export interface LikelihoodSeries {
  criterion: string;
  label: string;
  dataset: string;
  user_id: string;
  config_hash: string;
  threshold: number;
  from: string;
  to: string;
  days: SeriesDay[];
}

export interface MembershipDoc {
  lo: number;
  mid: number;
  hi: number;
  inverted?: boolean;
}

export interface FeatureDoc {
  name: string;
  weight: number;
  membership: MembershipDoc;
  polarity?: number;
  comment?: string;
}

export interface ComponentDoc {
  name: string;
  weight: number;
  features: FeatureDoc[];
  comment?: string;
}

export interface CriterionDoc {
  key: string;
  label: string;
  core: boolean;
  aggregation: string;
  tau?: number;
  components: ComponentDoc[];
  comment?: string;
}

export interface ConfigDoc {
  version: number;
  gate: { M: number; N: number; theta: number };
  tau: number;
  validity_threshold: number;
  episode: { min_criteria: number; core: string[] };
  criteria: CriterionDoc[];
  comment?: string;
}

export interface ConfigResponse {
  config_hash: string;
  warnings: string[];
  config: ConfigDoc;
}

export interface PutConfigResponse {
  config_hash: string;
  warnings: string[];
}

export interface RecomputeResponse {
  dataset: string;
  config_hash: string;
  users: string[];
  files: number;
  run_id: string;
}

export interface FieldError {
  path: string;
  message: string;
}
