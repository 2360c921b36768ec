/**
 * Shapes of the demo-service HTTP API. Field names mirror the server
 * contract exactly; the UI renders these values and nothing else.
 */

export interface LatLon {
  lat: number;
  lon: number;
}

export interface ThreatEntry {
  type_id: string;
  classification: string;
  access_mode: string;
  severity: "low" | "medium" | "high";
  threat_texts: string[];
}

export interface ThreatReport {
  app_id: string;
  entries: ThreatEntry[];
}

export interface PipelineStage {
  pet_id: string;
  params: Record<string, unknown>;
}

export interface PrivacyRule {
  app_id: string;
  type_id: string;
  access_mode: string;
  pipeline: PipelineStage[];
  policy: string;
  max_rate_hz: number;
  max_staleness_s: number;
  epsilon_per_disclosure: number;
  selection_basis: string;
}

export interface InstallResponse {
  threats: ThreatReport;
  rules: PrivacyRule[];
}

export interface Poi {
  id: string;
  category: string;
  lat: number;
  lon: number;
  name: string;
}

export interface QueryResponse {
  disclosed: LatLon;
  pois: Poi[];
  privacy: {
    index: number;
    cumulative_epsilon: number;
    inference_error_m: number;
  };
}

export interface EpsilonPoint {
  index: number;
  t_ms: number;
  app_id: string;
  cumulative_epsilon: number;
}

export interface InferencePoint {
  index: number;
  t_ms: number;
  inference_error_m: number;
}

export interface StreamPlanEntry {
  item_key: string;
  type_id: string;
  period_s: number;
  subscribers: string[];
}

export interface BandwidthCounters {
  bundles_sent: number;
  entries_sent: number;
  duplicate_entries: number;
  bytes_sent: number;
  naive_entries: number;
  planned_entries: number;
}

export interface StateSnapshot {
  t_ms: number;
  playing: boolean;
  state_version: number;
  true_location: LatLon;
  has_gps_fix: boolean;
  last_disclosed: LatLon | null;
  apps: string[];
  epsilon_series: EpsilonPoint[];
  inference_error_series: InferencePoint[];
  disclosure_count: number;
  ledger_length: number;
  stream_plan: StreamPlanEntry[];
  bandwidth: BandwidthCounters;
}

export interface ApiErrorBody {
  error: string;
  message?: string;
}

export type EpsilonPreset = "low" | "medium" | "high";
export const EPSILON_PRESETS: readonly EpsilonPreset[] = ["low", "medium", "high"];
