/** Bundle document types, mirroring the schema_version "1" file format. */

export interface DistrictDescriptor {
  id: string;
  name: string;
  county_id: string;
  county_name: string;
  grade_span: string;
  funding_type: string;
}

export interface MetricDef {
  id: string;
  display_name: string;
  category: string;
  unit: string;
  polarity: string;
  subgrouped: boolean;
  aggregation: string;
}

/** rows: [district_id, value, rank, is_client] best-to-worst. */
export interface LeaderboardDoc {
  metric_id: string;
  year: number;
  subgroup: string;
  dropped: number;
  polarity_applied: boolean;
  rows: [string, number, number, boolean][];
}

export interface RateOfChange {
  slope: number | null;
  pct_change: number | null;
  insufficient: boolean;
}

export interface TrendPanelDoc {
  metric_id: string;
  subgroup: string;
  client: [number, number][];
  peer_median: [number, number][];
  county_mean: [number, number][];
  state_mean: [number, number][];
  rate_of_change: RateOfChange;
}

export interface ScatterDoc {
  x_metric: string;
  y_metric: string;
  year: number;
  subgroup: string;
  points: [string, number, number][];
  r: number | null;
  fit: [number, number] | null;
}

export interface SimilarityEntry {
  district_id: string;
  raw: number;
  standardized: number;
  contribution: number;
  is_client: boolean;
}

export interface SimilarityRow {
  feature: string;
  entries: SimilarityEntry[];
}

export interface PeerSetDoc {
  client: string;
  match_year: number;
  short_pool: boolean;
  members: { district_id: string; distance: number }[];
  features: Record<string, Record<string, number>>;
}

export interface Bundle {
  schema_version: string;
  generated_at: string;
  config: Record<string, unknown>;
  client: DistrictDescriptor;
  districts: Record<string, DistrictDescriptor>;
  metrics: MetricDef[];
  years: number[];
  peer_set: PeerSetDoc;
  leaderboards: LeaderboardDoc[];
  trend_panels: TrendPanelDoc[];
  scatter_presets: ScatterDoc[];
  similarity_panel: { rows: SimilarityRow[] };
  qa_summary: { suppressed_cells: number; corrected_cells: number };
}

export type FundingFilter = "all" | "state_formula" | "basic_aid";

export interface FilterState {
  year: number;
  subgroup: string;
  funding: FundingFilter;
  category: string;
  metric: string;
}
