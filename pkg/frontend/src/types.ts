export interface PatientSummary {
  stay_id: string;
  admitted_at: string;
  length_s: number;
  n_grid: number;
  channels: string[];
  has_predictions: boolean;
  n_events: number;
}

export interface ChannelInfo {
  channel: string;
  n_raw: number;
  first_s: number;
  last_s: number;
}

export interface PatientDetail extends PatientSummary {
  grid_step: number;
  statics: Record<string, number | string>;
  channels: any;
}

export interface SeriesChannel {
  time_s: number[];
  value: number[];
  n: number;
}

export interface SeriesResponse {
  stay_id: string;
  mode: string;
  grid_step: number;
  channels: Record<string, SeriesChannel>;
}

export interface Predictions {
  stay_id: string;
  time_s: number[];
  score: (number | null)[];
}

export interface EventSpan {
  start_s: number;
  end_s: number;
  type: string;
}

export interface Annotation {
  annotation_id: string;
  stay_id: string;
  type: string;
  start_s: number;
  end_s: number;
  label: string;
  metadata: Record<string, unknown>;
  color: string | null;
  version: number;
  created_at: string;
  updated_at: string;
}

export interface AnnotationTypeDef {
  type: string;
  default_color: string;
  schema: JsonSchema;
}

export interface JsonSchema {
  type?: string;
  properties?: Record<string, JsonSchema>;
  required?: string[];
  enum?: (string | number)[];
  additionalProperties?: boolean;
}

/** Channel-to-plot assignment: one entry per plot, top to bottom. */
export interface PlotConfig {
  channels: string[];
  height: number;
  yAxes: Record<string, 0 | 1>; // channel -> axis side, at most 2 axes
  yRange?: [number | null, number | null];
}

export interface TabConfig {
  name: string;
  plots: PlotConfig[];
}

export interface ViewConfig {
  tabs: TabConfig[];
}
