/** Payload shapes of the prediction service API. */

export interface ScenarioDoc {
  scenario?: {
    center?: [number, number];
    r_un?: number;
    spacing?: number;
    d_min?: number;
    h_b?: number;
    sp_angles_deg?: number[];
    exclusion_radius_m?: number;
    device_height_m?: number;
  };
  channel?: Record<string, number>;
  twr?: Record<string, number>;
  requirements?: {
    eta_req_m?: number;
    p_fa?: number;
    p_md?: number;
    eta_t_m?: number;
  };
}

export interface Job {
  id: string;
  kind: string;
  state: 'queued' | 'running' | 'done' | 'failed';
  progress: number;
  result_id: string | null;
  error: string | null;
}

export interface ResultSummary {
  eta_star: number | null;
  unbounded: boolean;
  meets_requirement: boolean;
  n_points: number;
  n_ok: number;
  n_unbounded: number;
  n_unavailable: number;
  scenario_hash: string;
  dem_hash: string;
  eta_req: number;
  eta_t: number;
  [key: string]: unknown;
}

export type PointStatus = 'ok' | 'unbounded' | 'unavailable';

/**
 * One heatmap sample point.  Raw column strings are kept verbatim so
 * displayed values are traceable to the service payload byte for byte.
 */
export interface HeatmapPoint {
  m: number;
  x: number;
  y: number;
  eta: number;
  status: PointStatus;
  raw: { etaX: string; etaY: string; eta: string };
}

export interface VoteVectors {
  v_u_x: number[];
  v_fo_x: number[];
  v_u_y: number[];
  v_fo_y: number[];
}

export interface HazardAreaReport {
  id: number;
  members: number[];
  votes: VoteVectors;
  raw_votes: Record<string, number[]>;
}

export interface HazardReport {
  scenario_hash: string;
  result_id: string;
  eta_t: number;
  k: number;
  areas: HazardAreaReport[];
  guidance: string;
}
