// Wire protocol shared with the session bridge (JSON over WebSocket).

export const PROTOCOL_VERSION = 1;

export type MessageKind =
  | "STATE_SNAPSHOT"
  | "DECISION_REQUEST"
  | "DECISION_REPLY"
  | "VERIFY_REQUEST"
  | "VERIFY_REPLY"
  | "EPISODE_DONE"
  | "ERROR";

export interface SessionMessage {
  kind: MessageKind;
  seq: number;
  payload: Record<string, unknown>;
}

export interface DirectionInfo {
  id: number;
  bearing: number;
  status: "active" | "retired" | "merged";
  inspected: boolean;
  support_size: number;
}

export interface StatePayload {
  protocol_version: number;
  position: [number, number];
  heading: number;
  steps: number;
  rotations: number;
  traveled_m: number;
  resolution: number;
  map_rows: string[];
  directions: DirectionInfo[];
  category: string;
}

export interface DecisionOption {
  id: number;
  bearing: number;
  support_size: number;
  snapshot: {
    captured_at_step: number;
    camera_yaw: number;
    visible_cell_count: number;
    contains_target: boolean;
  } | null;
}

export interface DecisionRequestPayload {
  request_id: number;
  category: string;
  options: DecisionOption[];
  current_choice: number | null;
}

export interface VerifyRequestPayload {
  request_id: number;
  position: [number, number];
  frame_index: number;
  suggested: string;
}

export interface EpisodeDonePayload {
  success: boolean;
  spl: number;
  steps: number;
  rotations: number;
  stop_reason: string;
  false_stop: boolean;
}
