// Wire types of the review HTTP API. The client renders from these only;
// geometry is never recomputed on this side.

export interface TaskSummary {
  task_id: string;
  scan_pair_id: string;
  object_id: number;
  key: string;
  label: string;
  status: TaskStatus;
  version: number;
}

export type TaskStatus = "pending" | "auto_resolved" | "human_resolved";

export interface SchematicObject {
  key: string;
  label: string;
  corners: [number, number][];
  wall: boolean;
  landmark: boolean;
  target: boolean;
}

export interface Candidate {
  feature_key: string;
  kind: string;
  text_fragment: string;
  landmark_label: string | null;
  rejected: boolean;
  reject_reason: string;
  preview: string;
}

export interface TaskDetail extends TaskSummary {
  object: {
    center: [number, number, number];
    half_extents: [number, number, number];
    yaw: number;
    attributes: Record<string, string[]>;
  };
  schematic: SchematicObject[];
  candidates: Candidate[];
  manual_text: string | null;
  accepted_key: string | null;
  resolved_preview: string | null;
}

export type DecisionAction = "accept" | "reject" | "manual";

export interface DecisionBody {
  action: DecisionAction;
  version: number;
  feature_key?: string;
  manual_text?: string;
  reason?: string;
  author?: string;
}

export interface RegenResult {
  queries: number;
  tasks: number;
}
