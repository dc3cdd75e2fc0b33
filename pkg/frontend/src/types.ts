// Shapes of the control-plane payloads the console consumes.

export interface PortInfo {
  port: string;
  kind: string;
}

export interface InstanceInfo {
  instance: string;
  component: string;
  version: string;
  state: string;
  in_flight: number;
  incarnation: number;
  ports: PortInfo[];
}

export interface ConnectionInfo {
  connection: string;
  from: string; // "instance:port"
  to: string;
  adapter: string | null; // "script" | "component" | null
}

export interface GraphPayload {
  seq?: number; // latest event seq the snapshot reflects
  nodes: InstanceInfo[];
  edges: ConnectionInfo[];
}

export interface LifecycleEvent {
  seq: number;
  time: number;
  subject: string;
  action: string;
  detail: Record<string, unknown>;
}

/** NDJSON stream records: events carry a seq, control records carry "control". */
export type StreamRecord =
  | LifecycleEvent
  | { control: "resync"; oldest: number | null }
  | { control: "idle" };

export function isControl(record: StreamRecord): record is Exclude<StreamRecord, LifecycleEvent> {
  return "control" in record;
}
