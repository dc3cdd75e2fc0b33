// Pure view state derived from API payloads and lifecycle events.
//
// The console computes nothing of its own: every node and edge fact comes
// either from a GET /api/graph snapshot or from an event's subject/detail.
// Events whose structural consequences are not fully carried in the event
// (a brand-new instance's ports, a swap's rebound targets) set `resync`,
// telling the owner to refetch the snapshot — the event-driven analog of a
// gap in the stream.

import type { ConnectionInfo, GraphPayload, InstanceInfo, LifecycleEvent } from "./types.js";

export interface NodeView {
  instance: string;
  component: string;
  version: string;
  incarnation: number;
  state: string;
  draining: boolean; // an older incarnation is still finishing requests
  ports: { port: string; kind: string }[];
}

export interface EdgeView {
  connection: string;
  from: string;
  to: string;
  adapter: string | null;
}

export interface ViewState {
  nodes: Map<string, NodeView>;
  edges: Map<string, EdgeView>;
  timeline: LifecycleEvent[];
  lastSeq: number;
}

export const TIMELINE_LIMIT = 200;

export function emptyState(): ViewState {
  return { nodes: new Map(), edges: new Map(), timeline: [], lastSeq: 0 };
}

export function fromSnapshot(graph: GraphPayload, previous?: ViewState): ViewState {
  const nodes = new Map<string, NodeView>();
  for (const inst of graph.nodes) {
    nodes.set(inst.instance, {
      instance: inst.instance,
      component: inst.component,
      version: inst.version,
      incarnation: inst.incarnation,
      state: inst.state,
      draining: inst.state === "Draining",
      ports: inst.ports,
    });
  }
  const edges = new Map<string, EdgeView>();
  for (const conn of graph.edges) {
    edges.set(conn.connection, { ...conn });
  }
  return {
    nodes,
    edges,
    timeline: previous ? previous.timeline : [],
    lastSeq: Math.max(previous?.lastSeq ?? 0, graph.seq ?? 0),
  };
}

export interface ApplyResult {
  state: ViewState;
  resync: boolean;
}

/** Apply one lifecycle event; flags when a snapshot refetch is required. */
export function applyEvent(state: ViewState, event: LifecycleEvent): ApplyResult {
  const next: ViewState = {
    nodes: new Map(state.nodes),
    edges: new Map(state.edges),
    timeline: [...state.timeline, event].slice(-TIMELINE_LIMIT),
    lastSeq: Math.max(state.lastSeq, event.seq),
  };
  let resync = false;
  const detail = event.detail ?? {};
  const node = next.nodes.get(event.subject);

  switch (event.action) {
    case "Instantiated": {
      const [component, version] = String(detail.component ?? "@").split("@");
      const incarnation = Number(detail.incarnation ?? 1);
      if (node) {
        next.nodes.set(event.subject, {
          ...node,
          component: component || node.component,
          version: version || node.version,
          incarnation,
        });
      } else {
        // ports are not carried in the event: show what we know, refetch
        next.nodes.set(event.subject, {
          instance: event.subject,
          component: component || "?",
          version: version || "?",
          incarnation,
          state: "Loaded",
          draining: false,
          ports: [],
        });
        resync = true;
      }
      break;
    }
    case "Activated":
      if (node) next.nodes.set(event.subject, { ...node, state: "Active" });
      break;
    case "Rebound":
      if (typeof detail.from === "string" && typeof detail.to === "string") {
        next.edges.set(event.subject, {
          connection: event.subject,
          from: detail.from,
          to: detail.to,
          adapter: (detail.adapter as string | null) ?? null,
        });
      } else {
        // an instance swap rebinding several connections: targets not carried
        resync = true;
      }
      break;
    case "DrainStarted":
      if (node) next.nodes.set(event.subject, { ...node, draining: true });
      break;
    case "Released":
      if (node) {
        if (Number(detail.incarnation ?? node.incarnation) === node.incarnation) {
          next.nodes.delete(event.subject); // unload: nothing replaced it
        } else {
          next.nodes.set(event.subject, { ...node, draining: false });
        }
      }
      break;
    case "ConfigChanged":
      if (next.edges.has(event.subject) && "adapter" in detail) {
        const edge = next.edges.get(event.subject)!;
        next.edges.set(event.subject, {
          ...edge,
          adapter: (detail.adapter as string | null) ?? null,
        });
      }
      break;
    case "Unloaded":
      if (detail.kind === "connection") {
        next.edges.delete(event.subject);
      }
      break;
    default:
      // Scanned / Loaded / Updated: repository facts, not graph facts
      break;
  }
  return { state: next, resync };
}

/** Structural equality against a snapshot (used by tests and resync checks). */
export function equalsSnapshot(state: ViewState, graph: GraphPayload): boolean {
  const fromApi = fromSnapshot(graph);
  if (state.nodes.size !== fromApi.nodes.size || state.edges.size !== fromApi.edges.size) {
    return false;
  }
  for (const [id, node] of fromApi.nodes) {
    const mine = state.nodes.get(id);
    if (
      !mine ||
      mine.component !== node.component ||
      mine.version !== node.version ||
      mine.incarnation !== node.incarnation ||
      mine.state !== node.state ||
      mine.draining !== node.draining
    ) {
      return false;
    }
  }
  for (const [id, edge] of fromApi.edges) {
    const mine = state.edges.get(id);
    if (!mine || mine.from !== edge.from || mine.to !== edge.to || mine.adapter !== edge.adapter) {
      return false;
    }
  }
  return true;
}
