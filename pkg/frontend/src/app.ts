// DOM rendering and command forms. One rendering loop driven by state
// changes; commands post to the API and the stream brings the consequences.

import { ApiClient, CommandRejected } from "./api.js";
import type { ViewState, NodeView } from "./viewmodel.js";

const SVG_NS = "http://www.w3.org/2000/svg";
const NODE_W = 168;
const NODE_H = 62;
const COLS = 3;

interface Slot {
  x: number;
  y: number;
}

function slotFor(index: number): Slot {
  return {
    x: 24 + (index % COLS) * (NODE_W + 56),
    y: 24 + Math.floor(index / COLS) * (NODE_H + 56),
  };
}

function badgeColor(node: NodeView): string {
  if (node.draining) return "#e8a33d";
  return node.state === "Active" ? "#3dba6f" : "#9aa4b2";
}

export class ConsoleApp {
  private layout = new Map<string, number>();

  constructor(
    private readonly root: HTMLElement,
    private readonly api: ApiClient,
  ) {}

  render(state: ViewState, streamState: string): void {
    const svg = this.root.querySelector("#graph") as SVGSVGElement;
    const timeline = this.root.querySelector("#timeline") as HTMLElement;
    const status = this.root.querySelector("#stream-state") as HTMLElement;
    status.textContent = streamState;
    status.className = `stream-${streamState}`;
    this.renderGraph(svg, state);
    this.renderTimeline(timeline, state);
    this.refreshPickers(state);
  }

  private slotIndex(id: string): number {
    if (!this.layout.has(id)) {
      this.layout.set(id, this.layout.size);
    }
    return this.layout.get(id)!;
  }

  private renderGraph(svg: SVGSVGElement, state: ViewState): void {
    svg.replaceChildren();
    const centers = new Map<string, Slot>();
    const nodes = [...state.nodes.values()].sort((a, b) =>
      a.instance.localeCompare(b.instance),
    );
    for (const node of nodes) {
      const slot = slotFor(this.slotIndex(node.instance));
      centers.set(node.instance, { x: slot.x + NODE_W / 2, y: slot.y + NODE_H / 2 });
    }
    const rows = Math.max(1, Math.ceil(this.layout.size / COLS));
    svg.setAttribute("viewBox", `0 0 ${COLS * (NODE_W + 56) + 24} ${rows * (NODE_H + 56) + 24}`);

    for (const edge of state.edges.values()) {
      const from = centers.get(edge.from.split(":")[0] ?? "");
      const to = centers.get(edge.to.split(":")[0] ?? "");
      if (!from || !to) continue;
      const line = document.createElementNS(SVG_NS, "line");
      line.setAttribute("x1", String(from.x));
      line.setAttribute("y1", String(from.y));
      line.setAttribute("x2", String(to.x));
      line.setAttribute("y2", String(to.y));
      line.setAttribute("class", edge.adapter ? "edge adapted" : "edge");
      svg.appendChild(line);
      const label = document.createElementNS(SVG_NS, "text");
      label.setAttribute("x", String((from.x + to.x) / 2));
      label.setAttribute("y", String((from.y + to.y) / 2 - 6));
      label.setAttribute("class", "edge-label");
      label.textContent = edge.adapter ? `${edge.connection} [${edge.adapter}]` : edge.connection;
      svg.appendChild(label);
    }

    for (const node of nodes) {
      const slot = slotFor(this.slotIndex(node.instance));
      const group = document.createElementNS(SVG_NS, "g");
      const rect = document.createElementNS(SVG_NS, "rect");
      rect.setAttribute("x", String(slot.x));
      rect.setAttribute("y", String(slot.y));
      rect.setAttribute("width", String(NODE_W));
      rect.setAttribute("height", String(NODE_H));
      rect.setAttribute("rx", "8");
      rect.setAttribute("class", "node");
      group.appendChild(rect);

      const name = document.createElementNS(SVG_NS, "text");
      name.setAttribute("x", String(slot.x + 12));
      name.setAttribute("y", String(slot.y + 24));
      name.setAttribute("class", "node-name");
      name.textContent = node.instance;
      group.appendChild(name);

      const meta = document.createElementNS(SVG_NS, "text");
      meta.setAttribute("x", String(slot.x + 12));
      meta.setAttribute("y", String(slot.y + 44));
      meta.setAttribute("class", "node-meta");
      meta.textContent = `${node.component}@${node.version} #${node.incarnation}`;
      group.appendChild(meta);

      const badge = document.createElementNS(SVG_NS, "circle");
      badge.setAttribute("cx", String(slot.x + NODE_W - 14));
      badge.setAttribute("cy", String(slot.y + 14));
      badge.setAttribute("r", "6");
      badge.setAttribute("fill", badgeColor(node));
      const title = document.createElementNS(SVG_NS, "title");
      title.textContent = node.draining ? "Draining" : node.state;
      badge.appendChild(title);
      group.appendChild(badge);
      svg.appendChild(group);
    }
  }

  private renderTimeline(container: HTMLElement, state: ViewState): void {
    container.replaceChildren();
    for (const event of [...state.timeline].reverse().slice(0, 80)) {
      const row = document.createElement("div");
      row.className = "event";
      const detail = Object.keys(event.detail ?? {}).length
        ? ` ${JSON.stringify(event.detail)}`
        : "";
      row.textContent = `#${event.seq} ${event.action} ${event.subject}${detail}`;
      container.appendChild(row);
    }
  }

  private refreshPickers(state: ViewState): void {
    const instances = [...state.nodes.keys()].sort();
    const connections = [...state.edges.keys()].sort();
    for (const select of this.root.querySelectorAll<HTMLSelectElement>("select[data-pick]")) {
      const source = select.dataset.pick === "instance" ? instances : connections;
      const current = select.value;
      select.replaceChildren(
        ...source.map((id) => {
          const option = document.createElement("option");
          option.value = id;
          option.textContent = id;
          return option;
        }),
      );
      if (source.includes(current)) select.value = current;
    }
  }

  bindForms(report: (message: string) => void): void {
    const on = (id: string, handler: (form: HTMLFormElement) => Promise<void>) => {
      const form = this.root.querySelector<HTMLFormElement>(`#${id}`);
      form?.addEventListener("submit", async (e) => {
        e.preventDefault();
        try {
          await handler(form);
          report("accepted");
        } catch (err) {
          report(err instanceof CommandRejected ? err.message : String(err));
        }
      });
    };
    const field = (form: HTMLFormElement, name: string): string =>
      (form.elements.namedItem(name) as HTMLInputElement | HTMLSelectElement).value.trim();

    on("form-swap", async (form) => {
      const rebindText = field(form, "rebind");
      await this.api.swap(
        field(form, "instance"),
        field(form, "component"),
        rebindText ? JSON.parse(rebindText) : [],
      );
    });
    on("form-unload", (form) => this.api.unload(field(form, "instance")));
    on("form-link", (form) =>
      this.api.link(
        field(form, "connection"),
        field(form, "from"),
        field(form, "to"),
        field(form, "script") || undefined,
      ),
    );
    on("form-unlink", (form) => this.api.unlink(field(form, "connection")));
    on("form-adapter", (form) => {
      const script = field(form, "script");
      return this.api.setAdapter(field(form, "connection"), script === "" ? null : script);
    });
  }
}
