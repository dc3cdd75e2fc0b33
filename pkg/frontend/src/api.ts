// Thin client for the control plane. Commands are fire-and-observe: the
// response is only checked for acceptance; resulting state arrives over the
// event stream.

import type { GraphPayload } from "./types.js";

export interface ApiError {
  code: string;
  message: string;
  subject?: string | null;
}

export class CommandRejected extends Error {
  constructor(public readonly error: ApiError) {
    super(`${error.code}: ${error.message}`);
  }
}

export class ApiClient {
  constructor(private readonly baseUrl: string = "") {}

  async graph(): Promise<GraphPayload> {
    const response = await fetch(`${this.baseUrl}/api/graph`);
    if (!response.ok) throw new CommandRejected(await response.json());
    return response.json();
  }

  private async command(method: string, path: string, body?: unknown): Promise<void> {
    const response = await fetch(`${this.baseUrl}${path}`, {
      method,
      headers: body !== undefined ? { "content-type": "application/json" } : undefined,
      body: body !== undefined ? JSON.stringify(body) : undefined,
    });
    if (!response.ok) throw new CommandRejected(await response.json());
  }

  swap(instance: string, component: string, rebind: unknown[]): Promise<void> {
    return this.command("POST", `/api/instances/${instance}/swap`, { component, rebind });
  }

  unload(instance: string): Promise<void> {
    return this.command("DELETE", `/api/instances/${instance}`);
  }

  link(connection: string, from: string, to: string, adapterScript?: string): Promise<void> {
    const body: Record<string, unknown> = { connection, from, to };
    if (adapterScript) body.adapter = { script: adapterScript };
    return this.command("POST", "/api/connections", body);
  }

  unlink(connection: string): Promise<void> {
    return this.command("DELETE", `/api/connections/${connection}`);
  }

  retarget(connection: string, to: string): Promise<void> {
    return this.command("PUT", `/api/connections/${connection}`, { to });
  }

  setAdapter(connection: string, script: string | null): Promise<void> {
    return this.command("PUT", `/api/connections/${connection}/adapter`, {
      adapter: script === null ? null : { script },
    });
  }
}
