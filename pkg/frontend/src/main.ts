// Wiring: one snapshot, one stream, one render loop. The stream drives all
// updates; snapshot refetches happen only on reducer-requested resyncs.

import { ApiClient } from "./api.js";
import { ConsoleApp } from "./app.js";
import { EventStream } from "./stream.js";
import { applyEvent, emptyState, fromSnapshot, type ViewState } from "./viewmodel.js";

async function start(): Promise<void> {
  const root = document.getElementById("console-root");
  if (!root) throw new Error("missing #console-root");
  const api = new ApiClient("");
  const app = new ConsoleApp(root, api);
  let state: ViewState = emptyState();
  let streamState = "connecting";
  let resyncQueued = false;

  const render = () => app.render(state, streamState);

  const resync = async () => {
    if (resyncQueued) return;
    resyncQueued = true;
    try {
      state = fromSnapshot(await api.graph(), state);
    } finally {
      resyncQueued = false;
    }
    render();
  };

  app.bindForms((message) => {
    const out = root.querySelector("#command-result");
    if (out) out.textContent = message;
  });

  state = fromSnapshot(await api.graph());
  render();

  const stream = new EventStream("", state.lastSeq, {
    onEvent: (event) => {
      const { state: next, resync: needsResync } = applyEvent(state, event);
      state = next;
      render();
      if (needsResync) void resync();
    },
    onResync: resync,
    onStateChange: (s) => {
      streamState = s;
      render();
    },
  });
  void stream.run();
}

start().catch((err) => {
  document.body.textContent = `console failed to start: ${err}`;
});
