import { ApiClient } from "./api.js";
import { ControlPanel } from "./panel.js";
import { LatestWinsScheduler } from "./scheduler.js";
import { ExplorerState } from "./state.js";
import { MeshViewer } from "./viewer.js";
import type { GenerateResponse } from "./types.js";

interface GenerateArgs {
  modelId: string;
  params: Record<string, number>;
}

function serviceUrl(): string {
  const fromQuery = new URLSearchParams(window.location.search).get("api");
  return fromQuery ?? "http://127.0.0.1:8000";
}

async function boot(): Promise<void> {
  const api = new ApiClient(serviceUrl());
  const viewerEl = document.getElementById("viewer")!;
  const panelEl = document.getElementById("panel")!;

  let descriptors;
  try {
    descriptors = await api.getModels();
  } catch (error) {
    panelEl.textContent =
      `service unreachable at ${api.baseUrl} - start it with ` +
      `"assm serve <model.json> --port 8000" (${String(error)})`;
    return;
  }
  if (!descriptors.length) {
    panelEl.textContent = "service has no models loaded";
    return;
  }

  const state = new ExplorerState(descriptors);
  const viewer = new MeshViewer(viewerEl);

  const scheduler = new LatestWinsScheduler<GenerateArgs, GenerateResponse>({
    run: (args) => api.generate(args.modelId, args.params),
    debounceMs: 90,
    retryMs: 1500,
    onResult: (args, response) => {
      const session = state.sessions.get(args.modelId)!;
      session.absorb(response);
      panel.hideBanner();
      if (args.modelId === state.activeModelId) {
        viewer.update(response.mesh.vertices, response.mesh.faces);
        panel.renderReadout(session);
      }
    },
    onError: (error) => {
      panel.showBanner(`request failed, retrying: ${String(error)}`);
    },
  });

  const refresh = () => {
    scheduler.request({
      modelId: state.activeModelId,
      params: state.active.requestParams(),
    });
  };

  const activate = (id: string) => {
    state.select(id);
    panel.bindSession(state.active);
    panel.setToggleEnabled(state.toggleTarget() !== null);
    refresh();
  };

  const panel = new ControlPanel(panelEl, descriptors, {
    onSlider: (label, value) => {
      const clamped = state.active.setValue(label, value);
      panel.reflectValue(label, clamped);
      refresh();
    },
    onSelectModel: activate,
    onReset: () => {
      state.active.releaseAll();
      panel.bindSession(state.active);
      refresh();
    },
    onToggleKind: () => {
      const target = state.toggleTarget();
      if (target !== null) activate(target);
    },
  });

  panel.bindSession(state.active);
  panel.setToggleEnabled(state.toggleTarget() !== null);
  refresh();
}

void boot();
