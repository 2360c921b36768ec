/**
 * Browser entry point: one render loop fed by the event stream; user
 * actions issue API calls and the UI reconciles on the next snapshot.
 */

import { ApiError, DemoClient } from "./client.js";
import { renderErrorToast, renderInstallScreen } from "./installScreen.js";
import { computeMapScene, drawScene } from "./mapScreen.js";
import { computePrivacyChart, drawPrivacyChart } from "./privacyChart.js";
import { EPSILON_PRESETS, EpsilonPreset, InstallResponse } from "./types.js";
import {
  applyQuery,
  applySnapshot,
  initialViewState,
  setPreset,
  setToast,
  ViewState,
} from "./viewState.js";

interface StoreEntry {
  file: string;
  app_id: string;
}

const client = new DemoClient("");
let view: ViewState = initialViewState();
let pendingManifestText: string | null = null;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function render(): void {
  const mapCanvas = el<HTMLCanvasElement>("map");
  const mapCtx = mapCanvas.getContext("2d");
  if (mapCtx) {
    const scene = computeMapScene(view.snapshot, view.lastQuery,
      mapCanvas.width, mapCanvas.height);
    drawScene(scene, mapCtx);
  }
  const chartCanvas = el<HTMLCanvasElement>("chart");
  const chartCtx = chartCanvas.getContext("2d");
  if (chartCtx) {
    const chart = computePrivacyChart(view.snapshot,
      chartCanvas.width, chartCanvas.height);
    drawPrivacyChart(chart, chartCtx);
  }
  const status = el<HTMLDivElement>("status");
  if (view.snapshot) {
    const s = view.snapshot;
    status.textContent =
      `t=${(s.t_ms / 1000).toFixed(1)}s  apps=[${s.apps.join(", ")}]  ` +
      `disclosures=${s.disclosure_count}  ` +
      `uplink ${s.bandwidth.entries_sent}/${s.bandwidth.naive_entries} entries`;
  }
  el<HTMLDivElement>("toast-area").innerHTML =
    view.toast ? renderErrorToast(view.toast) : "";
  const install = el<HTMLDivElement>("install-area");
  if (view.pendingInstall) {
    install.innerHTML = renderInstallScreen(view.pendingInstall,
      view.selections.expertMode);
    install.querySelector(".confirm")?.addEventListener("click", confirmInstall);
    install.querySelector(".cancel")?.addEventListener("click", cancelInstall);
  } else {
    install.innerHTML = "";
  }
}

function showError(err: unknown): void {
  const message = err instanceof ApiError ? err.message : String(err);
  view = setToast(view, message);
  render();
  setTimeout(() => {
    view = setToast(view, null);
    render();
  }, 6000);
}

async function reviewInstall(): Promise<void> {
  const select = el<HTMLSelectElement>("store-select");
  const preset = el<HTMLSelectElement>("preset-select").value as EpsilonPreset;
  try {
    const manifestResponse = await fetch(`/store/${select.value}`);
    pendingManifestText = await manifestResponse.text();
    // install to obtain the server-derived threat report; cancel rolls back
    const install: InstallResponse = await client.installApp(
      pendingManifestText, preset);
    view = { ...view, pendingInstall: install };
    render();
  } catch (err) {
    showError(err);
  }
}

function confirmInstall(): void {
  view = { ...view, pendingInstall: null };
  render();
}

async function cancelInstall(): Promise<void> {
  const appId = view.pendingInstall?.threats.app_id;
  view = { ...view, pendingInstall: null };
  if (appId) {
    try {
      await client.removeApp(appId);
    } catch (err) {
      showError(err);
    }
  }
  render();
}

async function runQuery(): Promise<void> {
  const app = view.selections.activeApp;
  if (!app) {
    showError(new Error("no app installed"));
    return;
  }
  const category = el<HTMLInputElement>("category-input").value || "restaurant";
  const k = parseInt(el<HTMLInputElement>("k-input").value, 10) || 5;
  try {
    const query = await client.query(app, category, k);
    view = applyQuery(view, query);
    render();
  } catch (err) {
    showError(err);
  }
}

async function loadStore(): Promise<void> {
  const listing = await fetch("/store/index.json");
  const entries = (await listing.json()) as StoreEntry[];
  const select = el<HTMLSelectElement>("store-select");
  select.innerHTML = entries
    .map((e) => `<option value="${e.file}">${e.app_id}</option>`)
    .join("");
}

async function eventLoop(): Promise<void> {
  for await (const snapshot of client.events({
    onReconnect: () => console.info("event stream reconnecting"),
  })) {
    view = applySnapshot(view, snapshot);
    render();
  }
}

function wireControls(): void {
  el<HTMLButtonElement>("btn-review").addEventListener("click", reviewInstall);
  el<HTMLButtonElement>("btn-query").addEventListener("click", runQuery);
  el<HTMLButtonElement>("btn-start").addEventListener("click", () =>
    client.playback({ action: "start" }).catch(showError));
  el<HTMLButtonElement>("btn-pause").addEventListener("click", () =>
    client.playback({ action: "pause" }).catch(showError));
  el<HTMLButtonElement>("btn-step").addEventListener("click", () =>
    client.playbackStep(10).catch(showError));
  const presetSelect = el<HTMLSelectElement>("preset-select");
  presetSelect.innerHTML = EPSILON_PRESETS
    .map((p) => `<option value="${p}"${p === "medium" ? " selected" : ""}>${p}</option>`)
    .join("");
  presetSelect.addEventListener("change", () => {
    view = setPreset(view, presetSelect.value as EpsilonPreset);
  });
  el<HTMLInputElement>("expert-toggle").addEventListener("change", (ev) => {
    const on = (ev.target as HTMLInputElement).checked;
    view = { ...view, selections: { ...view.selections, expertMode: on } };
    render();
  });
}

async function start(): Promise<void> {
  wireControls();
  await loadStore().catch(showError);
  view = applySnapshot(view, await client.state());
  render();
  void eventLoop();
}

void start();
