// App bootstrap: settings, hash routing, screen construction.

import { AgentApi, CollectorApi } from "./api.js";
import { DashboardScreen } from "./dashboard.js";
import { ReviewScreen } from "./review.js";

interface Settings {
  agentUrl: string;
  collectorUrl: string;
  readerKey: string;
}

const DEFAULTS: Settings = {
  agentUrl: "http://127.0.0.1:8478",
  collectorUrl: window.location.origin,
  readerKey: "",
};

function loadSettings(): Settings {
  try {
    const raw = window.localStorage.getItem("metricshed-settings");
    return raw ? { ...DEFAULTS, ...(JSON.parse(raw) as Partial<Settings>) } : { ...DEFAULTS };
  } catch {
    return { ...DEFAULTS };
  }
}

function saveSettings(settings: Settings): void {
  window.localStorage.setItem("metricshed-settings", JSON.stringify(settings));
}

function settingsScreen(root: HTMLElement, settings: Settings): void {
  root.innerHTML = `
  <section id="settings-screen">
    <label>agent URL <input id="s-agent" value="${settings.agentUrl}"></label>
    <label>collector URL <input id="s-collector" value="${settings.collectorUrl}"></label>
    <label>reader key <input id="s-reader" value="${settings.readerKey}"></label>
    <button id="s-save">save</button>
    <p class="muted">the review screen talks to a local "agent review-server";
    the dashboard needs the collector's reader key.</p>
  </section>`;
  root.querySelector("#s-save")?.addEventListener("click", () => {
    saveSettings({
      agentUrl: (root.querySelector("#s-agent") as HTMLInputElement).value,
      collectorUrl: (root.querySelector("#s-collector") as HTMLInputElement).value,
      readerKey: (root.querySelector("#s-reader") as HTMLInputElement).value,
    });
    window.location.reload();
  });
}

async function route(): Promise<void> {
  const settings = loadSettings();
  const view = document.getElementById("view");
  if (!view) return;
  const collector = settings.readerKey
    ? new CollectorApi(settings.collectorUrl, settings.readerKey)
    : null;
  const hash = window.location.hash || "#review";
  document.querySelectorAll("nav a").forEach((a) => {
    a.classList.toggle("active", a.getAttribute("href") === hash);
  });
  if (hash === "#dashboard") {
    if (!collector) {
      view.innerHTML = `<p class="banner">set the collector reader key under Settings first</p>`;
      return;
    }
    await new DashboardScreen(view, collector).mount();
  } else if (hash === "#settings") {
    settingsScreen(view, settings);
  } else {
    await new ReviewScreen(view, new AgentApi(settings.agentUrl), collector).mount();
  }
}

window.addEventListener("hashchange", () => void route());
window.addEventListener("DOMContentLoaded", () => void route());
