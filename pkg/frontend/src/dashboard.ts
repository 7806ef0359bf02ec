// Dashboard screen: over-time and breakdown charts straight off the
// analytics API. Every rendered number is one response field.

import type { CollectorApi } from "./api.js";
import { barChart } from "./charts.js";
import { dayStart } from "./filters.js";
import type { BreakdownDimension } from "./types.js";

const TEMPLATE = `
<section id="dashboard-screen">
  <div id="d-banner" class="banner" hidden></div>
  <div class="toolbar">
    <label>from <input id="d-from" type="date"></label>
    <label>to <input id="d-to" type="date"></label>
    <button id="d-refresh">refresh</button>
    <span id="d-note" class="muted"></span>
  </div>
  <div id="chart-over-time"></div>
  <div class="chart-grid">
    <div id="chart-event_type"></div>
    <div id="chart-application"></div>
    <div id="chart-host"></div>
  </div>
</section>`;

const DIMENSIONS: BreakdownDimension[] = ["event_type", "application", "host"];

export class DashboardScreen {
  constructor(
    private readonly root: HTMLElement,
    private readonly collector: CollectorApi,
    private readonly defaultRange?: { from: string; to: string },
  ) {}

  private el<T extends HTMLElement>(selector: string): T {
    const found = this.root.querySelector(selector);
    if (!found) throw new Error(`missing element ${selector}`);
    return found as T;
  }

  async mount(): Promise<void> {
    this.root.innerHTML = TEMPLATE;
    const { from, to } = this.defaultRange ?? lastWeek();
    this.el<HTMLInputElement>("#d-from").value = from;
    this.el<HTMLInputElement>("#d-to").value = to;
    this.el("#d-refresh").addEventListener("click", () => void this.refresh());
    await this.refresh();
  }

  async refresh(): Promise<void> {
    const from = dayStart(this.el<HTMLInputElement>("#d-from").value);
    const to = dayStart(this.el<HTMLInputElement>("#d-to").value);
    try {
      const overTime = await this.collector.overTime(from, to);
      this.el("#chart-over-time").innerHTML = barChart(overTime.buckets, "events per day");
      for (const dimension of DIMENSIONS) {
        const series = await this.collector.breakdown(dimension, from, to);
        this.el(`#chart-${dimension}`).innerHTML = barChart(
          series.buckets,
          `by ${dimension.replace("_", " ")}`,
        );
      }
      // no client-side aggregation: charts show response fields verbatim,
      // the note is only an empty-state flag
      const empty = overTime.buckets.every((bucket) => bucket.count === 0);
      this.el("#d-note").textContent = empty ? "no events in range" : "";
      this.el("#d-banner").setAttribute("hidden", "");
    } catch (error) {
      const banner = this.el("#d-banner");
      banner.textContent = `collector unreachable: ${String(error)}`;
      banner.removeAttribute("hidden");
    }
  }
}

function lastWeek(): { from: string; to: string } {
  const to = new Date();
  to.setUTCDate(to.getUTCDate() + 1);
  const from = new Date();
  from.setUTCDate(from.getUTCDate() - 6);
  return { from: from.toISOString().slice(0, 10), to: to.toISOString().slice(0, 10) };
}
