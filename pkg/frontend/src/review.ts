// Review screen: watch the local buffer, filter, select, submit.

import type { AgentApi, CollectorApi } from "./api.js";
import { dayStart } from "./filters.js";
import type { ReviewFilter } from "./filters.js";
import { eventTable, receiptLine } from "./render.js";
import {
  applyReceipt,
  initialState,
  pruneSelection,
  setFilter,
  setTab,
  toggleSelection,
} from "./state.js";
import type { ReviewViewState } from "./state.js";
import type { EventState, LocalEventTree } from "./types.js";

const TEMPLATE = `
<section id="review-screen">
  <div id="banner" class="banner" hidden></div>
  <div class="toolbar">
    <button id="tab-pending" class="tab active">pending</button>
    <button id="tab-submitted" class="tab">submitted</button>
    <span class="spacer"></span>
    <label class="toggle"><input type="checkbox" id="toggle-collection"> collecting</label>
    <span id="agent-counts" class="muted"></span>
  </div>
  <div class="filters">
    <input id="f-keyword" placeholder="keyword">
    <input id="f-application" placeholder="application">
    <input id="f-from" type="date">
    <input id="f-to" type="date">
    <button id="f-apply">filter</button>
    <button id="f-clear">clear</button>
  </div>
  <div id="event-list"></div>
  <div class="actions">
    <button id="btn-submit" disabled>submit selected</button>
    <span id="receipt" class="muted"></span>
    <span id="server-records" class="muted"></span>
  </div>
</section>`;

export class ReviewScreen {
  state: ReviewViewState = initialState();
  events: LocalEventTree[] = [];

  constructor(
    private readonly root: HTMLElement,
    private readonly agent: AgentApi,
    private readonly collector: CollectorApi | null,
  ) {}

  private el<T extends HTMLElement>(selector: string): T {
    const found = this.root.querySelector(selector);
    if (!found) throw new Error(`missing element ${selector}`);
    return found as T;
  }

  async mount(): Promise<void> {
    this.root.innerHTML = TEMPLATE;
    this.el("#tab-pending").addEventListener("click", () => void this.switchTab("pending"));
    this.el("#tab-submitted").addEventListener("click", () => void this.switchTab("submitted"));
    this.el("#f-apply").addEventListener("click", () => void this.applyFilters());
    this.el("#f-clear").addEventListener("click", () => void this.clearFilters());
    this.el("#btn-submit").addEventListener("click", () => void this.submitSelection());
    this.el<HTMLInputElement>("#toggle-collection").addEventListener("change", (event) => {
      const on = (event.target as HTMLInputElement).checked;
      void this.toggleCollection(on);
    });
    this.el("#event-list").addEventListener("change", (event) => {
      const target = event.target as HTMLElement;
      if (target.classList.contains("select-event")) {
        const id = target.getAttribute("data-id");
        if (id) this.onToggleSelect(id);
      }
    });
    await this.refreshStatus();
    await this.load();
  }

  private currentFilter(): ReviewFilter {
    const keyword = this.el<HTMLInputElement>("#f-keyword").value.trim();
    const application = this.el<HTMLInputElement>("#f-application").value.trim();
    const from = this.el<HTMLInputElement>("#f-from").value;
    const to = this.el<HTMLInputElement>("#f-to").value;
    const filter: ReviewFilter = { state: this.state.tab };
    if (keyword) filter.keyword = keyword;
    if (application) filter.application = application;
    if (from) filter.from = dayStart(from);
    if (to) filter.to = dayStart(to);
    return filter;
  }

  async switchTab(tab: EventState): Promise<void> {
    this.state = setTab(this.state, tab);
    this.el("#tab-pending").classList.toggle("active", tab === "pending");
    this.el("#tab-submitted").classList.toggle("active", tab === "submitted");
    await this.load();
  }

  async applyFilters(): Promise<void> {
    this.state = setFilter(this.state, this.currentFilter());
    await this.load();
  }

  async clearFilters(): Promise<void> {
    for (const selector of ["#f-keyword", "#f-application", "#f-from", "#f-to"]) {
      this.el<HTMLInputElement>(selector).value = "";
    }
    await this.applyFilters();
  }

  async load(): Promise<void> {
    try {
      this.events = await this.agent.events({ ...this.state.filter, state: this.state.tab });
      this.hideBanner();
    } catch (error) {
      this.showBanner(`agent unreachable: ${String(error)}`);
      return;
    }
    this.state = pruneSelection(this.state, this.events);
    this.renderList();
  }

  private renderList(): void {
    this.el("#event-list").innerHTML = eventTable(this.events, this.state.selection);
    const submit = this.el<HTMLButtonElement>("#btn-submit");
    submit.disabled = this.state.selection.size === 0;
    submit.textContent = this.state.selection.size
      ? `submit ${this.state.selection.size} selected`
      : "submit selected";
  }

  onToggleSelect(id: string): void {
    this.state = toggleSelection(this.state, id, this.events);
    this.renderList();
  }

  async submitSelection(): Promise<void> {
    const ids = [...this.state.selection];
    if (ids.length === 0) return;
    try {
      const receipt = await this.agent.submit(ids);
      this.state = applyReceipt(this.state, receipt);
      this.el("#receipt").textContent = receiptLine(receipt);
      this.hideBanner();
    } catch (error) {
      // selection stays intact so a retry is one click away
      this.showBanner(`submission failed: ${String(error)}`);
      return;
    }
    await this.load();
    await this.refreshStatus();
  }

  async toggleCollection(on: boolean): Promise<void> {
    try {
      const status = await this.agent.setCollecting(on);
      this.el<HTMLInputElement>("#toggle-collection").checked = status.collecting;
      this.updateCounts(status.pending, status.submitted);
    } catch (error) {
      this.showBanner(`agent unreachable: ${String(error)}`);
    }
  }

  async refreshStatus(): Promise<void> {
    try {
      const status = await this.agent.status();
      this.el<HTMLInputElement>("#toggle-collection").checked = status.collecting;
      this.updateCounts(status.pending, status.submitted);
    } catch (error) {
      this.showBanner(`agent unreachable: ${String(error)}`);
      return;
    }
    if (this.collector) {
      try {
        const stats = await this.collector.stats();
        this.el("#server-records").textContent = `server records: ${stats.record_count}`;
      } catch {
        this.el("#server-records").textContent = "";
      }
    }
  }

  private updateCounts(pending: number, submitted: number): void {
    this.el("#agent-counts").textContent = `${pending} pending / ${submitted} submitted`;
  }

  private showBanner(message: string): void {
    const banner = this.el("#banner");
    banner.textContent = message;
    banner.removeAttribute("hidden");
  }

  private hideBanner(): void {
    this.el("#banner").setAttribute("hidden", "");
  }
}
