/** Dashboard shell: bundle loading (file or service), hash routing across
 * the four views, and the shared filter bar. Views re-render from the
 * loaded bundle on every state change; nothing is refetched or recomputed.
 * Render output is a pure function of (bundle, filters, route). */

import { BundleError, parseBundle } from "./bundle.js";
import { clear, el } from "./dom.js";
import { ServiceClient } from "./service.js";
import {
  availableYears,
  categories,
  clampState,
  initialState,
  metricsInCategory,
  subgroupDisabled,
  subgroupsFor,
} from "./state.js";
import type { Bundle, FilterState, FundingFilter, ScatterDoc } from "./types.js";
import { renderLeaderboard } from "./views/leaderboard.js";
import { renderScatter } from "./views/scatter.js";
import { renderSimilar } from "./views/similar.js";
import { renderTrends } from "./views/trends.js";

export type Route = "similar" | "leaderboards" | "scatter" | "trends";

const ROUTES: { route: Route; label: string }[] = [
  { route: "similar", label: "Similar Districts" },
  { route: "leaderboards", label: "Leaderboards" },
  { route: "scatter", label: "Scatter" },
  { route: "trends", label: "Trends" },
];

export class App {
  bundle: Bundle | null = null;
  filters: FilterState | null = null;
  route: Route = "similar";
  presetIndex = 0;
  service: ServiceClient | null = null;
  extraScatter: ScatterDoc | null = null;

  private header: HTMLElement;
  private nav: HTMLElement;
  private main: HTMLElement;

  constructor(readonly root: HTMLElement) {
    this.header = el("header", { class: "topbar" });
    this.nav = el("nav", { class: "views" });
    this.main = el("main", { class: "content" });
    root.append(this.header, this.nav, this.main);
    this.renderHeader();
    this.renderWelcome();
  }

  /** File-only entry point: parse text, reset state, render. Never leaves
   * a partial page: parse errors produce a full error screen. */
  loadBundleText(text: string): void {
    let bundle: Bundle;
    try {
      bundle = parseBundle(text);
    } catch (exc) {
      this.bundle = null;
      this.filters = null;
      this.renderError(exc instanceof BundleError
        ? exc.message
        : `could not read bundle: ${(exc as Error).message}`);
      return;
    }
    this.bundle = bundle;
    this.filters = initialState(bundle);
    this.presetIndex = 0;
    this.extraScatter = null;
    this.renderHeader();
    this.render();
  }

  async connectService(base: string, districtId: string): Promise<void> {
    this.service = new ServiceClient(base.replace(/\/+$/, ""));
    try {
      const text = await this.service.bundleText(districtId);
      this.loadBundleText(text);
    } catch (exc) {
      this.renderError((exc as Error).message);
    }
  }

  setRoute(route: Route): void {
    this.route = route;
    this.render();
  }

  setFilters(patch: Partial<FilterState>): void {
    if (!this.bundle || !this.filters) return;
    this.filters = clampState(this.bundle, { ...this.filters, ...patch });
    this.renderHeader();
    this.render();
  }

  // -- rendering ---------------------------------------------------------

  private renderHeader(): void {
    clear(this.header);
    this.header.append(el("span", { class: "brand" }, "District Almanac"));

    const fileInput = el("input", { type: "file", accept: ".json",
                                    "aria-label": "open bundle file" });
    fileInput.addEventListener("change", () => {
      const file = (fileInput as HTMLInputElement).files?.[0];
      if (!file) return;
      file.text().then((text) => this.loadBundleText(text));
    });
    this.header.append(el("label", { class: "open-file" }, "Open bundle ", fileInput));

    if (this.bundle && this.filters) {
      this.header.append(
        el("span", { class: "client-name" },
           `${this.bundle.client.name} ◆`),
        this.filterBar(this.bundle, this.filters));
    }
    this.renderNav();
  }

  private filterBar(bundle: Bundle, filters: FilterState): HTMLElement {
    const bar = el("div", { class: "filters" });

    const categorySelect = el("select", { "data-filter": "category",
                                          "aria-label": "category" });
    for (const category of categories(bundle)) {
      const option = el("option", { value: category }, category.replace(/_/g, " "));
      if (category === filters.category) option.setAttribute("selected", "true");
      categorySelect.append(option);
    }
    categorySelect.addEventListener("change", () =>
      this.setFilters({ category: categorySelect.value }));

    const metricSelect = el("select", { "data-filter": "metric",
                                        "aria-label": "metric" });
    for (const metric of metricsInCategory(bundle, filters.category)) {
      const option = el("option", { value: metric.id }, metric.display_name);
      if (metric.id === filters.metric) option.setAttribute("selected", "true");
      metricSelect.append(option);
    }
    metricSelect.addEventListener("change", () =>
      this.setFilters({ metric: metricSelect.value }));

    const yearSelect = el("select", { "data-filter": "year",
                                      "aria-label": "year" });
    const usable = availableYears(bundle, filters.metric, filters.subgroup);
    for (const year of bundle.years) {
      const option = el("option", { value: year }, String(year));
      if (year === filters.year) option.setAttribute("selected", "true");
      if (!usable.includes(year)) option.setAttribute("disabled", "true");
      yearSelect.append(option);
    }
    yearSelect.addEventListener("change", () =>
      this.setFilters({ year: Number(yearSelect.value) }));

    const subgroupSelect = el("select", { "data-filter": "subgroup",
                                          "aria-label": "student subgroup" });
    const disabled = subgroupDisabled(bundle, filters.metric);
    for (const subgroup of disabled ? ["all"] : subgroupsFor(bundle, filters.metric)) {
      const option = el("option", { value: subgroup }, subgroup.replace(/_/g, " "));
      if (subgroup === filters.subgroup) option.setAttribute("selected", "true");
      subgroupSelect.append(option);
    }
    if (disabled) (subgroupSelect as HTMLSelectElement).disabled = true;
    subgroupSelect.addEventListener("change", () =>
      this.setFilters({ subgroup: subgroupSelect.value }));

    const fundingSelect = el("select", { "data-filter": "funding",
                                         "aria-label": "district funding" });
    for (const funding of ["all", "state_formula", "basic_aid"]) {
      const option = el("option", { value: funding }, funding.replace(/_/g, " "));
      if (funding === filters.funding) option.setAttribute("selected", "true");
      fundingSelect.append(option);
    }
    fundingSelect.addEventListener("change", () =>
      this.setFilters({ funding: fundingSelect.value as FundingFilter }));

    bar.append(
      labeled("Category", categorySelect), labeled("Metric", metricSelect),
      labeled("Year", yearSelect), labeled("Subgroup", subgroupSelect),
      labeled("Funding", fundingSelect));
    return bar;
  }

  private renderNav(): void {
    clear(this.nav);
    for (const { route, label } of ROUTES) {
      const link = el("a", { href: `#/${route}`,
                             class: route === this.route ? "active" : "",
                             "data-route": route }, label);
      link.addEventListener("click", (event) => {
        event.preventDefault();
        window.location.hash = `#/${route}`;
        this.setRoute(route);
      });
      this.nav.append(link);
    }
  }

  private renderWelcome(): void {
    clear(this.main);
    this.main.append(
      el("div", { class: "welcome" },
         el("h2", {}, "Open a district workbook bundle"),
         el("p", {}, "Use “Open bundle” above to load a "
            + "<district>.bundle.json file. No server is needed; everything "
            + "renders from the file.")));
  }

  private renderError(message: string): void {
    this.renderHeader();
    clear(this.main);
    this.main.append(
      el("div", { class: "error-screen", role: "alert" },
         el("h2", {}, "Cannot load bundle"),
         el("p", {}, message)));
  }

  render(): void {
    if (!this.bundle || !this.filters) {
      this.renderWelcome();
      return;
    }
    this.renderNav();
    clear(this.main);
    const view = el("section", { class: `view view-${this.route}`,
                                 "data-view": this.route });
    switch (this.route) {
      case "similar":
        renderSimilar(view, this.bundle);
        break;
      case "leaderboards":
        renderLeaderboard(view, this.bundle, this.filters);
        break;
      case "scatter":
        renderScatter(view, this.bundle, this.presetIndex, (index) => {
          this.presetIndex = index;
          this.extraScatter = null;
          this.render();
        }, this.extraScatter ?? undefined);
        break;
      case "trends":
        renderTrends(view, this.bundle, this.filters);
        break;
    }
    this.main.append(view);
  }
}

function labeled(text: string, control: HTMLElement): HTMLElement {
  return el("label", { class: "filter" }, `${text} `, control);
}

export function mount(root: HTMLElement): App {
  const app = new App(root);
  const applyHash = () => {
    const route = window.location.hash.replace("#/", "") as Route;
    if (ROUTES.some((r) => r.route === route)) {
      app.setRoute(route);
    }
  };
  window.addEventListener("hashchange", applyHash);
  applyHash();
  return app;
}
