import { describe, expect, it } from "vitest";

import { initialState } from "../src/state.js";
import { renderScatter } from "../src/views/scatter.js";
import { renderTrends } from "../src/views/trends.js";
import { container, golden } from "./helpers.js";

describe("scatter view", () => {
  it("renders every preset point with verbatim coordinates", () => {
    const bundle = golden();
    const root = container();
    renderScatter(root, bundle, 0, () => {});
    const preset = bundle.scatter_presets[0];
    const points = root.querySelectorAll(".point");
    expect(points).toHaveLength(preset.points.length);
    const byId = new Map(preset.points.map(([id, x, y]) => [id, [x, y]]));
    for (const node of points) {
      const [x, y] = byId.get(node.getAttribute("data-district")!)!;
      expect(node.getAttribute("data-x")).toBe(String(x));
      expect(node.getAttribute("data-y")).toBe(String(y));
    }
  });

  it("displays r from the bundle, not a recomputation", () => {
    const bundle = golden();
    const root = container();
    renderScatter(root, bundle, 1, () => {});
    const preset = bundle.scatter_presets[1];
    expect(root.querySelector(".scatter-stats")!.textContent)
      .toContain(`r = ${String(preset.r)}`);
  });

  it("rings and labels the client point", () => {
    const bundle = golden();
    const index = bundle.scatter_presets.findIndex(
      (p) => p.points.some(([id]) => id === bundle.client.id));
    if (index < 0) return;
    const root = container();
    renderScatter(root, bundle, index, () => {});
    const client = root.querySelector(".point.client")!;
    expect(client.getAttribute("data-district")).toBe(bundle.client.id);
    expect(client.querySelector(".client-ring")).not.toBeNull();
    expect(client.querySelector(".client-label")?.textContent).toBe("you");
  });

  it("offers all six preset pairings", () => {
    const root = container();
    renderScatter(root, golden(), 0, () => {});
    expect(root.querySelectorAll(".preset-picker option")).toHaveLength(6);
  });
});

describe("trends view", () => {
  it("plots the client series with verbatim values", () => {
    const bundle = golden();
    const state = { ...initialState(bundle), metric: "enrollment",
                    category: "student_demography" };
    const root = container();
    renderTrends(root, bundle, state);
    const panel = bundle.trend_panels.find((p) => p.metric_id === "enrollment")!;
    const dots = root.querySelectorAll('.trend-dot[data-line="client"]');
    expect(dots).toHaveLength(panel.client.length);
    const byYear = new Map(panel.client);
    for (const dot of dots) {
      const year = Number(dot.getAttribute("data-year"));
      expect(dot.getAttribute("data-value")).toBe(String(byYear.get(year)));
    }
  });

  it("renders overlays for peers, county, and state", () => {
    const bundle = golden();
    const state = { ...initialState(bundle), metric: "grad_rate",
                    category: "graduation_dropout" };
    const root = container();
    renderTrends(root, bundle, state);
    for (const line of ["peer_median", "county_mean", "state_mean"]) {
      expect(root.querySelectorAll(`.trend-dot[data-line="${line}"]`).length)
        .toBeGreaterThan(0);
    }
  });

  it("shows the bundle's rate of change verbatim", () => {
    const bundle = golden();
    const state = { ...initialState(bundle), metric: "pct_el",
                    category: "student_demography" };
    const root = container();
    renderTrends(root, bundle, state);
    const panel = bundle.trend_panels.find((p) => p.metric_id === "pct_el")!;
    const text = root.querySelector("[data-roc]")!.textContent!;
    if (panel.rate_of_change.insufficient) {
      expect(text).toContain("insufficient");
    } else {
      expect(text).toContain(String(panel.rate_of_change.slope));
      expect(text).toContain(String(panel.rate_of_change.pct_change));
    }
  });

  it("labels client gaps when years are suppressed or missing", () => {
    const bundle = golden();
    const gapped = bundle.trend_panels.find(
      (p) => p.client.length > 0 && p.client.length < bundle.years.length);
    if (!gapped) return;
    const metric = bundle.metrics.find((m) => m.id === gapped.metric_id)!;
    const state = { ...initialState(bundle), metric: metric.id,
                    category: metric.category };
    const root = container();
    renderTrends(root, bundle, state);
    expect(root.textContent).toContain("gaps for your district");
  });
});
