import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { App } from "../src/app.js";
import { leaderboardFor } from "../src/bundle.js";
import { container, golden, goldenText } from "./helpers.js";

describe("app shell (file-only mode)", () => {
  beforeEach(() => {
    // file-only mode must not touch the network
    vi.stubGlobal("fetch", vi.fn(() => {
      throw new Error("network access attempted in file-only mode");
    }));
  });

  afterEach(() => {
    vi.unstubAllGlobals();
  });

  function loadedApp(): App {
    const app = new App(container());
    app.loadBundleText(goldenText());
    return app;
  }

  it("loads a bundle from text alone and renders a view", () => {
    const app = loadedApp();
    expect(app.bundle?.client.id).toBe(golden().client.id);
    expect(app.root.querySelector("[data-view]")).not.toBeNull();
  });

  it("navigation exposes all four views", () => {
    const app = loadedApp();
    const routes = [...app.root.querySelectorAll("nav.views a")].map(
      (a) => a.getAttribute("data-route"));
    expect(routes).toEqual(["similar", "leaderboards", "scatter", "trends"]);
    for (const route of ["leaderboards", "scatter", "trends", "similar"] as const) {
      app.setRoute(route);
      expect(app.root.querySelector(`[data-view="${route}"]`)).not.toBeNull();
    }
  });

  it("category navigation covers all seven categories", () => {
    const app = loadedApp();
    const options = [...app.root.querySelectorAll(
      'select[data-filter="category"] option')].map((o) => o.getAttribute("value"));
    expect(options).toHaveLength(7);
    expect(new Set(options).size).toBe(7);
  });

  it("filter changes re-render leaderboards from the loaded bundle", () => {
    const app = loadedApp();
    app.setRoute("leaderboards");
    app.setFilters({ category: "assessments", metric: "math_score_g6" });
    const years = app.bundle!.years;
    for (const year of [years[years.length - 2], years[years.length - 1]]) {
      app.setFilters({ year });
      const board = leaderboardFor(app.bundle!, "math_score_g6", year, "all")!;
      const rendered = [...app.root.querySelectorAll("li.row")].map(
        (row) => [row.getAttribute("data-district"),
                  row.getAttribute("data-value")]);
      expect(rendered).toEqual(
        board.rows.map(([id, value]) => [id, String(value)]));
    }
  });

  it("subgroup switch reproduces the bundle's subgroup board", () => {
    const app = loadedApp();
    app.setRoute("leaderboards");
    app.setFilters({ category: "assessments", metric: "math_score_g6",
                     subgroup: "english_learner" });
    const state = app.filters!;
    const board = leaderboardFor(app.bundle!, "math_score_g6", state.year,
                                 "english_learner")!;
    const rendered = [...app.root.querySelectorAll("li.row")].map(
      (row) => row.getAttribute("data-district"));
    expect(rendered).toEqual(board.rows.map(([id]) => id));
  });

  it("subgroup control is disabled for non-subgrouped metrics", () => {
    const app = loadedApp();
    app.setFilters({ category: "finance", metric: "revenue_total" });
    const select = app.root.querySelector(
      'select[data-filter="subgroup"]') as HTMLSelectElement;
    expect(select.disabled).toBe(true);
    expect(app.filters!.subgroup).toBe("all");
  });

  it("unavailable years are disabled in the year control", () => {
    const app = loadedApp();
    app.setFilters({ category: "graduation_dropout", metric: "grad_rate",
                     subgroup: "frpm" });
    const options = [...app.root.querySelectorAll(
      'select[data-filter="year"] option')];
    expect(options).toHaveLength(app.bundle!.years.length);
    const enabledYears = options.filter(
      (o) => !(o as HTMLOptionElement).disabled)
      .map((o) => Number(o.getAttribute("value")));
    for (const year of enabledYears) {
      expect(leaderboardFor(app.bundle!, "grad_rate", year, "frpm"))
        .toBeDefined();
    }
  });

  it("funding filter keeps the client on the board", () => {
    const app = loadedApp();
    app.setRoute("leaderboards");
    app.setFilters({ category: "student_demography", metric: "enrollment",
                     funding: "basic_aid" });
    const clientRows = app.root.querySelectorAll("li.row.client");
    expect(clientRows).toHaveLength(1);
  });

  it("schema mismatch shows an error screen naming versions, never blank", () => {
    const app = new App(container());
    const doc = JSON.parse(goldenText());
    doc.schema_version = "99";
    app.loadBundleText(JSON.stringify(doc));
    const screen = app.root.querySelector(".error-screen")!;
    expect(screen).not.toBeNull();
    expect(screen.textContent).toContain('"99"');
    expect(screen.textContent).toContain('"1"');
    expect(app.bundle).toBeNull();
  });

  it("malformed bundle shows an error screen with no partial render", () => {
    const app = new App(container());
    app.loadBundleText("{ this is not json");
    expect(app.root.querySelector(".error-screen")).not.toBeNull();
    expect(app.root.querySelector("[data-view]")).toBeNull();
  });

  it("client name is visible in the header once loaded", () => {
    const app = loadedApp();
    expect(app.root.querySelector(".client-name")!.textContent)
      .toContain(golden().client.name);
  });
});
