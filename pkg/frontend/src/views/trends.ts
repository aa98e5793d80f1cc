/** Trends view: the client's history for the selected metric against peer
 * median, county mean, and state mean. Missing or suppressed years break
 * the line into labeled gaps; lines differ by dash pattern as well as
 * color. */

import { metricById } from "../bundle.js";
import { clear, el, num, svgEl } from "../dom.js";
import type { Bundle, FilterState, TrendPanelDoc } from "../types.js";

const WIDTH = 860;
const HEIGHT = 340;
const PAD = 56;

const LINES: { key: keyof Pick<TrendPanelDoc,
    "client" | "peer_median" | "county_mean" | "state_mean">;
    label: string; cls: string }[] = [
  { key: "client", label: "your district", cls: "line-client" },
  { key: "peer_median", label: "peer median", cls: "line-peers" },
  { key: "county_mean", label: "county mean", cls: "line-county" },
  { key: "state_mean", label: "state mean", cls: "line-state" },
];

export function renderTrends(root: HTMLElement, bundle: Bundle,
                             state: FilterState): void {
  clear(root);
  const panel = bundle.trend_panels.find((p) => p.metric_id === state.metric);
  const metric = metricById(bundle, state.metric);
  root.append(el("h2", {},
                 `${metric?.display_name ?? state.metric}, ten-year view (all students)`));
  if (!panel) {
    root.append(el("p", { class: "gap-note", "data-empty": "true" },
                   "No trend panel for this metric."));
    return;
  }

  const values: number[] = [];
  for (const line of LINES) {
    for (const [, value] of panel[line.key]) values.push(value);
  }
  if (values.length === 0) {
    root.append(el("p", { class: "gap-note", "data-empty": "true" },
                   "No publishable history for this metric "
                   + "(suppressed or missing cells render as gaps)."));
    return;
  }
  const years = bundle.years;
  const vMin = Math.min(...values);
  const vMax = Math.max(...values);
  const sx = (year: number) =>
    PAD + ((year - years[0]) / Math.max(years[years.length - 1] - years[0], 1))
    * (WIDTH - 2 * PAD);
  const sy = (value: number) =>
    HEIGHT - PAD - ((value - vMin) / (vMax - vMin || 1)) * (HEIGHT - 2 * PAD);

  const svg = svgEl("svg", { viewBox: `0 0 ${WIDTH} ${HEIGHT}`, class: "trends",
                             role: "img", "data-metric": panel.metric_id });
  svg.append(
    svgEl("line", { x1: PAD, y1: HEIGHT - PAD, x2: WIDTH - PAD,
                    y2: HEIGHT - PAD, class: "axis" }),
    svgEl("line", { x1: PAD, y1: PAD, x2: PAD, y2: HEIGHT - PAD, class: "axis" }),
    svgEl("text", { x: PAD - 6, y: HEIGHT - PAD, "text-anchor": "end",
                    class: "tick" }, num(vMin)),
    svgEl("text", { x: PAD - 6, y: PAD, "text-anchor": "end", class: "tick" },
          num(vMax)),
  );
  for (const year of years) {
    svg.append(svgEl("text", { x: sx(year), y: HEIGHT - PAD + 16,
                               "text-anchor": "middle", class: "tick" },
                     String(year)));
  }

  for (const line of LINES) {
    const points = panel[line.key];
    if (points.length === 0) continue;
    // split into segments at missing years so gaps stay visible
    const present = new Map(points);
    let segment: string[] = [];
    const flush = () => {
      if (segment.length >= 2) {
        svg.append(svgEl("polyline", { points: segment.join(" "),
                                       class: `trend-line ${line.cls}` }));
      }
      segment = [];
    };
    for (const year of years) {
      const value = present.get(year);
      if (value === undefined) {
        flush();
        continue;
      }
      segment.push(`${sx(year)},${sy(value)}`);
      svg.append(svgEl("circle", { cx: sx(year), cy: sy(value), r: 3,
                                   class: `trend-dot ${line.cls}`,
                                   "data-line": line.key,
                                   "data-year": year,
                                   "data-value": String(value) }));
    }
    flush();
  }
  root.append(svg);

  const legend = el("p", { class: "legend" });
  for (const line of LINES) {
    legend.append(el("span", { class: `legend-item ${line.cls}` },
                     el("span", { class: "swatch" }), ` ${line.label}  `));
  }
  root.append(legend);

  const roc = panel.rate_of_change;
  const rocText = roc.insufficient
    ? "rate of change: insufficient history (fewer than 3 points)"
    : `rate of change: slope ${num(roc.slope)} per year, `
      + `fractional change ${num(roc.pct_change)}`;
  root.append(el("p", { class: "roc", "data-roc": "true" }, rocText));

  const clientYears = new Set(panel.client.map(([year]) => year));
  const gaps = years.filter((year) => !clientYears.has(year));
  if (gaps.length > 0) {
    root.append(el("p", { class: "gap-note" },
                   `gaps for your district (suppressed or missing): ${gaps.join(", ")}`));
  }
}
