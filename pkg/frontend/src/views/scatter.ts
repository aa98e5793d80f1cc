/** Scatter view: preset cross-silo pairings from the bundle, or any metric
 * pair fetched from the service when one is connected. The client district
 * is ringed and labeled. */

import { districtName, metricById } from "../bundle.js";
import { clear, el, num, svgEl } from "../dom.js";
import type { Bundle, ScatterDoc } from "../types.js";

const SIZE = 520;
const PAD = 54;

export function renderScatter(root: HTMLElement, bundle: Bundle,
                              presetIndex: number,
                              onPreset: (index: number) => void,
                              extra?: ScatterDoc): void {
  clear(root);
  root.append(el("h2", {}, "Explore relations across data silos"));

  const picker = el("select", { class: "preset-picker", "aria-label": "scatter preset" });
  bundle.scatter_presets.forEach((preset, index) => {
    const xName = metricById(bundle, preset.x_metric)?.display_name ?? preset.x_metric;
    const yName = metricById(bundle, preset.y_metric)?.display_name ?? preset.y_metric;
    const option = el("option", { value: index }, `${xName} vs ${yName}`);
    if (index === presetIndex && !extra) option.setAttribute("selected", "true");
    picker.append(option);
  });
  picker.addEventListener("change", () => onPreset(Number(picker.value)));
  root.append(el("div", { class: "controls-row" }, picker));

  const doc = extra ?? bundle.scatter_presets[presetIndex];
  if (!doc || doc.points.length === 0) {
    root.append(el("p", { class: "gap-note", "data-empty": "true" },
                   "No paired data for this selection."));
    return;
  }
  root.append(plot(bundle, doc));

  const stats = el("p", { class: "scatter-stats" });
  stats.append(`r = ${num(doc.r)}`);
  if (doc.fit) {
    stats.append(`, fit slope ${num(doc.fit[0])}, intercept ${num(doc.fit[1])}`);
  }
  stats.append(` (${doc.year}, ${doc.subgroup})`);
  root.append(stats);
}

function plot(bundle: Bundle, doc: ScatterDoc): SVGElement {
  const xs = doc.points.map((p) => p[1]);
  const ys = doc.points.map((p) => p[2]);
  const xMin = Math.min(...xs);
  const xMax = Math.max(...xs);
  const yMin = Math.min(...ys);
  const yMax = Math.max(...ys);
  const sx = (x: number) =>
    PAD + ((x - xMin) / (xMax - xMin || 1)) * (SIZE - 2 * PAD);
  const sy = (y: number) =>
    SIZE - PAD - ((y - yMin) / (yMax - yMin || 1)) * (SIZE - 2 * PAD);

  const svg = svgEl("svg", { viewBox: `0 0 ${SIZE} ${SIZE}`, class: "scatter",
                             role: "img" });
  svg.append(
    svgEl("line", { x1: PAD, y1: SIZE - PAD, x2: SIZE - PAD, y2: SIZE - PAD,
                    class: "axis" }),
    svgEl("line", { x1: PAD, y1: PAD, x2: PAD, y2: SIZE - PAD, class: "axis" }),
    // axis extremes are bundle values, shown verbatim
    svgEl("text", { x: PAD, y: SIZE - PAD + 16, class: "tick" }, num(xMin)),
    svgEl("text", { x: SIZE - PAD, y: SIZE - PAD + 16, "text-anchor": "end",
                    class: "tick" }, num(xMax)),
    svgEl("text", { x: PAD - 6, y: SIZE - PAD, "text-anchor": "end",
                    class: "tick" }, num(yMin)),
    svgEl("text", { x: PAD - 6, y: PAD, "text-anchor": "end", class: "tick" },
          num(yMax)),
    svgEl("text", { x: SIZE / 2, y: SIZE - 12, "text-anchor": "middle",
                    class: "axis-label" },
          metricById(bundle, doc.x_metric)?.display_name ?? doc.x_metric),
    svgEl("text", { x: 14, y: SIZE / 2, class: "axis-label",
                    transform: `rotate(-90 14 ${SIZE / 2})`,
                    "text-anchor": "middle" },
          metricById(bundle, doc.y_metric)?.display_name ?? doc.y_metric),
  );

  if (doc.fit) {
    const [slope, intercept] = doc.fit;
    const clampY = (y: number) => Math.max(PAD, Math.min(SIZE - PAD, sy(y)));
    svg.append(svgEl("line", {
      x1: sx(xMin), y1: clampY(slope * xMin + intercept),
      x2: sx(xMax), y2: clampY(slope * xMax + intercept),
      class: "fit-line",
    }));
  }

  for (const [districtId, x, y] of doc.points) {
    const isClient = districtId === bundle.client.id;
    const group = svgEl("g", {
      class: isClient ? "point client" : "point",
      "data-district": districtId,
      "data-x": String(x),
      "data-y": String(y),
    });
    group.append(svgEl("circle", { cx: sx(x), cy: sy(y), r: isClient ? 7 : 4 }));
    group.append(svgEl("title", {},
                       `${districtName(bundle, districtId)}: ${num(x)}, ${num(y)}`));
    if (isClient) {
      group.append(svgEl("circle", { cx: sx(x), cy: sy(y), r: 11,
                                     class: "client-ring" }));
      group.append(svgEl("text", { x: sx(x), y: sy(y) - 14,
                                   "text-anchor": "middle",
                                   class: "client-label" }, "you"));
    }
    svg.append(group);
  }
  return svg;
}
