/** Similar-districts view: one bubble row per displayed match feature.
 * Hovering any bubble highlights that district's bubble on all three rows
 * and shows raw + standardized values. Bubble area tracks the feature's
 * contribution to the match distance (bigger = less similar on that
 * feature); the client carries a diamond marker, not just a color. */

import { districtName } from "../bundle.js";
import { clear, el, num, svgEl } from "../dom.js";
import type { Bundle, SimilarityEntry } from "../types.js";

const WIDTH = 860;
const ROW_HEIGHT = 64;
const PAD = 90;

const FEATURE_LABELS: Record<string, string> = {
  parent_ed_index: "Parent education index",
  pct_el: "English learners (%)",
  pct_frpm: "FRPM-eligible (%)",
};

export function renderSimilar(root: HTMLElement, bundle: Bundle): void {
  clear(root);
  root.append(el("h2", {}, `15 most similar districts to ${bundle.client.name}`));
  root.append(el("p", { class: "gap-note" },
                 "Bubble size shows how much that feature contributes to the "
                 + "match distance. Hover a bubble to see the district on "
                 + "every row."));
  if (bundle.peer_set.short_pool) {
    root.append(el("p", { class: "gap-note" },
                   "Fewer eligible same-grade-span districts than requested; "
                   + "showing the whole pool."));
  }

  const tooltip = el("div", { class: "tooltip", hidden: true });
  const panel = el("div", { class: "similar-panel" });

  for (const row of bundle.similarity_panel.rows) {
    const zs = row.entries.map((entry) => entry.standardized);
    const zMin = Math.min(...zs, -0.5);
    const zMax = Math.max(...zs, 0.5);
    const x = (z: number) =>
      PAD + ((z - zMin) / (zMax - zMin || 1)) * (WIDTH - 2 * PAD);

    const svg = svgEl("svg", { viewBox: `0 0 ${WIDTH} ${ROW_HEIGHT}`,
                               class: "similar-row", role: "img",
                               "data-feature": row.feature });
    svg.append(svgEl("line", { x1: PAD, y1: ROW_HEIGHT / 2, x2: WIDTH - PAD,
                               y2: ROW_HEIGHT / 2, class: "axis" }));
    const maxContribution = Math.max(
      ...row.entries.map((entry) => entry.contribution), 1e-9);
    for (const entry of row.entries) {
      svg.append(bubble(bundle, row.feature, entry, x(entry.standardized),
                        maxContribution, tooltip, panel));
    }
    const block = el("div", { class: "feature-block" },
                     el("h3", {}, FEATURE_LABELS[row.feature] ?? row.feature));
    block.append(svg);
    panel.append(block);
  }
  root.append(panel, tooltip);
}

function bubble(bundle: Bundle, feature: string, entry: SimilarityEntry,
                cx: number, maxContribution: number, tooltip: HTMLElement,
                panel: HTMLElement): SVGElement {
  const radius = entry.is_client
    ? 9
    : 5 + 11 * Math.sqrt(entry.contribution / maxContribution);
  const group = svgEl("g", {
    class: entry.is_client ? "bubble client" : "bubble",
    "data-district": entry.district_id,
    "data-feature": feature,
    "data-raw": String(entry.raw),
    "data-z": String(entry.standardized),
  });
  group.append(svgEl("circle", { cx, cy: ROW_HEIGHT / 2, r: radius }));
  if (entry.is_client) {
    // marker + label so the client is findable without color vision
    group.append(svgEl("path", {
      class: "client-marker",
      d: `M ${cx} ${ROW_HEIGHT / 2 - radius - 8} l 5 5 l -5 5 l -5 -5 z`,
    }));
    group.append(svgEl("text", { x: cx, y: ROW_HEIGHT / 2 - radius - 16,
                                 "text-anchor": "middle", class: "client-label" },
                       "you"));
  }
  group.addEventListener("mouseenter", () => {
    for (const other of panel.querySelectorAll(
        `.bubble[data-district="${entry.district_id}"]`)) {
      other.classList.add("highlight");
    }
    tooltip.textContent =
      `${districtName(bundle, entry.district_id)}: ${feature} ${num(entry.raw)}`
      + ` (standardized ${num(entry.standardized)})`;
    tooltip.hidden = false;
  });
  group.addEventListener("mouseleave", () => {
    for (const other of panel.querySelectorAll(".bubble.highlight")) {
      other.classList.remove("highlight");
    }
    tooltip.hidden = true;
  });
  return group;
}
