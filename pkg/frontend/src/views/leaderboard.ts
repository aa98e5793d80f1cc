/** Leaderboard view: client + peers ranked on one metric/year/subgroup,
 * client highlighted with an accent color plus a marker label. */

import { districtName, leaderboardFor, metricById } from "../bundle.js";
import { clear, el, num } from "../dom.js";
import type { Bundle, FilterState } from "../types.js";

export function renderLeaderboard(root: HTMLElement, bundle: Bundle,
                                  state: FilterState): void {
  clear(root);
  const metric = metricById(bundle, state.metric);
  const board = leaderboardFor(bundle, state.metric, state.year, state.subgroup);
  const title = el("h2", {},
                   `${metric?.display_name ?? state.metric} (${state.year}`
                   + (state.subgroup === "all" ? ")" : `, ${state.subgroup})`));
  root.append(title);

  if (!board || board.rows.length === 0) {
    root.append(el("p", { class: "gap-note", "data-empty": "true" },
                   "No publishable data for this selection "
                   + "(suppressed or missing cells render as gaps)."));
    return;
  }

  const rows = board.rows.filter(([districtId, , , isClient]) => {
    if (isClient || state.funding === "all") return true;
    return bundle.districts[districtId]?.funding_type === state.funding;
  });
  const magnitudes = rows.map(([, value]) => Math.abs(value));
  const span = Math.max(...magnitudes, 1e-12);

  const list = el("ol", { class: "leaderboard", "data-metric": board.metric_id,
                          "data-year": board.year, "data-subgroup": board.subgroup });
  for (const [districtId, value, rank, isClient] of rows) {
    const width = Math.max(2, (Math.abs(value) / span) * 100);
    const item = el("li", {
      class: isClient ? "row client" : "row",
      "data-district": districtId,
      "data-value": String(value),
      "data-rank": rank,
      ...(isClient ? { "aria-current": "true" } : {}),
    });
    item.append(
      el("span", { class: "rank" }, `#${rank}`),
      el("span", { class: "name" },
         districtName(bundle, districtId) + (isClient ? " ◆ (you)" : "")),
      el("span", { class: "bar-track" },
         el("span", { class: "bar", style: `width:${width}%` })),
      el("span", { class: "value" }, num(value)),
    );
    list.append(item);
  }
  root.append(list);

  const notes: string[] = [];
  if (board.dropped > 0) {
    notes.push(`${board.dropped} district(s) omitted: value suppressed or missing.`);
  }
  if (state.funding !== "all") {
    notes.push(`showing ${state.funding} peers plus your district.`);
  }
  if (notes.length) {
    root.append(el("p", { class: "gap-note" }, notes.join(" ")));
  }
}
