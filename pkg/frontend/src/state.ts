/** Filter state derivation: only combinations present in the loaded bundle
 * are ever offered, so invalid states are unreachable by construction. */

import { leaderboardFor, metricById } from "./bundle.js";
import type { Bundle, FilterState, MetricDef } from "./types.js";

export function categories(bundle: Bundle): string[] {
  const seen: string[] = [];
  for (const metric of bundle.metrics) {
    if (!seen.includes(metric.category)) {
      seen.push(metric.category);
    }
  }
  return seen;
}

export function metricsInCategory(bundle: Bundle, category: string): MetricDef[] {
  return bundle.metrics.filter((m) => m.category === category);
}

/** Subgroups that actually have a leaderboard for the metric, 'all' first. */
export function subgroupsFor(bundle: Bundle, metric: string): string[] {
  const seen: string[] = [];
  for (const board of bundle.leaderboards) {
    if (board.metric_id === metric && !seen.includes(board.subgroup)) {
      seen.push(board.subgroup);
    }
  }
  seen.sort((a, b) => (a === "all" ? -1 : b === "all" ? 1 : a < b ? -1 : 1));
  return seen;
}

/** Years with data for (metric, subgroup), ascending. */
export function availableYears(bundle: Bundle, metric: string,
                               subgroup: string): number[] {
  return bundle.years.filter(
    (year) => leaderboardFor(bundle, metric, year, subgroup) !== undefined);
}

export function subgroupDisabled(bundle: Bundle, metric: string): boolean {
  const def = metricById(bundle, metric);
  return def !== undefined && !def.subgrouped;
}

export function initialState(bundle: Bundle): FilterState {
  const category = categories(bundle)[0];
  const metric = metricsInCategory(bundle, category)[0].id;
  return clampState(bundle, {
    year: bundle.years[bundle.years.length - 1],
    subgroup: "all",
    funding: "all",
    category,
    metric,
  });
}

/** Repair a state after any single-field change: metric follows category,
 * subgroup and year snap to available combinations. */
export function clampState(bundle: Bundle, state: FilterState): FilterState {
  const next = { ...state };
  if (!categories(bundle).includes(next.category)) {
    next.category = categories(bundle)[0];
  }
  const metrics = metricsInCategory(bundle, next.category);
  if (!metrics.some((m) => m.id === next.metric)) {
    next.metric = metrics[0].id;
  }
  const subgroups = subgroupsFor(bundle, next.metric);
  if (subgroupDisabled(bundle, next.metric) || subgroups.length === 0) {
    next.subgroup = "all";
  } else if (!subgroups.includes(next.subgroup)) {
    next.subgroup = subgroups[0];
  }
  const years = availableYears(bundle, next.metric, next.subgroup);
  if (years.length > 0 && !years.includes(next.year)) {
    let nearest = years[0];
    for (const year of years) {
      if (Math.abs(year - next.year) < Math.abs(nearest - next.year)) {
        nearest = year;
      }
    }
    next.year = nearest;
  }
  return next;
}
