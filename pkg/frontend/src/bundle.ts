/** Bundle parsing and lookup. Parsing either yields a complete, version-
 * checked bundle or throws BundleError; there is no partial result. */

import type { Bundle, LeaderboardDoc, MetricDef } from "./types.js";

export const SUPPORTED_SCHEMA = "1";

const REQUIRED_FIELDS = [
  "schema_version", "client", "districts", "metrics", "years", "peer_set",
  "leaderboards", "trend_panels", "scatter_presets", "similarity_panel",
  "qa_summary",
] as const;

export class BundleError extends Error {}

export function parseBundle(text: string): Bundle {
  let doc: unknown;
  try {
    doc = JSON.parse(text);
  } catch (exc) {
    throw new BundleError(`bundle is not valid JSON: ${(exc as Error).message}`);
  }
  if (typeof doc !== "object" || doc === null || Array.isArray(doc)) {
    throw new BundleError("bundle is not a JSON object");
  }
  const record = doc as Record<string, unknown>;
  const version = record["schema_version"];
  if (version !== SUPPORTED_SCHEMA) {
    throw new BundleError(
      `bundle schema_version ${JSON.stringify(version)} is not supported; ` +
      `this dashboard reads schema_version "${SUPPORTED_SCHEMA}"`);
  }
  for (const field of REQUIRED_FIELDS) {
    if (!(field in record)) {
      throw new BundleError(`bundle is missing required field "${field}"`);
    }
  }
  return record as unknown as Bundle;
}

const boardIndexes = new WeakMap<Bundle, Map<string, LeaderboardDoc>>();

function boardKey(metric: string, year: number, subgroup: string): string {
  return `${metric}|${year}|${subgroup}`;
}

export function leaderboardFor(bundle: Bundle, metric: string, year: number,
                               subgroup: string): LeaderboardDoc | undefined {
  let index = boardIndexes.get(bundle);
  if (!index) {
    index = new Map();
    for (const board of bundle.leaderboards) {
      index.set(boardKey(board.metric_id, board.year, board.subgroup), board);
    }
    boardIndexes.set(bundle, index);
  }
  return index.get(boardKey(metric, year, subgroup));
}

export function metricById(bundle: Bundle, id: string): MetricDef | undefined {
  return bundle.metrics.find((m) => m.id === id);
}

export function districtName(bundle: Bundle, id: string): string {
  return bundle.districts[id]?.name ?? id;
}
