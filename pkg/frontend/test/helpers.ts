import { readFileSync } from "node:fs";
import { join } from "node:path";

import { parseBundle } from "../src/bundle.js";
import type { Bundle } from "../src/types.js";

export const GOLDEN_PATH = join(__dirname, "fixtures", "golden.bundle.json");

export function goldenText(): string {
  return readFileSync(GOLDEN_PATH, "utf-8");
}

let cached: Bundle | null = null;

export function golden(): Bundle {
  if (!cached) {
    cached = parseBundle(goldenText());
  }
  return cached;
}

export function container(): HTMLElement {
  const node = document.createElement("div");
  document.body.append(node);
  return node;
}
