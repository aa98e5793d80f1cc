/** Thin client for the read-only HTTP API (optional: the dashboard works
 * from a bundle file alone). */

import type { ScatterDoc } from "./types.js";

export interface DistrictListing {
  id: string;
  name: string;
  grade_span: string;
  county: string;
  funding_type: string;
}

export class ServiceClient {
  constructor(readonly base: string) {}

  private async get(path: string): Promise<unknown> {
    const response = await fetch(`${this.base}${path}`);
    if (!response.ok) {
      let detail = `${response.status}`;
      try {
        const body = await response.json() as { message?: string };
        if (body.message) detail = `${response.status}: ${body.message}`;
      } catch {
        // error body was not JSON; status alone is enough
      }
      throw new Error(`service request failed (${detail})`);
    }
    return response.json();
  }

  districts(): Promise<DistrictListing[]> {
    return this.get("/api/v1/districts") as Promise<DistrictListing[]>;
  }

  bundleText(districtId: string): Promise<string> {
    return fetch(`${this.base}/api/v1/districts/${districtId}/bundle`)
      .then(async (response) => {
        if (!response.ok) {
          throw new Error(`no bundle for ${districtId} (${response.status})`);
        }
        return response.text();
      });
  }

  scatter(districtId: string, x: string, y: string, year: number,
          subgroup: string, scope: "peers" | "all"): Promise<ScatterDoc> {
    const params = new URLSearchParams({
      x, y, year: String(year), subgroup, scope,
    });
    return this.get(`/api/v1/districts/${districtId}/scatter?${params}`) as
      Promise<ScatterDoc>;
  }
}
