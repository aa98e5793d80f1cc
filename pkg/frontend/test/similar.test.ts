import { describe, expect, it } from "vitest";

import { renderSimilar } from "../src/views/similar.js";
import { container, golden } from "./helpers.js";

function hover(node: Element): void {
  node.dispatchEvent(new window.MouseEvent("mouseenter"));
}

function unhover(node: Element): void {
  node.dispatchEvent(new window.MouseEvent("mouseleave"));
}

describe("similar districts view", () => {
  it("renders three feature rows over identical district sets", () => {
    const root = container();
    renderSimilar(root, golden());
    const rows = root.querySelectorAll("svg.similar-row");
    expect(rows).toHaveLength(3);
    const idsPerRow = [...rows].map((row) =>
      [...row.querySelectorAll(".bubble")].map(
        (b) => b.getAttribute("data-district")).sort());
    expect(idsPerRow[0]).toEqual(idsPerRow[1]);
    expect(idsPerRow[1]).toEqual(idsPerRow[2]);
    expect(idsPerRow[0]).toHaveLength(16); // client + 15 peers
  });

  it("hovering a peer highlights exactly its three bubbles", () => {
    const bundle = golden();
    const root = container();
    renderSimilar(root, bundle);
    const peer = bundle.peer_set.members[0].district_id;
    const target = root.querySelector(`.bubble[data-district="${peer}"]`)!;
    hover(target);
    const highlighted = root.querySelectorAll(".bubble.highlight");
    expect(highlighted).toHaveLength(3);
    for (const node of highlighted) {
      expect(node.getAttribute("data-district")).toBe(peer);
    }
  });

  it("hovering the client highlights the client on all rows", () => {
    const bundle = golden();
    const root = container();
    renderSimilar(root, bundle);
    const target = root.querySelector(
      `.bubble[data-district="${bundle.client.id}"]`)!;
    hover(target);
    const highlighted = root.querySelectorAll(".bubble.highlight");
    expect(highlighted).toHaveLength(3);
    for (const node of highlighted) {
      expect(node.getAttribute("data-district")).toBe(bundle.client.id);
    }
  });

  it("unhovering restores zero highlighted bubbles", () => {
    const bundle = golden();
    const root = container();
    renderSimilar(root, bundle);
    const peer = bundle.peer_set.members[3].district_id;
    const target = root.querySelector(`.bubble[data-district="${peer}"]`)!;
    hover(target);
    expect(root.querySelectorAll(".bubble.highlight").length).toBe(3);
    unhover(target);
    expect(root.querySelectorAll(".bubble.highlight")).toHaveLength(0);
  });

  it("tooltip shows raw and standardized values verbatim", () => {
    const bundle = golden();
    const root = container();
    renderSimilar(root, bundle);
    const row = bundle.similarity_panel.rows[1]; // pct_el
    const entry = row.entries.find((e) => !e.is_client)!;
    const target = root.querySelector(
      `svg[data-feature="${row.feature}"] .bubble[data-district="${entry.district_id}"]`)!;
    hover(target);
    const tooltip = root.querySelector(".tooltip") as HTMLElement;
    expect(tooltip.hidden).toBe(false);
    expect(tooltip.textContent).toContain(String(entry.raw));
    expect(tooltip.textContent).toContain(String(entry.standardized));
    unhover(target);
    expect(tooltip.hidden).toBe(true);
  });

  it("client bubbles carry a marker and label beyond color", () => {
    const bundle = golden();
    const root = container();
    renderSimilar(root, bundle);
    const clientBubbles = root.querySelectorAll(
      `.bubble.client[data-district="${bundle.client.id}"]`);
    expect(clientBubbles).toHaveLength(3);
    for (const node of clientBubbles) {
      expect(node.querySelector(".client-marker")).not.toBeNull();
      expect(node.querySelector(".client-label")?.textContent).toBe("you");
    }
  });
});
