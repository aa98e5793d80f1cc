/** Tiny DOM helpers; every view builds its subtree through these. */

const SVG_NS = "http://www.w3.org/2000/svg";

type Attrs = Record<string, string | number | boolean>;

export function el<K extends keyof HTMLElementTagNameMap>(
    tag: K, attrs: Attrs = {}, ...children: (Node | string)[]
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  applyAttrs(node, attrs);
  node.append(...children);
  return node;
}

export function svgEl(tag: string, attrs: Attrs = {},
                      ...children: (Node | string)[]): SVGElement {
  const node = document.createElementNS(SVG_NS, tag) as SVGElement;
  applyAttrs(node, attrs);
  node.append(...children);
  return node;
}

function applyAttrs(node: Element, attrs: Attrs): void {
  for (const [key, value] of Object.entries(attrs)) {
    if (value === false) continue;
    if (key === "disabled" && value === true && "disabled" in node) {
      (node as HTMLButtonElement).disabled = true;
      continue;
    }
    node.setAttribute(key, String(value));
  }
}

export function clear(node: Element): void {
  while (node.firstChild) {
    node.removeChild(node.firstChild);
  }
}

/** Verbatim bundle number: JSON round-trip keeps the shortest form, so the
 * displayed text is exactly what the bundle carries. The UI never computes
 * statistics, only layout. */
export function num(value: number | null): string {
  return value === null ? "n/a" : String(value);
}
