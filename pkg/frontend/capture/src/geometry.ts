/**
 * Banner geometry from inline styles.
 *
 * jsdom performs no layout, so bounding boxes are resolved from the
 * element's inline style (left/top/right/bottom/width/height in px, %,
 * vw or vh) against the configured viewport. Fixture pages and most
 * real-world banner overlays declare their geometry this way; anything
 * unresolvable falls back to a zero-size box, which the engine treats as
 * a non-blocking candidate.
 */

export interface Viewport {
  width: number;
  height: number;
}

export interface Box {
  x: number;
  y: number;
  w: number;
  h: number;
}

function parseLength(raw: string | undefined, relativeTo: number): number | null {
  if (!raw) return null;
  const value = raw.trim();
  if (value.endsWith("px")) return parseFloat(value);
  if (value.endsWith("%")) return (parseFloat(value) / 100) * relativeTo;
  if (value.endsWith("vw") || value.endsWith("vh")) {
    return (parseFloat(value) / 100) * relativeTo;
  }
  const bare = parseFloat(value);
  return Number.isFinite(bare) && /^[\d.]+$/.test(value) ? bare : null;
}

function styleMap(styleAttr: string | null): Map<string, string> {
  const map = new Map<string, string>();
  for (const part of (styleAttr ?? "").split(";")) {
    const idx = part.indexOf(":");
    if (idx > 0) {
      map.set(part.slice(0, idx).trim().toLowerCase(), part.slice(idx + 1).trim());
    }
  }
  return map;
}

export function resolveBox(styleAttr: string | null, viewport: Viewport): Box {
  const style = styleMap(styleAttr);
  const w = parseLength(style.get("width"), viewport.width) ?? 0;
  const h = parseLength(style.get("height"), viewport.height) ?? 0;
  let x = parseLength(style.get("left"), viewport.width);
  let y = parseLength(style.get("top"), viewport.height);
  const right = parseLength(style.get("right"), viewport.width);
  const bottom = parseLength(style.get("bottom"), viewport.height);
  if (x === null) x = right !== null ? viewport.width - right - w : 0;
  if (y === null) y = bottom !== null ? viewport.height - bottom - h : 0;
  return { x, y, w, h };
}

export function isPositioned(styleAttr: string | null): boolean {
  const position = styleMap(styleAttr).get("position");
  return position === "fixed" || position === "absolute" || position === "sticky";
}

export function isHidden(styleAttr: string | null): boolean {
  const style = styleMap(styleAttr);
  return style.get("display") === "none" || style.get("visibility") === "hidden";
}

/** Does the box cover the viewport's center point (where the user would interact)? */
export function coversCenter(box: Box, viewport: Viewport): boolean {
  const cx = viewport.width / 2;
  const cy = viewport.height / 2;
  return box.x <= cx && cx <= box.x + box.w && box.y <= cy && cy <= box.y + box.h;
}
