/**
 * Minimal deterministic SVG builder: linear scales, nice ticks, axes, line
 * and band paths. Numbers are formatted with a fixed precision so identical
 * inputs always yield byte-identical files.
 */

export function fmt(v: number): string {
  if (!Number.isFinite(v)) return "0";
  const s = v.toPrecision(6);
  return s.includes(".") ? s.replace(/\.?0+$/, "").replace(/\.?0+e/, "e") : s;
}

export function esc(s: string): string {
  return s
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export interface Scale {
  (v: number): number;
  domain: [number, number];
  range: [number, number];
}

export function linearScale(
  domain: [number, number],
  range: [number, number],
): Scale {
  const [d0, d1] = domain;
  const [r0, r1] = range;
  const span = d1 - d0 || 1;
  const scale = ((v: number) => r0 + ((v - d0) / span) * (r1 - r0)) as Scale;
  scale.domain = domain;
  scale.range = range;
  return scale;
}

export function niceTicks(lo: number, hi: number, n = 5): number[] {
  if (!(hi > lo)) return [lo];
  const rawStep = (hi - lo) / Math.max(n, 1);
  const mag = Math.pow(10, Math.floor(Math.log10(rawStep)));
  let step = mag;
  for (const m of [1, 2, 2.5, 5, 10]) {
    if (m * mag >= rawStep) {
      step = m * mag;
      break;
    }
  }
  const start = Math.ceil(lo / step) * step;
  const ticks: number[] = [];
  for (let t = start; t <= hi + 1e-12 * step; t += step) {
    ticks.push(Math.abs(t) < step * 1e-9 ? 0 : t);
  }
  return ticks;
}

export function pad(lo: number, hi: number, frac = 0.05): [number, number] {
  if (!(hi > lo)) return [lo - 1, hi + 1];
  const p = (hi - lo) * frac;
  return [lo - p, hi + p];
}

export interface Panel {
  x: Scale;
  y: Scale;
  body: string[];
}

export function linePath(xs: number[], ys: number[], x: Scale, y: Scale): string {
  const parts: string[] = [];
  for (let i = 0; i < xs.length; i++) {
    parts.push(`${i === 0 ? "M" : "L"}${fmt(x(xs[i]))},${fmt(y(ys[i]))}`);
  }
  return parts.join("");
}

export function bandPath(
  xs: number[],
  lo: number[],
  hi: number[],
  x: Scale,
  y: Scale,
): string {
  const fwd: string[] = [];
  const back: string[] = [];
  for (let i = 0; i < xs.length; i++) {
    fwd.push(`${i === 0 ? "M" : "L"}${fmt(x(xs[i]))},${fmt(y(hi[i]))}`);
  }
  for (let i = xs.length - 1; i >= 0; i--) {
    back.push(`L${fmt(x(xs[i]))},${fmt(y(lo[i]))}`);
  }
  return fwd.join("") + back.join("") + "Z";
}

export interface PanelBox {
  left: number;
  top: number;
  width: number;
  height: number;
}

export function axes(
  box: PanelBox,
  x: Scale,
  y: Scale,
  opts: { xLabel?: string; yLabel?: string; title?: string } = {},
): string {
  const parts: string[] = [];
  const bottom = box.top + box.height;
  const right = box.left + box.width;
  parts.push(
    `<rect x="${fmt(box.left)}" y="${fmt(box.top)}" width="${fmt(box.width)}" height="${fmt(box.height)}" fill="none" stroke="#999" stroke-width="1"/>`,
  );
  for (const t of niceTicks(x.domain[0], x.domain[1])) {
    const px = x(t);
    parts.push(
      `<line x1="${fmt(px)}" y1="${fmt(bottom)}" x2="${fmt(px)}" y2="${fmt(bottom + 4)}" stroke="#555"/>`,
      `<text x="${fmt(px)}" y="${fmt(bottom + 16)}" font-size="10" text-anchor="middle" fill="#333">${fmt(t)}</text>`,
    );
  }
  for (const t of niceTicks(y.domain[0], y.domain[1])) {
    const py = y(t);
    parts.push(
      `<line x1="${fmt(box.left - 4)}" y1="${fmt(py)}" x2="${fmt(box.left)}" y2="${fmt(py)}" stroke="#555"/>`,
      `<text x="${fmt(box.left - 6)}" y="${fmt(py + 3)}" font-size="10" text-anchor="end" fill="#333">${fmt(t)}</text>`,
    );
  }
  if (opts.title) {
    parts.push(
      `<text x="${fmt(box.left + box.width / 2)}" y="${fmt(box.top - 6)}" font-size="11" text-anchor="middle" fill="#000">${esc(opts.title)}</text>`,
    );
  }
  if (opts.xLabel) {
    parts.push(
      `<text x="${fmt(box.left + box.width / 2)}" y="${fmt(bottom + 30)}" font-size="11" text-anchor="middle" fill="#000">${esc(opts.xLabel)}</text>`,
    );
  }
  if (opts.yLabel) {
    const cx = box.left - 34;
    const cy = box.top + box.height / 2;
    parts.push(
      `<text x="${fmt(cx)}" y="${fmt(cy)}" font-size="11" text-anchor="middle" fill="#000" transform="rotate(-90 ${fmt(cx)} ${fmt(cy)})">${esc(opts.yLabel)}</text>`,
    );
  }
  return parts.join("\n");
}

export function svgDocument(
  width: number,
  height: number,
  body: string[],
): string {
  return [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" viewBox="0 0 ${width} ${height}">`,
    `<rect width="${width}" height="${height}" fill="#ffffff"/>`,
    ...body,
    "</svg>",
    "",
  ].join("\n");
}
