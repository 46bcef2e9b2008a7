/**
 * The six figure kinds rendered from engine outputs.
 *
 * Rendering never recomputes statistics: every plotted number comes from the
 * result bundle and is only mapped through axis scales. The one presentation
 * device is histogram binning of raw draws, which exists only for display —
 * the overlaid density curve is read verbatim from the analytic table.
 */
import {
  AcfPayloadSchema,
  FigureSpec,
  IrfQuantilesSchema,
  MissingSeries,
  PrefixCurvesSchema,
  SchemaMismatch,
} from "./schemas.js";
import {
  readDrawsCsv,
  readTraceCsv,
  readXyCsv,
  seriesFromDraws,
} from "./csv.js";
import {
  axes,
  bandPath,
  esc,
  fmt,
  linePath,
  linearScale,
  niceTicks,
  pad,
  PanelBox,
  svgDocument,
} from "./svg.js";

export type InputLoader = (path: string) => string;

const BAND = "#b8cbe4";
const LINE = "#1f4e8c";
const ACCENT = "#b03a2e";
const WARM = "#eeeeee";

function need(spec: FigureSpec, key: string): string {
  const p = spec.inputs[key];
  if (!p) throw new MissingSeries(`figure ${spec.kind}: missing input ${key}`);
  return p;
}

function parseJson<T>(text: string, schema: { safeParse: (v: unknown) => any }, what: string): T {
  let raw: unknown;
  try {
    raw = JSON.parse(text);
  } catch {
    throw new SchemaMismatch(`${what}: not valid JSON`);
  }
  const res = schema.safeParse(raw);
  if (!res.success) {
    throw new SchemaMismatch(`${what}: ${res.error.issues[0]?.message ?? "schema mismatch"}`);
  }
  return res.data as T;
}

function panelGrid(
  width: number,
  height: number,
  rows: number,
  cols: number,
): PanelBox[] {
  const margin = { left: 56, right: 14, top: 34, bottom: 42 };
  const gapX = 34;
  const gapY = 40;
  const pw = (width - margin.left - margin.right - gapX * (cols - 1)) / cols;
  const ph = (height - margin.top - margin.bottom - gapY * (rows - 1)) / rows;
  const boxes: PanelBox[] = [];
  for (let r = 0; r < rows; r++) {
    for (let c = 0; c < cols; c++) {
      boxes.push({
        left: margin.left + c * (pw + gapX),
        top: margin.top + r * (ph + gapY),
        width: pw,
        height: ph,
      });
    }
  }
  return boxes;
}

export function renderIrfFan(spec: FigureSpec, load: InputLoader): string {
  const payload = parseJson<any>(load(need(spec, "quantiles")), IrfQuantilesSchema, "irf quantiles");
  const variables: string[] = spec.variables ?? payload.variables;
  const shocks: string[] = spec.shocks ?? payload.shocks;
  for (const v of variables) {
    if (!payload.variables.includes(v)) throw new MissingSeries(`variable ${v} not in quantile file`);
  }
  for (const s of shocks) {
    if (!payload.shocks.includes(s)) throw new MissingSeries(`shock ${s} not in quantile file`);
  }
  const horizons: number[] = payload.horizons;
  const boxes = panelGrid(spec.width, spec.height, variables.length, shocks.length);
  const body: string[] = [];
  if (spec.title) {
    body.push(`<text x="${fmt(spec.width / 2)}" y="16" font-size="13" text-anchor="middle">${esc(spec.title)}</text>`);
  }
  variables.forEach((v, r) => {
    const vi = payload.variables.indexOf(v);
    shocks.forEach((s, c) => {
      const si = payload.shocks.indexOf(s);
      const box = boxes[r * shocks.length + c];
      const lo: number[] = payload.quantiles.q16[vi][si];
      const mid: number[] = payload.quantiles.q50[vi][si];
      const hi: number[] = payload.quantiles.q84[vi][si];
      const [y0, y1] = pad(Math.min(...lo, 0), Math.max(...hi, 0));
      const x = linearScale([horizons[0], horizons[horizons.length - 1]], [box.left, box.left + box.width]);
      const y = linearScale([y0, y1], [box.top + box.height, box.top]);
      body.push(
        `<path d="${bandPath(horizons, lo, hi, x, y)}" fill="${BAND}" stroke="none"/>`,
        `<line x1="${fmt(box.left)}" y1="${fmt(y(0))}" x2="${fmt(box.left + box.width)}" y2="${fmt(y(0))}" stroke="#888" stroke-dasharray="3,3"/>`,
        `<path d="${linePath(horizons, mid, x, y)}" fill="none" stroke="${LINE}" stroke-width="1.5"/>`,
        axes(box, x, y, { title: `${v} ← ${s}`, xLabel: r === variables.length - 1 ? "horizon" : undefined }),
      );
    });
  });
  return svgDocument(spec.width, spec.height, body);
}

export function renderTrace(spec: FigureSpec, load: InputLoader): string {
  let values: number[];
  let warmupLen = 0;
  let label: string;
  if (spec.inputs.trace && (spec.series === undefined || spec.series === "log_density")) {
    const rows = readTraceCsv(load(spec.inputs.trace)).filter((r) => r.chain === spec.chain);
    if (rows.length === 0) throw new MissingSeries(`chain ${spec.chain} not in trace file`);
    values = rows.map((r) => r.logDensity);
    warmupLen = rows.filter((r) => r.warmup).length;
    label = "log density";
  } else {
    const name = spec.series;
    if (!name) throw new MissingSeries("trace figure needs a series name for draws input");
    const draws = readDrawsCsv(load(need(spec, "draws")));
    const sampling = seriesFromDraws(draws, spec.chain, name);
    let warm: number[] = [];
    if (spec.inputs.warmup_draws) {
      warm = seriesFromDraws(readDrawsCsv(load(spec.inputs.warmup_draws)), spec.chain, name);
    }
    values = [...warm, ...sampling];
    warmupLen = warm.length;
    label = name;
  }
  const box: PanelBox = { left: 64, top: 30, width: spec.width - 84, height: spec.height - 76 };
  const x = linearScale([0, Math.max(values.length - 1, 1)], [box.left, box.left + box.width]);
  const [y0, y1] = pad(Math.min(...values), Math.max(...values));
  const y = linearScale([y0, y1], [box.top + box.height, box.top]);
  const body: string[] = [];
  if (warmupLen > 0) {
    body.push(
      `<rect x="${fmt(box.left)}" y="${fmt(box.top)}" width="${fmt(x(warmupLen - 1) - box.left)}" height="${fmt(box.height)}" fill="${WARM}"/>`,
    );
  }
  const xs = values.map((_, i) => i);
  body.push(
    `<path d="${linePath(xs, values, x, y)}" fill="none" stroke="${LINE}" stroke-width="0.7"/>`,
    axes(box, x, y, { title: spec.title ?? label, xLabel: "iteration", yLabel: label }),
  );
  return svgDocument(spec.width, spec.height, body);
}

export function renderAcf(spec: FigureSpec, load: InputLoader): string {
  const payload = parseJson<any>(load(need(spec, "stats")), AcfPayloadSchema, "ACF payload");
  const names: string[] = spec.series
    ? [spec.series]
    : Object.keys(payload.acf).slice(0, 4);
  for (const n of names) {
    if (!(n in payload.acf)) throw new MissingSeries(`ACF series ${n} not found`);
  }
  const maxLag = Math.min(spec.max_lag ?? payload.acf_max_lag, payload.acf_max_lag);
  const boxes = panelGrid(spec.width, spec.height, names.length, 1);
  const body: string[] = [];
  names.forEach((name, r) => {
    const box = boxes[r];
    const rho: number[] = payload.acf[name].slice(0, maxLag + 1);
    const x = linearScale([0, maxLag], [box.left, box.left + box.width]);
    const y = linearScale([Math.min(0, ...rho) - 0.05, 1.0], [box.top + box.height, box.top]);
    body.push(`<line x1="${fmt(box.left)}" y1="${fmt(y(0))}" x2="${fmt(box.left + box.width)}" y2="${fmt(y(0))}" stroke="#888"/>`);
    rho.forEach((v, lag) => {
      body.push(
        `<line x1="${fmt(x(lag))}" y1="${fmt(y(0))}" x2="${fmt(x(lag))}" y2="${fmt(y(v))}" stroke="${LINE}" stroke-width="2"/>`,
      );
    });
    body.push(axes(box, x, y, { title: `ACF ${name}`, xLabel: r === names.length - 1 ? "lag" : undefined }));
  });
  return svgDocument(spec.width, spec.height, body);
}

function curveFigure(
  spec: FigureSpec,
  load: InputLoader,
  pick: (p: { iterations: number; max_rhat: unknown; min_bulk_ess: unknown; min_tail_ess: unknown }) => Array<[string, number | null]>,
  yLabel: string,
  threshold?: number,
): string {
  const payload = parseJson<any>(load(need(spec, "curves")), PrefixCurvesSchema, "prefix curves");
  const seriesNames = pick(payload.points[0] ?? { iterations: 0, max_rhat: null, min_bulk_ess: null, min_tail_ess: null }).map(([n]) => n);
  const xs: number[] = payload.points.map((p: any) => p.iterations);
  const series: Map<string, Array<number | null>> = new Map(seriesNames.map((n) => [n, []]));
  for (const p of payload.points) {
    for (const [name, value] of pick(p)) {
      series.get(name)!.push(typeof value === "number" ? value : null);
    }
  }
  const finite = [...series.values()].flat().filter((v): v is number => v !== null && Number.isFinite(v));
  if (finite.length === 0) throw new MissingSeries("no finite curve points");
  const box: PanelBox = { left: 64, top: 30, width: spec.width - 84, height: spec.height - 76 };
  const x = linearScale([xs[0], xs[xs.length - 1] || 1], [box.left, box.left + box.width]);
  const loHi = pad(Math.min(...finite, threshold ?? Infinity), Math.max(...finite, threshold ?? -Infinity));
  const y = linearScale(loHi, [box.top + box.height, box.top]);
  const body: string[] = [];
  const colors = [LINE, ACCENT];
  let ci = 0;
  for (const [name, vals] of series) {
    const keep = xs.map((xv, i) => [xv, vals[i]] as const).filter(([, v]) => v !== null) as Array<[number, number]>;
    body.push(
      `<path d="${linePath(keep.map(([a]) => a), keep.map(([, b]) => b), x, y)}" fill="none" stroke="${colors[ci % colors.length]}" stroke-width="1.5"/>`,
      `<text x="${fmt(box.left + box.width - 6)}" y="${fmt(box.top + 14 + 14 * ci)}" font-size="10" text-anchor="end" fill="${colors[ci % colors.length]}">${esc(name)}</text>`,
    );
    ci += 1;
  }
  if (threshold !== undefined) {
    body.push(
      `<line x1="${fmt(box.left)}" y1="${fmt(y(threshold))}" x2="${fmt(box.left + box.width)}" y2="${fmt(y(threshold))}" stroke="#444" stroke-dasharray="4,3"/>`,
    );
  }
  body.push(axes(box, x, y, { title: spec.title, xLabel: "iterations", yLabel }));
  return svgDocument(spec.width, spec.height, body);
}

export function renderRhatCurve(spec: FigureSpec, load: InputLoader): string {
  return curveFigure(
    spec,
    load,
    (p) => [["max R-hat", typeof p.max_rhat === "number" ? p.max_rhat : null]],
    "split R-hat",
    spec.threshold ?? 1.01,
  );
}

export function renderEssCurve(spec: FigureSpec, load: InputLoader): string {
  return curveFigure(
    spec,
    load,
    (p) => [
      ["min bulk ESS", typeof p.min_bulk_ess === "number" ? p.min_bulk_ess : null],
      ["min tail ESS", typeof p.min_tail_ess === "number" ? p.min_tail_ess : null],
    ],
    "effective sample size",
    spec.threshold,
  );
}

export function renderHistogramWithAnalytic(spec: FigureSpec, load: InputLoader): string {
  const name = spec.series;
  if (!name) throw new MissingSeries("histogram figure needs a series name");
  const draws = readDrawsCsv(load(need(spec, "draws")));
  const chainsToUse = [...draws.chains.keys()];
  const values = chainsToUse.flatMap((c) => seriesFromDraws(draws, c, name));
  const analytic = readXyCsv(load(need(spec, "analytic")));
  const lo = Math.min(analytic.x[0], Math.min(...values));
  const hi = Math.max(analytic.x[analytic.x.length - 1], Math.max(...values));
  const bins = spec.bins;
  const width = (hi - lo) / bins;
  const counts = new Array<number>(bins).fill(0);
  for (const v of values) {
    const b = Math.min(Math.floor((v - lo) / width), bins - 1);
    counts[b] += 1;
  }
  const density = counts.map((c) => c / (values.length * width));
  const yMax = Math.max(...density, ...analytic.y) * 1.08;
  const box: PanelBox = { left: 64, top: 30, width: spec.width - 84, height: spec.height - 76 };
  const x = linearScale([lo, hi], [box.left, box.left + box.width]);
  const y = linearScale([0, yMax], [box.top + box.height, box.top]);
  const body: string[] = [];
  density.forEach((d, b) => {
    const x0 = x(lo + b * width);
    const x1 = x(lo + (b + 1) * width);
    body.push(
      `<rect x="${fmt(x0)}" y="${fmt(y(d))}" width="${fmt(x1 - x0)}" height="${fmt(y(0) - y(d))}" fill="${BAND}" stroke="#8aa5c8" stroke-width="0.5"/>`,
    );
  });
  body.push(
    `<path d="${linePath(analytic.x, analytic.y, x, y)}" fill="none" stroke="${ACCENT}" stroke-width="1.6"/>`,
    axes(box, x, y, { title: spec.title ?? name, xLabel: name, yLabel: "density" }),
  );
  return svgDocument(spec.width, spec.height, body);
}

export function renderFigure(spec: FigureSpec, load: InputLoader): string {
  switch (spec.kind) {
    case "irf_fan":
      return renderIrfFan(spec, load);
    case "trace":
      return renderTrace(spec, load);
    case "acf":
      return renderAcf(spec, load);
    case "rhat_curve":
      return renderRhatCurve(spec, load);
    case "ess_curve":
      return renderEssCurve(spec, load);
    case "histogram_with_analytic":
      return renderHistogramWithAnalytic(spec, load);
  }
}
