/**
 * The standard figure set.  Every number drawn comes verbatim from an
 * artifact file: the renderer performs display transforms only (scales,
 * binning for the histogram uses the bracket midpoints already present in
 * the CSV).
 */

import path from "node:path";
import {
  CsvTable,
  FigureKind,
  FigureSpec,
  artifactPath,
  loadCsv,
  loadJson,
} from "./schema.js";
import {
  DEFAULT_FRAME,
  DataPoint,
  Frame,
  PALETTE,
  axes,
  band,
  esc,
  legend,
  linearScale,
  logScale,
  openSvg,
  pointMarkers,
  polyline,
} from "./svg.js";

interface Loaded {
  table?: CsvTable;
  json?: any;
  runDir: string;
  manifest?: any;
}

function frameFor(spec: FigureSpec): Frame {
  return {
    ...DEFAULT_FRAME,
    width: spec.style?.width ?? DEFAULT_FRAME.width,
    height: spec.style?.height ?? DEFAULT_FRAME.height,
  };
}

function loadInputs(spec: FigureSpec): Loaded[] {
  return spec.inputs.map((runDir) => {
    const file = artifactPath(runDir, spec.kind);
    const loaded: Loaded = { runDir };
    if (file.endsWith(".json")) {
      loaded.json = loadJson(file);
    } else {
      loaded.table = loadCsv(file, spec.kind);
    }
    try {
      loaded.manifest = loadJson(path.join(runDir, "manifest.json"));
    } catch {
      loaded.manifest = undefined;
    }
    try {
      loaded.json = loaded.json ?? loadJson(path.join(runDir, "results.json"));
    } catch {
      /* summary is optional for pure-CSV figures */
    }
    return loaded;
  });
}

function plotArea(frame: Frame): { x: [number, number]; y: [number, number] } {
  return {
    x: [frame.margin.left, frame.width - frame.margin.right],
    y: [frame.height - frame.margin.bottom, frame.margin.top],
  };
}

function finiteExtent(values: number[], pad = 0.08): [number, number] {
  if (values.length === 0) return [0, 1];
  let lo = Math.min(...values);
  let hi = Math.max(...values);
  if (lo === hi) {
    lo -= 1;
    hi += 1;
  }
  const span = hi - lo;
  return [lo - pad * span, hi + pad * span];
}

export function buildFigure(spec: FigureSpec): string {
  const frame = frameFor(spec);
  const inputs = loadInputs(spec);
  switch (spec.kind) {
    case "residual_vs_count":
      return residualVsCount(spec, frame, inputs);
    case "invariance_drift":
      return invarianceDrift(spec, frame, inputs);
    case "blowup_histogram":
      return blowupHistogram(spec, frame, inputs[0]);
    case "omega_theta_profiles":
      return omegaThetaProfiles(spec, frame, inputs[0]);
    case "projection_bandwidth_sweep":
      return bandwidthSweep(spec, frame, inputs[0]);
  }
}

function residualVsCount(spec: FigureSpec, frame: Frame, inputs: Loaded[]): string {
  // one series per (F_descriptor, t) cell; x = ensemble count from the manifest
  const area = plotArea(frame);
  const cells = new Map<string, { xs: string[]; rows: Record<string, string>[] }>();
  const counts: number[] = [];
  for (const inp of inputs) {
    const count = inp.manifest?.config?.count;
    for (const row of inp.table?.rows ?? []) {
      const key = `${row.F_descriptor} t=${row.t}`;
      if (!cells.has(key)) cells.set(key, { xs: [], rows: [] });
      cells.get(key)!.xs.push(String(count));
      cells.get(key)!.rows.push(row);
      counts.push(Number(count));
    }
  }
  const allResid: number[] = [];
  for (const { rows } of cells.values()) {
    for (const r of rows) {
      const v = Number(r.residual);
      const s = 3 * (Number(r.se_lhs) + Number(r.se_rhs));
      allResid.push(v - s, v + s);
    }
  }
  const xs = counts.length ? logScale(finiteExtent(counts, 0), area.x) : logScale([1, 10], area.x);
  const ys = linearScale(finiteExtent(allResid), area.y);
  const parts = openSvg(frame, spec.style?.title ?? "residual vs ensemble size");
  parts.push(...axes(frame, xs, ys, "count", "residual", [...new Set(counts)].sort((a, b) => a - b)));
  parts.push(polyline([[area.x[0], ys(0)], [area.x[1], ys(0)]], "#888", 1, "4,3"));
  let ci = 0;
  const entries: Array<[string, string]> = [];
  for (const [key, cell] of cells) {
    const color = PALETTE[ci++ % PALETTE.length];
    const pts: DataPoint[] = [];
    const env: Array<[number, number, number]> = [];
    cell.rows.forEach((r, i) => {
      const cx = xs(Number(cell.xs[i]));
      const y = Number(r.residual);
      const s = 3 * (Number(r.se_lhs) + Number(r.se_rhs));
      pts.push({ px: cx, py: ys(y), sx: cell.xs[i], sy: r.residual });
      env.push([cx, ys(y - s), ys(y + s)]);
    });
    env.sort((a, b) => a[0] - b[0]);
    parts.push(band(env, color));
    parts.push(pointMarkers(pts, color));
    entries.push([key, color]);
  }
  parts.push(legend(frame, entries));
  parts.push("</svg>");
  return parts.join("\n");
}

function invarianceDrift(spec: FigureSpec, frame: Frame, inputs: Loaded[]): string {
  const area = plotArea(frame);
  const rows = inputs.flatMap((i) => i.table?.rows ?? []);
  const ts = rows.map((r) => Number(r.t));
  const ysAll: number[] = [];
  for (const r of rows) {
    const d = Number(r.drift_stationary);
    const tol = Number(r.tolerance);
    ysAll.push(d - tol, d + tol);
  }
  const xs = linearScale(finiteExtent(ts.length ? ts : [0, 1]), area.x);
  const ys = linearScale(finiteExtent(ysAll.length ? ysAll : [-1, 1]), area.y);
  const parts = openSvg(frame, spec.style?.title ?? "invariance drift");
  parts.push(...axes(frame, xs, ys, "t", "drift of E[F]"));
  parts.push(polyline([[area.x[0], ys(0)], [area.x[1], ys(0)]], "#888", 1, "4,3"));
  const byF = new Map<string, Record<string, string>[]>();
  for (const r of rows) {
    if (!byF.has(r.F)) byF.set(r.F, []);
    byF.get(r.F)!.push(r);
  }
  let ci = 0;
  const entries: Array<[string, string]> = [];
  for (const [fname, frows] of byF) {
    const color = PALETTE[ci++ % PALETTE.length];
    frows.sort((a, b) => Number(a.t) - Number(b.t));
    const env: Array<[number, number, number]> = frows.map((r) => [
      xs(Number(r.t)),
      ys(Number(r.drift_stationary) - Number(r.tolerance)),
      ys(Number(r.drift_stationary) + Number(r.tolerance)),
    ]);
    parts.push(band(env, color));
    parts.push(
      polyline(frows.map((r) => [xs(Number(r.t)), ys(Number(r.drift_stationary))]), color, 1)
    );
    parts.push(
      pointMarkers(
        frows.map((r) => ({
          px: xs(Number(r.t)),
          py: ys(Number(r.drift_stationary)),
          sx: r.t,
          sy: r.drift_stationary,
        })),
        color
      )
    );
    entries.push([fname, color]);
  }
  parts.push(legend(frame, entries));
  parts.push("</svg>");
  return parts.join("\n");
}

function blowupHistogram(spec: FigureSpec, frame: Frame, input: Loaded): string {
  const area = plotArea(frame);
  const rows = (input.table?.rows ?? []).filter((r) => r.blown === "1");
  const total = (input.table?.rows ?? []).length;
  const mids = rows.map((r) => (Number(r.time_lower) + Number(r.time_upper)) / 2);
  const tMax = mids.length ? Math.max(...mids) : 1;
  const nBins = 40;
  const binW = tMax / nBins;
  const counts = new Array(nBins).fill(0);
  for (const m of mids) counts[Math.min(nBins - 1, Math.floor(m / binW))] += 1;
  const cumFrac: number[] = [];
  let acc = 0;
  for (const c of counts) {
    acc += c;
    cumFrac.push(total ? acc / total : 0);
  }
  const xs = linearScale([0, tMax || 1], area.x);
  const ys = linearScale([0, 1], area.y);
  const parts = openSvg(frame, spec.style?.title ?? "blowup times");
  parts.push(...axes(frame, xs, ys, "t", "cumulative blowup fraction"));
  // histogram bars scaled to the cumulative fraction they reach
  counts.forEach((c, i) => {
    if (!total) return;
    const x0 = xs(i * binW);
    const x1 = xs((i + 1) * binW);
    const h = ys(0) - ys(c / total);
    parts.push(
      `<rect class="data" x="${x0}" y="${ys(0) - h}" width="${x1 - x0}" height="${h}" ` +
        `fill="#4361ee" opacity="0.5" data-bin="${i}" data-count="${c}"/>`
    );
  });
  parts.push(
    polyline(cumFrac.map((f, i) => [xs((i + 1) * binW), ys(f)]), "#4361ee", 1.5)
  );
  // overlay the oracle CDF 1 - Phi(1/t) carried in the run summary
  const oracle = input.json?.summary?.oracle_cdf;
  if (oracle) {
    const pts: DataPoint[] = oracle.t.map((t: number, i: number) => ({
      px: xs(t),
      py: ys(oracle.cdf[i]),
      sx: String(t),
      sy: String(oracle.cdf[i]),
    }));
    parts.push(
      polyline(pts.map((p) => [p.px, p.py] as [number, number]), "#e63946", 1.5, "5,3")
    );
    parts.push(pointMarkers(pts, "#e63946", "reference"));
    parts.push(legend(frame, [["empirical", "#4361ee"], ["1 - Phi(1/t)", "#e63946"]]));
  }
  parts.push("</svg>");
  return parts.join("\n");
}

function omegaThetaProfiles(spec: FigureSpec, frame: Frame, input: Loaded): string {
  const data = input.json?.omega ? input.json : loadJson(artifactPath(input.runDir, spec.kind));
  const half: Frame = { ...frame, height: frame.height / 2 };
  const parts = [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${frame.width}" height="${frame.height}" ` +
      `viewBox="0 0 ${frame.width} ${frame.height}" font-family="Helvetica, Arial, sans-serif">`,
    `<rect width="${frame.width}" height="${frame.height}" fill="white"/>`,
    `<text x="${frame.width / 2}" y="24" text-anchor="middle" font-size="16">` +
      `${esc(spec.style?.title ?? "omega and theta profiles")}</text>`,
  ];
  const panels: Array<[string, number[], number[], string, number]> = [
    ["omega (time weight)", data.omega.knots, data.omega.values, "#4361ee", 0],
    ["theta (tightness gauge)", data.theta.levels, data.theta.knot_values, "#e63946", frame.height / 2],
  ];
  for (const [label, xsRaw, ysRaw, color, yOff] of panels) {
    const area = {
      x: [half.margin.left, half.width - half.margin.right] as [number, number],
      y: [yOff + half.height - half.margin.bottom, yOff + half.margin.top] as [number, number],
    };
    const xs = linearScale(finiteExtent(xsRaw, 0.02), area.x);
    const ys = linearScale(finiteExtent(ysRaw), area.y);
    parts.push(
      `<line x1="${area.x[0]}" y1="${area.y[0]}" x2="${area.x[1]}" y2="${area.y[0]}" stroke="black"/>`
    );
    parts.push(
      `<line x1="${area.x[0]}" y1="${area.y[0]}" x2="${area.x[0]}" y2="${area.y[1]}" stroke="black"/>`
    );
    parts.push(polyline(xsRaw.map((x, i) => [xs(x), ys(ysRaw[i])]), color, 1.5));
    parts.push(
      pointMarkers(
        xsRaw.map((x, i) => ({
          px: xs(x),
          py: ys(ysRaw[i]),
          sx: String(x),
          sy: String(ysRaw[i]),
        })),
        color
      )
    );
    parts.push(
      `<text x="${area.x[0] + 8}" y="${area.y[1] + 14}" font-size="12" fill="${color}">` +
        `${esc(label)}</text>`
    );
  }
  parts.push("</svg>");
  return parts.join("\n");
}

function bandwidthSweep(spec: FigureSpec, frame: Frame, input: Loaded): string {
  const area = plotArea(frame);
  const rows = (input.table?.rows ?? []).filter((r) => r.F !== "contraction");
  const hs = rows.map((r) => Number(r.bandwidth));
  const ysAll: number[] = [];
  for (const r of rows) {
    const v = Number(r.residual);
    const s = 3 * (Number(r.se_lhs) + Number(r.se_rhs));
    ysAll.push(v - s, v + s);
  }
  const xs = hs.length ? logScale([Math.min(...hs) / 1.3, Math.max(...hs) * 1.3], area.x)
                       : logScale([0.1, 1], area.x);
  const ys = linearScale(finiteExtent(ysAll.length ? ysAll : [-1, 1]), area.y);
  const parts = openSvg(frame, spec.style?.title ?? "projected residual vs bandwidth");
  parts.push(...axes(frame, xs, ys, "bandwidth h", "residual", [...new Set(hs)].sort((a, b) => a - b)));
  parts.push(polyline([[area.x[0], ys(0)], [area.x[1], ys(0)]], "#888", 1, "4,3"));
  const env: Array<[number, number, number]> = rows.map((r) => [
    xs(Number(r.bandwidth)),
    ys(Number(r.residual) - 3 * (Number(r.se_lhs) + Number(r.se_rhs))),
    ys(Number(r.residual) + 3 * (Number(r.se_lhs) + Number(r.se_rhs))),
  ]);
  env.sort((a, b) => a[0] - b[0]);
  parts.push(band(env, PALETTE[0]));
  parts.push(
    pointMarkers(
      rows.map((r) => ({
        px: xs(Number(r.bandwidth)),
        py: ys(Number(r.residual)),
        sx: r.bandwidth,
        sy: r.residual,
      })),
      PALETTE[0]
    )
  );
  parts.push("</svg>");
  return parts.join("\n");
}
