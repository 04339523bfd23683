/**
 * Minimal hand-rolled SVG builder: linear scales, ticks, and the handful of
 * element constructors the figure set needs.  Data points carry their source
 * values verbatim in data-x / data-y attributes so tests (and downstream
 * tooling) can recover exactly what was plotted.
 */

export interface Frame {
  width: number;
  height: number;
  margin: { top: number; right: number; bottom: number; left: number };
}

export const DEFAULT_FRAME: Frame = {
  width: 800,
  height: 480,
  margin: { top: 48, right: 24, bottom: 48, left: 64 },
};

export interface Scale {
  (v: number): number;
  domain: [number, number];
}

export function linearScale(domain: [number, number], range: [number, number]): Scale {
  let [d0, d1] = domain;
  if (d0 === d1) {
    d0 -= 1;
    d1 += 1;
  }
  const f = ((v: number) =>
    range[0] + ((v - d0) / (d1 - d0)) * (range[1] - range[0])) as Scale;
  f.domain = [d0, d1];
  return f;
}

export function logScale(domain: [number, number], range: [number, number]): Scale {
  const inner = linearScale([Math.log10(domain[0]), Math.log10(domain[1])], range);
  const f = ((v: number) => inner(Math.log10(v))) as Scale;
  f.domain = domain;
  return f;
}

export function ticks(lo: number, hi: number, count = 6): number[] {
  if (lo === hi) return [lo];
  const span = hi - lo;
  const step = Math.pow(10, Math.floor(Math.log10(span / count)));
  const err = (span / count) / step;
  const mult = err >= 7.5 ? 10 : err >= 3.5 ? 5 : err >= 1.5 ? 2 : 1;
  const s = step * mult;
  const start = Math.ceil(lo / s) * s;
  const out: number[] = [];
  for (let v = start; v <= hi + 1e-12 * Math.abs(s); v += s) out.push(v);
  return out;
}

export function fmtTick(v: number): string {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 1e4 || a < 1e-3) return v.toExponential(1);
  return String(parseFloat(v.toPrecision(6)));
}

export const esc = (s: string) =>
  s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;").replace(/"/g, "&quot;");

export const PALETTE = [
  "#4361ee", "#e63946", "#2d6a4f", "#f77f00", "#7209b7", "#118ab2",
];

export function openSvg(frame: Frame, title: string): string[] {
  return [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${frame.width}" height="${frame.height}" ` +
      `viewBox="0 0 ${frame.width} ${frame.height}" font-family="Helvetica, Arial, sans-serif">`,
    `<rect width="${frame.width}" height="${frame.height}" fill="white"/>`,
    `<text x="${frame.width / 2}" y="24" text-anchor="middle" font-size="16">${esc(title)}</text>`,
  ];
}

export function axes(frame: Frame, xs: Scale, ys: Scale, xLabel: string, yLabel: string,
                     xTickVals?: number[]): string[] {
  const { margin, width, height } = frame;
  const out: string[] = [];
  const x0 = margin.left;
  const x1 = width - margin.right;
  const y0 = height - margin.bottom;
  const y1 = margin.top;
  out.push(`<line x1="${x0}" y1="${y0}" x2="${x1}" y2="${y0}" stroke="black"/>`);
  out.push(`<line x1="${x0}" y1="${y0}" x2="${x0}" y2="${y1}" stroke="black"/>`);
  for (const t of xTickVals ?? ticks(xs.domain[0], xs.domain[1])) {
    const px = xs(t);
    out.push(`<line x1="${px}" y1="${y0}" x2="${px}" y2="${y0 + 5}" stroke="black"/>`);
    out.push(
      `<text x="${px}" y="${y0 + 18}" text-anchor="middle" font-size="11">${fmtTick(t)}</text>`
    );
  }
  for (const t of ticks(ys.domain[0], ys.domain[1])) {
    const py = ys(t);
    out.push(`<line x1="${x0 - 5}" y1="${py}" x2="${x0}" y2="${py}" stroke="black"/>`);
    out.push(
      `<text x="${x0 - 8}" y="${py + 4}" text-anchor="end" font-size="11">${fmtTick(t)}</text>`
    );
  }
  out.push(
    `<text x="${(x0 + x1) / 2}" y="${height - 10}" text-anchor="middle" font-size="12">` +
      `${esc(xLabel)}</text>`
  );
  out.push(
    `<text x="16" y="${(y0 + y1) / 2}" text-anchor="middle" font-size="12" ` +
      `transform="rotate(-90 16 ${(y0 + y1) / 2})">${esc(yLabel)}</text>`
  );
  return out;
}

export interface DataPoint {
  px: number;
  py: number;
  /** verbatim source strings, echoed into data-x / data-y */
  sx: string;
  sy: string;
}

export function pointMarkers(points: DataPoint[], color: string, cls = "data"): string {
  return points
    .map(
      (p) =>
        `<circle class="${cls}" cx="${p.px}" cy="${p.py}" r="2.5" fill="${color}" ` +
        `data-x="${esc(p.sx)}" data-y="${esc(p.sy)}"/>`
    )
    .join("");
}

export function polyline(pxy: Array<[number, number]>, color: string, width = 1.5,
                         dash?: string): string {
  if (pxy.length === 0) return "";
  const pts = pxy.map(([x, y]) => `${x},${y}`).join(" ");
  const d = dash ? ` stroke-dasharray="${dash}"` : "";
  return `<polyline points="${pts}" fill="none" stroke="${color}" stroke-width="${width}"${d}/>`;
}

export function band(pxy: Array<[number, number, number]>, color: string): string {
  // pxy = (px, pyLow, pyHigh); draws a translucent envelope
  if (pxy.length === 0) return "";
  const upper = pxy.map(([x, , hi]) => `${x},${hi}`);
  const lower = [...pxy].reverse().map(([x, lo]) => `${x},${lo}`);
  return `<polygon points="${[...upper, ...lower].join(" ")}" fill="${color}" opacity="0.15"/>`;
}

export function legend(frame: Frame, entries: Array<[string, string]>): string {
  const x = frame.width - frame.margin.right - 180;
  let y = frame.margin.top + 6;
  const parts: string[] = [];
  for (const [label, color] of entries) {
    parts.push(`<rect x="${x}" y="${y - 8}" width="12" height="12" fill="${color}"/>`);
    parts.push(`<text x="${x + 18}" y="${y + 2}" font-size="11">${esc(label)}</text>`);
    y += 18;
  }
  return parts.join("");
}
