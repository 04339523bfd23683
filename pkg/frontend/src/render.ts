/** Render a figure spec to SVG and PNG files. */

import { mkdirSync, writeFileSync } from "node:fs";
import path from "node:path";
import { Resvg } from "@resvg/resvg-js";
import { buildFigure } from "./figures.js";
import { FigureSpec, loadSpec } from "./schema.js";

export function render(spec: FigureSpec): { svgPath: string; pngPath: string } {
  const svg = buildFigure(spec);
  const svgPath = `${spec.output}.svg`;
  const pngPath = `${spec.output}.png`;
  mkdirSync(path.dirname(svgPath), { recursive: true });
  writeFileSync(svgPath, svg);
  const png = new Resvg(svg, { fitTo: { mode: "zoom", value: 2 } }).render().asPng();
  writeFileSync(pngPath, png);
  return { svgPath, pngPath };
}

export function renderSpecFile(specPath: string) {
  return render(loadSpec(specPath));
}
