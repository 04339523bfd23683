/**
 * Input parsing and schema validation for the experiment artifacts.
 *
 * The renderer never recomputes statistics: it refuses inputs whose columns
 * do not match the documented schema of the requested figure kind, reporting
 * the exact column diff.
 */

import { readFileSync } from "node:fs";
import path from "node:path";

export type FigureKind =
  | "residual_vs_count"
  | "invariance_drift"
  | "blowup_histogram"
  | "omega_theta_profiles"
  | "projection_bandwidth_sweep";

export interface FigureSpec {
  kind: FigureKind;
  /** run directories (or files) produced by the experiment driver */
  inputs: string[];
  /** output base path; `.svg` and `.png` are appended */
  output: string;
  style?: {
    width?: number;
    height?: number;
    title?: string;
  };
}

export interface CsvTable {
  columns: string[];
  /** cell values kept verbatim so figures can embed the exact source text */
  rows: Record<string, string>[];
}

export class SchemaMismatch extends Error {
  constructor(file: string, missing: string[], extra: string[]) {
    super(
      `schema mismatch in ${file}: missing columns [${missing.join(", ")}]` +
        (extra.length ? `, unexpected columns [${extra.join(", ")}]` : "")
    );
    this.name = "SchemaMismatch";
  }
}

/** Columns each figure kind requires from its results.csv-style input. */
export const REQUIRED_COLUMNS: Record<FigureKind, string[]> = {
  residual_vs_count: ["t", "F_descriptor", "residual", "se_lhs", "se_rhs"],
  invariance_drift: ["F", "t", "drift_stationary", "se_stationary", "tolerance"],
  blowup_histogram: ["sample", "blown", "time_lower", "time_upper"],
  omega_theta_profiles: [],
  projection_bandwidth_sweep: ["F", "bandwidth", "residual", "se_lhs", "se_rhs"],
};

export function parseCsv(text: string): CsvTable {
  const lines = text.split(/\r?\n/).filter((l) => l.length > 0);
  if (lines.length === 0) return { columns: [], rows: [] };
  const columns = lines[0].split(",");
  const rows = lines.slice(1).map((line) => {
    const cells = line.split(",");
    const row: Record<string, string> = {};
    columns.forEach((c, i) => (row[c] = cells[i] ?? ""));
    return row;
  });
  return { columns, rows };
}

export function loadCsv(file: string, kind: FigureKind): CsvTable {
  const table = parseCsv(readFileSync(file, "utf-8"));
  const required = REQUIRED_COLUMNS[kind];
  if (table.columns.length === 0 && required.length > 0) {
    // an empty-but-valid artifact: no header means no rows were produced
    return table;
  }
  const missing = required.filter((c) => !table.columns.includes(c));
  if (missing.length > 0) {
    const extra = table.columns.filter((c) => !required.includes(c));
    throw new SchemaMismatch(file, missing, extra);
  }
  return table;
}

export function loadJson(file: string): any {
  return JSON.parse(readFileSync(file, "utf-8"));
}

/** Resolve the artifact file a figure kind reads from a run directory. */
export function artifactPath(runDir: string, kind: FigureKind): string {
  if (kind === "blowup_histogram") return path.join(runDir, "blowup_times.csv");
  if (kind === "omega_theta_profiles") return path.join(runDir, "omega_theta.json");
  return path.join(runDir, "results.csv");
}

export function loadSpec(file: string): FigureSpec {
  const spec = loadJson(file);
  const kinds: FigureKind[] = [
    "residual_vs_count",
    "invariance_drift",
    "blowup_histogram",
    "omega_theta_profiles",
    "projection_bandwidth_sweep",
  ];
  if (!kinds.includes(spec.kind)) {
    throw new Error(`unknown figure kind ${JSON.stringify(spec.kind)}`);
  }
  if (!Array.isArray(spec.inputs) || spec.inputs.length === 0) {
    throw new Error("spec.inputs must be a non-empty array of run directories");
  }
  if (typeof spec.output !== "string") {
    throw new Error("spec.output must be a path prefix");
  }
  return spec as FigureSpec;
}
