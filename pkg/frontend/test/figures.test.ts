import { mkdtempSync, mkdirSync, writeFileSync, readFileSync, existsSync } from "node:fs";
import { tmpdir } from "node:os";
import path from "node:path";
import { describe, expect, it } from "vitest";

import { buildFigure } from "../src/figures.js";
import { render } from "../src/render.js";
import { FigureSpec, SchemaMismatch, loadCsv, parseCsv } from "../src/schema.js";

function tmp(): string {
  return mkdtempSync(path.join(tmpdir(), "plots-"));
}

function makeRun(dir: string, csvName: string, csv: string, summary?: any, manifest?: any) {
  mkdirSync(dir, { recursive: true });
  writeFileSync(path.join(dir, csvName), csv);
  if (summary) writeFileSync(path.join(dir, "results.json"), JSON.stringify(summary));
  if (manifest) writeFileSync(path.join(dir, "manifest.json"), JSON.stringify(manifest));
}

function extractData(svg: string, cls = "data"): Array<{ x: string; y: string }> {
  const re = new RegExp(`class="${cls}"[^>]*data-x="([^"]*)" data-y="([^"]*)"`, "g");
  const out: Array<{ x: string; y: string }> = [];
  for (const m of svg.matchAll(re)) out.push({ x: m[1], y: m[2] });
  return out;
}

const INVARIANCE_HEADER =
  "F,t,drift_stationary,se_stationary,z_stationary,drift_pushforward," +
  "se_pushforward,z_pushforward,excluded_mass,dt2_term,tolerance";

describe("round-trip of plotted values", () => {
  it("invariance drift points equal the source CSV values", () => {
    const dir = path.join(tmp(), "run");
    const rows = [
      ["sine[1]", "0.25", "0.0012345678901234567", "0.001", "1.2", "0", "0", "0", "0", "1e-05", "0.0031"],
      ["sine[1]", "0.5", "-0.00098765432109876543", "0.001", "-0.99", "0", "0", "0", "0", "1e-05", "0.0031"],
      ["quadpair[2]", "0.5", "4.4408920985006262e-16", "0.002", "0", "0", "0", "0", "0", "2e-05", "0.0061"],
    ];
    makeRun(dir, "results.csv", [INVARIANCE_HEADER, ...rows.map((r) => r.join(","))].join("\n"));
    const spec: FigureSpec = { kind: "invariance_drift", inputs: [dir], output: "unused" };
    const svg = buildFigure(spec);
    const got = extractData(svg);
    expect(got.length).toBe(rows.length);
    const want = new Set(rows.map((r) => `${r[1]}|${r[2]}`));
    for (const p of got) {
      expect(want.has(`${p.x}|${p.y}`)).toBe(true);
      expect(Number.isFinite(Number(p.y))).toBe(true);
    }
  });

  it("residual-vs-count points carry exact residuals and counts", () => {
    const base = tmp();
    const header = "experiment,t,F_descriptor,lhs,rhs,residual,se_lhs,se_rhs,se_residual,z,excluded_mass";
    const dirs: string[] = [];
    for (const [count, resid] of [["1000", "0.00123"], ["10000", "-0.000456789"]] as const) {
      const dir = path.join(base, `run${count}`);
      makeRun(
        dir,
        "results.csv",
        [header, `verify-liouville,0.5,sine[1],0,0,${resid},0.001,0.002,0.001,0.5,0`].join("\n"),
        undefined,
        { config: { count: Number(count) } }
      );
      dirs.push(dir);
    }
    const svg = buildFigure({ kind: "residual_vs_count", inputs: dirs, output: "x" });
    const got = extractData(svg);
    expect(got.map((p) => [p.x, p.y])).toEqual([
      ["1000", "0.00123"],
      ["10000", "-0.000456789"],
    ]);
  });

  it("reference overlay matches the JSON summary to 1e-12", () => {
    const dir = path.join(tmp(), "ce");
    const header = "sample,q0,blown,time_lower,time_upper";
    const lines = [header];
    for (let i = 0; i < 50; i++) {
      const blown = i % 2;
      lines.push(`${i},${(i - 25) / 10},${blown},${blown ? 1 + i / 100 : "nan"},${blown ? 1.0005 + i / 100 : "nan"}`);
    }
    const oracle = {
      t: [0.5, 1.0, 2.0, 5.0, 10.0],
      cdf: [0.02275013194817921, 0.15865525393145707, 0.30853753872598688,
            0.42074029056089696, 0.46017216272297101],
    };
    makeRun(dir, "blowup_times.csv", lines.join("\n"), {
      experiment: "counterexample",
      summary: { oracle_cdf: oracle },
      verdicts: [],
    });
    const svg = buildFigure({ kind: "blowup_histogram", inputs: [dir], output: "x" });
    const ref = extractData(svg, "reference");
    expect(ref.length).toBe(oracle.t.length);
    ref.forEach((p, i) => {
      expect(Math.abs(Number(p.x) - oracle.t[i])).toBeLessThanOrEqual(1e-12);
      expect(Math.abs(Number(p.y) - oracle.cdf[i])).toBeLessThanOrEqual(1e-12);
    });
  });

  it("omega/theta profile knots round-trip", () => {
    const dir = path.join(tmp(), "integ");
    mkdirSync(dir, { recursive: true });
    const data = {
      omega: { knots: [0, 2, 4, 6], values: [1, 4, 9, 16] },
      theta: { levels: [0.5, 1.25, 3], slopes: [1, 2, 3], knot_values: [0, 0.75, 4.25] },
    };
    writeFileSync(path.join(dir, "omega_theta.json"), JSON.stringify(data));
    const svg = buildFigure({ kind: "omega_theta_profiles", inputs: [dir], output: "x" });
    const got = extractData(svg);
    const wantX = [...data.omega.knots, ...data.theta.levels].map(String);
    expect(got.map((p) => p.x)).toEqual(wantX);
    const wantY = [...data.omega.values, ...data.theta.knot_values].map(String);
    expect(got.map((p) => p.y)).toEqual(wantY);
  });

  it("bandwidth sweep points equal the CSV residuals", () => {
    const dir = path.join(tmp(), "proj");
    const header =
      "F,t,n,bandwidth,lhs,rhs,residual,se_lhs,se_rhs,z,mean_query_ess,unsupported_queries";
    const rows = [
      `g,0.5,4,0.59999999999999998,0,0,0.0123,0.001,0.001,1,100,0`,
      `g,0.5,4,0.29999999999999999,0,0,0.0061,0.001,0.001,0.7,80,0`,
      `contraction,0.5,4,0.3,0.1,0.5,-0.4,0.01,0,0,0,0`,
    ];
    makeRun(dir, "results.csv", [header, ...rows].join("\n"));
    const svg = buildFigure({ kind: "projection_bandwidth_sweep", inputs: [dir], output: "x" });
    const got = extractData(svg);
    expect(got.map((p) => [p.x, p.y])).toEqual([
      ["0.59999999999999998", "0.0123"],
      ["0.29999999999999999", "0.0061"],
    ]);
  });
});

describe("robustness", () => {
  it("empty-but-valid CSV renders empty axes", () => {
    const dir = path.join(tmp(), "empty");
    makeRun(dir, "results.csv", INVARIANCE_HEADER + "\n");
    const svg = buildFigure({ kind: "invariance_drift", inputs: [dir], output: "x" });
    expect(svg).toContain("<svg");
    expect(extractData(svg).length).toBe(0);
  });

  it("schema mismatch raises with a column diff", () => {
    const dir = path.join(tmp(), "bad");
    makeRun(dir, "results.csv", "a,b\n1,2\n");
    expect(() => loadCsv(path.join(dir, "results.csv"), "invariance_drift")).toThrowError(
      SchemaMismatch
    );
    try {
      loadCsv(path.join(dir, "results.csv"), "invariance_drift");
    } catch (err) {
      expect((err as Error).message).toContain("drift_stationary");
      expect((err as Error).message).toContain("unexpected columns [a, b]");
    }
  });

  it("csv parser keeps verbatim cell text", () => {
    const t = parseCsv("x,y\n0.1000000000000000001,2\n");
    expect(t.rows[0].x).toBe("0.1000000000000000001");
  });
});

describe("file outputs", () => {
  it("render writes both SVG and PNG", () => {
    const base = tmp();
    const dir = path.join(base, "run");
    makeRun(
      dir,
      "results.csv",
      [INVARIANCE_HEADER, "sine[1],0.5,0.001,0.001,1,0,0,0,0,1e-05,0.004"].join("\n")
    );
    const out = render({
      kind: "invariance_drift",
      inputs: [dir],
      output: path.join(base, "fig", "drift"),
    });
    expect(existsSync(out.svgPath)).toBe(true);
    const png = readFileSync(out.pngPath);
    expect(png.subarray(0, 4).toString("hex")).toBe("89504e47");
  });

  it("figures are deterministic", () => {
    const dir = path.join(tmp(), "run");
    makeRun(
      dir,
      "results.csv",
      [INVARIANCE_HEADER, "sine[1],0.5,0.001,0.001,1,0,0,0,0,1e-05,0.004"].join("\n")
    );
    const spec: FigureSpec = { kind: "invariance_drift", inputs: [dir], output: "x" };
    expect(buildFigure(spec)).toBe(buildFigure(spec));
  });
});
