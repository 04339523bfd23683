#!/usr/bin/env node
/**
 * plots render --spec spec.json
 *
 * Exit codes: 0 rendered, 1 schema mismatch (column diff on stderr),
 * 2 usage / bad spec.
 */

import { SchemaMismatch } from "./schema.js";
import { renderSpecFile } from "./render.js";

function main(argv: string[]): number {
  const [command, ...rest] = argv;
  if (command !== "render") {
    console.error("usage: plots render --spec <spec.json>");
    return 2;
  }
  const at = rest.indexOf("--spec");
  if (at === -1 || !rest[at + 1]) {
    console.error("usage: plots render --spec <spec.json>");
    return 2;
  }
  try {
    const out = renderSpecFile(rest[at + 1]);
    console.log(`wrote ${out.svgPath} and ${out.pngPath}`);
    return 0;
  } catch (err) {
    if (err instanceof SchemaMismatch) {
      console.error(err.message);
      return 1;
    }
    console.error(`error: ${(err as Error).message}`);
    return 2;
  }
}

process.exit(main(process.argv.slice(2)));
