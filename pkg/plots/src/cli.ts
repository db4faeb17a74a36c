#!/usr/bin/env node
/**
 * Figure generation from simulator artifacts.
 *
 *   platoon-marl-plots reward   --log DIR/training_log.csv [--manifest DIR/manifest.txt] --out figs/
 *   platoon-marl-plots delivery --metrics DIR/metrics.csv --out figs/
 */

import { readFileSync } from "node:fs";
import { pathToFileURL } from "node:url";
import { parseArgs } from "node:util";

import { renderDeliveryCurves, renderRewardCurve } from "./charts.js";
import { SchemaError, parseManifest, parseMetrics, parseTrainingLog } from "./csv.js";

function usage(): never {
  console.error(
    "usage: platoon-marl-plots reward --log FILE [--manifest FILE] --out DIR\n" +
      "       platoon-marl-plots delivery --metrics FILE --out DIR"
  );
  process.exit(2);
}

export function main(argv: string[]): number {
  const command = argv[0];
  if (command !== "reward" && command !== "delivery") usage();
  const { values } = parseArgs({
    args: argv.slice(1),
    options: {
      log: { type: "string" },
      metrics: { type: "string" },
      manifest: { type: "string" },
      out: { type: "string" },
    },
  });
  if (!values.out) usage();
  try {
    let written: string[];
    if (command === "reward") {
      if (!values.log) usage();
      const rows = parseTrainingLog(readFileSync(values.log, "utf8"), values.log);
      let title: string | undefined;
      if (values.manifest) {
        const manifest = parseManifest(readFileSync(values.manifest, "utf8"));
        const method = manifest.get("method");
        const seed = manifest.get("seed");
        title = method
          ? `Cumulative reward per episode: ${method}` + (seed ? ` (seed ${seed})` : "")
          : undefined;
      }
      written = renderRewardCurve(rows, values.out, title);
    } else {
      if (!values.metrics) usage();
      const rows = parseMetrics(readFileSync(values.metrics, "utf8"), values.metrics);
      written = renderDeliveryCurves(rows, values.out);
    }
    for (const path of written) console.log(path);
    return 0;
  } catch (err) {
    if (err instanceof SchemaError) {
      console.error(`${err.name}: ${err.message}`);
      return 1;
    }
    if (err instanceof Error && "code" in err && err.code === "ENOENT") {
      console.error(`error: ${err.message}`);
      return 1;
    }
    throw err;
  }
}

if (process.argv[1] && import.meta.url === pathToFileURL(process.argv[1]).href) {
  process.exit(main(process.argv.slice(2)));
}
