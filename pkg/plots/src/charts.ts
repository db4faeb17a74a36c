/**
 * Figure builders: training-reward curve and the two delivery-probability
 * panels, each written as SVG plus PNG.
 */

import { mkdirSync, writeFileSync } from "node:fs";
import { join } from "node:path";

import { MetricsRow, SchemaError, TrainingLogRow } from "./csv.js";
import { renderChartToPng } from "./png.js";
import { ChartSpec, PALETTE, Series, renderLineChart } from "./svg.js";

export function movingAverage(values: number[], window: number): number[] {
  const out: number[] = [];
  let acc = 0;
  for (let i = 0; i < values.length; i++) {
    acc += values[i];
    if (i >= window) acc -= values[i - window];
    out.push(acc / Math.min(i + 1, window));
  }
  return out;
}

function writeBoth(outDir: string, name: string, spec: ChartSpec): string[] {
  mkdirSync(outDir, { recursive: true });
  const svgPath = join(outDir, `${name}.svg`);
  const pngPath = join(outDir, `${name}.png`);
  writeFileSync(svgPath, renderLineChart(spec));
  writeFileSync(pngPath, renderChartToPng(spec));
  return [svgPath, pngPath];
}

export function rewardCurveSpec(
  rows: TrainingLogRow[],
  title = "Cumulative reward per episode",
  window = 50
): ChartSpec {
  const episodes = rows.map((r) => r.episode);
  const rewards = rows.map((r) => r.cumulative_reward);
  return {
    title,
    xLabel: "episode",
    yLabel: "cumulative reward",
    series: [
      { label: "per episode", color: "#9ecae1", x: episodes, y: rewards },
      {
        label: `moving average (${window})`,
        color: "#d62728",
        x: episodes,
        y: movingAverage(rewards, window),
      },
    ],
  };
}

export function renderRewardCurve(
  rows: TrainingLogRow[],
  outDir: string,
  title?: string
): string[] {
  return writeBoth(outDir, "reward_curve", rewardCurveSpec(rows, title));
}

function deliverySeries(rows: MetricsRow[], field: "v2v_delivery_prob" | "v2i_delivery_prob"): Series[] {
  const keys: string[] = [];
  for (const r of rows) {
    const key = `${r.method} (M=${r.M})`;
    if (!keys.includes(key)) keys.push(key);
  }
  return keys.map((key, i) => {
    const subset = rows
      .filter((r) => `${r.method} (M=${r.M})` === key)
      .sort((a, b) => a.B_v2v_bytes - b.B_v2v_bytes);
    return {
      label: key,
      color: PALETTE[i % PALETTE.length],
      x: subset.map((r) => r.B_v2v_bytes),
      y: subset.map((r) => r[field]),
    };
  });
}

export function deliverySpecs(rows: MetricsRow[]): { v2v: ChartSpec; v2i: ChartSpec } {
  if (rows.length === 0) {
    throw new SchemaError("metrics: no rows to plot");
  }
  const common = { xLabel: "V2V payload (bytes)", yMin: 0, yMax: 1 };
  return {
    v2v: {
      title: "V2V payload delivery probability",
      yLabel: "delivery probability",
      series: deliverySeries(rows, "v2v_delivery_prob"),
      ...common,
    },
    v2i: {
      title: "V2I payload delivery probability",
      yLabel: "delivery probability",
      series: deliverySeries(rows, "v2i_delivery_prob"),
      ...common,
    },
  };
}

export function renderDeliveryCurves(rows: MetricsRow[], outDir: string): string[] {
  const specs = deliverySpecs(rows);
  return [
    ...writeBoth(outDir, "delivery_v2v", specs.v2v),
    ...writeBoth(outDir, "delivery_v2i", specs.v2i),
  ];
}
