/**
 * Minimal deterministic SVG line charts: fixed canvas, numeric formatting
 * with stable precision, one polyline per series, legend in the top-right.
 */

export interface Series {
  label: string;
  color: string;
  x: number[];
  y: number[];
  dash?: string;
}

export interface ChartSpec {
  title: string;
  xLabel: string;
  yLabel: string;
  series: Series[];
  width?: number;
  height?: number;
  yMin?: number;
  yMax?: number;
}

export const PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

const MARGIN = { left: 64, right: 16, top: 36, bottom: 46 };

function fmt(v: number): string {
  if (!Number.isFinite(v)) return "0";
  return Number(v.toFixed(2)).toString();
}

export function niceTicks(lo: number, hi: number, count = 6): number[] {
  if (!(hi > lo)) return [lo];
  const span = hi - lo;
  const step = Math.pow(10, Math.floor(Math.log10(span / count)));
  const err = (count * step) / span;
  const mult = err <= 0.15 ? 10 : err <= 0.35 ? 5 : err <= 0.75 ? 2 : 1;
  const s = step * mult;
  const ticks: number[] = [];
  for (let v = Math.ceil(lo / s) * s; v <= hi + 1e-9; v += s) {
    ticks.push(Number(v.toFixed(10)));
  }
  return ticks;
}

export function renderLineChart(spec: ChartSpec): string {
  const width = spec.width ?? 640;
  const height = spec.height ?? 420;
  const plotW = width - MARGIN.left - MARGIN.right;
  const plotH = height - MARGIN.top - MARGIN.bottom;

  const xs = spec.series.flatMap((s) => s.x);
  const ys = spec.series.flatMap((s) => s.y);
  const xLo = Math.min(...xs);
  const xHi = Math.max(...xs);
  const yLo = spec.yMin ?? Math.min(...ys);
  const yHiRaw = spec.yMax ?? Math.max(...ys);
  const yHi = yHiRaw > yLo ? yHiRaw : yLo + 1;

  const px = (x: number) =>
    MARGIN.left + (xHi > xLo ? ((x - xLo) / (xHi - xLo)) * plotW : plotW / 2);
  const py = (y: number) => MARGIN.top + plotH - ((y - yLo) / (yHi - yLo)) * plotH;

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
      `viewBox="0 0 ${width} ${height}" font-family="Helvetica, Arial, sans-serif">`
  );
  parts.push(`<rect width="${width}" height="${height}" fill="#ffffff"/>`);
  parts.push(
    `<text x="${width / 2}" y="20" font-size="14" text-anchor="middle">${spec.title}</text>`
  );

  // axes
  const x0 = MARGIN.left;
  const y0 = MARGIN.top + plotH;
  parts.push(
    `<rect x="${x0}" y="${MARGIN.top}" width="${plotW}" height="${plotH}" ` +
      `fill="none" stroke="#444444" stroke-width="1"/>`
  );
  for (const t of niceTicks(xLo, xHi)) {
    const x = px(t);
    parts.push(`<line x1="${fmt(x)}" y1="${y0}" x2="${fmt(x)}" y2="${y0 + 4}" stroke="#444444"/>`);
    parts.push(
      `<text x="${fmt(x)}" y="${y0 + 17}" font-size="10" text-anchor="middle">${t}</text>`
    );
  }
  for (const t of niceTicks(yLo, yHi)) {
    const y = py(t);
    parts.push(`<line x1="${x0 - 4}" y1="${fmt(y)}" x2="${x0}" y2="${fmt(y)}" stroke="#444444"/>`);
    parts.push(
      `<text x="${x0 - 7}" y="${fmt(y + 3)}" font-size="10" text-anchor="end">${t}</text>`
    );
    parts.push(
      `<line x1="${x0}" y1="${fmt(y)}" x2="${x0 + plotW}" y2="${fmt(y)}" ` +
        `stroke="#dddddd" stroke-width="0.5"/>`
    );
  }
  parts.push(
    `<text x="${MARGIN.left + plotW / 2}" y="${height - 10}" font-size="12" ` +
      `text-anchor="middle">${spec.xLabel}</text>`
  );
  parts.push(
    `<text x="16" y="${MARGIN.top + plotH / 2}" font-size="12" text-anchor="middle" ` +
      `transform="rotate(-90 16 ${MARGIN.top + plotH / 2})">${spec.yLabel}</text>`
  );

  // series
  for (const s of spec.series) {
    const pts = s.x.map((x, i) => `${fmt(px(x))},${fmt(py(s.y[i]))}`).join(" ");
    const dash = s.dash ? ` stroke-dasharray="${s.dash}"` : "";
    parts.push(
      `<polyline points="${pts}" fill="none" stroke="${s.color}" stroke-width="1.8"${dash}/>`
    );
    for (let i = 0; i < s.x.length; i++) {
      parts.push(
        `<circle cx="${fmt(px(s.x[i]))}" cy="${fmt(py(s.y[i]))}" r="2.2" fill="${s.color}"/>`
      );
    }
  }

  // legend
  const legendX = MARGIN.left + plotW - 150;
  let legendY = MARGIN.top + 10;
  for (const s of spec.series) {
    parts.push(
      `<line x1="${legendX}" y1="${legendY}" x2="${legendX + 22}" y2="${legendY}" ` +
        `stroke="${s.color}" stroke-width="2"${s.dash ? ` stroke-dasharray="${s.dash}"` : ""}/>`
    );
    parts.push(
      `<text x="${legendX + 28}" y="${legendY + 3.5}" font-size="11">${s.label}</text>`
    );
    legendY += 16;
  }

  parts.push("</svg>");
  return parts.join("\n") + "\n";
}
