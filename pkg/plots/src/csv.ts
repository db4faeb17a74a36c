/**
 * Strict readers for the simulator's two CSV schemas.
 *
 * Both files are plain comma-separated text without quoting; anything that
 * deviates from the expected header or value ranges is rejected with a
 * SchemaError naming the offense.
 */

export class SchemaError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "SchemaError";
  }
}

export interface TrainingLogRow {
  episode: number;
  cumulative_reward: number;
  epsilon: number;
}

export interface MetricsRow {
  method: string;
  M: number;
  B_v2v_bytes: number;
  v2v_delivery_prob: number;
  v2i_delivery_prob: number;
  episodes: number;
  seed: number;
}

const TRAINING_HEADER = ["episode", "cumulative_reward", "epsilon"];
const METRICS_HEADER = [
  "method",
  "M",
  "B_v2v_bytes",
  "v2v_delivery_prob",
  "v2i_delivery_prob",
  "episodes",
  "seed",
];

function splitRows(text: string, path: string): string[][] {
  const lines = text.split(/\r?\n/).filter((line) => line.length > 0);
  if (lines.length === 0) {
    throw new SchemaError(`${path}: file is empty`);
  }
  return lines.map((line) => line.split(","));
}

function checkHeader(header: string[], expected: string[], path: string): void {
  if (header.length !== expected.length || expected.some((h, i) => header[i] !== h)) {
    throw new SchemaError(
      `${path}: expected header '${expected.join(",")}', got '${header.join(",")}'`
    );
  }
}

function num(raw: string, field: string, line: number, path: string): number {
  const value = Number(raw);
  if (raw.trim() === "" || Number.isNaN(value)) {
    throw new SchemaError(`${path}:${line}: ${field} is not a number: '${raw}'`);
  }
  return value;
}

function probability(raw: string, field: string, line: number, path: string): number {
  const value = num(raw, field, line, path);
  if (value < 0 || value > 1) {
    throw new SchemaError(`${path}:${line}: ${field} out of [0, 1]: ${value}`);
  }
  return value;
}

export function parseTrainingLog(text: string, path = "training_log.csv"): TrainingLogRow[] {
  const rows = splitRows(text, path);
  checkHeader(rows[0], TRAINING_HEADER, path);
  if (rows.length < 2) {
    throw new SchemaError(`${path}: no data rows`);
  }
  return rows.slice(1).map((cells, i) => {
    const line = i + 2;
    if (cells.length !== TRAINING_HEADER.length) {
      throw new SchemaError(`${path}:${line}: expected ${TRAINING_HEADER.length} columns`);
    }
    return {
      episode: num(cells[0], "episode", line, path),
      cumulative_reward: num(cells[1], "cumulative_reward", line, path),
      epsilon: num(cells[2], "epsilon", line, path),
    };
  });
}

export function parseMetrics(text: string, path = "metrics.csv"): MetricsRow[] {
  const rows = splitRows(text, path);
  checkHeader(rows[0], METRICS_HEADER, path);
  if (rows.length < 2) {
    throw new SchemaError(`${path}: no data rows`);
  }
  return rows.slice(1).map((cells, i) => {
    const line = i + 2;
    if (cells.length !== METRICS_HEADER.length) {
      throw new SchemaError(`${path}:${line}: expected ${METRICS_HEADER.length} columns`);
    }
    return {
      method: cells[0],
      M: num(cells[1], "M", line, path),
      B_v2v_bytes: num(cells[2], "B_v2v_bytes", line, path),
      v2v_delivery_prob: probability(cells[3], "v2v_delivery_prob", line, path),
      v2i_delivery_prob: probability(cells[4], "v2i_delivery_prob", line, path),
      episodes: num(cells[5], "episodes", line, path),
      seed: num(cells[6], "seed", line, path),
    };
  });
}

/** Flat `key = value` manifest lines; unknown keys pass through untouched. */
export function parseManifest(text: string): Map<string, string> {
  const out = new Map<string, string>();
  for (const line of text.split(/\r?\n/)) {
    const stripped = line.trim();
    if (!stripped) continue;
    const eq = stripped.indexOf("=");
    if (eq < 0) continue;
    out.set(stripped.slice(0, eq).trim(), stripped.slice(eq + 1).trim());
  }
  return out;
}
