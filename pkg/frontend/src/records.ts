// JSONL corpus formats shared with the fusion CLI.
//
// Input records: {"id", "source", "candidates", "reference"?}, one JSON
// object per line. Output records: {"id", "method", "output", "score",
// "base_index", "stats"}, one per input line in input order. Diagnostics
// carry 1-based line numbers.

export interface InputRecord {
  id: string;
  source: string;
  candidates: string[];
  reference?: string;
}

export interface OutputRecord {
  id: string;
  method: string;
  output: string;
  score: number;
  base_index: number;
  stats: Record<string, number>;
}

export class RecordError extends Error {}

function isObject(value: unknown): value is Record<string, unknown> {
  return typeof value === "object" && value !== null && !Array.isArray(value);
}

export function parseInputRecords(text: string, path: string): InputRecord[] {
  const records: InputRecord[] = [];
  const ids = new Set<string>();
  const lines = text.split("\n");
  if (lines.length > 0 && lines[lines.length - 1] === "") {
    lines.pop();
  }
  lines.forEach((line, index) => {
    const where = `${path}: line ${index + 1}`;
    const stripped = line.endsWith("\r") ? line.slice(0, -1) : line;
    if (stripped.trim() === "") {
      throw new RecordError(`${where}: blank line`);
    }
    let obj: unknown;
    try {
      obj = JSON.parse(stripped);
    } catch (exc) {
      throw new RecordError(`${where}: invalid JSON (${(exc as Error).message})`);
    }
    if (!isObject(obj)) {
      throw new RecordError(`${where}: record must be a JSON object`);
    }
    const id = obj["id"];
    if (typeof id !== "string" || id === "") {
      throw new RecordError(`${where}: missing or invalid id`);
    }
    if (ids.has(id)) {
      throw new RecordError(`${where}: duplicate id ${JSON.stringify(id)}`);
    }
    ids.add(id);
    const source = obj["source"];
    if (typeof source !== "string" || source === "") {
      throw new RecordError(`${where}: missing or invalid source`);
    }
    const candidates = obj["candidates"];
    if (
      !Array.isArray(candidates) ||
      candidates.length === 0 ||
      !candidates.every((c) => typeof c === "string")
    ) {
      throw new RecordError(
        `${where}: candidates must be a non-empty string array`,
      );
    }
    const reference = obj["reference"];
    if (reference !== undefined && typeof reference !== "string") {
      throw new RecordError(`${where}: reference must be a string when present`);
    }
    const record: InputRecord = {
      id,
      source,
      candidates: candidates as string[],
    };
    if (typeof reference === "string") {
      record.reference = reference;
    }
    records.push(record);
  });
  if (records.length === 0) {
    throw new RecordError(`${path}: no records`);
  }
  return records;
}

export function parseOutputRecords(text: string, path: string): OutputRecord[] {
  const records: OutputRecord[] = [];
  const ids = new Set<string>();
  const lines = text.split("\n");
  if (lines.length > 0 && lines[lines.length - 1] === "") {
    lines.pop();
  }
  lines.forEach((line, index) => {
    const where = `${path}: line ${index + 1}`;
    let obj: unknown;
    try {
      obj = JSON.parse(line);
    } catch (exc) {
      throw new RecordError(`${where}: invalid JSON (${(exc as Error).message})`);
    }
    if (!isObject(obj)) {
      throw new RecordError(`${where}: record must be a JSON object`);
    }
    const id = obj["id"];
    const method = obj["method"];
    const output = obj["output"];
    const score = obj["score"];
    const baseIndex = obj["base_index"];
    const stats = obj["stats"];
    if (typeof id !== "string" || typeof output !== "string") {
      throw new RecordError(`${where}: record needs string id and output fields`);
    }
    if (ids.has(id)) {
      throw new RecordError(`${where}: duplicate id ${JSON.stringify(id)}`);
    }
    ids.add(id);
    if (typeof method !== "string" || method === "") {
      throw new RecordError(`${where}: missing or invalid method`);
    }
    if (typeof score !== "number" || Number.isNaN(score)) {
      throw new RecordError(`${where}: missing or invalid score`);
    }
    if (typeof baseIndex !== "number" || !Number.isInteger(baseIndex)) {
      throw new RecordError(`${where}: missing or invalid base_index`);
    }
    if (!isObject(stats)) {
      throw new RecordError(`${where}: stats must be a JSON object`);
    }
    records.push({
      id,
      method,
      output,
      score,
      base_index: baseIndex,
      stats: stats as Record<string, number>,
    });
  });
  if (records.length === 0) {
    throw new RecordError(`${path}: no records`);
  }
  return records;
}

/** Serialize output records as JSONL with LF line endings, key order fixed. */
export function serializeOutputRecords(records: OutputRecord[]): string {
  return records
    .map(
      (r) =>
        JSON.stringify({
          id: r.id,
          method: r.method,
          output: r.output,
          score: r.score,
          base_index: r.base_index,
          stats: r.stats,
        }) + "\n",
    )
    .join("");
}
