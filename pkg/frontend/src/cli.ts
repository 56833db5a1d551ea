// Command-line interface: validate JSONL corpora, rerank candidates through
// a remote scorer, probe scorer health, and run the mock scorer.
//
// Exit codes: 0 success, 1 I/O or validation error, 2 scorer failure.

import { readFile, writeFile } from "node:fs/promises";

import { SCORER_URL_ENV, ScorerClient } from "./client.js";
import { startMockScorer } from "./mockScorer.js";
import { ProtocolError, ScorePair, TransportError } from "./protocol.js";
import {
  InputRecord,
  OutputRecord,
  RecordError,
  parseInputRecords,
  parseOutputRecords,
  serializeOutputRecords,
} from "./records.js";

export interface CliIO {
  stdout: (message: string) => void;
  stderr: (message: string) => void;
  env: Record<string, string | undefined>;
}

const DEFAULT_IO: CliIO = {
  stdout: (message) => process.stdout.write(message),
  stderr: (message) => process.stderr.write(message),
  env: process.env,
};

class CliError extends Error {
  readonly code: number;

  constructor(message: string, code = 1) {
    super(message);
    this.code = code;
  }
}

interface ValidateOptions {
  input?: string;
  kind: string;
  help: boolean;
}

interface RerankOptions {
  input?: string;
  output?: string;
  url?: string;
  batchSize: number;
  retries: number;
  backoffMs: number;
  token?: string;
  help: boolean;
}

interface HealthOptions {
  url?: string;
  help: boolean;
}

interface MockScorerOptions {
  host: string;
  port: number;
  help: boolean;
}

export async function runCli(
  argv: string[],
  io: Partial<CliIO> = {},
): Promise<number> {
  const runtimeIO: CliIO = {
    stdout: io.stdout ?? DEFAULT_IO.stdout,
    stderr: io.stderr ?? DEFAULT_IO.stderr,
    env: io.env ?? DEFAULT_IO.env,
  };

  try {
    if (argv.length === 0 || argv[0] === "--help" || argv[0] === "-h") {
      runtimeIO.stdout(getRootHelpText());
      return 0;
    }

    const command = argv[0];
    const rest = argv.slice(1);

    if (command === "validate") {
      const options = parseValidateOptions(rest);
      if (options.help) {
        runtimeIO.stdout(getValidateHelpText());
        return 0;
      }
      return await runValidate(options, runtimeIO);
    }

    if (command === "rerank") {
      const options = parseRerankOptions(rest);
      if (options.help) {
        runtimeIO.stdout(getRerankHelpText());
        return 0;
      }
      return await runRerank(options, runtimeIO);
    }

    if (command === "health") {
      const options = parseHealthOptions(rest);
      if (options.help) {
        runtimeIO.stdout(getHealthHelpText());
        return 0;
      }
      return await runHealth(options, runtimeIO);
    }

    if (command === "mock-scorer") {
      const options = parseMockScorerOptions(rest);
      if (options.help) {
        runtimeIO.stdout(getMockScorerHelpText());
        return 0;
      }
      return await runMockScorer(options, runtimeIO);
    }

    throw new CliError(`unknown command "${command}"\n${getRootHelpText()}`);
  } catch (error) {
    if (error instanceof CliError) {
      runtimeIO.stderr(`error: ${error.message}\n`);
      return error.code;
    }
    runtimeIO.stderr(`error: ${formatErrorMessage(error)}\n`);
    return 1;
  }
}

async function readTextFile(path: string): Promise<string> {
  try {
    return await readFile(path, "utf-8");
  } catch (error) {
    throw new CliError(`cannot read ${path}: ${formatErrorMessage(error)}`);
  }
}

async function runValidate(options: ValidateOptions, io: CliIO): Promise<number> {
  if (!options.input) {
    throw new CliError("validate requires --input");
  }
  const text = await readTextFile(options.input);
  let count: number;
  try {
    if (options.kind === "input") {
      count = parseInputRecords(text, options.input).length;
    } else if (options.kind === "output") {
      count = parseOutputRecords(text, options.input).length;
    } else {
      throw new CliError(`--kind must be input or output, got "${options.kind}"`);
    }
  } catch (error) {
    if (error instanceof RecordError) {
      throw new CliError(error.message);
    }
    throw error;
  }
  io.stdout(`ok: ${count} records\n`);
  return 0;
}

async function runRerank(options: RerankOptions, io: CliIO): Promise<number> {
  if (!options.input || !options.output) {
    throw new CliError("rerank requires --input and --output");
  }
  const url = options.url ?? io.env[SCORER_URL_ENV];
  if (!url) {
    throw new CliError(`rerank requires --url or ${SCORER_URL_ENV}`);
  }
  const text = await readTextFile(options.input);
  let records: InputRecord[];
  try {
    records = parseInputRecords(text, options.input);
  } catch (error) {
    if (error instanceof RecordError) {
      throw new CliError(error.message);
    }
    throw error;
  }
  const pairs: ScorePair[] = [];
  for (const record of records) {
    for (const candidate of record.candidates) {
      pairs.push({ source: record.source, hypothesis: candidate });
    }
  }
  const client = new ScorerClient(url, {
    maxBatch: options.batchSize,
    retries: options.retries,
    backoffMs: options.backoffMs,
    authToken: options.token,
  });
  let scores: number[];
  try {
    scores = await client.scoreBatch(pairs);
  } catch (error) {
    if (error instanceof TransportError || error instanceof ProtocolError) {
      throw new CliError(`scorer error: ${error.message}`, 2);
    }
    throw error;
  }
  const outputs: OutputRecord[] = [];
  let cursor = 0;
  for (const record of records) {
    const slice = scores.slice(cursor, cursor + record.candidates.length);
    cursor += record.candidates.length;
    let best = 0;
    for (let i = 1; i < slice.length; i += 1) {
      if (slice[i]! > slice[best]!) {
        best = i;
      }
    }
    outputs.push({
      id: record.id,
      method: "qe_rerank",
      output: record.candidates[best]!,
      score: slice[best]!,
      base_index: best,
      stats: { scored_items: record.candidates.length },
    });
  }
  try {
    await writeFile(options.output, serializeOutputRecords(outputs), "utf-8");
  } catch (error) {
    throw new CliError(`cannot write ${options.output}: ${formatErrorMessage(error)}`);
  }
  return 0;
}

async function runHealth(options: HealthOptions, io: CliIO): Promise<number> {
  const url = options.url ?? io.env[SCORER_URL_ENV];
  if (!url) {
    throw new CliError(`health requires --url or ${SCORER_URL_ENV}`);
  }
  const client = new ScorerClient(url, { timeoutMs: 5_000 });
  if (await client.health()) {
    io.stdout("ok\n");
    return 0;
  }
  io.stderr(`error: scorer at ${url} is unreachable\n`);
  return 2;
}

async function runMockScorer(options: MockScorerOptions, io: CliIO): Promise<number> {
  const handle = await startMockScorer(options.host, options.port);
  io.stdout(`listening on ${handle.endpoint}\n`);
  await new Promise<void>((resolve) => {
    process.once("SIGINT", resolve);
    process.once("SIGTERM", resolve);
  });
  await handle.close();
  return 0;
}

type FlagSpec = Record<string, "string" | "boolean">;

function parseFlags(
  args: ReadonlyArray<string>,
  spec: FlagSpec,
): Record<string, string | boolean> {
  const parsed: Record<string, string | boolean> = {};
  for (let index = 0; index < args.length; index += 1) {
    const token = args[index]!;
    if (!token.startsWith("--")) {
      throw new CliError(`unexpected argument "${token}"`);
    }
    const [nameWithPrefix, inlineValue] = token.split("=", 2) as [
      string,
      string | undefined,
    ];
    const name = nameWithPrefix.slice(2);
    const expected = spec[name];
    if (!expected) {
      throw new CliError(`unknown option "--${name}"`);
    }
    if (expected === "boolean") {
      parsed[name] = inlineValue !== undefined ? inlineValue !== "false" : true;
      continue;
    }
    if (inlineValue !== undefined) {
      parsed[name] = inlineValue;
      continue;
    }
    const next = args[index + 1];
    if (next === undefined) {
      throw new CliError(`option "--${name}" requires a value`);
    }
    parsed[name] = next;
    index += 1;
  }
  return parsed;
}

function asOptionalString(value: string | boolean | undefined): string | undefined {
  return typeof value === "string" ? value : undefined;
}

function asCount(
  value: string | boolean | undefined,
  name: string,
  fallback: number,
  minimum = 1,
): number {
  if (value === undefined) {
    return fallback;
  }
  const parsed = Number(value);
  if (!Number.isInteger(parsed) || parsed < minimum) {
    throw new CliError(`option "--${name}" must be an integer >= ${minimum}`);
  }
  return parsed;
}

function parseValidateOptions(args: ReadonlyArray<string>): ValidateOptions {
  const parsed = parseFlags(args, { input: "string", kind: "string", help: "boolean" });
  return {
    input: asOptionalString(parsed["input"]),
    kind: asOptionalString(parsed["kind"]) ?? "input",
    help: Boolean(parsed["help"]),
  };
}

function parseRerankOptions(args: ReadonlyArray<string>): RerankOptions {
  const parsed = parseFlags(args, {
    input: "string",
    output: "string",
    url: "string",
    "batch-size": "string",
    retries: "string",
    "backoff-ms": "string",
    token: "string",
    help: "boolean",
  });
  return {
    input: asOptionalString(parsed["input"]),
    output: asOptionalString(parsed["output"]),
    url: asOptionalString(parsed["url"]),
    batchSize: asCount(parsed["batch-size"], "batch-size", 400),
    retries: asCount(parsed["retries"], "retries", 3),
    backoffMs: asCount(parsed["backoff-ms"], "backoff-ms", 500, 0),
    token: asOptionalString(parsed["token"]),
    help: Boolean(parsed["help"]),
  };
}

function parseHealthOptions(args: ReadonlyArray<string>): HealthOptions {
  const parsed = parseFlags(args, { url: "string", help: "boolean" });
  return {
    url: asOptionalString(parsed["url"]),
    help: Boolean(parsed["help"]),
  };
}

function parseMockScorerOptions(args: ReadonlyArray<string>): MockScorerOptions {
  const parsed = parseFlags(args, { host: "string", port: "string", help: "boolean" });
  return {
    host: asOptionalString(parsed["host"]) ?? "127.0.0.1",
    port: asCount(parsed["port"], "port", 0, 0),
    help: Boolean(parsed["help"]),
  };
}

function getRootHelpText(): string {
  return [
    "Usage:",
    "  qefuse-client validate --input <path> [--kind input|output]",
    "  qefuse-client rerank --input <path> --output <path> [options]",
    "  qefuse-client health [--url <endpoint>]",
    "  qefuse-client mock-scorer [--host <host>] [--port <port>]",
    "",
    `Endpoints default to the ${SCORER_URL_ENV} environment variable.`,
    "Exit codes: 0 success, 1 I/O or validation error, 2 scorer failure.",
    "",
  ].join("\n");
}

function getValidateHelpText(): string {
  return [
    "Usage:",
    "  qefuse-client validate --input <path> [--kind input|output]",
    "",
    "Options:",
    "  --input <path>  JSONL file to check",
    "  --kind <kind>   Record schema: input (default) or output",
    "  --help          Show this help text",
    "",
  ].join("\n");
}

function getRerankHelpText(): string {
  return [
    "Usage:",
    "  qefuse-client rerank --input <path> --output <path> [options]",
    "",
    "Scores every candidate against its source over the wire and keeps the",
    "highest-scoring candidate per record (first maximum on ties).",
    "",
    "Options:",
    "  --input <path>      Input record JSONL file",
    "  --output <path>     Output record JSONL file to write",
    `  --url <endpoint>    Scorer endpoint (default: ${SCORER_URL_ENV})`,
    "  --batch-size <n>    Pairs per request (default: 400)",
    "  --retries <n>       Transport attempts per chunk (default: 3)",
    "  --backoff-ms <n>    Base retry backoff in milliseconds (default: 500)",
    "  --token <token>     Bearer token for the Authorization header",
    "  --help              Show this help text",
    "",
  ].join("\n");
}

function getHealthHelpText(): string {
  return [
    "Usage:",
    "  qefuse-client health [--url <endpoint>]",
    "",
    "Options:",
    `  --url <endpoint>  Scorer endpoint (default: ${SCORER_URL_ENV})`,
    "  --help            Show this help text",
    "",
  ].join("\n");
}

function getMockScorerHelpText(): string {
  return [
    "Usage:",
    "  qefuse-client mock-scorer [--host <host>] [--port <port>]",
    "",
    "Runs the lexical mock scorer until interrupted; port 0 picks a free",
    "port. The bound endpoint is printed on startup.",
    "",
    "Options:",
    "  --host <host>  Bind address (default: 127.0.0.1)",
    "  --port <port>  Port, 0 for ephemeral (default: 0)",
    "  --help         Show this help text",
    "",
  ].join("\n");
}

function formatErrorMessage(error: unknown): string {
  if (error instanceof Error) {
    return error.message;
  }
  return String(error);
}
