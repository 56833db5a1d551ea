// HTTP client for the scorer wire protocol.

import {
  ProtocolError,
  ScorePair,
  TransportError,
  parseScoreResponseBody,
} from "./protocol.js";

export const SCORER_URL_ENV = "QEFUSE_SCORER_URL";

export interface ClientOptions {
  timeoutMs?: number;
  maxBatch?: number;
  retries?: number;
  authToken?: string;
  backoffMs?: number;
}

/** Resolve a scorer endpoint from an explicit value or the environment. */
export function resolveEndpoint(explicit?: string): string {
  const url = explicit ?? process.env[SCORER_URL_ENV];
  if (!url) {
    throw new Error(
      `no scorer endpoint: pass one explicitly or set ${SCORER_URL_ENV}`,
    );
  }
  return url;
}

function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}

/**
 * Score pairs against a remote scorer, chunked to maxBatch per call.
 *
 * POSTs {"pairs": [{"source", "hypothesis"}, ...]} to <endpoint>/score and
 * expects {"scores": [...]} of matching length. Transport failures are
 * retried with exponential backoff up to `retries` attempts per chunk and
 * then raised as TransportError with the chunk index; malformed responses
 * raise ProtocolError. The whole operation fails on any chunk failure so
 * corpus runs stay deterministic (no partial results).
 */
export async function httpScoreBatch(
  endpoint: string,
  pairs: ScorePair[],
  options: ClientOptions = {},
): Promise<number[]> {
  const timeoutMs = options.timeoutMs ?? 30_000;
  const maxBatch = options.maxBatch ?? 400;
  const retries = options.retries ?? 3;
  const backoffMs = options.backoffMs ?? 500;
  if (maxBatch < 1) {
    throw new RangeError("maxBatch must be >= 1");
  }
  if (retries < 1) {
    throw new RangeError("retries must be >= 1");
  }
  if (pairs.length === 0) {
    return [];
  }
  const url = endpoint.replace(/\/+$/, "") + "/score";
  const headers: Record<string, string> = {
    "Content-Type": "application/json",
  };
  if (options.authToken) {
    headers["Authorization"] = `Bearer ${options.authToken}`;
  }
  const scores: number[] = [];
  const chunks: ScorePair[][] = [];
  for (let i = 0; i < pairs.length; i += maxBatch) {
    chunks.push(pairs.slice(i, i + maxBatch));
  }
  for (let chunkIndex = 0; chunkIndex < chunks.length; chunkIndex += 1) {
    const chunk = chunks[chunkIndex]!;
    const payload = JSON.stringify({ pairs: chunk });
    let response: Response | null = null;
    let lastError: unknown = null;
    for (let attempt = 0; attempt < retries; attempt += 1) {
      if (attempt > 0) {
        await sleep(backoffMs * 2 ** (attempt - 1));
      }
      let candidate: Response;
      try {
        candidate = await fetch(url, {
          method: "POST",
          headers,
          body: payload,
          signal: AbortSignal.timeout(timeoutMs),
        });
      } catch (exc) {
        lastError = exc;
        continue;
      }
      if (candidate.status >= 500) {
        await candidate.text().catch(() => "");
        lastError = new Error(`server error ${candidate.status}`);
        continue;
      }
      response = candidate;
      break;
    }
    if (response === null) {
      throw new TransportError(
        `chunk ${chunkIndex} failed after ${retries} attempts: ${String(lastError)}`,
        chunkIndex,
      );
    }
    const text = await response.text();
    if (response.status !== 200) {
      throw new ProtocolError(
        `chunk ${chunkIndex}: HTTP ${response.status}: ${text.slice(0, 200)}`,
      );
    }
    let body: unknown;
    try {
      body = JSON.parse(text);
    } catch (exc) {
      throw new ProtocolError(
        `chunk ${chunkIndex}: invalid JSON response: ${(exc as Error).message}`,
      );
    }
    let chunkScores: number[];
    try {
      chunkScores = parseScoreResponseBody(body, chunk.length);
    } catch (exc) {
      throw new ProtocolError(`chunk ${chunkIndex}: ${(exc as Error).message}`);
    }
    scores.push(...chunkScores);
  }
  return scores;
}

/** Client for a remote service speaking the wire protocol. */
export class ScorerClient {
  readonly endpoint: string;
  readonly options: ClientOptions;

  constructor(endpoint: string, options: ClientOptions = {}) {
    this.endpoint = endpoint;
    this.options = options;
  }

  scoreBatch(pairs: ScorePair[]): Promise<number[]> {
    return httpScoreBatch(this.endpoint, pairs, this.options);
  }

  /** GET <endpoint>/health; true iff the scorer answers 200. */
  async health(): Promise<boolean> {
    const url = this.endpoint.replace(/\/+$/, "") + "/health";
    try {
      const response = await fetch(url, {
        signal: AbortSignal.timeout(this.options.timeoutMs ?? 30_000),
      });
      await response.text().catch(() => "");
      return response.status === 200;
    } catch {
      return false;
    }
  }
}
