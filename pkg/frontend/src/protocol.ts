// Scorer wire protocol: POST <endpoint>/score with {"pairs": [...]} returns
// {"scores": [...]} of the same length; GET /health returns 200. Scores are
// opaque reals, higher is better.

export interface ScorePair {
  source: string;
  hypothesis: string;
}

export interface ScoreRequestBody {
  pairs: ScorePair[];
}

export interface ScoreResponseBody {
  scores: number[];
}

export class ScoringError extends Error {}

export class TransportError extends ScoringError {
  readonly chunkIndex: number;

  constructor(message: string, chunkIndex: number) {
    super(message);
    this.chunkIndex = chunkIndex;
  }
}

export class ProtocolError extends ScoringError {}

/**
 * Reference-free lexical overlap score in [0, 1], bit-compatible with the
 * scorer behind `qefuse mock-scorer`: harmonic mean of source-token coverage
 * (fraction of source tokens whose lowercase form appears in the hypothesis)
 * and the length ratio min(|hyp|, |src|) / max(|hyp|, |src|). Empty
 * hypotheses score 0.
 */
export function lexicalScore(pair: ScorePair): number {
  const src = tokenize(pair.source);
  const hyp = tokenize(pair.hypothesis);
  if (hyp.length === 0 || src.length === 0) {
    return 0.0;
  }
  const hypForms = new Set(hyp.map((t) => t.toLowerCase()));
  let covered = 0;
  for (const token of src) {
    if (hypForms.has(token.toLowerCase())) {
      covered += 1;
    }
  }
  const coverage = covered / src.length;
  const ratio =
    Math.min(hyp.length, src.length) / Math.max(hyp.length, src.length);
  if (coverage === 0) {
    return 0.0;
  }
  return (2.0 * coverage * ratio) / (coverage + ratio);
}

function tokenize(text: string): string[] {
  const trimmed = text.trim();
  return trimmed.length === 0 ? [] : trimmed.split(/\s+/);
}

/** Parse and validate a request body; throws ProtocolError with a reason. */
export function parseScoreRequestBody(raw: unknown): ScoreRequestBody {
  if (typeof raw !== "object" || raw === null || Array.isArray(raw)) {
    throw new ProtocolError('request body must be {"pairs": [...]}');
  }
  const pairs = (raw as Record<string, unknown>)["pairs"];
  if (!Array.isArray(pairs)) {
    throw new ProtocolError('request body must be {"pairs": [...]}');
  }
  const parsed: ScorePair[] = [];
  pairs.forEach((item, index) => {
    if (
      typeof item !== "object" ||
      item === null ||
      typeof (item as Record<string, unknown>)["source"] !== "string" ||
      typeof (item as Record<string, unknown>)["hypothesis"] !== "string"
    ) {
      throw new ProtocolError(
        `pair ${index} must have string fields source and hypothesis`,
      );
    }
    const record = item as Record<string, unknown>;
    parsed.push({
      source: record["source"] as string,
      hypothesis: record["hypothesis"] as string,
    });
  });
  return { pairs: parsed };
}

/** Validate a response body against the request length. */
export function parseScoreResponseBody(
  raw: unknown,
  expected: number,
): number[] {
  if (typeof raw !== "object" || raw === null || Array.isArray(raw)) {
    throw new ProtocolError('response body must be {"scores": [...]}');
  }
  const scores = (raw as Record<string, unknown>)["scores"];
  if (!Array.isArray(scores) || scores.length !== expected) {
    throw new ProtocolError(
      `expected ${expected} scores, got ${JSON.stringify(scores).slice(0, 200)}`,
    );
  }
  return scores.map((value, index) => {
    if (typeof value !== "number" || Number.isNaN(value)) {
      throw new ProtocolError(`non-numeric score at index ${index}`);
    }
    return value;
  });
}
