export {
  ProtocolError,
  ScoringError,
  TransportError,
  lexicalScore,
  parseScoreRequestBody,
  parseScoreResponseBody,
} from "./protocol.js";
export type {
  ScorePair,
  ScoreRequestBody,
  ScoreResponseBody,
} from "./protocol.js";
export {
  SCORER_URL_ENV,
  ScorerClient,
  httpScoreBatch,
  resolveEndpoint,
} from "./client.js";
export type { ClientOptions } from "./client.js";
export { createMockScorer, startMockScorer } from "./mockScorer.js";
export type { MockScorer, ScoreFn } from "./mockScorer.js";
export {
  RecordError,
  parseInputRecords,
  parseOutputRecords,
  serializeOutputRecords,
} from "./records.js";
export type { InputRecord, OutputRecord } from "./records.js";
export { runCli } from "./cli.js";
export type { CliIO } from "./cli.js";
