// Mock scorer HTTP server speaking the batch wire protocol.
//
// POST /score with {"pairs": [{"source": ..., "hypothesis": ...}, ...]}
// returns {"scores": [...]}; GET /health returns 200. Malformed requests get
// a 400 with an error message. Intended as a test double for a real scoring
// service.

import * as http from "node:http";
import { AddressInfo } from "node:net";

import {
  ProtocolError,
  ScorePair,
  lexicalScore,
  parseScoreRequestBody,
} from "./protocol.js";

export type ScoreFn = (pair: ScorePair) => number;

export interface MockScorer {
  server: http.Server;
  endpoint: string;
  /** POST /score requests seen, including malformed ones. */
  readonly requestsServed: number;
  close(): Promise<void>;
}

function sendJson(
  res: http.ServerResponse,
  status: number,
  payload: unknown,
): void {
  const body = Buffer.from(JSON.stringify(payload), "utf-8");
  res.writeHead(status, {
    "Content-Type": "application/json",
    "Content-Length": body.length,
  });
  res.end(body);
}

async function readBody(req: http.IncomingMessage): Promise<string> {
  const chunks: Buffer[] = [];
  for await (const chunk of req) {
    chunks.push(chunk as Buffer);
  }
  return Buffer.concat(chunks).toString("utf-8");
}

export function createMockScorer(scoreFn: ScoreFn = lexicalScore): {
  server: http.Server;
  counters: { requestsServed: number };
} {
  const counters = { requestsServed: 0 };
  const server = http.createServer(async (req, res) => {
    if (req.method === "GET") {
      if (req.url === "/health") {
        sendJson(res, 200, { status: "ok" });
      } else {
        sendJson(res, 404, { error: `unknown path ${req.url}` });
      }
      return;
    }
    if (req.method === "POST") {
      if (req.url !== "/score") {
        sendJson(res, 404, { error: `unknown path ${req.url}` });
        return;
      }
      counters.requestsServed += 1;
      const body = await readBody(req);
      let payload: unknown;
      try {
        payload = JSON.parse(body);
      } catch (exc) {
        sendJson(res, 400, {
          error: `invalid JSON: ${(exc as Error).message}`,
        });
        return;
      }
      try {
        const { pairs } = parseScoreRequestBody(payload);
        sendJson(res, 200, { scores: pairs.map(scoreFn) });
      } catch (exc) {
        if (exc instanceof ProtocolError) {
          sendJson(res, 400, { error: exc.message });
          return;
        }
        throw exc;
      }
      return;
    }
    sendJson(res, 404, { error: `unsupported method ${req.method}` });
  });
  return { server, counters };
}

/** Bind a mock scorer; port 0 picks a free port. */
export function startMockScorer(
  host = "127.0.0.1",
  port = 0,
  scoreFn: ScoreFn = lexicalScore,
): Promise<MockScorer> {
  const { server, counters } = createMockScorer(scoreFn);
  return new Promise((resolve, reject) => {
    server.once("error", reject);
    server.listen(port, host, () => {
      const address = server.address() as AddressInfo;
      resolve({
        server,
        endpoint: `http://${host}:${address.port}`,
        get requestsServed() {
          return counters.requestsServed;
        },
        close: () =>
          new Promise<void>((done, fail) =>
            server.close((err) => (err ? fail(err) : done())),
          ),
      });
    });
  });
}
