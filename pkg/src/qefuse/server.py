"""Mock scorer HTTP server speaking the batch wire protocol.

POST /score with {"pairs": [{"source": ..., "hypothesis": ...}, ...]} returns
{"scores": [...]}; GET /health returns 200. Malformed requests get a 400 with
an error message. Intended as a test double for a real scoring service.
"""

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .scoring import Scorer, ScoreRequest, ScoringError


class _BadRequest(Exception):
    pass


def _parse_pairs(body: bytes) -> list[ScoreRequest]:
    try:
        payload = json.loads(body)
    except ValueError as exc:
        raise _BadRequest(f"invalid JSON: {exc}")
    if not isinstance(payload, dict) or not isinstance(payload.get("pairs"), list):
        raise _BadRequest('request body must be {"pairs": [...]}')
    pairs = []
    for index, item in enumerate(payload["pairs"]):
        if (
            not isinstance(item, dict)
            or not isinstance(item.get("source"), str)
            or not isinstance(item.get("hypothesis"), str)
        ):
            raise _BadRequest(
                f"pair {index} must have string fields source and hypothesis"
            )
        pairs.append(ScoreRequest(item["source"], item["hypothesis"]))
    return pairs


class _Handler(BaseHTTPRequestHandler):
    server: "MockScorerServer"

    def _send_json(self, status: int, payload: dict) -> None:
        body = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_GET(self) -> None:
        if self.path == "/health":
            self._send_json(200, {"status": "ok"})
        else:
            self._send_json(404, {"error": f"unknown path {self.path}"})

    def do_POST(self) -> None:
        if self.path != "/score":
            self._send_json(404, {"error": f"unknown path {self.path}"})
            return
        self.server.count_request()
        length = int(self.headers.get("Content-Length", 0))
        try:
            pairs = _parse_pairs(self.rfile.read(length))
            scores = self.server.scorer.score_batch(pairs)
        except (_BadRequest, ScoringError) as exc:
            self._send_json(400, {"error": str(exc)})
            return
        self._send_json(200, {"scores": scores})

    def log_message(self, format: str, *args) -> None:
        pass  # keep test output clean


class MockScorerServer(ThreadingHTTPServer):
    daemon_threads = True

    def __init__(self, address: tuple[str, int], scorer: Scorer):
        super().__init__(address, _Handler)
        self.scorer = scorer
        self.score_requests_served = 0
        self._count_lock = threading.Lock()

    def count_request(self) -> None:
        with self._count_lock:
            self.score_requests_served += 1

    @property
    def endpoint(self) -> str:
        host, port = self.server_address[:2]
        return f"http://{host}:{port}"


def create_server(host: str, port: int, scorer: Scorer) -> MockScorerServer:
    """Bind a mock scorer; port 0 picks a free port. Caller runs serve_forever."""
    return MockScorerServer((host, port), scorer)
