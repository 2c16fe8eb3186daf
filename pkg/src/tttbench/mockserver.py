"""A scripted chat-completions server for offline evaluation runs.

The script is a JSON object::

    {
      "default": "text returned when nothing else matches",
      "responses": {"<item_id>": ["sample 1 text", "sample 2 text", ...]},
      "failures": {"<item_id>#<sample>": 2},   # HTTP 503 this many times first
      "api_key": "secret"                        # optional; 401 when it differs
    }

Requests are matched on the ``X-TTTBench-Item`` / ``X-TTTBench-Sample``
headers the client sends. Run standalone with
``python -m tttbench.mockserver --script script.json --port 8000``.
"""

from __future__ import annotations

import argparse
import json
import threading
from collections import Counter
from contextlib import contextmanager
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer


class MockServer(ThreadingHTTPServer):
    daemon_threads = True

    def __init__(self, address, script: dict):
        super().__init__(address, _Handler)
        self.script = script
        self.requests: list[dict] = []
        self.hits: Counter = Counter()
        self.lock = threading.Lock()

    @property
    def url(self) -> str:
        host, port = self.server_address[:2]
        return f"http://{host}:{port}/v1"

    def reply_for(self, item_id: str, sample: int) -> str:
        texts = self.script.get("responses", {}).get(item_id)
        if texts:
            return texts[(sample - 1) % len(texts)]
        return self.script.get("default", "")


class _Handler(BaseHTTPRequestHandler):
    server: MockServer

    def log_message(self, *args):  # quiet
        pass

    def _send(self, status: int, payload: dict) -> None:
        body = json.dumps(payload).encode()
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_POST(self):
        if not self.path.rstrip("/").endswith("/chat/completions"):
            self._send(404, {"error": "not found"})
            return
        length = int(self.headers.get("Content-Length", 0))
        body = json.loads(self.rfile.read(length) or b"{}")
        srv = self.server
        want = srv.script.get("api_key")
        if want and self.headers.get("Authorization") != f"Bearer {want}":
            self._send(401, {"error": "invalid api key"})
            return
        item_id = self.headers.get("X-TTTBench-Item", "")
        sample = int(self.headers.get("X-TTTBench-Sample", "1"))
        key = f"{item_id}#{sample}"
        with srv.lock:
            srv.requests.append({"item_id": item_id, "sample_index": sample, "body": body})
            srv.hits[key] += 1
            attempt = srv.hits[key]
        if attempt <= srv.script.get("failures", {}).get(key, 0):
            self._send(503, {"error": "scripted failure"})
            return
        text = srv.reply_for(item_id, sample)
        prompt = body.get("messages", [{}])[-1].get("content", "")
        usage = {
            "prompt_tokens": len(prompt.split()),
            "completion_tokens": len(text.split()),
            "total_tokens": len(prompt.split()) + len(text.split()),
        }
        self._send(200, {
            "id": f"mock-{key}",
            "object": "chat.completion",
            "model": body.get("model", "mock"),
            "choices": [{"index": 0, "message": {"role": "assistant", "content": text}, "finish_reason": "stop"}],
            "usage": usage,
        })  # fmt: skip


@contextmanager
def serve(script: dict, host: str = "127.0.0.1", port: int = 0):
    """Run a :class:`MockServer` on a background thread for the ``with`` block."""
    server = MockServer((host, port), script)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    try:
        yield server
    finally:
        server.shutdown()
        server.server_close()


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--script", required=True)
    ap.add_argument("--host", default="127.0.0.1")
    ap.add_argument("--port", type=int, default=8000)
    args = ap.parse_args(argv)
    with open(args.script, encoding="utf-8") as fh:
        script = json.load(fh)
    server = MockServer((args.host, args.port), script)
    print(f"serving scripted completions at {server.url}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass


if __name__ == "__main__":
    main()
