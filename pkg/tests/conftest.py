"""Shared fixtures: a queue-driven stub chat server and series builders."""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

from forecastlab.series import Series


class StubChatServer:
    """Local chat-completion endpoint that replays queued response strings.

    Each POST pops the next queued string and wraps it as the assistant
    message content. Requests are recorded for assertion.
    """

    def __init__(self) -> None:
        self.responses: list[str] = []
        self.requests: list[dict] = []
        self.headers: list[dict] = []
        outer = self

        class Handler(BaseHTTPRequestHandler):
            def do_POST(self) -> None:  # noqa: N802 (http.server API)
                length = int(self.headers.get("Content-Length", 0))
                outer.headers.append({k.lower(): v for k, v in self.headers.items()})
                outer.requests.append(json.loads(self.rfile.read(length)))
                content = outer.responses.pop(0) if outer.responses else "{}"
                body = json.dumps({"choices": [{"message": {"content": content}}]}).encode()
                self.send_response(200)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(body)))
                self.end_headers()
                self.wfile.write(body)

            def log_message(self, *args) -> None:
                pass

        self.server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self.thread = threading.Thread(target=self.server.serve_forever, daemon=True)
        self.thread.start()

    @property
    def endpoint(self) -> str:
        host, port = self.server.server_address
        return f"http://{host}:{port}/v1/chat/completions"

    def close(self) -> None:
        self.server.shutdown()
        self.server.server_close()


@pytest.fixture
def chat_server():
    server = StubChatServer()
    yield server
    server.close()


def make_series(values) -> Series:
    return Series(values=tuple(values))


# Acceptance criteria report: test_acceptance.py registers one entry per
# criterion; the terminal summary prints one pass/fail line for each.
CRITERION_RESULTS: list[tuple[int, str, float, str]] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not CRITERION_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num, status, seconds, title in sorted(CRITERION_RESULTS):
        terminalreporter.write_line(f"criterion {num:02d} {status} ({seconds:6.2f}s)  {title}")
