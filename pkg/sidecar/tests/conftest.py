import socket
import threading
import time

import pytest
import uvicorn


class LiveServer:
    """uvicorn in a daemon thread on an ephemeral port."""

    def __init__(self, app):
        self._config = uvicorn.Config(app, host="127.0.0.1", port=0, log_level="warning")
        self._server = uvicorn.Server(self._config)
        self._thread = threading.Thread(target=self._server.run, daemon=True)

    def __enter__(self) -> str:
        self._thread.start()
        deadline = time.time() + 10
        while not self._server.started:
            if time.time() > deadline:
                raise RuntimeError("sidecar server did not start")
            time.sleep(0.01)
        sock: socket.socket = self._server.servers[0].sockets[0]
        port = sock.getsockname()[1]
        return f"http://127.0.0.1:{port}"

    def __exit__(self, *exc):
        self._server.should_exit = True
        self._thread.join(timeout=10)
        return False


@pytest.fixture
def live_server():
    return LiveServer
