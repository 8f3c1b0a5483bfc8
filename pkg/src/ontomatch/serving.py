"""Run an app on a background thread bound to an ephemeral port.

Timing experiments and the distributed bench need real sockets rather
than an in-process test transport; this keeps spawning and teardown in
one place.
"""

from __future__ import annotations

import threading
import time

import uvicorn


class ServerStartupError(Exception):
    pass


class ServerHandle:
    def __init__(self, server: uvicorn.Server, thread: threading.Thread, host: str, port: int):
        self._server = server
        self._thread = thread
        self.host = host
        self.port = port

    @property
    def address(self) -> str:
        return f"{self.host}:{self.port}"

    @property
    def base_url(self) -> str:
        return f"http://{self.address}"

    def stop(self, timeout: float = 5.0) -> None:
        self._server.should_exit = True
        self._thread.join(timeout=timeout)

    def __enter__(self) -> "ServerHandle":
        return self

    def __exit__(self, *exc) -> None:
        self.stop()


def run_app_in_thread(app, host: str = "127.0.0.1", port: int = 0, startup_timeout: float = 10.0) -> ServerHandle:
    """Start serving; port 0 picks a free one.  Caller stops the handle."""
    config = uvicorn.Config(app, host=host, port=port, log_level="warning", access_log=False)
    server = uvicorn.Server(config)
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    deadline = time.monotonic() + startup_timeout
    while not server.started:
        if time.monotonic() > deadline or not thread.is_alive():
            raise ServerStartupError(f"server on {host}:{port} failed to start")
        time.sleep(0.01)
    bound = server.servers[0].sockets[0].getsockname()[1]
    return ServerHandle(server, thread, host, bound)
