import threading
import time
from pathlib import Path

import numpy as np
import pytest

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def catalog():
    from autopriv.defaults import default_catalog
    return default_catalog()


@pytest.fixture(scope="session")
def pet_registry():
    from autopriv.defaults import default_pet_registry
    return default_pet_registry()


@pytest.fixture(scope="session")
def maturity():
    from autopriv.defaults import default_maturity
    return default_maturity()


@pytest.fixture()
def rng():
    return np.random.default_rng(12345)


class ServerHandle:
    def __init__(self, server, thread, base_url):
        self.server = server
        self.thread = thread
        self.base_url = base_url

    def stop(self):
        self.server.should_exit = True
        self.thread.join(timeout=10)


def run_asgi_server(app, port: int) -> ServerHandle:
    import uvicorn

    config = uvicorn.Config(app, host="127.0.0.1", port=port, log_level="error")
    server = uvicorn.Server(config)
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    deadline = time.time() + 15
    while not server.started:
        if time.time() > deadline:
            raise RuntimeError("server did not start")
        time.sleep(0.02)
    return ServerHandle(server, thread, f"http://127.0.0.1:{port}")
