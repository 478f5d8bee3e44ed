"""HTTP client used by the CLI.

Every CLI command talks to the service API.  With ``--url`` the client speaks
to a remote server over httpx; without it, an embedded in-process transport
serves the same app, so single-machine use needs no running daemon while
keeping one request path.
"""

from __future__ import annotations

import httpx


class ServiceError(Exception):
    """Non-2xx response from the service; carries the HTTP status."""

    def __init__(self, status_code: int, detail: str):
        super().__init__(f"HTTP {status_code}: {detail}")
        self.status_code = status_code
        self.detail = detail


class ServiceClient:
    def __init__(self, url: str | None = None, model_path: str | None = None):
        if url is not None:
            self._client = httpx.Client(base_url=url, timeout=600.0)
        else:
            import warnings

            with warnings.catch_warnings():
                warnings.simplefilter("ignore")  # starlette deprecation chatter at import
                from starlette.testclient import TestClient

            from .service import create_app

            self._client = TestClient(create_app(model_path=model_path))

    def close(self) -> None:
        self._client.close()

    def __enter__(self) -> "ServiceClient":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def _unwrap(self, response: httpx.Response) -> dict:
        if response.status_code >= 400:
            try:
                detail = response.json().get("detail", response.text)
            except ValueError:
                detail = response.text
            raise ServiceError(response.status_code, str(detail))
        return response.json()

    def get(self, path: str) -> dict:
        return self._unwrap(self._client.get(path))

    def post(self, path: str, payload: dict) -> dict:
        return self._unwrap(self._client.post(path, json=payload))
