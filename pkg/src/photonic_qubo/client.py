"""Thin client for the twin service.

Without a base URL the client drives the FastAPI app in-process through an
ASGI transport (no server needed); with one it talks HTTP to a running
instance, so the CLI works the same way against either.
"""

from __future__ import annotations

import asyncio

import httpx


class ServiceError(RuntimeError):
    """Non-2xx response from the service, with the reported detail."""

    def __init__(self, status_code: int, detail: str):
        self.status_code = status_code
        self.detail = detail
        super().__init__(f"service returned {status_code}: {detail}")


class ServiceClient:
    def __init__(self, base_url: str | None = None):
        self._base_url = base_url
        self._http = httpx.Client(base_url=base_url, timeout=None) if base_url else None

    def _request(self, method: str, path: str, payload: dict | None = None) -> httpx.Response:
        if self._http is not None:
            return self._http.request(method, path, json=payload)

        from .app import app

        async def go():
            transport = httpx.ASGITransport(app=app)
            async with httpx.AsyncClient(transport=transport, base_url="http://twin") as ac:
                return await ac.request(method, path, json=payload)

        return asyncio.run(go())

    def _check(self, response: httpx.Response) -> dict:
        if response.status_code >= 400:
            try:
                detail = response.json().get("detail", response.text)
            except Exception:
                detail = response.text
            raise ServiceError(response.status_code, str(detail))
        return response.json()

    def get(self, path: str) -> dict:
        return self._check(self._request("GET", path))

    def post(self, path: str, payload: dict) -> dict:
        return self._check(self._request("POST", path, payload))

    def close(self) -> None:
        if self._http is not None:
            self._http.close()
