"""Minimal SPARQL protocol client."""

from __future__ import annotations

import urllib.error
import urllib.parse
import urllib.request

__all__ = ["EndpointError", "query_remote"]


class EndpointError(Exception):
    """Connection failure or non-2xx response; ``body`` carries the server's text when there is one."""

    def __init__(self, message: str, status: int | None = None, body: str = "") -> None:
        self.status = status
        self.body = body
        super().__init__(message + (f": {body.strip()}" if body.strip() else ""))


def query_remote(
    endpoint_url: str,
    query_text: str,
    accept: str = "application/sparql-results+json",
    timeout: float = 30.0,
) -> bytes:
    """POST ``query_text`` as ``application/sparql-query`` and return the response body."""
    parsed = urllib.parse.urlsplit(endpoint_url)
    if parsed.scheme not in ("http", "https") or not parsed.netloc:
        raise ValueError(f"not an http(s) endpoint URL: {endpoint_url!r}")
    request = urllib.request.Request(
        endpoint_url,
        data=query_text.encode("utf-8"),
        method="POST",
        headers={"Content-Type": "application/sparql-query; charset=utf-8", "Accept": accept},
    )
    try:
        with urllib.request.urlopen(request, timeout=timeout) as response:
            return response.read()
    except urllib.error.HTTPError as exc:
        body = exc.read().decode("utf-8", "replace")
        raise EndpointError(f"endpoint returned HTTP {exc.code}", exc.code, body) from None
    except (urllib.error.URLError, OSError) as exc:
        reason = getattr(exc, "reason", exc)
        raise EndpointError(f"cannot reach {endpoint_url}: {reason}") from None
