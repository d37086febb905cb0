"""Clients for conducting a session: in-process against a store, or HTTP
against a running service. Both speak the same request/response shapes, so
the terminal conductor is a thin client either way."""

from __future__ import annotations

from typing import Optional, Protocol

import httpx

from .errors import InputError, NotFoundError, StateError
from .schemas import CommandRequest, StartSessionRequest, layout_to_domain
from .service import dispatch_command
from .store import SessionStore


class ConsoleClient(Protocol):
    def start_session(self, payload: dict) -> dict: ...
    def command(self, session_id: str, payload: dict) -> dict: ...
    def state(self, session_id: str) -> dict: ...
    def summary(self, session_id: str) -> dict: ...
    def events_text(self, session_id: str) -> str: ...
    def clock(self) -> dict: ...
    def advance_clock(self, seconds: float) -> dict: ...


class LocalConsole:
    """Drives a store directly, through the same validated request models
    the HTTP service uses."""

    def __init__(self, store: SessionStore):
        self.store = store

    def start_session(self, payload: dict) -> dict:
        body = StartSessionRequest(**payload)
        outcome = self.store.start_session(
            emotion=body.emotion,
            stimulus=body.stimulus(),
            checklist=body.checklist.to_domain(),
            config=body.config.to_domain(),
            date=body.date,
            subject=body.subject.to_domain() if body.subject else None,
            roi_layout=layout_to_domain(body.roi_layout),
            session_id=body.session_id,
            request_id=body.request_id,
        )
        return {"session_id": outcome.session_id, "version": outcome.version,
                "status": outcome.status.value, "warnings": list(outcome.warnings)}

    def command(self, session_id: str, payload: dict) -> dict:
        outcome = dispatch_command(self.store, session_id, CommandRequest(**payload))
        return {"session_id": outcome.session_id, "version": outcome.version,
                "status": outcome.status.value, "warnings": list(outcome.warnings)}

    def state(self, session_id: str) -> dict:
        return self.store.live_state(session_id).to_dict()

    def summary(self, session_id: str) -> dict:
        return self.store.summary(session_id).to_dict()

    def events_text(self, session_id: str) -> str:
        return self.store.events_text(session_id)

    def clock(self) -> dict:
        from .clock import utc
        return {"now": utc(self.store.clock.now()).isoformat(),
                "simulated": self.store.simulated}

    def advance_clock(self, seconds: float) -> dict:
        self.store.advance_clock(seconds)
        return self.clock()


def _raise_for_error(response: httpx.Response):
    if response.status_code < 400:
        return
    try:
        body = response.json()
        message = body.get("message") or body.get("detail") or response.text
    except ValueError:
        message = response.text
    if response.status_code == 404:
        raise NotFoundError(message)
    if response.status_code == 409:
        raise StateError(message)
    raise InputError(message)


class HttpConsole:
    def __init__(self, base_url: str, client: Optional[httpx.Client] = None):
        self.base_url = base_url.rstrip("/")
        self.http = client or httpx.Client(base_url=self.base_url, timeout=30.0)

    def _post(self, path: str, payload: dict) -> dict:
        response = self.http.post(path, json=payload)
        _raise_for_error(response)
        return response.json()

    def _get(self, path: str):
        response = self.http.get(path)
        _raise_for_error(response)
        return response

    def start_session(self, payload: dict) -> dict:
        return self._post("/sessions", payload)

    def command(self, session_id: str, payload: dict) -> dict:
        return self._post(f"/sessions/{session_id}/commands", payload)

    def state(self, session_id: str) -> dict:
        return self._get(f"/sessions/{session_id}/state").json()

    def summary(self, session_id: str) -> dict:
        return self._get(f"/sessions/{session_id}/summary").json()

    def events_text(self, session_id: str) -> str:
        return self._get(f"/sessions/{session_id}/log").text

    def clock(self) -> dict:
        return self._get("/clock").json()

    def advance_clock(self, seconds: float) -> dict:
        return self._post("/clock/advance", {"seconds": seconds})
