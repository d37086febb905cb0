"""Protocol event records and their newline-delimited JSON wire form.

The event log is the source of truth for a session: one JSON object per
line, strictly increasing ``seq``, canonical key order and separators so a
replayed and re-serialized log is byte-identical to the original.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from datetime import datetime
from typing import Iterable, Iterator

from .clock import utc
from .errors import IntegrityError

SESSION_STARTED = "session_started"
ENV_RECORDED = "env_recorded"
CAPTURE_RECORDED = "capture_recorded"
PHASE_ADVANCED = "phase_advanced"
NOTE_ADDED = "note_added"
SESSION_ABORTED = "session_aborted"


@dataclass(frozen=True)
class Event:
    seq: int
    time: datetime
    type: str
    payload: dict


def event_to_line(event: Event) -> str:
    record = {
        "payload": event.payload,
        "seq": event.seq,
        "time": utc(event.time).isoformat(),
        "type": event.type,
    }
    return json.dumps(record, sort_keys=True, separators=(",", ":"))


def event_from_line(line: str) -> Event:
    try:
        record = json.loads(line)
        return Event(
            seq=int(record["seq"]),
            time=datetime.fromisoformat(record["time"]),
            type=str(record["type"]),
            payload=record["payload"],
        )
    except (KeyError, ValueError, TypeError) as exc:
        raise IntegrityError(f"malformed event record: {exc}") from exc


def dump_log(events: Iterable[Event]) -> str:
    return "".join(event_to_line(e) + "\n" for e in events)


def parse_log(text: str) -> Iterator[Event]:
    previous = 0
    for line in text.splitlines():
        if not line.strip():
            continue
        event = event_from_line(line)
        if event.seq != previous + 1:
            raise IntegrityError(
                f"event log sequence gap: expected {previous + 1}, got {event.seq}")
        previous = event.seq
        yield event
