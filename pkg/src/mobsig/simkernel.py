"""Deterministic discrete-event kernel: clock, queue, event bus, trace recording.

Time is an integer microsecond count. Events are processed in (at, seq) order
where seq is a global insertion counter, so same-instant deliveries happen in
scheduling order and a run is fully reproducible.
"""

from __future__ import annotations

import heapq
import json
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable

from .core import Primitive, primitive_name

SimTime = int  # microseconds

TRACE_FIELDS = ("t", "from", "to", "msg", "params")


class ConfigurationError(RuntimeError):
    """Raised when the simulation is wired incorrectly (e.g. unknown receiver)."""


class SimulationError(RuntimeError):
    """Raised when an event handler fails; carries the offending delivery."""

    def __init__(self, message: str, event: "SimEvent | None" = None) -> None:
        super().__init__(message)
        self.event = event


@dataclass(frozen=True)
class SimEvent:
    """One scheduled delivery."""

    at: SimTime
    seq: int
    sender: str
    receiver: str
    payload: Any


@dataclass
class TraceRecord:
    """One timestamped message occurrence, as written to the JSON-Lines trace."""

    at: SimTime
    sender: str
    receiver: str
    name: str
    params: dict[str, Any]
    line: int | None = None  # 1-based source line when parsed from a file

    def to_json(self) -> str:
        obj = {
            "t": self.at,
            "from": self.sender,
            "to": self.receiver,
            "msg": self.name,
            "params": _sorted_params(self.params),
        }
        return json.dumps(obj, separators=(",", ":"))

    @classmethod
    def from_json(cls, line: str, lineno: int | None = None) -> "TraceRecord":
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ValueError(f"line {lineno}: not valid JSON: {exc}") from None
        if not isinstance(obj, dict) or set(obj) != set(TRACE_FIELDS):
            raise ValueError(f"line {lineno}: trace records need exactly fields {TRACE_FIELDS}")
        if not isinstance(obj["t"], int):
            raise ValueError(f"line {lineno}: field 't' must be an integer")
        if not isinstance(obj["params"], dict):
            raise ValueError(f"line {lineno}: field 'params' must be an object")
        return cls(
            at=obj["t"],
            sender=obj["from"],
            receiver=obj["to"],
            name=obj["msg"],
            params=obj["params"],
            line=lineno,
        )


def _sorted_params(value: Any) -> Any:
    """Canonicalize params: dict keys sorted recursively, lists kept in order."""
    if isinstance(value, dict):
        return {key: _sorted_params(value[key]) for key in sorted(value)}
    if isinstance(value, list):
        return [_sorted_params(v) for v in value]
    return value


class TraceRecorder:
    """Collects TraceRecords in delivery order and serializes them."""

    def __init__(self) -> None:
        self.records: list[TraceRecord] = []

    def on_delivery(self, event: SimEvent) -> None:
        self.records.append(
            TraceRecord(
                at=event.at,
                sender=event.sender,
                receiver=event.receiver,
                name=primitive_name(event.payload),
                params=event.payload.params(),
            )
        )

    def annotate(
        self, at: SimTime, sender: str, receiver: str, name: str, params: dict[str, Any]
    ) -> None:
        """Append a non-primitive annotation record (set snapshots, link state)."""
        self.records.append(
            TraceRecord(at=at, sender=sender, receiver=receiver, name=name, params=params)
        )

    def lines(self) -> list[str]:
        return [record.to_json() for record in self.records]

    def write(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for line in self.lines():
                fh.write(line + "\n")


@dataclass
class _Call:
    """Internal deferred function call; executes at delivery, never traced."""

    fn: Callable[[], None]


@dataclass
class Subscription:
    """Cancellable handle for an observer registration."""

    _observers: list
    _entry: tuple = field(repr=False, default=())

    def cancel(self) -> None:
        if self._entry in self._observers:
            self._observers.remove(self._entry)


class Kernel:
    """Event queue plus the FE registry; owns the clock."""

    def __init__(self, recorder: TraceRecorder | None = None) -> None:
        self._now: SimTime = 0
        self._seq = 0
        self._queue: list[tuple[SimTime, int, SimEvent]] = []
        self._handlers: dict[str, Callable[[SimEvent], None]] = {}
        self._observers: list[tuple[Callable[[SimEvent], None], Callable[[str], bool]]] = []
        self.recorder = recorder
        if recorder is not None:
            self._observers.append((recorder.on_delivery, lambda _name: True))

    @property
    def now(self) -> SimTime:
        return self._now

    def register(self, fe_id: str, handler: Callable[[SimEvent], None]) -> None:
        self._handlers[fe_id] = handler

    def schedule(self, delay_us: int, sender: str, receiver: str, payload: Any) -> None:
        """Queue a delivery at now + delay_us; same-time events keep FIFO order."""
        if delay_us < 0:
            raise ConfigurationError(f"negative delay: {delay_us}")
        if receiver not in self._handlers:
            raise ConfigurationError(f"unknown receiver FE: {receiver!r}")
        self._seq += 1
        event = SimEvent(
            at=self._now + delay_us,
            seq=self._seq,
            sender=sender,
            receiver=receiver,
            payload=payload,
        )
        heapq.heappush(self._queue, (event.at, event.seq, event))

    def call_later(self, delay_us: int, fn: Callable[[], None], owner: str) -> None:
        """Schedule an internal (untraced) call attributed to an FE."""
        self.schedule(delay_us, owner, owner, _Call(fn))

    def subscribe(self, fe_id: str, name_filter: Callable[[str], bool]) -> Subscription:
        """Deliver copies of matching primitives addressed to other FEs to fe_id."""
        if fe_id not in self._handlers:
            raise ConfigurationError(f"unknown subscriber FE: {fe_id!r}")

        def observer(event: SimEvent) -> None:
            if event.receiver != fe_id:
                self._handlers[fe_id](event)

        entry = (observer, name_filter)
        self._observers.append(entry)
        return Subscription(self._observers, entry)

    def run_until_quiescent(self, limit_us: SimTime | None = None) -> SimTime:
        """Process events in (at, seq) order until the queue drains.

        Returns the time of the last processed event (0 if none). With a limit,
        events after it stay queued and the limit itself is returned.
        """
        last: SimTime = 0
        while self._queue:
            at, _seq, event = self._queue[0]
            if limit_us is not None and at > limit_us:
                self._now = max(self._now, limit_us)
                return limit_us
            heapq.heappop(self._queue)
            self._now = at
            self._dispatch(event)
            last = at
        return last

    def _dispatch(self, event: SimEvent) -> None:
        try:
            if isinstance(event.payload, _Call):
                event.payload.fn()
                return
            name = primitive_name(event.payload)
            for observer, name_filter in self._observers:
                if name_filter(name):
                    observer(event)
            self._handlers[event.receiver](event)
        except SimulationError:
            raise
        except Exception as exc:
            raise SimulationError(
                f"handler failed at t={event.at} for "
                f"{event.sender}->{event.receiver} {type(event.payload).__name__}: {exc}",
                event=event,
            ) from exc
