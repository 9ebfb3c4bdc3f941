"""Flow management: the application-facing registry of data flows.

Flow management asks for access on behalf of each flow and is told, after the
fact, when a handover changed the QoS actually provided. It never sees link or
binding messages; everything below the flow setup service boundary is handled
by the resource-management entity.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from .core import (
    FE_FLOW_MANAGEMENT,
    FE_MRRM,
    AccessFlowSetup,
    AccessFlowSetupResponse,
    AccessId,
    HandoverOccurred,
    HandoverOccurredResponse,
    QosSpec,
    Result,
)
from .simkernel import Kernel, SimEvent

FLOW_STATES = ("new", "pending", "active", "failed")


@dataclass
class FlowRecord:
    """Mutable bookkeeping for one data flow."""

    flow: int
    requested: QosSpec
    start_us: int = 0
    state: str = "new"
    current_access: AccessId | None = None
    granted_qos: QosSpec | None = None
    provided_qos: QosSpec | None = None

    def __post_init__(self) -> None:
        if self.flow < 0:
            raise ValueError("flow id must be non-negative")
        if self.state not in FLOW_STATES:
            raise ValueError(f"unknown flow state {self.state!r}")


class FlowTable:
    """Shared flow registry, keyed by flow id."""

    def __init__(self, records: list[FlowRecord] | None = None) -> None:
        self._records: dict[int, FlowRecord] = {}
        for record in records or ():
            self.add(record)

    def add(self, record: FlowRecord) -> None:
        if record.flow in self._records:
            raise ValueError(f"duplicate flow id {record.flow}")
        self._records[record.flow] = record

    def get(self, flow: int) -> FlowRecord | None:
        return self._records.get(flow)

    def records(self) -> list[FlowRecord]:
        return [self._records[flow] for flow in sorted(self._records)]

    def active_records(self) -> list[FlowRecord]:
        return [r for r in self.records() if r.state == "active"]


class FlowManagement:
    """The flow-management functional entity."""

    def __init__(self, kernel: Kernel, flow_table: FlowTable) -> None:
        self._kernel = kernel
        self._table = flow_table
        # Setup responses carry no flow id; requests are answered in order.
        self._pending_setups: deque[int] = deque()

    def start_flow(self, flow: int) -> None:
        record = self._table.get(flow)
        if record is None:
            raise KeyError(f"unknown flow {flow}")
        if record.state != "new":
            raise ValueError(f"flow {flow} already started")
        record.state = "pending"
        self._pending_setups.append(flow)
        self._send(
            FE_MRRM, AccessFlowSetup(flow=flow, requested_qos=record.requested)
        )

    def handle(self, event: SimEvent) -> None:
        payload = event.payload
        match payload:
            case AccessFlowSetupResponse():
                self._on_setup_response(payload)
            case HandoverOccurred():
                self._on_handover_occurred(payload)

    def _on_setup_response(self, response: AccessFlowSetupResponse) -> None:
        if not self._pending_setups:
            return  # answer without a question; nothing to update
        flow = self._pending_setups.popleft()
        record = self._table.get(flow)
        assert record is not None
        if response.result.ok:
            record.state = "active"
            record.granted_qos = response.granted_qos
            record.provided_qos = response.granted_qos
        else:
            record.state = "failed"

    def _on_handover_occurred(self, indication: HandoverOccurred) -> None:
        record = self._table.get(indication.flow)
        if record is None:
            result = Result.failure("unknown_flow")
        else:
            record.provided_qos = indication.provided_qos
            result = Result.success()
        self._send(FE_MRRM, HandoverOccurredResponse(result=result))

    def _send(self, receiver: str, payload) -> None:
        self._kernel.schedule(0, FE_FLOW_MANAGEMENT, receiver, payload)
