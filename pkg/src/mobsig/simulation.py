"""Scenario execution: entity wiring, the periodic scan cycle, and metrics.

`Simulation` connects the six functional entities to one event kernel, drives
the resource manager's decision cycle at the configured scan period, starts
each flow at its configured time, and runs the kernel until no work remains.
The result bundles the recorded trace, the completed handover contexts, and a
JSON-ready metrics report.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from functools import partial

from .conformance import SEQUENCE_NAMES
from .core import (
    FE_DAEMON,
    FE_ENVIRONMENT,
    FE_FLOW_MANAGEMENT,
    FE_HOLM,
    FE_MRRM,
    FE_PATH_SELECTION,
    QosSpec,
)
from .environment import Environment
from .flowmgmt import FlowManagement, FlowRecord, FlowTable
from .holm import HandoverContext, Holm, Phase, interruption_time
from .mrrm import Mrrm
from .path_selection import PathSelection
from .protocols import DaemonHost
from .scenario import ScenarioConfig
from .simkernel import Kernel, SimTime, TraceRecord, TraceRecorder


@dataclass
class SimulationResult:
    records: list[TraceRecord]
    contexts: list[HandoverContext]
    metrics: dict
    final_time_us: SimTime


class Simulation:
    """One fully wired scenario run."""

    def __init__(self, config: ScenarioConfig) -> None:
        self.config = config
        self.recorder = TraceRecorder()
        self.kernel = Kernel(recorder=self.recorder)
        rng = random.Random(config.seed)
        self.environment = Environment(
            self.kernel,
            self.recorder,
            config.cells,
            config.trajectory,
            rng=rng,
            jitter_us=config.jitter_us,
        )
        self.flow_table = FlowTable(
            [
                FlowRecord(flow=spec.flow, requested=spec.requested, start_us=spec.start_us)
                for spec in config.flows
            ]
        )
        self.daemons = DaemonHost(
            self.kernel,
            self.environment,
            config.binding_rtt_us,
            config.fmip_oneway_us,
            rng=rng,
            jitter_us=config.jitter_us,
        )
        self.holm = Holm(self.kernel, self.environment, self.daemons, self.flow_table)
        self.path_selection = PathSelection(
            self.kernel,
            self.recorder,
            self.environment,
            config.path_models,
            self._requested_qos,
            self.daemons.fmip,
        )
        self.flow_management = FlowManagement(self.kernel, self.flow_table)
        self.mrrm = Mrrm(
            self.kernel, self.recorder, self.environment, config.policy, self.flow_table
        )

        self.kernel.register(FE_MRRM, self.mrrm.handle)
        self.kernel.register(FE_HOLM, self.holm.handle)
        self.kernel.register(FE_PATH_SELECTION, self.path_selection.handle)
        self.kernel.register(FE_FLOW_MANAGEMENT, self.flow_management.handle)
        self.kernel.register(FE_ENVIRONMENT, self.environment.handle)
        self.kernel.register(FE_DAEMON, self.daemons.handle)

        self._horizon = config.trajectory.end_time_us
        for spec in config.flows:
            self._horizon = max(self._horizon, spec.start_us)
        self.kernel.call_later(0, self._tick, FE_MRRM)
        for spec in config.flows:
            self.kernel.call_later(
                spec.start_us, partial(self.flow_management.start_flow, spec.flow),
                FE_FLOW_MANAGEMENT,
            )

    def _requested_qos(self, flow: int) -> QosSpec:
        record = self.flow_table.get(flow)
        if record is None:
            raise KeyError(f"unknown flow {flow}")
        return record.requested

    def _tick(self) -> None:
        self.mrrm.tick()
        if self.kernel.now + self.config.scan_period_us <= self._horizon:
            self.kernel.call_later(self.config.scan_period_us, self._tick, FE_MRRM)

    def run(self, limit_us: SimTime | None = None) -> SimulationResult:
        final = self.kernel.run_until_quiescent(limit_us)
        return SimulationResult(
            records=list(self.recorder.records),
            contexts=list(self.holm.completed),
            metrics=build_metrics(self.recorder.records, self.holm.completed),
            final_time_us=final,
        )


def run_scenario(config: ScenarioConfig, limit_us: SimTime | None = None) -> SimulationResult:
    return Simulation(config).run(limit_us=limit_us)


def build_metrics(records: list[TraceRecord], contexts: list[HandoverContext]) -> dict:
    """Summarize completed handovers from the trace and orchestration records.

    Each handover spans its HOExecutionRequest up to the next request in the
    trace (handovers on one node never overlap); the message count covers the
    signaling-sequence records inside that span.
    """
    request_indices = [
        i for i, record in enumerate(records) if record.name == "HOExecutionRequest"
    ]
    used: set[int] = set()
    handovers = []
    totals_by_variant: dict[str, int] = {}
    succeeded = failed = 0
    total_interruption = 0
    max_interruption = 0

    for ctx in contexts:
        span_start = next(
            (
                i
                for i in request_indices
                if i not in used
                and records[i].params["flow"] == ctx.flow
                and records[i].at == ctx.t_start
            ),
            None,
        )
        message_count = 0
        if span_start is not None:
            used.add(span_start)
            span_end = next((i for i in request_indices if i > span_start), len(records))
            message_count = sum(
                1 for r in records[span_start:span_end] if r.name in SEQUENCE_NAMES
            )
        entry = {
            "flow": ctx.flow,
            "variant": ctx.variant,
            "t_request_us": ctx.t_start,
            "interruption_us": None,
            "message_count": message_count,
            "result": "success" if ctx.phase is Phase.DONE else "failure",
        }
        if ctx.phase is Phase.DONE:
            gap = interruption_time(ctx)
            entry["interruption_us"] = gap
            succeeded += 1
            total_interruption += gap
            max_interruption = max(max_interruption, gap)
        else:
            entry["reason"] = ctx.failure_reason
            failed += 1
        totals_by_variant[ctx.variant] = totals_by_variant.get(ctx.variant, 0) + 1
        handovers.append(entry)

    return {
        "handovers": handovers,
        "totals": {
            "count": len(handovers),
            "succeeded": succeeded,
            "failed": failed,
            "by_variant": dict(sorted(totals_by_variant.items())),
            "total_interruption_us": total_interruption,
            "max_interruption_us": max_interruption,
        },
    }
