"""Shared builders for the unit tests: cells, trajectories, and a wired node."""

from __future__ import annotations

import random

from mobsig.core import (
    FE_DAEMON,
    FE_ENVIRONMENT,
    FE_FLOW_MANAGEMENT,
    FE_HOLM,
    FE_MRRM,
    FE_PATH_SELECTION,
    AccessId,
    QosSpec,
)
from mobsig.environment import Cell, Environment, Trajectory
from mobsig.flowmgmt import FlowManagement, FlowRecord, FlowTable
from mobsig.holm import Holm
from mobsig.mrrm import Mrrm, MrrmPolicy
from mobsig.path_selection import PathModel, PathSelection
from mobsig.protocols import DaemonHost
from mobsig.simkernel import Kernel, TraceRecorder

REQUESTED = QosSpec(bandwidth_kbps=1000, max_latency_ms=80)


def make_cell(
    cell_id: str = "cell-a",
    network_id: str = "net-1",
    rat: str = "wlan",
    center: tuple[float, float] = (0.0, 0.0),
    radius_m: float = 600.0,
    setup_us: int = 50_000,
    teardown_us: int = 10_000,
    locator_us: int = 100_000,
    supports_fmip: bool = False,
    capacity: tuple[int, int] = (2000, 40),
) -> Cell:
    return Cell(
        access=AccessId(cell_id=cell_id, network_id=network_id, rat=rat),
        center_xy=center,
        radius_m=radius_m,
        link_setup_us=setup_us,
        link_teardown_us=teardown_us,
        locator_config_us=locator_us,
        supports_fmip=supports_fmip,
        capacity_qos=QosSpec(*capacity),
    )


def still_trajectory(xy: tuple[float, float] = (0.0, 0.0)) -> Trajectory:
    return Trajectory(waypoints=((0, xy),))


def default_model() -> PathModel:
    return PathModel(bottleneck_bandwidth_kbps=2000, path_latency_ms=40, policy_allowed=True)


class Node:
    """A fully wired single node, without the periodic scan cycle.

    Tests drive it by scheduling primitives or calling entity methods, then
    running the kernel; latencies follow the defaults in make_cell plus a
    40 ms binding RTT and 5 ms FMIP one-way delay.
    """

    def __init__(
        self,
        cells: tuple[Cell, ...] | None = None,
        policy: MrrmPolicy | None = None,
        flows: tuple[FlowRecord, ...] | None = None,
        trajectory: Trajectory | None = None,
        path_models: dict[AccessId, PathModel] | None = None,
        binding_rtt_us: int = 40_000,
        fmip_oneway_us: int = 5_000,
        rng: random.Random | None = None,
        jitter_us: int = 0,
    ) -> None:
        if cells is None:
            cells = (make_cell(), make_cell(cell_id="cell-b", network_id="net-2", rat="cellular"))
        if flows is None:
            flows = (FlowRecord(flow=1, requested=REQUESTED),)
        if path_models is None:
            path_models = {cell.access: default_model() for cell in cells}
        self.recorder = TraceRecorder()
        self.kernel = Kernel(recorder=self.recorder)
        self.env = Environment(
            self.kernel,
            self.recorder,
            cells,
            trajectory or still_trajectory(),
            rng=rng,
            jitter_us=jitter_us,
        )
        self.table = FlowTable(list(flows))
        self.daemons = DaemonHost(
            self.kernel, self.env, binding_rtt_us, fmip_oneway_us, rng=rng, jitter_us=jitter_us
        )
        self.holm = Holm(self.kernel, self.env, self.daemons, self.table)
        self.path_selection = PathSelection(
            self.kernel,
            self.recorder,
            self.env,
            path_models,
            lambda flow: self.table.get(flow).requested,
            self.daemons.fmip,
        )
        self.flow_management = FlowManagement(self.kernel, self.table)
        self.mrrm = Mrrm(
            self.kernel, self.recorder, self.env, policy or MrrmPolicy(), self.table
        )
        self.kernel.register(FE_MRRM, self.mrrm.handle)
        self.kernel.register(FE_HOLM, self.holm.handle)
        self.kernel.register(FE_PATH_SELECTION, self.path_selection.handle)
        self.kernel.register(FE_FLOW_MANAGEMENT, self.flow_management.handle)
        self.kernel.register(FE_ENVIRONMENT, self.env.handle)
        self.kernel.register(FE_DAEMON, self.daemons.handle)

    def run(self, limit_us: int | None = None) -> int:
        return self.kernel.run_until_quiescent(limit_us)

    def attach_now(self, flow: int, access: AccessId) -> None:
        """Bring a link up synchronously (runs the kernel)."""
        outcome: list = []
        self.env.link_attach(
            flow, access, self.table.get(flow).requested, lambda r, q: outcome.append(r)
        )
        self.run()
        assert outcome and outcome[0].ok, f"attach failed: {outcome}"

    def names(self, sequence_only: bool = False) -> list[str]:
        names = [record.name for record in self.recorder.records]
        if sequence_only:
            from mobsig.conformance import SEQUENCE_NAMES

            names = [n for n in names if n in SEQUENCE_NAMES]
        return names
