"""Simulated radio environment: cell geometry, terminal motion, link layer.

The environment is the ground truth for coverage, attachment state and locator
validity. Link operations complete asynchronously after the per-cell latencies
and report back through callbacks; completed transitions additionally leave
LinkUp / LinkDown annotation records in the trace.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Callable

from .core import FE_ENVIRONMENT, AccessId, Locator, QosSpec, Result
from .simkernel import Kernel, SimTime, TraceRecorder

ANNOTATION_LINK_UP = "LinkUp"
ANNOTATION_LINK_DOWN = "LinkDown"


@dataclass(frozen=True)
class Cell:
    """Static description of one attachable cell."""

    access: AccessId
    center_xy: tuple[float, float]
    radius_m: float
    link_setup_us: int
    link_teardown_us: int
    locator_config_us: int
    supports_fmip: bool
    capacity_qos: QosSpec

    def __post_init__(self) -> None:
        if self.radius_m <= 0:
            raise ValueError("Cell.radius_m must be > 0")
        for name in ("link_setup_us", "link_teardown_us", "locator_config_us"):
            if getattr(self, name) < 0:
                raise ValueError(f"Cell.{name} must be >= 0")


@dataclass(frozen=True)
class Trajectory:
    """Piecewise-linear terminal path; clamps to the end points outside it."""

    waypoints: tuple[tuple[SimTime, tuple[float, float]], ...]

    def __post_init__(self) -> None:
        if not self.waypoints:
            raise ValueError("Trajectory needs at least one waypoint")
        times = [t for t, _ in self.waypoints]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("Trajectory waypoint times must be strictly increasing")

    @property
    def end_time_us(self) -> SimTime:
        return self.waypoints[-1][0]

    def position(self, at_us: SimTime) -> tuple[float, float]:
        points = self.waypoints
        if at_us <= points[0][0]:
            return points[0][1]
        if at_us >= points[-1][0]:
            return points[-1][1]
        for (t0, p0), (t1, p1) in zip(points, points[1:]):
            if t0 <= at_us <= t1:
                frac = (at_us - t0) / (t1 - t0)
                return (p0[0] + frac * (p1[0] - p0[0]), p0[1] + frac * (p1[1] - p0[1]))
        raise AssertionError("unreachable: waypoints cover the clamped range")


def clamp_qos(requested: QosSpec, capacity: QosSpec) -> QosSpec:
    """Grant rule: bandwidth capped by capacity, latency floored by capacity."""
    return QosSpec(
        bandwidth_kbps=min(requested.bandwidth_kbps, capacity.bandwidth_kbps),
        max_latency_ms=max(requested.max_latency_ms, capacity.max_latency_ms),
    )


@dataclass
class _LocatorState:
    access: AccessId
    proactive_pending: bool


class Environment:
    """Owns radio coverage, per-(flow, access) attachment and locator lifecycle."""

    def __init__(
        self,
        kernel: Kernel,
        recorder: TraceRecorder,
        cells: tuple[Cell, ...],
        trajectory: Trajectory,
        rng: random.Random | None = None,
        jitter_us: int = 0,
    ) -> None:
        self._kernel = kernel
        self._recorder = recorder
        self._cells = {cell.access: cell for cell in cells}
        if len(self._cells) != len(cells):
            raise ValueError("duplicate AccessId among cells")
        self._scan_order = sorted(self._cells, key=lambda a: a.cell_id)
        self.trajectory = trajectory
        self._rng = rng
        self._jitter_us = jitter_us
        self._attached: set[tuple[int, AccessId]] = set()
        self._locators: dict[str, _LocatorState] = {}
        self._locator_counter = 0

    # -- wiring ---------------------------------------------------------------

    def handle(self, event) -> None:
        """Network-side sink; daemon traffic addressed to Env needs no reaction."""

    def _latency(self, base_us: int) -> int:
        if self._jitter_us and self._rng is not None:
            return base_us + self._rng.randint(0, self._jitter_us)
        return base_us

    def _later(self, delay_us: int, fn: Callable[[], None]) -> None:
        self._kernel.call_later(delay_us, fn, owner=FE_ENVIRONMENT)

    # -- queries ---------------------------------------------------------------

    def cell(self, access: AccessId) -> Cell:
        try:
            return self._cells[access]
        except KeyError:
            raise ValueError(f"unknown access: {access.key}") from None

    def scan(self, at_us: SimTime) -> list[tuple[AccessId, float]]:
        """Accesses in range at at_us with linear radio score, sorted by cell_id."""
        x, y = self.trajectory.position(at_us)
        found: list[tuple[AccessId, float]] = []
        for access in self._scan_order:
            cell = self._cells[access]
            distance = math.hypot(x - cell.center_xy[0], y - cell.center_xy[1])
            if distance <= cell.radius_m:
                found.append((access, 1.0 - distance / cell.radius_m))
        return found

    def in_range(self, access: AccessId, at_us: SimTime) -> bool:
        cell = self.cell(access)
        x, y = self.trajectory.position(at_us)
        return math.hypot(x - cell.center_xy[0], y - cell.center_xy[1]) <= cell.radius_m

    def attached(self, flow: int, access: AccessId) -> bool:
        return (flow, access) in self._attached

    def locator_valid(self, locator: Locator) -> bool:
        state = self._locators.get(locator.address)
        if state is None:
            return False
        return state.proactive_pending or any(
            access == state.access for (_flow, access) in self._attached
        )

    # -- link operations ---------------------------------------------------------

    def link_attach(
        self,
        flow: int,
        target: AccessId,
        requested: QosSpec,
        done: Callable[[Result, QosSpec | None], None],
    ) -> None:
        """Attach flow to target; grants clamped QoS after link_setup_us."""
        cell = self.cell(target)
        if self.attached(flow, target):
            self._later(0, lambda: done(Result.failure("already_attached"), None))
            return
        if not self.in_range(target, self._kernel.now):
            delay = self._latency(cell.link_setup_us)
            self._later(delay, lambda: done(Result.failure("out_of_coverage"), None))
            return
        granted = clamp_qos(requested, cell.capacity_qos)

        def complete() -> None:
            self._attached.add((flow, target))
            for state in self._locators.values():
                if state.access == target:
                    state.proactive_pending = False
            self._recorder.annotate(
                self._kernel.now,
                FE_ENVIRONMENT,
                FE_ENVIRONMENT,
                ANNOTATION_LINK_UP,
                {
                    "access": target.key,
                    "flow": flow,
                    "granted_qos": {
                        "bandwidth_kbps": granted.bandwidth_kbps,
                        "max_latency_ms": granted.max_latency_ms,
                    },
                },
            )
            done(Result.success(), granted)

        self._later(self._latency(cell.link_setup_us), complete)

    def link_detach(
        self, flow: int, current: AccessId, done: Callable[[Result], None]
    ) -> None:
        """Detach flow from current; locators on it become invalid."""
        cell = self.cell(current)
        if not self.attached(flow, current):
            self._later(0, lambda: done(Result.failure("not_attached")))
            return

        def complete() -> None:
            self._attached.discard((flow, current))
            if not any(access == current for (_f, access) in self._attached):
                for address in [
                    addr
                    for addr, state in self._locators.items()
                    if state.access == current and not state.proactive_pending
                ]:
                    del self._locators[address]
            self._recorder.annotate(
                self._kernel.now,
                FE_ENVIRONMENT,
                FE_ENVIRONMENT,
                ANNOTATION_LINK_DOWN,
                {"access": current.key, "flow": flow},
            )
            done(Result.success())

        self._later(self._latency(cell.link_teardown_us), complete)

    def allocate_locator(
        self,
        flow: int,
        access: AccessId,
        proactive: bool,
        done: Callable[[Result, Locator | None], None],
    ) -> None:
        """Allocate a fresh care-of locator on access.

        Ordinary allocation needs an attached link and costs locator_config_us;
        proactive allocation needs FMIP support and completes immediately.
        """
        cell = self.cell(access)
        if proactive:
            if not cell.supports_fmip:
                self._later(0, lambda: done(Result.failure("fmip_unsupported"), None))
                return
            delay = 0
        else:
            if not self.attached(flow, access):
                self._later(0, lambda: done(Result.failure("not_attached"), None))
                return
            delay = self._latency(cell.locator_config_us)

        def complete() -> None:
            self._locator_counter += 1
            address = f"{access.network_id}/{access.cell_id}/{self._locator_counter}"
            pending = proactive and not self.attached(flow, access)
            self._locators[address] = _LocatorState(access=access, proactive_pending=pending)
            done(Result.success(), Locator(address=address, access=access, kind="care_of"))

        self._later(delay, complete)
