"""Multi-radio resource management: scanning, access selection, handover trigger.

Each decision cycle scans the environment, narrows the result to the detected
access set (DAS) by policy, asks path selection for ratings, derives the
candidate and active sets (CAS / AAS) and decides whether to request a
handover. Link commands arriving from the handover orchestrator are relayed to
the environment, since only MRRM touches radio resources.

Handovers are serialized node-globally: completion primitives carry no flow id,
so at most one execution request is in flight at a time and flow setups that
arrive meanwhile queue up.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Mapping

from .core import (
    FE_FLOW_MANAGEMENT,
    FE_HOLM,
    FE_MRRM,
    FE_PATH_SELECTION,
    AccessFlowSetup,
    AccessFlowSetupResponse,
    AccessId,
    AccessSets,
    ConstraintRequest,
    ConstraintResponse,
    HandoverOccurred,
    HandoverOccurredResponse,
    HOComplete,
    HOExecutionRequest,
    LinkAttachRequest,
    LinkAttachResponse,
    LinkDetachRequest,
    LinkDetachResponse,
    LinkSwitchRequest,
    LinkSwitchResponse,
    QosSpec,
    Rating,
    Result,
    access_sort_key,
)
from .environment import Environment
from .simkernel import Kernel, SimEvent, TraceRecorder

ANNOTATION_ACCESS_SETS = "AccessSetsSnapshot"


@dataclass(frozen=True)
class MrrmPolicy:
    """Per-node access selection policy."""

    forbidden_networks: frozenset[str] = frozenset()
    min_radio_score: float = 0.0
    hysteresis: float = 0.1
    weight_radio: float = 0.5
    weight_path: float = 0.5
    mbb_capable: bool = True

    def __post_init__(self) -> None:
        if not 0.0 <= self.min_radio_score <= 1.0:
            raise ValueError("MrrmPolicy.min_radio_score must lie in [0, 1]")
        if self.hysteresis < 0.0:
            raise ValueError("MrrmPolicy.hysteresis must be >= 0")
        if self.weight_radio < 0.0 or self.weight_path < 0.0:
            raise ValueError("MrrmPolicy weights must be >= 0")
        if abs(self.weight_radio + self.weight_path - 1.0) > 1e-9:
            raise ValueError("MrrmPolicy weights must sum to 1")


def build_das(policy: MrrmPolicy, scan: list[tuple[AccessId, float]]) -> AccessSets:
    """Filter the scan into the detected access set by network ban and radio floor."""
    scanned = frozenset(access for access, _score in scan)
    das = frozenset(
        access
        for access, score in scan
        if access.network_id not in policy.forbidden_networks
        and score >= policy.min_radio_score
    )
    return AccessSets(scanned=scanned, das=das)


def merge_ratings(
    radio_scores: Mapping[AccessId, float], ratings: tuple[Rating, ...]
) -> tuple[Rating, ...]:
    """Fill the node-side radio score into path ratings received on the wire."""
    return tuple(
        Rating(
            access=r.access,
            path_score=r.path_score,
            radio_score=radio_scores.get(r.access, 0.0),
        )
        for r in ratings
    )


def select_cas_aas(
    policy: MrrmPolicy, das_sets: AccessSets, ratings: tuple[Rating, ...]
) -> tuple[AccessSets, dict[AccessId, float]]:
    """Derive CAS (usable paths) and AAS (best combined score) from the ratings.

    Ties on the combined score go to the lexicographically smallest
    (network_id, cell_id). Ratings must cover only DAS members.
    """
    for rating in ratings:
        if rating.access not in das_sets.das:
            raise ValueError(f"rating for access outside das: {rating.access.key}")
    combined = {
        r.access: policy.weight_radio * r.radio_score + policy.weight_path * r.path_score
        for r in ratings
    }
    cas = frozenset(r.access for r in ratings if r.path_score > 0.0)
    aas: frozenset[AccessId] = frozenset()
    if cas:
        best = min(cas, key=lambda a: (-combined[a],) + access_sort_key(a))
        aas = frozenset({best})
    return (
        AccessSets(scanned=das_sets.scanned, das=das_sets.das, cas=cas, aas=aas),
        combined,
    )


def decide_handover(
    policy: MrrmPolicy,
    prev_aas: AccessSets,
    new_aas: AccessSets,
    combined: Mapping[AccessId, float],
) -> AccessId | None:
    """Return the handover target, if any.

    A challenger wins only by beating the incumbent's combined score by more
    than the hysteresis margin, or when the incumbent dropped out of the DAS.
    """
    incumbent = prev_aas.active
    winner = new_aas.active
    if winner is None or winner == incumbent:
        return None
    if incumbent is None:
        return winner
    if incumbent not in new_aas.das:
        return winner
    if combined.get(winner, 0.0) > combined.get(incumbent, 0.0) + policy.hysteresis:
        return winner
    return None


def notify_flow_management(
    flow: int, previous: QosSpec | None, provided: QosSpec
) -> HandoverOccurred | None:
    """QoS-change indication; suppressed when the grant did not change."""
    if previous == provided:
        return None
    return HandoverOccurred(flow=flow, provided_qos=provided)


@dataclass
class _CycleState:
    flow: int
    establishing: bool
    sets: AccessSets
    radio: dict[AccessId, float]


@dataclass
class _PendingHandover:
    flow: int
    establishing: bool
    current: AccessId | None
    target: AccessId
    granted: QosSpec | None = None


class Mrrm:
    """The MRRM functional entity."""

    def __init__(
        self,
        kernel: Kernel,
        recorder: TraceRecorder,
        env: Environment,
        policy: MrrmPolicy,
        flow_table,
    ) -> None:
        self._kernel = kernel
        self._recorder = recorder
        self._env = env
        self.policy = policy
        self._table = flow_table
        self._cycles: deque[_CycleState] = deque()
        self._inflight: _PendingHandover | None = None
        self._deferred_setups: deque[AccessFlowSetup] = deque()

    # -- event handling -----------------------------------------------------------

    def handle(self, event: SimEvent) -> None:
        payload = event.payload
        match payload:
            case AccessFlowSetup():
                self._on_flow_setup(payload)
            case ConstraintResponse():
                self._on_constraints(payload)
            case HOComplete():
                self._on_ho_complete(payload)
            case LinkAttachRequest():
                self._relay_attach(payload)
            case LinkSwitchRequest():
                self._relay_switch(payload)
            case LinkDetachRequest():
                self._relay_detach(payload)
            case HandoverOccurredResponse():
                pass

    def tick(self) -> None:
        """Run one periodic decision cycle for every active flow."""
        for record in self._table.active_records():
            self._start_cycle(record.flow, establishing=False)

    # -- decision cycle -------------------------------------------------------------

    def _start_cycle(self, flow: int, establishing: bool) -> None:
        scan = self._env.scan(self._kernel.now)
        sets = build_das(self.policy, scan)
        self._cycles.append(
            _CycleState(
                flow=flow,
                establishing=establishing,
                sets=sets,
                radio={access: score for access, score in scan},
            )
        )
        candidates = tuple(sorted(sets.das, key=access_sort_key))
        self._send(FE_PATH_SELECTION, ConstraintRequest(flow=flow, candidates=candidates))

    def _on_flow_setup(self, setup: AccessFlowSetup) -> None:
        if self._inflight is not None:
            self._deferred_setups.append(setup)
            return
        self._start_cycle(setup.flow, establishing=True)

    def _on_constraints(self, response: ConstraintResponse) -> None:
        cycle = self._cycles.popleft()
        merged = merge_ratings(cycle.radio, response.ratings)
        sets, combined = select_cas_aas(self.policy, cycle.sets, merged)
        self._snapshot(cycle.flow, sets)
        record = self._table.get(cycle.flow)
        if cycle.establishing:
            self._finish_establishment_cycle(record, sets)
            return
        if self._inflight is not None or record is None or record.state != "active":
            return
        prev = AccessSets(
            scanned=sets.scanned,
            das=sets.das,
            cas=sets.cas,
            aas=frozenset({record.current_access} if record.current_access else ()),
        )
        target = decide_handover(self.policy, prev, sets, combined)
        if target is not None:
            self._emit_request(record, current=record.current_access, target=target,
                               establishing=False)

    def _finish_establishment_cycle(self, record, sets: AccessSets) -> None:
        if self._inflight is not None:
            # A handover started while this cycle was in flight; try again after it.
            self._deferred_setups.append(
                AccessFlowSetup(flow=record.flow, requested_qos=record.requested)
            )
            return
        target = sets.active
        if target is None:
            self._send(
                FE_FLOW_MANAGEMENT,
                AccessFlowSetupResponse(result=Result.failure("no_access"), granted_qos=None),
            )
            self._drain_deferred()
            return
        self._emit_request(record, current=None, target=target, establishing=True)

    def _emit_request(
        self, record, current: AccessId | None, target: AccessId, establishing: bool
    ) -> None:
        self._inflight = _PendingHandover(
            flow=record.flow, establishing=establishing, current=current, target=target
        )
        self._send(
            FE_HOLM,
            HOExecutionRequest(
                flow=record.flow,
                current=current,
                target=target,
                mbb_flag=self.policy.mbb_capable,
            ),
        )

    def _on_ho_complete(self, complete: HOComplete) -> None:
        pending = self._inflight
        if pending is None:
            return  # completion for a request this entity never issued
        self._inflight = None
        record = self._table.get(pending.flow)
        succeeded = complete.result.ok and pending.granted is not None
        if pending.establishing:
            if succeeded:
                record.current_access = pending.target
                record.granted_qos = pending.granted
                response = AccessFlowSetupResponse(
                    result=Result.success(), granted_qos=pending.granted
                )
            else:
                reason = complete.result.reason or "setup_failed"
                response = AccessFlowSetupResponse(
                    result=Result.failure(reason), granted_qos=None
                )
            self._send(FE_FLOW_MANAGEMENT, response)
        elif succeeded:
            previous = record.granted_qos
            record.current_access = pending.target
            record.granted_qos = pending.granted
            indication = notify_flow_management(pending.flow, previous, pending.granted)
            if indication is not None:
                self._send(FE_FLOW_MANAGEMENT, indication)
        self._drain_deferred()

    def _drain_deferred(self) -> None:
        if self._inflight is None and self._deferred_setups:
            setup = self._deferred_setups.popleft()
            self._start_cycle(setup.flow, establishing=True)

    # -- link command relay ------------------------------------------------------------

    def _relay_attach(self, request: LinkAttachRequest) -> None:
        def done(result: Result, granted: QosSpec | None) -> None:
            self._capture_grant(request.flow, result, granted)
            self._send(FE_HOLM, LinkAttachResponse(result=result, granted_qos=granted))

        self._env.link_attach(request.flow, request.target, request.requested_qos, done)

    def _relay_switch(self, request: LinkSwitchRequest) -> None:
        def attached(result: Result, granted: QosSpec | None) -> None:
            self._capture_grant(request.flow, result, granted)
            self._send(FE_HOLM, LinkSwitchResponse(result=result, granted_qos=granted))

        def detached(result: Result) -> None:
            if not result.ok:
                self._send(FE_HOLM, LinkSwitchResponse(result=result, granted_qos=None))
                return
            self._env.link_attach(request.flow, request.target, request.requested_qos, attached)

        self._env.link_detach(request.flow, request.current, detached)

    def _relay_detach(self, request: LinkDetachRequest) -> None:
        self._env.link_detach(
            request.flow,
            request.current,
            lambda result: self._send(FE_HOLM, LinkDetachResponse(result=result)),
        )

    def _capture_grant(self, flow: int, result: Result, granted: QosSpec | None) -> None:
        if result.ok and self._inflight is not None and self._inflight.flow == flow:
            self._inflight.granted = granted

    # -- helpers ---------------------------------------------------------------------

    def _snapshot(self, flow: int, sets: AccessSets) -> None:
        self._recorder.annotate(
            self._kernel.now,
            FE_MRRM,
            FE_MRRM,
            ANNOTATION_ACCESS_SETS,
            {
                "aas": sorted(a.key for a in sets.aas),
                "cas": sorted(a.key for a in sets.cas),
                "das": sorted(a.key for a in sets.das),
                "flow": flow,
                "scanned": sorted(a.key for a in sets.scanned),
            },
        )

    def _send(self, receiver: str, payload) -> None:
        self._kernel.schedule(0, FE_MRRM, receiver, payload)
