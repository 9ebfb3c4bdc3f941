"""Path selection: rates candidate accesses and allocates the new locator.

Ratings answer MRRM's constraint requests; locator selection answers HOLM's
PathSelect and defers to the environment for the actual allocation, proactively
(zero cost, FMIP-prepared targets only) or via ordinary locator configuration.
"""

from __future__ import annotations

from dataclasses import dataclass

from .core import (
    FE_HOLM,
    FE_MRRM,
    FE_PATH_SELECTION,
    AccessId,
    ConstraintRequest,
    ConstraintResponse,
    PathSelect,
    PathSelected,
    QosSpec,
    Rating,
    Result,
)
from .environment import Environment
from .simkernel import Kernel, SimEvent, TraceRecorder

ANNOTATION_UNKNOWN_ACCESS = "UnknownAccessRated"


@dataclass(frozen=True)
class PathModel:
    """Static end-to-end path descriptor behind one access."""

    bottleneck_bandwidth_kbps: int
    path_latency_ms: int
    policy_allowed: bool

    def __post_init__(self) -> None:
        if self.bottleneck_bandwidth_kbps < 0:
            raise ValueError("PathModel.bottleneck_bandwidth_kbps must be >= 0")
        if self.path_latency_ms < 0:
            raise ValueError("PathModel.path_latency_ms must be >= 0")


def rate_access(model: PathModel | None, requested: QosSpec) -> float:
    """Score one access's path in [0, 1]; 0 means unusable."""
    if model is None or not model.policy_allowed:
        return 0.0
    if model.path_latency_ms > requested.max_latency_ms:
        return 0.0
    if requested.bandwidth_kbps == 0:
        return 1.0
    return min(1.0, model.bottleneck_bandwidth_kbps / requested.bandwidth_kbps)


class PathSelection:
    """The PathSelect functional entity."""

    def __init__(
        self,
        kernel: Kernel,
        recorder: TraceRecorder,
        env: Environment,
        models: dict[AccessId, PathModel],
        flow_requested_qos,
        fmip_daemon,
    ) -> None:
        self._kernel = kernel
        self._recorder = recorder
        self._env = env
        self._models = dict(models)
        # callable flow -> QosSpec; the flow table lives with the simulation
        self._requested_qos = flow_requested_qos
        self._fmip = fmip_daemon

    def handle(self, event: SimEvent) -> None:
        payload = event.payload
        if isinstance(payload, ConstraintRequest):
            self._kernel.schedule(0, FE_PATH_SELECTION, FE_MRRM, self.rate_accesses(payload))
        elif isinstance(payload, PathSelect):
            self.select_path(payload)

    def rate_accesses(self, request: ConstraintRequest) -> ConstraintResponse:
        """Deterministically rate every candidate, preserving request order."""
        requested = self._requested_qos(request.flow)
        ratings = []
        unknown = []
        for access in request.candidates:
            model = self._models.get(access)
            if model is None:
                unknown.append(access.key)
            ratings.append(
                Rating(access=access, path_score=rate_access(model, requested), radio_score=0.0)
            )
        if unknown:
            self._recorder.annotate(
                self._kernel.now,
                FE_PATH_SELECTION,
                FE_PATH_SELECTION,
                ANNOTATION_UNKNOWN_ACCESS,
                {"accesses": sorted(unknown), "flow": request.flow},
            )
        return ConstraintResponse(ratings=tuple(ratings))

    def select_path(self, request: PathSelect) -> None:
        """Allocate the new locator for the selected target and answer HOLM."""
        if request.fmip_flag:
            if not self._env.cell(request.target).supports_fmip:
                self._respond_failure("fmip_unsupported")
                return
            if self._fmip.state(request.flow).prepared_for != request.target:
                self._respond_failure("not_prepared")
                return
            proactive = True
        else:
            if not self._env.attached(request.flow, request.target):
                self._respond_failure("not_attached")
                return
            proactive = False

        def allocated(result: Result, locator) -> None:
            self._kernel.schedule(
                0,
                FE_PATH_SELECTION,
                FE_HOLM,
                PathSelected(result=result, new_locator=locator),
            )

        self._env.allocate_locator(request.flow, request.target, proactive, allocated)

    def _respond_failure(self, reason: str) -> None:
        self._kernel.schedule(
            0,
            FE_PATH_SELECTION,
            FE_HOLM,
            PathSelected(result=Result.failure(reason), new_locator=None),
        )
