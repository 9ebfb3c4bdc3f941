"""Domain value types and the primitive vocabulary shared by all functional entities.

Everything defined here is immutable. The primitive classes map one-to-one onto
the signaling messages exchanged between the functional entities; a primitive's
trace name is its class name, and its trace parameters are produced by
``Primitive.params()`` / restored by ``primitive_from_params()``.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Any, Callable

# Functional-entity identifiers, used for event attribution and diagram columns.
FE_MRRM = "MRRM"
FE_HOLM = "HOLM"
FE_PATH_SELECTION = "PathSelect"
FE_FLOW_MANAGEMENT = "FlowMng"
FE_ENVIRONMENT = "Env"
FE_DAEMON = "Daemon"

FUNCTIONAL_ENTITIES = (
    FE_MRRM,
    FE_HOLM,
    FE_PATH_SELECTION,
    FE_FLOW_MANAGEMENT,
    FE_ENVIRONMENT,
    FE_DAEMON,
)

# Flow identifiers are plain non-negative ints, unique per scenario.
FlowId = int

LOCATOR_KINDS = ("local", "home", "care_of")


@dataclass(frozen=True)
class AccessId:
    """One attachable radio access: a cell within an access network."""

    cell_id: str
    network_id: str
    rat: str

    def __post_init__(self) -> None:
        if not self.cell_id:
            raise ValueError("AccessId.cell_id must be non-empty")
        if not self.network_id:
            raise ValueError("AccessId.network_id must be non-empty")

    @property
    def key(self) -> str:
        return f"{self.network_id}/{self.cell_id}"


def access_sort_key(access: AccessId) -> tuple[str, str]:
    """Canonical ordering for accesses: lexicographic (network_id, cell_id)."""
    return (access.network_id, access.cell_id)


@dataclass(frozen=True)
class QosSpec:
    """Bandwidth / latency requirement or grant for one flow."""

    bandwidth_kbps: int
    max_latency_ms: int

    def __post_init__(self) -> None:
        if self.bandwidth_kbps < 0:
            raise ValueError("QosSpec.bandwidth_kbps must be >= 0")
        if self.max_latency_ms < 0:
            raise ValueError("QosSpec.max_latency_ms must be >= 0")


def qos_satisfies(granted: QosSpec, requested: QosSpec) -> bool:
    """True iff the grant meets the request in both dimensions."""
    return (
        granted.bandwidth_kbps >= requested.bandwidth_kbps
        and granted.max_latency_ms <= requested.max_latency_ms
    )


@dataclass(frozen=True)
class Locator:
    """A routable address bound to one access.

    A locator is usable only while its access is attached, or while it is a
    proactively allocated care-of locator that has not been consumed yet; the
    environment tracks that lifecycle.
    """

    address: str
    access: AccessId
    kind: str

    def __post_init__(self) -> None:
        if not self.address:
            raise ValueError("Locator.address must be non-empty")
        if self.kind not in LOCATOR_KINDS:
            raise ValueError(f"Locator.kind must be one of {LOCATOR_KINDS}")


@dataclass(frozen=True)
class Rating:
    """Path and radio scores for one candidate access.

    Only the path score travels in ConstraintResponse; the radio score is
    filled in by MRRM from its own scan before access selection.
    """

    access: AccessId
    path_score: float
    radio_score: float

    def __post_init__(self) -> None:
        for name in ("path_score", "radio_score"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"Rating.{name} must lie in [0, 1], got {value!r}")


@dataclass(frozen=True)
class AccessSets:
    """Nested access sets for one flow: aas <= cas <= das <= scanned."""

    scanned: frozenset[AccessId]
    das: frozenset[AccessId]
    cas: frozenset[AccessId] = frozenset()
    aas: frozenset[AccessId] = frozenset()

    def __post_init__(self) -> None:
        if len(self.aas) > 1:
            raise ValueError("AccessSets.aas holds at most one access")

    def is_nested(self) -> bool:
        return self.aas <= self.cas <= self.das <= self.scanned

    @property
    def active(self) -> AccessId | None:
        for access in self.aas:
            return access
        return None


@dataclass(frozen=True)
class Result:
    """Outcome of a request: success, or failure with a mandatory reason."""

    ok: bool
    reason: str | None = None

    def __post_init__(self) -> None:
        if self.ok and self.reason is not None:
            raise ValueError("a success Result carries no reason")
        if not self.ok and not self.reason:
            raise ValueError("a failure Result needs a non-empty reason")

    @classmethod
    def success(cls) -> "Result":
        return cls(True)

    @classmethod
    def failure(cls, reason: str) -> "Result":
        return cls(False, reason)


# --------------------------------------------------------------------------
# Parameter rendering. Each primitive field has one codec keyed by field
# name; params() concatenates the rendered fragments with sorted keys so a
# given primitive always renders to the same JSON object.
# --------------------------------------------------------------------------


def _render_access(access: AccessId) -> dict[str, Any]:
    return {"cell_id": access.cell_id, "network_id": access.network_id, "rat": access.rat}


def _parse_access(obj: Any) -> AccessId:
    return AccessId(cell_id=obj["cell_id"], network_id=obj["network_id"], rat=obj["rat"])


def _render_qos(qos: QosSpec) -> dict[str, Any]:
    return {"bandwidth_kbps": qos.bandwidth_kbps, "max_latency_ms": qos.max_latency_ms}


def _parse_qos(obj: Any) -> QosSpec:
    return QosSpec(bandwidth_kbps=obj["bandwidth_kbps"], max_latency_ms=obj["max_latency_ms"])


def _render_locator(locator: Locator) -> dict[str, Any]:
    return {
        "access": _render_access(locator.access),
        "address": locator.address,
        "kind": locator.kind,
    }


def _parse_locator(obj: Any) -> Locator:
    return Locator(address=obj["address"], access=_parse_access(obj["access"]), kind=obj["kind"])


def _render_rating(rating: Rating) -> dict[str, Any]:
    # The wire carries the path rating only; radio ranking is node-internal.
    rendered = _render_access(rating.access)
    rendered["rating"] = rating.path_score
    return rendered


def _parse_rating(obj: Any) -> Rating:
    return Rating(access=_parse_access(obj), path_score=obj["rating"], radio_score=0.0)


class _Codec:
    """Render one primitive field into params fragments and back."""

    def __init__(
        self,
        render: Callable[[str, Any], dict[str, Any]],
        parse: Callable[[str, dict[str, Any]], Any],
    ) -> None:
        self.render = render
        self.parse = parse


def _scalar_codec() -> _Codec:
    return _Codec(lambda key, v: {key: v}, lambda key, params: params[key])


def _object_codec(render: Callable, parse: Callable, optional: bool = False) -> _Codec:
    def do_render(key: str, value: Any) -> dict[str, Any]:
        if value is None:
            if not optional:
                raise ValueError(f"field {key!r} must not be None")
            return {key: None}
        return {key: render(value)}

    def do_parse(key: str, params: dict[str, Any]) -> Any:
        raw = params[key]
        return None if raw is None else parse(raw)

    return _Codec(do_render, do_parse)


def _sequence_codec(render: Callable, parse: Callable) -> _Codec:
    return _Codec(
        lambda key, values: {key: [render(v) for v in values]},
        lambda key, params: tuple(parse(v) for v in params[key]),
    )


def _result_codec() -> _Codec:
    def render(_key: str, value: Result) -> dict[str, Any]:
        if value.ok:
            return {"result": "success"}
        return {"result": "failure", "reason": value.reason}

    def parse(_key: str, params: dict[str, Any]) -> Result:
        if params["result"] == "success":
            return Result.success()
        return Result.failure(params["reason"])

    return _Codec(render, parse)


_FIELD_CODECS: dict[str, _Codec] = {
    "flow": _scalar_codec(),
    "mbb_flag": _scalar_codec(),
    "fmip_flag": _scalar_codec(),
    "target": _object_codec(_render_access, _parse_access),
    "current": _object_codec(_render_access, _parse_access, optional=True),
    "candidates": _sequence_codec(_render_access, _parse_access),
    "ratings": _sequence_codec(_render_rating, _parse_rating),
    "requested_qos": _object_codec(_render_qos, _parse_qos),
    "granted_qos": _object_codec(_render_qos, _parse_qos, optional=True),
    "provided_qos": _object_codec(_render_qos, _parse_qos),
    "locator": _object_codec(_render_locator, _parse_locator),
    "new_locator": _object_codec(_render_locator, _parse_locator, optional=True),
    "result": _result_codec(),
}


@dataclass(frozen=True)
class Primitive:
    """Base class for every signaling message; trace name = class name."""

    def params(self) -> dict[str, Any]:
        rendered: dict[str, Any] = {}
        for field in dataclasses.fields(self):
            codec = _FIELD_CODECS[field.name]
            rendered.update(codec.render(field.name, getattr(self, field.name)))
        return dict(sorted(rendered.items()))

    @classmethod
    def from_params(cls, params: dict[str, Any]) -> "Primitive":
        kwargs = {
            field.name: _FIELD_CODECS[field.name].parse(field.name, params)
            for field in dataclasses.fields(cls)
        }
        return cls(**kwargs)


# -- Constraint Selection SAP ----------------------------------------------


@dataclass(frozen=True)
class ConstraintRequest(Primitive):
    flow: FlowId
    candidates: tuple[AccessId, ...]


@dataclass(frozen=True)
class ConstraintResponse(Primitive):
    ratings: tuple[Rating, ...]


# -- HO Execution SAP -------------------------------------------------------


@dataclass(frozen=True)
class HOExecutionRequest(Primitive):
    flow: FlowId
    current: AccessId | None  # None requests flow establishment
    target: AccessId
    mbb_flag: bool


@dataclass(frozen=True)
class HOComplete(Primitive):
    result: Result


@dataclass(frozen=True)
class LinkAttachRequest(Primitive):
    flow: FlowId
    target: AccessId
    requested_qos: QosSpec


@dataclass(frozen=True)
class LinkSwitchRequest(Primitive):
    flow: FlowId
    current: AccessId
    target: AccessId
    requested_qos: QosSpec


@dataclass(frozen=True)
class LinkAttachResponse(Primitive):
    result: Result
    granted_qos: QosSpec | None


@dataclass(frozen=True)
class LinkSwitchResponse(Primitive):
    result: Result
    granted_qos: QosSpec | None


@dataclass(frozen=True)
class LinkDetachRequest(Primitive):
    flow: FlowId
    current: AccessId


@dataclass(frozen=True)
class LinkDetachResponse(Primitive):
    result: Result


# -- Path Query SAP ----------------------------------------------------------


@dataclass(frozen=True)
class PathSelect(Primitive):
    flow: FlowId
    target: AccessId
    fmip_flag: bool


@dataclass(frozen=True)
class PathSelected(Primitive):
    result: Result
    new_locator: Locator | None

    def __post_init__(self) -> None:
        if self.result.ok and self.new_locator is None:
            raise ValueError("PathSelected success carries a locator")
        if not self.result.ok and self.new_locator is not None:
            raise ValueError("PathSelected failure carries no locator")


# -- Flow Management SAP ------------------------------------------------------


@dataclass(frozen=True)
class AccessFlowSetup(Primitive):
    flow: FlowId
    requested_qos: QosSpec


@dataclass(frozen=True)
class AccessFlowSetupResponse(Primitive):
    result: Result
    granted_qos: QosSpec | None


@dataclass(frozen=True)
class HandoverOccurred(Primitive):
    flow: FlowId
    provided_qos: QosSpec


@dataclass(frozen=True)
class HandoverOccurredResponse(Primitive):
    result: Result


# -- Protocol-internal extensions (daemon <-> network side) -------------------
# These are not SAP primitives; they model the over-the-air protocol exchanges
# and carry a flow id so the daemon can dispatch replies.


@dataclass(frozen=True)
class ProxyRouterAdvertisement(Primitive):
    flow: FlowId
    target: AccessId


@dataclass(frozen=True)
class FastBindingUpdate(Primitive):
    flow: FlowId
    current: AccessId
    target: AccessId


@dataclass(frozen=True)
class FastBindingAck(Primitive):
    flow: FlowId
    result: Result


@dataclass(frozen=True)
class BindingUpdate(Primitive):
    flow: FlowId
    locator: Locator


@dataclass(frozen=True)
class BindingAck(Primitive):
    flow: FlowId
    result: Result


@dataclass(frozen=True)
class TunnelStart(Primitive):
    flow: FlowId
    current: AccessId
    target: AccessId


@dataclass(frozen=True)
class TunnelStop(Primitive):
    flow: FlowId


# Messages on the four service access points.
SAP_PRIMITIVES: tuple[type[Primitive], ...] = (
    ConstraintRequest,
    ConstraintResponse,
    HOExecutionRequest,
    HOComplete,
    LinkAttachRequest,
    LinkSwitchRequest,
    LinkAttachResponse,
    LinkSwitchResponse,
    LinkDetachRequest,
    LinkDetachResponse,
    PathSelect,
    PathSelected,
    AccessFlowSetup,
    AccessFlowSetupResponse,
    HandoverOccurred,
    HandoverOccurredResponse,
)

# Protocol-internal messages (daemon traffic), traced like primitives.
INTERNAL_PRIMITIVES: tuple[type[Primitive], ...] = (
    ProxyRouterAdvertisement,
    FastBindingUpdate,
    FastBindingAck,
    BindingUpdate,
    BindingAck,
    TunnelStart,
    TunnelStop,
)

PRIMITIVE_TYPES: dict[str, type[Primitive]] = {
    cls.__name__: cls for cls in SAP_PRIMITIVES + INTERNAL_PRIMITIVES
}


def primitive_name(primitive: Primitive) -> str:
    """Canonical trace name of a primitive (its variant tag)."""
    name = type(primitive).__name__
    if name not in PRIMITIVE_TYPES:
        raise ValueError(f"unknown primitive type: {name}")
    return name


def primitive_from_params(name: str, params: dict[str, Any]) -> Primitive:
    """Rebuild a primitive from its trace name and rendered params."""
    try:
        cls = PRIMITIVE_TYPES[name]
    except KeyError:
        raise ValueError(f"unknown primitive name: {name}") from None
    return cls.from_params(params)
