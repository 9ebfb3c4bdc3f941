"""Sequence conformance checking for recorded signaling traces.

A trace is split into handover contexts, one per HOExecutionRequest, each
running until the next request for the same flow (or the end of the trace).
Every context is then checked against declarative sequence templates:

* precedence rules - "if A and B both occur in the context, every A occurs
  before every B", each with a stable human-readable label;
* forbidden names - messages that must not appear for that handover variant;
* link alternation - attach and detach events on one access must alternate,
  starting with an attach, for every access that is brought up inside the
  context (accesses attached before the context started are exempt).

Messages that are not part of the handover signaling vocabulary (scan
snapshots, rating queries, flow-setup traffic) are ignored by the checker.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .core import PRIMITIVE_TYPES
from .simkernel import TraceRecord

# Names that make up handover signaling sequences; used both for conformance
# and for per-handover message counting in the metrics report.
SEQUENCE_NAMES = frozenset(
    {
        "HOExecutionRequest",
        "HOComplete",
        "LinkAttachRequest",
        "LinkAttachResponse",
        "LinkSwitchRequest",
        "LinkSwitchResponse",
        "LinkDetachRequest",
        "LinkDetachResponse",
        "PathSelect",
        "PathSelected",
        "BindingUpdate",
        "BindingAck",
        "ProxyRouterAdvertisement",
        "FastBindingUpdate",
        "FastBindingAck",
        "TunnelStart",
        "TunnelStop",
    }
)

# The checker additionally tracks the post-handover notification exchange.
CHECKED_NAMES = SEQUENCE_NAMES | {"HandoverOccurred", "HandoverOccurredResponse"}

VARIANTS = ("establishment", "mbb", "bbm", "fmip")

_FMIP_ONLY = frozenset(
    {
        "ProxyRouterAdvertisement",
        "FastBindingUpdate",
        "FastBindingAck",
        "LinkSwitchRequest",
        "LinkSwitchResponse",
        "TunnelStart",
        "TunnelStop",
    }
)


class AmbiguousTraceError(ValueError):
    """A record without a flow id could belong to more than one open context."""

    def __init__(self, record: TraceRecord, index: int) -> None:
        where = f"line {record.line}" if record.line else f"record {index}"
        super().__init__(
            f"{where}: {record.name} carries no flow id while several handovers are open"
        )
        self.record = record
        self.index = index


@dataclass(frozen=True)
class Precedence:
    """Conditional ordering: when both occur, `before` must precede `after`."""

    before: str
    after: str
    label: str


@dataclass(frozen=True)
class SequenceTemplate:
    name: str
    rules: tuple[Precedence, ...]
    forbidden: frozenset[str] = frozenset()
    applies_to: frozenset[str] = frozenset(VARIANTS)

    def __post_init__(self) -> None:
        names = set()
        for rule in self.rules:
            names.update((rule.before, rule.after))
        unknown = (names | self.forbidden) - CHECKED_NAMES
        if unknown:
            raise ValueError(f"template {self.name}: unknown names {sorted(unknown)}")
        overlap = names & self.forbidden
        if overlap:
            raise ValueError(
                f"template {self.name}: rules reference forbidden names {sorted(overlap)}"
            )
        self._check_acyclic()

    def _check_acyclic(self) -> None:
        edges: dict[str, set[str]] = {}
        for rule in self.rules:
            edges.setdefault(rule.before, set()).add(rule.after)
        visiting: set[str] = set()
        done: set[str] = set()

        def visit(node: str) -> None:
            if node in done:
                return
            if node in visiting:
                raise ValueError(f"template {self.name}: precedence rules form a cycle")
            visiting.add(node)
            for nxt in edges.get(node, ()):
                visit(nxt)
            visiting.discard(node)
            done.add(node)

        for node in list(edges):
            visit(node)


@dataclass(frozen=True)
class Verdict:
    ok: bool
    template: str | None = None
    record: TraceRecord | None = None
    index: int | None = None
    rule: str | None = None
    detail: str | None = None

    def describe(self) -> str:
        if self.ok:
            return "conformant"
        where = ""
        if self.record is not None and self.record.line:
            where = f"line {self.record.line}: "
        elif self.index is not None:
            where = f"record {self.index}: "
        return f"{where}{self.detail} [template={self.template} rule={self.rule}]"


@dataclass
class SequenceContext:
    """One handover execution span inside a trace."""

    flow: int
    start_index: int
    entries: list[tuple[int, TraceRecord]] = field(default_factory=list)

    @property
    def records(self) -> list[TraceRecord]:
        return [record for _, record in self.entries]


def _core_rules() -> tuple[Precedence, ...]:
    return (
        Precedence("PathSelect", "PathSelected", "path-query-before-answer"),
        Precedence("PathSelected", "BindingUpdate", "locator-before-binding-update"),
        Precedence("BindingUpdate", "BindingAck", "binding-update-before-ack"),
        Precedence("BindingAck", "HOComplete", "binding-ack-before-completion"),
        Precedence("HOComplete", "HandoverOccurred", "completion-before-indication"),
        Precedence(
            "HandoverOccurred", "HandoverOccurredResponse", "indication-before-its-ack"
        ),
    )


_LINK_PAIRS = (
    Precedence("LinkAttachRequest", "LinkAttachResponse", "attach-request-before-response"),
    Precedence("LinkDetachRequest", "LinkDetachResponse", "detach-request-before-response"),
)

_PLAIN_MIP_FORBIDDEN = frozenset(
    {
        "LinkSwitchRequest",
        "LinkSwitchResponse",
        "ProxyRouterAdvertisement",
        "FastBindingUpdate",
        "FastBindingAck",
        "TunnelStart",
        "TunnelStop",
    }
)

TEMPLATES: dict[str, SequenceTemplate] = {
    "generic": SequenceTemplate(
        name="generic",
        rules=_core_rules(),
        applies_to=frozenset(VARIANTS) | {"unclassified"},
    ),
    "mbb": SequenceTemplate(
        name="mbb",
        rules=_core_rules()
        + _LINK_PAIRS
        + (
            Precedence("LinkAttachRequest", "LinkDetachRequest", "attach-before-detach"),
            Precedence("LinkAttachResponse", "PathSelect", "attach-before-path-query"),
            Precedence("BindingAck", "LinkDetachRequest", "rebind-before-old-link-teardown"),
            Precedence("LinkDetachResponse", "HOComplete", "teardown-before-completion"),
        ),
        forbidden=_PLAIN_MIP_FORBIDDEN,
        applies_to=frozenset({"mbb"}),
    ),
    "bbm": SequenceTemplate(
        name="bbm",
        rules=_core_rules()
        + _LINK_PAIRS
        + (
            Precedence("LinkDetachRequest", "LinkAttachRequest", "detach-before-attach"),
            Precedence("LinkDetachResponse", "LinkAttachRequest", "teardown-done-before-attach"),
            Precedence("LinkAttachResponse", "PathSelect", "attach-before-path-query"),
        ),
        forbidden=_PLAIN_MIP_FORBIDDEN,
        applies_to=frozenset({"bbm"}),
    ),
    "fmip": SequenceTemplate(
        name="fmip",
        rules=_core_rules()
        + (
            Precedence(
                "ProxyRouterAdvertisement", "FastBindingUpdate", "advertisement-before-fast-binding"
            ),
            Precedence("FastBindingUpdate", "FastBindingAck", "fast-binding-before-ack"),
            Precedence("FastBindingAck", "PathSelect", "preparation-before-path-query"),
            Precedence("FastBindingAck", "LinkSwitchRequest", "preparation-before-switch"),
            Precedence("PathSelected", "LinkSwitchRequest", "locator-before-switch"),
            Precedence("LinkSwitchRequest", "LinkSwitchResponse", "switch-request-before-response"),
            Precedence("LinkSwitchResponse", "TunnelStart", "switch-before-tunnel"),
            Precedence("TunnelStart", "BindingUpdate", "tunnel-before-binding-update"),
            Precedence("BindingAck", "TunnelStop", "binding-ack-before-tunnel-stop"),
            Precedence("TunnelStop", "HOComplete", "tunnel-stop-before-completion"),
        ),
        forbidden=frozenset(
            {
                "LinkAttachRequest",
                "LinkAttachResponse",
                "LinkDetachRequest",
                "LinkDetachResponse",
            }
        ),
        applies_to=frozenset({"fmip"}),
    ),
    "establishment": SequenceTemplate(
        name="establishment",
        rules=tuple(r for r in _core_rules() if "HandoverOccurred" not in (r.before, r.after))
        + (
            Precedence("LinkAttachRequest", "LinkAttachResponse", "attach-request-before-response"),
            Precedence("LinkAttachResponse", "PathSelect", "attach-before-path-query"),
        ),
        forbidden=_PLAIN_MIP_FORBIDDEN
        | {
            "LinkDetachRequest",
            "LinkDetachResponse",
            "HandoverOccurred",
            "HandoverOccurredResponse",
        },
        applies_to=frozenset({"establishment"}),
    ),
}

assert CHECKED_NAMES <= set(PRIMITIVE_TYPES), "checker vocabulary drifted from primitives"


def parse_trace(lines) -> list[TraceRecord]:
    """Parse JSON-Lines trace text into records; blank lines are skipped."""
    records = []
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        records.append(TraceRecord.from_json(line, lineno))
    return records


def load_trace(path: str) -> list[TraceRecord]:
    with open(path, "r", encoding="utf-8") as handle:
        return parse_trace(handle)


def segment_contexts(records: list[TraceRecord]) -> list[SequenceContext]:
    """Split a trace into handover contexts; raises AmbiguousTraceError."""
    contexts: list[SequenceContext] = []
    open_contexts: dict[int, SequenceContext] = {}
    for index, record in enumerate(records):
        if record.name not in CHECKED_NAMES:
            continue
        if record.name == "HOExecutionRequest":
            flow = record.params["flow"]
            open_contexts.pop(flow, None)
            context = SequenceContext(flow=flow, start_index=index)
            context.entries.append((index, record))
            open_contexts[flow] = context
            contexts.append(context)
            continue
        flow = record.params.get("flow")
        if flow is not None:
            context = open_contexts.get(flow)
            if context is not None:
                context.entries.append((index, record))
        elif len(open_contexts) == 1:
            next(iter(open_contexts.values())).entries.append((index, record))
        elif len(open_contexts) > 1:
            raise AmbiguousTraceError(record, index)
        # No open context: pre-handover traffic, nothing to attribute.
    return contexts


def infer_variant(records: list[TraceRecord]) -> str:
    """Classify a context slice by its signaling vocabulary and link order."""
    names = [r.name for r in records]
    if any(name in _FMIP_ONLY for name in names):
        return "fmip"
    for record in records:
        if record.name == "HOExecutionRequest":
            if record.params.get("current") is None:
                return "establishment"
            break
    attach = names.index("LinkAttachRequest") if "LinkAttachRequest" in names else None
    detach = names.index("LinkDetachRequest") if "LinkDetachRequest" in names else None
    if detach is not None and (attach is None or detach < attach):
        return "bbm"
    if attach is not None:
        return "mbb"
    return "unclassified"


def _access_key(rendered: dict) -> str:
    return f"{rendered['network_id']}/{rendered['cell_id']}"


def _link_events(records: list[TraceRecord]) -> dict[str, list[tuple[int, str]]]:
    events: dict[str, list[tuple[int, str]]] = {}
    for index, record in enumerate(records):
        if record.name in ("LinkAttachRequest", "LinkSwitchRequest"):
            key = _access_key(record.params["target"])
            events.setdefault(key, []).append((index, "up"))
        if record.name in ("LinkDetachRequest", "LinkSwitchRequest"):
            key = _access_key(record.params["current"])
            events.setdefault(key, []).append((index, "down"))
    return events


def check(records: list[TraceRecord], template: SequenceTemplate) -> Verdict:
    """Check one context slice against one template."""
    checked = [(i, r) for i, r in enumerate(records) if r.name in CHECKED_NAMES]
    violations: list[tuple[int, str, str]] = []  # (slice index, rule, detail)

    for index, record in checked:
        if record.name in template.forbidden:
            violations.append(
                (index, f"forbidden:{record.name}", f"{record.name} must not occur here")
            )
            break  # later forbidden hits cannot be the first violation

    positions: dict[str, list[int]] = {}
    for index, record in checked:
        positions.setdefault(record.name, []).append(index)
    for rule in template.rules:
        before = positions.get(rule.before)
        after = positions.get(rule.after)
        if not before or not after:
            continue
        if max(before) > min(after):
            violations.append(
                (min(after), rule.label, f"{rule.after} precedes {rule.before}")
            )

    sequence_records = [r for _, r in checked]
    for key, events in sorted(_link_events(sequence_records).items()):
        if not any(kind == "up" for _, kind in events):
            continue  # access was attached before this context started
        expected = "up"
        for local_index, kind in events:
            if kind != expected:
                violations.append(
                    (
                        checked[local_index][0],
                        "link-alternation",
                        f"unexpected link-{kind} on {key}",
                    )
                )
                break
            expected = "down" if expected == "up" else "up"

    if not violations:
        return Verdict(ok=True, template=template.name)
    index, rule, detail = min(violations, key=lambda v: v[0])
    return Verdict(
        ok=False,
        template=template.name,
        record=records[index],
        index=index,
        rule=rule,
        detail=detail,
    )


def _globalize(context: SequenceContext, verdict: Verdict) -> Verdict:
    """Rewrite a slice-local failure index as a full-trace index."""
    assert verdict.index is not None
    return Verdict(
        ok=False,
        template=verdict.template,
        record=verdict.record,
        index=context.entries[verdict.index][0],
        rule=verdict.rule,
        detail=verdict.detail,
    )


def _ambiguity_verdict(exc: AmbiguousTraceError, template: str) -> Verdict:
    return Verdict(
        ok=False,
        template=template,
        record=exc.record,
        index=exc.index,
        rule="ambiguous-attribution",
        detail=str(exc),
    )


def check_auto(records: list[TraceRecord]) -> Verdict:
    """Segment a full trace and check each context with its matching templates."""
    try:
        contexts = segment_contexts(records)
    except AmbiguousTraceError as exc:
        return _ambiguity_verdict(exc, "auto")
    for context in contexts:
        slice_records = context.records
        variant = infer_variant(slice_records)
        for template in TEMPLATES.values():
            if variant not in template.applies_to:
                continue
            verdict = check(slice_records, template)
            if not verdict.ok:
                return _globalize(context, verdict)
    return Verdict(ok=True, template="auto")


def check_trace(records: list[TraceRecord], template: str = "auto") -> Verdict:
    """Check a trace against one named template, or per-variant with "auto"."""
    if template == "auto":
        return check_auto(records)
    if template not in TEMPLATES:
        raise KeyError(f"unknown template {template!r}")
    chosen = TEMPLATES[template]
    try:
        contexts = segment_contexts(records)
    except AmbiguousTraceError as exc:
        return _ambiguity_verdict(exc, template)
    for context in contexts:
        verdict = check(context.records, chosen)
        if not verdict.ok:
            return _globalize(context, verdict)
    return Verdict(ok=True, template=template)
