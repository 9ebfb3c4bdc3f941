"""Independent partial-order oracle for the mutation soundness tests.

The production checker scans rule by rule and compares extreme positions. This
oracle takes the opposite route: it materialises the full happens-before DAG a
template induces on a concrete record list (one edge from every record named
`rule.before` to every record named `rule.after`) and then verifies, by
Kahn-style elimination, that the listed order is a topological linearization
of that DAG. The two implementations must agree on every mutated trace.
"""

from __future__ import annotations

from mobsig.conformance import SequenceTemplate
from mobsig.simkernel import TraceRecord


def rule_edges(records: list[TraceRecord], template: SequenceTemplate) -> set[tuple[int, int]]:
    """All (i, j) index pairs where records[i] must happen before records[j]."""
    positions: dict[str, list[int]] = {}
    for index, record in enumerate(records):
        positions.setdefault(record.name, []).append(index)
    edges: set[tuple[int, int]] = set()
    for rule in template.rules:
        for i in positions.get(rule.before, ()):
            for j in positions.get(rule.after, ()):
                edges.add((i, j))
    return edges


def is_linear_extension(records: list[TraceRecord], template: SequenceTemplate) -> bool:
    """True iff the listed order is a topological sort of the rule DAG."""
    edges = rule_edges(records, template)
    must_precede: dict[int, set[int]] = {i: set() for i in range(len(records))}
    for before, after in edges:
        must_precede[after].add(before)
    emitted: set[int] = set()
    for index in range(len(records)):
        if not must_precede[index] <= emitted:
            return False
        emitted.add(index)
    return True
