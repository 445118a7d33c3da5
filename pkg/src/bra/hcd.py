"""Hypothetical component diagrams.

An :class:`Hcd` is a component diagram: components expose provided and
required ports, and dependency links carry a named signal from a provided
port to a required port. Loops between components are legal.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping

import networkx as nx

from .bif import Sign
from .reports import ERROR, WARNING, ValidationReport


@dataclass(frozen=True)
class PortSpec:
    name: str
    signal_semantics: str = ""


@dataclass(frozen=True)
class Claim:
    id: str
    text: str
    sign: Sign | None = None


@dataclass(frozen=True)
class Component:
    id: str
    function_label: str
    provided_ports: tuple[PortSpec, ...] = ()
    required_ports: tuple[PortSpec, ...] = ()
    behavior_claims: tuple[Claim, ...] = ()
    stub_ref: str | None = None

    def provided(self, name: str) -> PortSpec | None:
        return next((p for p in self.provided_ports if p.name == name), None)

    def required(self, name: str) -> PortSpec | None:
        return next((p for p in self.required_ports if p.name == name), None)

    @property
    def port_names(self) -> list[str]:
        return [p.name for p in self.provided_ports + self.required_ports]


PortRef = tuple[str, str]


@dataclass(frozen=True)
class DependencyLink:
    id: str
    source: PortRef
    target: PortRef
    signal_semantics: str = ""


@dataclass(frozen=True)
class ExternalPort:
    """A named port at the ROI boundary.

    For inputs, ``ports`` lists the required ports it feeds; for outputs,
    the provided ports it exposes.
    """

    name: str
    ports: tuple[PortRef, ...] = ()


@dataclass(frozen=True)
class GoalPredicate:
    """Machine-checkable goal. ``kind`` selects the check, ``params`` configure it."""

    kind: str
    params: Mapping[str, object] = field(default_factory=dict)


@dataclass(frozen=True)
class Tlf:
    goal: str
    predicate: GoalPredicate | None = None


@dataclass(frozen=True)
class Hcd:
    id: str
    tlf: Tlf = Tlf("")
    components: Mapping[str, Component] = field(default_factory=dict)
    links: Mapping[str, DependencyLink] = field(default_factory=dict)
    external_inputs: tuple[ExternalPort, ...] = ()
    external_outputs: tuple[ExternalPort, ...] = ()
    fragment: bool = False

    @classmethod
    def build(
        cls,
        id: str,
        components: Iterable[Component] = (),
        links: Iterable[DependencyLink] = (),
        external_inputs: Iterable[ExternalPort] = (),
        external_outputs: Iterable[ExternalPort] = (),
        tlf: Tlf = Tlf(""),
        fragment: bool = False,
    ) -> Hcd:
        cmap: dict[str, Component] = {}
        for c in components:
            if c.id in cmap:
                raise ValueError(f"duplicate component id {c.id!r}")
            cmap[c.id] = c
        lmap: dict[str, DependencyLink] = {}
        for link in links:
            if link.id in lmap:
                raise ValueError(f"duplicate link id {link.id!r}")
            lmap[link.id] = link
        return cls(
            id,
            tlf,
            dict(sorted(cmap.items())),
            dict(sorted(lmap.items())),
            tuple(sorted(external_inputs, key=lambda p: p.name)),
            tuple(sorted(external_outputs, key=lambda p: p.name)),
            fragment,
        )

    def with_changes(self, **kw) -> Hcd:
        return replace(self, **kw)


class InvalidHcdError(ValueError):
    def __init__(self, report: ValidationReport):
        self.report = report
        first = report.errors[0] if report.errors else None
        detail = f": {first.rule} at {first.element}" if first else ""
        super().__init__(f"invalid HCD {report.subject!r}{detail}")


def validate_hcd(hcd: Hcd) -> ValidationReport:
    report = ValidationReport(subject=hcd.id)

    for cid, comp in hcd.components.items():
        names = comp.port_names
        for dup in sorted({n for n in names if names.count(n) > 1}):
            report.add(cid, "duplicate-port", ERROR, f"port name {dup!r} used twice")
        if not names:
            report.add(cid, "orphan-component", ERROR, "component has no ports")
        if len(comp.provided_ports) == 1:
            port = comp.provided_ports[0].name
            if not comp.function_label.casefold().startswith(port.casefold()):
                report.add(
                    cid,
                    "port-label-mismatch",
                    WARNING,
                    f"sole provided port {port!r} does not name function {comp.function_label!r}",
                )

    for lid, link in hcd.links.items():
        ok = True
        if not _resolves(hcd, link.source, provided=True):
            report.add(lid, "dangling-port", ERROR, f"source {link.source[0]}.{link.source[1]} is not a provided port")
            ok = False
        if not _resolves(hcd, link.target, provided=False):
            report.add(lid, "dangling-port", ERROR, f"target {link.target[0]}.{link.target[1]} is not a required port")
            ok = False
        if ok and link.signal_semantics:
            port = hcd.components[link.source[0]].provided(link.source[1])
            if port.signal_semantics and port.signal_semantics != link.signal_semantics:
                report.add(
                    lid,
                    "semantics-mismatch",
                    WARNING,
                    f"link carries {link.signal_semantics!r}, port declares {port.signal_semantics!r}",
                )

    for ext in hcd.external_inputs:
        for ref in ext.ports:
            if not _resolves(hcd, ref, provided=False):
                report.add(f"input:{ext.name}", "dangling-port", ERROR, f"{ref[0]}.{ref[1]} is not a required port")
    for ext in hcd.external_outputs:
        for ref in ext.ports:
            if not _resolves(hcd, ref, provided=True):
                report.add(f"output:{ext.name}", "dangling-port", ERROR, f"{ref[0]}.{ref[1]} is not a provided port")

    if not hcd.fragment:
        for name in unreachable_inputs(hcd):
            report.add(f"input:{name}", "unreachable-external", ERROR, "reaches no external output")
    return report


def _resolves(hcd: Hcd, ref: PortRef, provided: bool) -> bool:
    comp = hcd.components.get(ref[0])
    if comp is None:
        return False
    return (comp.provided(ref[1]) if provided else comp.required(ref[1])) is not None


def component_successors(hcd: Hcd) -> dict[str, set[str]]:
    succ: dict[str, set[str]] = defaultdict(set)
    for link in hcd.links.values():
        if link.source[0] in hcd.components and link.target[0] in hcd.components:
            succ[link.source[0]].add(link.target[0])
    return succ


def reachable_components(hcd: Hcd, start: Iterable[str]) -> set[str]:
    succ = component_successors(hcd)
    seen: set[str] = set()
    stack = [c for c in start if c in hcd.components]
    while stack:
        cur = stack.pop()
        if cur in seen:
            continue
        seen.add(cur)
        stack.extend(succ.get(cur, ()))
    return seen


def external_reachability(hcd: Hcd) -> set[tuple[str, str]]:
    """Pairs (input name, output name) such that the input reaches the output."""
    pairs = set()
    for ext_in in hcd.external_inputs:
        reach = reachable_components(hcd, (c for c, _ in ext_in.ports))
        for ext_out in hcd.external_outputs:
            if any(c in reach for c, _ in ext_out.ports):
                pairs.add((ext_in.name, ext_out.name))
    return pairs


def unreachable_inputs(hcd: Hcd) -> list[str]:
    reached = {i for i, _ in external_reachability(hcd)}
    return sorted(e.name for e in hcd.external_inputs if e.name not in reached)


def dependency_graph(hcd: Hcd) -> nx.MultiDiGraph:
    """Component-level multigraph; one edge per link, keyed by link id."""
    report = validate_hcd(hcd)
    if not report.ok:
        raise InvalidHcdError(report)
    g = nx.MultiDiGraph(hcd_id=hcd.id)
    for cid in sorted(hcd.components):
        g.add_node(cid, function_label=hcd.components[cid].function_label)
    for lid in sorted(hcd.links):
        link = hcd.links[lid]
        g.add_edge(
            link.source[0],
            link.target[0],
            key=lid,
            source_port=link.source[1],
            target_port=link.target[1],
            signal_semantics=link.signal_semantics,
        )
    return g
