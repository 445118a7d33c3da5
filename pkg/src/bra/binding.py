"""Associating an HCD with a BIF and judging how well the pair holds up.

A :class:`BraMapping` sends every component to a circuit and every link to
a connection. The checks here cover the structural, behavioral and process
consistency of that association, the functionality of the HCD, and the
aggregate adequacy verdict used to gate certification.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from typing import Any, Mapping, Sequence

from .bif import Bif, Citation, Sign, UniformCircuit, UnknownElementError, roi_extract, uniform_leaves
from .hcd import Hcd
from .harness import Bindings, HarnessError, Schedule, Trace, evaluate_goal, run
from .reports import ERROR, WARNING, ConsistencyReport, Finding


@dataclass(frozen=True)
class BraMapping:
    hcd_id: str
    bif_id: str
    roi: frozenset[str] = frozenset()
    component_map: Mapping[str, str] = field(default_factory=dict)
    link_map: Mapping[str, str] = field(default_factory=dict)
    # "<component>/<claim id>" -> supporting citations
    evidence: Mapping[str, tuple[Citation, ...]] = field(default_factory=dict)
    id: str = ""


def _resolve(bif: Bif, hcd: Hcd, mapping: BraMapping) -> None:
    if mapping.bif_id != bif.id:
        raise UnknownElementError(mapping.bif_id, "mapping (BIF id mismatch)")
    if mapping.hcd_id != hcd.id:
        raise UnknownElementError(mapping.hcd_id, "mapping (HCD id mismatch)")
    for cid in sorted(mapping.roi):
        bif.circuit(cid)
    for comp, circ in sorted(mapping.component_map.items()):
        if comp not in hcd.components:
            raise UnknownElementError(comp, f"HCD {hcd.id!r}")
        bif.circuit(circ)
    for lid, kid in sorted(mapping.link_map.items()):
        if lid not in hcd.links:
            raise UnknownElementError(lid, f"HCD {hcd.id!r}")
        bif.connection(kid)


# -- aspect 1: dependency structure ----------------------------------------------


def check_structural_consistency(bif: Bif, hcd: Hcd, mapping: BraMapping) -> ConsistencyReport:
    """Each link must be realised by one direct connection running the same way.

    The connection's origin must be a uniform circuit of the source
    component's circuit, and its destination must share a uniform circuit
    with the target component's circuit. Both circuits and the connection
    must lie inside the ROI.
    """
    _resolve(bif, hcd, mapping)
    report = ConsistencyReport(subject=hcd.id, aspect="structure")
    view = roi_extract(bif, mapping.roi) if mapping.roi else None
    inside = set(view.bif.circuits) if view else set(bif.circuits)
    internal = set(view.bif.connections) if view else set(bif.connections)

    leaves = {cid: set(uniform_leaves(bif, cid)) for cid in set(mapping.component_map.values())}
    claimed: dict[str, str] = {}
    for comp in sorted(hcd.components):
        circ = mapping.component_map.get(comp)
        if circ is None:
            report.add(comp, "unmapped-component", ERROR, "component has no circuit")
            continue
        if circ not in inside:
            report.add(comp, "outside-roi", ERROR, f"circuit {circ!r} is outside the ROI")
        for leaf in sorted(leaves[circ]):
            other = claimed.setdefault(leaf, comp)
            if other != comp:
                report.add(
                    comp,
                    "component-map-not-injective",
                    ERROR,
                    f"uniform circuit {leaf!r} already claimed by {other!r}",
                )

    for lid in sorted(hcd.links):
        link = hcd.links[lid]
        clause = _link_clause(bif, mapping, link, leaves, internal)
        report.results[lid] = clause or "pass"
        if clause:
            report.add(lid, clause, ERROR, _CLAUSE_TEXT[clause])
    return report


_CLAUSE_TEXT = {
    "unmapped-link": "link has no connection",
    "unmapped-endpoint": "an endpoint component has no circuit",
    "connection-outside-roi": "connection does not lie inside the ROI",
    "direction-mismatch": "connection runs from the target circuit to the source circuit",
    "origin-mismatch": "connection does not originate in the source component's circuit",
    "destination-mismatch": "connection does not reach the target component's circuit",
}


def _link_clause(bif, mapping, link, leaves, internal) -> str | None:
    kid = mapping.link_map.get(link.id)
    if kid is None:
        return "unmapped-link"
    src = mapping.component_map.get(link.source[0])
    dst = mapping.component_map.get(link.target[0])
    if src is None or dst is None:
        return "unmapped-endpoint"
    conn = bif.connections[kid]
    src_leaves, dst_leaves = leaves[src], leaves[dst]
    out_leaves = set(uniform_leaves(bif, conn.output))
    origin_ok = conn.input in src_leaves
    dest_ok = bool(out_leaves & dst_leaves)
    if not (origin_ok and dest_ok):
        if conn.input in dst_leaves and out_leaves & src_leaves:
            return "direction-mismatch"
        return "origin-mismatch" if not origin_ok else "destination-mismatch"
    if kid not in internal:
        return "connection-outside-roi"
    return None


# -- aspect 2: behavior vs physiology ---------------------------------------------


def default_sign_table() -> dict[str, dict[str, str]]:
    """circuit sign -> claim sign -> "pass" | "warn" | "fail"."""
    text = resources.files("bra").joinpath("data/sign_compatibility.json").read_text(encoding="utf-8")
    return json.loads(text)["table"]


def circuit_sign(bif: Bif, circuit_id: str) -> Sign:
    """Effective sign of a circuit; mixed or undeterminable leaves give UNKNOWN."""
    signs = set()
    for leaf in uniform_leaves(bif, circuit_id):
        c = bif.circuits[leaf]
        assert isinstance(c, UniformCircuit)
        signs.add(c.effective_sign)
    return signs.pop() if len(signs) == 1 else Sign.UNKNOWN


def check_behavior_consistency(
    bif: Bif, hcd: Hcd, mapping: BraMapping, table: Mapping[str, Mapping[str, str]] | None = None
) -> ConsistencyReport:
    _resolve(bif, hcd, mapping)
    table = table or default_sign_table()
    report = ConsistencyReport(subject=hcd.id, aspect="behavior")
    for cid in sorted(hcd.components):
        comp = hcd.components[cid]
        circ = mapping.component_map.get(cid)
        for claim in comp.behavior_claims:
            key = f"{cid}/{claim.id}"
            verdict = "pass"
            if claim.sign is not None and circ is not None:
                have = circuit_sign(bif, circ)
                cell = table.get(have.value, {}).get(claim.sign.value, "warn")
                if cell == "fail":
                    verdict = "sign-incompatible"
                    report.add(
                        key,
                        "sign-incompatible",
                        ERROR,
                        f"{have.value} circuit {circ!r} cannot host a {claim.sign.value} claim",
                    )
                elif cell == "warn":
                    report.add(
                        key,
                        "sign-uncertain",
                        WARNING,
                        f"{have.value} circuit {circ!r} with {claim.sign.value} claim",
                    )
            if not mapping.evidence.get(key):
                report.add(key, "unsupported-claim", WARNING, "claim has no citation")
            report.results[key] = verdict
    return report


# -- aspect 3: process ordering ----------------------------------------------------


def check_process_consistency(
    trace: Trace,
    milestones: Sequence[tuple[str, str]],
    hcd: Hcd | None = None,
    threshold: float = 0.5,
) -> ConsistencyReport:
    """Milestones must occur in the trace in the given order.

    A milestone is ``(component, event)`` where event is ``"fires"`` (any
    provided port active) or ``"port:<name>"``. Each milestone must first
    occur strictly after the occurrence chosen for its predecessor.
    Constraint ``i`` orders milestone ``i`` before milestone ``i + 1``; a lone
    milestone that never occurs violates constraint 0.
    """
    if hcd is not None and trace.hcd_id is not None and trace.hcd_id != hcd.id:
        raise ValueError(f"trace belongs to {trace.hcd_id!r}, not {hcd.id!r}")
    report = ConsistencyReport(subject=trace.hcd_id or "", aspect="process")
    prev = -1
    for i, (comp, event) in enumerate(milestones):
        port = _milestone_port(event)
        steps = trace.active_steps(comp, port, threshold)
        t = min((s for s in steps if s > prev), default=None)
        if t is None:
            idx = max(i - 1, 0)
            report.results[str(idx)] = "order-violated"
            report.add(
                f"milestone:{idx}",
                "order-violated",
                ERROR,
                f"{comp} {event} does not occur after milestone {i - 1}" if i else f"{comp} {event} never occurs",
            )
            return report
        if i:
            report.results[str(i - 1)] = "pass"
        prev = t
    return report


def _milestone_port(event: str) -> str | None:
    if event == "fires":
        return None
    if event.startswith("port:") and len(event) > 5:
        return event[5:]
    raise ValueError(f"unknown milestone event {event!r}")


# -- functionality -----------------------------------------------------------------


@dataclass(frozen=True)
class HarnessConfig:
    bindings: Bindings
    schedule: Schedule
    steps: int
    seed: int = 0


@dataclass
class FunctionalityVerdict:
    status: str  # achieved | not-achieved | not-executable
    trace: Trace | None = None
    cause: str = ""

    def to_dict(self) -> dict:
        return {"status": self.status, "cause": self.cause}


def check_functionality(bif: Bif, hcd: Hcd, mapping: BraMapping | None, config: HarnessConfig) -> FunctionalityVerdict:
    pred = hcd.tlf.predicate
    if pred is None:
        return FunctionalityVerdict("not-executable", cause="top-level function has no goal predicate")
    missing = sorted(c for c in hcd.components if c not in config.bindings)
    if missing:
        return FunctionalityVerdict("not-executable", cause=f"no stub for {', '.join(missing)}")
    try:
        trace = run(hcd, config.bindings, config.schedule, config.steps, config.seed)
        ok = evaluate_goal(pred, trace, config.schedule)
    except (HarnessError, ValueError) as exc:
        return FunctionalityVerdict("not-executable", cause=str(exc))
    return FunctionalityVerdict("achieved" if ok else "not-achieved", trace)


# -- adequacy ---------------------------------------------------------------------


@dataclass
class AdequacyReport:
    hcd_id: str
    bif_id: str
    criteria: dict[str, dict[str, Any]] = field(default_factory=dict)

    def set(self, name: str, findings: Sequence[Finding], status: str | None = None) -> None:
        if status is None:
            if any(f.severity == ERROR for f in findings):
                status = "fail"
            elif findings:
                status = "warn"
            else:
                status = "pass"
        self.criteria[name] = {"status": status, "findings": list(findings)}

    @property
    def findings(self) -> list[Finding]:
        return [f for c in self.criteria.values() for f in c["findings"]]

    @property
    def certifiable(self) -> bool:
        return all(f.severity != ERROR for f in self.findings)

    def to_dict(self) -> dict:
        return {
            "hcd_id": self.hcd_id,
            "bif_id": self.bif_id,
            "certifiable": self.certifiable,
            "criteria": {
                name: {"status": c["status"], "findings": [f.to_dict() for f in c["findings"]]}
                for name, c in sorted(self.criteria.items())
            },
        }


def evaluate_adequacy(
    bif: Bif,
    hcd: Hcd,
    mapping: BraMapping,
    store=None,
    trace: Trace | None = None,
    *,
    harness: HarnessConfig | None = None,
    schedule: Schedule | None = None,
    milestones: Sequence[tuple[str, str]] = (),
    sign_table: Mapping[str, Mapping[str, str]] | None = None,
) -> AdequacyReport:
    """Run every inspection criterion and aggregate the verdicts.

    ``store`` is an open :class:`bra.registry.Store` (or ``None`` to skip the
    novelty lookup). When ``trace`` is given it is used as-is, otherwise the
    harness configuration, if any, produces one.
    """
    from .registry import authenticity_findings, bif_entry_keys, novelty_findings

    out = AdequacyReport(hcd.id, bif.id)

    if store is None:
        out.set("bif.novelty", [], "skipped")
    else:
        out.set("bif.novelty", novelty_findings(bif_entry_keys(bif), store, exclude_id=None))
    out.set("bif.authenticity", authenticity_findings(bif))

    if schedule is None and harness is not None:
        schedule = harness.schedule
    if trace is not None:
        if hcd.tlf.predicate is None:
            out.set("hcd.functionality", [Finding(hcd.id, "no-goal-predicate", ERROR, "TLF has no goal predicate")])
        else:
            try:
                ok = evaluate_goal(hcd.tlf.predicate, trace, schedule)
                fs = [] if ok else [Finding(hcd.id, "goal-not-achieved", ERROR, hcd.tlf.goal)]
            except (HarnessError, ValueError) as exc:
                fs = [Finding(hcd.id, "not-executable", ERROR, str(exc))]
            out.set("hcd.functionality", fs)
    elif harness is not None:
        verdict = check_functionality(bif, hcd, mapping, harness)
        trace = verdict.trace
        if verdict.status == "achieved":
            out.set("hcd.functionality", [])
        elif verdict.status == "not-achieved":
            out.set("hcd.functionality", [Finding(hcd.id, "goal-not-achieved", ERROR, hcd.tlf.goal)])
        else:
            out.set("hcd.functionality", [Finding(hcd.id, "not-executable", ERROR, verdict.cause)])
    else:
        out.set(
            "hcd.functionality",
            [Finding(hcd.id, "functionality-not-evaluated", WARNING, "no trace or harness configuration")],
        )

    out.set("hcd.consistency.structure", check_structural_consistency(bif, hcd, mapping).findings)
    out.set("hcd.consistency.behavior", check_behavior_consistency(bif, hcd, mapping, sign_table).findings)
    if milestones and trace is not None:
        out.set("hcd.consistency.process", check_process_consistency(trace, milestones, hcd).findings)
    else:
        out.set("hcd.consistency.process", [], "skipped")
    return out
