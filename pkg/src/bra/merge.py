"""Merge development: find components of two HCDs that sit on the same circuit
and plan how to fold the two designs into one."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping

from .bif import Bif
from .binding import BraMapping
from .hcd import Component, DependencyLink, ExternalPort, Hcd, PortSpec, Tlf, validate_hcd
from .reports import ValidationReport

SELECT, REDESIGN = "select-by-fidelity", "redesign"
POLICIES = (SELECT, REDESIGN)


class MergeError(ValueError):
    pass


@dataclass(frozen=True, order=True)
class SharedPair:
    circuit: str
    a: str
    b: str

    def to_dict(self) -> dict:
        return {"circuit": self.circuit, "component_a": self.a, "component_b": self.b}


def lift_mapping(mapping: BraMapping, bif: Bif, level: Iterable[str]) -> BraMapping:
    """Replace each mapped circuit by the ``level`` circuit that contains it.

    When several level circuits contain it the smallest (fewest descendants,
    then id) wins; circuits under no level circuit are left alone.
    """
    level = sorted(set(level))
    spans = {c: bif.descendants(c) for c in level}
    lifted = {}
    for comp, circ in mapping.component_map.items():
        holders = [c for c in level if circ in spans[c]]
        lifted[comp] = min(holders, key=lambda c: (len(spans[c]), c)) if holders else circ
    return replace(mapping, component_map=lifted)


def merge_scan(
    map_a: BraMapping, map_b: BraMapping, *, bif: Bif | None = None, level: Iterable[str] | None = None
) -> list[SharedPair]:
    """Components of A and B mapped to the identical circuit, ordered by circuit."""
    if map_a.bif_id != map_b.bif_id:
        raise MergeError(f"mappings target different BIFs ({map_a.bif_id!r} vs {map_b.bif_id!r})")
    if level is not None:
        if bif is None:
            raise MergeError("lifting to a membership level needs the BIF")
        map_a, map_b = lift_mapping(map_a, bif, level), lift_mapping(map_b, bif, level)
    by_circuit: dict[str, list[str]] = {}
    for comp, circ in map_b.component_map.items():
        by_circuit.setdefault(circ, []).append(comp)
    pairs = [
        SharedPair(circ, comp, other)
        for comp, circ in map_a.component_map.items()
        for other in by_circuit.get(circ, ())
    ]
    return sorted(pairs)


@dataclass
class Decision:
    pair: SharedPair
    strategy: str
    survivor: str  # "a" or "b"
    justification: dict = field(default_factory=dict)
    flags: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            **self.pair.to_dict(),
            "strategy": self.strategy,
            "survivor": self.survivor,
            "justification": self.justification,
            "flags": sorted(self.flags),
        }


@dataclass
class MergePlan:
    hcd_a: str
    hcd_b: str
    decisions: list[Decision]
    merged_hcd: Hcd
    renamed: dict[str, str] = field(default_factory=dict)
    conflicts: list[dict] = field(default_factory=list)
    validation: ValidationReport = field(default_factory=ValidationReport)

    @property
    def shared(self) -> list[SharedPair]:
        return [d.pair for d in self.decisions]

    def to_dict(self) -> dict:
        from .io.documents import hcd_to_dict

        return {
            "format_version": "1.0",
            "kind": "merge_plan",
            "hcd_a": self.hcd_a,
            "hcd_b": self.hcd_b,
            "decisions": [d.to_dict() for d in self.decisions],
            "renamed": dict(sorted(self.renamed.items())),
            "conflicts": self.conflicts,
            "merged_hcd": hcd_to_dict(self.merged_hcd),
            "validation": self.validation.to_dict(),
        }


Scores = Mapping[str, Mapping[str, float]]


def _combined(scores: Scores, comp: str, side: str) -> float:
    try:
        s = scores[comp]
        return (float(s["structural"]) + float(s["functional"])) / 2
    except (KeyError, TypeError):
        raise MergeError(f"no fidelity scores for component {comp!r} on side {side}") from None


def plan_merge(
    shared: Iterable[SharedPair],
    hcd_a: Hcd,
    hcd_b: Hcd,
    scores_a: Scores | None = None,
    scores_b: Scores | None = None,
    policy: str = SELECT,
) -> MergePlan:
    """Decide each shared pair and build the merged skeleton HCD.

    The collapsed component keeps A's id. Under select-by-fidelity it takes
    the label and stub of the better-scoring side (A on a tie, flagged); under
    redesign it becomes a TODO placeholder. Either way it carries the union
    of both sides' ports, and every link of both HCDs is rewired onto it.
    """
    if policy not in POLICIES:
        raise MergeError(f"unknown policy {policy!r}")
    shared = sorted(shared)
    seen_a: set[str] = set()
    seen_b: set[str] = set()
    for p in shared:
        if p.a not in hcd_a.components or p.b not in hcd_b.components:
            raise MergeError(f"pair {p.a!r}/{p.b!r} names a component missing from its HCD")
        if p.a in seen_a or p.b in seen_b:
            raise MergeError(f"component in more than one shared pair ({p.a!r} / {p.b!r})")
        seen_a.add(p.a)
        seen_b.add(p.b)

    decisions = []
    for p in shared:
        if policy == REDESIGN:
            decisions.append(Decision(p, REDESIGN, "a", {}, ["todo"]))
            continue
        sa = _combined(scores_a or {}, p.a, "A")
        sb = _combined(scores_b or {}, p.b, "B")
        d = Decision(p, SELECT, "a" if sa >= sb else "b", {"score_a": sa, "score_b": sb})
        if sa == sb:
            d.flags.append("tie-break")
        decisions.append(d)

    plan = MergePlan(hcd_a.id, hcd_b.id, decisions, hcd_a)
    plan.merged_hcd = _build(hcd_a, hcd_b, plan)
    plan.validation = validate_hcd(plan.merged_hcd)
    return plan


def _build(hcd_a: Hcd, hcd_b: Hcd, plan: MergePlan) -> Hcd:
    comp_b_to: dict[str, str] = {}
    port_map: dict[tuple[str, str, str], tuple[str, str]] = {}  # (side, comp, port) -> merged ref
    components: dict[str, Component] = {}
    collapsed = {d.pair.a: d for d in plan.decisions}
    collapsed_b = {d.pair.b: d for d in plan.decisions}

    for cid, c in hcd_a.components.items():
        if cid in collapsed:
            continue
        components[cid] = c
        for name in c.port_names:
            port_map[("a", cid, name)] = (cid, name)
    for cid, c in hcd_b.components.items():
        if cid in collapsed_b:
            continue
        new = cid if cid not in hcd_a.components else f"{hcd_b.id}:{cid}"
        if new != cid:
            plan.renamed[f"component:{hcd_b.id}/{cid}"] = new
        comp_b_to[cid] = new
        components[new] = replace(c, id=new)
        for name in c.port_names:
            port_map[("b", cid, name)] = (new, name)

    for d in plan.decisions:
        ca, cb = hcd_a.components[d.pair.a], hcd_b.components[d.pair.b]
        base, other = (ca, cb) if d.survivor == "a" else (cb, ca)
        base_side, other_side = ("a", "b") if d.survivor == "a" else ("b", "a")
        other_hcd = hcd_b.id if other_side == "b" else hcd_a.id
        new_id = d.pair.a
        provided = list(base.provided_ports)
        required = list(base.required_ports)
        for name in base.port_names:
            port_map[(base_side, base.id, name)] = (new_id, name)
        taken = {p.name: p for p in provided + required}
        for kind, plist in (("provided", other.provided_ports), ("required", other.required_ports)):
            dest = provided if kind == "provided" else required
            mine = {p.name: p for p in (base.provided_ports if kind == "provided" else base.required_ports)}
            for p in plist:
                if p.name in mine and mine[p.name].signal_semantics == p.signal_semantics:
                    port_map[(other_side, other.id, p.name)] = (new_id, p.name)
                    continue
                name = p.name
                if name in taken:
                    name = f"{other_hcd}:{p.name}"
                    d.flags.append("semantic-conflict" if p.name in mine else "port-renamed")
                    plan.conflicts.append(
                        {
                            "component": new_id,
                            "port": p.name,
                            "renamed_to": name,
                            "semantics": [taken[p.name].signal_semantics, p.signal_semantics],
                        }
                    )
                    plan.renamed[f"port:{other_hcd}/{other.id}/{p.name}"] = f"{new_id}/{name}"
                dest.append(PortSpec(name, p.signal_semantics))
                taken[name] = dest[-1]
                port_map[(other_side, other.id, p.name)] = (new_id, name)
        if d.strategy == REDESIGN:
            label = f"TODO redesign: {ca.function_label} + {cb.function_label}"
            stub, claims = None, ca.behavior_claims + cb.behavior_claims
        else:
            label, stub, claims = base.function_label, base.stub_ref, base.behavior_claims
        components[new_id] = Component(new_id, label, tuple(provided), tuple(required), claims, stub)
        d.flags = sorted(set(d.flags))

    links: dict[str, DependencyLink] = {}
    wired: set[tuple] = set()
    for side, hcd in (("a", hcd_a), ("b", hcd_b)):
        for lid in sorted(hcd.links):
            link = hcd.links[lid]
            src = _lookup(port_map, side, link.source, comp_b_to)
            dst = _lookup(port_map, side, link.target, comp_b_to)
            if (src, dst) in wired:
                continue
            wired.add((src, dst))
            new = lid if lid not in links else f"{hcd.id}:{lid}"
            if new != lid:
                plan.renamed[f"link:{hcd.id}/{lid}"] = new
            links[new] = DependencyLink(new, src, dst, link.signal_semantics)

    def externals(attr: str) -> list[ExternalPort]:
        merged: dict[str, list] = {}
        for side, hcd in (("a", hcd_a), ("b", hcd_b)):
            for e in getattr(hcd, attr):
                refs = merged.setdefault(e.name, [])
                for ref in e.ports:
                    r = _lookup(port_map, side, ref, comp_b_to)
                    if r not in refs:
                        refs.append(r)
        return [ExternalPort(n, tuple(sorted(refs))) for n, refs in sorted(merged.items())]

    return Hcd.build(
        f"{hcd_a.id}+{hcd_b.id}",
        components.values(),
        links.values(),
        externals("external_inputs"),
        externals("external_outputs"),
        Tlf(f"merge of {hcd_a.id} and {hcd_b.id}"),
        hcd_a.fragment or hcd_b.fragment,
    )


def _lookup(port_map, side: str, ref: tuple[str, str], comp_b_to: dict[str, str]) -> tuple[str, str]:
    # undeclared ports (an invalid input HCD) keep their name so validation can report them
    if (side, *ref) in port_map:
        return port_map[(side, *ref)]
    comp = comp_b_to.get(ref[0], ref[0]) if side == "b" else ref[0]
    return comp, ref[1]
