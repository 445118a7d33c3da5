"""Candidate HCD generation: feasibility, enumeration, rejection, ranking.

Enumeration is attributed subgraph monomorphism with bounded-path edges.
Each template role goes to a distinct uniform circuit of the ROI that meets
the role's node constraints and external bindings; each role edge must be
realised by a directed path of at most ``max_path_len`` connections inside
the ROI. Intermediate circuits on a path are never circuits taken by a
role. A required edge sign is checked against the circuit that originates
the final hop, i.e. the population whose axons reach the target.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

from ..bif import Bif, RoiView, Sign, UniformCircuit, roi_extract, uniform_leaves
from ..binding import BraMapping
from ..hcd import Component, DependencyLink, ExternalPort, Hcd, PortSpec
from . import kernel
from .model import (
    OPERATORS,
    PREDICATE_FORMS,
    REJECTED,
    ROLE_ATTRIBUTES,
    CandidateHcd,
    CandidateSet,
    FunctionTemplate,
    Predicate,
    RejectionRule,
    Role,
    RuleError,
    SoftConstraint,
)

DEFAULT_MAX_LEAVES = 64


class ScidError(ValueError):
    pass


class RoiTooLargeError(ScidError):
    pass


@dataclass(frozen=True)
class Verdict:
    feasible: bool
    unbindable: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {"feasible": self.feasible, "unbindable": list(self.unbindable)}


# -- encoding ----------------------------------------------------------------------


class _Problem:
    """Bitmask encoding of one (ROI, template) pair."""

    def __init__(self, bif: Bif, roi: Sequence[str], template: FunctionTemplate):
        if not roi:
            raise ScidError("empty ROI")
        self.full = bif
        self.view: RoiView = roi_extract(bif, roi)
        self.sub = self.view.bif
        self.template = template
        self.leaves = list(self.view.leaves)
        self.index = {c: i for i, c in enumerate(self.leaves)}
        self.m = len(self.leaves)
        self.full_mask = (1 << self.m) - 1

        self.adj = [0] * self.m
        self.out_conns: dict[str, list[tuple[str, tuple[str, ...]]]] = {c: [] for c in self.leaves}
        for kid, k in self.sub.connections.items():
            if k.input not in self.index:
                continue
            targets = uniform_leaves(self.sub, k.output)
            self.out_conns[k.input].append((kid, targets))
            for v in targets:
                self.adj[self.index[k.input]] |= 1 << self.index[v]
        for lst in self.out_conns.values():
            lst.sort()

        self.sign_masks = {s: 0 for s in Sign}
        for c in self.leaves:
            self.sign_masks[self._uniform(c).sign] |= 1 << self.index[c]

    def _uniform(self, cid: str) -> UniformCircuit:
        c = self.sub.circuits[cid]
        assert isinstance(c, UniformCircuit)
        return c

    def binding_mask(self, binding) -> int:
        mask = 0
        if binding.direction == "afferent":
            for k in self.view.afferents:
                if binding.peer_prefix and not self.full.circuits[k.input].label.startswith(binding.peer_prefix):
                    continue
                for v in uniform_leaves(self.full, k.output):
                    if v in self.index:
                        mask |= 1 << self.index[v]
        else:
            for k in self.view.efferents:
                if binding.peer_prefix and not self.full.circuits[k.output].label.startswith(binding.peer_prefix):
                    continue
                if k.input in self.index:
                    mask |= 1 << self.index[k.input]
        return mask

    def role_mask(self, role: Role) -> int:
        mask = 0
        for c in self.leaves:
            if role_admits(role, self._uniform(c)):
                mask |= 1 << self.index[c]
        for b in self.template.bindings:
            if b.role == role.id:
                mask &= self.binding_mask(b)
        return mask

    def encoded_edges(self) -> list[tuple[int, int, int, int]]:
        t = self.template
        return [
            (
                t.role_index(e.source),
                t.role_index(e.target),
                e.max_path_len,
                self.full_mask if e.sign is None else self.sign_masks[e.sign],
            )
            for e in t.edges
        ]

    def canonical_path(self, a: str, b: str, max_len: int, sign: Sign | None, avoid: set[str]) -> tuple[str, ...] | None:
        """Shortest realising path, ties broken by the connection id sequence."""
        blocked = avoid | {a, b}
        for length in range(1, max_len + 1):
            found = self._extend_via({a}, b, length, sign, blocked, (), frozenset())
            if found is not None:
                return found
        return None

    def _extend_via(self, starts, b, left, sign, blocked, path, visited):
        # past the first hop, each option's origin is an intermediate circuit
        options = sorted((kid, v, targets) for v in starts for kid, targets in self.out_conns[v])
        for kid, v, targets in options:
            if left == 1:
                if b in targets and (sign is None or self._uniform(v).sign is sign):
                    return path + (kid,)
                continue
            seen = visited | {v}
            nxt = {t for t in targets if t not in blocked and t not in seen}
            if nxt:
                found = self._extend_via(nxt, b, left - 1, sign, blocked, path + (kid,), seen)
                if found is not None:
                    return found
        return None


def role_admits(role: Role, circuit: UniformCircuit) -> bool:
    if role.signs is not None and circuit.sign not in role.signs:
        return False
    if role.transmitters is not None and circuit.transmitter not in role.transmitters:
        return False
    if role.min_cell_count is not None:
        if circuit.cell_count is None or circuit.cell_count < role.min_cell_count:
            return False
    return True


# -- step 1-B ------------------------------------------------------------------------


def check_io_feasibility(bif: Bif, roi: Iterable[str], template: FunctionTemplate) -> Verdict:
    roi = tuple(roi)
    if not roi:
        raise ScidError("empty ROI")
    problem = _Problem(bif, roi, template)
    bad = [b.name for b in template.bindings if not problem.binding_mask(b)]
    return Verdict(not bad, tuple(bad))


# -- step 2 ------------------------------------------------------------------------------


def enumerate_candidates(
    bif: Bif,
    roi: Iterable[str],
    template: FunctionTemplate,
    limit: int | None = None,
    *,
    max_leaves: int = DEFAULT_MAX_LEAVES,
    injective: bool = True,
    jobs: int = 1,
    backend: str | None = None,
) -> CandidateSet:
    """Every role assignment consistent with the ROI anatomy, in lexicographic order.

    Order is by the assigned circuit ids taken in role order. With ``jobs > 1``
    the search is split on the first role's circuit and merged back; the
    output does not depend on ``jobs``.
    """
    roi = tuple(roi)
    verdict = check_io_feasibility(bif, roi, template)
    if not verdict.feasible:
        raise ScidError(f"template {template.id!r} cannot bind {', '.join(verdict.unbindable)} to the ROI boundary")
    problem = _Problem(bif, roi, template)
    if problem.m > max_leaves:
        raise RoiTooLargeError(
            f"ROI has {problem.m} uniform circuits, above the bound of {max_leaves}; narrow the ROI"
        )
    masks = [problem.role_mask(r) for r in template.roles]
    edges = problem.encoded_edges()

    def search(first_mask: int):
        local = [first_mask] + masks[1:] if masks else masks
        return kernel.enumerate_assignments(local, edges, problem.adj, problem.m, injective, limit, backend)

    if jobs > 1 and masks:
        parts = _split_mask(masks[0], jobs)
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(search, parts))
        found = sorted(a for part, _ in results for a in part)
        truncated = any(t for _, t in results)
        if limit is not None and len(found) > limit:
            found, truncated = found[:limit], True
    else:
        found, truncated = search(masks[0] if masks else 0)

    roles = template.roles
    out = []
    for combo in found:
        assignment = {r.id: problem.leaves[i] for r, i in zip(roles, combo)}
        used = set(assignment.values())
        realized = {}
        for e in template.edges:
            path = problem.canonical_path(assignment[e.source], assignment[e.target], e.max_path_len, e.sign, used)
            assert path is not None, "kernel accepted an unrealisable edge"
            realized[e.id] = path
        out.append(CandidateHcd(assignment, realized))
    return CandidateSet(problem.view, roi, template, tuple(out), truncated, injective)


def _split_mask(mask: int, parts: int) -> list[int]:
    bits = [i for i in range(mask.bit_length()) if (mask >> i) & 1]
    chunks = [0] * max(1, min(parts, len(bits)))
    for n, b in enumerate(bits):
        chunks[n % len(chunks)] |= 1 << b
    return chunks


# -- step 3 -------------------------------------------------------------------------------


def check_predicate(pred: Predicate, rule_id: str, template: FunctionTemplate | None = None, bif: Bif | None = None) -> None:
    """Raise :class:`RuleError` when ``pred`` is malformed."""
    p = pred.params
    if pred.form not in PREDICATE_FORMS:
        raise RuleError(rule_id, f"unknown predicate form {pred.form!r}")
    roles = {r.id for r in template.roles} if template else None

    def need(keys):
        missing = [k for k in keys if k not in p]
        if missing:
            raise RuleError(rule_id, f"{pred.form} needs {', '.join(missing)}")

    def known_role(r):
        if not isinstance(r, str):
            raise RuleError(rule_id, f"role must be a string, got {r!r}")
        if roles is not None and r not in roles:
            raise RuleError(rule_id, f"unknown role {r!r}")

    if pred.form == "role_attribute":
        need(("role", "attribute", "op", "value"))
        extra = set(p) - {"role", "attribute", "op", "value"}
        known_role(p["role"])
        if p["attribute"] not in ROLE_ATTRIBUTES:
            raise RuleError(rule_id, f"unknown attribute {p['attribute']!r}")
        if p["op"] not in OPERATORS:
            raise RuleError(rule_id, f"unknown operator {p['op']!r}")
        if p["op"] in ("in", "not_in") and not isinstance(p["value"], list):
            raise RuleError(rule_id, f"operator {p['op']} needs a list value")
        if p["op"] in ("lt", "le", "gt", "ge") and (isinstance(p["value"], bool) or not isinstance(p["value"], (int, float))):
            raise RuleError(rule_id, f"operator {p['op']} needs a numeric value")
        if p["op"] == "prefix" and not isinstance(p["value"], str):
            raise RuleError(rule_id, "operator prefix needs a string value")
    elif pred.form == "co_location":
        need(("roles",))
        extra = set(p) - {"roles", "circuit"}
        rs = p["roles"]
        if not isinstance(rs, list) or len(rs) != 2:
            raise RuleError(rule_id, "co_location needs exactly two roles")
        for r in rs:
            known_role(r)
        if "circuit" in p and bif is not None and p["circuit"] not in bif.circuits:
            raise RuleError(rule_id, f"unknown circuit {p['circuit']!r}")
    else:
        need(("from", "to", "max_len"))
        extra = set(p) - {"from", "to", "max_len"}
        known_role(p["from"])
        known_role(p["to"])
        ml = p["max_len"]
        if isinstance(ml, bool) or not isinstance(ml, int) or ml < 1:
            raise RuleError(rule_id, "max_len must be an integer >= 1")
    if extra:
        raise RuleError(rule_id, f"unexpected parameters {', '.join(sorted(extra))}")


def evaluate_predicate(pred: Predicate, candidate: CandidateHcd, cset: CandidateSet) -> bool:
    p = pred.params
    sub = cset.view.bif
    a = candidate.assignment
    if pred.form == "role_attribute":
        result = _compare(_attribute(sub.circuits[a[p["role"]]], p["attribute"]), p["op"], p["value"])
    elif pred.form == "co_location":
        x, y = (a[r] for r in p["roles"])
        if "circuit" in p:
            full = cset.view.bif
            if p["circuit"] not in full.circuits:
                result = False
            else:
                inside = set(uniform_leaves(full, p["circuit"]))
                result = x in inside and y in inside
        else:
            result = bool(set(sub.parents(x)) & set(sub.parents(y)))
    else:
        result = _reachable_within(sub, a[p["from"]], a[p["to"]], p["max_len"])
    return result != pred.negate


def _attribute(c: UniformCircuit, name: str):
    if name == "circuit":
        return c.id
    v = getattr(c, name)
    return v.value if hasattr(v, "value") else v


def _compare(have, op: str, want) -> bool:
    if op == "eq":
        return have == want
    if op == "ne":
        return have != want
    if op == "in":
        return have in want
    if op == "not_in":
        return have not in want
    if op == "prefix":
        return isinstance(have, str) and have.startswith(want)
    if have is None or isinstance(have, (str, bool)):
        return False
    return {"lt": have < want, "le": have <= want, "gt": have > want, "ge": have >= want}[op]


def _reachable_within(bif: Bif, a: str, b: str, max_len: int) -> bool:
    frontier = {a}
    for _ in range(max_len):
        nxt = set()
        for k in bif.connections.values():
            if k.input in frontier:
                nxt.update(uniform_leaves(bif, k.output))
        if b in nxt:
            return True
        frontier = nxt
        if not frontier:
            break
    return False


def apply_rejection_rules(cset: CandidateSet, rules: Sequence[RejectionRule]) -> CandidateSet:
    """Mark each surviving candidate rejected by the first rule whose predicate holds."""
    for rule in rules:
        check_predicate(rule.predicate, rule.id, cset.template, cset.view.bif)
        if not rule.citations:
            raise RuleError(rule.id, "rule cites no reference")
    out = []
    for cand in cset.candidates:
        if cand.surviving:
            hit = next((r for r in rules if evaluate_predicate(r.predicate, cand, cset)), None)
            if hit is not None:
                cand = replace(cand, status=REJECTED, rejected_by=hit.id)
        out.append(cand)
    return cset.with_candidates(out)


def rank_candidates(cset: CandidateSet, soft: Sequence[SoftConstraint] = ()) -> CandidateSet:
    """Score survivors by satisfied soft-constraint weight; best first.

    Ties keep lexicographic assignment order. Rejected candidates follow,
    unchanged.
    """
    for sc in soft:
        check_predicate(sc.predicate, sc.id, cset.template, cset.view.bif)
    scored = []
    for cand in cset.surviving:
        score = sum(sc.weight for sc in soft if evaluate_predicate(sc.predicate, cand, cset))
        scored.append(replace(cand, score=float(score)))
    scored.sort(key=lambda c: (-c.score, c.key))
    return cset.with_candidates(scored + cset.rejected)


# -- materialisation ---------------------------------------------------------------------


class MaterializeError(ScidError):
    pass


def materialize_hcd(candidate: CandidateHcd, cset: CandidateSet, hcd_id: str | None = None) -> tuple[Hcd, BraMapping]:
    """Turn a surviving candidate into an HCD plus its mapping onto the BIF.

    One component per role; one link per realised direct edge. An edge
    realised by a longer path gets a relay component for each intermediate
    circuit, named after the connection entering it.
    """
    if not candidate.surviving:
        raise MaterializeError(f"candidate was rejected by {candidate.rejected_by!r}")
    template = cset.template
    sub = cset.view.bif
    hid = hcd_id or f"{template.id}[" + ",".join(f"{r}={c}" for r, c in candidate.assignment.items()) + "]"

    provided: dict[str, list[PortSpec]] = {r.id: [] for r in template.roles}
    required: dict[str, list[PortSpec]] = {r.id: [] for r in template.roles}

    def add(ports: list[PortSpec], name: str, sem: str) -> str:
        if not any(p.name == name for p in ports):
            ports.append(PortSpec(name, sem))
        return name

    def in_name(comp_provided: list[PortSpec], name: str) -> str:
        return f"{name} in" if any(p.name == name for p in comp_provided) else name

    for e in template.edges:
        add(provided[e.source], e.signal_semantics or e.id, e.signal_semantics)
    for b in template.bindings:
        if b.direction == "efferent":
            add(provided[b.role], b.name, b.name)

    relays: dict[str, str] = {}  # circuit -> relay component id
    relay_ports: dict[str, tuple[list[PortSpec], list[PortSpec]]] = {}
    links: list[DependencyLink] = []
    link_map: dict[str, str] = {}
    pending_required: list[tuple[str, str, str]] = []

    for e in template.edges:
        sem = e.signal_semantics or e.id
        path = candidate.realized_edges[e.id]
        hops = [e.source]
        for i, kid in enumerate(path[:-1]):
            nxt = sub.connections[path[i + 1]].input
            if nxt not in relays:
                relays[nxt] = f"relay:{kid}"
                relay_ports[relays[nxt]] = ([], [])
            hops.append(relays[nxt])
        hops.append(e.target)
        src_port = sem
        for i, kid in enumerate(path):
            a, b = hops[i], hops[i + 1]
            lid = e.id if len(path) == 1 else f"{e.id}#{i + 1}"
            if b in relay_ports:
                rp, rr = relay_ports[b]
                tgt_port = add(rr, f"in:{sem}", sem)
                add(rp, sem, sem)
            else:
                pending_required.append((b, sem, lid))
                tgt_port = None
            links.append(DependencyLink(lid, (a, src_port), (b, tgt_port or ""), e.signal_semantics))
            link_map[lid] = kid

    target_names: dict[str, str] = {}
    for comp, sem, lid in pending_required:
        name = in_name(provided[comp], sem)
        add(required[comp], name, sem)
        target_names[lid] = name
    links = [
        l if l.target[1] else DependencyLink(l.id, l.source, (l.target[0], target_names[l.id]), l.signal_semantics)
        for l in links
    ]

    inputs: dict[str, list[tuple[str, str]]] = {}
    outputs: dict[str, list[tuple[str, str]]] = {}
    for b in template.bindings:
        if b.direction == "afferent":
            name = in_name(provided[b.role], b.name)
            add(required[b.role], name, b.name)
            inputs.setdefault(b.name, []).append((b.role, name))
        else:
            outputs.setdefault(b.name, []).append((b.role, b.name))

    components = []
    for r in template.roles:
        prov = provided[r.id] or [PortSpec(r.function_label, r.function_label)]
        components.append(Component(r.id, r.function_label, tuple(prov), tuple(required[r.id]), (), r.stub_ref))
    for circ, rid in relays.items():
        rp, rr = relay_ports[rid]
        label = f"{rp[0].name} relay" if len(rp) == 1 else "relay"
        components.append(Component(rid, label, tuple(rp), tuple(rr), (), "relay"))

    hcd = Hcd.build(
        hid,
        components,
        links,
        [ExternalPort(n, tuple(p)) for n, p in inputs.items()],
        [ExternalPort(n, tuple(p)) for n, p in outputs.items()],
        tlf=template.tlf,
    )
    component_map = dict(candidate.assignment)
    component_map.update({rid: circ for circ, rid in relays.items()})
    mapping = BraMapping(hid, sub.id, frozenset(cset.roi), component_map, link_map)
    return hcd, mapping


