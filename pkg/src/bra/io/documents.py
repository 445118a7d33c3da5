"""JSON documents: strict parsing into domain objects and canonical writing.

Canonical form is UTF-8, LF line endings, two-space indentation, sorted
keys, and element lists sorted by id (except where order carries meaning:
template roles, rules, claims, references). For a canonical input,
``serialize(parse(text)) == text`` byte for byte.
"""

from __future__ import annotations

from typing import Any, Callable

from ..bif import (
    Bif,
    Circuit,
    Citation,
    Connection,
    Hierarchy,
    Sign,
    Species,
    Transmitter,
    UniformCircuit,
)
from ..binding import BraMapping
from ..harness import GOAL_KINDS, StubSpec, check_goal_predicate, check_stub_params
from ..hcd import Claim, Component, DependencyLink, ExternalPort, GoalPredicate, Hcd, PortSpec, Tlf
from ..scid.engine import check_predicate
from ..scid.model import (
    FINDING_FIELDS,
    ExternalBinding,
    FunctionTemplate,
    Predicate,
    RejectionRule,
    Role,
    RoleEdge,
    RuleError,
    SoftConstraint,
    TemplateError,
)
from .jsonloc import FORMAT_VERSION, ParseError, Reader, canonical_json, loads, plain

HEADER = ("format_version", "kind")


def _envelope(r: Reader, doc: Any, kind: str, required=(), optional=()) -> dict:
    doc = r.obj(doc, set(HEADER) | set(required), optional)
    if doc["format_version"] != FORMAT_VERSION:
        raise r.error(doc, "format_version", f"unsupported format_version {doc['format_version']!r}")
    if doc["kind"] != kind:
        raise r.error(doc, "kind", f"expected kind {kind!r}, got {doc['kind']!r}")
    return doc


def _head(kind: str) -> dict:
    return {"format_version": FORMAT_VERSION, "kind": kind}


def _unique_ids(r: Reader, items: list, key: str, what: str) -> None:
    seen: set[str] = set()
    for it in items:
        if isinstance(it, dict) and isinstance(it.get(key), str):
            if it[key] in seen:
                raise r.error(it, key, f"duplicate {what} id {it[key]!r}", it[key])
            seen.add(it[key])


# -- citations ---------------------------------------------------------------------


def _citations(r: Reader, obj: dict, key: str, element: str) -> tuple[Citation, ...]:
    out = []
    for c in r.list(obj, key, element, default=[]):
        c = r.obj(c, {"key"}, {"peer_reviewed"}, parent=obj, key=key, element=element)
        out.append(Citation(r.str(c, "key", element, nonempty=True), r.bool(c, "peer_reviewed", element, default=True)))
    return tuple(out)


def _citations_out(refs) -> list[dict]:
    return [{"key": c.key, "peer_reviewed": c.peer_reviewed} for c in refs]


# -- BIF -----------------------------------------------------------------------------


def bif_from_json(doc: Any, r: Reader) -> Bif:
    doc = _envelope(r, doc, "bif", {"id", "circuits", "connections"}, {"version", "provenance"})
    circuits = r.list(doc, "circuits")
    connections = r.list(doc, "connections")
    _unique_ids(r, circuits, "id", "circuit")
    _unique_ids(r, connections, "id", "connection")
    cs = []
    for c in circuits:
        if not isinstance(c, dict):
            raise r.error(doc, "circuits", "expected a list of objects")
        cid = c.get("id") if isinstance(c.get("id"), str) else None
        kind = c.get("type")
        common = {"id", "label", "species", "type"}
        if kind == "uniform":
            c = r.obj(c, common | {"sign", "transmitter"}, {"cell_count", "references", "neocortical"}, element=cid)
            cs.append(
                UniformCircuit(
                    r.str(c, "id", cid, nonempty=True),
                    r.str(c, "label", cid),
                    r.enum(c, "species", Species, cid),
                    r.enum(c, "sign", Sign, cid),
                    r.enum(c, "transmitter", Transmitter, cid),
                    r.int(c, "cell_count", cid, minimum=1, nullable=True, default=None),
                    _citations(r, c, "references", cid),
                    r.bool(c, "neocortical", cid, default=False),
                )
            )
        elif kind == "circuit":
            c = r.obj(c, common | {"members"}, {"references", "neocortical"}, element=cid)
            cs.append(
                Circuit(
                    r.str(c, "id", cid, nonempty=True),
                    r.str(c, "label", cid),
                    r.enum(c, "species", Species, cid),
                    frozenset(r.str_list(c, "members", cid, unique=True)),
                    _citations(r, c, "references", cid),
                    r.bool(c, "neocortical", cid, default=False),
                )
            )
        else:
            raise r.error(c, "type" if "type" in c else None, "type must be 'uniform' or 'circuit'", cid)
    ks = []
    for k in connections:
        kid = k.get("id") if isinstance(k, dict) and isinstance(k.get("id"), str) else None
        k = r.obj(
            k,
            {"id", "input", "output", "species", "transmitter", "hierarchy"},
            {"size", "references"},
            parent=doc,
            key="connections",
            element=kid,
        )
        ks.append(
            Connection(
                r.str(k, "id", kid, nonempty=True),
                r.str(k, "input", kid),
                r.str(k, "output", kid),
                r.enum(k, "species", Species, kid),
                r.enum(k, "transmitter", Transmitter, kid),
                r.enum(k, "hierarchy", Hierarchy, kid),
                r.int(k, "size", kid, minimum=1, nullable=True, default=None),
                _citations(r, k, "references", kid),
            )
        )
    ids = {c.id for c in cs}
    for k, raw in zip(ks, connections):
        if k.id in ids:
            raise r.error(raw, "id", f"id {k.id!r} is used by a circuit and a connection", k.id)
    return Bif.build(
        r.str(doc, "id", nonempty=True),
        cs,
        ks,
        r.str(doc, "version", default=""),
        r.str(doc, "provenance", default=""),
    )


def bif_to_dict(bif: Bif) -> dict:
    circuits = []
    for cid in sorted(bif.circuits):
        c = bif.circuits[cid]
        d: dict[str, Any] = {
            "id": c.id,
            "label": c.label,
            "species": c.species.value,
            "references": _citations_out(c.references),
            "neocortical": c.neocortical,
        }
        if isinstance(c, UniformCircuit):
            d.update(type="uniform", sign=c.sign.value, transmitter=c.transmitter.value, cell_count=c.cell_count)
        else:
            d.update(type="circuit", members=sorted(c.members))
        circuits.append(d)
    connections = [
        {
            "id": k.id,
            "input": k.input,
            "output": k.output,
            "species": k.species.value,
            "transmitter": k.transmitter.value,
            "hierarchy": k.hierarchy.value,
            "size": k.size,
            "references": _citations_out(k.references),
        }
        for _, k in sorted(bif.connections.items())
    ]
    return {
        **_head("bif"),
        "id": bif.id,
        "version": bif.version,
        "provenance": bif.provenance,
        "circuits": circuits,
        "connections": connections,
    }


# -- HCD -------------------------------------------------------------------------------


def _port_ref(r: Reader, v: Any, parent: dict, key: str, element: str | None) -> tuple[str, str]:
    v = r.obj(v, {"component", "port"}, parent=parent, key=key, element=element)
    return r.str(v, "component", element), r.str(v, "port", element)


def _ports(r: Reader, obj: dict, key: str, element: str | None) -> tuple[PortSpec, ...]:
    out = []
    for p in r.list(obj, key, element, default=[]):
        p = r.obj(p, {"name"}, {"signal_semantics"}, parent=obj, key=key, element=element)
        out.append(PortSpec(r.str(p, "name", element, nonempty=True), r.str(p, "signal_semantics", element, default="")))
    return tuple(out)


def goal_from_json(r: Reader, v: Any, parent: dict, key: str, element: str | None = None) -> GoalPredicate | None:
    if v is None:
        return None
    v = r.obj(v, {"kind"}, {"params"}, parent=parent, key=key, element=element)
    kind = r.str(v, "kind", element)
    if kind not in GOAL_KINDS:
        raise r.error(v, "kind", f"unknown goal predicate {kind!r}", element)
    params = v.get("params", {})
    if not isinstance(params, dict):
        raise r.error(v, "params", "expected an object", element)
    pred = GoalPredicate(kind, plain(params))
    try:
        check_goal_predicate(pred)
    except ValueError as exc:
        raise r.error(v, "params", str(exc), element) from None
    return pred


def goal_to_dict(pred: GoalPredicate | None) -> dict | None:
    if pred is None:
        return None
    return {"kind": pred.kind, "params": dict(pred.params)}


def _tlf(r: Reader, doc: dict) -> Tlf:
    if "tlf" not in doc:
        return Tlf("")
    t = r.obj(doc["tlf"], {"goal"}, {"predicate"}, parent=doc, key="tlf")
    return Tlf(r.str(t, "goal"), goal_from_json(r, t.get("predicate"), t, "predicate"))


def _tlf_out(tlf: Tlf) -> dict:
    return {"goal": tlf.goal, "predicate": goal_to_dict(tlf.predicate)}


def hcd_from_json(doc: Any, r: Reader) -> Hcd:
    doc = _envelope(
        r, doc, "hcd", {"id", "components", "links"}, {"tlf", "external_inputs", "external_outputs", "fragment"}
    )
    comps = r.list(doc, "components")
    links = r.list(doc, "links")
    _unique_ids(r, comps, "id", "component")
    _unique_ids(r, links, "id", "link")
    cs = []
    for c in comps:
        cid = c.get("id") if isinstance(c, dict) and isinstance(c.get("id"), str) else None
        c = r.obj(
            c,
            {"id", "function_label"},
            {"provided_ports", "required_ports", "behavior_claims", "stub_ref"},
            parent=doc,
            key="components",
            element=cid,
        )
        claims = []
        for cl in r.list(c, "behavior_claims", cid, default=[]):
            cl = r.obj(cl, {"id", "text"}, {"sign"}, parent=c, key="behavior_claims", element=cid)
            claims.append(
                Claim(r.str(cl, "id", cid, nonempty=True), r.str(cl, "text", cid), r.enum(cl, "sign", Sign, cid, nullable=True, default=None))
            )
        cs.append(
            Component(
                r.str(c, "id", cid, nonempty=True),
                r.str(c, "function_label", cid),
                _ports(r, c, "provided_ports", cid),
                _ports(r, c, "required_ports", cid),
                tuple(claims),
                r.str(c, "stub_ref", cid, default=None),
            )
        )
    ls = []
    for link in links:
        lid = link.get("id") if isinstance(link, dict) and isinstance(link.get("id"), str) else None
        link = r.obj(link, {"id", "source", "target"}, {"signal_semantics"}, parent=doc, key="links", element=lid)
        ls.append(
            DependencyLink(
                r.str(link, "id", lid, nonempty=True),
                _port_ref(r, link["source"], link, "source", lid),
                _port_ref(r, link["target"], link, "target", lid),
                r.str(link, "signal_semantics", lid, default=""),
            )
        )

    def externals(key: str) -> list[ExternalPort]:
        out = []
        items = r.list(doc, key, default=[])
        _unique_ids(r, items, "name", "external port")
        for e in items:
            e = r.obj(e, {"name"}, {"ports"}, parent=doc, key=key)
            name = r.str(e, "name", nonempty=True)
            refs = tuple(_port_ref(r, p, e, "ports", name) for p in r.list(e, "ports", name, default=[]))
            out.append(ExternalPort(name, refs))
        return out

    return Hcd.build(
        r.str(doc, "id", nonempty=True),
        cs,
        ls,
        externals("external_inputs"),
        externals("external_outputs"),
        _tlf(r, doc),
        r.bool(doc, "fragment", default=False),
    )


def _ref_out(ref: tuple[str, str]) -> dict:
    return {"component": ref[0], "port": ref[1]}


def hcd_to_dict(hcd: Hcd) -> dict:
    def ports(ps):
        return [{"name": p.name, "signal_semantics": p.signal_semantics} for p in ps]

    return {
        **_head("hcd"),
        "id": hcd.id,
        "tlf": _tlf_out(hcd.tlf),
        "fragment": hcd.fragment,
        "components": [
            {
                "id": c.id,
                "function_label": c.function_label,
                "provided_ports": ports(c.provided_ports),
                "required_ports": ports(c.required_ports),
                "behavior_claims": [
                    {"id": cl.id, "text": cl.text, "sign": cl.sign.value if cl.sign else None}
                    for cl in c.behavior_claims
                ],
                "stub_ref": c.stub_ref,
            }
            for _, c in sorted(hcd.components.items())
        ],
        "links": [
            {
                "id": link.id,
                "source": _ref_out(link.source),
                "target": _ref_out(link.target),
                "signal_semantics": link.signal_semantics,
            }
            for _, link in sorted(hcd.links.items())
        ],
        "external_inputs": [
            {"name": e.name, "ports": [_ref_out(p) for p in e.ports]} for e in sorted(hcd.external_inputs, key=lambda e: e.name)
        ],
        "external_outputs": [
            {"name": e.name, "ports": [_ref_out(p) for p in e.ports]} for e in sorted(hcd.external_outputs, key=lambda e: e.name)
        ],
    }


# -- mapping ------------------------------------------------------------------------------


def mapping_from_json(doc: Any, r: Reader) -> BraMapping:
    doc = _envelope(r, doc, "mapping", {"hcd_id", "bif_id", "roi", "component_map", "link_map"}, {"evidence", "id"})
    evidence = {}
    ev = doc.get("evidence", {})
    if not isinstance(ev, dict):
        raise r.error(doc, "evidence", "expected an object")
    for key in sorted(ev):
        if not isinstance(ev[key], list):
            raise r.error(ev, key, "expected a list of citations", key)
        evidence[key] = _citations(r, ev, key, key)
    return BraMapping(
        r.str(doc, "hcd_id", nonempty=True),
        r.str(doc, "bif_id", nonempty=True),
        frozenset(r.str_list(doc, "roi", unique=True)),
        dict(sorted(r.str_map(doc, "component_map").items())),
        dict(sorted(r.str_map(doc, "link_map").items())),
        evidence,
        r.str(doc, "id", default=""),
    )


def mapping_to_dict(m: BraMapping) -> dict:
    return {
        **_head("mapping"),
        "id": m.id,
        "hcd_id": m.hcd_id,
        "bif_id": m.bif_id,
        "roi": sorted(m.roi),
        "component_map": dict(sorted(m.component_map.items())),
        "link_map": dict(sorted(m.link_map.items())),
        "evidence": {k: _citations_out(v) for k, v in sorted(m.evidence.items())},
    }


# -- template -----------------------------------------------------------------------------


def template_from_json(doc: Any, r: Reader) -> FunctionTemplate:
    doc = _envelope(r, doc, "template", {"id", "roles"}, {"role_edges", "external_bindings", "tlf"})
    roles_raw = r.list(doc, "roles")
    _unique_ids(r, roles_raw, "id", "role")
    roles = []
    for ro in roles_raw:
        rid = ro.get("id") if isinstance(ro, dict) and isinstance(ro.get("id"), str) else None
        ro = r.obj(
            ro,
            {"id", "function_label"},
            {"signs", "transmitters", "min_cell_count", "stub_ref"},
            parent=doc,
            key="roles",
            element=rid,
        )
        roles.append(
            Role(
                r.str(ro, "id", rid, nonempty=True),
                r.str(ro, "function_label", rid),
                _enum_set(r, ro, "signs", Sign, rid),
                _enum_set(r, ro, "transmitters", Transmitter, rid),
                r.int(ro, "min_cell_count", rid, minimum=0, nullable=True, default=None),
                r.str(ro, "stub_ref", rid, default=None),
            )
        )
    edges_raw = r.list(doc, "role_edges", default=[])
    _unique_ids(r, edges_raw, "id", "role edge")
    edges = []
    for e in edges_raw:
        eid = e.get("id") if isinstance(e, dict) and isinstance(e.get("id"), str) else None
        e = r.obj(e, {"id", "from", "to"}, {"sign", "max_path_len", "signal_semantics"}, parent=doc, key="role_edges", element=eid)
        edges.append(
            RoleEdge(
                r.str(e, "id", eid, nonempty=True),
                r.str(e, "from", eid),
                r.str(e, "to", eid),
                r.enum(e, "sign", Sign, eid, nullable=True, default=None),
                r.int(e, "max_path_len", eid, minimum=1, default=1),
                r.str(e, "signal_semantics", eid, default=""),
            )
        )
    bindings = []
    for b in r.list(doc, "external_bindings", default=[]):
        b = r.obj(b, {"name", "role", "direction"}, {"peer_prefix"}, parent=doc, key="external_bindings")
        name = r.str(b, "name", nonempty=True)
        direction = r.str(b, "direction", name)
        if direction not in ("afferent", "efferent"):
            raise r.error(b, "direction", "direction must be 'afferent' or 'efferent'", name)
        bindings.append(ExternalBinding(name, r.str(b, "role", name), direction, r.str(b, "peer_prefix", name, default=None)))
    try:
        return FunctionTemplate(r.str(doc, "id", nonempty=True), tuple(roles), tuple(edges), tuple(bindings), _tlf(r, doc))
    except TemplateError as exc:
        raise r.error(doc, "roles", str(exc), doc.get("id")) from None


def _enum_set(r: Reader, obj: dict, key: str, enum, element):
    if key not in obj or obj[key] is None:
        return None
    items = r.str_list(obj, key, element, unique=True)
    out = set()
    for v in items:
        try:
            out.add(enum(v))
        except ValueError:
            raise r.error(obj, key, f"{v!r} is not one of {', '.join(e.value for e in enum)}", element) from None
    return frozenset(out)


def _enum_set_out(s) -> list[str] | None:
    return None if s is None else sorted(e.value for e in s)


def template_to_dict(t: FunctionTemplate) -> dict:
    return {
        **_head("template"),
        "id": t.id,
        "tlf": _tlf_out(t.tlf),
        "roles": [
            {
                "id": ro.id,
                "function_label": ro.function_label,
                "signs": _enum_set_out(ro.signs),
                "transmitters": _enum_set_out(ro.transmitters),
                "min_cell_count": ro.min_cell_count,
                "stub_ref": ro.stub_ref,
            }
            for ro in t.roles
        ],
        "role_edges": [
            {
                "id": e.id,
                "from": e.source,
                "to": e.target,
                "sign": e.sign.value if e.sign else None,
                "max_path_len": e.max_path_len,
                "signal_semantics": e.signal_semantics,
            }
            for e in t.edges
        ],
        "external_bindings": [
            {"name": b.name, "role": b.role, "direction": b.direction, "peer_prefix": b.peer_prefix} for b in t.bindings
        ],
    }


# -- rules ----------------------------------------------------------------------------------


def _predicate(r: Reader, v: Any, parent: dict, key: str, element: str) -> Predicate:
    v = r.obj(v, {"form"}, {"params", "negate"}, parent=parent, key=key, element=element)
    params = v.get("params", {})
    if not isinstance(params, dict):
        raise r.error(v, "params", "expected an object", element)
    pred = Predicate(r.str(v, "form", element), plain(params), r.bool(v, "negate", element, default=False))
    try:
        check_predicate(pred, element)
    except RuleError as exc:
        raise r.error(v, "params", str(exc), element) from None
    return pred


def _predicate_out(p: Predicate) -> dict:
    return {"form": p.form, "params": dict(p.params), "negate": p.negate}


RuleSet = tuple[str, tuple[RejectionRule, ...], tuple[SoftConstraint, ...]]


def rules_from_json(doc: Any, r: Reader) -> RuleSet:
    doc = _envelope(r, doc, "rules", {"id", "rules"}, {"soft_constraints"})
    raw = r.list(doc, "rules")
    _unique_ids(r, raw, "id", "rule")
    rules = []
    for ru in raw:
        rid = ru.get("id") if isinstance(ru, dict) and isinstance(ru.get("id"), str) else None
        ru = r.obj(ru, {"id", "description", "field_of_finding", "predicate", "citations"}, parent=doc, key="rules", element=rid)
        field = r.str(ru, "field_of_finding", rid)
        if field not in FINDING_FIELDS:
            raise r.error(ru, "field_of_finding", f"{field!r} is not one of {', '.join(FINDING_FIELDS)}", rid)
        cites = _citations(r, ru, "citations", rid)
        if not cites:
            raise r.error(ru, "citations", "a rule must cite at least one reference", rid)
        rules.append(
            RejectionRule(
                r.str(ru, "id", rid, nonempty=True),
                r.str(ru, "description", rid),
                field,
                _predicate(r, ru["predicate"], ru, "predicate", rid),
                cites,
            )
        )
    soft_raw = r.list(doc, "soft_constraints", default=[])
    _unique_ids(r, soft_raw, "id", "soft constraint")
    soft = []
    for sc in soft_raw:
        sid = sc.get("id") if isinstance(sc, dict) and isinstance(sc.get("id"), str) else None
        sc = r.obj(sc, {"id", "predicate"}, {"weight"}, parent=doc, key="soft_constraints", element=sid)
        soft.append(
            SoftConstraint(
                r.str(sc, "id", sid, nonempty=True),
                _predicate(r, sc["predicate"], sc, "predicate", sid),
                r.number(sc, "weight", sid, default=1.0),
            )
        )
    return r.str(doc, "id", nonempty=True), tuple(rules), tuple(soft)


def rules_to_dict(rs: RuleSet) -> dict:
    rid, rules, soft = rs
    return {
        **_head("rules"),
        "id": rid,
        "rules": [
            {
                "id": ru.id,
                "description": ru.description,
                "field_of_finding": ru.field_of_finding,
                "predicate": _predicate_out(ru.predicate),
                "citations": _citations_out(ru.citations),
            }
            for ru in rules
        ],
        "soft_constraints": [{"id": s.id, "predicate": _predicate_out(s.predicate), "weight": s.weight} for s in soft],
    }


# -- stubs ------------------------------------------------------------------------------


StubLibrary = tuple[dict[str, StubSpec], dict[str, str]]


def stubs_from_json(doc: Any, r: Reader) -> StubLibrary:
    doc = _envelope(r, doc, "stubs", {"stubs"}, {"bindings"})
    raw = r.list(doc, "stubs")
    _unique_ids(r, raw, "id", "stub")
    specs = {}
    for s in raw:
        sid = s.get("id") if isinstance(s, dict) and isinstance(s.get("id"), str) else None
        s = r.obj(s, {"id", "kind"}, {"params"}, parent=doc, key="stubs", element=sid)
        sid = r.str(s, "id", sid, nonempty=True)
        params = s.get("params", {})
        if not isinstance(params, dict):
            raise r.error(s, "params", "expected an object", sid)
        kind = r.str(s, "kind", sid)
        params = plain(params)
        try:
            check_stub_params(kind, params, sid or "")
        except ValueError as exc:
            raise r.error(s, "params" if "params" in s else "kind", str(exc), sid) from None
        specs[sid] = StubSpec(sid, kind, params)
    bindings = r.str_map(doc, "bindings", default={})
    for comp, ref in bindings.items():
        if ref not in specs:
            raise r.error(doc["bindings"], comp, f"unknown stub {ref!r}", comp)
    return specs, dict(sorted(bindings.items()))


def stubs_to_dict(lib: StubLibrary) -> dict:
    specs, bindings = lib
    return {
        **_head("stubs"),
        "stubs": [specs[k].to_dict() for k in sorted(specs)],
        "bindings": dict(sorted(bindings.items())),
    }


# -- entry points -----------------------------------------------------------------------


def _parser(fn: Callable[[Any, Reader], Any]) -> Callable[[bytes | str], Any]:
    def parse(data: bytes | str):
        value, text = loads(data)
        try:
            return fn(value, Reader(text))
        except ParseError:
            raise
        except (ValueError, TypeError, KeyError, AttributeError) as exc:
            raise ParseError(f"invalid document: {exc}", 1, 1) from None

    parse.__name__ = fn.__name__.replace("_from_json", "")
    return parse


parse_bif_json = _parser(bif_from_json)
parse_hcd_json = _parser(hcd_from_json)
parse_mapping_json = _parser(mapping_from_json)
parse_template_json = _parser(template_from_json)
parse_rules_json = _parser(rules_from_json)
parse_stubs_json = _parser(stubs_from_json)


def serialize_bif(bif: Bif) -> str:
    return canonical_json(bif_to_dict(bif))


def serialize_hcd(hcd: Hcd) -> str:
    return canonical_json(hcd_to_dict(hcd))


def serialize_mapping(m: BraMapping) -> str:
    return canonical_json(mapping_to_dict(m))


def serialize_template(t: FunctionTemplate) -> str:
    return canonical_json(template_to_dict(t))


def serialize_rules(rs: RuleSet) -> str:
    return canonical_json(rules_to_dict(rs))


def serialize_stubs(lib: StubLibrary) -> str:
    return canonical_json(stubs_to_dict(lib))


PARSERS = {
    "bif": parse_bif_json,
    "hcd": parse_hcd_json,
    "mapping": parse_mapping_json,
    "template": parse_template_json,
    "rules": parse_rules_json,
    "stubs": parse_stubs_json,
}

TO_DICT = {
    "bif": bif_to_dict,
    "hcd": hcd_to_dict,
    "mapping": mapping_to_dict,
    "template": template_to_dict,
    "rules": rules_to_dict,
    "stubs": stubs_to_dict,
}


def parse_document(data: bytes | str) -> tuple[str, Any]:
    """Parse any known document, dispatching on its ``kind`` field."""
    value, text = loads(data)
    kind = value.get("kind") if isinstance(value, dict) else None
    if kind not in PARSERS:
        raise ParseError(f"unknown document kind {kind!r}", 1, 1, field="kind")
    return kind, PARSERS[kind](text)


# -- fidelity inputs -----------------------------------------------------------------


def impl_graph_from_json(doc: Any, r: Reader):
    from ..fidelity import ImplGraph

    doc = _envelope(r, doc, "impl_graph", {"id", "bif_id", "nodes"}, {"edges", "mapping"})
    nodes = r.str_list(doc, "nodes", unique=True)
    edges = []
    for e in r.list(doc, "edges", default=[]):
        e = r.obj(e, {"from", "to"}, parent=doc, key="edges")
        edges.append((r.str(e, "from"), r.str(e, "to")))
    mapping = r.str_map(doc, "mapping", default={})
    for n in mapping:
        if n not in nodes:
            raise r.error(doc["mapping"], n, f"mapping names unknown node {n!r}", n)
    for a, b in edges:
        for end in (a, b):
            if end not in nodes:
                raise r.error(doc, "edges", f"edge names unknown node {end!r}", end)
    return ImplGraph(r.str(doc, "id", nonempty=True), r.str(doc, "bif_id"), tuple(nodes), tuple(edges), mapping)


def behavior_constraints_from_json(doc: Any, r: Reader):
    from ..fidelity import BehaviorConstraint

    doc = _envelope(r, doc, "behavior_constraints", {"constraints"})
    raw = r.list(doc, "constraints")
    _unique_ids(r, raw, "id", "constraint")
    out = []
    for c in raw:
        cid = c.get("id") if isinstance(c, dict) and isinstance(c.get("id"), str) else None
        c = r.obj(c, {"id", "link", "predicate"}, {"k"}, parent=doc, key="constraints", element=cid)
        cid = r.str(c, "id", cid, nonempty=True)
        pred = r.str(c, "predicate", cid)
        if pred not in ("before", "within"):
            raise r.error(c, "predicate", "predicate must be 'before' or 'within'", cid)
        out.append(BehaviorConstraint(cid, r.str(c, "link", cid), pred, r.int(c, "k", cid, minimum=1, default=1)))
    return out


def task_suite_from_json(doc: Any, r: Reader):
    from ..fidelity import Task
    from ..harness import Schedule

    doc = _envelope(r, doc, "task_suite", {"tasks"})
    raw = r.list(doc, "tasks")
    _unique_ids(r, raw, "id", "task")
    out = []
    for t in raw:
        tid = t.get("id") if isinstance(t, dict) and isinstance(t.get("id"), str) else None
        t = r.obj(t, {"id", "schedule", "goal", "steps"}, {"seed"}, parent=doc, key="tasks", element=tid)
        tid = r.str(t, "id", tid, nonempty=True)
        sched = t["schedule"]
        if not isinstance(sched, dict):
            raise r.error(t, "schedule", "expected an object of input series", tid)
        series = {}
        for name in sorted(sched):
            vals = r.list(sched, name, tid)
            for v in vals:
                if isinstance(v, bool) or not isinstance(v, (int, float)):
                    raise r.error(sched, name, "expected a list of numbers", tid)
            series[name] = tuple(float(v) for v in vals)
        goal = goal_from_json(r, t["goal"], t, "goal", tid)
        if goal is None:
            raise r.error(t, "goal", "a task needs a goal predicate", tid)
        out.append(Task(tid, Schedule(series), goal, r.int(t, "steps", tid, minimum=1), r.int(t, "seed", tid, default=0)))
    return out


def milestones_from_json(doc: Any, r: Reader) -> list[tuple[str, str]]:
    doc = _envelope(r, doc, "milestones", {"milestones"})
    out = []
    for m in r.list(doc, "milestones"):
        m = r.obj(m, {"component", "event"}, parent=doc, key="milestones")
        event = r.str(m, "event")
        if event != "fires" and not (event.startswith("port:") and len(event) > 5):
            raise r.error(m, "event", "event must be 'fires' or 'port:<name>'")
        out.append((r.str(m, "component"), event))
    return out


def component_scores_from_json(doc: Any, r: Reader) -> dict[str, dict[str, float]]:
    """Per-component fidelity figures, read from a fidelity report."""
    if not isinstance(doc, dict):
        raise r.error(doc, None, "expected an object")
    if doc.get("kind") != "fidelity_report":
        raise r.error(doc, "kind", "expected a fidelity_report document")
    comps = doc.get("components")
    if not isinstance(comps, dict):
        raise r.error(doc, "components", "expected per-component scores")
    out = {}
    for cid in sorted(comps):
        c = r.obj(comps[cid], {"structural", "functional"}, parent=comps, key=cid, element=cid)
        out[cid] = {"structural": float(r.number(c, "structural", cid)), "functional": float(r.number(c, "functional", cid))}
    return out


parse_impl_graph_json = _parser(impl_graph_from_json)
parse_behavior_constraints_json = _parser(behavior_constraints_from_json)
parse_task_suite_json = _parser(task_suite_from_json)
parse_milestones_json = _parser(milestones_from_json)
parse_component_scores_json = _parser(component_scores_from_json)


def parse_report_json(data: bytes | str) -> dict:
    """Any tool output document: must carry ``format_version`` and ``kind``."""
    value, text = loads(data)
    r = Reader(text)
    if not isinstance(value, dict):
        raise r.error(value, None, "expected an object")
    for key in HEADER:
        if not isinstance(value.get(key), str):
            raise r.error(value, key, f"missing or invalid {key!r}")
    if value["format_version"] != FORMAT_VERSION:
        raise r.error(value, "format_version", f"unsupported format_version {value['format_version']!r}")
    return plain(value)
