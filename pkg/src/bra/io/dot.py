"""Graphviz DOT export with deterministic ordering."""

from __future__ import annotations

from ..bif import Bif, UniformCircuit
from ..binding import BraMapping
from ..hcd import Hcd
from ..scid.model import CandidateSet


def _q(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n") + '"'


def _attrs(**kw) -> str:
    if not kw:
        return ""
    return " [" + ", ".join(f"{k}={_q(str(v))}" for k, v in sorted(kw.items())) + "]"


def _circuit_label(c) -> str:
    if isinstance(c, UniformCircuit):
        return f"{c.label}\n{c.sign.value} / {c.transmitter.value}"
    return c.label


def _bif_lines(bif: Bif, prefix: str = "", skip: set[str] = frozenset()) -> tuple[list[str], list[str]]:
    nodes, edges = [], []
    for cid in sorted(bif.circuits):
        if cid in skip:
            continue
        c = bif.circuits[cid]
        if isinstance(c, UniformCircuit):
            nodes.append(f"  {_q(prefix + cid)}{_attrs(label=_circuit_label(c), shape='ellipse')};")
        else:
            nodes.append(f"  {_q(prefix + cid)}{_attrs(label=c.label, shape='folder')};")
    for cid in sorted(bif.circuits):
        c = bif.circuits[cid]
        if not isinstance(c, UniformCircuit):
            for m in sorted(c.members):
                edges.append(f"  {_q(prefix + cid)} -> {_q(prefix + m)}{_attrs(arrowhead='none', style='dotted')};")
    for kid in sorted(bif.connections):
        k = bif.connections[kid]
        edges.append(f"  {_q(prefix + k.input)} -> {_q(prefix + k.output)}{_attrs(label=kid)};")
    return nodes, edges


def _hcd_lines(hcd: Hcd, prefix: str = "", skip: set[str] = frozenset()) -> tuple[list[str], list[str]]:
    nodes, edges = [], []
    for cid in sorted(hcd.components):
        if cid in skip:
            continue
        c = hcd.components[cid]
        nodes.append(f"  {_q(prefix + cid)}{_attrs(label=c.function_label or cid, shape='box')};")
    for kind, ports in (("input", hcd.external_inputs), ("output", hcd.external_outputs)):
        for e in sorted(ports, key=lambda e: e.name):
            nodes.append(f"  {_q(f'{kind}:{e.name}')}{_attrs(label=e.name, shape='plaintext')};")
            for comp, port in sorted(e.ports):
                a, b = (f"{kind}:{e.name}", prefix + comp) if kind == "input" else (prefix + comp, f"{kind}:{e.name}")
                edges.append(f"  {_q(a)} -> {_q(b)}{_attrs(label=port, style='dashed')};")
    for lid in sorted(hcd.links):
        link = hcd.links[lid]
        edges.append(
            f"  {_q(prefix + link.source[0])} -> {_q(prefix + link.target[0])}"
            f"{_attrs(label=link.signal_semantics or lid)};"
        )
    return nodes, edges


def _graph(name: str, body: list[str]) -> str:
    return "\n".join([f"digraph {_q(name)} {{", *body, "}"]) + "\n"


def export_dot(doc: Bif | Hcd | CandidateSet, mapping: BraMapping | None = None, bif: Bif | None = None) -> str:
    """Render a BIF, an HCD, an HCD paired with its BIF, or a candidate set.

    With ``mapping`` and ``bif`` an HCD is drawn next to the BIF and every
    mapped component shares a cluster with its circuit.
    """
    if isinstance(doc, Bif):
        nodes, edges = _bif_lines(doc)
        return _graph(doc.id, ["  rankdir=LR;", *nodes, *edges])
    if isinstance(doc, CandidateSet):
        return _candidates(doc)
    if mapping is None:
        nodes, edges = _hcd_lines(doc)
        return _graph(doc.id, ["  rankdir=LR;", *nodes, *edges])
    if bif is None:
        raise ValueError("a mapping needs the BIF it refers to")
    return _paired(doc, mapping, bif)


def _paired(hcd: Hcd, mapping: BraMapping, bif: Bif) -> str:
    pairs: dict[str, list[str]] = {}
    for comp, circ in sorted(mapping.component_map.items()):
        if comp in hcd.components and circ in bif.circuits:
            pairs.setdefault(circ, []).append(comp)
    body = ["  rankdir=LR;", "  compound=true;"]
    clustered_comps = {c for cs in pairs.values() for c in cs}
    for i, circ in enumerate(sorted(pairs)):
        c = bif.circuits[circ]
        body.append(f"  subgraph {_q(f'cluster_{i}')} {{")
        body.append(f"    label={_q(circ)};")
        body.append(f"    {_q('bif:' + circ)}{_attrs(label=_circuit_label(c), shape='ellipse')};")
        for comp in pairs[circ]:
            body.append(f"    {_q('hcd:' + comp)}{_attrs(label=hcd.components[comp].function_label or comp, shape='box')};")
        body.append("  }")
    bn, be = _bif_lines(bif, "bif:", skip=set(pairs))
    hn, he = _hcd_lines(hcd, "hcd:", skip=clustered_comps)
    body += bn + hn + be + he
    for lid, kid in sorted(mapping.link_map.items()):
        if lid in hcd.links and kid in bif.connections:
            link = hcd.links[lid]
            body.append(
                f"  {_q('hcd:' + link.source[0])} -> {_q('hcd:' + link.target[0])}"
                f"{_attrs(label=kid, style='dotted', constraint='false')};"
            )
    return _graph(f"{hcd.id}@{bif.id}", body)


def _candidates(cset: CandidateSet) -> str:
    bif = cset.view.bif
    body = ["  rankdir=LR;"]
    nodes, edges = _bif_lines(bif, "bif:")
    body += nodes + edges
    for i, cand in enumerate(cset.candidates):
        body.append(f"  subgraph {_q(f'cluster_candidate_{i}')} {{")
        body.append(f"    label={_q(f'candidate {i} ({cand.status})')};")
        for role, circ in cand.assignment.items():
            body.append(f"    {_q(f'c{i}:{role}')}{_attrs(label=f'{role} = {circ}', shape='box')};")
        body.append("  }")
        for role, circ in cand.assignment.items():
            body.append(f"  {_q(f'c{i}:{role}')} -> {_q('bif:' + circ)}{_attrs(style='dotted', arrowhead='none')};")
    return _graph(f"{cset.template.id}@{bif.id}", body)
