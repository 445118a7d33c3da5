"""Brain information flow: circuits, connections and the queries over them.

A :class:`Bif` is a directed multigraph. Nodes are circuits; the finest
ones are :class:`UniformCircuit` objects (populations of one neuron type),
coarser ones are :class:`Circuit` objects that group other circuits and
may overlap. Every :class:`Connection` starts at a uniform circuit and
ends at any circuit.

Documents are treated as immutable once built; queries never mutate.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Iterable, Mapping

from .reports import ERROR, WARNING, ValidationReport


class Species(str, Enum):
    HUMAN = "human"
    MACAQUE = "macaque"
    MARMOSET = "marmoset"
    RAT = "rat"
    MOUSE = "mouse"
    OTHER = "other"
    UNKNOWN = "unknown"


class Transmitter(str, Enum):
    GLUTAMATE = "glutamate"
    GABA = "GABA"
    GLYCINE = "glycine"
    DOPAMINE = "dopamine"
    SEROTONIN = "serotonin"
    NORADRENALINE = "noradrenaline"
    ACETYLCHOLINE = "acetylcholine"
    OTHER = "other"
    UNKNOWN = "unknown"


class Sign(str, Enum):
    EXCITATORY = "excitatory"
    INHIBITORY = "inhibitory"
    MODULATORY = "modulatory"
    UNKNOWN = "unknown"


class Hierarchy(str, Enum):
    FEEDFORWARD = "feedforward"
    FEEDBACK = "feedback"
    LATERAL = "lateral"
    NA = "n/a"
    UNKNOWN = "unknown"


# Usual sign of the fast action of each transmitter. Used only where a
# circuit's own sign is unknown, and to flag contradictory annotations.
TRANSMITTER_SIGN = {
    Transmitter.GLUTAMATE: Sign.EXCITATORY,
    Transmitter.GABA: Sign.INHIBITORY,
    Transmitter.GLYCINE: Sign.INHIBITORY,
    Transmitter.DOPAMINE: Sign.MODULATORY,
    Transmitter.SEROTONIN: Sign.MODULATORY,
    Transmitter.NORADRENALINE: Sign.MODULATORY,
    Transmitter.ACETYLCHOLINE: Sign.MODULATORY,
}


@dataclass(frozen=True)
class Citation:
    key: str
    peer_reviewed: bool = True


@dataclass(frozen=True)
class UniformCircuit:
    id: str
    label: str
    species: Species
    sign: Sign
    transmitter: Transmitter
    cell_count: int | None = None
    references: tuple[Citation, ...] = ()
    neocortical: bool = False

    @property
    def is_uniform(self) -> bool:
        return True

    @property
    def effective_sign(self) -> Sign:
        if self.sign is not Sign.UNKNOWN:
            return self.sign
        return TRANSMITTER_SIGN.get(self.transmitter, Sign.UNKNOWN)


@dataclass(frozen=True)
class Circuit:
    id: str
    label: str
    species: Species
    members: frozenset[str] = frozenset()
    references: tuple[Citation, ...] = ()
    neocortical: bool = False

    @property
    def is_uniform(self) -> bool:
        return False


AnyCircuit = UniformCircuit | Circuit


@dataclass(frozen=True)
class Connection:
    id: str
    input: str
    output: str
    species: Species
    transmitter: Transmitter = Transmitter.UNKNOWN
    hierarchy: Hierarchy = Hierarchy.NA
    size: int | None = None
    references: tuple[Citation, ...] = ()


@dataclass(frozen=True)
class Bif:
    id: str
    circuits: Mapping[str, AnyCircuit] = field(default_factory=dict)
    connections: Mapping[str, Connection] = field(default_factory=dict)
    version: str = ""
    provenance: str = ""

    @classmethod
    def build(
        cls,
        id: str,
        circuits: Iterable[AnyCircuit] = (),
        connections: Iterable[Connection] = (),
        version: str = "",
        provenance: str = "",
    ) -> Bif:
        """Build from element lists, rejecting duplicate ids."""
        cmap: dict[str, AnyCircuit] = {}
        for c in circuits:
            if c.id in cmap:
                raise ValueError(f"duplicate circuit id {c.id!r}")
            cmap[c.id] = c
        kmap: dict[str, Connection] = {}
        for k in connections:
            if k.id in kmap or k.id in cmap:
                raise ValueError(f"duplicate connection id {k.id!r}")
            kmap[k.id] = k
        return cls(
            id,
            dict(sorted(cmap.items())),
            dict(sorted(kmap.items())),
            version,
            provenance,
        )

    def circuit(self, cid: str) -> AnyCircuit:
        try:
            return self.circuits[cid]
        except KeyError:
            raise UnknownElementError(cid) from None

    def connection(self, kid: str) -> Connection:
        try:
            return self.connections[kid]
        except KeyError:
            raise UnknownElementError(kid) from None

    def uniform_circuits(self) -> list[UniformCircuit]:
        return [c for c in self.circuits.values() if isinstance(c, UniformCircuit)]

    def with_label_prefix(self, prefix: str) -> list[str]:
        return sorted(cid for cid, c in self.circuits.items() if c.label.startswith(prefix))

    def parents(self, cid: str) -> list[str]:
        return sorted(
            p.id for p in self.circuits.values() if isinstance(p, Circuit) and cid in p.members
        )

    def descendants(self, cid: str) -> set[str]:
        """``cid`` plus every circuit reachable downward through membership."""
        self.circuit(cid)
        seen: set[str] = set()
        stack = [cid]
        while stack:
            cur = stack.pop()
            if cur in seen:
                continue
            seen.add(cur)
            node = self.circuits.get(cur)
            if isinstance(node, Circuit):
                stack.extend(node.members)
        return seen


class UnknownElementError(KeyError):
    """Raised when an id does not resolve inside a document."""

    def __init__(self, element_id: str, where: str = ""):
        self.element_id = element_id
        msg = f"unknown id {element_id!r}" + (f" in {where}" if where else "")
        super().__init__(msg)

    def __str__(self) -> str:
        return self.args[0]


def uniform_leaves(bif: Bif, circuit_id: str) -> tuple[str, ...]:
    """Sorted ids of the uniform circuits contained (transitively) in ``circuit_id``."""
    return tuple(sorted(cid for cid in bif.descendants(circuit_id) if _is_uniform(bif, cid)))


def _is_uniform(bif: Bif, cid: str) -> bool:
    return isinstance(bif.circuits.get(cid), UniformCircuit)


def estimate_axon_count(projection_ratio: float | Fraction, neuron_count: int) -> int:
    """Axons projected by a population: ``projection_ratio * neuron_count``.

    The product is evaluated exactly and rounded half away from zero.
    """
    ratio = Fraction(projection_ratio)
    if not 0 <= ratio <= 1:
        raise ValueError(f"projection ratio {projection_ratio!r} outside [0, 1]")
    if neuron_count < 0:
        raise ValueError(f"neuron count {neuron_count!r} is negative")
    return int(ratio * neuron_count + Fraction(1, 2))


# -- validation ----------------------------------------------------------------


def validate_bif(bif: Bif) -> ValidationReport:
    report = ValidationReport(subject=bif.id)

    for cid, c in bif.circuits.items():
        if c.id != cid:
            report.add(cid, "id-mismatch", ERROR, f"keyed as {cid!r} but carries id {c.id!r}")
        if isinstance(c, UniformCircuit):
            if c.cell_count is not None and c.cell_count < 1:
                report.add(cid, "cell-count-range", ERROR, f"cell_count {c.cell_count} < 1")
            inferred = TRANSMITTER_SIGN.get(c.transmitter)
            if inferred and c.sign is not Sign.UNKNOWN and c.sign is not inferred:
                report.add(
                    cid,
                    "sign-transmitter-mismatch",
                    WARNING,
                    f"{c.transmitter.value} circuit marked {c.sign.value}",
                )
        else:
            if not c.members:
                report.add(cid, "leaf-not-uniform", ERROR, "composite circuit without members")
            for m in sorted(c.members):
                if m not in bif.circuits:
                    report.add(cid, "dangling-member", ERROR, f"member {m!r} does not exist")

    for cid in _membership_cycle_nodes(bif):
        report.add(cid, "membership-cycle", ERROR, "circuit contains itself through membership")

    for kid, k in bif.connections.items():
        missing = [end for end in (k.input, k.output) if end not in bif.circuits]
        for end in missing:
            report.add(kid, "dangling-endpoint", ERROR, f"endpoint {end!r} does not exist")
        if k.input in bif.circuits and not _is_uniform(bif, k.input):
            report.add(kid, "input-not-uniform", ERROR, f"origin {k.input!r} is not a uniform circuit")
        if k.size is not None and k.size < 1:
            report.add(kid, "size-range", ERROR, f"size {k.size} < 1")
        if missing:
            continue
        src, dst = bif.circuits[k.input], bif.circuits[k.output]
        if k.hierarchy is not Hierarchy.NA and not (src.neocortical and dst.neocortical):
            report.add(
                kid,
                "hierarchy-not-neocortical",
                WARNING,
                "hierarchy is only meaningful between neocortical circuits",
            )
        species = {s for s in (k.species, src.species, dst.species) if s is not Species.UNKNOWN}
        if len(species) > 1:
            report.add(
                kid,
                "species-chimera",
                WARNING,
                "mixes " + ", ".join(sorted(s.value for s in species)),
            )
    return report


def _membership_cycle_nodes(bif: Bif) -> list[str]:
    white, grey, black = 0, 1, 2
    colour = {cid: white for cid in bif.circuits}
    on_cycle: set[str] = set()

    for root in bif.circuits:
        if colour[root] != white:
            continue
        path: list[str] = []
        stack: list[tuple[str, Iterable[str]]] = []

        def push(cid: str) -> None:
            colour[cid] = grey
            path.append(cid)
            node = bif.circuits[cid]
            kids = sorted(node.members) if isinstance(node, Circuit) else []
            stack.append((cid, iter(kids)))

        push(root)
        while stack:
            cid, kids = stack[-1]
            nxt = next(kids, None)
            if nxt is None:
                colour[cid] = black
                path.pop()
                stack.pop()
            elif nxt not in colour:
                continue
            elif colour[nxt] == grey:
                on_cycle.update(path[path.index(nxt):])
            elif colour[nxt] == white:
                push(nxt)
    return sorted(on_cycle)


# -- region of interest --------------------------------------------------------


@dataclass(frozen=True)
class RoiView:
    """A sub-BIF induced by a region of interest plus its boundary connections."""

    bif: Bif
    external: tuple[Connection, ...]

    @property
    def afferents(self) -> tuple[Connection, ...]:
        return tuple(k for k in self.external if k.output in self.bif.circuits)

    @property
    def efferents(self) -> tuple[Connection, ...]:
        return tuple(k for k in self.external if k.input in self.bif.circuits)

    @property
    def leaves(self) -> tuple[str, ...]:
        return tuple(sorted(c.id for c in self.bif.uniform_circuits()))


def roi_extract(bif: Bif, roi: Iterable[str]) -> RoiView:
    roi = list(roi)
    inside: set[str] = set()
    for cid in roi:
        if cid not in bif.circuits:
            raise UnknownElementError(cid, "roi")
        inside |= bif.descendants(cid)
    inside &= set(bif.circuits)

    circuits = {cid: c for cid, c in bif.circuits.items() if cid in inside}
    internal: dict[str, Connection] = {}
    external: list[Connection] = []
    for kid, k in bif.connections.items():
        a, b = k.input in inside, k.output in inside
        if a and b:
            internal[kid] = k
        elif a or b:
            external.append(k)
    sub = Bif(bif.id, circuits, internal, bif.version, bif.provenance)
    return RoiView(sub, tuple(sorted(external, key=lambda k: k.id)))


def roi_leaves(bif: Bif, roi: Iterable[str]) -> tuple[str, ...]:
    leaves: set[str] = set()
    for cid in roi:
        leaves.update(uniform_leaves(bif, cid))
    return tuple(sorted(leaves))
