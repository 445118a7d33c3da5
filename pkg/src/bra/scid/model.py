"""Inputs and outputs of candidate generation: templates, rules, candidates."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Any, Mapping

from ..bif import Citation, RoiView, Sign, Transmitter
from ..hcd import Tlf

FINDING_FIELDS = ("neuroscience", "cognitive-psychology", "evolution", "development", "other")
DIRECTIONS = ("afferent", "efferent")


@dataclass(frozen=True)
class Role:
    id: str
    function_label: str
    signs: frozenset[Sign] | None = None
    transmitters: frozenset[Transmitter] | None = None
    min_cell_count: int | None = None
    stub_ref: str | None = None


@dataclass(frozen=True)
class RoleEdge:
    id: str
    source: str
    target: str
    sign: Sign | None = None
    max_path_len: int = 1
    signal_semantics: str = ""


@dataclass(frozen=True)
class ExternalBinding:
    """A role port that must attach to a connection crossing the ROI boundary.

    ``afferent`` bindings need a connection entering the role's circuit from
    outside; ``efferent`` ones a connection leaving it. ``peer_prefix``
    restricts the outside circuit by label prefix.
    """

    name: str
    role: str
    direction: str
    peer_prefix: str | None = None


class TemplateError(ValueError):
    pass


@dataclass(frozen=True)
class FunctionTemplate:
    id: str
    roles: tuple[Role, ...]
    edges: tuple[RoleEdge, ...] = ()
    bindings: tuple[ExternalBinding, ...] = ()
    tlf: Tlf = Tlf("")

    def __post_init__(self):
        ids = [r.id for r in self.roles]
        if len(set(ids)) != len(ids):
            raise TemplateError(f"template {self.id!r}: duplicate role ids")
        eids = [e.id for e in self.edges]
        if len(set(eids)) != len(eids):
            raise TemplateError(f"template {self.id!r}: duplicate edge ids")
        known = set(ids)
        for r in self.roles:
            if r.min_cell_count is not None and r.min_cell_count < 0:
                raise TemplateError(f"role {r.id!r}: min_cell_count must be >= 0")
        for e in self.edges:
            for end in (e.source, e.target):
                if end not in known:
                    raise TemplateError(f"edge {e.id!r}: unknown role {end!r}")
            if e.max_path_len < 1:
                raise TemplateError(f"edge {e.id!r}: max_path_len must be >= 1")
        for b in self.bindings:
            if b.role not in known:
                raise TemplateError(f"binding {b.name!r}: unknown role {b.role!r}")
            if b.direction not in DIRECTIONS:
                raise TemplateError(f"binding {b.name!r}: direction must be afferent or efferent")

    def role_index(self, role_id: str) -> int:
        return [r.id for r in self.roles].index(role_id)

    def with_max_path_len(self, max_len: int) -> FunctionTemplate:
        return replace(self, edges=tuple(replace(e, max_path_len=max_len) for e in self.edges))


# -- rules -----------------------------------------------------------------------

PREDICATE_FORMS = ("role_attribute", "co_location", "path_exists")
ROLE_ATTRIBUTES = ("sign", "transmitter", "species", "label", "cell_count", "neocortical", "circuit")
OPERATORS = ("eq", "ne", "in", "not_in", "prefix", "lt", "le", "gt", "ge")


@dataclass(frozen=True)
class Predicate:
    """Declarative condition over a candidate assignment.

    ``role_attribute``: ``{role, attribute, op, value}`` compares an attribute
    of the circuit assigned to ``role``. ``co_location``: ``{roles: [a, b],
    circuit?}`` holds when both assigned circuits sit inside ``circuit`` or,
    without it, share a direct parent circuit. ``path_exists``: ``{from, to,
    max_len}`` holds when the ROI has a directed path of at most ``max_len``
    connections between the two assigned circuits.
    """

    form: str
    params: Mapping[str, Any] = field(default_factory=dict)
    negate: bool = False


@dataclass(frozen=True)
class RejectionRule:
    id: str
    description: str
    field_of_finding: str
    predicate: Predicate
    citations: tuple[Citation, ...] = ()


@dataclass(frozen=True)
class SoftConstraint:
    id: str
    predicate: Predicate
    weight: float = 1.0


class RuleError(ValueError):
    def __init__(self, rule_id: str, problem: str):
        self.rule_id = rule_id
        super().__init__(f"rule {rule_id!r}: {problem}")


# -- candidates ------------------------------------------------------------------

SURVIVING = "surviving"
REJECTED = "rejected"


@dataclass(frozen=True)
class CandidateHcd:
    assignment: Mapping[str, str]
    realized_edges: Mapping[str, tuple[str, ...]]
    status: str = SURVIVING
    rejected_by: str | None = None
    score: float = 0.0

    @property
    def key(self) -> tuple[str, ...]:
        return tuple(self.assignment.values())

    @property
    def surviving(self) -> bool:
        return self.status == SURVIVING

    def to_dict(self) -> dict:
        d = {
            "assignment": dict(self.assignment),
            "realized_edges": {k: list(v) for k, v in self.realized_edges.items()},
            "status": self.status,
            "score": self.score,
        }
        if self.rejected_by is not None:
            d["rejected_by"] = self.rejected_by
        return d


@dataclass(frozen=True)
class CandidateSet:
    view: RoiView
    roi: tuple[str, ...]
    template: FunctionTemplate
    candidates: tuple[CandidateHcd, ...]
    truncated: bool = False
    injective: bool = True  # False when roles were allowed to share a circuit

    @property
    def surviving(self) -> list[CandidateHcd]:
        return [c for c in self.candidates if c.surviving]

    @property
    def rejected(self) -> list[CandidateHcd]:
        return [c for c in self.candidates if not c.surviving]

    def with_candidates(self, candidates) -> CandidateSet:
        return replace(self, candidates=tuple(candidates))

    def to_dict(self) -> dict:
        return {
            "bif_id": self.view.bif.id,
            "roi": list(self.roi),
            "template_id": self.template.id,
            "truncated": self.truncated,
            "injective": self.injective,
            "candidates": [c.to_dict() for c in self.candidates],
        }
