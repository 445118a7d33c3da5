"""How closely an implementation reproduces its BRA.

Four separate measures, deliberately not folded into one number:

structural
    precision/recall/F1 of implementation nodes and edges against the ROI.
functional
    fraction of behavior constraints (ordering or latency per link) that a
    trace satisfies.
activity
    mean Jaccard overlap of binarized activity between paired channels.
performance
    pass rate of a task suite run through the harness.

Conventions that keep every score total: F1 with precision and recall both
0 is 0, two empty active sets overlap fully (1.0), and an empty constraint
list is satisfied vacuously (1.0).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, Sequence

from .bif import Bif, UnknownElementError, roi_extract, uniform_leaves
from .binding import BraMapping
from .harness import ACTIVE_THRESHOLD, Bindings, HarnessError, Schedule, Trace, evaluate_goal, run
from .hcd import GoalPredicate, Hcd


@dataclass(frozen=True)
class ImplGraph:
    """Implemented components, their dependencies, and where each claims to sit."""

    id: str
    bif_id: str
    nodes: tuple[str, ...] = ()
    edges: tuple[tuple[str, str], ...] = ()
    mapping: Mapping[str, str] = field(default_factory=dict)

    def check(self, bif: Bif) -> None:
        for n in self.nodes:
            if n in self.mapping:
                bif.circuit(self.mapping[n])
        known = set(self.nodes)
        for a, b in self.edges:
            for end in (a, b):
                if end not in known:
                    raise UnknownElementError(end, f"implementation graph {self.id!r}")

    def without_edge(self, edge: tuple[str, str]) -> ImplGraph:
        edges = list(self.edges)
        edges.remove(edge)
        return ImplGraph(self.id, self.bif_id, self.nodes, tuple(edges), self.mapping)


def impl_from_hcd(hcd: Hcd, mapping: BraMapping) -> ImplGraph:
    """Treat an HCD as its own implementation graph (components and links)."""
    edges = tuple(sorted((link.source[0], link.target[0]) for link in hcd.links.values()))
    return ImplGraph(hcd.id, mapping.bif_id, tuple(sorted(hcd.components)), edges, dict(mapping.component_map))


def f1(p: float, r: float) -> float:
    return 0.0 if p + r == 0 else 2 * p * r / (p + r)


def _ratio(num: int, den: int) -> float:
    return num / den if den else 0.0


@dataclass(frozen=True)
class StructuralScores:
    node_precision: float
    node_recall: float
    edge_precision: float
    edge_recall: float
    f1_node: float
    f1_edge: float
    combined: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


class _RoiIndex:
    def __init__(self, bif: Bif, roi: Iterable[str]):
        roi = list(roi)
        if not roi:
            raise ValueError("empty ROI")
        view = roi_extract(bif, roi)
        self.bif = bif
        self.inside = set(view.bif.circuits)
        self.leaves = set(view.leaves)
        self.connections = [view.bif.connections[k] for k in sorted(view.bif.connections)]
        self._leaf_cache: dict[str, set[str]] = {}

    def leaves_of(self, cid: str) -> set[str]:
        if cid not in self._leaf_cache:
            self._leaf_cache[cid] = set(uniform_leaves(self.bif, cid))
        return self._leaf_cache[cid]

    def joins(self, k, src_img: str, dst_img: str) -> bool:
        return k.input in self.leaves_of(src_img) and bool(self.leaves_of(k.output) & self.leaves_of(dst_img))


def structural_similarity(impl: ImplGraph, bif: Bif, roi: Iterable[str]) -> StructuralScores:
    """Node and edge precision/recall of ``impl`` against the ROI.

    A node is valid when it maps to a circuit inside the ROI; it covers the
    uniform circuits under that circuit. An edge is correct when some ROI
    connection starts in the source node's circuit and ends in the target
    node's circuit.
    """
    impl.check(bif)
    idx = _RoiIndex(bif, roi)
    img = {n: impl.mapping[n] for n in impl.nodes if impl.mapping.get(n) in idx.inside}

    covered = set().union(*(idx.leaves_of(c) for c in img.values())) & idx.leaves if img else set()
    node_p = _ratio(len(img), len(impl.nodes))
    node_r = _ratio(len(covered), len(idx.leaves))

    correct = 0
    realised: set[str] = set()
    for a, b in impl.edges:
        if a not in img or b not in img:
            continue
        hits = [k.id for k in idx.connections if idx.joins(k, img[a], img[b])]
        if hits:
            correct += 1
            realised.update(hits)
    edge_p = _ratio(correct, len(impl.edges))
    edge_r = _ratio(len(realised), len(idx.connections))
    fn, fe = f1(node_p, node_r), f1(edge_p, edge_r)
    return StructuralScores(node_p, node_r, edge_p, edge_r, fn, fe, (fn + fe) / 2)


# -- functional -----------------------------------------------------------------------

BEFORE, WITHIN = "before", "within"


@dataclass(frozen=True)
class BehaviorConstraint:
    """``before``: the link's source port activates before its target component.
    ``within``: the target component activates within ``k`` steps after the
    source port first activates."""

    id: str
    link: str
    predicate: str
    k: int = 1

    def __post_init__(self):
        if self.predicate not in (BEFORE, WITHIN):
            raise ValueError(f"constraint {self.id!r}: unknown predicate {self.predicate!r}")
        if self.predicate == WITHIN and self.k < 1:
            raise ValueError(f"constraint {self.id!r}: k must be >= 1")


@dataclass(frozen=True)
class FunctionalScore:
    fraction: float
    results: Mapping[str, bool]

    def to_dict(self) -> dict:
        return {"fraction": self.fraction, "results": dict(sorted(self.results.items()))}


def constraint_holds(c: BehaviorConstraint, trace: Trace, hcd: Hcd, threshold: float = ACTIVE_THRESHOLD) -> bool:
    if c.link not in hcd.links:
        raise UnknownElementError(c.link, f"HCD {hcd.id!r}")
    link = hcd.links[c.link]
    ts = trace.first_active(link.source[0], link.source[1], threshold)
    if ts is None:
        return False
    target = link.target[0]
    if c.predicate == BEFORE:
        tt = trace.first_active(target, None, threshold)
        return tt is not None and ts < tt
    active = trace.active_steps(target, None, threshold)
    return any(ts < t <= ts + c.k for t in active)


def functional_similarity(
    trace: Trace, hcd: Hcd, constraints: Sequence[BehaviorConstraint], threshold: float = ACTIVE_THRESHOLD
) -> FunctionalScore:
    if trace.hcd_id is not None and trace.hcd_id != hcd.id:
        raise ValueError(f"trace belongs to {trace.hcd_id!r}, not {hcd.id!r}")
    results = {c.id: constraint_holds(c, trace, hcd, threshold) for c in constraints}
    frac = sum(results.values()) / len(results) if results else 1.0
    return FunctionalScore(frac, results)


# -- activity -------------------------------------------------------------------------

Channel = tuple[str, str]


@dataclass(frozen=True)
class ActivityScore:
    mean: float
    per_pair: tuple[tuple[Channel, Channel, float], ...]

    def to_dict(self) -> dict:
        return {
            "mean": self.mean,
            "per_pair": [
                {"channel": list(a), "reference": list(b), "jaccard": j} for a, b, j in self.per_pair
            ],
        }


def jaccard(a: set, b: set) -> float:
    union = a | b
    return 1.0 if not union else len(a & b) / len(union)


def activity_reproducibility(
    trace: Trace, reference: Trace, pairing: Sequence[tuple[Channel, Channel]], threshold: float = ACTIVE_THRESHOLD
) -> ActivityScore:
    if not pairing:
        raise ValueError("empty pairing")
    steps = min(trace.steps, reference.steps)
    per = []
    for ch, ref in pairing:
        for tr, key in ((trace, ch), (reference, ref)):
            if tuple(key) not in tr.values:
                raise UnknownElementError(f"{key[0]}/{key[1]}", "trace")
        a = {t for t, v in enumerate(trace.values[tuple(ch)][:steps]) if v >= threshold}
        b = {t for t, v in enumerate(reference.values[tuple(ref)][:steps]) if v >= threshold}
        per.append((tuple(ch), tuple(ref), jaccard(a, b)))
    return ActivityScore(sum(j for *_, j in per) / len(per), tuple(per))


# -- performance ----------------------------------------------------------------------


@dataclass(frozen=True)
class Task:
    id: str
    schedule: Schedule
    goal: GoalPredicate
    steps: int
    seed: int = 0


@dataclass(frozen=True)
class PerformanceScore:
    rate: float
    results: Mapping[str, dict]

    def to_dict(self) -> dict:
        return {"rate": self.rate, "tasks": dict(sorted(self.results.items()))}


def performance_eval(hcd: Hcd, bindings: Bindings, tasks: Sequence[Task]) -> PerformanceScore:
    """Run every task; harness errors count as failures and never stop the suite."""
    if not tasks:
        raise ValueError("empty task suite")
    results = {}
    for task in tasks:
        try:
            trace = run(hcd, bindings, task.schedule, task.steps, task.seed)
            ok = evaluate_goal(task.goal, trace, task.schedule)
            results[task.id] = {"passed": ok, "cause": "" if ok else "goal not achieved"}
        except (HarnessError, ValueError, KeyError) as exc:
            results[task.id] = {"passed": False, "cause": f"{type(exc).__name__}: {exc}"}
    rate = sum(r["passed"] for r in results.values()) / len(results)
    return PerformanceScore(rate, results)


# -- per-component figures (used when merging) ------------------------------------


def component_scores(
    hcd: Hcd,
    mapping: BraMapping,
    bif: Bif,
    trace: Trace | None = None,
    constraints: Sequence[BehaviorConstraint] = (),
) -> dict[str, dict[str, float]]:
    """Structural and functional score of each component on its own.

    structural: mean of node validity (1 or 0) and the fraction of incident
    links realised by a ROI connection (1.0 with no links). functional: the
    fraction of incident-link constraints satisfied (1.0 with none or with
    no trace).
    """
    idx = _RoiIndex(bif, mapping.roi or bif.circuits)
    img = {c: m for c, m in mapping.component_map.items() if m in idx.inside}
    link_ok = {}
    for lid, link in hcd.links.items():
        a, b = link.source[0], link.target[0]
        link_ok[lid] = a in img and b in img and any(idx.joins(k, img[a], img[b]) for k in idx.connections)
    held = {}
    if trace is not None:
        for c in constraints:
            held[c.id] = (hcd.links[c.link], constraint_holds(c, trace, hcd))
    out = {}
    for cid in sorted(hcd.components):
        incident = [lid for lid, link in hcd.links.items() if cid in (link.source[0], link.target[0])]
        edge = sum(link_ok[lid] for lid in incident) / len(incident) if incident else 1.0
        mine = [ok for link, ok in held.values() if cid in (link.source[0], link.target[0])]
        out[cid] = {
            "structural": (float(cid in img) + edge) / 2,
            "functional": sum(mine) / len(mine) if mine else 1.0,
        }
    return out


@dataclass
class FidelityReport:
    structural: StructuralScores | None = None
    functional: FunctionalScore | None = None
    activity: ActivityScore | None = None
    performance: PerformanceScore | None = None
    components: dict[str, dict[str, float]] = field(default_factory=dict)
    config: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict:
        def d(x):
            return None if x is None else x.to_dict()

        return {
            "format_version": "1.0",
            "kind": "fidelity_report",
            "structural": d(self.structural),
            "functional": d(self.functional),
            "activity": d(self.activity),
            "performance": d(self.performance),
            "components": self.components,
            "config": self.config,
            "definitions": {
                "structural": "node/edge precision, recall and F1 against the ROI; combined = (f1_node + f1_edge) / 2",
                "functional": "fraction of satisfied behavior constraints (1.0 when there are none)",
                "activity": "mean Jaccard of active steps per channel pair (both empty = 1.0)",
                "performance": "passed tasks / tasks",
            },
        }
