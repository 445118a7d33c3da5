from __future__ import annotations

import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bra.bif import Bif, Citation, Connection, Sign, Species, Transmitter, UniformCircuit
from bra.fidelity import (
    BehaviorConstraint,
    FidelityReport,
    ImplGraph,
    Task,
    activity_reproducibility,
    component_scores,
    f1,
    functional_similarity,
    impl_from_hcd,
    jaccard,
    performance_eval,
    structural_similarity,
)
from bra.harness import Schedule, StubSpec, Trace, ablate, bind_stubs, run
from bra.hcd import Component, DependencyLink, ExternalPort, GoalPredicate, Hcd, PortSpec
from oracles import random_instance, structural_oracle

REF = (Citation("k"),)


def square():
    cs = [UniformCircuit(c, c, Species.RAT, Sign.EXCITATORY, Transmitter.GLUTAMATE, 10, REF) for c in "abcd"]
    ks = [Connection(a + b, a, b, Species.RAT, references=REF) for a, b in ("ab", "bc", "cd", "da")]
    return Bif.build("sq", cs, ks)


ROI = list("abcd")
IDENTITY = ImplGraph("id", "sq", tuple("abcd"), (("a", "b"), ("b", "c"), ("c", "d"), ("d", "a")), {c: c for c in "abcd"})


def test_identity_scores_one():
    s = structural_similarity(IDENTITY, square(), ROI)
    assert s.to_dict() == {k: 1.0 for k in s.to_dict()}


def test_empty_mapping_scores_zero():
    s = structural_similarity(ImplGraph("e", "sq", tuple("abcd"), IDENTITY.edges, {}), square(), ROI)
    assert s.combined == 0.0 and s.to_dict() == {k: 0.0 for k in s.to_dict()}


def test_hand_counted_scores():
    impl = ImplGraph("p", "sq", ("A", "B", "C"), (("A", "B"), ("B", "C"), ("C", "A")), {"A": "a", "B": "b", "C": "c"})
    s = structural_similarity(impl, square(), ROI)
    assert (s.node_precision, s.node_recall) == (1.0, 0.75)
    assert (s.edge_precision, s.edge_recall) == pytest.approx((2 / 3, 0.5))
    assert s.f1_node == pytest.approx(6 / 7) and s.f1_edge == pytest.approx(4 / 7)
    assert s.combined == pytest.approx(5 / 7)


def test_deleting_a_correct_edge_lowers_edge_f1():
    before = structural_similarity(IDENTITY, square(), ROI).f1_edge
    after = structural_similarity(IDENTITY.without_edge(("b", "c")), square(), ROI).f1_edge
    assert after < before


def test_empty_roi_rejected():
    with pytest.raises(ValueError):
        structural_similarity(IDENTITY, square(), [])


def test_f1_convention():
    assert f1(0.0, 0.0) == 0.0 and f1(1.0, 1.0) == 1.0


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 10_000))
def test_structural_matches_oracle(seed):
    rng = random.Random(seed)
    bif, roi, _ = random_instance(rng)
    ids = sorted(bif.circuits)
    nodes = tuple(f"n{i}" for i in range(rng.randint(1, 6)))
    mapping = {n: rng.choice(ids) for n in nodes if rng.random() < 0.8}
    edges = tuple((rng.choice(nodes), rng.choice(nodes)) for _ in range(rng.randint(0, 6)))
    s = structural_similarity(ImplGraph("r", bif.id, nodes, edges, mapping), bif, roi)
    want = structural_oracle(nodes, edges, mapping, bif, roi)
    assert (s.node_precision, s.node_recall, s.edge_precision, s.edge_recall) == pytest.approx(want)
    for v in s.to_dict().values():
        assert 0.0 <= v <= 1.0


# -- functional ---------------------------------------------------------------


def chain(n):
    comps = [Component(f"r{i}", "out", (PortSpec("out"),), (PortSpec("in"),)) for i in range(n)]
    links = [DependencyLink(f"l{i}", (f"r{i}", "out"), (f"r{i + 1}", "in")) for i in range(n - 1)]
    return Hcd.build("chain", comps, links, [ExternalPort("x", (("r0", "in"),))], [ExternalPort("y", ((f"r{n - 1}", "out"),))])


RELAY = StubSpec("relay", "relay")


def test_no_constraints_is_one():
    tr = run(chain(2), {"r0": RELAY, "r1": RELAY}, Schedule.pulse("x", 4, 0), 4)
    assert functional_similarity(tr, chain(2), []).fraction == 1.0


def test_within_one_step_on_relay_chain():
    hcd = chain(5)
    cons = [BehaviorConstraint(f"c{i}", f"l{i}", "within", 1) for i in range(4)]
    tr = run(hcd, {c: RELAY for c in hcd.components}, Schedule.pulse("x", 10, 0), 10)
    assert functional_similarity(tr, hcd, cons).fraction == 1.0
    slow = {c: RELAY for c in hcd.components} | {"r2": StubSpec("d", "delay", {"k": 2})}
    score = functional_similarity(run(hcd, slow, Schedule.pulse("x", 10, 0), 10), hcd, cons)
    assert score.fraction == 3 / 4 and [k for k, ok in score.results.items() if not ok] == ["c1"]


def test_before_predicate():
    hcd = chain(2)
    tr = run(hcd, {"r0": RELAY, "r1": RELAY}, Schedule.pulse("x", 5, 0), 5)
    assert functional_similarity(tr, hcd, [BehaviorConstraint("b", "l0", "before")]).fraction == 1.0
    with pytest.raises(ValueError):
        BehaviorConstraint("bad", "l0", "after")


def test_fig6_constraints(fig6):
    hcd = fig6["hcd"]
    tr = run(hcd, bind_stubs(hcd, fig6["stubs"]), fig6["schedule"], 50)
    assert functional_similarity(tr, hcd, fig6["constraints"]).fraction == 1.0


# -- activity -----------------------------------------------------------------


def series_trace(d):
    steps = len(next(iter(d.values())))
    return Trace("h", steps, {k: tuple(float(x) for x in v) for k, v in d.items()})


def test_activity_identity_and_complement():
    bits = [1, 0, 1, 1, 0, 0, 1, 0]
    tr = series_trace({("c", "p"): bits})
    comp = series_trace({("c", "p"): [1 - b for b in bits]})
    pair = [(("c", "p"), ("c", "p"))]
    assert activity_reproducibility(tr, tr, pair).mean == 1.0
    assert activity_reproducibility(tr, comp, pair).mean == 0.0


def test_activity_three_sevenths():
    a = [1, 1, 1, 1, 1, 0, 0, 0, 0, 0]
    b = [1, 1, 1, 0, 0, 1, 1, 0, 0, 0]
    score = activity_reproducibility(series_trace({("x", "o"): a}), series_trace({("y", "o"): b}), [(("x", "o"), ("y", "o"))])
    assert abs(score.mean - 3 / 7) < 1e-12


def test_activity_errors():
    tr = series_trace({("c", "p"): [0, 1]})
    with pytest.raises(ValueError):
        activity_reproducibility(tr, tr, [])
    with pytest.raises(KeyError):
        activity_reproducibility(tr, tr, [(("c", "q"), ("c", "p"))])


@given(st.sets(st.integers(0, 20)), st.sets(st.integers(0, 20)))
def test_jaccard_matches_fraction(a, b):
    want = Fraction(1) if not a | b else Fraction(len(a & b), len(a | b))
    assert jaccard(a, b) == pytest.approx(float(want))
    assert jaccard(a, b) == jaccard(b, a)


# -- performance --------------------------------------------------------------


def test_performance_single_and_ablated():
    hcd = chain(3)
    bindings = {c: RELAY for c in hcd.components}
    task = Task("t", Schedule.pulse("x", 6, 0), GoalPredicate("active_by", {"component": "r2", "port": "out", "step": 3}), 6)
    assert performance_eval(hcd, bindings, [task]).rate == 1.0
    cut = ablate(hcd, ["r1"])
    result = performance_eval(cut, {c: RELAY for c in cut.components}, [task])
    assert result.rate == 0.0 and result.results["t"]["passed"] is False


def test_performance_four_tasks():
    hcd = chain(3)
    bindings = {c: RELAY for c in hcd.components}

    def goal(step):
        return GoalPredicate("active_by", {"component": "r2", "port": "out", "step": step})

    tasks = [
        Task("early", Schedule.pulse("x", 8, 0), goal(3), 8),  # arrives at 3
        Task("late", Schedule.pulse("x", 8, 2), goal(5), 8),  # arrives at 5
        Task("quiet", Schedule.pulse("x", 8, [], 0.0), GoalPredicate("silent", {"component": "r2", "port": "out"}), 8),
        Task("too_soon", Schedule.pulse("x", 8, 0), goal(2), 8),  # needs 3 steps
    ]
    score = performance_eval(hcd, bindings, tasks)
    assert score.rate == 0.75 and not score.results["too_soon"]["passed"]


def test_performance_errors_count_as_failures():
    hcd = chain(2)
    task = Task("t", Schedule.pulse("x", 2, 0), GoalPredicate("active_by", {"component": "r1", "port": "out", "step": 1}), 5)
    score = performance_eval(hcd, {c: RELAY for c in hcd.components}, [task])
    assert score.rate == 0.0 and "ScheduleGapError" in score.results["t"]["cause"]


def test_fig6_tasks(fig6):
    hcd = fig6["hcd"]
    assert performance_eval(hcd, bind_stubs(hcd, fig6["stubs"]), fig6["tasks"]).rate == 1.0


# -- per component and report --------------------------------------------------


def test_component_scores_and_report(fig6):
    hcd, mapping, bif = fig6["hcd"], fig6["mapping"], fig6["bif"]
    tr = run(hcd, bind_stubs(hcd, fig6["stubs"]), fig6["schedule"], 50)
    scores = component_scores(hcd, mapping, bif, tr, fig6["constraints"])
    assert scores == {c: {"structural": 1.0, "functional": 1.0} for c in "ABCD"}
    impl = impl_from_hcd(hcd, mapping)
    assert structural_similarity(impl, bif, mapping.roi).edge_precision == 1.0
    doc = FidelityReport(structural_similarity(impl, bif, mapping.roi), components=scores).to_dict()
    assert doc["kind"] == "fidelity_report" and set(doc["definitions"]) == {"structural", "functional", "activity", "performance"}
