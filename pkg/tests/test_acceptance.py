"""Acceptance criteria 1-10, one test each.

Every test records a PASS/FAIL line; the lines are printed together at the
end of the session (see ``pytest_terminal_summary`` in conftest.py) and also
immediately, so ``pytest -s`` shows them inline.
"""

from __future__ import annotations

import contextlib
import json
import random
import subprocess
import sys
import time
from dataclasses import replace
from pathlib import Path

import pytest

from bra.bif import Bif, Citation, Connection, Sign, Species, Transmitter, UniformCircuit, uniform_leaves
from bra.binding import HarnessConfig, check_structural_consistency, evaluate_adequacy
from bra.fidelity import ImplGraph, Trace, activity_reproducibility, structural_similarity
from bra.harness import Schedule, StubSpec, ablate, bind_stubs, run, trace_to_csv
from bra.hcd import Component, DependencyLink, ExternalPort, Hcd, PortSpec
from bra.io import documents as docs
from bra.io.jsonloc import ParseError
from bra.io.tabular import parse_schedule_csv, parse_trace_csv, serialize_schedule
from bra.merge import merge_scan, plan_merge
from bra.scid.engine import (
    ScidError,
    apply_rejection_rules,
    enumerate_candidates,
    materialize_hcd,
    rank_candidates,
)
from conftest import fixture_text
from oracles import external_paths, hcd_successors, random_dag_hcd, random_instance, reach, scid_oracle

FIX = Path(__file__).parent / "fixtures"
RESULTS: list[str] = []


@contextlib.contextmanager
def criterion(n: int, title: str):
    start = time.perf_counter()
    try:
        yield
    except BaseException as exc:
        line = f"[acceptance {n:2d}] FAIL  {title}: {type(exc).__name__}: {str(exc).splitlines()[0] if str(exc) else ''}"
        RESULTS.append(line)
        print(line)
        raise
    line = f"[acceptance {n:2d}] PASS  {title} ({time.perf_counter() - start:.2f} s)"
    RESULTS.append(line)
    print(line)


# 1 -----------------------------------------------------------------------------------------


def test_01_scid_matches_oracle():
    with criterion(1, "SCID enumeration equals brute-force oracle on 100 random instances, < 10 s"):
        cases = [random_instance(random.Random(seed)) for seed in range(100)]
        wants = [scid_oracle(bif, roi, t) for bif, roi, t in cases]
        start = time.perf_counter()
        for (bif, roi, template), want in zip(cases, wants):
            if want is None:
                with pytest.raises(ScidError):
                    enumerate_candidates(bif, roi, template)
                continue
            got = enumerate_candidates(bif, roi, template)
            pairs = sorted(
                (tuple(c.assignment[r.id] for r in template.roles), dict(c.realized_edges)) for c in got.candidates
            )
            assert pairs == want
        elapsed = time.perf_counter() - start
        assert elapsed < 10.0, f"took {elapsed:.2f} s"
        # the instances must exercise the interesting cases, not only trivial ones
        assert sum(1 for w in wants if w) >= 30
        assert any(w is None for w in wants)
        assert any(e.max_path_len == 2 for _, _, t in cases for e in t.edges)


# 2 -----------------------------------------------------------------------------------------


def test_02_fig6_golden(fig6):
    with criterion(2, "basal-ganglia template yields the actor-critic assignment and a consistent HCD"):
        _, rules, soft = fig6["rules"]
        cset = enumerate_candidates(fig6["bif"], fig6["roi"], fig6["template"])
        cset = rank_candidates(apply_rejection_rules(cset, rules), soft)
        by_label = {r.function_label: r.id for r in fig6["template"].roles}
        hits = [
            c
            for c in cset.surviving
            if c.assignment[by_label["action value calculator"]] == "str_matrix"
            and c.assignment[by_label["TD error calculator"]] == "snc"
        ]
        assert hits
        hcd, mapping = materialize_hcd(hits[0], cset)
        report = check_structural_consistency(fig6["bif"], hcd, mapping)
        assert report.passed and report.errors == []


# 3 -----------------------------------------------------------------------------------------

REF = (Citation("k"),)


def square() -> Bif:
    cs = [UniformCircuit(c, c, Species.RAT, Sign.EXCITATORY, Transmitter.GLUTAMATE, 10, REF) for c in "abcd"]
    ks = [Connection(a + b, a, b, Species.RAT, references=REF) for a, b in ("ab", "bc", "cd", "da")]
    return Bif.build("sq", cs, ks)


def identity_impl(bif: Bif, roi) -> ImplGraph:
    leaves = sorted({x for c in roi for x in uniform_leaves(bif, c)})
    inside = set(leaves)
    edges = sorted({(k.input, k.output) for k in bif.connections.values() if k.input in inside and k.output in inside})
    return ImplGraph("identity", bif.id, tuple(leaves), tuple(edges), {x: x for x in leaves})


def test_03_structural_extremes(fig6):
    with criterion(3, "structural similarity: identity 1.0, empty 0.0, edge deletion strictly lowers edge F1"):
        for bif, roi in ((square(), list("abcd")), (fig6["bif"], list(fig6["roi"]))):
            impl = identity_impl(bif, roi)
            assert structural_similarity(impl, bif, roi).combined == 1.0
            empty = ImplGraph("empty", bif.id, impl.nodes, impl.edges, {})
            assert structural_similarity(empty, bif, roi).combined == 0.0
        bif = square()
        impl = identity_impl(bif, list("abcd"))
        assert len(impl.nodes) == 4
        before = structural_similarity(impl, bif, list("abcd")).f1_edge
        after = structural_similarity(impl.without_edge(("b", "c")), bif, list("abcd")).f1_edge
        assert after < before


# 4 -----------------------------------------------------------------------------------------


def relay_chain(n: int) -> Hcd:
    comps = [Component(f"r{i}", "out", (PortSpec("out"),), (PortSpec("in"),), (), "relay") for i in range(n)]
    links = [DependencyLink(f"l{i}", (f"r{i}", "out"), (f"r{i + 1}", "in")) for i in range(n - 1)]
    return Hcd.build("chain", comps, links, [ExternalPort("x", (("r0", "in"),))], [ExternalPort("y", ((f"r{n - 1}", "out"),))])


def test_04_harness_determinism(fig6):
    with criterion(4, "byte-identical traces for seed 0 / 50 steps; pulse latency equals chain length 1..5"):
        hcd = fig6["hcd"]
        stubs = bind_stubs(hcd, fig6["stubs"])
        one, two = (trace_to_csv(run(hcd, stubs, fig6["schedule"], 50, 0)) for _ in range(2))
        assert one == two
        assert len(one.splitlines()) > 50
        relay = StubSpec("relay", "relay")
        for length in range(1, 6):
            hcd = relay_chain(length)
            for at in (0, 2, 7):
                steps = at + length + 4
                tr = run(hcd, {c: relay for c in hcd.components}, Schedule.pulse("x", steps, at), steps)
                out = tr.series(f"r{length - 1}", "out")
                assert [t for t, v in enumerate(out) if v] == [at + length]


# 5 -----------------------------------------------------------------------------------------


def as_trace(series: dict) -> Trace:
    steps = len(next(iter(series.values())))
    return Trace("h", steps, {k: tuple(float(x) for x in v) for k, v in series.items()})


def complement(tr: Trace) -> Trace:
    return Trace(tr.hcd_id, tr.steps, {k: tuple(0.0 if v >= 0.5 else 1.0 for v in vs) for k, vs in tr.values.items()})


def test_05_activity_bounds(fig6):
    with criterion(5, "activity reproducibility: self 1.0, complement 0.0, hand fixture 3/7 +- 1e-12"):
        hcd = fig6["hcd"]
        tr = run(hcd, bind_stubs(hcd, fig6["stubs"]), fig6["schedule"], 50, 0)
        pairing = [(k, k) for k in sorted(tr.values)]
        assert activity_reproducibility(tr, tr, pairing).mean == 1.0
        assert activity_reproducibility(tr, complement(tr), pairing).mean == 0.0
        a = [1, 1, 1, 1, 1, 0, 0, 0, 0, 0]
        b = [1, 1, 1, 0, 0, 1, 1, 0, 0, 0]
        score = activity_reproducibility(as_trace({("x", "o"): a}), as_trace({("y", "o"): b}), [(("x", "o"), ("y", "o"))])
        assert abs(score.mean - 3 / 7) <= 1e-12


# 6 -----------------------------------------------------------------------------------------


def cli(*argv, cwd=None) -> subprocess.CompletedProcess:
    return subprocess.run(
        [sys.executable, "-m", "bra.cli", *map(str, argv)], capture_output=True, text=True, cwd=cwd, timeout=60
    )


def test_06_adequacy_gating(fig6, tmp_path):
    with criterion(6, "removing one connection's references blocks certification and names that connection"):
        harness = HarnessConfig(bind_stubs(fig6["hcd"], fig6["stubs"]), fig6["schedule"], 50, 0)
        victim = "ctx_matrix"
        good = evaluate_adequacy(fig6["bif"], fig6["hcd"], fig6["mapping"], harness=harness, milestones=fig6["milestones"])
        assert good.certifiable
        conns = dict(fig6["bif"].connections)
        conns[victim] = replace(conns[victim], references=())
        stripped = replace(fig6["bif"], connections=conns)
        bad = evaluate_adequacy(stripped, fig6["hcd"], fig6["mapping"], harness=harness, milestones=fig6["milestones"])
        assert not bad.certifiable
        assert sorted({f.element for f in bad.findings if f.severity == "error"}) == [victim]

        bif_file = tmp_path / "stripped.json"
        bif_file.write_text(docs.serialize_bif(stripped))
        store = tmp_path / "store"
        assert cli("registry", "add", "--store", store, "--kind", "bif", "--file", bif_file).returncode == 0
        assert cli("registry", "submit", "--store", store, "--kind", "bif", "--id", stripped.id).returncode == 0
        refused = cli("registry", "certify", "--store", store, "--kind", "bif", "--id", stripped.id, "--format", "json")
        assert refused.returncode == 1
        assert {f["element"] for f in json.loads(refused.stdout)["findings"]} == {victim}

        # the HCD gate refuses with the failing adequacy report too
        adq = tmp_path / "adq.json"
        adq.write_text(json.dumps({"format_version": "1.0", "kind": "adequacy_report", **bad.to_dict()}))
        assert cli("registry", "add", "--store", store, "--kind", "hcd", "--file", FIX / "fig6_hcd.json").returncode == 0
        assert cli("registry", "submit", "--store", store, "--kind", "hcd", "--id", fig6["hcd"].id).returncode == 0
        res = cli("registry", "certify", "--store", store, "--kind", "hcd", "--id", fig6["hcd"].id, "--adequacy", adq)
        assert res.returncode == 1


# 7 -----------------------------------------------------------------------------------------


def test_07_merge_detection(fig10):
    with criterion(7, "merge scan finds exactly C and D; merged HCD keeps input1->output1 and input2->output2"):
        shared = merge_scan(fig10["map_a"], fig10["map_b"])
        assert {p.a for p in shared} == {"C", "D"} and {p.b for p in shared} == {"C", "D"}
        assert len(shared) == 2
        for policy, scores in (("select-by-fidelity", {c: {"structural": 1.0, "functional": 1.0} for c in "ABCDEF"}), ("redesign", None)):
            merged = plan_merge(shared, fig10["hcd_a"], fig10["hcd_b"], scores, scores, policy).merged_hcd
            paths = external_paths(merged)
            assert {("input1", "output1"), ("input2", "output2")} <= paths


# 8 -----------------------------------------------------------------------------------------

ROUND_TRIP = {
    "bif": ("fig6_bif.json", docs.parse_bif_json, docs.serialize_bif),
    "hcd": ("fig6_hcd.json", docs.parse_hcd_json, docs.serialize_hcd),
    "mapping": ("fig6_mapping.json", docs.parse_mapping_json, docs.serialize_mapping),
    "template": ("fig6_template.json", docs.parse_template_json, docs.serialize_template),
    "rules": ("fig6_rules.json", docs.parse_rules_json, docs.serialize_rules),
    "stubs": ("fig6_stubs.json", docs.parse_stubs_json, docs.serialize_stubs),
    "schedule": ("fig6_schedule.csv", parse_schedule_csv, serialize_schedule),
}

FUZZED = {
    **{f"parse_{k}": p for k, p in docs.PARSERS.items()},
    "parse_document": docs.parse_document,
    "parse_impl_graph_json": docs.parse_impl_graph_json,
    "parse_behavior_constraints_json": docs.parse_behavior_constraints_json,
    "parse_task_suite_json": docs.parse_task_suite_json,
    "parse_milestones_json": docs.parse_milestones_json,
    "parse_component_scores_json": docs.parse_component_scores_json,
    "parse_report_json": docs.parse_report_json,
    "parse_schedule_csv": parse_schedule_csv,
    "parse_trace_csv": parse_trace_csv,
}

ALPHABET = b'{}[]":,0123456789.-eE truefalsnul\n\r\t\\abcdkindformat_versionid/,t'


def fuzz_inputs(rng: random.Random, n: int):
    for i in range(n):
        size = rng.randrange(0, 96)
        if i % 2:
            yield rng.randbytes(size)
        else:
            # bytes drawn from JSON/CSV punctuation reach the deeper parsing layers
            yield bytes(rng.choice(ALPHABET) for _ in range(size))


def test_08_round_trips_and_fuzz():
    with criterion(8, "canonical fixtures round-trip byte-identically; 10,000 random inputs per parser fail cleanly"):
        for name, parse, serialize in ROUND_TRIP.values():
            text = fixture_text(name)
            assert serialize(parse(text)) == text, name
        crashes = []
        for pname, parser in FUZZED.items():
            for data in fuzz_inputs(random.Random(pname), 10_000):
                try:
                    parser(data)
                except ParseError as exc:
                    if not (exc.line >= 1 and exc.column >= 1):
                        crashes.append((pname, data, "no location"))
                except Exception as exc:  # any other exception is a crash
                    crashes.append((pname, data, repr(exc)))
        assert crashes == []


# 9 -----------------------------------------------------------------------------------------


def test_09_ablation_locality():
    with criterion(9, "ablation never changes components with no path from the ablated one (20 DAGs)"):
        relay = StubSpec("r", "relay", {"noise": 0.05})
        checked = 0
        for seed in range(20):
            rng = random.Random(seed)
            hcd = random_dag_hcd(rng)
            steps = 15
            sched = Schedule({"x": tuple(float(rng.random() < 0.3) for _ in range(steps))})
            base = run(hcd, {c: relay for c in hcd.components}, sched, steps, seed)
            for victim in sorted(hcd.components):
                cut = ablate(hcd, [victim])
                after = run(cut, {c: relay for c in cut.components}, sched, steps, seed)
                affected = reach(hcd_successors(hcd), [victim])
                for (comp, port), series in base.values.items():
                    if comp not in affected:
                        assert after.values[(comp, port)] == series, (seed, victim, comp)
                        checked += 1
        assert checked > 0


# 10 ----------------------------------------------------------------------------------------


def test_10_cli_pipeline(tmp_path):
    with criterion(10, "CLI pipeline validate -> scid -> adequacy -> certify -> harness -> fidelity exits 0 in < 5 s"):
        f = {p.stem: p for p in FIX.iterdir()}
        store, adq, trace = tmp_path / "store", tmp_path / "adq.json", tmp_path / "trace.csv"
        hcd_id = json.loads(f["fig6_hcd"].read_text())["id"]
        steps = [
            ["validate", "bif", f["fig6_bif"]],
            ["scid", "materialize", "--bif", f["fig6_bif"], "--roi", "basal_ganglia", "--template", f["fig6_template"],
             "--rules", f["fig6_rules"], "--out-hcd", tmp_path / "cand.json", "--out-mapping", tmp_path / "cand_map.json"],
            ["adequacy", "--bif", f["fig6_bif"], "--hcd", f["fig6_hcd"], "--mapping", f["fig6_mapping"],
             "--stubs", f["fig6_stubs"], "--schedule", f["fig6_schedule"], "--milestones", f["fig6_milestones"], "--out", adq],
            ["registry", "add", "--store", store, "--kind", "hcd", "--file", f["fig6_hcd"], "--roi", "basal_ganglia"],
            ["registry", "submit", "--store", store, "--kind", "hcd", "--id", hcd_id],
            ["registry", "certify", "--store", store, "--kind", "hcd", "--id", hcd_id, "--adequacy", adq],
            ["harness", "run", "--hcd", f["fig6_hcd"], "--stubs", f["fig6_stubs"], "--schedule", f["fig6_schedule"],
             "--steps", 50, "--seed", 0, "--out", trace],
            ["fidelity", "functional", "--hcd", f["fig6_hcd"], "--trace", trace, "--constraints", f["fig6_constraints"]],
            ["fidelity", "performance", "--hcd", f["fig6_hcd"], "--stubs", f["fig6_stubs"], "--tasks", f["fig6_tasks"]],
        ]
        start = time.perf_counter()
        for argv in steps:
            res = cli(*argv, cwd=tmp_path)
            assert res.returncode == 0, (argv[:2], res.stderr)
        elapsed = time.perf_counter() - start
        assert elapsed < 5.0, f"took {elapsed:.2f} s"
        listing = json.loads(cli("registry", "list", "--store", store, "--state", "certified", "--format", "json").stdout)
        assert [e["id"] for e in listing["entries"]] == [hcd_id]
