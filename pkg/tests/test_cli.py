from __future__ import annotations

import json
from pathlib import Path

import pytest

from bra.cli import main

FIX = Path(__file__).parent / "fixtures"


def f(name: str) -> str:
    return str(FIX / name)


def bra(capsys, *argv) -> tuple[int, str, str]:
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def bra_json(capsys, *argv) -> tuple[int, dict]:
    code, out, _ = bra(capsys, *argv, "--format", "json")
    return code, json.loads(out)


SCID = ["--bif", f("fig6_bif.json"), "--roi", "basal_ganglia", "--template", f("fig6_template.json")]
ADEQ = [
    "adequacy",
    "--bif", f("fig6_bif.json"),
    "--hcd", f("fig6_hcd.json"),
    "--mapping", f("fig6_mapping.json"),
    "--stubs", f("fig6_stubs.json"),
    "--schedule", f("fig6_schedule.csv"),
    "--milestones", f("fig6_milestones.json"),
]


# -- exit codes -------------------------------------------------------------------------


def test_validate_ok_and_failure(capsys):
    assert bra(capsys, "validate", "bif", f("fig6_bif.json"))[0] == 0
    code, doc = bra_json(capsys, "validate", "bif", f("broken_bif.json"))
    assert code == 1
    assert doc["kind"] == "validation_report" and doc["format_version"] == "1.0"
    assert [x["rule"] for x in doc["findings"]] == ["dangling-endpoint"]


def test_validate_hcd_with_mapping(capsys):
    code, _, _ = bra(
        capsys, "validate", "hcd", f("fig6_hcd.json"), "--bif", f("fig6_bif.json"), "--mapping", f("fig6_mapping.json")
    )
    assert code == 0
    assert bra(capsys, "validate", "hcd", f("fig6_hcd.json"), "--mapping", f("fig6_mapping.json"))[0] == 2


def test_usage_errors_exit_2(capsys, tmp_path):
    assert bra(capsys, "bogus")[0] == 2
    assert bra(capsys, "validate", "bif")[0] == 2
    code, _, err = bra(capsys, "validate", "bif", tmp_path / "missing.json")
    assert code == 2 and "cannot read" in err


def test_parse_error_is_structured(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"format_version": "1.0", "kind": "bif", "id": 3}')
    code, doc = bra_json(capsys, "validate", "bif", bad)
    assert code == 2
    assert doc["kind"] == "error" and doc["error"] == "parse-error"
    assert (doc["line"], doc["column"], doc["field"]) == (1, 1, "circuits")


def test_wrong_document_kind_is_parse_error(capsys):
    assert bra(capsys, "validate", "bif", f("fig6_hcd.json"))[0] == 2


# -- scid ---------------------------------------------------------------------------------


def test_scid_feasible_and_enumerate(capsys):
    code, doc = bra_json(capsys, "scid", "feasible", *SCID)
    assert code == 0 and doc["feasible"] is True
    code, doc = bra_json(capsys, "scid", "enumerate", *SCID)
    assert code == 0 and doc["kind"] == "candidate_set"
    assert doc["candidates"]


def test_scid_rank_needs_rules(capsys):
    assert bra(capsys, "scid", "rank", *SCID)[0] == 2
    code, doc = bra_json(capsys, "scid", "rank", *SCID, "--rules", f("fig6_rules.json"))
    assert code == 0
    surviving = [c for c in doc["candidates"] if c["status"] != "rejected"]
    assert surviving


def test_scid_materialize_writes_documents(capsys, tmp_path):
    h, m = tmp_path / "h.json", tmp_path / "m.json"
    code, _, _ = bra(
        capsys, "scid", "materialize", *SCID, "--rules", f("fig6_rules.json"), "--out-hcd", h, "--out-mapping", m
    )
    assert code == 0
    assert bra(capsys, "validate", "hcd", h, "--bif", f("fig6_bif.json"), "--mapping", m)[0] == 0
    code, _, _ = bra(capsys, "scid", "materialize", *SCID, "--rules", f("fig6_rules.json"), "--candidate", 999)
    assert code == 2


def test_scid_bad_max_path_len(capsys):
    assert bra(capsys, "scid", "enumerate", *SCID, "--max-path-len", 0)[0] == 2


# -- adequacy and registry -------------------------------------------------------------------


def test_adequacy_certifiable(capsys, tmp_path):
    out = tmp_path / "adq.json"
    code, _, _ = bra(capsys, *ADEQ, "--out", out)
    assert code == 0
    assert json.loads(out.read_text())["certifiable"] is True


def _strip_refs(tmp_path: Path, connection: str) -> Path:
    doc = json.loads((FIX / "fig6_bif.json").read_text())
    for k in doc["connections"]:
        if k["id"] == connection:
            k["references"] = []
    p = tmp_path / "stripped.json"
    p.write_text(json.dumps(doc))
    return p


def test_adequacy_fails_without_references(capsys, tmp_path):
    bif = _strip_refs(tmp_path, "ctx_matrix")
    argv = [a if a != f("fig6_bif.json") else str(bif) for a in ADEQ]
    code, doc = bra_json(capsys, *argv)
    assert code == 1 and doc["certifiable"] is False
    auth = doc["criteria"]["bif.authenticity"]["findings"]
    assert {x["element"] for x in auth} == {"ctx_matrix"}


def test_registry_lifecycle(capsys, tmp_path):
    store = tmp_path / "store"
    adq = tmp_path / "adq.json"
    assert bra(capsys, *ADEQ, "--out", adq)[0] == 0
    code, doc = bra_json(capsys, "registry", "add", "--store", store, "--kind", "hcd", "--file", f("fig6_hcd.json"), "--roi", "basal_ganglia")
    assert code == 0 and doc["entry"]["version"] == 1
    # straight from draft is an illegal transition
    assert bra(capsys, "registry", "certify", "--store", store, "--kind", "hcd", "--id", "bg_actor_critic", "--adequacy", adq)[0] == 1
    assert bra(capsys, "registry", "submit", "--store", store, "--kind", "hcd", "--id", "bg_actor_critic")[0] == 0
    assert bra(capsys, "registry", "certify", "--store", store, "--kind", "hcd", "--id", "bg_actor_critic")[0] == 1
    code, doc = bra_json(capsys, "registry", "certify", "--store", store, "--kind", "hcd", "--id", "bg_actor_critic", "--adequacy", adq, "--reviewer", "rv")
    assert code == 0 and doc["entry"]["state"] == "certified"
    code, doc = bra_json(capsys, "registry", "list", "--store", store, "--state", "certified")
    assert [e["id"] for e in doc["entries"]] == ["bg_actor_critic"]
    assert bra(capsys, "registry", "submit", "--store", store, "--kind", "hcd", "--id", "nope")[0] == 2


def test_registry_refuses_unreferenced_bif(capsys, tmp_path):
    store = tmp_path / "store"
    bif = _strip_refs(tmp_path, "ctx_matrix")
    assert bra(capsys, "registry", "add", "--store", store, "--kind", "bif", "--file", bif)[0] == 0
    assert bra(capsys, "registry", "submit", "--store", store, "--kind", "bif", "--id", "bg_rat")[0] == 0
    code, doc = bra_json(capsys, "registry", "certify", "--store", store, "--kind", "bif", "--id", "bg_rat")
    assert code == 1 and doc["kind"] == "certification_refused"
    assert {x["element"] for x in doc["findings"]} == {"ctx_matrix"}


# -- harness and fidelity --------------------------------------------------------------------

RUN = ["harness", "run", "--hcd", f("fig6_hcd.json"), "--stubs", f("fig6_stubs.json"), "--schedule", f("fig6_schedule.csv")]


def test_harness_stdout_is_deterministic(capsys):
    a = bra(capsys, *RUN)
    b = bra(capsys, *RUN)
    assert a[0] == b[0] == 0
    assert a[1] == b[1] and a[1].startswith("t,")


def test_fidelity_measures(capsys, tmp_path):
    trace = tmp_path / "trace.csv"
    assert bra(capsys, *RUN, "--out", trace)[0] == 0
    code, doc = bra_json(capsys, "fidelity", "functional", "--hcd", f("fig6_hcd.json"), "--trace", trace, "--constraints", f("fig6_constraints.json"))
    assert code == 0 and doc["functional"]["fraction"] == 1.0
    code, doc = bra_json(capsys, "fidelity", "performance", "--hcd", f("fig6_hcd.json"), "--stubs", f("fig6_stubs.json"), "--tasks", f("fig6_tasks.json"))
    assert code == 0 and doc["performance"]["rate"] == 1.0
    code, doc = bra_json(capsys, "fidelity", "structural", "--bif", f("fig6_bif.json"), "--hcd", f("fig6_hcd.json"), "--mapping", f("fig6_mapping.json"), "--roi", "basal_ganglia")
    assert code == 0 and doc["structural"]["node_precision"] == 1.0
    code, doc = bra_json(capsys, "fidelity", "activity", "--trace", trace, "--reference", trace, "--pair", "D/TD error=D/TD error")
    assert code == 0 and doc["activity"]["mean"] == 1.0
    assert bra(capsys, "fidelity", "activity", "--trace", trace, "--reference", trace, "--pair", "nonsense")[0] == 2


def test_fidelity_components(capsys):
    code, doc = bra_json(capsys, "fidelity", "components", "--bif", f("fig6_bif.json"), "--hcd", f("fig6_hcd.json"), "--mapping", f("fig6_mapping.json"))
    assert code == 0
    assert all(v == {"structural": 1.0, "functional": 1.0} for v in doc["components"].values())


# -- merge, export, import -------------------------------------------------------------------

MERGE = ["--map-a", f("fig10_task1_mapping.json"), "--map-b", f("fig10_task2_mapping.json")]


def test_merge_scan_and_plan(capsys, tmp_path):
    code, doc = bra_json(capsys, "merge", "scan", *MERGE)
    assert code == 0
    assert [(p["circuit"], p["component_a"], p["component_b"]) for p in doc["shared"]] == [("c", "C", "C"), ("d", "D", "D")]
    out = tmp_path / "merged.json"
    code, doc = bra_json(
        capsys, "merge", "plan", *MERGE, "--hcd-a", f("fig10_task1.json"), "--hcd-b", f("fig10_task2.json"),
        "--policy", "redesign", "--out-hcd", out,
    )
    assert code == 0 and doc["kind"] == "merge_plan"
    assert bra(capsys, "validate", "hcd", out)[0] == 0
    # select-by-fidelity without scores cannot decide
    assert bra(capsys, "merge", "plan", *MERGE, "--hcd-a", f("fig10_task1.json"), "--hcd-b", f("fig10_task2.json"))[0] == 1


def test_export_dot(capsys):
    code, out, _ = bra(capsys, "export", "dot", "--in", f("fig6_bif.json"))
    assert code == 0 and out.startswith('digraph "bg_rat" {')
    code, out2, _ = bra(capsys, "export", "dot", "--in", f("fig6_hcd.json"), "--mapping", f("fig6_mapping.json"), "--bif", f("fig6_bif.json"))
    assert code == 0 and "cluster_0" in out2
    assert bra(capsys, "export", "dot", "--in", f("fig6_rules.json"))[0] == 2


def test_import_tsv_matches_twin(capsys):
    code, out, _ = bra(capsys, "import-tsv", "--circuits", f("twin_circuits.tsv"), "--connections", f("twin_connections.tsv"), "--id", "twin")
    assert code == 0
    assert out == (FIX / "twin_bif.json").read_text()


@pytest.mark.parametrize("fmt", ["text", "json"])
def test_every_json_output_is_versioned(capsys, fmt):
    code, out, _ = bra(capsys, "merge", "scan", *MERGE, "--format", fmt)
    assert code == 0
    if fmt == "json":
        assert json.loads(out)["format_version"] == "1.0"
    else:
        assert out == "c: C <-> C\nd: D <-> D\n"
