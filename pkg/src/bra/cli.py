"""``bra``: command-line entry point.

Exit codes: 0 success, 1 a validation, check or certification failure,
2 a usage, parse or I/O problem. ``--format json`` makes every output a
versioned JSON document.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Any, Callable, Sequence

from . import harness as hx
from .bif import UnknownElementError, validate_bif
from .binding import HarnessConfig, check_structural_consistency, evaluate_adequacy
from .fidelity import (
    FidelityReport,
    activity_reproducibility,
    component_scores,
    functional_similarity,
    impl_from_hcd,
    performance_eval,
    structural_similarity,
)
from .hcd import validate_hcd
from .io import documents as docs
from .io.dot import export_dot
from .io.jsonloc import FORMAT_VERSION, ParseError, canonical_json
from .io.tabular import import_bif_tsv, parse_schedule_csv, parse_trace_csv
from .merge import POLICIES, SELECT, MergeError, merge_scan, plan_merge
from .registry import KINDS, STATES, CertificationRefused, RegistryError, Store, StoreCorruptedError, default_store_path
from .reports import ValidationReport
from .scid import (
    MaterializeError,
    ScidError,
    apply_rejection_rules,
    check_io_feasibility,
    enumerate_candidates,
    materialize_hcd,
    rank_candidates,
)

OK, FAILED, USAGE = 0, 1, 2


class CliError(Exception):
    """Bad input or environment: exit 2."""


class CheckFailed(Exception):
    """A check or refusal: exit 1. ``payload`` is printed as the result."""

    def __init__(self, message: str, payload: dict | None = None):
        super().__init__(message)
        self.payload = payload


# -- helpers ---------------------------------------------------------------------------


def _read(path: str) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror or exc}") from None


def _write(path: str, text: str) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise CliError(f"cannot write {path}: {exc.strerror or exc}") from None


def _load(parser: Callable[[bytes], Any], path: str) -> Any:
    try:
        return parser(_read(path))
    except ParseError as exc:
        raise ParseError(f"{path}: {exc.message}", exc.line, exc.column, exc.element, exc.field) from None


def _roi(values: Sequence[str] | None) -> list[str]:
    out: list[str] = []
    for v in values or ():
        out.extend(p for p in v.split(",") if p)
    return out


def _doc(kind: str, **body) -> dict:
    return {"format_version": FORMAT_VERSION, "kind": kind, **body}


def _emit(args, doc: dict, text: str | None = None) -> None:
    if args.format == "json":
        sys.stdout.write(canonical_json(doc))
    else:
        sys.stdout.write((text if text is not None else _text(doc)).rstrip("\n") + "\n")


def _text(doc: dict, indent: str = "") -> str:
    lines = []
    for k, v in doc.items():
        if k in ("format_version",):
            continue
        if isinstance(v, dict):
            lines.append(f"{indent}{k}:")
            lines.append(_text(v, indent + "  "))
        elif isinstance(v, list) and v and isinstance(v[0], dict):
            lines.append(f"{indent}{k}:")
            for item in v:
                lines.append(f"{indent}  - " + ", ".join(f"{ik}={iv}" for ik, iv in item.items()))
        else:
            lines.append(f"{indent}{k}: {v}")
    return "\n".join(x for x in lines if x)


def _report_doc(report: ValidationReport, kind: str = "validation_report") -> dict:
    d = report.to_dict()
    return _doc(kind, **d)


def _report_text(report: ValidationReport) -> str:
    if not report.findings:
        return f"{report.subject}: ok"
    lines = [f"{report.subject}: {len(report.errors)} error(s), {len(report.warnings)} warning(s)"]
    for f in report.sorted():
        lines.append(f"  {f.severity}: {f.element}: {f.rule}" + (f" ({f.message})" if f.message else ""))
    return "\n".join(lines)


def _harness_config(args, hcd) -> HarnessConfig | None:
    if not getattr(args, "stubs", None):
        return None
    specs, overrides = _load(docs.parse_stubs_json, args.stubs)
    bindings = hx.bind_stubs(hcd, specs, overrides)
    if not getattr(args, "schedule", None):
        raise CliError("--stubs needs --schedule")
    schedule = _load(parse_schedule_csv, args.schedule)
    steps = args.steps if args.steps is not None else schedule.steps
    return HarnessConfig(bindings, schedule, steps, args.seed)


# -- validate ---------------------------------------------------------------------------


def cmd_validate_bif(args) -> int:
    bif = _load(docs.parse_bif_json, args.file)
    report = validate_bif(bif)
    _emit(args, _report_doc(report), _report_text(report))
    return OK if report.ok else FAILED


def cmd_validate_hcd(args) -> int:
    hcd = _load(docs.parse_hcd_json, args.file)
    report = validate_hcd(hcd)
    if args.mapping:
        if not args.bif:
            raise CliError("--mapping needs --bif")
        bif = _load(docs.parse_bif_json, args.bif)
        mapping = _load(docs.parse_mapping_json, args.mapping)
        report.extend(check_structural_consistency(bif, hcd, mapping).findings)
    _emit(args, _report_doc(report), _report_text(report))
    return OK if report.ok else FAILED


# -- adequacy ---------------------------------------------------------------------------


def cmd_adequacy(args) -> int:
    bif = _load(docs.parse_bif_json, args.bif)
    hcd = _load(docs.parse_hcd_json, args.hcd)
    mapping = _load(docs.parse_mapping_json, args.mapping)
    store = Store.open(args.store) if args.store else None
    trace = _load(lambda b: parse_trace_csv(b, hcd.id), args.trace) if args.trace else None
    config = _harness_config(args, hcd)
    schedule = config.schedule if config else (_load(parse_schedule_csv, args.schedule) if args.schedule else None)
    milestones = _load(docs.parse_milestones_json, args.milestones) if args.milestones else ()
    report = evaluate_adequacy(
        bif, hcd, mapping, store, trace, harness=config, schedule=schedule, milestones=milestones
    )
    doc = _doc("adequacy_report", seed=args.seed, **report.to_dict())
    if args.out:
        _write(args.out, canonical_json(doc))
    lines = [f"adequacy {hcd.id} on {bif.id}: {'certifiable' if report.certifiable else 'NOT certifiable'} (seed {args.seed})"]
    for name, c in sorted(report.criteria.items()):
        lines.append(f"  {name}: {c['status']}")
        for f in c["findings"]:
            lines.append(f"    {f.severity}: {f.element}: {f.rule}" + (f" ({f.message})" if f.message else ""))
    _emit(args, doc, "\n".join(lines))
    return OK if report.certifiable else FAILED


# -- scid --------------------------------------------------------------------------------


def _scid_pipeline(args, stage: str):
    bif = _load(docs.parse_bif_json, args.bif)
    template = _load(docs.parse_template_json, args.template)
    if args.max_path_len is not None:
        if args.max_path_len < 1:
            raise CliError("--max-path-len must be >= 1")
        template = template.with_max_path_len(args.max_path_len)
    roi = _roi(args.roi)
    if not roi:
        raise CliError("--roi is empty")
    if stage == "feasible":
        return check_io_feasibility(bif, roi, template)
    cset = enumerate_candidates(
        bif, roi, template, args.limit, injective=not args.non_injective, jobs=args.jobs
    )
    if stage == "enumerate":
        return cset
    if not args.rules:
        raise CliError(f"scid {stage} needs --rules")
    _, rules, soft = _load(docs.parse_rules_json, args.rules)
    cset = apply_rejection_rules(cset, rules)
    if stage == "filter":
        return cset
    return rank_candidates(cset, soft)


def _cset_text(cset) -> str:
    lines = [f"{len(cset.candidates)} candidate(s), {len(cset.surviving)} surviving" + (" (truncated)" if cset.truncated else "")]
    for c in cset.candidates:
        assign = ", ".join(f"{r}={v}" for r, v in c.assignment.items())
        extra = f" rejected by {c.rejected_by}" if c.rejected_by else f" score {c.score:g}"
        lines.append(f"  [{c.status}] {assign}{extra}")
    return "\n".join(lines)


def cmd_scid(args) -> int:
    stage = args.stage
    result = _scid_pipeline(args, stage)
    if stage == "feasible":
        _emit(
            args,
            _doc("feasibility", **result.to_dict()),
            "feasible" if result.feasible else "infeasible: cannot bind " + ", ".join(result.unbindable),
        )
        return OK if result.feasible else FAILED
    cset = result
    if stage != "materialize":
        _emit(args, _doc("candidate_set", stage=stage, **cset.to_dict()), _cset_text(cset))
        return OK
    surviving = cset.surviving
    if not surviving:
        raise CheckFailed("no surviving candidate", _doc("materialize_result", candidate=None))
    if not 0 <= args.candidate < len(surviving):
        raise CliError(f"--candidate {args.candidate} out of range (0..{len(surviving) - 1})")
    cand = surviving[args.candidate]
    hcd, mapping = materialize_hcd(cand, cset, args.hcd_id)
    if args.out_hcd:
        _write(args.out_hcd, docs.serialize_hcd(hcd))
    if args.out_mapping:
        _write(args.out_mapping, docs.serialize_mapping(mapping))
    doc = _doc(
        "materialize_result",
        candidate=cand.to_dict(),
        hcd=docs.hcd_to_dict(hcd),
        mapping=docs.mapping_to_dict(mapping),
    )
    _emit(args, doc, f"materialized {hcd.id}: {len(hcd.components)} component(s), {len(hcd.links)} link(s)")
    return OK


# -- registry ----------------------------------------------------------------------------

_KIND_PARSERS = {k: docs.PARSERS[k] for k in KINDS}


def _store(args) -> Store:
    return Store.open(args.store or default_store_path())


def _entry_doc(e) -> dict:
    return _doc("registry_entry", entry=e.summary(), review_log=e.review_log)


def cmd_registry(args) -> int:
    store = _store(args)
    if args.action == "add":
        obj = _load(_KIND_PARSERS[args.kind], args.file)
        dups = store.novelty_check(args.kind, obj)
        entry = store.add(args.kind, obj, roi=_roi(args.roi) or None, notes=args.notes)
        doc = _entry_doc(entry)
        doc["duplicates"] = [d.to_dict() for d in dups]
        _emit(args, doc, f"added {entry.ref} ({entry.state}); {len(dups)} duplicate element(s)")
        return OK
    if args.action == "list":
        entries = store.query(args.kind, _roi(args.roi) or None, args.label_prefix, args.state)
        doc = _doc("registry_listing", entries=[e.summary() for e in entries])
        text = "\n".join(f"{e.ref}\t{e.state}\t{e.certified_at or '-'}" for e in entries) or "(no entries)"
        _emit(args, doc, text)
        return OK
    kw = dict(reviewer=args.reviewer, notes=args.notes)
    try:
        if args.action == "submit":
            entry = store.submit(args.kind, args.id, args.version, **kw)
        elif args.action == "reject":
            entry = store.reject(args.kind, args.id, args.version, **kw)
        else:
            adequacy = None
            if args.adequacy:
                adequacy = _load(docs.parse_report_json, args.adequacy)
            entry = store.certify(args.kind, args.id, args.version, adequacy=adequacy, **kw)
    except CertificationRefused as exc:
        raise CheckFailed(
            str(exc), _doc("certification_refused", findings=[f.to_dict() for f in exc.findings])
        ) from None
    except KeyError as exc:
        raise CliError(str(exc.args[0])) from None
    _emit(args, _entry_doc(entry), f"{entry.ref}: {entry.state}")
    return OK


# -- harness -------------------------------------------------------------------------------


def cmd_harness_run(args) -> int:
    hcd = _load(docs.parse_hcd_json, args.hcd)
    config = _harness_config(args, hcd)
    assert config is not None
    trace = hx.run(hcd, config.bindings, config.schedule, config.steps, config.seed)
    csv_text = hx.trace_to_csv(trace)
    if args.out:
        _write(args.out, csv_text)
    doc = _doc(
        "harness_run",
        hcd_id=hcd.id,
        steps=trace.steps,
        seed=trace.seed,
        config_hash=trace.config_hash,
        out=args.out,
    )
    if args.out or args.format == "json":
        _emit(args, doc, f"ran {hcd.id} for {trace.steps} step(s), seed {trace.seed}, config {trace.config_hash[:12]}")
    else:
        sys.stdout.write(csv_text)
    return OK


# -- fidelity -------------------------------------------------------------------------------


def _pair(spec: str):
    try:
        left, right = spec.split("=", 1)
        a, b = left.split("/", 1), right.split("/", 1)
        return (a[0], a[1]), (b[0], b[1])
    except (ValueError, IndexError):
        raise CliError(f"--pair must look like comp/port=refcomp/refport, got {spec!r}") from None


def cmd_fidelity(args) -> int:
    report = FidelityReport(config={"seed": args.seed})
    if args.measure == "structural":
        bif = _load(docs.parse_bif_json, args.bif)
        if args.impl:
            impl = _load(docs.parse_impl_graph_json, args.impl)
        elif args.hcd and args.mapping:
            impl = impl_from_hcd(_load(docs.parse_hcd_json, args.hcd), _load(docs.parse_mapping_json, args.mapping))
        else:
            raise CliError("structural needs --impl or --hcd with --mapping")
        roi = _roi(args.roi)
        report.structural = structural_similarity(impl, bif, roi)
        report.config.update(impl=impl.id, bif=bif.id, roi=sorted(roi))
    elif args.measure == "functional":
        hcd = _load(docs.parse_hcd_json, args.hcd)
        trace = _load(lambda b: parse_trace_csv(b, hcd.id), args.trace)
        constraints = _load(docs.parse_behavior_constraints_json, args.constraints)
        report.functional = functional_similarity(trace, hcd, constraints, args.threshold)
        report.config.update(hcd=hcd.id, threshold=args.threshold)
    elif args.measure == "activity":
        trace = _load(parse_trace_csv, args.trace)
        ref = _load(parse_trace_csv, args.reference)
        pairs = [_pair(p) for p in args.pair or ()]
        report.activity = activity_reproducibility(trace, ref, pairs, args.threshold)
        report.config.update(threshold=args.threshold)
    elif args.measure == "performance":
        hcd = _load(docs.parse_hcd_json, args.hcd)
        specs, overrides = _load(docs.parse_stubs_json, args.stubs)
        tasks = _load(docs.parse_task_suite_json, args.tasks)
        report.performance = performance_eval(hcd, hx.bind_stubs(hcd, specs, overrides), tasks)
        report.config.update(hcd=hcd.id)
    else:  # components
        bif = _load(docs.parse_bif_json, args.bif)
        hcd = _load(docs.parse_hcd_json, args.hcd)
        mapping = _load(docs.parse_mapping_json, args.mapping)
        trace = _load(lambda b: parse_trace_csv(b, hcd.id), args.trace) if args.trace else None
        constraints = _load(docs.parse_behavior_constraints_json, args.constraints) if args.constraints else ()
        report.components = component_scores(hcd, mapping, bif, trace, constraints)
        report.config.update(hcd=hcd.id, bif=bif.id)
    doc = report.to_dict()
    if args.out:
        _write(args.out, canonical_json(doc))
    _emit(args, doc, _text({k: v for k, v in doc.items() if v not in (None, {}) and k != "definitions"}))
    return OK


# -- merge ------------------------------------------------------------------------------------


def cmd_merge(args) -> int:
    map_a = _load(docs.parse_mapping_json, args.map_a)
    map_b = _load(docs.parse_mapping_json, args.map_b)
    bif = _load(docs.parse_bif_json, args.bif) if args.bif else None
    level = _roi(args.level) if args.level else None
    shared = merge_scan(map_a, map_b, bif=bif, level=level)
    if args.action == "scan":
        doc = _doc("merge_scan", shared=[p.to_dict() for p in shared])
        _emit(args, doc, "\n".join(f"{p.circuit}: {p.a} <-> {p.b}" for p in shared) or "(nothing shared)")
        return OK
    if not (args.hcd_a and args.hcd_b):
        raise CliError("merge plan needs --hcd-a and --hcd-b")
    hcd_a = _load(docs.parse_hcd_json, args.hcd_a)
    hcd_b = _load(docs.parse_hcd_json, args.hcd_b)
    sa = _load(docs.parse_component_scores_json, args.fidelity_a) if args.fidelity_a else None
    sb = _load(docs.parse_component_scores_json, args.fidelity_b) if args.fidelity_b else None
    plan = plan_merge(shared, hcd_a, hcd_b, sa, sb, args.policy)
    if args.out_hcd:
        _write(args.out_hcd, docs.serialize_hcd(plan.merged_hcd))
    doc = plan.to_dict()
    lines = [f"merged {plan.merged_hcd.id}: {len(plan.merged_hcd.components)} component(s)"]
    for d in plan.decisions:
        lines.append(f"  {d.pair.circuit}: {d.pair.a} <-> {d.pair.b} -> {d.strategy}, keep {d.survivor}" + (f" [{', '.join(d.flags)}]" if d.flags else ""))
    _emit(args, doc, "\n".join(lines))
    return OK if plan.validation.ok else FAILED


# -- export / import -------------------------------------------------------------------------


def cmd_export_dot(args) -> int:
    kind, obj = docs.parse_document(_read(args.input))
    if kind not in ("bif", "hcd"):
        raise CliError(f"cannot draw a {kind} document")
    mapping = _load(docs.parse_mapping_json, args.mapping) if args.mapping else None
    bif = _load(docs.parse_bif_json, args.bif) if args.bif else None
    if mapping is not None and kind != "hcd":
        raise CliError("--mapping applies to an HCD")
    text = export_dot(obj, mapping, bif)
    if args.out:
        _write(args.out, text)
        _emit(args, _doc("export", out=args.out, bytes=len(text.encode())), f"wrote {args.out}")
    elif args.format == "json":
        _emit(args, _doc("export", dot=text))
    else:
        sys.stdout.write(text)
    return OK


def cmd_import_tsv(args) -> int:
    bif, log = import_bif_tsv(_read(args.circuits), _read(args.connections), args.id)
    text = docs.serialize_bif(bif)
    if args.out:
        _write(args.out, text)
    doc = _doc(
        "import_log",
        bif_id=bif.id,
        circuits=len(bif.circuits),
        connections=len(bif.connections),
        defaulted=[{"sheet": s, "row": r, "column": c, "value": v} for s, r, c, v in log.defaulted],
    )
    if args.out or args.format == "json":
        _emit(args, doc, "\n".join([f"imported {bif.id}: {len(bif.circuits)} circuits, {len(bif.connections)} connections", *log.lines()]))
    else:
        sys.stdout.write(text)
    return OK


# -- parser ------------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("text", "json"), default="text")
    seeded = argparse.ArgumentParser(add_help=False)
    seeded.add_argument("--seed", type=int, default=0)
    harnessed = argparse.ArgumentParser(add_help=False)
    harnessed.add_argument("--stubs")
    harnessed.add_argument("--schedule")
    harnessed.add_argument("--steps", type=int)

    p = argparse.ArgumentParser(prog="bra", description="Brain Reference Architecture toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("validate", help="check a document").add_subparsers(dest="what", required=True)
    vb = v.add_parser("bif", parents=[common])
    vb.add_argument("file")
    vb.set_defaults(func=cmd_validate_bif)
    vh = v.add_parser("hcd", parents=[common])
    vh.add_argument("file")
    vh.add_argument("--bif")
    vh.add_argument("--mapping")
    vh.set_defaults(func=cmd_validate_hcd)

    a = sub.add_parser("adequacy", parents=[common, seeded, harnessed], help="inspect an HCD and its mapping")
    for name in ("--bif", "--hcd", "--mapping"):
        a.add_argument(name, required=True)
    a.add_argument("--store")
    a.add_argument("--trace")
    a.add_argument("--milestones")
    a.add_argument("--out")
    a.set_defaults(func=cmd_adequacy)

    s = sub.add_parser("scid", help="generate candidate HCDs").add_subparsers(dest="stage", required=True)
    for stage in ("feasible", "enumerate", "filter", "rank", "materialize"):
        sp = s.add_parser(stage, parents=[common])
        sp.add_argument("--bif", required=True)
        sp.add_argument("--roi", action="append", required=True, help="circuit ids, comma separated or repeated")
        sp.add_argument("--template", required=True)
        sp.add_argument("--rules")
        sp.add_argument("--limit", type=int)
        sp.add_argument("--max-path-len", type=int)
        sp.add_argument("--jobs", type=int, default=1)
        sp.add_argument("--non-injective", action="store_true")
        if stage == "materialize":
            sp.add_argument("--candidate", type=int, default=0, help="index among surviving candidates")
            sp.add_argument("--hcd-id")
            sp.add_argument("--out-hcd")
            sp.add_argument("--out-mapping")
        sp.set_defaults(func=cmd_scid)

    r = sub.add_parser("registry", help="the BRA store").add_subparsers(dest="action", required=True)
    for action in ("add", "submit", "certify", "reject", "list"):
        rp = r.add_parser(action, parents=[common])
        rp.add_argument("--store", help="store directory (default: $BRA_STORE or ./store)")
        if action == "list":
            rp.add_argument("--kind", choices=KINDS)
            rp.add_argument("--roi", action="append")
            rp.add_argument("--label-prefix")
            rp.add_argument("--state", choices=STATES)
        else:
            rp.add_argument("--kind", choices=KINDS, required=True)
            rp.add_argument("--notes", default="")
        if action == "add":
            rp.add_argument("--file", required=True)
            rp.add_argument("--roi", action="append")
        elif action != "list":
            rp.add_argument("--id", required=True)
            rp.add_argument("--version", type=int)
            rp.add_argument("--reviewer", default="")
        if action == "certify":
            rp.add_argument("--adequacy", help="adequacy report JSON (HCDs and mappings)")
        rp.set_defaults(func=cmd_registry)

    h = sub.add_parser("harness", help="run stubs").add_subparsers(dest="action", required=True)
    hr = h.add_parser("run", parents=[common, seeded])
    hr.add_argument("--hcd", required=True)
    hr.add_argument("--stubs", required=True)
    hr.add_argument("--schedule", required=True)
    hr.add_argument("--steps", type=int)
    hr.add_argument("--out")
    hr.set_defaults(func=cmd_harness_run)

    f = sub.add_parser("fidelity", help="fidelity measures").add_subparsers(dest="measure", required=True)
    for measure in ("structural", "functional", "activity", "performance", "components"):
        fp = f.add_parser(measure, parents=[common, seeded])
        fp.add_argument("--out")
        fp.add_argument("--threshold", type=float, default=hx.ACTIVE_THRESHOLD)
        if measure in ("structural", "components"):
            fp.add_argument("--bif", required=True)
            fp.add_argument("--hcd", required=measure == "components")
            fp.add_argument("--mapping", required=measure == "components")
        if measure == "structural":
            fp.add_argument("--impl")
            fp.add_argument("--roi", action="append", required=True)
        if measure in ("functional", "components"):
            if measure == "functional":
                fp.add_argument("--hcd", required=True)
            fp.add_argument("--trace", required=measure == "functional")
            fp.add_argument("--constraints", required=measure == "functional")
        if measure == "activity":
            fp.add_argument("--trace", required=True)
            fp.add_argument("--reference", required=True)
            fp.add_argument("--pair", action="append", required=True, help="comp/port=refcomp/refport")
        if measure == "performance":
            fp.add_argument("--hcd", required=True)
            fp.add_argument("--stubs", required=True)
            fp.add_argument("--tasks", required=True)
        fp.set_defaults(func=cmd_fidelity)

    m = sub.add_parser("merge", help="merge development").add_subparsers(dest="action", required=True)
    for action in ("scan", "plan"):
        mp = m.add_parser(action, parents=[common])
        mp.add_argument("--map-a", required=True)
        mp.add_argument("--map-b", required=True)
        mp.add_argument("--bif")
        mp.add_argument("--level", action="append", help="lift both mappings to these circuits first")
        if action == "plan":
            mp.add_argument("--hcd-a")
            mp.add_argument("--hcd-b")
            mp.add_argument("--fidelity-a")
            mp.add_argument("--fidelity-b")
            mp.add_argument("--policy", choices=POLICIES, default=SELECT)
            mp.add_argument("--out-hcd")
        mp.set_defaults(func=cmd_merge)

    e = sub.add_parser("export", help="render documents").add_subparsers(dest="what", required=True)
    ed = e.add_parser("dot", parents=[common])
    ed.add_argument("--in", dest="input", required=True)
    ed.add_argument("--mapping")
    ed.add_argument("--bif")
    ed.add_argument("--out")
    ed.set_defaults(func=cmd_export_dot)

    it = sub.add_parser("import-tsv", parents=[common], help="spreadsheet sheets to BIF JSON")
    it.add_argument("--circuits", required=True)
    it.add_argument("--connections", required=True)
    it.add_argument("--id", required=True)
    it.add_argument("--out")
    it.set_defaults(func=cmd_import_tsv)
    return p


def _fail(args, code: int, kind: str, message: str, payload: dict | None = None) -> int:
    doc = payload or _doc("error", error=kind, message=message)
    doc.setdefault("message", message)
    if getattr(args, "format", "text") == "json":
        sys.stdout.write(canonical_json(doc))
    else:
        if payload and payload.get("findings"):
            for f in payload["findings"]:
                sys.stdout.write(f"{f['severity']}: {f['element']}: {f['rule']}\n")
    sys.stderr.write(f"bra: {kind}: {message}\n")
    return code


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except CheckFailed as exc:
        return _fail(args, FAILED, "check-failed", str(exc), exc.payload)
    except ParseError as exc:
        return _fail(args, USAGE, "parse-error", str(exc), _doc("error", error="parse-error", **exc.to_dict()))
    except (CliError, UnknownElementError, StoreCorruptedError, OSError) as exc:
        return _fail(args, USAGE, "usage", str(exc))
    except (ScidError, MaterializeError, MergeError, RegistryError, hx.HarnessError) as exc:
        return _fail(args, FAILED, type(exc).__name__, str(exc))
    except ValueError as exc:
        return _fail(args, FAILED, "invalid", str(exc))


def console() -> None:  # pragma: no cover - console script shim
    sys.exit(main())


if __name__ == "__main__":  # pragma: no cover
    console()
