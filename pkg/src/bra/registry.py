"""File-backed store of BRA documents with a certification workflow.

Layout::

    <store>/index.json
    <store>/<kind>/<id>/<version>.json
    <store>/.lock

Each entry file holds the canonical payload plus workflow state. The index
duplicates the small per-entry facts needed for queries and novelty checks
so readers never have to open every entry. Writers take an exclusive file
lock; readers work from the snapshot loaded when the store was opened (or
last refreshed).
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable, Iterable

from filelock import FileLock

from .bif import Bif, Circuit, UniformCircuit
from .binding import AdequacyReport, BraMapping
from .hcd import Hcd
from .io.documents import TO_DICT
from .io.jsonloc import canonical_json
from .reports import ERROR, WARNING, Finding

KINDS = ("bif", "hcd", "mapping", "template", "rules")
DRAFT, IN_REVIEW, CERTIFIED, REJECTED = "draft", "in-review", "certified", "rejected"
STATES = (DRAFT, IN_REVIEW, CERTIFIED, REJECTED)
_NEXT = {DRAFT: {IN_REVIEW}, IN_REVIEW: {CERTIFIED, REJECTED}, CERTIFIED: set(), REJECTED: set()}
INDEX_VERSION = "1.0"


class RegistryError(Exception):
    pass


class StoreCorruptedError(RegistryError):
    pass


class IllegalTransitionError(RegistryError):
    def __init__(self, entry: str, state: str, wanted: str):
        self.state = state
        super().__init__(f"{entry}: cannot move from {state!r} to {wanted!r}")


class CertificationRefused(RegistryError):
    def __init__(self, entry: str, findings: list[Finding]):
        self.findings = findings
        ids = ", ".join(sorted({f.element for f in findings}))
        super().__init__(f"{entry}: certification refused ({ids})")


# -- content keys --------------------------------------------------------------------


def _digest(obj: Any) -> str:
    raw = json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False).encode()
    return hashlib.sha256(raw).hexdigest()


def bif_entry_keys(bif: Bif) -> dict[str, str]:
    """Element id -> content key. Ids and references do not contribute."""
    label = {cid: c.label for cid, c in bif.circuits.items()}
    keys = {}
    for cid, c in bif.circuits.items():
        if isinstance(c, UniformCircuit):
            salient = {
                "element": "uniform",
                "species": c.species.value,
                "label": c.label,
                "sign": c.sign.value,
                "transmitter": c.transmitter.value,
                "cell_count": c.cell_count,
            }
        else:
            assert isinstance(c, Circuit)
            salient = {
                "element": "circuit",
                "species": c.species.value,
                "label": c.label,
                "members": sorted(label.get(m, m) for m in c.members),
            }
        keys[cid] = _digest(salient)
    for kid, k in bif.connections.items():
        keys[kid] = _digest(
            {
                "element": "connection",
                "species": k.species.value,
                "from": label.get(k.input, k.input),
                "to": label.get(k.output, k.output),
                "transmitter": k.transmitter.value,
                "hierarchy": k.hierarchy.value,
                "size": k.size,
            }
        )
    return keys


def hcd_entry_keys(hcd: Hcd) -> dict[str, str]:
    fl = {cid: c.function_label for cid, c in hcd.components.items()}
    keys = {}
    for cid, c in hcd.components.items():
        keys[cid] = _digest(
            {
                "element": "component",
                "label": c.function_label,
                "provided": sorted((p.name, p.signal_semantics) for p in c.provided_ports),
                "required": sorted((p.name, p.signal_semantics) for p in c.required_ports),
            }
        )
    for lid, link in hcd.links.items():
        keys[lid] = _digest(
            {
                "element": "link",
                "source": [fl.get(link.source[0], link.source[0]), link.source[1]],
                "target": [fl.get(link.target[0], link.target[0]), link.target[1]],
                "semantics": link.signal_semantics,
            }
        )
    return keys


def _document_key(payload: dict) -> dict[str, str]:
    body = {k: v for k, v in payload.items() if k not in ("id", "evidence", "citations")}
    return {"document": _digest(body)}


def entry_keys(kind: str, obj: Any, payload: dict) -> dict[str, str]:
    if kind == "bif":
        return bif_entry_keys(obj)
    if kind == "hcd":
        return hcd_entry_keys(obj)
    return _document_key(payload)


# -- authenticity ----------------------------------------------------------------------


def authenticity_findings(bif: Bif) -> list[Finding]:
    """One error per circuit or connection lacking a peer-reviewed citation."""
    out = []
    for eid, el in sorted([*bif.circuits.items(), *bif.connections.items()]):
        if not any(c.peer_reviewed for c in el.references):
            out.append(Finding(eid, "unreferenced", ERROR, "no peer-reviewed reference"))
    return out


# -- entries -------------------------------------------------------------------------


@dataclass
class Entry:
    kind: str
    id: str
    version: int
    payload: dict
    state: str = DRAFT
    review_log: list[dict] = field(default_factory=list)
    content_keys: dict[str, str] = field(default_factory=dict)
    roi: list[str] = field(default_factory=list)
    labels: list[str] = field(default_factory=list)
    certified_at: str | None = None
    attachments: dict[str, Any] = field(default_factory=dict)

    @property
    def ref(self) -> str:
        return f"{self.kind}/{self.id}/{self.version}"

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "id": self.id,
            "version": self.version,
            "state": self.state,
            "payload": self.payload,
            "review_log": self.review_log,
            "content_keys": dict(sorted(self.content_keys.items())),
            "roi": sorted(self.roi),
            "labels": sorted(self.labels),
            "certified_at": self.certified_at,
            "attachments": self.attachments,
        }

    @classmethod
    def from_dict(cls, d: dict) -> Entry:
        return cls(
            d["kind"],
            d["id"],
            d["version"],
            d["payload"],
            d["state"],
            d["review_log"],
            d["content_keys"],
            d["roi"],
            d["labels"],
            d["certified_at"],
            d["attachments"],
        )

    def summary(self) -> dict:
        d = self.to_dict()
        del d["payload"], d["review_log"], d["attachments"]
        return d


@dataclass(frozen=True)
class Duplicate:
    entry: str
    existing_element: str
    element: str
    key: str

    def to_dict(self) -> dict:
        return {"entry": self.entry, "existing_element": self.existing_element, "element": self.element, "key": self.key}


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="microseconds")


def default_store_path() -> Path:
    return Path(os.environ.get("BRA_STORE", "store"))


class Store:
    """A registry directory. Use :meth:`open`; creating one is implicit."""

    def __init__(self, root: Path, clock: Callable[[], str] = _now):
        self.root = Path(root)
        self.clock = clock
        self._lock = FileLock(str(self.root / ".lock"))
        self._index: dict[str, dict] = {}

    @classmethod
    def open(cls, root: str | os.PathLike | None = None, clock: Callable[[], str] = _now) -> Store:
        store = cls(Path(root) if root is not None else default_store_path(), clock)
        store.root.mkdir(parents=True, exist_ok=True)
        store.refresh()
        return store

    # index handling

    def refresh(self) -> None:
        self._index = self._read_index()

    def _read_index(self) -> dict[str, dict]:
        path = self.root / "index.json"
        if not path.exists():
            return {}
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
            if doc["format_version"] != INDEX_VERSION or not isinstance(doc["entries"], dict):
                raise ValueError("bad header")
            for ref, summ in doc["entries"].items():
                if ref != f"{summ['kind']}/{summ['id']}/{summ['version']}" or summ["state"] not in STATES:
                    raise ValueError(f"bad entry {ref!r}")
                if not isinstance(summ["content_keys"], dict):
                    raise ValueError(f"bad entry {ref!r}")
            return doc["entries"]
        except (ValueError, KeyError, TypeError) as exc:
            raise StoreCorruptedError(f"{path}: corrupted index ({exc})") from None

    def _write(self, entry: Entry) -> None:
        path = self.root / entry.kind / entry.id / f"{entry.version}.json"
        path.parent.mkdir(parents=True, exist_ok=True)
        _atomic_write(path, canonical_json(entry.to_dict()))
        self._index[entry.ref] = entry.summary()
        index = {"format_version": INDEX_VERSION, "entries": dict(sorted(self._index.items()))}
        _atomic_write(self.root / "index.json", canonical_json(index))

    # reads

    def get(self, kind: str, id: str, version: int | None = None) -> Entry:
        if version is None:
            versions = [s["version"] for s in self._index.values() if s["kind"] == kind and s["id"] == id]
            if not versions:
                raise KeyError(f"no entry {kind}/{id}")
            version = max(versions)
        ref = f"{kind}/{id}/{version}"
        if ref not in self._index:
            raise KeyError(f"no entry {ref}")
        path = self.root / kind / id / f"{version}.json"
        try:
            return Entry.from_dict(json.loads(path.read_text(encoding="utf-8")))
        except (OSError, ValueError, KeyError, TypeError) as exc:
            raise StoreCorruptedError(f"{path}: unreadable entry ({exc})") from None

    def entries(self) -> list[Entry]:
        return [self.get(s["kind"], s["id"], s["version"]) for s in self._summaries()]

    def _summaries(self) -> list[dict]:
        return [self._index[k] for k in sorted(self._index)]

    def query(
        self,
        kind: str | None = None,
        roi: Iterable[str] | None = None,
        label_prefix: str | None = None,
        state: str | None = None,
    ) -> list[Entry]:
        """Matching entries ordered by certification time (uncertified last), id, version."""
        want_roi = set(roi) if roi is not None else None
        hits = []
        for s in self._summaries():
            if kind is not None and s["kind"] != kind:
                continue
            if state is not None and s["state"] != state:
                continue
            if want_roi is not None and not want_roi <= set(s["roi"]):
                continue
            if label_prefix is not None and not any(lab.startswith(label_prefix) for lab in s["labels"]):
                continue
            hits.append(s)
        hits.sort(key=lambda s: (s["certified_at"] is None, s["certified_at"] or "", s["id"], s["version"], s["kind"]))
        return [self.get(s["kind"], s["id"], s["version"]) for s in hits]

    def novelty_check(self, kind: str, obj: Any, exclude: str | None = None) -> list[Duplicate]:
        """Element-level duplicates of ``obj`` already present in the store."""
        payload = TO_DICT[kind](obj)
        return novelty_against(entry_keys(kind, obj, payload), self._summaries(), kind, exclude)

    # writes

    def add(self, kind: str, obj: Any, *, roi: Iterable[str] | None = None, notes: str = "") -> Entry:
        if kind not in KINDS:
            raise RegistryError(f"unknown kind {kind!r}")
        payload = TO_DICT[kind](obj)
        with self._lock:
            self.refresh()
            versions = [s["version"] for s in self._index.values() if s["kind"] == kind and s["id"] == obj_id(kind, obj)]
            entry = Entry(
                kind,
                obj_id(kind, obj),
                max(versions, default=0) + 1,
                payload,
                content_keys=entry_keys(kind, obj, payload),
                roi=sorted(_roi(kind, obj, roi)),
                labels=sorted(_labels(kind, obj)),
            )
            entry.review_log.append({"timestamp": self.clock(), "reviewer": "", "verdict": "added", "notes": notes})
            self._write(entry)
            return entry

    def submit(self, kind: str, id: str, version: int | None = None, reviewer: str = "", notes: str = "") -> Entry:
        return self._move(kind, id, version, IN_REVIEW, reviewer, notes)

    def reject(self, kind: str, id: str, version: int | None = None, reviewer: str = "", notes: str = "") -> Entry:
        return self._move(kind, id, version, REJECTED, reviewer, notes)

    def certify(
        self,
        kind: str,
        id: str,
        version: int | None = None,
        reviewer: str = "",
        notes: str = "",
        adequacy: AdequacyReport | dict | None = None,
    ) -> Entry:
        """Certify an in-review entry.

        BIFs must pass the authenticity check. HCDs and mappings need an
        adequacy report whose ``certifiable`` flag is true; it is attached
        to the entry.
        """
        return self._move(kind, id, version, CERTIFIED, reviewer, notes, adequacy)

    def _move(self, kind, id, version, target, reviewer, notes, adequacy=None) -> Entry:
        with self._lock:
            self.refresh()
            entry = self.get(kind, id, version)
            if target not in _NEXT[entry.state]:
                raise IllegalTransitionError(entry.ref, entry.state, target)
            if target == CERTIFIED:
                self._gate(entry, adequacy)
            entry.state = target
            stamp = self.clock()
            if target == CERTIFIED:
                entry.certified_at = stamp
            entry.review_log.append({"timestamp": stamp, "reviewer": reviewer, "verdict": target, "notes": notes})
            self._write(entry)
            return entry

    def _gate(self, entry: Entry, adequacy) -> None:
        if entry.kind == "bif":
            from .io.documents import bif_from_json
            from .io.jsonloc import Reader

            bif = bif_from_json(entry.payload, Reader(""))
            refused = authenticity_findings(bif)
            if refused:
                raise CertificationRefused(entry.ref, refused)
        elif entry.kind in ("hcd", "mapping"):
            if adequacy is None:
                raise CertificationRefused(entry.ref, [Finding(entry.id, "no-adequacy-report", ERROR)])
            report = adequacy.to_dict() if isinstance(adequacy, AdequacyReport) else adequacy
            if not report.get("certifiable"):
                errors = [
                    Finding.from_dict(f)
                    for c in report.get("criteria", {}).values()
                    for f in c.get("findings", [])
                    if f.get("severity") == ERROR
                ]
                raise CertificationRefused(entry.ref, errors or [Finding(entry.id, "not-certifiable", ERROR)])
            entry.attachments["adequacy"] = report


def novelty_against(keys: dict[str, str], summaries: Iterable[dict], kind: str, exclude: str | None = None) -> list[Duplicate]:
    by_key: dict[str, list[tuple[str, str]]] = {}
    for s in summaries:
        if s["kind"] != kind or (exclude and f"{s['kind']}/{s['id']}" == exclude):
            continue
        ref = f"{s['kind']}/{s['id']}/{s['version']}"
        for el, key in s["content_keys"].items():
            by_key.setdefault(key, []).append((ref, el))
    out = []
    for el, key in sorted(keys.items()):
        for ref, other in sorted(by_key.get(key, ())):
            out.append(Duplicate(ref, other, el, key))
    return out


def novelty_findings(keys: dict[str, str], store: Store, kind: str = "bif", exclude_id: str | None = None) -> list[Finding]:
    exclude = f"{kind}/{exclude_id}" if exclude_id else None
    return [
        Finding(d.element, "duplicate-element", WARNING, f"already registered as {d.existing_element} in {d.entry}")
        for d in novelty_against(keys, store._summaries(), kind, exclude)
    ]


def obj_id(kind: str, obj: Any) -> str:
    if kind == "rules":
        return obj[0]
    if isinstance(obj, BraMapping):
        return obj.id or f"{obj.hcd_id}@{obj.bif_id}"
    return obj.id


def _roi(kind: str, obj: Any, roi: Iterable[str] | None) -> set[str]:
    if roi is not None:
        return set(roi)
    if kind == "bif":
        return set(obj.circuits)
    if kind == "mapping":
        return set(obj.roi)
    return set()


def _labels(kind: str, obj: Any) -> set[str]:
    if kind == "bif":
        return {obj.id, *(c.label for c in obj.circuits.values())}
    if kind == "hcd":
        return {obj.id, obj.tlf.goal, *(c.function_label for c in obj.components.values())} - {""}
    if kind == "template":
        return {obj.id, *(r.function_label for r in obj.roles)}
    return {obj_id(kind, obj)}


def _atomic_write(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    os.replace(tmp, path)
