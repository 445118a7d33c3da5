"""Tabular formats: spreadsheet import for BIFs, schedule and trace CSV.

The TSV import is one-way (spreadsheet to BIF). Column sets are a toolkit
convention mirroring the BIF attribute lists:

circuits sheet
    id, type, label, species, sign, transmitter, cell_count, members,
    neocortical, references
connections sheet
    id, input, output, species, transmitter, hierarchy, size,
    projection_ratio, references

``members`` and ``references`` are ``;``-separated. ``projection_ratio`` is
optional; when ``size`` is empty it is used with the input circuit's cell
count to estimate the axon count.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

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
    estimate_axon_count,
)
from ..harness import Schedule, Trace, format_value
from .jsonloc import ParseError, load_text

CIRCUIT_COLUMNS = (
    "id", "type", "label", "species", "sign", "transmitter", "cell_count", "members", "neocortical", "references",
)
CONNECTION_COLUMNS = (
    "id", "input", "output", "species", "transmitter", "hierarchy", "size", "projection_ratio", "references",
)
# columns that may be left out of the header entirely
OPTIONAL_COLUMNS = {"projection_ratio", "neocortical", "references", "cell_count", "members", "size"}


@dataclass
class ImportLog:
    """Every cell the importer had to fill in, as ``(sheet, row, column, value)``."""

    defaulted: list[tuple[str, int, str, str]] = field(default_factory=list)

    def note(self, sheet: str, row: int, column: str, value: str) -> None:
        self.defaulted.append((sheet, row, column, value))

    def lines(self) -> list[str]:
        return [f"{s} row {r}: {c} defaulted to {v!r}" for s, r, c, v in self.defaulted]


def _rows(text: str, columns: tuple[str, ...], sheet: str, delimiter: str = "\t") -> list[tuple[int, dict]]:
    lines = text.splitlines()
    if not lines or not lines[0].strip():
        raise ParseError(f"{sheet} sheet: missing header row", 1, 1)
    header = [h.strip() for h in lines[0].split(delimiter)]
    for i, h in enumerate(header):
        if h not in columns:
            raise ParseError(f"{sheet} sheet: unknown column {h!r}", 1, i + 1, field=h)
        if header.index(h) != i:
            raise ParseError(f"{sheet} sheet: duplicate column {h!r}", 1, i + 1, field=h)
    for c in columns:
        if c not in header and c not in OPTIONAL_COLUMNS:
            raise ParseError(f"{sheet} sheet: missing required column {c!r}", 1, 1, field=c)
    out = []
    for n, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        cells = line.split(delimiter)
        if len(cells) > len(header):
            raise ParseError(f"{sheet} sheet: row has {len(cells)} cells, header has {len(header)}", n, len(header) + 1)
        cells += [""] * (len(header) - len(cells))
        row = {c: "" for c in columns}
        row.update({h: v.strip() for h, v in zip(header, cells)})
        out.append((n, row))
    return out


def _col(columns: tuple[str, ...], name: str) -> int:
    return columns.index(name) + 1


class _Sheet:
    def __init__(self, name: str, columns: tuple[str, ...], log: ImportLog):
        self.name = name
        self.columns = columns
        self.log = log

    def err(self, row: int, column: str, message: str, element: str | None = None) -> ParseError:
        return ParseError(f"{self.name} sheet: {message}", row, _col(self.columns, column), element, column)

    def enum(self, row: int, cells: dict, column: str, enum, default):
        v = cells[column]
        if not v:
            self.log.note(self.name, row, column, default.value)
            return default
        try:
            return enum(v)
        except ValueError:
            raise self.err(row, column, f"{v!r} is not one of {', '.join(e.value for e in enum)}", cells["id"]) from None

    def int(self, row: int, cells: dict, column: str) -> int | None:
        v = cells[column]
        if not v:
            return None
        try:
            n = int(v)
        except ValueError:
            raise self.err(row, column, f"non-numeric value {v!r}", cells["id"]) from None
        if n < 1:
            raise self.err(row, column, f"must be >= 1, got {n}", cells["id"])
        return n

    def float(self, row: int, cells: dict, column: str) -> float | None:
        v = cells[column]
        if not v:
            return None
        try:
            x = float(v)
        except ValueError:
            raise self.err(row, column, f"non-numeric value {v!r}", cells["id"]) from None
        if not math.isfinite(x):
            raise self.err(row, column, f"non-finite value {v!r}", cells["id"])
        return x

    def bool(self, row: int, cells: dict, column: str) -> bool:
        v = cells[column].lower()
        if v in ("", "false", "no", "0"):
            return False
        if v in ("true", "yes", "1"):
            return True
        raise self.err(row, column, f"expected true or false, got {cells[column]!r}", cells["id"])


def _split(v: str) -> list[str]:
    return [p.strip() for p in v.split(";") if p.strip()]


def import_bif_tsv(
    circuits_tsv: bytes | str, connections_tsv: bytes | str, bif_id: str, version: str = "", provenance: str = ""
) -> tuple[Bif, ImportLog]:
    log = ImportLog()
    cs_sheet = _Sheet("circuits", CIRCUIT_COLUMNS, log)
    k_sheet = _Sheet("connections", CONNECTION_COLUMNS, log)
    circuits: dict[str, UniformCircuit | Circuit] = {}
    rows_of: dict[str, int] = {}
    for n, row in _rows(load_text(circuits_tsv), CIRCUIT_COLUMNS, "circuits"):
        cid = row["id"]
        if not cid:
            raise cs_sheet.err(n, "id", "empty id")
        if cid in circuits:
            raise cs_sheet.err(n, "id", f"duplicate circuit id {cid!r}", cid)
        species = cs_sheet.enum(n, row, "species", Species, Species.UNKNOWN)
        refs = tuple(Citation(k) for k in _split(row["references"]))
        neo = cs_sheet.bool(n, row, "neocortical")
        kind = row["type"] or "uniform"
        if kind == "uniform":
            if row["members"]:
                raise cs_sheet.err(n, "members", "a uniform circuit has no members", cid)
            circuits[cid] = UniformCircuit(
                cid,
                row["label"] or cid,
                species,
                cs_sheet.enum(n, row, "sign", Sign, Sign.UNKNOWN),
                cs_sheet.enum(n, row, "transmitter", Transmitter, Transmitter.UNKNOWN),
                cs_sheet.int(n, row, "cell_count"),
                refs,
                neo,
            )
        elif kind == "circuit":
            circuits[cid] = Circuit(cid, row["label"] or cid, species, frozenset(_split(row["members"])), refs, neo)
        else:
            raise cs_sheet.err(n, "type", f"type must be 'uniform' or 'circuit', got {kind!r}", cid)
        rows_of[cid] = n
    for cid, c in circuits.items():
        if isinstance(c, Circuit):
            for m in sorted(c.members):
                if m not in circuits:
                    raise cs_sheet.err(rows_of[cid], "members", f"unknown member circuit {m!r}", cid)

    connections = []
    seen: set[str] = set()
    for n, row in _rows(load_text(connections_tsv), CONNECTION_COLUMNS, "connections"):
        kid = row["id"]
        if not kid:
            raise k_sheet.err(n, "id", "empty id")
        if kid in seen or kid in circuits:
            raise k_sheet.err(n, "id", f"duplicate id {kid!r}", kid)
        seen.add(kid)
        for end in ("input", "output"):
            if row[end] not in circuits:
                raise k_sheet.err(n, end, f"unresolved circuit {row[end]!r}", kid)
        src, dst = circuits[row["input"]], circuits[row["output"]]
        if row["hierarchy"]:
            hierarchy = k_sheet.enum(n, row, "hierarchy", Hierarchy, Hierarchy.UNKNOWN)
        else:
            hierarchy = Hierarchy.UNKNOWN if (src.neocortical and dst.neocortical) else Hierarchy.NA
            log.note("connections", n, "hierarchy", hierarchy.value)
        size = k_sheet.int(n, row, "size")
        ratio = k_sheet.float(n, row, "projection_ratio")
        if size is None and ratio is not None:
            count = getattr(src, "cell_count", None)
            if count is None:
                raise k_sheet.err(n, "projection_ratio", f"input circuit {src.id!r} has no cell count", kid)
            if not 0 <= ratio <= 1:
                raise k_sheet.err(n, "projection_ratio", f"ratio {ratio} outside [0, 1]", kid)
            size = estimate_axon_count(ratio, count) or None
            log.note("connections", n, "size", str(size))
        connections.append(
            Connection(
                kid,
                row["input"],
                row["output"],
                k_sheet.enum(n, row, "species", Species, Species.UNKNOWN),
                k_sheet.enum(n, row, "transmitter", Transmitter, Transmitter.UNKNOWN),
                hierarchy,
                size,
                tuple(Citation(k) for k in _split(row["references"])),
            )
        )
    return Bif.build(bif_id, circuits.values(), connections, version, provenance), log


# -- schedule CSV ------------------------------------------------------------------


def _csv_rows(text: str) -> list[list[str]]:
    try:
        return list(csv.reader(io.StringIO(text, newline=""), strict=True))
    except csv.Error as exc:
        raise ParseError(f"malformed CSV: {exc}", 1, 1) from None


def _cell_float(v: str, line: int, col: int, name: str) -> float:
    try:
        x = float(v)
    except ValueError:
        raise ParseError(f"non-numeric value {v!r}", line, col, field=name) from None
    if not math.isfinite(x):
        raise ParseError(f"non-finite value {v!r}", line, col, field=name)
    return x


def parse_schedule_csv(data: bytes | str) -> Schedule:
    """``t,<input>,<input>...`` with one row per step, starting at 0, no gaps."""
    rows = _csv_rows(load_text(data))
    if not rows or not rows[0]:
        raise ParseError("missing header row", 1, 1)
    header = rows[0]
    if header[0] != "t":
        raise ParseError("first column must be 't'", 1, 1, field=header[0])
    names = header[1:]
    for i, name in enumerate(names):
        if not name:
            raise ParseError("empty input name", 1, i + 2)
        if names.index(name) != i:
            raise ParseError(f"duplicate input {name!r}", 1, i + 2, field=name)
    series: dict[str, list[float]] = {n: [] for n in names}
    expect = 0
    for line, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise ParseError(f"row has {len(row)} cells, header has {len(header)}", line, min(len(row), len(header)) + 1)
        try:
            t = int(row[0])
        except ValueError:
            raise ParseError(f"step {row[0]!r} is not an integer", line, 1, field="t") from None
        if t != expect:
            raise ParseError(f"expected step {expect}, got {t}", line, 1, field="t")
        expect += 1
        for i, name in enumerate(names):
            series[name].append(_cell_float(row[i + 1], line, i + 2, name))
    return Schedule({n: tuple(v) for n, v in series.items()})


def serialize_schedule(schedule: Schedule) -> str:
    names = sorted(schedule.values)
    lines = [",".join(["t", *names])]
    for t in range(schedule.steps):
        lines.append(",".join([str(t), *(format_value(schedule.values[n][t]) for n in names)]))
    return "\n".join(lines) + "\n"


# -- trace CSV ---------------------------------------------------------------------


def parse_trace_csv(data: bytes | str, hcd_id: str | None = None) -> Trace:
    rows = _csv_rows(load_text(data))
    if not rows or rows[0] != ["t", "component", "port", "value"]:
        raise ParseError("header must be 't,component,port,value'", 1, 1)
    values: dict[tuple[str, str], dict[int, float]] = {}
    last: tuple | None = None
    for line, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != 4:
            raise ParseError(f"row has {len(row)} cells, expected 4", line, 1)
        try:
            t = int(row[0])
        except ValueError:
            raise ParseError(f"step {row[0]!r} is not an integer", line, 1, field="t") from None
        if t < 0:
            raise ParseError("negative step", line, 1, field="t")
        key = (t, row[1], row[2])
        if last is not None and key <= last:
            raise ParseError("rows must be sorted by (t, component, port) without repeats", line, 1)
        last = key
        values.setdefault((row[1], row[2]), {})[t] = _cell_float(row[3], line, 4, "value")
    steps = (last[0] + 1) if last else 0
    if steps < 1:
        raise ParseError("trace has no rows", 1, 1)
    out = {}
    for k, by_t in values.items():
        if len(by_t) != steps:
            missing = min(set(range(steps)) - set(by_t))
            raise ParseError(f"incomplete grid: {k[0]}/{k[1]} has no value at step {missing}", 1, 1, element=k[0], field=k[1])
        out[k] = tuple(by_t[t] for t in range(steps))
    return Trace(hcd_id, steps, out)
