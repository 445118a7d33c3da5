"""Reading and writing every document the toolkit consumes or emits."""

from .documents import (
    parse_bif_json,
    parse_document,
    parse_hcd_json,
    parse_mapping_json,
    parse_rules_json,
    parse_stubs_json,
    parse_template_json,
    serialize_bif,
    serialize_hcd,
    serialize_mapping,
    serialize_rules,
    serialize_stubs,
    serialize_template,
)
from .dot import export_dot
from .jsonloc import ParseError, SchemaError, canonical_json
from .tabular import ImportLog, import_bif_tsv, parse_schedule_csv, parse_trace_csv, serialize_schedule

__all__ = [
    "ImportLog",
    "ParseError",
    "SchemaError",
    "canonical_json",
    "export_dot",
    "import_bif_tsv",
    "parse_bif_json",
    "parse_document",
    "parse_hcd_json",
    "parse_mapping_json",
    "parse_rules_json",
    "parse_schedule_csv",
    "parse_stubs_json",
    "parse_template_json",
    "parse_trace_csv",
    "serialize_bif",
    "serialize_hcd",
    "serialize_mapping",
    "serialize_rules",
    "serialize_schedule",
    "serialize_stubs",
    "serialize_template",
]
