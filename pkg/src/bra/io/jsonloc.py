"""Strict JSON reading with source locations, plus canonical writing.

The stdlib decoder is reused; only object parsing is swapped so every
object remembers where it and each of its keys started. Schema checks can
then point at a line and column. Duplicate keys and non-finite numbers are
rejected.
"""

from __future__ import annotations

import json
import re
from enum import Enum
from json.decoder import WHITESPACE, WHITESPACE_STR, JSONDecodeError, scanstring
from json.scanner import py_make_scanner
from typing import Any, Iterable, TypeVar

FORMAT_VERSION = "1.0"


class ParseError(ValueError):
    """A document could not be read. Always carries a 1-based line and column."""

    def __init__(self, message: str, line: int = 1, column: int = 1, element: str | None = None, field: str | None = None):
        self.message = message
        self.line = line
        self.column = column
        self.element = element
        self.field = field
        super().__init__(str(self))

    def __str__(self) -> str:
        where = f"line {self.line}, column {self.column}"
        what = ""
        if self.element is not None:
            what = f" [element {self.element!r}" + (f", field {self.field!r}]" if self.field else "]")
        elif self.field is not None:
            what = f" [field {self.field!r}]"
        return f"{where}: {self.message}{what}"

    def to_dict(self) -> dict:
        return {
            "message": self.message,
            "line": self.line,
            "column": self.column,
            "element": self.element,
            "field": self.field,
        }


class SchemaError(ParseError):
    """Well-formed text that does not match the document schema."""


class LocDict(dict):
    pos: int = 0
    key_pos: dict[str, int]


def _parse_object(s_and_end, strict, scan_once, object_hook, object_pairs_hook, memo=None, _w=WHITESPACE.match, _ws=WHITESPACE_STR):
    s, end = s_and_end
    obj = LocDict()
    obj.pos = end - 1
    obj.key_pos = {}
    nextchar = s[end : end + 1]
    if nextchar != '"':
        if nextchar in _ws:
            end = _w(s, end).end()
            nextchar = s[end : end + 1]
        if nextchar == "}":
            return obj, end + 1
        if nextchar != '"':
            raise JSONDecodeError("Expecting property name enclosed in double quotes", s, end)
    end += 1
    while True:
        key_start = end - 1
        key, end = scanstring(s, end, strict)
        if key in obj:
            raise JSONDecodeError(f"Duplicate key {key!r}", s, key_start)
        if s[end : end + 1] != ":":
            end = _w(s, end).end()
            if s[end : end + 1] != ":":
                raise JSONDecodeError("Expecting ':' delimiter", s, end)
        end += 1
        end = _w(s, end).end()
        try:
            value, end = scan_once(s, end)
        except StopIteration as err:
            raise JSONDecodeError("Expecting value", s, err.value) from None
        obj[key] = value
        obj.key_pos[key] = key_start
        end = _w(s, end).end()
        nextchar = s[end : end + 1]
        end += 1
        if nextchar == "}":
            break
        if nextchar != ",":
            raise JSONDecodeError("Expecting ',' delimiter", s, end - 1)
        end = _w(s, end).end()
        nextchar = s[end : end + 1]
        end += 1
        if nextchar != '"':
            raise JSONDecodeError("Expecting property name enclosed in double quotes", s, end - 1)
    return obj, end


class _NonFinite(ValueError):
    pass


def _reject_constant(name: str):
    raise _NonFinite(name)


class _LocDecoder(json.JSONDecoder):
    def __init__(self):
        super().__init__(parse_constant=_reject_constant, strict=True)
        self.parse_object = _parse_object
        self.scan_once = py_make_scanner(self)


def line_col(text: str, pos: int) -> tuple[int, int]:
    pos = max(0, min(pos, len(text)))
    line = text.count("\n", 0, pos) + 1
    col = pos - (text.rfind("\n", 0, pos) + 1) + 1
    return line, col


def load_text(data: bytes | str) -> str:
    if isinstance(data, bytes):
        try:
            return data.decode("utf-8")
        except UnicodeDecodeError as exc:
            text = data[: exc.start].decode("utf-8", errors="replace")
            line, col = line_col(text, len(text))
            raise ParseError(f"invalid UTF-8 byte at offset {exc.start}", line, col) from None
    return data


def loads(data: bytes | str) -> tuple[Any, str]:
    """Parse JSON text, returning ``(value, text)``; objects are :class:`LocDict`."""
    text = load_text(data)
    try:
        return _LocDecoder().decode(text), text
    except JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.lineno, exc.colno) from None
    except _NonFinite as exc:
        m = re.search(r"-?(NaN|Infinity)", text)
        line, col = line_col(text, m.start() if m else 0)
        raise ParseError(f"non-finite number {exc.args[0]!r} is not allowed", line, col) from None
    except RecursionError:
        raise ParseError("document nests too deeply", 1, 1) from None


def canonical_json(value: Any) -> str:
    return json.dumps(value, sort_keys=True, indent=2, ensure_ascii=False, allow_nan=False) + "\n"


# -- schema walking ---------------------------------------------------------------

E = TypeVar("E", bound=Enum)


class Reader:
    """Typed accessors that raise :class:`SchemaError` at the offending location."""

    def __init__(self, text: str):
        self.text = text

    def at(self, pos: int, message: str, element: str | None = None, field: str | None = None) -> SchemaError:
        line, col = line_col(self.text, pos)
        return SchemaError(message, line, col, element, field)

    def _pos(self, obj: Any, key: str | None = None) -> int:
        if isinstance(obj, LocDict):
            if key is not None and key in obj.key_pos:
                return obj.key_pos[key]
            return obj.pos
        return 0

    def obj(self, value: Any, required: Iterable[str], optional: Iterable[str] = (), *, parent: Any = None,
            key: str | None = None, element: str | None = None) -> LocDict:
        if not isinstance(value, dict):
            raise self.at(self._pos(parent, key), "expected an object", element, key)
        required, optional = set(required), set(optional)
        for k in value:
            if k not in required and k not in optional:
                raise self.at(self._pos(value, k), f"unknown field {k!r}", element, k)
        for k in sorted(required):
            if k not in value:
                raise self.at(self._pos(value), f"missing field {k!r}", element, k)
        return value  # type: ignore[return-value]

    def str(self, obj: dict, key: str, element: str | None = None, *, nonempty: bool = False, default: Any = ...) -> Any:
        if key not in obj and default is not ...:
            return default
        v = obj[key]
        if v is None and default is None:
            return None
        if not isinstance(v, str):
            raise self.at(self._pos(obj, key), "expected a string", element, key)
        if nonempty and not v:
            raise self.at(self._pos(obj, key), "must not be empty", element, key)
        return v

    def bool(self, obj: dict, key: str, element: str | None = None, default: Any = ...) -> bool:
        if key not in obj and default is not ...:
            return default
        v = obj[key]
        if not isinstance(v, bool):
            raise self.at(self._pos(obj, key), "expected true or false", element, key)
        return v

    def int(self, obj: dict, key: str, element: str | None = None, *, minimum: int | None = None,
            nullable: bool = False, default: Any = ...) -> Any:
        if key not in obj and default is not ...:
            return default
        v = obj[key]
        if v is None and nullable:
            return None
        if isinstance(v, bool) or not isinstance(v, int):
            raise self.at(self._pos(obj, key), "expected an integer", element, key)
        if minimum is not None and v < minimum:
            raise self.at(self._pos(obj, key), f"must be >= {minimum}", element, key)
        return v

    def number(self, obj: dict, key: str, element: str | None = None, default: Any = ...) -> Any:
        if key not in obj and default is not ...:
            return default
        v = obj[key]
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise self.at(self._pos(obj, key), "expected a number", element, key)
        return v

    def enum(self, obj: dict, key: str, enum: type[E], element: str | None = None, *, nullable: bool = False, default: Any = ...) -> Any:
        if key not in obj and default is not ...:
            return default
        v = obj[key]
        if v is None and nullable:
            return None
        try:
            return enum(v)
        except ValueError:
            allowed = ", ".join(e.value for e in enum)
            raise self.at(self._pos(obj, key), f"{v!r} is not one of {allowed}", element, key) from None

    def list(self, obj: dict, key: str, element: str | None = None, default: Any = ...) -> Any:
        if key not in obj and default is not ...:
            return default
        v = obj[key]
        if not isinstance(v, list):
            raise self.at(self._pos(obj, key), "expected a list", element, key)
        return v

    def str_list(self, obj: dict, key: str, element: str | None = None, *, unique: bool = False, default: Any = ...) -> Any:
        if key not in obj and default is not ...:
            return default
        items = self.list(obj, key, element)
        for s in items:
            if not isinstance(s, str):
                raise self.at(self._pos(obj, key), "expected a list of strings", element, key)
        if unique and len(set(items)) != len(items):
            dup = next(s for s in items if items.count(s) > 1)
            raise self.at(self._pos(obj, key), f"duplicate entry {dup!r}", element, key)
        return items

    def str_map(self, obj: dict, key: str, element: str | None = None, default: Any = ...) -> Any:
        if key not in obj and default is not ...:
            return default
        v = obj[key]
        if not isinstance(v, dict) or not all(isinstance(x, str) for x in v.values()):
            raise self.at(self._pos(obj, key), "expected an object of strings", element, key)
        return dict(v)

    def error(self, obj: Any, key: str | None, message: str, element: str | None = None) -> SchemaError:
        return self.at(self._pos(obj, key), message, element, key)


def plain(value: Any) -> Any:
    """Strip location wrappers so values compare and serialise as ordinary JSON."""
    if isinstance(value, dict):
        return {k: plain(v) for k, v in value.items()}
    if isinstance(value, list):
        return [plain(v) for v in value]
    return value
