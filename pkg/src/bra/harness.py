"""Deterministic discrete-time execution of an HCD built from rule-based stubs.

Semantics are synchronous: the outputs of every component at step ``t``
are computed from the values present on its required ports at step
``t - 1``. A required port carries the sum of every provided port linked to
it plus any external input bound to it. At ``t = 0`` all outputs are 0.0
except those of ``constant`` stubs. Loops are therefore always well defined.

Any object with an ``arity`` attribute (``None`` for "broadcast to every
provided port"), a ``reset()`` method and a ``step(inputs, rng)`` method
returning a float or a sequence of floats can be bound to a component.
That is the seam for swapping a learned component in for a stub. Each
component draws from its own generator, seeded from the run seed and the
component id.
"""

from __future__ import annotations

import hashlib
import json
import math
import random
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Mapping, Protocol, Sequence

from .bif import UnknownElementError
from .hcd import Component, ExternalPort, GoalPredicate, Hcd

STUB_KINDS = ("constant", "relay", "delay", "sum", "threshold", "gate", "table")
ACTIVE_THRESHOLD = 0.5


class HarnessError(Exception):
    pass


class UnboundComponentError(HarnessError):
    def __init__(self, component: str):
        self.component = component
        super().__init__(f"component {component!r} has no stub bound")


class ScheduleGapError(HarnessError):
    def __init__(self, input_name: str, step: int):
        self.input_name = input_name
        self.step = step
        super().__init__(f"schedule has no value for input {input_name!r} at step {step}")


class ArityError(HarnessError):
    pass


class Stub(Protocol):
    arity: int | None

    def reset(self) -> None: ...

    def step(self, inputs: Mapping[str, float], rng: random.Random) -> float | Sequence[float]: ...


@dataclass(frozen=True)
class StubSpec:
    """Declarative description of a rule-based component."""

    id: str
    kind: str
    params: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        check_stub_params(self.kind, self.params, self.id)

    @property
    def arity(self) -> int | None:
        if self.kind == "constant" and isinstance(self.params.get("value"), list):
            return len(self.params["value"])
        if self.kind == "table":
            outs = next(iter(self.params["entries"].values()), None)
            return len(outs) if isinstance(outs, list) else None
        return None

    def instantiate(self) -> Stub:
        return _RUNTIME[self.kind](self)

    def to_dict(self) -> dict:
        return {"id": self.id, "kind": self.kind, "params": _params_out(self.params)}


def _params_out(params: Mapping[str, Any]) -> dict:
    out = {}
    for k, v in params.items():
        out[k] = "inf" if isinstance(v, float) and math.isinf(v) and v > 0 else v
    return out


def _number(v: Any, allow_inf: bool = False) -> float:
    if isinstance(v, bool):
        raise ValueError("boolean is not a number")
    if allow_inf and v in ("inf", "Infinity"):
        return math.inf
    if isinstance(v, (int, float)) and math.isfinite(v):
        return float(v)
    raise ValueError(f"{v!r} is not a finite number")


_PARAMS = {
    "constant": ({"value"}, set()),
    "relay": (set(), {"noise"}),
    "delay": ({"k"}, set()),
    "sum": (set(), {"weights", "bias", "noise"}),
    "threshold": ({"theta"}, {"high"}),
    "gate": ({"control"}, {"threshold"}),
    "table": ({"inputs", "entries"}, {"threshold"}),
}


def check_stub_params(kind: str, params: Mapping[str, Any], stub_id: str = "") -> None:
    """Raise ``ValueError`` unless ``params`` are valid for ``kind``."""
    where = f"stub {stub_id!r}: " if stub_id else ""
    if kind not in _PARAMS:
        raise ValueError(f"{where}unknown stub kind {kind!r}")
    required, optional = _PARAMS[kind]
    missing = required - set(params)
    if missing:
        raise ValueError(f"{where}{kind} needs {', '.join(sorted(missing))}")
    extra = set(params) - required - optional
    if extra:
        raise ValueError(f"{where}{kind} does not accept {', '.join(sorted(extra))}")
    try:
        if kind == "constant":
            v = params["value"]
            if isinstance(v, list):
                if not v:
                    raise ValueError("empty value list")
                [_number(x) for x in v]
            else:
                _number(v)
        elif kind == "delay":
            k = params["k"]
            if isinstance(k, bool) or not isinstance(k, int) or k < 1:
                raise ValueError(f"k must be an integer >= 1, got {k!r}")
        elif kind == "threshold":
            _number(params["theta"], allow_inf=True)
            _number(params.get("high", 1.0))
        elif kind == "gate":
            if not isinstance(params["control"], str):
                raise ValueError("control must be a port name")
            _number(params.get("threshold", ACTIVE_THRESHOLD))
        elif kind == "table":
            _check_table(params)
        if kind in ("relay", "sum"):
            noise = _number(params.get("noise", 0.0))
            if noise < 0:
                raise ValueError("noise must be >= 0")
        if kind == "sum":
            weights = params.get("weights", {})
            if not isinstance(weights, dict):
                raise ValueError("weights must map port names to numbers")
            [_number(w) for w in weights.values()]
            _number(params.get("bias", 0.0))
    except ValueError as exc:
        raise ValueError(f"{where}{exc}") from None


def _check_table(params: Mapping[str, Any]) -> None:
    inputs = params["inputs"]
    if not isinstance(inputs, list) or not all(isinstance(p, str) for p in inputs):
        raise ValueError("inputs must be a list of port names")
    entries = params["entries"]
    if not isinstance(entries, dict):
        raise ValueError("entries must map input patterns to outputs")
    _number(params.get("threshold", ACTIVE_THRESHOLD))
    n = len(inputs)
    want = {format(i, f"0{n}b") if n else "" for i in range(2**n)}
    if set(entries) != want:
        missing = sorted(want - set(entries))
        extra = sorted(set(entries) - want)
        raise ValueError(f"table is not total over {{0,1}}^{n}: missing {missing}, unexpected {extra}")
    widths = set()
    for out in entries.values():
        if isinstance(out, list):
            [_number(x) for x in out]
            widths.add(len(out))
        else:
            _number(out)
            widths.add(None)
    if len(widths) > 1:
        raise ValueError("table outputs must all have the same width")


# -- runtime stubs ---------------------------------------------------------------


class _Base:
    def __init__(self, spec: StubSpec):
        self.spec = spec
        self.arity = spec.arity

    def reset(self) -> None:
        pass


class _Constant(_Base):
    def step(self, inputs, rng):
        v = self.spec.params["value"]
        return [float(x) for x in v] if isinstance(v, list) else float(v)

    initial = step


class _Relay(_Base):
    def step(self, inputs, rng):
        out = sum(inputs.values())
        noise = self.spec.params.get("noise", 0.0)
        return out + rng.gauss(0.0, noise) if noise else out


class _Delay(_Base):
    def reset(self):
        self.buf = deque([0.0] * (self.spec.params["k"] - 1))

    def step(self, inputs, rng):
        self.buf.append(sum(inputs.values()))
        return self.buf.popleft()


class _Sum(_Base):
    def step(self, inputs, rng):
        w = self.spec.params.get("weights", {})
        out = float(self.spec.params.get("bias", 0.0))
        out += sum(float(w.get(p, 1.0)) * v for p, v in inputs.items())
        noise = self.spec.params.get("noise", 0.0)
        return out + rng.gauss(0.0, noise) if noise else out


class _Threshold(_Base):
    def step(self, inputs, rng):
        theta = _number(self.spec.params["theta"], allow_inf=True)
        high = float(self.spec.params.get("high", 1.0))
        return high if sum(inputs.values()) >= theta else 0.0


class _Gate(_Base):
    def step(self, inputs, rng):
        ctl = self.spec.params["control"]
        thr = float(self.spec.params.get("threshold", ACTIVE_THRESHOLD))
        if inputs.get(ctl, 0.0) < thr:
            return 0.0
        return sum(v for p, v in inputs.items() if p != ctl)


class _Table(_Base):
    def step(self, inputs, rng):
        thr = float(self.spec.params.get("threshold", ACTIVE_THRESHOLD))
        key = "".join("1" if inputs.get(p, 0.0) >= thr else "0" for p in self.spec.params["inputs"])
        out = self.spec.params["entries"][key]
        return [float(x) for x in out] if isinstance(out, list) else float(out)


_RUNTIME = {
    "constant": _Constant,
    "relay": _Relay,
    "delay": _Delay,
    "sum": _Sum,
    "threshold": _Threshold,
    "gate": _Gate,
    "table": _Table,
}


# -- bindings ------------------------------------------------------------------


Bindings = dict[str, Any]  # component id -> StubSpec or Stub-like object


def bind_stubs(hcd: Hcd, stubs: Mapping[str, StubSpec], overrides: Mapping[str, str] | None = None) -> Bindings:
    """Resolve each component's ``stub_ref`` (or an override) against a stub library."""
    overrides = overrides or {}
    out: Bindings = {}
    for cid, comp in hcd.components.items():
        ref = overrides.get(cid, comp.stub_ref)
        if ref is None:
            continue
        if ref not in stubs:
            raise HarnessError(f"component {cid!r} refers to unknown stub {ref!r}")
        out[cid] = stubs[ref]
    return out


def replace_stub(bindings: Bindings, component: Component, new_stub: Any) -> Bindings:
    """Return a copy of ``bindings`` with ``component`` bound to ``new_stub``."""
    arity = getattr(new_stub, "arity", None)
    if arity is not None and arity != len(component.provided_ports):
        raise ArityError(
            f"stub produces {arity} outputs but {component.id!r} provides {len(component.provided_ports)} ports"
        )
    if not callable(getattr(new_stub, "step", None)) and not isinstance(new_stub, StubSpec):
        raise TypeError("stub must provide step(inputs, rng)")
    out = dict(bindings)
    out[component.id] = new_stub
    return out


def ablate(hcd: Hcd, component_ids) -> Hcd:
    """Copy of ``hcd`` without the given components and their incident links."""
    drop = set(component_ids)
    for cid in sorted(drop):
        if cid not in hcd.components:
            raise UnknownElementError(cid, f"HCD {hcd.id!r}")
    comps = {c: v for c, v in hcd.components.items() if c not in drop}
    links = {
        lid: link
        for lid, link in hcd.links.items()
        if link.source[0] not in drop and link.target[0] not in drop
    }

    def keep(ports: tuple[ExternalPort, ...]) -> tuple[ExternalPort, ...]:
        return tuple(ExternalPort(p.name, tuple(r for r in p.ports if r[0] not in drop)) for p in ports)

    return hcd.with_changes(
        components=comps,
        links=links,
        external_inputs=keep(hcd.external_inputs),
        external_outputs=keep(hcd.external_outputs),
    )


# -- schedule and trace ----------------------------------------------------------


@dataclass(frozen=True)
class Schedule:
    """External input values per step: ``values[name][t]``."""

    values: Mapping[str, tuple[float, ...]] = field(default_factory=dict)

    @property
    def steps(self) -> int:
        return min((len(v) for v in self.values.values()), default=0)

    def value(self, name: str, t: int) -> float:
        series = self.values.get(name)
        if series is None or t >= len(series):
            raise ScheduleGapError(name, t)
        return series[t]

    @classmethod
    def pulse(cls, name: str, steps: int, at: int | Sequence[int], value: float = 1.0, **others) -> Schedule:
        ats = {at} if isinstance(at, int) else set(at)
        vals = {name: tuple(value if t in ats else 0.0 for t in range(steps))}
        for other, series in others.items():
            vals[other] = tuple(series)
        return cls(vals)


@dataclass(frozen=True)
class Trace:
    hcd_id: str | None
    steps: int
    values: Mapping[tuple[str, str], tuple[float, ...]]
    seed: int = 0
    config_hash: str = ""

    def series(self, component: str, port: str) -> tuple[float, ...]:
        return self.values[(component, port)]

    def component_ports(self, component: str) -> list[str]:
        return sorted(p for c, p in self.values if c == component)

    def records(self):
        keys = sorted(self.values)
        for t in range(self.steps):
            for c, p in keys:
                yield t, c, p, self.values[(c, p)][t]

    def first_active(self, component: str, port: str | None = None, threshold: float = ACTIVE_THRESHOLD) -> int | None:
        """Earliest step at which the port (or any provided port) is active."""
        ports = [port] if port is not None else self.component_ports(component)
        best = None
        for p in ports:
            for t, v in enumerate(self.values.get((component, p), ())):
                if v >= threshold:
                    best = t if best is None else min(best, t)
                    break
        return best

    def active_steps(self, component: str, port: str | None = None, threshold: float = ACTIVE_THRESHOLD) -> set[int]:
        ports = [port] if port is not None else self.component_ports(component)
        out: set[int] = set()
        for p in ports:
            out.update(t for t, v in enumerate(self.values.get((component, p), ())) if v >= threshold)
        return out

    def restrict(self, components) -> dict[tuple[str, str], tuple[float, ...]]:
        keep = set(components)
        return {k: v for k, v in self.values.items() if k[0] in keep}


def format_value(v: float) -> str:
    s = f"{v:.9g}"
    return "0" if s == "-0" else s


def trace_to_csv(trace: Trace) -> str:
    lines = ["t,component,port,value"]
    for t, c, p, v in trace.records():
        lines.append(f"{t},{_csv_cell(c)},{_csv_cell(p)},{format_value(v)}")
    return "\n".join(lines) + "\n"


def _csv_cell(s: str) -> str:
    if any(ch in s for ch in ',"\n\r') or s != s.strip():
        return '"' + s.replace('"', '""') + '"'
    return s


def _spec_dict(stub: Any) -> Any:
    if isinstance(stub, StubSpec):
        return stub.to_dict()
    return {"object": type(stub).__qualname__}


def config_hash(hcd: Hcd, bindings: Bindings, schedule: Schedule, steps: int, seed: int) -> str:
    from .io.documents import hcd_to_dict

    blob = {
        "hcd": hcd_to_dict(hcd),
        "bindings": {c: _spec_dict(s) for c, s in sorted(bindings.items())},
        "schedule": {k: [format_value(x) for x in v] for k, v in sorted(schedule.values.items())},
        "steps": steps,
        "seed": seed,
    }
    raw = json.dumps(blob, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(raw).hexdigest()


def run(hcd: Hcd, bindings: Bindings, schedule: Schedule, steps: int, seed: int = 0) -> Trace:
    """Execute ``hcd`` for ``steps`` steps and record every provided port."""
    if steps < 1:
        raise HarnessError("steps must be >= 1")
    for cid in sorted(hcd.components):
        if cid not in bindings:
            raise UnboundComponentError(cid)
    for ext in hcd.external_inputs:
        for t in range(steps):
            schedule.value(ext.name, t)

    order = sorted(hcd.components)
    runtimes: dict[str, Any] = {}
    for cid in order:
        stub = bindings[cid]
        rt = stub.instantiate() if isinstance(stub, StubSpec) else stub
        rt.reset()
        runtimes[cid] = rt
        comp = hcd.components[cid]
        arity = getattr(rt, "arity", None)
        if arity is not None and arity != len(comp.provided_ports):
            raise ArityError(f"stub for {cid!r} produces {arity} outputs, component provides {len(comp.provided_ports)}")

    # (component, required port) -> feeding provided ports / external inputs
    feeds: dict[tuple[str, str], list[tuple[str, str]]] = {}
    ext_feeds: dict[tuple[str, str], list[str]] = {}
    for lid in sorted(hcd.links):
        link = hcd.links[lid]
        feeds.setdefault(link.target, []).append(link.source)
    for ext in hcd.external_inputs:
        for ref in ext.ports:
            ext_feeds.setdefault(ref, []).append(ext.name)

    # one generator per component so that removing a component leaves the
    # random draws of every other component unchanged
    rngs = {cid: random.Random(f"{seed}:{cid}") for cid in order}
    keys = [(cid, p.name) for cid in order for p in hcd.components[cid].provided_ports]
    values: dict[tuple[str, str], list[float]] = {k: [] for k in keys}
    current: dict[tuple[str, str], float] = {}

    for cid in order:
        rt = runtimes[cid]
        init = getattr(rt, "initial", None)
        outs = _spread(init({}, rngs[cid]) if init is not None else 0.0, hcd.components[cid])
        for port, v in zip(hcd.components[cid].provided_ports, outs):
            current[(cid, port.name)] = v
    for k in keys:
        values[k].append(current[k])

    for t in range(1, steps):
        nxt: dict[tuple[str, str], float] = {}
        for cid in order:
            comp = hcd.components[cid]
            inputs = {}
            for port in comp.required_ports:
                ref = (cid, port.name)
                total = sum(current.get(src, 0.0) for src in feeds.get(ref, ()))
                total += sum(schedule.value(name, t - 1) for name in ext_feeds.get(ref, ()))
                inputs[port.name] = total
            outs = _spread(runtimes[cid].step(inputs, rngs[cid]), comp)
            for port, v in zip(comp.provided_ports, outs):
                nxt[(cid, port.name)] = v
        current = nxt
        for k in keys:
            values[k].append(current[k])

    return Trace(
        hcd.id,
        steps,
        {k: tuple(v) for k, v in values.items()},
        seed,
        config_hash(hcd, bindings, schedule, steps, seed),
    )


def _spread(out: Any, comp: Component) -> list[float]:
    n = len(comp.provided_ports)
    if isinstance(out, (list, tuple)):
        if len(out) != n:
            raise ArityError(f"stub for {comp.id!r} returned {len(out)} outputs, expected {n}")
        return [float(x) for x in out]
    return [float(out)] * n


# -- goals ---------------------------------------------------------------------


GOAL_KINDS = ("active_by", "responds_after", "silent")


def check_goal_predicate(pred: GoalPredicate) -> None:
    need = {
        "active_by": {"component", "port", "step"},
        "responds_after": {"input", "component", "port"},
        "silent": {"component", "port"},
    }
    allowed = {
        "active_by": {"threshold"},
        "responds_after": {"within", "threshold"},
        "silent": {"threshold"},
    }
    if pred.kind not in need:
        raise ValueError(f"unknown goal predicate {pred.kind!r}")
    keys = set(pred.params)
    if need[pred.kind] - keys:
        raise ValueError(f"goal {pred.kind} needs {', '.join(sorted(need[pred.kind] - keys))}")
    if keys - need[pred.kind] - allowed[pred.kind]:
        raise ValueError(f"goal {pred.kind} does not accept {', '.join(sorted(keys - need[pred.kind] - allowed[pred.kind]))}")


def evaluate_goal(pred: GoalPredicate, trace: Trace, schedule: Schedule | None = None) -> bool:
    """True when the trace achieves the goal.

    ``active_by``: the port is active at some step <= ``step``.
    ``responds_after``: after the first active step of external ``input``,
    the port becomes active (within ``within`` steps when given).
    ``silent``: the port is never active.
    """
    check_goal_predicate(pred)
    p = pred.params
    thr = float(p.get("threshold", ACTIVE_THRESHOLD))
    key = (p["component"], p["port"])
    if key not in trace.values:
        return False
    series = trace.values[key]
    if pred.kind == "active_by":
        return any(v >= thr for v in series[: int(p["step"]) + 1])
    if pred.kind == "silent":
        return all(v < thr for v in series)
    if schedule is None or p["input"] not in schedule.values:
        raise HarnessError(f"goal needs the schedule for input {p['input']!r}")
    t_in = next((t for t, v in enumerate(schedule.values[p["input"]]) if v >= thr), None)
    if t_in is None:
        return False
    hi = trace.steps if p.get("within") is None else min(trace.steps, t_in + int(p["within"]) + 1)
    return any(series[t] >= thr for t in range(t_in + 1, hi))
