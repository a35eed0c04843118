"""Text formats: ground fact files, CSV reports and generator parameter files.

Fact grammar::

    file    := (fact | comment | whitespace)*
    fact    := name "(" arg ("," arg)* ")" "."
    arg     := integer | '"' [A-Za-z0-9_:]+ '"'
    comment := "%" up to end of line

Instance predicates: ``reg/8`` (``reg/10`` adds priority and drug for the
extended variant), ``day/1``, ``ts/1``, ``ats/1``, ``bed/1``, ``chair/1``,
``nurse/1``, ``nurseLimits/1``, ``drug/3`` and the optional ``longReg/2``,
``variant/1`` and ``clock/1`` which are only written when they differ from
what a reader would infer.  Schedules use ``x/6`` (``y/6`` for reschedules)
followed by ``bed/3``/``chair/3`` seat facts and, for extended instances,
``nurses/3``.  Disruptions use ``un/2`` and ``regN/8`` (``regN/10``).
"""

from __future__ import annotations

import dataclasses
import re
from dataclasses import dataclass
from typing import Iterable, Optional, Union

from .errors import ConfigError, InstanceError, ParseError
from .model import (
    Assignment,
    DisruptionSet,
    Instance,
    PhaseDurations,
    Registration,
    ResourcePool,
    Schedule,
    Seat,
    SeatType,
    TimeGrid,
    Variant,
)
from .objective import cost_vector, day_stats, definition_metrics, phase2_histogram

Arg = Union[int, str]

_NAME = re.compile(r"[a-z][A-Za-z0-9_]*")
_INT = re.compile(r"-?[0-9]+")
_STRING = re.compile(r'"([A-Za-z0-9_:]+)"')
_WS = re.compile(r"(?:\s+|%[^\n]*)+")
_IDENT = re.compile(r"[A-Za-z0-9_:]+")


@dataclass(frozen=True)
class Fact:
    name: str
    args: tuple[Arg, ...]
    line: int = 0
    column: int = 0

    @property
    def signature(self) -> str:
        return f"{self.name}/{len(self.args)}"


def parse_facts(text: str) -> list[Fact]:
    facts = []
    pos = 0
    n = len(text)
    line_starts = [0] + [m.end() for m in re.finditer("\n", text)]

    def where(p: int) -> tuple[int, int]:
        lo, hi = 0, len(line_starts) - 1
        while lo < hi:
            mid = (lo + hi + 1) // 2
            if line_starts[mid] <= p:
                lo = mid
            else:
                hi = mid - 1
        return lo + 1, p - line_starts[lo] + 1

    def fail(msg: str, p: int):
        line, col = where(p)
        raise ParseError(msg, line, col)

    def skip(p: int) -> int:
        m = _WS.match(text, p)
        return m.end() if m else p

    pos = skip(pos)
    while pos < n:
        start = pos
        m = _NAME.match(text, pos)
        if not m:
            fail(f"expected a predicate name, found {text[pos]!r}", pos)
        name = m.group()
        pos = skip(m.end())
        if pos >= n or text[pos] != "(":
            fail(f"expected '(' after {name}", pos)
        pos = skip(pos + 1)
        args: list[Arg] = []
        while True:
            m = _INT.match(text, pos)
            if m:
                args.append(int(m.group()))
            else:
                m = _STRING.match(text, pos)
                if not m:
                    fail("expected an integer or a quoted identifier", pos)
                args.append(m.group(1))
            pos = skip(m.end())
            if pos < n and text[pos] == ",":
                pos = skip(pos + 1)
                continue
            if pos < n and text[pos] == ")":
                pos = skip(pos + 1)
                break
            fail("expected ',' or ')'", pos)
        if pos >= n or text[pos] != ".":
            fail("expected '.' ending the fact", pos)
        line, col = where(start)
        facts.append(Fact(name, tuple(args), line, col))
        pos = skip(pos + 1)
    return facts


def _fmt(arg: Arg) -> str:
    if isinstance(arg, int):
        return str(arg)
    if not _IDENT.fullmatch(arg):
        raise ValueError(f"cannot write {arg!r} as a fact argument")
    return f'"{arg}"'


def format_fact(name: str, *args: Arg) -> str:
    return f"{name}({','.join(_fmt(a) for a in args)})."


# instances ----------------------------------------------------------------

_INSTANCE_SIGS = {
    "reg/8", "reg/10", "day/1", "ts/1", "ats/1", "bed/1", "chair/1", "nurse/1",
    "nurseLimits/1", "drug/3", "longReg/2", "variant/1", "clock/1",
}


def _int(f: Fact, k: int) -> int:
    v = f.args[k]
    if not isinstance(v, int):
        raise ParseError(f"{f.signature}: argument {k + 1} must be an integer", f.line, f.column)
    return v


def _str(f: Fact, k: int) -> str:
    v = f.args[k]
    if not isinstance(v, str):
        raise ParseError(f"{f.signature}: argument {k + 1} must be a quoted string", f.line, f.column)
    return v


def _seat_type(f: Fact, k: int) -> SeatType:
    v = _str(f, k)
    if v not in ("bed", "chair"):
        raise ParseError(f"seat preference must be \"bed\" or \"chair\", got {v!r}", f.line, f.column)
    return SeatType(v)


def _registration(f: Fact) -> Registration:
    pid, order, wait, d4, d3, d2, d1 = (_int(f, k) for k in range(7))
    pref = _seat_type(f, 7)
    priority = drug = None
    if len(f.args) == 10:
        priority = _int(f, 8)
        drug = f.args[9]
    try:
        return Registration(pid, order, wait, PhaseDurations(d1, d2, d3, d4), pref, priority, drug)
    except InstanceError as exc:
        raise ParseError(str(exc), f.line, f.column) from None


def _reg_args(r: Registration) -> tuple:
    args = (r.patient_id, r.order, r.waiting_days, r.d4, r.d3, r.d2, r.d1, r.seat_pref.value)
    if r.priority is not None:
        args += (r.priority, r.drug)
    return args


def _check_range(facts: list[Fact], name: str, expected: Optional[int], what: str) -> Optional[int]:
    values = sorted(_int(f, 0) for f in facts)
    if not values:
        return None
    count = len(values)
    if values != list(range(1, count + 1)):
        raise ParseError(f"{name} facts must enumerate 1..{count} without gaps", facts[0].line, facts[0].column)
    if expected is not None and count != expected:
        raise ParseError(f"{name} facts give {count} {what}, configured {expected}", facts[0].line, facts[0].column)
    return count


def parse_instance(text: str, variant: Optional[Variant] = None, days: Optional[int] = None,
                   grid: Optional[TimeGrid] = None) -> Instance:
    """Instance from facts.  ``days``/``grid`` given by the caller must agree with day/ts/ats facts."""
    facts = parse_facts(text)
    by: dict[str, list[Fact]] = {}
    for f in facts:
        if f.signature not in _INSTANCE_SIGS:
            known = {s.split("/")[0] for s in _INSTANCE_SIGS}
            kind = "arity mismatch for" if f.name in known else "unknown predicate"
            raise ParseError(f"{kind} {f.signature}", f.line, f.column)
        by.setdefault(f.signature, []).append(f)

    regs = [_registration(f) for f in by.get("reg/8", []) + by.get("reg/10", [])]
    if by.get("reg/8") and by.get("reg/10"):
        f = by["reg/10"][0]
        raise ParseError("reg/8 and reg/10 facts cannot be mixed", f.line, f.column)

    ts_count = _check_range(by.get("ts/1", []), "ts", grid.ts_count if grid else None, "start slots")
    ats_count = _check_range(by.get("ats/1", []), "ats", grid.ats_count if grid else None, "slots")
    clock = grid.slot_zero_clock if grid else TimeGrid().slot_zero_clock
    if "clock/1" in by:
        clock = _str(by["clock/1"][0], 0)
    if ts_count is None:
        ts_count = ats_count // 2 if ats_count else (grid.ts_count if grid else TimeGrid().ts_count)
    if ats_count is not None and ats_count != 2 * ts_count:
        f = by["ats/1"][0]
        raise ParseError(f"{ats_count} ats slots do not match {ts_count} start slots", f.line, f.column)
    try:
        the_grid = TimeGrid(ts_count, clock)
    except InstanceError as exc:
        raise ParseError(str(exc), 1, 1) from None

    extended = "reg/10" in by or "nurse/1" in by or "nurseLimits/1" in by
    n_days = _check_range(by.get("day/1", []), "day", days, "days")
    if "variant/1" in by:
        f = by["variant/1"][0]
        try:
            stated = Variant(_str(f, 0))
        except ValueError:
            raise ParseError(f"unknown variant {f.args[0]!r}", f.line, f.column) from None
        if variant is not None and Variant(variant) is not stated:
            raise ParseError(f"file declares variant {stated.value}, caller asked for {Variant(variant).value}",
                             f.line, f.column)
        variant = stated
    if variant is None:
        if extended:
            variant = Variant.EXTENDED
        elif (n_days or days or 1) == 1 and all(r.order == 0 for r in regs):
            variant = Variant.DAILY
        else:
            variant = Variant.WEEKLY
    variant = Variant(variant)
    if n_days is None:
        n_days = days or (5 if variant is Variant.WEEKLY else 1)

    nurses = capacity = None
    drug_limits: dict = {}
    if extended or variant is Variant.EXTENDED:
        nurses = tuple(_int(f, 0) for f in by.get("nurse/1", []))
        caps = by.get("nurseLimits/1", [])
        if len(caps) != 1:
            where = caps[1] if caps else (facts[0] if facts else Fact("", (), 1, 1))
            raise ParseError("an extended instance needs exactly one nurseLimits fact", where.line, where.column)
        capacity = _int(caps[0], 0)
        for f in by.get("drug/3", []):
            key = (f.args[0], _int(f, 2))
            if key in drug_limits:
                raise ParseError(f"duplicate drug limit for {key}", f.line, f.column)
            drug_limits[key] = _int(f, 1)
    elif "drug/3" in by:
        f = by["drug/3"][0]
        raise ParseError("drug limits belong to extended instances", f.line, f.column)

    long_threshold, long_min_ts = 50, 24
    if "longReg/2" in by:
        f = by["longReg/2"][0]
        long_threshold, long_min_ts = _int(f, 0), _int(f, 1)

    for name in ("bed/1", "chair/1", "nurse/1"):
        ids = [(_int(f, 0), f) for f in by.get(name, [])]
        seen = set()
        for i, f in ids:
            if i in seen:
                raise ParseError(f"duplicate {name.split('/')[0]} {i}", f.line, f.column)
            seen.add(i)
    try:
        pool = ResourcePool(
            beds=tuple(_int(f, 0) for f in by.get("bed/1", [])),
            chairs=tuple(_int(f, 0) for f in by.get("chair/1", [])),
            nurses=nurses,
            nurse_capacity=capacity,
            drug_limits=drug_limits,
        )
        return Instance(tuple(regs), pool, days=n_days, variant=variant, grid=the_grid,
                        long_threshold=long_threshold, long_min_ts=long_min_ts)
    except InstanceError as exc:
        first = facts[0] if facts else Fact("", (), 1, 1)
        raise ParseError(str(exc), first.line, first.column) from None


def _inferred_variant(inst: Instance) -> Variant:
    if inst.extended:
        return Variant.EXTENDED
    if inst.days == 1 and all(r.order == 0 for r in inst.registrations):
        return Variant.DAILY
    return Variant.WEEKLY


def emit_instance(inst: Instance) -> str:
    lines = []
    if _inferred_variant(inst) is not inst.variant:
        lines.append(format_fact("variant", inst.variant.value))
    if inst.grid.slot_zero_clock != TimeGrid().slot_zero_clock:
        lines.append(format_fact("clock", inst.grid.slot_zero_clock))
    if (inst.long_threshold, inst.long_min_ts) != (50, 24):
        lines.append(format_fact("longReg", inst.long_threshold, inst.long_min_ts))
    lines += [format_fact("day", d) for d in range(1, inst.days + 1)]
    lines += [format_fact("ts", t) for t in range(1, inst.grid.ts_count + 1)]
    lines += [format_fact("ats", t) for t in range(1, inst.grid.ats_count + 1)]
    pool = inst.resources
    lines += [format_fact("bed", b) for b in pool.beds]
    lines += [format_fact("chair", c) for c in pool.chairs]
    if pool.nurses is not None:
        lines += [format_fact("nurse", n) for n in pool.nurses]
        lines.append(format_fact("nurseLimits", pool.nurse_capacity))
        for (drug, day), limit in sorted(pool.drug_limits.items(), key=lambda kv: (str(kv[0][0]), kv[0][1])):
            lines.append(format_fact("drug", drug, limit, day))
    lines += [format_fact("reg", *_reg_args(r)) for r in inst.registrations]
    return "".join(line + "\n" for line in lines)


# schedules ----------------------------------------------------------------

def emit_schedule(sch: Schedule, predicate: str = "x") -> str:
    """One assignment fact per placement, then seat facts, then nurse facts, each sorted by (day, ts, id)."""
    if predicate not in ("x", "y"):
        raise ValueError("schedule predicate must be x or y")
    items = sorted(sch, key=lambda a: (a.day, a.ts, a.key))
    lines = []
    for a in items:
        r = a.registration
        lines.append(format_fact(predicate, r.patient_id, a.day, a.ts, r.d4, r.order, r.seat_pref.value))
    for a in items:
        if a.seat is not None:
            lines.append(format_fact(a.seat.kind.value, a.seat.id, a.registration.patient_id, a.day))
    for a in items:
        if a.nurse is not None:
            lines.append(format_fact("nurses", a.nurse, a.registration.patient_id, a.day))
    return "".join(line + "\n" for line in lines)


def parse_schedule(text: str, inst: Instance) -> Schedule:
    facts = parse_facts(text)
    placed: dict[tuple[int, int], list] = {}
    predicate = None
    seats: list[Fact] = []
    nurses: list[Fact] = []
    for f in facts:
        sig = f.signature
        if sig in ("x/6", "y/6"):
            if predicate not in (None, f.name):
                raise ParseError("x and y facts cannot be mixed", f.line, f.column)
            predicate = f.name
            pid, day, ts, d4, order = (_int(f, k) for k in range(5))
            pref = _seat_type(f, 5)
            if (pid, order) not in inst:
                raise ParseError(f"unknown registration ({pid},{order})", f.line, f.column)
            reg = inst.registration((pid, order))
            if reg.d4 != d4 or reg.seat_pref is not pref:
                raise ParseError(f"fact does not match registration ({pid},{order})", f.line, f.column)
            if (pid, day) in placed:
                raise ParseError(f"patient {pid} placed twice on day {day}", f.line, f.column)
            placed[(pid, day)] = [reg, ts, None, None]
        elif sig in ("bed/3", "chair/3"):
            seats.append(f)
        elif sig == "nurses/3":
            nurses.append(f)
        else:
            raise ParseError(f"unexpected {sig} in a schedule", f.line, f.column)
    for f in seats:
        sid, pid, day = (_int(f, k) for k in range(3))
        slot = placed.get((pid, day))
        if slot is None:
            raise ParseError(f"seat for patient {pid} on day {day} without an assignment", f.line, f.column)
        if slot[2] is not None:
            raise ParseError(f"second seat for patient {pid} on day {day}", f.line, f.column)
        slot[2] = Seat(SeatType(f.name), sid)
    for f in nurses:
        nid, pid, day = (_int(f, k) for k in range(3))
        slot = placed.get((pid, day))
        if slot is None:
            raise ParseError(f"nurse for patient {pid} on day {day} without an assignment", f.line, f.column)
        if slot[3] is not None:
            raise ParseError(f"second nurse for patient {pid} on day {day}", f.line, f.column)
        slot[3] = nid
    return Schedule(tuple(Assignment(reg, day, ts, seat, nurse)
                          for (_, day), (reg, ts, seat, nurse) in placed.items()))


# disruptions ----------------------------------------------------------------

def emit_disruptions(dis: DisruptionSet) -> str:
    lines = [format_fact("un", p, d) for p, d in sorted(dis.unavailable)]
    lines += [format_fact("regN", *_reg_args(r)) for r in dis.replacements]
    return "".join(line + "\n" for line in lines)


def parse_disruptions(text: str) -> DisruptionSet:
    unavailable = set()
    rows = []
    for f in parse_facts(text):
        if f.signature == "un/2":
            unavailable.add((_int(f, 0), _int(f, 1)))
        elif f.signature in ("regN/8", "regN/10"):
            rows.append(_registration(f))
        else:
            raise ParseError(f"unexpected {f.signature} in a disruption file", f.line, f.column)
    keys = [r.key for r in rows]
    if len(set(keys)) != len(keys):
        raise ParseError("duplicate replacement rows", 1, 1)
    try:
        return DisruptionSet(frozenset(unavailable), tuple(rows))
    except InstanceError as exc:
        raise ParseError(str(exc), 1, 1) from None


# reports ------------------------------------------------------------------

REPORT_COLUMNS = ("day", "ats", "clock", "phase2_count")


def emit_report(inst: Instance, sch: Schedule, extra: Optional[Iterable[tuple[str, object]]] = None) -> str:
    """Phase-2 histogram rows for every day holding an assignment, a blank line, then ``metric,value`` rows."""
    lines = [",".join(REPORT_COLUMNS)]
    busy = sorted({a.day for a in sch})
    for day in busy:
        hist = phase2_histogram(inst, sch, day)
        for slot in range(1, inst.grid.ats_count + 1):
            lines.append(f"{day},{slot},{inst.grid.clock(slot)},{hist[slot]}")
    lines.append("")
    lines.append("metric,value")
    cost = cost_vector(inst, sch)
    for level, value in cost.items:
        lines.append(f"level_{level},{value}")
    for name, value in definition_metrics(inst, sch).items():
        lines.append(f"{name},{value}")
    for day in range(1, inst.days + 1):
        mx, mn, count = day_stats(inst, sch, day)
        lines.append(f"day{day}_max,{mx}")
        lines.append(f"day{day}_min,{mn}")
        lines.append(f"day{day}_spread,{mx - mn}")
        lines.append(f"day{day}_phase2,{count}")
        lines.append(f"day{day}_registrations,{len(sch.on_day(day))}")
    for name, value in extra or ():
        lines.append(f"{name},{value}")
    return "".join(line + "\n" for line in lines)


# generator parameter files --------------------------------------------------

def parse_params(text: str):
    """Generator parameters from ``key = value`` lines; ``variant`` picks the preset the other keys override."""
    from .generator import PRESETS, GenParams

    fields = {f.name: f for f in dataclasses.fields(GenParams)}
    defaults = GenParams()
    values: dict[str, object] = {}
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = (part.strip() for part in line.partition("="))
        if not sep or not key or not value:
            raise ParseError("expected 'key = value'", n, 1)
        if key not in fields:
            raise ParseError(f"unknown parameter {key!r}", n, 1)
        if key in values:
            raise ParseError(f"parameter {key!r} given twice", n, 1)
        current = getattr(defaults, key)
        try:
            if key == "variant":
                values[key] = Variant(value)
            elif isinstance(current, tuple):
                items = [v.strip() for v in value.split(",")]
                cast = float if any(isinstance(x, float) for x in current) else int
                values[key] = tuple(cast(v) for v in items)
            elif isinstance(current, float):
                values[key] = float(value)
            else:
                values[key] = int(value)
        except ValueError:
            raise ParseError(f"bad value {value!r} for {key}", n, raw.index("=") + 2) from None
    variant = Variant(values.pop("variant", Variant.DAILY))
    try:
        return PRESETS[variant.value](**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def emit_params(params) -> str:
    lines = []
    for f in dataclasses.fields(params):
        value = getattr(params, f.name)
        if isinstance(value, Variant):
            text = value.value
        elif isinstance(value, tuple):
            text = ", ".join(repr(v) if isinstance(v, float) else str(v) for v in value)
        else:
            text = repr(value) if isinstance(value, float) else str(value)
        lines.append(f"{f.name} = {text}")
    return "".join(line + "\n" for line in lines)
