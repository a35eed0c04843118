"""Feasibility checks returning every violated condition."""

from __future__ import annotations

import enum
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable

from .errors import InputError, UsageError
from .model import (
    Assignment,
    DisruptionSet,
    Instance,
    Schedule,
    apply_replacements,
    occupied_slots,
)


class Code(str, enum.Enum):
    C1 = "C1"
    C2 = "C2"
    C3 = "C3"
    C4 = "C4"
    C5 = "C5"
    C6 = "C6"
    E_NURSE_ASSIGN = "E_NURSE_ASSIGN"
    E_NURSE_CAP = "E_NURSE_CAP"
    E_DRUG = "E_DRUG"
    E_LAST_SLOT = "E_LAST_SLOT"
    R_FROZEN = "R_FROZEN"
    R_ANTICIPATED = "R_ANTICIPATED"
    R_UNAVAILABLE = "R_UNAVAILABLE"


_CODE_RANK = {c: i for i, c in enumerate(Code)}


@dataclass(frozen=True)
class Violation:
    code: Code
    registrations: tuple[tuple[int, int], ...]
    message: str
    resource: str = ""

    def sort_key(self):
        return (_CODE_RANK[self.code], self.registrations, self.resource, self.message)

    def __str__(self) -> str:
        regs = " ".join(f"{p}/{o}" for p, o in self.registrations)
        res = f" [{self.resource}]" if self.resource else ""
        return f"{self.code.value} {regs}{res}: {self.message}"


def _sorted(violations: Iterable[Violation]) -> list[Violation]:
    return sorted(set(violations), key=Violation.sort_key)


def _check_membership(inst: Instance, sch: Schedule) -> None:
    for a in sch:
        if a.key not in inst or inst.registration(a.key) != a.registration:
            raise InputError(f"schedule references unknown registration {a.key}")


def _chain_violations(inst: Instance, by_reg: dict, exact_gaps: bool) -> list[Violation]:
    out = []
    for pid, chain in inst.patients().items():
        for prev, nxt in zip(chain, chain[1:]):
            firsts, seconds = by_reg.get(prev.key, []), by_reg.get(nxt.key, [])
            for a in firsts:
                for b in seconds:
                    gap = b.day - a.day
                    if exact_gaps:
                        bad = gap != nxt.waiting_days
                    else:
                        bad = gap < 1
                    if bad or b.day > inst.days:
                        out.append(Violation(
                            Code.C6, (prev.key, nxt.key),
                            f"order {nxt.order} on day {b.day} after day {a.day}; regimen waits {nxt.waiting_days}",
                        ))
    return out


def validate_core(inst: Instance, sch: Schedule, exact_gaps: bool = True) -> list[Violation]:
    """Conditions C1-C6.  ``exact_gaps=False`` only requires strictly later days for later orders."""
    _check_membership(inst, sch)
    grid = inst.grid
    out: list[Violation] = []
    by_reg: dict[tuple[int, int], list[Assignment]] = defaultdict(list)
    for a in sch:
        by_reg[a.key].append(a)

    for reg in inst.registrations:
        n = len(by_reg.get(reg.key, ()))
        if n != 1:
            out.append(Violation(Code.C1, (reg.key,), f"assigned {n} times"))
    for a in sch:
        reg = a.registration
        if not (1 <= a.day <= inst.days and 1 <= a.ts <= grid.ts_count):
            out.append(Violation(Code.C1, (a.key,), f"(day {a.day}, ts {a.ts}) is outside the grid"))
            continue
        if reg.d4 > 0 and a.seat is None:
            out.append(Violation(Code.C2, (a.key,), "therapy needs a seat but none assigned"))
        elif reg.d4 == 0 and a.seat is not None:
            out.append(Violation(Code.C2, (a.key,), f"no therapy but seat {a.seat} assigned", str(a.seat)))
        elif a.seat is not None and not inst.resources.has_seat(a.seat):
            out.append(Violation(Code.C2, (a.key,), f"seat {a.seat} does not exist", str(a.seat)))
        if inst.is_long(reg) and a.ts < inst.long_min_ts:
            out.append(Violation(Code.C4, (a.key,), f"long therapy ({reg.d4}) starts at ts {a.ts} < {inst.long_min_ts}"))
        if grid.ats_of(a.ts) - reg.d1 - reg.d2 - reg.d3 < 1:
            out.append(Violation(Code.C5, (a.key,), f"earlier phases do not fit before ts {a.ts}"))

    per_seat: dict = defaultdict(list)
    for a in sch:
        if a.seat is not None and a.registration.d4 > 0 and 1 <= a.ts <= grid.ts_count:
            per_seat[(a.day, a.seat)].append(a)
    for (day, seat), items in per_seat.items():
        for i, a in enumerate(items):
            sa = occupied_slots(a, grid)
            for b in items[i + 1:]:
                if a.key == b.key:
                    continue
                sb = occupied_slots(b, grid)
                if sa.start <= sb[-1] and sb.start <= sa[-1]:
                    pair = tuple(sorted((a.key, b.key)))
                    out.append(Violation(Code.C3, pair, f"overlap on day {day}", str(seat)))

    out.extend(_chain_violations(inst, by_reg, exact_gaps))
    return _sorted(out)


def validate_extended(inst: Instance, sch: Schedule) -> list[Violation]:
    """Nurse assignment and capacity, drug limits and the last-slot ban."""
    if not inst.extended:
        raise UsageError("extended checks apply to extended instances only")
    _check_membership(inst, sch)
    grid = inst.grid
    pool = inst.resources
    nurses = set(pool.nurses)
    out: list[Violation] = []
    coverage: dict = defaultdict(lambda: defaultdict(list))
    drug_use: dict = defaultdict(list)
    for a in sch:
        if a.nurse is None or a.nurse not in nurses:
            out.append(Violation(Code.E_NURSE_ASSIGN, (a.key,), f"nurse {a.nurse} is not an available nurse"))
        else:
            for slot in occupied_slots(a, grid):
                coverage[(a.nurse, a.day)][slot].append(a.key)
        if a.ts == grid.ts_count:
            out.append(Violation(Code.E_LAST_SLOT, (a.key,), f"starts at the last slot {a.ts}"))
        drug_use[(a.registration.drug, a.day)].append(a.key)
    for (nurse, day), slots in coverage.items():
        over = sorted(s for s, keys in slots.items() if len(keys) > pool.nurse_capacity)
        if over:
            keys = sorted({k for s in over for k in slots[s]})
            out.append(Violation(
                Code.E_NURSE_CAP, tuple(keys),
                f"nurse {nurse} exceeds {pool.nurse_capacity} patients on day {day} in slots {over[0]}..{over[-1]}",
                f"nurse{nurse}",
            ))
    for (drug, day), keys in drug_use.items():
        limit = pool.drug_limits.get((drug, day))
        if limit is not None and len(keys) > limit:
            out.append(Violation(Code.E_DRUG, tuple(sorted(keys)), f"{len(keys)} doses of {drug} on day {day} > {limit}", str(drug)))
    return _sorted(out)


def validate(inst: Instance, sch: Schedule, exact_gaps: bool = True) -> list[Violation]:
    out = validate_core(inst, sch, exact_gaps)
    if inst.extended:
        out = _sorted(out + validate_extended(inst, sch))
    return out


def earliest_disruption_day(old: Schedule, dis: DisruptionSet):
    """Minimum over unavailable days and old days of replaced registrations, None without disruption."""
    days = [d for _, d in dis.unavailable]
    replaced = {r.key for r in dis.replacements}
    days.extend(a.day for a in old if a.key in replaced)
    return min(days) if days else None


def frozen_prefix(old: Schedule, dis: DisruptionSet) -> frozenset[Assignment]:
    """Old assignments that any reschedule must reproduce verbatim."""
    earliest = earliest_disruption_day(old, dis)
    if earliest is None:
        return frozenset(old.assignments)
    frozen = {a for a in old if a.day < earliest}
    for pid in dis.unavailable_patients:
        first_off = min(dis.unavailable_days(pid))
        frozen.update(a for a in old if a.registration.patient_id == pid and a.day < first_off)
    # rows superseded by a replacement regimen cannot be kept
    return frozenset(a for a in frozen if not _superseded(a, dis))


def _superseded(a: Assignment, dis: DisruptionSet) -> bool:
    first = dis.first_replaced_order(a.registration.patient_id)
    return first is not None and a.registration.order >= first


def validate_reschedule(inst: Instance, old: Schedule, new: Schedule, dis: DisruptionSet) -> list[Violation]:
    """Frozen prefix, postpone-only and unavailability rules of a reschedule."""
    dis.check_against(inst)
    effective = apply_replacements(inst, dis)
    for a in new:
        if a.key not in effective or effective.registration(a.key) != a.registration:
            raise InputError(f"rescheduled assignment {a.key} matches neither the instance nor the replacements")
    out: list[Violation] = []
    new_set = set(new.assignments)
    earliest = earliest_disruption_day(old, dis)

    for a in frozen_prefix(old, dis):
        if a not in new_set:
            out.append(Violation(Code.R_FROZEN, (a.key,), f"frozen assignment on day {a.day} was changed"))
    if earliest is not None:
        old_set = set(old.assignments)
        for a in new:
            if a.day < earliest and a not in old_set:
                out.append(Violation(Code.R_FROZEN, (a.key,), f"new assignment on day {a.day} before disruption day {earliest}"))

    old_by = old.by_key()
    new_by = new.by_key()
    disrupted = dis.unavailable_patients | dis.replaced_patients
    for pid, chain in effective.patients().items():
        if pid in disrupted:
            continue
        for reg in chain:
            if new_by.get(reg.key) != old_by.get(reg.key):
                out.append(Violation(Code.R_FROZEN, (reg.key,), "undisrupted patient was moved"))
                break

    replaced = {r.key for r in dis.replacements}
    for a in new:
        if (a.registration.patient_id, a.day) in dis.unavailable:
            out.append(Violation(Code.R_UNAVAILABLE, (a.key,), f"patient unavailable on day {a.day}"))
        before = old_by.get(a.key)
        if a.key not in replaced and before is not None and a.day < before.day:
            out.append(Violation(Code.R_ANTICIPATED, (a.key,), f"moved from day {before.day} to earlier day {a.day}"))
    return _sorted(out)


def validate_rescheduled(inst: Instance, old: Schedule, new: Schedule, dis: DisruptionSet) -> list[Violation]:
    """Everything a reschedule must satisfy: feasibility on the replaced instance plus the reschedule rules."""
    effective = apply_replacements(inst, dis)
    out = validate(effective, new, exact_gaps=False)
    return _sorted(out + validate_reschedule(inst, old, new, dis))
