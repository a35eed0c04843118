"""Objective components, lexicographic cost vectors and dominance."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from functools import total_ordering
from typing import Iterable, Optional

from .errors import UsageError
from .model import DisruptionSet, Instance, Schedule, apply_replacements, phase2_start

CORE_LEVELS = (7, 6, 5, 4)
EXTENDED_LEVELS = (7, 6, 5, 4, 3, 2, 1)
RESCHEDULE_LEVELS = (8, 7)
PRIORITY_LEVEL = {1: 3, 2: 2, 3: 1}


@total_ordering
@dataclass(frozen=True)
class CostVector:
    """Per-level penalties, highest level first.  ``<`` means "dominates"."""

    items: tuple[tuple[int, int], ...]

    def __post_init__(self):
        items = tuple((int(l), int(v)) for l, v in self.items)
        levels = [l for l, _ in items]
        if any(a <= b for a, b in zip(levels, levels[1:])):
            raise ValueError(f"levels must be strictly descending: {levels}")
        if any(v < 0 for _, v in items):
            raise ValueError("cost values must be non-negative")
        object.__setattr__(self, "items", items)

    @classmethod
    def of(cls, levels: Iterable[int], values: Iterable[int]) -> "CostVector":
        return cls(tuple(zip(levels, values)))

    @property
    def levels(self) -> tuple[int, ...]:
        return tuple(l for l, _ in self.items)

    @property
    def values(self) -> tuple[int, ...]:
        return tuple(v for _, v in self.items)

    def __getitem__(self, level: int) -> int:
        for l, v in self.items:
            if l == level:
                return v
        raise KeyError(level)

    def _check(self, other: "CostVector") -> None:
        if self.levels != other.levels:
            raise UsageError(f"cannot compare cost vectors over levels {self.levels} and {other.levels}")

    def __lt__(self, other: "CostVector") -> bool:
        self._check(other)
        return self.values < other.values

    def __str__(self) -> str:
        return ",".join(f"{l}:{v}" for l, v in self.items)

    def __repr__(self) -> str:
        return "[" + ",".join(f"({l},{v})" for l, v in self.items) + "]"


def dominates(a: CostVector, b: CostVector) -> bool:
    a._check(b)
    return a.values < b.values


def missed_preferences(inst: Instance, sch: Schedule) -> int:
    return sum(
        1 for a in sch
        if a.registration.d4 > 0 and a.seat is not None and a.seat.kind is not a.registration.seat_pref
    )


def phase2_histogram(inst: Instance, sch: Schedule, day: int) -> dict[int, int]:
    hist = {slot: 0 for slot in range(1, inst.grid.ats_count + 1)}
    for a in sch:
        if a.day != day:
            continue
        start = phase2_start(a, inst.grid)
        if start is not None:
            hist[start.slot] = hist.get(start.slot, 0) + 1
    return hist


def day_stats(inst: Instance, sch: Schedule, day: int) -> tuple[int, int, int]:
    """(largest bin, smallest non-zero bin, phase-2 registrations) of one day."""
    bins = [n for n in phase2_histogram(inst, sch, day).values() if n > 0]
    if not bins:
        return (0, 0, 0)
    return (max(bins), min(bins), sum(bins))


def priority_sums(inst: Instance, sch: Schedule) -> dict[int, int]:
    sums = {1: 0, 2: 0, 3: 0}
    for a in sch:
        reg = a.registration
        if reg.order == 0 and reg.priority is not None:
            sums[reg.priority] += a.ts
    return sums


def cost_vector(inst: Instance, sch: Schedule) -> CostVector:
    stats = [day_stats(inst, sch, d) for d in range(1, inst.days + 1)]
    values = [
        missed_preferences(inst, sch),
        sum(s[0] for s in stats),
        sum(s[0] - s[1] for s in stats),
        max((s[2] for s in stats), default=0),
    ]
    if inst.extended:
        sums = priority_sums(inst, sch)
        return CostVector.of(EXTENDED_LEVELS, values + [sums[1], sums[2], sums[3]])
    return CostVector.of(CORE_LEVELS, values)


def definition_metrics(inst: Instance, sch: Schedule) -> dict[str, int]:
    """Whole-horizon m*, d* and g*: phase-2 starts pooled over days, spread including empty slots."""
    pooled: Counter = Counter()
    for d in range(1, inst.days + 1):
        pooled.update(phase2_histogram(inst, sch, d))
    counts = [pooled.get(s, 0) for s in range(1, inst.grid.ats_count + 1)]
    per_day = Counter(a.day for a in sch)
    return {
        "m_star": missed_preferences(inst, sch),
        "d_star": max(counts) - min(counts) if counts else 0,
        "g_star": max(per_day.values(), default=0),
    }


def regimen_deviation(inst: Instance, sch: Schedule) -> int:
    """Sum over consecutive orders of |prescribed gap - actual gap|."""
    by_key = sch.by_key()
    total = 0
    for chain in inst.patients().values():
        for prev, nxt in zip(chain, chain[1:]):
            a, b = by_key.get(prev.key), by_key.get(nxt.key)
            if a is not None and b is not None:
                total += abs(nxt.waiting_days - (b.day - a.day))
    return total


def first_day_shift(old: Schedule, new: Schedule) -> int:
    old_first = {a.registration.patient_id: a.day for a in old if a.registration.order == 0}
    new_first = {a.registration.patient_id: a.day for a in new if a.registration.order == 0}
    return sum(abs(new_first[p] - old_first[p]) for p in new_first if p in old_first)


def resched_cost(inst: Instance, old: Schedule, new: Schedule, dis: DisruptionSet,
                 effective: Optional[Instance] = None) -> CostVector:
    effective = effective or apply_replacements(inst, dis)
    level8 = regimen_deviation(effective, new)
    level7 = first_day_shift(old, new) + missed_preferences(effective, new)
    return CostVector.of(RESCHEDULE_LEVELS, (level8, level7))


def unnecessary_moves(old: Schedule, new: Schedule, dis: DisruptionSet) -> int:
    """Patients with neither unavailability nor replacement whose first appointment day changed."""
    disrupted = dis.unavailable_patients | dis.replaced_patients
    old_first = {a.registration.patient_id: a.day for a in old if a.registration.order == 0}
    return sum(
        1 for a in new
        if a.registration.order == 0
        and a.registration.patient_id not in disrupted
        and old_first.get(a.registration.patient_id, a.day) != a.day
    )
