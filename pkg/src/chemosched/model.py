"""Domain types and time-grid arithmetic.

All durations are counted in 5-minute slots of the clinic day (ATS slots,
numbered from 1).  Phase-4 start positions are stored as TS indices
``1..ts_count`` and converted with :meth:`TimeGrid.ats_of` before any
arithmetic: TS ``t`` starts at ATS slot ``2t``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Mapping, NamedTuple, Optional

from .errors import InputError, InstanceError


class SeatType(str, enum.Enum):
    BED = "bed"
    CHAIR = "chair"


class Variant(str, enum.Enum):
    DAILY = "daily"
    WEEKLY = "weekly"
    EXTENDED = "extended"


@dataclass(frozen=True)
class TimeGrid:
    ts_count: int = 36
    slot_zero_clock: str = "07:30"

    def __post_init__(self):
        if self.ts_count < 1:
            raise InstanceError(f"ts_count must be positive, got {self.ts_count}")
        hh, _, mm = self.slot_zero_clock.partition(":")
        if not (hh.isdigit() and mm.isdigit()):
            raise InstanceError(f"bad clock label {self.slot_zero_clock!r}")

    @property
    def ats_count(self) -> int:
        return 2 * self.ts_count

    def ats_of(self, ts: int) -> int:
        if not 1 <= ts <= self.ts_count:
            raise IndexError(f"start slot {ts} outside 1..{self.ts_count}")
        return 2 * ts

    def clock(self, ats: int) -> str:
        """Wall-clock label of the start of ATS slot ``ats``."""
        hh, _, mm = self.slot_zero_clock.partition(":")
        minutes = int(hh) * 60 + int(mm) + (ats - 1) * 5
        return f"{minutes // 60:02d}:{minutes % 60:02d}"


DEFAULT_GRID = TimeGrid()


def ats_of(ts: int, grid: TimeGrid = DEFAULT_GRID) -> int:
    return grid.ats_of(ts)


@dataclass(frozen=True)
class PhaseDurations:
    d1: int
    d2: int
    d3: int
    d4: int

    def __post_init__(self):
        for name in ("d1", "d2", "d3", "d4"):
            value = getattr(self, name)
            if not isinstance(value, int) or value < 0:
                raise InstanceError(f"phase duration {name} must be a non-negative integer, got {value!r}")
        if self.d1 < 1:
            raise InstanceError("phase 1 (registration) is mandatory: d1 must be >= 1")
        if self.d2 > 0 and self.d3 == 0:
            raise InstanceError("phase 2 requires phase 3: d2 > 0 with d3 = 0")

    @property
    def before_therapy(self) -> int:
        return self.d1 + self.d2 + self.d3


@dataclass(frozen=True)
class Registration:
    patient_id: int
    order: int
    waiting_days: int
    phases: PhaseDurations
    seat_pref: SeatType
    priority: Optional[int] = None
    drug: Optional[str] = None

    def __post_init__(self):
        if self.patient_id < 1:
            raise InstanceError(f"patient id must be positive, got {self.patient_id}")
        if self.order < 0:
            raise InstanceError(f"order must be non-negative, got {self.order}")
        if self.waiting_days < 0:
            raise InstanceError(f"waiting days must be non-negative, got {self.waiting_days}")
        if self.order > 0 and self.waiting_days < 1:
            raise InstanceError(
                f"registration ({self.patient_id},{self.order}) follows another order but waits {self.waiting_days} days"
            )
        if not isinstance(self.seat_pref, SeatType):
            object.__setattr__(self, "seat_pref", SeatType(self.seat_pref))
        if self.priority is not None and self.priority not in (1, 2, 3):
            raise InstanceError(f"priority must be 1, 2 or 3, got {self.priority}")

    @property
    def key(self) -> tuple[int, int]:
        return (self.patient_id, self.order)

    @property
    def d1(self) -> int:
        return self.phases.d1

    @property
    def d2(self) -> int:
        return self.phases.d2

    @property
    def d3(self) -> int:
        return self.phases.d3

    @property
    def d4(self) -> int:
        return self.phases.d4


@dataclass(frozen=True, order=True)
class Seat:
    kind: SeatType
    id: int

    def __str__(self) -> str:
        return f"{self.kind.value}{self.id}"


@dataclass(frozen=True)
class ResourcePool:
    beds: tuple[int, ...] = ()
    chairs: tuple[int, ...] = ()
    nurses: Optional[tuple[int, ...]] = None
    nurse_capacity: Optional[int] = None
    drug_limits: Mapping[tuple[str, int], int] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "beds", tuple(sorted(self.beds)))
        object.__setattr__(self, "chairs", tuple(sorted(self.chairs)))
        if self.nurses is not None:
            object.__setattr__(self, "nurses", tuple(sorted(self.nurses)))
        if len(set(self.beds)) != len(self.beds) or len(set(self.chairs)) != len(self.chairs):
            raise InstanceError("duplicate seat identifiers")
        if (self.nurses is None) != (self.nurse_capacity is None):
            raise InstanceError("nurses and nurse_capacity must be given together")
        if self.nurse_capacity is not None and self.nurse_capacity < 1:
            raise InstanceError(f"nurse capacity must be positive, got {self.nurse_capacity}")
        for (drug, day), limit in self.drug_limits.items():
            if limit < 0:
                raise InstanceError(f"negative limit for drug {drug!r} on day {day}")

    @property
    def seats(self) -> tuple[Seat, ...]:
        return tuple(Seat(SeatType.BED, b) for b in self.beds) + tuple(Seat(SeatType.CHAIR, c) for c in self.chairs)

    def has_seat(self, seat: Seat) -> bool:
        pool = self.beds if seat.kind is SeatType.BED else self.chairs
        return seat.id in pool


@dataclass(frozen=True)
class Instance:
    registrations: tuple[Registration, ...]
    resources: ResourcePool
    days: int = 1
    variant: Variant = Variant.DAILY
    grid: TimeGrid = DEFAULT_GRID
    long_threshold: int = 50
    long_min_ts: int = 24
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        regs = tuple(sorted(self.registrations, key=lambda r: r.key))
        object.__setattr__(self, "registrations", regs)
        object.__setattr__(self, "variant", Variant(self.variant))
        index = {}
        for reg in regs:
            if reg.key in index:
                raise InstanceError(f"duplicate registration {reg.key}")
            index[reg.key] = reg
        object.__setattr__(self, "_index", index)
        if self.days < 1:
            raise InstanceError(f"horizon must be at least one day, got {self.days}")
        if regs and not self.resources.beds and not self.resources.chairs:
            raise InstanceError("instance has registrations but no beds or chairs")
        for reg in regs:
            if reg.order > 0 and (reg.patient_id, reg.order - 1) not in index:
                raise InstanceError(f"patient {reg.patient_id} has order {reg.order} without order {reg.order - 1}")
        if self.variant is Variant.DAILY:
            if self.days != 1 or any(r.order for r in regs):
                raise InstanceError("a daily instance has one day and only order-0 registrations")
        extended = self.variant is Variant.EXTENDED
        if extended != (self.resources.nurses is not None):
            raise InstanceError("nurse resources are present exactly for extended instances")
        if extended:
            if self.days != 1:
                raise InstanceError("an extended instance covers a single day")
            for reg in regs:
                if reg.priority is None or reg.drug is None:
                    raise InstanceError(f"extended registration {reg.key} lacks priority or drug")

    def registration(self, key: tuple[int, int]) -> Registration:
        try:
            return self._index[key]
        except KeyError:
            raise InputError(f"unknown registration {key}") from None

    def __contains__(self, key) -> bool:
        return key in self._index

    @property
    def extended(self) -> bool:
        return self.variant is Variant.EXTENDED

    def patients(self) -> dict[int, list[Registration]]:
        chains: dict[int, list[Registration]] = {}
        for reg in self.registrations:
            chains.setdefault(reg.patient_id, []).append(reg)
        return chains

    def is_long(self, reg: Registration) -> bool:
        return reg.d4 > self.long_threshold


@dataclass(frozen=True)
class Assignment:
    """One placed registration.  Consistency with the instance is the validator's job."""

    registration: Registration
    day: int
    ts: int
    seat: Optional[Seat] = None
    nurse: Optional[int] = None

    @property
    def key(self) -> tuple[int, int]:
        return self.registration.key

    def sort_key(self):
        seat = (0, "", 0) if self.seat is None else (1, self.seat.kind.value, self.seat.id)
        nurse = -1 if self.nurse is None else self.nurse
        return (self.day, self.ts, self.key, seat, nurse)


@dataclass(frozen=True)
class Schedule:
    """Placements normalized into (day, ts, patient, order) order, so equality ignores input order."""

    assignments: tuple[Assignment, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "assignments", tuple(sorted(self.assignments, key=Assignment.sort_key)))

    def __iter__(self):
        return iter(self.assignments)

    def __len__(self) -> int:
        return len(self.assignments)

    def by_key(self) -> dict[tuple[int, int], Assignment]:
        """First assignment of every registration key (valid schedules have exactly one)."""
        out: dict[tuple[int, int], Assignment] = {}
        for a in self.assignments:
            out.setdefault(a.key, a)
        return out

    def on_day(self, day: int) -> list[Assignment]:
        return [a for a in self.assignments if a.day == day]


class Phase2Start(NamedTuple):
    slot: int
    valid: bool


def phase2_start(a: Assignment, grid: TimeGrid = DEFAULT_GRID) -> Optional[Phase2Start]:
    """ATS slot where blood collection starts, or None without phase 2.

    The raw value is returned even when it falls before the first slot; ``valid``
    is False in that case.
    """
    reg = a.registration
    if reg.d2 == 0:
        return None
    slot = 2 * a.ts - reg.d3 - reg.d2
    return Phase2Start(slot, slot >= 1)


def occupied_slots(a: Assignment, grid: TimeGrid = DEFAULT_GRID) -> range:
    d4 = a.registration.d4
    if d4 == 0:
        return range(0)
    start = 2 * a.ts
    return range(start, min(start + d4 - 1, grid.ats_count) + 1)


@dataclass(frozen=True)
class DisruptionSet:
    """Patient unavailabilities plus replacement regimen rows keyed by (patient, order)."""

    unavailable: frozenset[tuple[int, int]] = frozenset()
    replacements: tuple[Registration, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "unavailable", frozenset(self.unavailable))
        object.__setattr__(self, "replacements", tuple(sorted(self.replacements, key=lambda r: r.key)))
        by_patient: dict[int, list[int]] = {}
        for reg in self.replacements:
            by_patient.setdefault(reg.patient_id, []).append(reg.order)
        for pid, orders in by_patient.items():
            if orders != list(range(orders[0], orders[0] + len(orders))):
                raise InstanceError(f"replacement orders of patient {pid} are not contiguous: {orders}")

    def __bool__(self) -> bool:
        return bool(self.unavailable or self.replacements)

    def unavailable_days(self, patient_id: int) -> set[int]:
        return {d for p, d in self.unavailable if p == patient_id}

    @property
    def unavailable_patients(self) -> set[int]:
        return {p for p, _ in self.unavailable}

    @property
    def replaced_patients(self) -> set[int]:
        return {r.patient_id for r in self.replacements}

    def first_replaced_order(self, patient_id: int) -> Optional[int]:
        orders = [r.order for r in self.replacements if r.patient_id == patient_id]
        return min(orders) if orders else None

    def check_against(self, inst: Instance) -> None:
        known = {r.patient_id for r in inst.registrations}
        chains = inst.patients()
        for pid, _ in sorted(self.unavailable):
            if pid not in known:
                raise InputError(f"unavailability for unknown patient {pid}")
        for pid in sorted(self.replaced_patients):
            if pid not in known:
                raise InputError(f"replacement regimen for unknown patient {pid}")
            first = self.first_replaced_order(pid)
            if first > len(chains[pid]):
                raise InputError(f"replacement for patient {pid} starts at order {first}, beyond its chain")


def apply_replacements(inst: Instance, dis: DisruptionSet) -> Instance:
    """Instance with every replaced patient's tail swapped for the new regimen rows.

    The replacement defines the authoritative tail: old orders from the first
    replaced order onwards are dropped, replacement orders are added.
    """
    if not dis.replacements:
        return inst
    dis.check_against(inst)
    regs = []
    for reg in inst.registrations:
        first = dis.first_replaced_order(reg.patient_id)
        if first is None or reg.order < first:
            regs.append(reg)
    regs.extend(dis.replacements)
    return Instance(
        registrations=tuple(regs),
        resources=inst.resources,
        days=inst.days,
        variant=inst.variant,
        grid=inst.grid,
        long_threshold=inst.long_threshold,
        long_min_ts=inst.long_min_ts,
    )


def chain_span(chain: Iterable[Registration]) -> int:
    """Days between a patient's first and last appointment when gaps are kept exactly."""
    return sum(r.waiting_days for r in chain if r.order > 0)
