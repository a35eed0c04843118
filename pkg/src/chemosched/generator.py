"""Synthetic instances and disruption scenarios.

Counts and rates follow the clinic statistics the package is calibrated to:
about 126 patients per day (std 12, between 105 and 148), phase 2 for 44%
of registrations, chairs for 71%, and roughly 10% of weekly patients with
two or more treatments.  Durations are in 5-minute units.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConfigError, ScenarioError
from .model import (
    DisruptionSet,
    apply_replacements,
    Instance,
    PhaseDurations,
    Registration,
    ResourcePool,
    Schedule,
    SeatType,
    TimeGrid,
    Variant,
)


@dataclass
class GenParams:
    variant: Variant = Variant.DAILY
    days: int = 1
    patients_mean: float = 126.0
    patients_std: float = 12.0
    patients_min: int = 105
    patients_max: int = 148
    phase2_rate: float = 0.44
    chair_rate: float = 0.71
    d4_main_range: tuple[int, int] = (4, 30)
    d4_outlier_rate: float = 0.05
    d4_outlier_range: tuple[int, int] = (31, 80)
    d1_range: tuple[int, int] = (1, 3)
    d2_range: tuple[int, int] = (2, 6)
    d3_range: tuple[int, int] = (1, 4)
    multi_treatment_rate: float = 0.0
    max_orders: int = 5
    # relative weights of 2, 3, ..., max_orders orders for multi-treatment patients
    order_count_weights: tuple[float, ...] = (0.55, 0.25, 0.12, 0.08)
    waiting_range: tuple[int, int] = (1, 4)
    priority_weights: tuple[float, float, float] = (0.2, 0.4, 0.4)
    nurses: int = 0
    nurse_capacity: int = 7
    beds: int = 10
    chairs: int = 25
    drug_catalog_size: int = 10
    drug_limit: int = 10_000
    ts_count: int = 36

    def __post_init__(self):
        self.variant = Variant(self.variant)
        for name in ("d4_main_range", "d4_outlier_range", "d1_range", "d2_range", "d3_range", "waiting_range"):
            setattr(self, name, tuple(int(v) for v in getattr(self, name)))
        self.order_count_weights = tuple(float(w) for w in self.order_count_weights)
        self.priority_weights = tuple(float(w) for w in self.priority_weights)
        self.check()

    def check(self) -> None:
        for name in ("phase2_rate", "chair_rate", "d4_outlier_rate", "multi_treatment_rate"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1], got {value}")
        for name in ("d4_main_range", "d4_outlier_range", "d1_range", "d2_range", "d3_range", "waiting_range"):
            rng = getattr(self, name)
            if len(rng) != 2 or rng[0] > rng[1]:
                raise ConfigError(f"{name} is empty: {rng}")
        if self.patients_min > self.patients_max:
            raise ConfigError(f"patients_min {self.patients_min} exceeds patients_max {self.patients_max}")
        if self.patients_std < 0 or self.patients_min < 0:
            raise ConfigError("patient counts and their spread must be non-negative")
        if self.d1_range[0] < 1:
            raise ConfigError("phase 1 is mandatory: d1_range must start at 1 or more")
        if self.d2_range[0] < 1 or self.d3_range[0] < 1:
            raise ConfigError("phase 2 and 3 ranges must be positive (absence is drawn via phase2_rate)")
        if self.d4_main_range[0] < 0:
            raise ConfigError("therapy durations must be non-negative")
        if self.waiting_range[0] < 1:
            raise ConfigError("waiting days between orders must be at least 1")
        if len(self.priority_weights) != 3 or abs(sum(self.priority_weights) - 1.0) > 1e-9:
            raise ConfigError(f"priority_weights must be three weights summing to 1, got {self.priority_weights}")
        if any(w < 0 for w in self.priority_weights + self.order_count_weights):
            raise ConfigError("weights must be non-negative")
        if self.max_orders < 1 or self.days < 1 or self.ts_count < 1:
            raise ConfigError("max_orders, days and ts_count must be positive")
        if self.max_orders > 1 and len(self.order_count_weights) < self.max_orders - 1:
            raise ConfigError("order_count_weights needs one weight per order count 2..max_orders")
        if self.beds < 0 or self.chairs < 0 or self.beds + self.chairs < 1:
            raise ConfigError("need at least one bed or chair")
        if self.variant is Variant.DAILY and (self.days != 1 or self.multi_treatment_rate > 0):
            raise ConfigError("daily instances have one day and no multi-treatment patients")
        if self.variant is Variant.EXTENDED:
            if self.days != 1:
                raise ConfigError("extended instances cover one day")
            if self.nurses < 1 or self.nurse_capacity < 1:
                raise ConfigError("extended instances need nurses with positive capacity")
            if self.drug_catalog_size < 1 or self.drug_limit < 0:
                raise ConfigError("extended instances need a drug catalog and a non-negative limit")
        if self.multi_treatment_rate > 0 and (self.max_orders < 2 or self.days < 2):
            raise ConfigError("multi-treatment patients need max_orders >= 2 and at least two days")

    def replace(self, **changes) -> "GenParams":
        return dataclasses.replace(self, **changes)


def daily_params(**changes) -> GenParams:
    return GenParams(**changes)


def weekly_params(**changes) -> GenParams:
    """About 542 patients and 634 registrations over five days."""
    base = dict(
        variant=Variant.WEEKLY, days=5, patients_mean=542.0, patients_std=22.0,
        patients_min=480, patients_max=600, multi_treatment_rate=0.10,
    )
    base.update(changes)
    return GenParams(**base)


def extended_params(**changes) -> GenParams:
    base = dict(variant=Variant.EXTENDED, nurses=5, nurse_capacity=7)
    base.update(changes)
    return GenParams(**base)


def tiny_params(**changes) -> GenParams:
    """One-day instances small enough for exhaustive enumeration: up to 5 registrations, 8 start slots, 1 bed, 1 chair."""
    base = dict(
        patients_mean=3.0, patients_std=1.5, patients_min=1, patients_max=5, ts_count=8,
        beds=1, chairs=1, d4_main_range=(0, 12), d4_outlier_rate=0.0,
    )
    base.update(changes)
    return GenParams(**base)


PRESETS = {"daily": daily_params, "weekly": weekly_params, "extended": extended_params}


def _uniform(rng: np.random.Generator, bounds: tuple[int, int]) -> int:
    return int(rng.integers(bounds[0], bounds[1] + 1))


def _phases(rng: np.random.Generator, p: GenParams) -> PhaseDurations:
    d1 = _uniform(rng, p.d1_range)
    if rng.random() < p.phase2_rate:
        d2, d3 = _uniform(rng, p.d2_range), _uniform(rng, p.d3_range)
    else:
        d2 = d3 = 0
    if rng.random() < p.d4_outlier_rate:
        d4 = _uniform(rng, p.d4_outlier_range)
    else:
        d4 = _uniform(rng, p.d4_main_range)
    return PhaseDurations(d1, d2, d3, d4)


def _waits(rng: np.random.Generator, p: GenParams, n_orders: int) -> list[int]:
    """Waiting days of orders 1..n-1, drawn so the whole regimen fits the horizon."""
    budget = p.days - 1
    waits = []
    for k in range(1, n_orders):
        left = n_orders - 1 - k  # orders still needing at least one day each
        hi = min(p.waiting_range[1], budget - left)
        lo = min(p.waiting_range[0], hi)
        w = int(rng.integers(lo, hi + 1))
        waits.append(w)
        budget -= w
    return waits


def patient_count(rng: np.random.Generator, p: GenParams) -> int:
    n = int(round(rng.normal(p.patients_mean, p.patients_std)))
    return min(max(n, p.patients_min), p.patients_max)


def generate(params: Optional[GenParams] = None, seed: int = 0) -> Instance:
    p = params or GenParams()
    p.check()
    rng = np.random.default_rng(seed)
    n_patients = patient_count(rng, p)
    extended = p.variant is Variant.EXTENDED
    drugs = [f"drug{k}" for k in range(1, p.drug_catalog_size + 1)]
    max_orders = min(p.max_orders, p.days)
    counts = np.arange(2, max_orders + 1)
    weights = np.array(p.order_count_weights[: len(counts)], dtype=float)
    if len(counts) and weights.sum() > 0:
        weights = weights / weights.sum()
    regs = []
    for pid in range(1, n_patients + 1):
        n_orders = 1
        if len(counts) and rng.random() < p.multi_treatment_rate:
            n_orders = int(rng.choice(counts, p=weights)) if weights.sum() > 0 else int(counts[0])
        waits = [0] + _waits(rng, p, n_orders)
        priority = int(rng.choice([1, 2, 3], p=p.priority_weights)) if extended else None
        for order in range(n_orders):
            pref = SeatType.CHAIR if rng.random() < p.chair_rate else SeatType.BED
            drug = drugs[int(rng.integers(len(drugs)))] if extended else None
            regs.append(Registration(pid, order, waits[order], _phases(rng, p), pref, priority, drug))
    if extended:
        pool = ResourcePool(
            beds=tuple(range(1, p.beds + 1)),
            chairs=tuple(range(1, p.chairs + 1)),
            nurses=tuple(range(1, p.nurses + 1)),
            nurse_capacity=p.nurse_capacity,
            drug_limits={(d, day): p.drug_limit for d in drugs for day in range(1, p.days + 1)},
        )
    else:
        pool = ResourcePool(beds=tuple(range(1, p.beds + 1)), chairs=tuple(range(1, p.chairs + 1)))
    return Instance(tuple(regs), pool, days=p.days, variant=p.variant, grid=TimeGrid(p.ts_count))


# disruption scenarios ---------------------------------------------------


def _replacement_tail(rng: np.random.Generator, inst: Instance, chain: list, old_days: dict) -> list[Registration]:
    """New rows from a random order m >= 1 on, with altered waits and therapy lengths inside the horizon."""
    first = int(rng.integers(1, len(chain)))
    room = inst.days - old_days[chain[first - 1].key]
    n_new = max(1, min(len(chain) - first, room))
    budget = room
    rows = []
    for m in range(n_new):
        old = chain[first + m]
        hi = max(1, min(4, budget - (n_new - 1 - m)))
        wait = int(rng.integers(1, hi + 1))
        budget -= wait
        ph = old.phases
        d4 = max(1, ph.d4 + int(rng.integers(-3, 4)))
        rows.append(Registration(
            old.patient_id, first + m, wait, PhaseDurations(ph.d1, ph.d2, ph.d3, d4),
            old.seat_pref, old.priority, old.drug,
        ))
    return rows


def _cheapest(seqs: list) -> list:
    return [s for s in seqs if s[0] == seqs[0][0]]


def generate_disruptions(inst: Instance, sch: Schedule, n_unavail: int, n_regimen_changes: int = 0,
                         seed: int = 0) -> DisruptionSet:
    return disruptions_with_repair(inst, sch, n_unavail, n_regimen_changes, seed)[0]


def disruptions_with_repair(inst: Instance, sch: Schedule, n_unavail: int, n_regimen_changes: int = 0,
                            seed: int = 0) -> tuple[DisruptionSet, Schedule]:
    """Unavailable patients (one scheduled day each) and regimen replacements for multi-order patients.

    Unavailabilities fall on day 2 or later whenever the chosen patient has
    such a day, so the reschedule keeps a non-empty frozen prefix.  A
    disruption is drawn only if the affected appointments can be moved to
    one of their cheapest day sequences with preferred seats, given the old
    schedule and the disruptions drawn before it.  The placements found
    along the way witness a repair that meets the rescheduling lower bound.
    """
    from .resched import place_preferred, tail_sequences
    from .solver.state import SearchState
    from .validate import earliest_disruption_day

    if n_unavail < 0 or n_regimen_changes < 0:
        raise ScenarioError("disruption counts must be non-negative")
    rng = np.random.default_rng(seed)
    chains = inst.patients()
    by_key = sch.by_key()
    if any(r.key not in by_key for r in inst.registrations):
        raise ScenarioError("the schedule does not place every registration")
    old_days = {k: a.day for k, a in by_key.items()}
    patients = sorted(chains)
    if n_unavail > len(patients):
        raise ScenarioError(f"{n_unavail} unavailable patients requested, only {len(patients)} scheduled")

    state = SearchState(inst)
    state.load_schedule(sch)
    unavailable: set[tuple[int, int]] = set()
    chosen: set[int] = set()
    order = [patients[k] for k in rng.permutation(len(patients))]
    for want_late in (True, False):
        for pid in order:
            if len(chosen) == n_unavail:
                break
            if pid in chosen:
                continue
            chain = chains[pid]
            days = sorted({old_days[r.key] for r in chain})
            pool = [d for d in days if d >= 2] if want_late else days
            if not pool:
                continue
            day = pool[int(rng.integers(len(pool)))]
            free_from = next(k for k, r in enumerate(chain) if old_days[r.key] >= day)
            fixed_days = [old_days[r.key] for r in chain[:free_from]]
            seqs = tail_sequences(state, chain, free_from, fixed_days, day, {day}, old_days, set(),
                                  old_days[chain[0].key])
            free = [state.index[r.key] for r in chain[free_from:]]
            saved = [(i, state.remove(i)) for i in free]
            if seqs and place_preferred(state, free, _cheapest(seqs)):
                unavailable.add((pid, day))
                chosen.add(pid)
            else:
                for i, pos in saved:
                    state.place(i, *pos)
    if len(chosen) < n_unavail:
        raise ScenarioError(f"only {len(chosen)} patients can be made unavailable and still be repaired")

    current = {a.key: a for a in state.to_schedule()}
    multi = [pid for pid in patients if len(chains[pid]) > 1 and pid not in chosen]
    if n_regimen_changes > len(multi):
        raise ScenarioError(f"{n_regimen_changes} regimen changes requested, only {len(multi)} multi-order patients")
    replacements: list[Registration] = []
    earliest = min((d for _, d in unavailable), default=None)
    for k in rng.permutation(len(multi)):
        if len({r.patient_id for r in replacements}) == n_regimen_changes:
            break
        pid = multi[int(k)]
        rows = _replacement_tail(rng, inst, chains[pid], old_days)
        trial = DisruptionSet(frozenset(unavailable), tuple(replacements + rows))
        trial_earliest = earliest_disruption_day(sch, trial)
        # an earlier first movable day could cheapen repairs already accepted
        if replacements and trial_earliest < earliest:
            continue
        effective = apply_replacements(inst, trial)
        work = SearchState(effective)
        first = rows[0].order
        work.load_schedule(Schedule(tuple(
            a for key, a in current.items() if key in effective and effective.registration(key) == a.registration
        )))
        chain = effective.patients()[pid]
        fixed_days = [old_days[r.key] for r in chain[:first]]
        seqs = tail_sequences(work, chain, first, fixed_days, trial_earliest, set(),
                              old_days, {r.key for r in rows}, old_days[chain[0].key])
        free = [work.index[r.key] for r in chain[first:]]
        if seqs and place_preferred(work, free, _cheapest(seqs)):
            replacements.extend(rows)
            earliest = trial_earliest
            current = {a.key: a for a in work.to_schedule()}
    if len({r.patient_id for r in replacements}) < n_regimen_changes:
        raise ScenarioError("not enough multi-order patients admit a repairable regimen change")
    dis = DisruptionSet(frozenset(unavailable), tuple(replacements))
    effective = apply_replacements(inst, dis)
    repair = Schedule(tuple(a for key, a in sorted(current.items()) if key in effective))
    return dis, repair
