"""Repair of a weekly schedule after patient unavailabilities and regimen changes.

Everything before the earliest disruption day is kept verbatim, patients
without a disruption keep all their appointments, and the remaining
appointments of disrupted patients are placed again.  For each disrupted
patient the candidate day sequences are enumerated in order of their own
rescheduling cost (regimen-gap deviation, then first-day shift), so the
search works patient by patient: the cost is separable except for the seat
competition between disrupted patients.
"""

from __future__ import annotations

import itertools
import random
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

from .errors import InfeasibleError, InputError
from .model import DisruptionSet, Instance, Schedule, apply_replacements
from .objective import RESCHEDULE_LEVELS, CostVector, resched_cost, unnecessary_moves
from .solver import SolverConfig
from .solver.state import SearchState
from .validate import earliest_disruption_day, frozen_prefix

__all__ = ["DisruptionSet", "ReschedResult", "frozen_prefix", "place_preferred", "reschedule", "tail_sequences"]


# patient orders tried without improvement before the search stops early
STALL_ROUNDS = 300


@dataclass
class ReschedResult:
    schedule: Schedule
    cost: CostVector
    proven_optimal: bool
    unnecessary_moves: int
    moved: int  # registrations whose assignment differs from the old schedule
    elapsed: float = 0.0
    incumbents: list = field(default_factory=list)

    def __iter__(self):
        return iter((self.schedule, self.cost))


@dataclass
class _Patient:
    pid: int
    free: list[int]  # state indices of the orders to place, in order
    sequences: list[tuple[tuple[int, int], tuple[int, ...]]]  # ((level8, shift), days)

    @property
    def best(self) -> tuple[int, int]:
        return self.sequences[0][0]


def tail_sequences(state: SearchState, chain, free_from: int, fixed_days: list[int], earliest: int,
                   blocked: set[int], old_days: dict, replaced: set, old_first: Optional[int]):
    """All strictly increasing day sequences for the free tail, with their own cost."""
    last_fixed = fixed_days[-1] if fixed_days else 0
    options = []
    for reg in chain[free_from:]:
        lo = max(earliest, last_fixed + 1)
        if reg.key not in replaced and reg.key in old_days:
            lo = max(lo, old_days[reg.key])
        options.append([d for d in range(lo, state.D + 1) if d not in blocked])
    out = []
    for days in itertools.product(*options):
        if any(b <= a for a, b in zip(days, days[1:])) or (days and days[0] <= last_fixed):
            continue
        seq = list(fixed_days) + list(days)
        l8 = sum(abs(chain[k].waiting_days - (seq[k] - seq[k - 1])) for k in range(1, len(chain)))
        shift = abs(seq[0] - old_first) if old_first is not None else 0
        out.append(((l8, shift), tuple(days)))
    out.sort()
    return out


def place_preferred(state: SearchState, free: list[int], sequences) -> bool:
    """Place ``free`` on the first sequence where every order gets its preferred seat type."""
    for _, days in sequences:
        placed = []
        for i, day in zip(free, days):
            pos = state.best_position(i, day, only_pref=True)
            if pos is None:
                break
            state.place(i, *pos[1:])
            placed.append(i)
        else:
            return True
        for i in placed:
            state.remove(i)
    return False


class _Search:
    def __init__(self, effective: Instance, old: Schedule, dis: DisruptionSet, base: Schedule,
                 patients: list[_Patient], rng: random.Random, deadline: float):
        self.state = SearchState(effective)
        self.state.load_schedule(base)
        self.base_snap = self.state.snapshot()
        self.patients = patients
        self.rng = rng
        self.deadline = deadline

    def place_patient(self, p: _Patient, allow_miss: bool):
        """Cheapest sequence placeable right now as (cost, positions), or None."""
        state = self.state
        best = None
        for (l8, shift), days in p.sequences:
            if best is not None and (l8, shift) >= best[0]:
                break
            placed = []
            miss = 0
            for i, day in zip(p.free, days):
                pos = state.best_position(i, day, only_pref=True)
                if pos is None and allow_miss:
                    pos = state.best_position(i, day)
                    miss += 1
                if pos is None:
                    break
                state.place(i, *pos[1:])
                placed.append(i)
            else:
                cost = (l8, shift + miss)
                if best is None or cost < best[0]:
                    best = (cost, [state.pos[i] for i in p.free])
            for i in placed:
                state.remove(i)
            if best is not None and not allow_miss:
                break
        return best

    def run_order(self, order: list[_Patient]):
        """Place patients in the given order; returns (total, unplaced patient) on failure."""
        state = self.state
        state.restore(self.base_snap)
        total = [0, 0]
        for p in order:
            got = self.place_patient(p, allow_miss=False) or self.place_patient(p, allow_miss=True)
            if got is None:
                return None, p
            for i, pos in zip(p.free, got[1]):
                state.place(i, *pos)
            total[0] += got[0][0]
            total[1] += got[0][1]
        return tuple(total), None


def _lower_bound(patients: list[_Patient], fixed_missed: int) -> tuple[int, int]:
    return (sum(p.best[0] for p in patients),
            sum(p.best[1] for p in patients) + fixed_missed)


def reschedule(inst: Instance, old: Schedule, dis: DisruptionSet, cfg: Optional[SolverConfig] = None,
               callback: Optional[Callable] = None) -> ReschedResult:
    """New schedule honoring the frozen prefix, postpone-only and unavailability rules.

    Raises InfeasibleError naming the registrations that fit on no allowed
    day, and InputError for disruptions referring to unknown patients.
    """
    cfg = cfg or SolverConfig()
    start = time.monotonic()
    deadline = start + cfg.time_limit
    dis.check_against(inst)
    old_keys = {a.key for a in old}
    if any(r.key not in old_keys for r in inst.registrations):
        raise InputError("the old schedule does not place every registration")
    effective = apply_replacements(inst, dis)
    if not dis:
        cost = CostVector.of(RESCHEDULE_LEVELS, (0, 0))
        return ReschedResult(old, cost, True, 0, 0, time.monotonic() - start, [(0.0, cost)])

    earliest = earliest_disruption_day(old, dis)
    frozen = frozen_prefix(old, dis)
    disrupted = dis.unavailable_patients | dis.replaced_patients
    kept = set(frozen) | {a for a in old if a.registration.patient_id not in disrupted}
    kept_keys = {a.key for a in kept}
    base = Schedule(tuple(kept))

    old_by = old.by_key()
    old_days = {k: a.day for k, a in old_by.items()}
    replaced = {r.key for r in dis.replacements}
    probe = SearchState(effective)
    patients = []
    for pid, chain in sorted(effective.patients().items()):
        if pid not in disrupted:
            continue
        fixed = [r for r in chain if r.key in kept_keys]
        if [r.order for r in fixed] != list(range(len(fixed))):
            raise InputError(f"frozen appointments of patient {pid} are not a prefix of the regimen")
        free_from = len(fixed)
        first = old_by.get((pid, 0))
        seqs = tail_sequences(
            probe, chain, free_from, [old_days[r.key] for r in fixed], earliest,
            dis.unavailable_days(pid), old_days, replaced, first.day if first else None,
        )
        free = [probe.index[r.key] for r in chain[free_from:]]
        if not free:
            continue
        if not seqs:
            raise InfeasibleError(f"patient {pid} has no admissible day sequence", [r.key for r in chain[free_from:]])
        patients.append(_Patient(pid, free, seqs))

    rng = random.Random(cfg.seed)
    search = _Search(effective, old, dis, base, patients, rng, deadline)
    fixed_missed = search.state.missed
    bound = _lower_bound(patients, fixed_missed)
    history: list = []
    best = None
    # most constrained patients first: fewest sequences, then most orders
    order = sorted(patients, key=lambda p: (len(p.sequences), -len(p.free), p.pid))
    failure = None
    stall = 0
    stall_limit = cfg.max_stall_rounds if cfg.max_stall_rounds is not None else STALL_ROUNDS
    while True:
        total, stuck = search.run_order(order)
        improved = False
        if total is not None:
            values = (total[0], total[1] + fixed_missed)
            if best is None or values < best[0]:
                improved = True
                best = (values, search.state.snapshot())
                cost = CostVector.of(RESCHEDULE_LEVELS, values)
                elapsed = time.monotonic() - start
                history.append((elapsed, cost))
                if callback is not None:
                    callback(elapsed, cost, search.state.to_schedule())
            if values == bound:
                break
        elif failure is None:
            failure = stuck
        if time.monotonic() >= deadline:
            break
        stall = 0 if improved else stall + 1
        if stall > stall_limit:
            break
        # failing or costly patients move to the front, the rest is shuffled
        if stuck is not None:
            order.remove(stuck)
            rng.shuffle(order)
            order.insert(0, stuck)
        else:
            rng.shuffle(order)
    if best is None:
        keys = [search.state.regs[i].key for i in failure.free] if failure else []
        raise InfeasibleError("no admissible postponement within the horizon", keys)

    new = search.state.to_schedule(best[1])
    cost = resched_cost(inst, old, new, dis, effective)
    moved = sum(1 for a in new if old_by.get(a.key) != a)
    return ReschedResult(
        schedule=new,
        cost=cost,
        proven_optimal=best[0] == bound,
        unnecessary_moves=unnecessary_moves(old, new, dis),
        moved=moved,
        elapsed=time.monotonic() - start,
        incumbents=history,
    )
