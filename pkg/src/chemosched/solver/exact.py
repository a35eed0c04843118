"""Exhaustive methods for small instances.

``brute_force`` is the reference oracle: it enumerates every placement of
every registration, keeps the schedules the validators accept and returns a
minimum under dominance.  It shares nothing with the incremental search
state.  ``branch_and_bound`` is the solver's own complete search with
lower-bound pruning and seat/nurse symmetry breaking.
"""

from __future__ import annotations

import time
from typing import Optional

from ..errors import InfeasibleError, SizeLimitError
from ..model import Assignment, Instance, Schedule, occupied_slots
from ..objective import CostVector, cost_vector
from ..validate import validate
from .construct import patient_chains
from .state import NO_NURSE, NO_SEAT, SearchState

MAX_REGISTRATIONS = 8
MAX_TS = 12
MAX_SEATS = 3
MAX_DAYS = 2


def within_exact_bound(inst: Instance) -> bool:
    seats = len(inst.resources.beds) + len(inst.resources.chairs)
    return (len(inst.registrations) <= MAX_REGISTRATIONS and inst.grid.ts_count <= MAX_TS
            and seats <= MAX_SEATS and inst.days <= MAX_DAYS)


def _check_bound(inst: Instance) -> None:
    if not within_exact_bound(inst):
        raise SizeLimitError(
            f"exhaustive search limited to {MAX_REGISTRATIONS} registrations, {MAX_TS} start slots, "
            f"{MAX_SEATS} seats and {MAX_DAYS} days"
        )


def _options(inst: Instance, reg) -> list[Assignment]:
    seats = list(inst.resources.seats) if reg.d4 > 0 else [None]
    nurses = list(inst.resources.nurses) if inst.extended else [None]
    out = []
    for day in range(1, inst.days + 1):
        for ts in range(1, inst.grid.ts_count + 1):
            for seat in seats:
                for nurse in nurses:
                    out.append(Assignment(reg, day, ts, seat, nurse))
    return out


def _compatible(a: Assignment, b: Assignment, grid) -> bool:
    ra, rb = a.registration, b.registration
    if ra.patient_id == rb.patient_id:
        lo, hi = (a, b) if ra.order < rb.order else (b, a)
        if hi.registration.order == lo.registration.order + 1:
            if hi.day - lo.day != hi.registration.waiting_days:
                return False
    if a.seat is not None and a.seat == b.seat and a.day == b.day:
        sa, sb = occupied_slots(a, grid), occupied_slots(b, grid)
        if sa.start <= sb[-1] and sb.start <= sa[-1]:
            return False
    return True


def _unary_ok(inst: Instance, a: Assignment) -> bool:
    reg = a.registration
    if reg.d4 > inst.long_threshold and a.ts < inst.long_min_ts:
        return False
    if 2 * a.ts - reg.d1 - reg.d2 - reg.d3 < 1:
        return False
    if inst.extended and a.ts == inst.grid.ts_count:
        return False
    return True


def brute_force(inst: Instance, count: Optional[list] = None) -> tuple[Schedule, CostVector]:
    """Optimum by full enumeration.  ``count`` (a one-element list) receives the number of candidates tried."""
    _check_bound(inst)
    regs = list(inst.registrations)
    options = [[a for a in _options(inst, r) if _unary_ok(inst, a)] for r in regs]
    grid = inst.grid
    best: list = [None, None, None]
    leaves = 0
    chosen: list[Assignment] = []

    def recurse(k: int) -> None:
        nonlocal leaves
        if k == len(regs):
            leaves += 1
            sch = Schedule(tuple(chosen))
            if validate(inst, sch):
                return
            cost = cost_vector(inst, sch)
            code = tuple(a.sort_key() for a in sch)
            if best[0] is None or (cost.values, code) < (best[0].values, best[2]):
                best[:] = [cost, sch, code]
            return
        for a in options[k]:
            if all(_compatible(a, b, grid) for b in chosen):
                chosen.append(a)
                recurse(k + 1)
                chosen.pop()

    recurse(0)
    if count is not None:
        count[:] = [leaves]
    if best[0] is None:
        raise InfeasibleError("no feasible schedule exists", [r.key for r in regs])
    return best[1], best[0]


class _Timeout(Exception):
    pass


def branch_and_bound(inst: Instance, bound: Optional[tuple] = None, deadline: Optional[float] = None):
    """Complete depth-first search.

    Returns ``(snapshot, values, exhausted)``: the best schedule strictly better
    than ``bound`` (None if none), its cost values, and whether the whole tree
    was explored before the deadline.
    """
    state = SearchState(inst)
    chains = patient_chains(state)
    units = sorted(chains, key=lambda p: (-max(state.regs[i].d4 for i, _ in chains[p]), p))
    links = [(i, off, n == 0) for pid in units for n, (i, off) in enumerate(chains[pid])]
    rest = [[0, 0, 0] for _ in range(len(links) + 1)]
    for k in range(len(links) - 1, -1, -1):
        rest[k] = list(rest[k + 1])
        i = links[k][0]
        if state.prio_idx[i] >= 0 and state.allowed[i]:
            rest[k][state.prio_idx[i]] += state.allowed[i][0]
    nurse_used = [[0] * len(state.nurses) for _ in range(state.D + 1)]
    best = {"values": bound, "snap": None}
    nodes = [0]
    extended = state.extended

    def lower_bound(k: int) -> tuple:
        v = state.values()
        lb = (v[0], v[1], 0, v[3])
        if extended:
            r = rest[k]
            lb += (v[4] + r[0], v[5] + r[1], v[6] + r[2])
        return lb

    def recurse(k: int, d0: int) -> None:
        nodes[0] += 1
        if deadline is not None and nodes[0] % 512 == 0 and time.monotonic() > deadline:
            raise _Timeout
        if k == len(links):
            v = state.values()
            if best["values"] is None or v < best["values"]:
                best["values"] = v
                best["snap"] = state.snapshot()
            return
        i, off, first = links[k]
        starts = range(1, state.D - links_span(k) + 1) if first else (d0,)
        for start in starts:
            day = start + off
            if not state.drug_ok(i, day):
                continue
            for ts in state.allowed[i]:
                for seat in _seat_choices(i, day):
                    for nurse in _nurse_choices(day):
                        if not state.fits(i, day, ts, seat, nurse):
                            continue
                        state.place(i, day, ts, seat, nurse)
                        if nurse != NO_NURSE:
                            nurse_used[day][nurse] += 1
                        if best["values"] is None or lower_bound(k + 1) < best["values"]:
                            recurse(k + 1, start)
                        if nurse != NO_NURSE:
                            nurse_used[day][nurse] -= 1
                        state.remove(i)

    span_of = {}
    for pid in units:
        for i, _ in chains[pid]:
            span_of[i] = chains[pid][-1][1]

    def links_span(k: int) -> int:
        return span_of[links[k][0]]

    def _seat_choices(i: int, day: int):
        if not state.needs_seat[i]:
            return (NO_SEAT,)
        out = []
        for kind in (0, 1):
            empty_taken = False
            for s in state.kind_seats[kind]:
                if state.occ[day][s] == 0:
                    if empty_taken:
                        continue
                    empty_taken = True
                out.append(s)
        return out

    def _nurse_choices(day: int):
        if not state.nurses:
            return (NO_NURSE,)
        out = []
        empty_taken = False
        for n in range(len(state.nurses)):
            if nurse_used[day][n] == 0:
                if empty_taken:
                    continue
                empty_taken = True
            out.append(n)
        return out

    try:
        recurse(0, 1)
        exhausted = True
    except _Timeout:
        exhausted = False
    snap = best["snap"]
    return (state.to_schedule(snap) if snap is not None else None), best["values"], exhausted
