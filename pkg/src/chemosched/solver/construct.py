"""Greedy insertion of whole patient chains."""

from __future__ import annotations

import random
import time
from typing import Optional

from ..errors import InfeasibleError
from ..model import Instance, Schedule, chain_span
from .state import SearchState


def patient_chains(state: SearchState) -> dict[int, list[tuple[int, int]]]:
    """patient id -> [(registration index, day offset from the first order)]."""
    chains: dict[int, list[tuple[int, int]]] = {}
    for i, reg in enumerate(state.regs):
        links = chains.setdefault(reg.patient_id, [])
        offset = links[-1][1] + reg.waiting_days if links else 0
        links.append((i, offset))
    return chains


def check_horizon(inst: Instance) -> None:
    for pid, chain in inst.patients().items():
        if chain_span(chain) > inst.days - 1:
            raise InfeasibleError(
                f"regimen of patient {pid} spans {chain_span(chain)} days, horizon has {inst.days}",
                [r.key for r in chain],
            )


def check_nurse_coverage(inst: Instance) -> None:
    """Reject extended instances whose total phase-4 coverage cannot fit nurse capacity.

    A registration covers ``min(d4, slots left in the day)`` slots. Only those
    still running at the final slot are cut short, and at most N*K of them can
    be active there per day, so the best case cuts the longest ones.
    """
    pool = inst.resources
    if not inst.extended or not inst.registrations or inst.grid.ts_count < 2:
        return
    grid = inst.grid
    A = grid.ats_count
    tail = A - grid.ats_of(grid.ts_count - 1) + 1
    per_day = len(pool.nurses) * pool.nurse_capacity
    d4 = sorted((r.d4 for r in inst.registrations), reverse=True)
    cut = sum(max(0, v - tail) for v in d4[: per_day * inst.days])
    need = sum(d4) - cut
    capacity = per_day * A * inst.days
    if need > capacity:
        raise InfeasibleError(
            f"nurse coverage needs at least {need} patient-slots, capacity is {capacity}"
            f" ({len(pool.nurses)} nurses x K={pool.nurse_capacity} x {A} slots x {inst.days} day(s))",
            [r.key for r in inst.registrations],
        )


def unit_order(state: SearchState, chains: dict) -> list[int]:
    def rank(pid):
        regs = [state.regs[i] for i, _ in chains[pid]]
        return (regs[0].priority or 0, -max(r.d4 for r in regs), pid)

    return sorted(chains, key=rank)


def place_chain(state: SearchState, links, rng=None, days=None, balance: bool = False) -> bool:
    """Insert one chain at its cheapest start day; False when no start day works.

    With ``balance`` the start day is chosen by missed preferences, then by
    how busy the chain's days already are, then by the full key.  Plain key
    order fills one day before opening the next (a fresh day raises the
    per-day maximum), which starves long chains late in construction.
    """
    span = links[-1][1]
    starts = days if days is not None else range(1, state.D - span + 1)
    best = None
    for d0 in starts:
        if balance:
            load = sum(state.day_count[d0 + off] for _, off in links)
        placed = []
        for i, off in links:
            pos = state.best_position(i, d0 + off, rng)
            if pos is None:
                break
            state.place(i, *pos[1:])
            placed.append(i)
        else:
            k = state.key()
            if balance:
                k = (k[0], load) + k
            if best is None or k < best[0]:
                best = (k, [state.pos[i] for i, _ in links])
        for i in placed:
            state.remove(i)
    if best is None:
        return False
    for (i, _), p in zip(links, best[1]):
        state.place(i, *p)
    return True


def blocking_witness(state: SearchState, links) -> set:
    """Registrations competing with a chain that could not be inserted (best effort)."""
    witness = {state.regs[i].key for i, _ in links}
    span = links[-1][1]
    for d0 in range(1, state.D - span + 1):
        for i, off in links:
            day = d0 + off
            reach = 0
            for ts in state.allowed[i]:
                reach |= state.masks[i][ts]
            for j, p in enumerate(state.pos):
                if p is None or p[0] != day:
                    continue
                if state.masks[j][p[1]] & reach:
                    witness.add(state.regs[j].key)
                if state.regs[i].drug is not None and state.regs[j].drug == state.regs[i].drug:
                    witness.add(state.regs[j].key)
    return witness


def construct(state: SearchState, seed: int = 0, restarts: int = 20,
              deadline: Optional[float] = None) -> None:
    """Fill an empty state; raises InfeasibleError when every attempt dead-ends."""
    chains = patient_chains(state)
    order = unit_order(state, chains)
    rng = random.Random(seed)
    witness = None
    for attempt in range(restarts + 1):
        if attempt:
            for i in range(len(state.pos)):
                if state.pos[i] is not None:
                    state.remove(i)
            rng.shuffle(order)
        for pid in order:
            if not place_chain(state, chains[pid], balance=state.D > 1):
                if witness is None:
                    witness = blocking_witness(state, chains[pid])
                break
        else:
            return
        if deadline is not None and time.monotonic() > deadline:
            break
    raise InfeasibleError("greedy construction dead-ended", witness or ())


def greedy_construct(inst: Instance, seed: int = 0, restarts: int = 20) -> Schedule:
    """Deterministic greedy schedule; randomized re-orderings only after a dead end."""
    check_horizon(inst)
    state = SearchState(inst)
    construct(state, seed, restarts)
    return state.to_schedule()
