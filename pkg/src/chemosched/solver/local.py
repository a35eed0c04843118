"""Descent over reinsertion, chain-shift and ejection moves, plus ruin-and-recreate restarts."""

from __future__ import annotations

import time
from typing import Callable, Optional

from .construct import patient_chains, place_chain
from .state import NO_SEAT, SearchState

MAX_EJECT_TARGETS = 6
MAX_BLOCKERS = 2


class Improver:
    """Strict-descent local search on a :class:`SearchState`.

    Moves are accepted only when they strictly lower the search key.  The best
    cost vector seen (the incumbent) is reported through ``on_improve`` each
    time it strictly improves.
    """

    def __init__(self, state: SearchState, rng, deadline: Optional[float] = None,
                 on_improve: Optional[Callable] = None, movable=None):
        self.state = state
        self.rng = rng
        self.deadline = deadline
        self.on_improve = on_improve
        n = len(state.regs)
        self.movable = [True] * n if movable is None else list(movable)
        self.chains = patient_chains(state)
        self.single = {}
        for pid, links in self.chains.items():
            for i, _ in links:
                self.single[i] = len(links) == 1
        self.multi = [pid for pid, links in self.chains.items()
                      if len(links) > 1 and all(self.movable[i] for i, _ in links)]
        self.cur_key = state.key()
        self.best_key = self.cur_key
        self.best_snap = state.snapshot()
        self.inc_values = state.values_of(self.cur_key)
        self.inc_snap = self.best_snap

    def expired(self) -> bool:
        return self.deadline is not None and time.monotonic() >= self.deadline

    def _accept(self) -> None:
        state = self.state
        k = state.key()
        self.cur_key = k
        if k < self.best_key:
            self.best_key = k
            self.best_snap = state.snapshot()
        v = state.values_of(k)
        if v < self.inc_values:
            self.inc_values = v
            self.inc_snap = self.best_snap if k == self.best_key else state.snapshot()
            if self.on_improve is not None:
                self.on_improve(v, self.inc_snap)

    # moves -------------------------------------------------------------

    def _days_for(self, i: int, day: int):
        if self.state.D > 1 and self.single[i]:
            return range(1, self.state.D + 1)
        return (day,)

    def reinsert(self, i: int) -> bool:
        state = self.state
        k0 = self.cur_key
        old = state.remove(i)
        best = None
        for d in self._days_for(i, old[0]):
            cand = state.best_position(i, d, self.rng)
            if cand is not None and (best is None or cand[0] < best[0]):
                best = cand
        if best is not None and best[0] < k0:
            state.place(i, *best[1:])
            self._accept()
            return True
        state.place(i, *old)
        return False

    def chain_move(self, pid: int) -> bool:
        state = self.state
        links = self.chains[pid]
        k0 = self.cur_key
        olds = [(i, state.remove(i)) for i, _ in links]
        if place_chain(state, links, self.rng) and state.key() < k0:
            self._accept()
            return True
        for i, _ in links:
            if state.pos[i] is not None:
                state.remove(i)
        for i, p in olds:
            state.place(i, *p)
        return False

    def eject(self, i: int) -> bool:
        """Take a seat held by up to two others and reinsert them elsewhere on the day."""
        state = self.state
        if not state.needs_seat[i]:
            return False
        k0 = self.cur_key
        old = state.remove(i)
        day = old[0]
        pref = state.pref[i]
        cands = []
        for kind in (pref, 1 - pref):
            for ts in state.allowed[i]:
                k = state.probe(i, day, ts, kind != pref)
                if k < k0:
                    cands.append((k, self.rng.random(), ts, kind))
        cands.sort()
        for k, _, ts, kind in cands[:MAX_EJECT_TARGETS]:
            seats = list(state.kind_seats[kind])
            self.rng.shuffle(seats)
            for seat in seats:
                blockers = state.blockers(i, day, ts, seat)
                if not blockers or len(blockers) > MAX_BLOCKERS:
                    continue
                if not all(self.movable[b] for b in blockers):
                    continue
                removed = [(b, state.remove(b)) for b in blockers]
                nurse = state.free_nurse(i, day, ts)
                if nurse is not None and state.fits(i, day, ts, seat, nurse):
                    state.place(i, day, ts, seat, nurse)
                    placed = []
                    for b, bpos in sorted(removed, key=lambda r: -state.regs[r[0]].d4):
                        p = state.best_position(b, bpos[0], self.rng)
                        if p is None:
                            break
                        state.place(b, *p[1:])
                        placed.append(b)
                    else:
                        if state.key() < k0:
                            self._accept()
                            return True
                    for b in placed:
                        state.remove(b)
                    state.remove(i)
                for b, bpos in removed:
                    state.place(b, *bpos)
        state.place(i, *old)
        return False

    def problem_regs(self) -> list[int]:
        """Registrations whose relocation could lower a cost level."""
        state = self.state
        out = []
        for i, p in enumerate(state.pos):
            if p is None or not self.movable[i]:
                continue
            day, ts, seat, _ = p
            if seat != NO_SEAT and state.seat_kind[seat] != state.pref[i]:
                out.append(i)
                continue
            off = state.p2off[i]
            if off >= 0:
                c = state.hist[day][2 * ts - off]
                if c > 1 and c == state.maxc[day]:
                    out.append(i)
                    continue
            if state.prio_idx[i] >= 0 and ts > state.allowed[i][0]:
                out.append(i)
        return out

    # drivers -----------------------------------------------------------

    def descend(self) -> None:
        rng = self.rng
        while not self.expired():
            improved = False
            order = [i for i in range(len(self.state.regs)) if self.movable[i] and self.state.pos[i] is not None]
            rng.shuffle(order)
            for i in order:
                if self.reinsert(i):
                    improved = True
                if self.expired():
                    return
            if self.multi:
                pids = list(self.multi)
                rng.shuffle(pids)
                for pid in pids:
                    if self.chain_move(pid):
                        improved = True
                    if self.expired():
                        return
            if not improved:
                probs = self.problem_regs()
                rng.shuffle(probs)
                for i in probs:
                    if self.eject(i):
                        improved = True
                    if self.expired():
                        return
            if not improved:
                return

    def perturb(self, size: int) -> bool:
        """Ruin a slot window of one day and recreate it in random order."""
        state = self.state
        rng = self.rng
        if self.cur_key != self.best_key:
            state.restore(self.best_snap)
            self.cur_key = self.best_key
        movable = [i for i, p in enumerate(state.pos) if p is not None and self.movable[i]]
        if not movable:
            return False
        pivot = rng.choice(movable)
        day, ts0 = state.pos[pivot][:2]
        near = sorted(
            (i for i in movable if state.pos[i][0] == day),
            key=lambda i: (abs(state.pos[i][1] - ts0), rng.random()),
        )
        victims = near[:size]
        olds = [(i, state.remove(i)) for i in victims]
        rng.shuffle(victims)
        for i in victims:
            best = None
            for d in self._days_for(i, day):
                cand = state.best_position(i, d, rng)
                if cand is not None and (best is None or cand[0] < best[0]):
                    best = cand
            if best is None:
                for j in victims:
                    if state.pos[j] is not None:
                        state.remove(j)
                for j, p in olds:
                    state.place(j, *p)
                return False
            state.place(i, *best[1:])
        k = state.key()
        self.cur_key = k
        if k <= self.best_key:
            self.best_key = k
            self.best_snap = state.snapshot()
            self._accept()
        return True

    def run(self, max_rounds: Optional[int] = None, lower_bound: Optional[tuple] = None) -> None:
        """Descend, then alternate perturbation and descent until time, stall or bound."""
        self.descend()
        stall = 0
        n = sum(self.movable)
        while not self.expired():
            if lower_bound is not None and self.inc_values == lower_bound:
                return
            if max_rounds is not None and stall >= max_rounds:
                return
            before = self.inc_values
            size = max(2, min(12, n // 8 + 1, n))
            size = self.rng.randint(2, size) if size > 2 else size
            self.perturb(size)
            self.descend()
            stall = 0 if self.inc_values < before else stall + 1
        if self.cur_key != self.best_key:
            self.state.restore(self.best_snap)
            self.cur_key = self.best_key
