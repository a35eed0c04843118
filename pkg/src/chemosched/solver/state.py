"""Mutable search state with incremental feasibility and cost bookkeeping.

Seat and nurse occupancy are kept as per-day integer bitmasks over ATS
slots, so a conflict test is a single ``&``.  The phase-2 histogram of
each day is tracked together with a count-of-counts table, which gives the
largest and smallest non-zero bin without rescanning all slots.

Internally registrations, seats and nurses are addressed by list index;
days keep their 1-based numbering.
"""

from __future__ import annotations

from typing import Optional

from ..model import Assignment, Instance, Schedule, SeatType

NO_SEAT = -1
NO_NURSE = -1
KINDS = (SeatType.BED, SeatType.CHAIR)


class SearchState:
    def __init__(self, inst: Instance):
        self.inst = inst
        grid = inst.grid
        self.T = grid.ts_count
        self.A = grid.ats_count
        self.D = inst.days
        self.extended = inst.extended
        self.regs = list(inst.registrations)
        self.index = {r.key: i for i, r in enumerate(self.regs)}
        n = len(self.regs)

        self.seats = list(inst.resources.seats)
        self.seat_index = {s: j for j, s in enumerate(self.seats)}
        self.seat_kind = [KINDS.index(s.kind) for s in self.seats]
        self.kind_seats = [[j for j, k in enumerate(self.seat_kind) if k == kind] for kind in (0, 1)]
        self.nurses = list(inst.resources.nurses or ())
        self.capacity = inst.resources.nurse_capacity or 0
        self.drug_limits = dict(inst.resources.drug_limits)

        self.allowed: list[list[int]] = []
        self.masks: list[list[int]] = []
        self.p2off: list[int] = []
        self.pref: list[int] = []
        self.prio_idx: list[int] = []
        self.needs_seat: list[bool] = []
        full_day = (1 << (self.A + 1)) - 1
        for reg in self.regs:
            allowed = []
            for ts in range(1, self.T + 1):
                if inst.is_long(reg) and ts < inst.long_min_ts:
                    continue
                if 2 * ts - reg.d1 - reg.d2 - reg.d3 < 1:
                    continue
                if self.extended and ts == self.T:
                    continue
                allowed.append(ts)
            self.allowed.append(allowed)
            masks = [0] * (self.T + 1)
            if reg.d4 > 0:
                for ts in range(1, self.T + 1):
                    start = 2 * ts
                    length = min(reg.d4, self.A - start + 1)
                    masks[ts] = (((1 << length) - 1) << start) & full_day
            self.masks.append(masks)
            self.p2off.append(reg.d2 + reg.d3 if reg.d2 > 0 else -1)
            self.pref.append(KINDS.index(reg.seat_pref))
            self.prio_idx.append(reg.priority - 1 if (reg.priority is not None and reg.order == 0) else -1)
            self.needs_seat.append(reg.d4 > 0)

        D1 = self.D + 1
        self.occ = [[0] * len(self.seats) for _ in range(D1)]
        self.seat_regs = [[set() for _ in self.seats] for _ in range(D1)]
        self.load = [[[0] * (self.A + 2) for _ in self.nurses] for _ in range(D1)]
        self.full = [[0] * len(self.nurses) for _ in range(D1)]
        self.hist = [[0] * (self.A + 2) for _ in range(D1)]
        self.freq = [[0] * (n + 2) for _ in range(D1)]
        self.maxc = [0] * D1
        self.p2count = [0] * D1
        self.day_count = [0] * D1
        self.missed = 0
        self.prio = [0, 0, 0]
        self.drug_count: dict = {}
        self.pos: list[Optional[tuple[int, int, int, int]]] = [None] * n

    # bookkeeping -------------------------------------------------------

    def _bump(self, day: int, slot: int, up: bool) -> None:
        h = self.hist[day]
        f = self.freq[day]
        c = h[slot]
        if up:
            if c:
                f[c] -= 1
            c += 1
            f[c] += 1
            h[slot] = c
            if c > self.maxc[day]:
                self.maxc[day] = c
        else:
            f[c] -= 1
            c -= 1
            h[slot] = c
            if c:
                f[c] += 1
            m = self.maxc[day]
            if f[m] == 0:
                self.maxc[day] = m - 1

    def place(self, i: int, day: int, ts: int, seat: int, nurse: int) -> None:
        mask = self.masks[i][ts]
        if seat != NO_SEAT:
            self.occ[day][seat] |= mask
            self.seat_regs[day][seat].add(i)
            if self.seat_kind[seat] != self.pref[i]:
                self.missed += 1
        if nurse != NO_NURSE and mask:
            load = self.load[day][nurse]
            k = self.capacity
            full = self.full[day][nurse]
            start = 2 * ts
            for slot in range(start, min(start + self.regs[i].d4, self.A + 1)):
                load[slot] += 1
                if load[slot] == k:
                    full |= 1 << slot
            self.full[day][nurse] = full
        off = self.p2off[i]
        if off >= 0:
            self._bump(day, 2 * ts - off, True)
            self.p2count[day] += 1
        p = self.prio_idx[i]
        if p >= 0:
            self.prio[p] += ts
        drug = self.regs[i].drug
        if drug is not None:
            self.drug_count[(drug, day)] = self.drug_count.get((drug, day), 0) + 1
        self.day_count[day] += 1
        self.pos[i] = (day, ts, seat, nurse)

    def remove(self, i: int) -> tuple[int, int, int, int]:
        day, ts, seat, nurse = old = self.pos[i]
        mask = self.masks[i][ts]
        if seat != NO_SEAT:
            self.occ[day][seat] &= ~mask
            self.seat_regs[day][seat].discard(i)
            if self.seat_kind[seat] != self.pref[i]:
                self.missed -= 1
        if nurse != NO_NURSE and mask:
            load = self.load[day][nurse]
            k = self.capacity
            full = self.full[day][nurse]
            start = 2 * ts
            for slot in range(start, min(start + self.regs[i].d4, self.A + 1)):
                if load[slot] == k:
                    full &= ~(1 << slot)
                load[slot] -= 1
            self.full[day][nurse] = full
        off = self.p2off[i]
        if off >= 0:
            self._bump(day, 2 * ts - off, False)
            self.p2count[day] -= 1
        p = self.prio_idx[i]
        if p >= 0:
            self.prio[p] -= ts
        drug = self.regs[i].drug
        if drug is not None:
            self.drug_count[(drug, day)] -= 1
        self.day_count[day] -= 1
        self.pos[i] = None
        return old

    # cost --------------------------------------------------------------

    def key(self) -> tuple:
        """Search key: the cost vector with tie-breaking counters slotted in after their level.

        Layout ``(missed, sum_max, n_at_max, sum_spread, n_at_min, max_load, n_days_at_load, *priorities)``.
        """
        sum_max = at_max = spread = at_min = 0
        maxc = self.maxc
        freq = self.freq
        for d in range(1, self.D + 1):
            m = maxc[d]
            if m:
                f = freq[d]
                sum_max += m
                at_max += f[m]
                mn = 1
                while not f[mn]:
                    mn += 1
                spread += m - mn
                if mn < m:
                    at_min += f[mn]
        counts = self.p2count[1:]
        top = max(counts) if counts else 0
        base = (self.missed, sum_max, at_max, spread, at_min, top, counts.count(top))
        if self.extended:
            return base + tuple(self.prio)
        return base

    @staticmethod
    def values_of(key: tuple) -> tuple:
        """Cost-vector values (levels 7, 6, 5, 4[, 3, 2, 1]) contained in a search key."""
        return (key[0], key[1], key[3], key[5]) + key[7:]

    def values(self) -> tuple:
        return self.values_of(self.key())

    def probe(self, i: int, day: int, ts: int, miss: bool) -> tuple:
        """Key after hypothetically placing ``i`` (currently unplaced) at (day, ts)."""
        off = self.p2off[i]
        if off >= 0:
            slot = 2 * ts - off
            self._bump(day, slot, True)
            self.p2count[day] += 1
        p = self.prio_idx[i]
        if p >= 0:
            self.prio[p] += ts
        if miss:
            self.missed += 1
        k = self.key()
        if miss:
            self.missed -= 1
        if p >= 0:
            self.prio[p] -= ts
        if off >= 0:
            self.p2count[day] -= 1
            self._bump(day, slot, False)
        return k

    # feasibility -------------------------------------------------------

    def drug_ok(self, i: int, day: int) -> bool:
        drug = self.regs[i].drug
        if drug is None:
            return True
        limit = self.drug_limits.get((drug, day))
        return limit is None or self.drug_count.get((drug, day), 0) < limit

    def free_nurse(self, i: int, day: int, ts: int) -> Optional[int]:
        if not self.nurses:
            return NO_NURSE
        mask = self.masks[i][ts]
        full = self.full[day]
        for n in range(len(self.nurses)):
            if not full[n] & mask:
                return n
        return None

    def free_seat(self, i: int, day: int, ts: int, kind: int) -> Optional[int]:
        mask = self.masks[i][ts]
        occ = self.occ[day]
        for s in self.kind_seats[kind]:
            if not occ[s] & mask:
                return s
        return None

    def fits(self, i: int, day: int, ts: int, seat: int, nurse: int) -> bool:
        mask = self.masks[i][ts]
        if seat != NO_SEAT and self.occ[day][seat] & mask:
            return False
        if nurse != NO_NURSE and self.full[day][nurse] & mask:
            return False
        return self.drug_ok(i, day)

    def best_position(self, i: int, day: int, rng=None, only_pref: bool = False):
        """Cheapest feasible (key, day, ts, seat, nurse) for unplaced ``i`` on ``day``.

        Ties go to the smallest ts, then seat, then nurse, unless ``rng`` shuffles ts ties.
        """
        if not self.drug_ok(i, day):
            return None
        allowed = self.allowed[i]
        if not self.needs_seat[i]:
            cands = [(self.probe(i, day, ts, False), ts) for ts in allowed]
            if rng is not None:
                rng.shuffle(cands)
            cands.sort(key=lambda c: c[0])
            for k, ts in cands:
                nurse = self.free_nurse(i, day, ts)
                if nurse is not None:
                    return (k, day, ts, NO_SEAT, nurse)
            return None
        pref = self.pref[i]
        kinds = (pref,) if only_pref else (pref, 1 - pref)
        for kind in kinds:
            seats = self.kind_seats[kind]
            if not seats:
                continue
            miss = kind != pref
            cands = [(self.probe(i, day, ts, miss), ts) for ts in allowed]
            if rng is not None:
                rng.shuffle(cands)
            cands.sort(key=lambda c: c[0])
            for k, ts in cands:
                seat = self.free_seat(i, day, ts, kind)
                if seat is None:
                    continue
                nurse = self.free_nurse(i, day, ts)
                if nurse is None:
                    continue
                return (k, day, ts, seat, nurse)
        return None

    def blockers(self, i: int, day: int, ts: int, seat: int) -> list[int]:
        mask = self.masks[i][ts]
        return [j for j in self.seat_regs[day][seat] if self.masks[j][self.pos[j][1]] & mask]

    # conversion --------------------------------------------------------

    def snapshot(self) -> list:
        return list(self.pos)

    def restore(self, snap: list) -> None:
        for i, p in enumerate(self.pos):
            if p is not None and p != snap[i]:
                self.remove(i)
        for i, p in enumerate(snap):
            if p is not None and self.pos[i] is None:
                self.place(i, *p)

    def load_schedule(self, sch: Schedule) -> None:
        for a in sch:
            i = self.index[a.key]
            seat = NO_SEAT if a.seat is None else self.seat_index[a.seat]
            nurse = NO_NURSE if a.nurse is None else self.nurses.index(a.nurse)
            self.place(i, a.day, a.ts, seat, nurse)

    def assignment(self, i: int, pos=None) -> Assignment:
        day, ts, seat, nurse = pos or self.pos[i]
        return Assignment(
            registration=self.regs[i],
            day=day,
            ts=ts,
            seat=None if seat == NO_SEAT else self.seats[seat],
            nurse=None if nurse == NO_NURSE else self.nurses[nurse],
        )

    def to_schedule(self, snap: Optional[list] = None) -> Schedule:
        snap = self.pos if snap is None else snap
        return Schedule(tuple(self.assignment(i, p) for i, p in enumerate(snap) if p is not None))
