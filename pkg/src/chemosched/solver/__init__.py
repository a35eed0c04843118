"""Schedule optimization: greedy construction, local search and exact search.

``solve`` is anytime: it keeps a single incumbent that only ever changes to
a strictly dominating schedule, and reports each change through the
progress callback ``callback(elapsed_seconds, cost_vector, schedule)``.
"""

from __future__ import annotations

import enum
import random
import threading
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

from ..errors import ConfigError, InfeasibleError
from ..model import Instance, Schedule
from ..objective import CORE_LEVELS, EXTENDED_LEVELS, CostVector
from .construct import check_horizon, check_nurse_coverage, construct, greedy_construct
from .exact import brute_force, branch_and_bound, within_exact_bound, _check_bound
from .local import Improver
from .state import SearchState

__all__ = [
    "Mode", "SolverConfig", "SolveResult", "Incumbent", "solve", "greedy_construct",
    "local_search", "brute_force", "branch_and_bound", "within_exact_bound", "lower_bound",
]


class Mode(str, enum.Enum):
    EXACT = "exact"
    ANYTIME = "anytime"


@dataclass
class SolverConfig:
    time_limit: float = 60.0
    seed: int = 0
    workers: int = 1
    mode: Mode = Mode.ANYTIME
    emit_improvements: bool = False
    # perturbation rounds without incumbent progress before giving up; None runs to the time limit
    max_stall_rounds: Optional[int] = None
    construction_restarts: int = 20

    def __post_init__(self):
        self.mode = Mode(self.mode)
        if self.workers < 1:
            raise ConfigError("workers must be positive")
        if self.time_limit <= 0:
            raise ConfigError("time limit must be positive")


@dataclass
class SolveResult:
    schedule: Optional[Schedule]
    cost: Optional[CostVector]
    proven_optimal: bool
    status: str  # "optimal", "feasible" or "no_solution"
    elapsed: float = 0.0
    incumbents: list = field(default_factory=list)  # (elapsed, CostVector)
    greedy_cost: Optional[CostVector] = None

    def __iter__(self):
        # allows ``schedule, cost, proven = solve(...)``
        return iter((self.schedule, self.cost, self.proven_optimal))


def _levels(inst: Instance):
    return EXTENDED_LEVELS if inst.extended else CORE_LEVELS


class Incumbent:
    """Shared best solution; updates are published only when they strictly dominate."""

    def __init__(self, inst: Instance, start: float, callback: Optional[Callable] = None):
        self.inst = inst
        self.start = start
        self.callback = callback
        self.lock = threading.Lock()
        self.values: Optional[tuple] = None
        self.schedule: Optional[Schedule] = None
        self.history: list = []

    def offer(self, values: tuple, schedule_fn: Callable[[], Schedule]) -> bool:
        with self.lock:
            if self.values is not None and not values < self.values:
                return False
            self.values = values
            self.schedule = schedule_fn()
            cost = CostVector.of(_levels(self.inst), values)
            elapsed = time.monotonic() - self.start
            self.history.append((elapsed, cost))
            if self.callback is not None:
                self.callback(elapsed, cost, self.schedule)
            return True

    @property
    def cost(self) -> Optional[CostVector]:
        return None if self.values is None else CostVector.of(_levels(self.inst), self.values)


def lower_bound(inst: Instance) -> tuple:
    """Cost values no schedule can beat (used to stop early, not to prune)."""
    phase2 = sum(1 for r in inst.registrations if r.d2 > 0)
    top = phase2 if inst.days == 1 else -(-phase2 // inst.days)
    lb = (0, 1 if phase2 else 0, 0, top)
    if inst.extended:
        state = SearchState(inst)
        sums = [0, 0, 0]
        for i, p in enumerate(state.prio_idx):
            if p >= 0 and state.allowed[i]:
                sums[p] += state.allowed[i][0]
        lb += tuple(sums)
    return lb


def _worker(inst: Instance, cfg: SolverConfig, worker: int, deadline: float,
            incumbent: Incumbent, greedy_costs: list, small: bool) -> None:
    seed = cfg.seed * 1_000_003 + worker
    rng = random.Random(seed)
    state = SearchState(inst)
    construct(state, seed if worker else cfg.seed, cfg.construction_restarts, deadline)
    values = state.values()
    greedy_costs.append(values)
    incumbent.offer(values, state.to_schedule)

    def publish(v, snap):
        incumbent.offer(v, lambda: state.to_schedule(snap))

    improver = Improver(state, rng, deadline, publish)
    rounds = cfg.max_stall_rounds
    if small:
        rounds = 20 if rounds is None else min(rounds, 20)
    improver.run(rounds, lower_bound(inst))


def solve(inst: Instance, cfg: Optional[SolverConfig] = None,
          callback: Optional[Callable] = None) -> SolveResult:
    """Best schedule found within ``cfg.time_limit``.

    Raises InfeasibleError when the instance admits no schedule (proved in
    exact mode, best effort otherwise).
    """
    cfg = cfg or SolverConfig()
    start = time.monotonic()
    deadline = start + cfg.time_limit
    check_horizon(inst)
    check_nurse_coverage(inst)
    incumbent = Incumbent(inst, start, callback if cfg.emit_improvements or callback else None)
    levels = _levels(inst)
    greedy_costs: list = []

    if cfg.mode is Mode.EXACT:
        _check_bound(inst)
        try:
            state = SearchState(inst)
            construct(state, cfg.seed, cfg.construction_restarts)
            greedy_costs.append(state.values())
            incumbent.offer(state.values(), state.to_schedule)
        except InfeasibleError:
            pass
        sch, values, exhausted = branch_and_bound(inst, incumbent.values)
        if sch is not None:
            incumbent.offer(values, lambda: sch)
        if incumbent.values is None:
            raise InfeasibleError("no feasible schedule exists", [r.key for r in inst.registrations])
        return _result(incumbent, levels, True, start, greedy_costs)

    small = within_exact_bound(inst)
    errors: list = []
    if cfg.workers == 1:
        try:
            _worker(inst, cfg, 0, deadline, incumbent, greedy_costs, small)
        except InfeasibleError as exc:
            # a dead end is no proof; small instances get the complete search below
            if not small:
                raise
            errors.append(exc)
    else:
        def run(w):
            try:
                _worker(inst, cfg, w, deadline, incumbent, greedy_costs, small)
            except InfeasibleError as exc:
                errors.append(exc)

        threads = [threading.Thread(target=run, args=(w,), daemon=True) for w in range(cfg.workers)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        if incumbent.values is None and errors and not small:
            raise errors[0]

    proven = incumbent.values is not None and incumbent.values == lower_bound(inst)
    if small and not proven and time.monotonic() < deadline:
        sch, values, exhausted = branch_and_bound(inst, incumbent.values, deadline)
        if sch is not None:
            incumbent.offer(values, lambda: sch)
        if exhausted:
            if incumbent.values is None:
                raise InfeasibleError("no feasible schedule exists", [r.key for r in inst.registrations])
            proven = True
    if incumbent.values is None:
        return SolveResult(None, None, False, "no_solution", time.monotonic() - start)
    return _result(incumbent, levels, proven, start, greedy_costs)


def _result(incumbent: Incumbent, levels, proven: bool, start: float, greedy_costs: list) -> SolveResult:
    greedy = CostVector.of(levels, greedy_costs[0]) if greedy_costs else None
    return SolveResult(
        schedule=incumbent.schedule,
        cost=incumbent.cost,
        proven_optimal=proven,
        status="optimal" if proven else "feasible",
        elapsed=time.monotonic() - start,
        incumbents=list(incumbent.history),
        greedy_cost=greedy,
    )


def local_search(inst: Instance, start: Schedule, cfg: Optional[SolverConfig] = None) -> Schedule:
    """Improve a feasible schedule; returns ``start`` itself when nothing better is found."""
    cfg = cfg or SolverConfig()
    state = SearchState(inst)
    state.load_schedule(start)
    rng = random.Random(cfg.seed)
    improver = Improver(state, rng, time.monotonic() + cfg.time_limit)
    initial = improver.inc_values
    improver.run(cfg.max_stall_rounds, lower_bound(inst))
    if not improver.inc_values < initial:
        return start
    return state.to_schedule(improver.inc_snap)
