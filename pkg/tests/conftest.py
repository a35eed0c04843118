from __future__ import annotations

from dataclasses import replace

import pytest
from hypothesis import HealthCheck, settings

from chemosched.model import (
    Assignment,
    Instance,
    PhaseDurations,
    Registration,
    ResourcePool,
    Schedule,
    Seat,
    SeatType,
    TimeGrid,
    Variant,
)

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

BED, CHAIR = SeatType.BED, SeatType.CHAIR


def reg(pid, order=0, wait=0, d4=4, d3=0, d2=0, d1=1, pref=CHAIR, priority=None, drug=None):
    return Registration(pid, order, wait, PhaseDurations(d1, d2, d3, d4), pref, priority, drug)


def bed(i=1):
    return Seat(BED, i)


def chair(i=1):
    return Seat(CHAIR, i)


def daily(regs, beds=(1,), chairs=(1,), ts_count=36, **kw):
    return Instance(tuple(regs), ResourcePool(beds=beds, chairs=chairs), grid=TimeGrid(ts_count), **kw)


def weekly(regs, days=5, beds=(1,), chairs=(1,), ts_count=36):
    return Instance(tuple(regs), ResourcePool(beds=beds, chairs=chairs), days=days,
                    variant=Variant.WEEKLY, grid=TimeGrid(ts_count))


def extended(regs, nurses=(1,), capacity=1, limits=None, beds=(1,), chairs=(1,), ts_count=36):
    regs = [replace(r, priority=r.priority or 3, drug=r.drug or "drug1") for r in regs]
    pool = ResourcePool(beds=beds, chairs=chairs, nurses=nurses, nurse_capacity=capacity,
                        drug_limits=limits or {})
    return Instance(tuple(regs), pool, variant=Variant.EXTENDED, grid=TimeGrid(ts_count))


def place(inst, key, day, ts, seat=None, nurse=None):
    return Assignment(inst.registration(key), day, ts, seat, nurse)


def schedule(*assignments):
    return Schedule(tuple(assignments))


@pytest.fixture(scope="session")
def weekly_case():
    """A seeded weekly instance with a solved schedule, shared by slow tests."""
    from chemosched.generator import generate, weekly_params
    from chemosched.solver import SolverConfig, solve

    inst = generate(weekly_params(), seed=2)
    result = solve(inst, SolverConfig(time_limit=120, max_stall_rounds=50))
    return inst, result


# criterion number -> (passed, detail), filled by test_acceptance.py
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    # a criterion that errors before recording still gets a FAIL line
    if report.failed and item.name.startswith("test_criterion_"):
        n = int(item.name.split("_")[2])
        if n not in ACCEPTANCE or ACCEPTANCE[n][0]:
            ACCEPTANCE[n] = (False, f"error: {call.excinfo.typename}: {str(call.excinfo.value)[:200]}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'} {detail}")
