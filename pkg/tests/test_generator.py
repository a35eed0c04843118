from __future__ import annotations

import hashlib

import numpy as np
import pytest

from chemosched import io
from chemosched.errors import ConfigError, ScenarioError
from chemosched.generator import (
    PRESETS,
    daily_params,
    extended_params,
    generate,
    generate_disruptions,
    tiny_params,
    weekly_params,
)
from chemosched.model import Variant
from chemosched.validate import validate


def digest(inst):
    return hashlib.sha256(io.emit_instance(inst).encode()).hexdigest()


def test_no_phase2_when_rate_zero():
    inst = generate(daily_params(phase2_rate=0.0), seed=1)
    assert all(r.d2 == 0 and r.d3 == 0 for r in inst.registrations)


def test_phase2_implies_phase3():
    inst = generate(daily_params(), seed=2)
    assert all(r.d3 > 0 for r in inst.registrations if r.d2 > 0)


def test_same_seed_same_instance():
    assert generate(weekly_params(), seed=9) == generate(weekly_params(), seed=9)


def test_distinct_seeds_differ():
    assert len({digest(generate(daily_params(), seed=s)) for s in range(10)}) == 10


def test_counts_within_clamp():
    for seed in range(30):
        inst = generate(daily_params(), seed=seed)
        assert 105 <= len(inst.registrations) <= 148


@pytest.mark.parametrize("preset", sorted(PRESETS))
def test_presets_build_valid_instances(preset):
    params = PRESETS[preset]()
    inst = generate(params, seed=0)
    assert inst.variant is params.variant
    assert inst.days == params.days


def test_weekly_chains_fit_the_horizon():
    inst = generate(weekly_params(), seed=4)
    for chain in inst.patients().values():
        assert sum(r.waiting_days for r in chain[1:]) <= inst.days - 1
        assert len(chain) <= 5


def test_extended_fields():
    inst = generate(extended_params(nurse_capacity=4), seed=3)
    pool = inst.resources
    assert pool.nurses == (1, 2, 3, 4, 5) and pool.nurse_capacity == 4
    assert all(r.priority in (1, 2, 3) and r.drug for r in inst.registrations)
    prio = np.array([r.priority for r in inst.registrations])
    assert 0.05 < (prio == 1).mean() < 0.4


def test_tiny_instances_respect_oracle_bounds():
    for seed in range(50):
        inst = generate(tiny_params(), seed=seed)
        assert len(inst.registrations) <= 5
        assert inst.grid.ts_count == 8
        assert inst.resources.beds == (1,) and inst.resources.chairs == (1,)


@pytest.mark.parametrize("changes", [
    dict(patients_min=200, patients_max=100),
    dict(phase2_rate=1.5),
    dict(d4_main_range=(30, 4)),
    dict(priority_weights=(0.5, 0.5, 0.5)),
    dict(days=3),
    dict(beds=0, chairs=0),
])
def test_contradictory_params_rejected(changes):
    with pytest.raises(ConfigError):
        daily_params(**changes)


def test_params_replace_revalidates():
    with pytest.raises(ConfigError):
        daily_params().replace(chair_rate=-0.1)


def test_no_disruptions():
    inst = generate(tiny_params(variant=Variant.WEEKLY, days=2), seed=1)
    from chemosched.solver import SolverConfig, solve

    sch = solve(inst, SolverConfig(time_limit=5)).schedule
    assert not generate_disruptions(inst, sch, 0, 0, seed=0)


@pytest.mark.slow
def test_disruption_scenarios(weekly_case):
    inst, solved = weekly_case
    for n_unavail, n_changes in ((15, 0), (15, 3)):
        dis = generate_disruptions(inst, solved.schedule, n_unavail, n_changes, seed=1)
        assert len(dis.unavailable_patients) == n_unavail
        assert len(dis.replaced_patients) == n_changes
        assert all(day >= 2 for _, day in dis.unavailable)
        old_days = {(a.registration.patient_id, a.day) for a in solved.schedule}
        assert dis.unavailable <= old_days
        again = generate_disruptions(inst, solved.schedule, n_unavail, n_changes, seed=1)
        assert again == dis


@pytest.mark.slow
def test_too_many_regimen_changes(weekly_case):
    inst, solved = weekly_case
    with pytest.raises(ScenarioError):
        generate_disruptions(inst, solved.schedule, 0, 10_000, seed=0)
    with pytest.raises(ScenarioError):
        generate_disruptions(inst, solved.schedule, 10_000, 0, seed=0)


def test_generated_schedule_validates_after_solve():
    from chemosched.solver import SolverConfig, solve

    inst = generate(tiny_params(), seed=7)
    result = solve(inst, SolverConfig(time_limit=10))
    assert validate(inst, result.schedule) == []


@pytest.mark.slow
def test_repair_witness_is_optimal(weekly_case):
    from chemosched.generator import disruptions_with_repair
    from chemosched.model import apply_replacements
    from chemosched.objective import missed_preferences, resched_cost
    from chemosched.resched import reschedule
    from chemosched.solver import SolverConfig
    from chemosched.validate import validate_rescheduled

    inst, solved = weekly_case
    old = solved.schedule
    for seed, (n_unavail, n_changes) in enumerate(((5, 3), (15, 3), (0, 4))):
        dis, repair = disruptions_with_repair(inst, old, n_unavail, n_changes, seed=seed)
        assert validate_rescheduled(inst, old, repair, dis) == []
        assert missed_preferences(apply_replacements(inst, dis), repair) == 0
        result = reschedule(inst, old, dis, SolverConfig(time_limit=60, max_stall_rounds=50))
        assert result.cost == resched_cost(inst, old, repair, dis)
