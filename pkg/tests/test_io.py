from __future__ import annotations

import random

import pytest
from hypothesis import given, settings, strategies as st

from chemosched import io
from chemosched.errors import ParseError
from chemosched.generator import extended_params, generate, tiny_params, weekly_params
from chemosched.model import Assignment, DisruptionSet, Schedule, Variant
from chemosched.solver import SolverConfig, solve

from conftest import BED, bed, chair, daily, place, reg, schedule


def test_reg_fact_layout():
    inst = io.parse_instance('bed(1).\nreg(5,0,0,30,4,6,2,"bed").\n')
    r = inst.registration((5, 0))
    assert (r.patient_id, r.order, r.waiting_days) == (5, 0, 0)
    assert (r.d4, r.d3, r.d2, r.d1) == (30, 4, 6, 2)
    assert r.seat_pref is BED


def test_phase_rule_enforced_at_parse():
    with pytest.raises(ParseError):
        io.parse_instance('bed(1).\nreg(5,0,0,30,0,6,2,"bed").\n')


def test_empty_file_is_empty_instance():
    inst = io.parse_instance("")
    assert inst.registrations == ()
    assert io.parse_instance("% only a comment\n").registrations == ()


def test_schedule_fact_layout():
    inst = daily([reg(5, d4=30, pref=BED)])
    text = io.emit_schedule(schedule(place(inst, (5, 0), 1, 3, bed(1))))
    assert text.splitlines()[0] == 'x(5,1,3,30,0,"bed").'
    assert io.parse_schedule(text, inst) == schedule(place(inst, (5, 0), 1, 3, bed(1)))


def test_reschedule_output_uses_y():
    inst = daily([reg(5, d4=30, pref=BED)])
    sch = schedule(place(inst, (5, 0), 1, 3, bed(1)))
    text = io.emit_schedule(sch, predicate="y")
    assert text.startswith('y(5,1,3,30,0,"bed").')
    assert io.parse_schedule(text, inst) == sch


def test_mixed_predicates_rejected():
    inst = daily([reg(1), reg(2)], chairs=(1, 2))
    with pytest.raises(ParseError):
        io.parse_schedule('x(1,1,3,4,0,"chair").\ny(2,1,3,4,0,"chair").\n', inst)


@pytest.mark.parametrize("text", [
    'reg(5,0,0,30,4,6,2).',
    'bed(1,2,3,4).',
    'foo(1).',
    'bed(1)',
    'bed(1).bed(x).',
    'chair("1").',
])
def test_bad_instance_files(text):
    with pytest.raises(ParseError):
        io.parse_instance(text)


def test_parse_error_position():
    with pytest.raises(ParseError) as err:
        io.parse_instance('bed(1).\nchair(1).\nreg(1,0,0,4,0,0,1,"chair")@\n')
    assert (err.value.line, err.value.column) == (3, 27)


def test_unknown_registration_in_schedule():
    inst = daily([reg(1)])
    with pytest.raises(ParseError):
        io.parse_schedule('x(9,1,3,4,0,"chair").\n', inst)


def test_grid_facts_must_agree():
    with pytest.raises(ParseError):
        io.parse_instance("ts(1).\nts(3).\nchair(1).\n")


def test_report_examples():
    inst = daily([reg(1, d2=2, d3=1), reg(2, d2=2, d3=1)], chairs=(1, 2))
    text = io.emit_report(inst, schedule())
    header, rest = text.split("\n", 1)
    assert header == "day,ats,clock,phase2_count"
    assert rest.startswith("\nmetric,value\n")
    assert "level_7,0\n" in text and "m_star,0\n" in text

    sch = schedule(place(inst, (1, 0), 1, 3, chair(1)), place(inst, (2, 0), 1, 3, chair(2)))
    rows = [line.split(",") for line in io.emit_report(inst, sch).splitlines()[1:73]]
    assert rows[2] == ["1", "3", "07:40", "2"]
    assert sum(int(r[3]) for r in rows) == 2


def test_report_phase2_total_matches_registrations():
    inst = generate(tiny_params(patients_mean=40, patients_min=30, patients_max=50, ts_count=36,
                                beds=5, chairs=10), seed=2)
    sch = solve(inst, SolverConfig(time_limit=10, max_stall_rounds=5)).schedule
    rows = [line.split(",") for line in io.emit_report(inst, sch).split("\n\n")[0].splitlines()[1:]]
    assert sum(int(r[3]) for r in rows) == sum(1 for r in inst.registrations if r.d2 > 0)


def test_params_round_trip():
    for params in (weekly_params(), extended_params(nurse_capacity=4), tiny_params()):
        text = io.emit_params(params)
        assert io.parse_params(text) == params
        assert io.emit_params(io.parse_params(text)) == text


def test_params_file_errors():
    with pytest.raises(ParseError):
        io.parse_params("colour = blue\n")
    with pytest.raises(ParseError):
        io.parse_params("chairs = many\n")
    assert io.parse_params("# defaults\nchairs = 30\n").chairs == 30


# random instances and schedules for the round-trip law

@st.composite
def instances(draw):
    variant = draw(st.sampled_from(list(Variant)))
    seed = draw(st.integers(0, 2**32 - 1))
    size = dict(patients_mean=8.0, patients_std=3.0, patients_min=0, patients_max=15)
    if variant is Variant.WEEKLY:
        params = weekly_params(days=draw(st.integers(2, 5)), **size)
    elif variant is Variant.EXTENDED:
        params = extended_params(nurse_capacity=draw(st.integers(1, 10)), drug_limit=draw(st.integers(0, 9)), **size)
    else:
        params = tiny_params(ts_count=draw(st.integers(4, 36)), beds=draw(st.integers(0, 3)), chairs=draw(st.integers(1, 3)))
    return generate(params, seed)


def random_schedule(inst, rnd):
    seats = inst.resources.seats
    out = []
    for r in inst.registrations:
        seat = rnd.choice(seats) if r.d4 > 0 else None
        nurse = rnd.choice(inst.resources.nurses) if inst.extended else None
        out.append(Assignment(r, rnd.randint(1, inst.days), rnd.randint(1, inst.grid.ts_count), seat, nurse))
    # one placement per (patient, day), as the file format keys seats by it
    seen, unique = set(), []
    for a in out:
        if (a.registration.patient_id, a.day) not in seen:
            seen.add((a.registration.patient_id, a.day))
            unique.append(a)
    return Schedule(tuple(unique))


@settings(max_examples=60)
@given(instances(), st.integers(0, 10**6))
def test_round_trip(inst, seed):
    text = io.emit_instance(inst)
    back = io.parse_instance(text)
    assert back == inst
    assert io.emit_instance(back) == text
    sch = random_schedule(inst, random.Random(seed))
    stext = io.emit_schedule(sch)
    assert io.parse_schedule(stext, inst) == sch
    assert io.emit_schedule(io.parse_schedule(stext, inst)) == stext


@given(st.sets(st.tuples(st.integers(1, 50), st.integers(1, 5)), max_size=10), st.booleans())
def test_disruption_round_trip(unavailable, with_rows):
    rows = (reg(3, order=1, wait=2), reg(3, order=2, wait=1, pref=BED)) if with_rows else ()
    dis = DisruptionSet(frozenset(unavailable), rows)
    text = io.emit_disruptions(dis)
    assert io.parse_disruptions(text) == dis
    assert io.emit_disruptions(io.parse_disruptions(text)) == text


# single-character corruptions of valid files

def corpus():
    inst = generate(extended_params(patients_mean=3, patients_std=0, patients_min=3, patients_max=3), seed=1)
    return io.emit_instance(inst)


def mutations(text, inserts=300):
    rnd = random.Random(0)
    structural = [i for i, ch in enumerate(text) if ch in '(),."']
    out = [text[:i] + text[i + 1:] for i in structural]
    for _ in range(inserts):
        i = rnd.randrange(len(text) + 1)
        out.append(text[:i] + rnd.choice("@!$#&;") + text[i:])
    return out


def test_corrupted_files_are_rejected():
    text = corpus()
    io.parse_instance(text)
    bad_files = mutations(text)
    assert len(bad_files) > 800
    for bad in bad_files:
        with pytest.raises(ParseError):
            io.parse_instance(bad)
