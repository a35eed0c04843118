from __future__ import annotations

import pytest
from hypothesis import given, strategies as st

from chemosched.errors import InputError, UsageError
from chemosched.model import Assignment, DisruptionSet
from chemosched.validate import Code, frozen_prefix, validate, validate_core, validate_extended, validate_reschedule

from conftest import BED, CHAIR, bed, chair, daily, extended, place, reg, schedule, weekly


def codes(violations):
    return [v.code for v in violations]


def test_c3_overlap_on_shared_chair():
    inst = daily([reg(1, d4=4), reg(2, d4=4)])
    sch = schedule(place(inst, (1, 0), 1, 3, chair()), place(inst, (2, 0), 1, 4, chair()))
    assert codes(validate_core(inst, sch)) == [Code.C3]


def test_c3_touching_ranges_do_not_overlap():
    inst = daily([reg(1, d4=4), reg(2, d4=4)])
    sch = schedule(place(inst, (1, 0), 1, 3, chair()), place(inst, (2, 0), 1, 5, chair()))
    assert validate_core(inst, sch) == []


def test_c4_long_therapy_start():
    inst = daily([reg(1, d4=51)])
    assert codes(validate_core(inst, schedule(place(inst, (1, 0), 1, 23, chair())))) == [Code.C4]
    assert validate_core(inst, schedule(place(inst, (1, 0), 1, 24, chair()))) == []


def test_c4_threshold_is_strict():
    inst = daily([reg(1, d4=50)])
    assert validate_core(inst, schedule(place(inst, (1, 0), 1, 1, chair()))) == []


def test_c5_earlier_phases_must_fit():
    inst = daily([reg(1, d1=2, d2=2, d3=1)])
    assert codes(validate_core(inst, schedule(place(inst, (1, 0), 1, 2, chair())))) == [Code.C5]
    assert validate_core(inst, schedule(place(inst, (1, 0), 1, 3, chair()))) == []


def test_c6_exact_gap():
    inst = weekly([reg(1), reg(1, order=1, wait=2)])
    ok = schedule(place(inst, (1, 0), 1, 3, chair()), place(inst, (1, 1), 3, 3, chair()))
    bad = schedule(place(inst, (1, 0), 1, 3, chair()), place(inst, (1, 1), 2, 3, chair()))
    assert validate_core(inst, ok) == []
    assert codes(validate_core(inst, bad)) == [Code.C6]
    assert validate_core(inst, bad, exact_gaps=True) != []


def test_c6_relaxed_only_needs_later_day():
    inst = weekly([reg(1), reg(1, order=1, wait=2)])
    later = schedule(place(inst, (1, 0), 1, 3, chair()), place(inst, (1, 1), 2, 3, chair()))
    same = schedule(place(inst, (1, 0), 1, 3, chair()), place(inst, (1, 1), 1, 20, bed()))
    assert validate_core(inst, later, exact_gaps=False) == []
    assert Code.C6 in codes(validate_core(inst, same, exact_gaps=False))


def test_c1_missing_and_duplicate():
    inst = daily([reg(1), reg(2)], chairs=(1, 2))
    one = place(inst, (1, 0), 1, 3, chair())
    assert codes(validate_core(inst, schedule(one))) == [Code.C1]
    dup = schedule(one, place(inst, (1, 0), 1, 10, chair(2)), place(inst, (2, 0), 1, 3, chair(2)))
    assert Code.C1 in codes(validate_core(inst, dup))


def test_c2_seat_rules():
    inst = daily([reg(1, d4=4), reg(2, d4=0)])
    assert codes(validate_core(inst, schedule(place(inst, (1, 0), 1, 3), place(inst, (2, 0), 1, 3)))) == [Code.C2]
    assert codes(validate_core(inst, schedule(place(inst, (1, 0), 1, 3, chair()), place(inst, (2, 0), 1, 3, bed())))) == [Code.C2]
    assert codes(validate_core(inst, schedule(place(inst, (1, 0), 1, 3, chair(9)), place(inst, (2, 0), 1, 3)))) == [Code.C2]


def test_unknown_registration_is_input_error():
    inst = daily([reg(1)])
    stranger = Assignment(reg(7), 1, 3, chair())
    with pytest.raises(InputError):
        validate_core(inst, schedule(stranger))


def test_extended_nurse_capacity():
    inst = extended([reg(1), reg(2)], capacity=1, chairs=(1, 2))
    sch = schedule(place(inst, (1, 0), 1, 3, chair(1), 1), place(inst, (2, 0), 1, 4, chair(2), 1))
    assert codes(validate_extended(inst, sch)) == [Code.E_NURSE_CAP]


def test_extended_last_slot_and_missing_nurse():
    inst = extended([reg(1), reg(2)], chairs=(1, 2))
    sch = schedule(place(inst, (1, 0), 1, 36, chair(1), 1), place(inst, (2, 0), 1, 3, chair(2)))
    assert codes(validate_extended(inst, sch)) == [Code.E_NURSE_ASSIGN, Code.E_LAST_SLOT]


def test_extended_drug_limit():
    regs = [reg(i, drug="A") for i in (1, 2, 3)]
    inst = extended(regs, nurses=(1, 2, 3), limits={("A", 1): 2}, chairs=(1, 2, 3))
    sch = schedule(*(place(inst, (i, 0), 1, 3, chair(i), i) for i in (1, 2, 3)))
    assert codes(validate_extended(inst, sch)) == [Code.E_DRUG]


def test_extended_checks_need_extended_instance():
    inst = daily([reg(1)])
    with pytest.raises(UsageError):
        validate_extended(inst, schedule(place(inst, (1, 0), 1, 3, chair())))


def _three_day():
    inst = weekly([reg(1), reg(2), reg(3)], days=5, chairs=(1, 2, 3))
    old = schedule(place(inst, (1, 0), 1, 3, chair(1)), place(inst, (2, 0), 2, 3, chair(2)),
                   place(inst, (3, 0), 4, 3, chair(3)))
    return inst, old


def test_frozen_prefix_before_disruption_day():
    inst, old = _three_day()
    dis = DisruptionSet(unavailable={(3, 4)})
    assert {a.key for a in frozen_prefix(old, dis)} == {(1, 0), (2, 0)}
    assert frozen_prefix(old, DisruptionSet()) == frozenset(old.assignments)


def test_frozen_prefix_disruption_on_day_one():
    inst, old = _three_day()
    dis = DisruptionSet(unavailable={(1, 1)})
    assert {a.key for a in frozen_prefix(old, dis)} == set()


def test_reschedule_rules():
    inst, old = _three_day()
    dis = DisruptionSet(unavailable={(3, 4)})
    changed = schedule(place(inst, (1, 0), 1, 5, chair(1)), place(inst, (2, 0), 2, 3, chair(2)),
                       place(inst, (3, 0), 5, 3, chair(3)))
    assert Code.R_FROZEN in codes(validate_reschedule(inst, old, changed, dis))

    on_off_day = schedule(*[a for a in old])
    assert codes(validate_reschedule(inst, old, on_off_day, dis)) == [Code.R_UNAVAILABLE]

    earlier = schedule(place(inst, (1, 0), 1, 3, chair(1)), place(inst, (2, 0), 2, 3, chair(2)),
                       place(inst, (3, 0), 3, 3, chair(3)))
    early_dis = DisruptionSet(unavailable={(3, 2)})
    assert codes(validate_reschedule(inst, old, earlier, early_dis)) == [Code.R_ANTICIPATED]

    postponed = schedule(place(inst, (1, 0), 1, 3, chair(1)), place(inst, (2, 0), 2, 3, chair(2)),
                         place(inst, (3, 0), 5, 3, chair(3)))
    assert validate_reschedule(inst, old, postponed, dis) == []


def test_violation_output_sorted():
    inst = daily([reg(1, d4=51), reg(2, d4=51), reg(3)], chairs=(1,), beds=(1,))
    sch = schedule(place(inst, (3, 0), 1, 1, chair()), place(inst, (2, 0), 1, 2, chair()),
                   place(inst, (1, 0), 1, 3, chair()))
    out = validate_core(inst, sch)
    assert out == sorted(out, key=lambda v: v.sort_key())
    assert codes(out) == [Code.C3, Code.C3, Code.C4, Code.C4]
    assert all(v.registrations for v in out)


# Independent re-check, written directly from the condition definitions.
def recheck(inst, sch):
    seen = {}
    for a in sch:
        seen[a.key] = seen.get(a.key, 0) + 1
    if any(seen.get(r.key, 0) != 1 for r in inst.registrations):
        return False
    A = 2 * inst.grid.ts_count
    for a in sch:
        r = a.registration
        if not (1 <= a.day <= inst.days and 1 <= a.ts <= inst.grid.ts_count):
            return False
        if (r.d4 > 0) != (a.seat is not None):
            return False
        if a.seat is not None and a.seat.id not in (inst.resources.beds if a.seat.kind is BED else inst.resources.chairs):
            return False
        if r.d4 > 50 and a.ts < 24:
            return False
        if 2 * a.ts - r.d1 - r.d2 - r.d3 < 1:
            return False
    items = list(sch)
    for i, a in enumerate(items):
        for b in items[i + 1:]:
            if a.seat is None or a.seat != b.seat or a.day != b.day:
                continue
            sa = set(range(2 * a.ts, min(2 * a.ts + a.registration.d4 - 1, A) + 1))
            sb = set(range(2 * b.ts, min(2 * b.ts + b.registration.d4 - 1, A) + 1))
            if sa & sb:
                return False
    day = {a.key: a.day for a in sch}
    for r in inst.registrations:
        if r.order > 0 and day[r.key] != day[(r.patient_id, r.order - 1)] + r.waiting_days:
            return False
    return True


@st.composite
def tiny_case(draw):
    n_pat = draw(st.integers(1, 4))
    regs = []
    for pid in range(1, n_pat + 1):
        orders = draw(st.integers(1, 2))
        for o in range(orders):
            d2 = draw(st.integers(0, 2))
            regs.append(reg(pid, order=o, wait=0 if o == 0 else draw(st.integers(1, 2)),
                            d4=draw(st.sampled_from([0, 3, 8, 52])), d3=draw(st.integers(1 if d2 else 0, 2)),
                            d2=d2, d1=draw(st.integers(1, 2)), pref=draw(st.sampled_from([BED, CHAIR]))))
    regs = regs[:6]
    keys = {r.key for r in regs}
    regs = [r for r in regs if r.order == 0 or (r.patient_id, r.order - 1) in keys]
    inst = weekly(regs, days=3, beds=(1,), chairs=(1,), ts_count=30)
    assigns = []
    for r in inst.registrations:
        if draw(st.integers(0, 20)) == 0:
            continue
        seat = None if r.d4 == 0 else draw(st.sampled_from([bed(), chair(), None, chair(2)]))
        if r.d4 == 0 and draw(st.booleans()):
            seat = chair()
        assigns.append(Assignment(r, draw(st.integers(1, 4)), draw(st.integers(1, 30)), seat))
        if draw(st.integers(0, 20)) == 0:
            assigns.append(Assignment(r, draw(st.integers(1, 3)), draw(st.integers(1, 30)), seat))
    return inst, schedule(*assigns)


@given(tiny_case())
def test_validator_agrees_with_direct_recheck(case):
    inst, sch = case
    assert (validate_core(inst, sch) == []) == recheck(inst, sch)


@given(tiny_case())
def test_validator_is_deterministic(case):
    inst, sch = case
    assert validate(inst, sch) == validate(inst, schedule(*reversed(sch.assignments)))


def test_replaced_rows_must_match_replacement():
    inst, old = _three_day()
    other = Assignment(reg(9), 5, 3, chair(1))
    with pytest.raises(InputError):
        validate_reschedule(inst, old, schedule(*old, other), DisruptionSet(unavailable={(3, 4)}))
