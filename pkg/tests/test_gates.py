import pytest
from hypothesis import given, settings, strategies as st

from gridsim.errors import LayoutMismatchError
from gridsim.fock import SpaceLayout
from gridsim.gates import (
    AuxMeasureReset,
    AuxRotation,
    Circuit,
    CondDisplacement,
    Displacement,
    Ecd,
    ForcedJump,
    SbsTrace,
    Wait,
    flatten,
    step_from_dict,
    step_to_dict,
)

LAY = SpaceLayout.oscillators(10)
LAY2 = SpaceLayout.oscillators(6, 6)


def test_negative_duration_rejected():
    with pytest.raises(ValueError):
        Wait(-1.0)
    with pytest.raises(ValueError):
        AuxRotation(0.1, 0.2, duration=-1e-9)


def test_step_amplitude_count_must_match_modes():
    with pytest.raises(LayoutMismatchError):
        Circuit(LAY, [Ecd((1.0, 2.0))])
    Circuit(LAY2, [Ecd((1.0, 2.0)), Displacement((0.1, 0.2j))])


def test_aux_steps_need_aux():
    bare = SpaceLayout.oscillators(5, aux=False)
    with pytest.raises(LayoutMismatchError):
        Circuit(bare, [AuxRotation(1.0, 0.0)])
    Circuit(bare, [Displacement((0.3,)), ForcedJump("photon_loss", 0)])


def test_forced_jump_kind_validated():
    with pytest.raises(ValueError):
        ForcedJump("gain")


def test_circuit_json_roundtrip_and_helpers():
    c = Circuit(
        LAY,
        [
            AuxRotation(1.5, 0.25),
            Ecd((1 + 0.5j,)),
            CondDisplacement((0.2j,), duration=1e-7),
            Displacement((0.1,)),
            Wait(2e-7),
            ForcedJump("aux_decay"),
            AuxMeasureReset("Tq"),
        ],
    )
    back = Circuit.from_json(c.to_json())
    assert back == c
    assert c.ecd_count() == 1
    flipped = c.with_invert(True)
    assert flipped.steps[-1].invert is True
    assert c.with_invert(False) is c
    assert len(flatten([c, c])) == 2 * len(c)
    with pytest.raises(LayoutMismatchError):
        c + Circuit(LAY2, [])


@settings(max_examples=40, deadline=None)
@given(st.floats(-5, 5), st.floats(-5, 5), st.one_of(st.none(), st.floats(0, 1e-6)))
def test_ecd_step_roundtrip_property(re, im, dur):
    s = Ecd((complex(re, im),), duration=dur)
    assert step_from_dict(step_to_dict(s)) == s


def test_trace_invariants():
    t = SbsTrace()
    t.append(0, "Tq", 0)
    t.append(1, "Tp", 1, "aux_decay")
    with pytest.raises(ValueError):
        t.append(1, "Tq", 0)
    with pytest.raises(ValueError):
        t.append(2, "Tq", 2)
    assert t.outcomes == [0, 1]


def test_trace_csv_and_json_roundtrip():
    t = SbsTrace()
    for r, o in enumerate([0, 1, 1, 0]):
        t.append(r, "Tq" if r % 2 == 0 else "Tp", o, "loss" if r == 2 else "")
    csv = t.to_csv()
    assert csv.splitlines()[0] == "round,stabilizer_label,outcome,injected_error"
    assert SbsTrace.from_csv(csv).entries == t.entries
    assert SbsTrace.from_json(t.to_json()).entries == t.entries
