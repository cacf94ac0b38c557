import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from iisscert.errors import ConfigurationError, DimensionError, DomainError, InputError
from iisscert.system import (BilinearSystem, ImpulseSchedule, InitialFunction, InputSignal, ScalarSignal,
                             classify_schedule, eval_input, make_schedule_random, make_schedule_uniform)


def scalar_system(**kw):
    base = dict(A=[[-0.5]], A_list=([[0.5]], [[0.25]]), B_list=([[1 / 3]], [[0.2]]), C=[[0.5, 0.5]],
                D=[[0.25]], E=[[0.2]], F=[[1 / 3, 1 / 3]], r=0.4, d=0.4)
    base.update(kw)
    return BilinearSystem(**base)


def test_system_dimensions_and_roundtrip():
    sys = scalar_system(d=0.7)
    assert (sys.n, sys.q, sys.max_delay) == (1, 2, 0.7)
    again = BilinearSystem.from_dict(sys.to_dict())
    assert again.to_dict() == sys.to_dict()


def test_system_is_immutable():
    sys = scalar_system()
    with pytest.raises(ValueError):
        sys.A[0, 0] = 1.0


@pytest.mark.parametrize("change", [
    {"C": [[0.5]]},
    {"A_list": ([[0.5]],)},
    {"E": [[0.2, 0.0]]},
])
def test_system_dimension_errors(change):
    with pytest.raises(DimensionError):
        scalar_system(**change)


def test_system_rejects_negative_delay():
    with pytest.raises(InputError):
        scalar_system(r=-0.1)


def test_declared_dimension_mismatch():
    data = scalar_system().to_dict()
    data["n"] = 2
    with pytest.raises(DimensionError):
        BilinearSystem.from_dict(data)


def test_eval_input_examples():
    assert np.all(eval_input(InputSignal.zero(3), 4.2) == 0)
    assert eval_input(InputSignal((ScalarSignal("inverse_square"),)), 1.0)[0] == 1.0
    assert eval_input(InputSignal((ScalarSignal("exp_decay", {"rate": 2.0}),)), 0.0)[0] == 1.0
    step = InputSignal((ScalarSignal("piecewise_constant", {"breakpoints": [2.0], "values": [5.0, 7.0]}),))
    assert eval_input(step, 2.0, "left")[0] == 5.0
    assert eval_input(step, 2.0, "right")[0] == 7.0


def test_eval_input_domain():
    sig = InputSignal.zero(1)
    with pytest.raises(DomainError):
        eval_input(sig, 0.5, start=1.0)
    with pytest.raises(DomainError):
        eval_input(sig, 1.0, "left", start=1.0)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-50, 50), min_size=1, max_size=5, unique=True))
def test_piecewise_constant_right_continuous(bps):
    bps = sorted(bps)
    vals = list(range(len(bps) + 1))
    sig = ScalarSignal("piecewise_constant", {"breakpoints": bps, "values": vals})
    for k, b in enumerate(bps):
        assert sig.evaluate(np.array(b), "right") == vals[k + 1]
        assert sig.evaluate(np.array(b), "left") == vals[k]


def test_input_from_dict_forms():
    q = 2
    assert InputSignal.from_dict({"kind": "zero"}, q).dimension == 2
    sig = InputSignal.from_dict({"kind": "constant", "value": [1.0, 2.0]}, q)
    assert np.allclose(sig.evaluate(np.array(3.0)), [1.0, 2.0])
    with pytest.raises(DimensionError):
        InputSignal.from_dict({"kind": "constant", "value": [1.0]}, q)
    with pytest.raises(InputError):
        InputSignal.from_dict({"kind": "sawtooth"}, q)


def test_initial_function_tabulated():
    phi = InitialFunction("tabulated", [[0.0], [1.0]], [-1.0, 0.0])
    assert phi(-0.25)[0] == pytest.approx(0.75)
    assert phi.covers(1.0) and not phi.covers(2.0)
    with pytest.raises(DomainError):
        phi(-2.0)
    with pytest.raises(DomainError):
        phi(0.5)
    with pytest.raises(InputError):
        InitialFunction("tabulated", [[0.0], [1.0]], [-1.0, -0.5])


@pytest.mark.parametrize("t0, delta, horizon, expected", [
    (1.0, 1.0, 3.0, (2.0, 3.0, 4.0)),
    (0.0, 0.2, 1.0, (0.2, 0.4, 0.6, 0.8, 1.0)),
    (0.0, 2.0, 1.0, ()),
])
def test_uniform_schedule(t0, delta, horizon, expected):
    s = make_schedule_uniform(t0, delta, horizon)
    assert np.allclose(s.times, expected)
    assert s.inf_dwell == delta and s.sup_dwell == delta


def test_uniform_schedule_rejects():
    with pytest.raises(InputError):
        make_schedule_uniform(0.0, 0.0, 1.0)
    with pytest.raises(InputError):
        make_schedule_uniform(0.0, 1.0, -1.0)


def test_random_schedule_degenerate_and_deterministic():
    a = make_schedule_random(0.0, 0.5, 0.5, 10.0, seed=3)
    assert a.times == make_schedule_uniform(0.0, 0.5, 10.0).times
    b1 = make_schedule_random(0.0, 0.3, 0.7, 100.0, seed=11)
    b2 = make_schedule_random(0.0, 0.3, 0.7, 100.0, seed=11)
    assert b1.times == b2.times
    gaps = classify_schedule(b1)
    assert gaps.inf_gap >= 0.3 and gaps.sup_gap <= 0.7


@settings(max_examples=40, deadline=None)
@given(st.floats(0.05, 1.0), st.floats(1.0, 3.0), st.integers(0, 1000), st.booleans())
def test_random_schedule_respects_declared_class(dmin, ratio, seed, quantized):
    dmax = dmin * ratio
    quantum = 1e-3 if quantized else None
    if quantized and math.floor(dmax / quantum + 1e-9) < math.ceil(dmin / quantum - 1e-9):
        return
    s = make_schedule_random(0.0, dmin, dmax, 20.0, seed=seed, quantum=quantum)
    gaps = classify_schedule(s)
    if s.times:
        assert gaps.inf_gap >= dmin - 1e-9 and gaps.sup_gap <= dmax + 1e-9
    if quantized:
        steps = np.array(s.times) / quantum
        assert np.allclose(steps, np.round(steps), atol=1e-6)


def test_classify_schedule():
    assert tuple(classify_schedule(make_schedule_uniform(0.0, 1.0, 5.0)))[:2] == pytest.approx((1.0, 1.0))
    assert tuple(classify_schedule(ImpulseSchedule((1.0, 1.5, 3.0), 0.0)))[:2] == (0.5, 1.5)
    empty = classify_schedule(ImpulseSchedule((), 0.0))
    assert empty.degenerate and math.isinf(empty.inf_gap)


def test_schedule_validation():
    with pytest.raises(InputError):
        ImpulseSchedule((1.0, 1.0), 0.0)
    with pytest.raises(InputError):
        ImpulseSchedule((0.0,), 0.0)
    with pytest.raises(ConfigurationError):
        ImpulseSchedule((1.0, 1.2), 0.0, inf_dwell=0.5)
    with pytest.raises(ConfigurationError):
        ImpulseSchedule((1.0, 3.0), 0.0, sup_dwell=1.5)
