import numpy as np
import pytest

from core.optim import AdamState, adam_step, clip_by_global_norm, lr_at
from core.tensor import Tensor
from models.config import Schedule
from utils.errors import ContractError


def test_schedule_breakpoints_are_exact():
    s = Schedule()
    assert lr_at(s, 0) == 3.5e-5
    assert lr_at(s, 10) == 3.5e-4
    assert lr_at(s, 39) == 3.5e-4
    assert lr_at(s, 40) == 3.5e-5
    assert lr_at(s, 69) == 3.5e-5
    assert lr_at(s, 70) == 3.5e-6
    assert lr_at(s, 499) == 3.5e-6


def test_schedule_warmup_is_linear():
    s = Schedule()
    assert lr_at(s, 5) == pytest.approx((3.5e-5 + 3.5e-4) / 2.0, rel=1e-12)
    values = [lr_at(s, e) for e in range(11)]
    assert all(a < b for a, b in zip(values, values[1:]))


def test_schedule_rejects_negative_epoch():
    with pytest.raises(ContractError):
        lr_at(Schedule(), -1)


def test_schedule_epochs_must_be_ordered():
    with pytest.raises(ValueError):
        Schedule(warmup_epochs=50, decay1_epoch=40)


def test_adam_first_step_closed_form():
    p = {"w": Tensor(np.zeros((1, 1)), requires_grad=True)}
    adam_step(AdamState.for_params(p), p, {"w": np.ones((1, 1))}, lr=0.001)
    assert p["w"].data[0, 0] == pytest.approx(-0.001 / (1.0 + 1e-8), rel=1e-12)


def test_adam_zero_gradients_leave_parameters_unchanged():
    start = np.random.default_rng(0).normal(size=(3, 2))
    p = {"w": Tensor(start.copy(), requires_grad=True)}
    state = AdamState.for_params(p)
    for _ in range(5):
        adam_step(state, p, {"w": np.zeros((3, 2))}, lr=0.01)
    np.testing.assert_array_equal(p["w"].data, start)
    assert state.step == 5


def test_adam_rejects_mismatched_gradients():
    p = {"w": Tensor(np.zeros((2, 2)), requires_grad=True)}
    state = AdamState.for_params(p)
    with pytest.raises(ContractError):
        adam_step(state, p, {"w": np.zeros((2, 3))}, lr=0.1)
    with pytest.raises(ContractError):
        adam_step(state, p, {"v": np.zeros((2, 2))}, lr=0.1)


def test_clip_by_global_norm():
    grads = {"a": np.array([[3.0]]), "b": np.array([[4.0]])}
    assert clip_by_global_norm(grads, None) is grads
    assert clip_by_global_norm(grads, 10.0) is grads
    clipped = clip_by_global_norm(grads, 1.0)
    assert clipped["a"][0, 0] == pytest.approx(0.6)
    assert clipped["b"][0, 0] == pytest.approx(0.8)
