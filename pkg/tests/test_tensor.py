import numpy as np
import pytest

from core.tensor import (
    Tensor, backward, center_rows, div, elementwise, exp, frobenius, log, matmul,
    mean, normalize_rows, reduce, softplus, sqrt, sum_, tanh, zero_grads,
)
from utils.errors import ContractError, DimensionError, DomainError

from conftest import assert_grad_close, numeric_grad


def test_matmul_identity():
    out = matmul(np.eye(2), [[1, 2], [3, 4]])
    np.testing.assert_array_equal(out.data, [[1, 2], [3, 4]])


def test_matmul_row_by_column():
    assert matmul([[1, 2]], [[3], [4]]).item() == 11.0


def test_matmul_shape_mismatch_names_both_shapes():
    with pytest.raises(DimensionError, match=r"\(2, 3\).*\(2, 3\)"):
        matmul(np.ones((2, 3)), np.ones((2, 3)))


def test_elementwise_add_and_exp():
    np.testing.assert_array_equal(elementwise("add", [[1, 1]], [[2, 3]]).data, [[3, 4]])
    np.testing.assert_array_equal(elementwise("exp", np.zeros((2, 2))).data, np.ones((2, 2)))


def test_elementwise_rejects_incompatible_shapes():
    with pytest.raises(DimensionError):
        elementwise("add", np.ones((2, 3)), np.ones((3, 2)))


def test_elementwise_unknown_kind():
    with pytest.raises(ContractError):
        elementwise("cube", np.ones((1, 1)))


def test_reductions():
    assert reduce("frobenius", [[3, 4]]).item() == 5.0
    assert reduce("sum", np.zeros((3, 3))).item() == 0.0
    assert reduce("mean", [[2, 4]]).item() == 3.0


def test_reduce_empty_is_domain_error():
    with pytest.raises(DomainError):
        reduce("sum", np.zeros((0, 3)))


def test_domain_errors():
    with pytest.raises(DomainError):
        log([[0.0]])
    with pytest.raises(DomainError):
        sqrt([[-1.0]])
    with pytest.raises(DomainError):
        div([[1.0]], [[0.0]])


def test_backward_sum_gives_ones():
    W = Tensor(np.arange(4.0).reshape(2, 2), requires_grad=True)
    grads = backward(sum_(W), {"W": W})
    np.testing.assert_array_equal(grads["W"], np.ones((2, 2)))


def test_backward_accumulates_without_reset():
    W = Tensor(np.random.default_rng(0).normal(size=(2, 3)), requires_grad=True)
    loss = sum_(W * W)
    first = backward(loss, {"W": W})["W"]
    second = backward(loss, {"W": W})["W"]
    np.testing.assert_array_equal(second, 2.0 * first)

    zero_grads([W])
    np.testing.assert_array_equal(backward(loss, {"W": W})["W"], first)


def test_backward_rejects_non_scalar():
    W = Tensor(np.ones((2, 2)), requires_grad=True)
    with pytest.raises(ContractError):
        backward(W * 2.0)


def test_parameter_off_the_path_gets_zero_gradient():
    W = Tensor(np.ones((2, 2)), requires_grad=True)
    V = Tensor(np.ones((3, 1)), requires_grad=True)
    grads = backward(sum_(W), {"W": W, "V": V})
    np.testing.assert_array_equal(grads["V"], np.zeros((3, 1)))


def test_frobenius_gradient_at_zero_is_zero():
    W = Tensor(np.zeros((2, 2)), requires_grad=True)
    grads = backward(frobenius(W), {"W": W})
    np.testing.assert_array_equal(grads["W"], np.zeros((2, 2)))


def test_normalize_rows_maps_zero_rows_to_zero():
    out = normalize_rows([[3.0, 4.0], [0.0, 0.0]])
    np.testing.assert_allclose(out.data, [[0.6, 0.8], [0.0, 0.0]])


def test_scalar_and_vector_promotion():
    assert Tensor(2.5).shape == (1, 1)
    assert Tensor([1.0, 2.0, 3.0]).shape == (1, 3)


# ─── Gradient checks against central finite differences ───────────────────────

def _composite(kind: str, x: Tensor, w: Tensor, b: Tensor) -> Tensor:
    h = matmul(x, w) + b
    if kind == "tanh":
        return mean(tanh(h) * tanh(h))
    if kind == "softplus":
        return sum_(softplus(h))
    if kind == "exp_log":
        return sum_(log(exp(h) + 1.0))
    if kind == "div_sqrt":
        return sum_(div(h, sqrt(h * h + 1.0)))
    if kind == "normalize":
        return sum_(normalize_rows(center_rows(h)) * Tensor(np.arange(h.data.size).reshape(h.shape)))
    if kind == "frobenius":
        return frobenius(h - 0.3)
    raise AssertionError(kind)


@pytest.mark.parametrize("kind", ["tanh", "softplus", "exp_log", "div_sqrt", "normalize", "frobenius"])
@pytest.mark.parametrize("seed", range(4))
def test_gradients_match_finite_differences(kind, seed):
    rng = np.random.default_rng(seed)
    x = Tensor(rng.normal(size=(4, 3)))
    w = Tensor(rng.normal(size=(3, 5)), requires_grad=True)
    b = Tensor(rng.normal(size=(1, 5)), requires_grad=True)

    grads = backward(_composite(kind, x, w, b), {"w": w, "b": b})
    for name, t in (("w", w), ("b", b)):
        num = numeric_grad(lambda: _composite(kind, x, w, b).item(), t.data)
        assert_grad_close(grads[name], num)
