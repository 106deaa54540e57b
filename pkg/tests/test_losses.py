import math

import numpy as np
import pytest

from core import losses, network
from core.dataset import one_hot_matrix
from core.network import LatentCode
from core.tensor import Tensor, backward
from core.trainer import batch_parts
from models.config import LossWeights, ModelConfig
from utils.errors import DataValidationError, DegenerateInputError, DimensionError

from conftest import assert_grad_close, numeric_grad


def _code(mu, log_var) -> LatentCode:
    return LatentCode(mu=Tensor(mu), log_var=Tensor(log_var))


# ─── Value oracles ────────────────────────────────────────────────────────────

def test_reconstruction_loss_values():
    x = np.array([[1.0, 2.0]])
    assert losses.reconstruction_loss(x, x, x, x).item() == 0.0
    assert losses.reconstruction_loss(x, x - 1.0, x, x).item() == 2.0


def test_reconstruction_loss_shape_mismatch():
    with pytest.raises(DimensionError):
        losses.reconstruction_loss(np.ones((2, 2)), np.ones((2, 3)), np.ones((2, 2)), np.ones((2, 2)))


def test_kl_loss_values():
    zero = _code(np.zeros((1, 1)), np.zeros((1, 1)))
    assert losses.kl_loss(zero, zero).item() == 0.0
    shifted = _code(np.ones((1, 1)), np.zeros((1, 1)))
    assert abs(losses.kl_loss(shifted, zero).item() - 0.5) < 1e-12


def test_vae_loss_zero_for_perfect_reconstruction_and_standard_code():
    x = np.ones((3, 2))
    code = _code(np.zeros((3, 4)), np.zeros((3, 4)))
    assert losses.vae_loss(x, x, x, x, code, code).item() == 0.0


def test_corr_matches_pearson():
    a = np.array([[1.0], [2.0], [3.0]])
    b = np.array([[1.0], [2.0], [4.0]])
    expected = np.corrcoef(a.ravel(), b.ravel())[0, 1]
    assert abs(losses.corr(a, b).item() - expected) < 1e-12
    assert abs(losses.corr(a, b).item() - 9.0 / math.sqrt(84.0)) < 1e-12


def test_corr_degenerate_inputs():
    with pytest.raises(DegenerateInputError):
        losses.corr(np.ones((3, 2)), np.random.default_rng(0).normal(size=(3, 2)))
    with pytest.raises(DegenerateInputError):
        losses.corr(np.ones((1, 2)), np.ones((1, 2)))


def test_discrimination_single_pair_oracles():
    # centered rows that are orthogonal: correlation 0, t = 0
    za, zb = np.array([[1.0, -1.0, 0.0]]), np.array([[1.0, 1.0, -2.0]])
    assert abs(losses.discrimination(za, zb, [0]).item() - math.log(2.0)) < 1e-12

    z = np.array([[1.0, 2.0, 3.0]])
    expected = math.log1p(math.exp(0.5)) - 0.5
    assert abs(losses.discrimination(z, z, [0]).item() - expected) < 1e-12
    assert abs(expected - 0.474077) < 1e-6


def test_correlation_loss_counts_degenerate_rows():
    losses.diagnostics.reset()
    z_v = np.array([[1.0, 1.0, 1.0], [1.0, 2.0, 4.0]])
    z_a = np.array([[0.0, 1.0, 3.0], [2.0, 1.0, 0.0]])
    value = losses.correlation_loss(z_v, z_a, [0, 1]).item()
    assert math.isfinite(value)
    assert losses.diagnostics.degenerate_rows > 0


def test_distance_loss_values():
    z = np.random.default_rng(0).normal(size=(2, 2))
    assert losses.distance_loss(z, z).item() == 0.0
    assert losses.distance_loss(z + 1.0, z).item() == pytest.approx(1.0, abs=1e-12)


def test_discriminative_loss_values():
    y = one_hot_matrix(np.array([0, 2]), 3)
    assert losses.discriminative_loss(y, y, y).item() == 0.0
    single = one_hot_matrix(np.array([1]), 3)
    assert losses.discriminative_loss(np.zeros((1, 3)), np.zeros((1, 3)), single).item() == 2.0


def test_discriminative_loss_rejects_non_one_hot():
    with pytest.raises(DataValidationError):
        losses.discriminative_loss(np.zeros((1, 2)), np.zeros((1, 2)), np.array([[1.0, 1.0]]))


def test_center_loss_values():
    centers = np.zeros((2, 2))
    assert losses.center_loss(np.zeros((1, 2)), np.zeros((1, 2)), [1], centers).item() == 0.0
    value = losses.center_loss(np.array([[1.0, 0.0]]), np.zeros((1, 2)), [0], centers).item()
    assert value == 0.5


def test_center_loss_label_out_of_range():
    with pytest.raises(DataValidationError):
        losses.center_loss(np.zeros((1, 2)), np.zeros((1, 2)), [2], np.zeros((2, 2)))


def test_update_centers_rule():
    centers = np.zeros((2, 2))
    z = np.array([[2.0, 4.0]])
    new = losses.update_centers(centers, z, None, [0], alpha=1.0)
    np.testing.assert_array_equal(new[0], [1.0, 2.0])
    np.testing.assert_array_equal(new[1], centers[1])          # no samples of class 1
    np.testing.assert_array_equal(losses.update_centers(centers, z, None, [0], alpha=0.0), centers)
    np.testing.assert_array_equal(centers, 0.0)                 # input untouched


# ─── Invariants ───────────────────────────────────────────────────────────────

def test_corr_of_negated_codes_is_minus_one(rng):
    z = rng.normal(size=(6, 4))
    assert losses.corr(z, -z).item() == pytest.approx(-1.0, abs=1e-12)
    assert losses.corr(z, z).item() == pytest.approx(1.0, abs=1e-12)


def test_corr_scale_invariance_and_sign_flip(rng):
    za, zb = rng.normal(size=(8, 3)), rng.normal(size=(8, 3))
    base = losses.corr(za, zb).item()
    assert losses.corr(3.5 * za, zb).item() == pytest.approx(base, abs=1e-12)
    assert losses.corr(za, 0.25 * zb).item() == pytest.approx(base, abs=1e-12)
    assert losses.corr(-za, zb).item() == pytest.approx(-base, abs=1e-12)


def test_kl_loss_is_never_negative(rng):
    for _ in range(1000):
        mu = rng.normal(scale=3.0, size=(2, 3))
        log_var = rng.normal(scale=3.0, size=(2, 3))
        code = _code(mu, log_var)
        assert losses.kl_loss(code, code).item() >= 0.0


def test_distance_and_discriminative_ignore_batch_order(rng):
    z_v, z_a = rng.normal(size=(7, 3)), rng.normal(size=(7, 3))
    y = one_hot_matrix(rng.integers(0, 4, size=7), 4)
    p_a, p_v = rng.normal(size=(7, 4)), rng.normal(size=(7, 4))
    perm = rng.permutation(7)

    assert losses.distance_loss(z_v[perm], z_a[perm]).item() == pytest.approx(
        losses.distance_loss(z_v, z_a).item(), rel=1e-12)
    assert losses.discriminative_loss(p_a[perm], p_v[perm], y[perm]).item() == pytest.approx(
        losses.discriminative_loss(p_a, p_v, y).item(), rel=1e-12)


def test_center_loss_ignores_class_relabelling(rng):
    z_v, z_a = rng.normal(size=(9, 2)), rng.normal(size=(9, 2))
    labels = rng.integers(0, 3, size=9)
    centers = rng.normal(size=(3, 2))
    relabel = np.array([2, 0, 1])
    moved = np.empty_like(centers)
    moved[relabel] = centers

    base = losses.center_loss(z_v, z_a, labels, centers).item()
    assert losses.center_loss(z_v, z_a, relabel[labels], moved).item() == pytest.approx(base, rel=1e-12)


def test_total_loss_values():
    assert losses.total_loss(losses.LossParts(), LossWeights()).total == 0.0
    unit = losses.LossParts(rec=0.5, kl=0.5, vae=1.0, corr=1.0, dist=1.0, discr=1.0, center=1.0)
    assert abs(losses.total_loss(unit, LossWeights()).total - 1.1111) < 1e-12


def test_total_tensor_agrees_with_report(tiny_model, small_data):
    train, _ = small_data
    params = network.init(tiny_model, 0)
    idx = np.arange(8)
    parts, _, _ = batch_parts(
        params, train.visual.values[idx], train.audio.values[idx], train.labels.ids[idx],
        np.random.default_rng(0), full=True,
    )
    weights = LossWeights()
    expected = losses.total_loss(parts, weights).total
    assert losses.total_tensor(parts, weights).item() == pytest.approx(expected, rel=1e-12)


# ─── Gradient checks ──────────────────────────────────────────────────────────

def _instance(seed: int):
    rng = np.random.default_rng(seed)
    n, o = int(rng.integers(2, 9)), int(rng.integers(2, 9))
    labels = rng.integers(0, 3, size=n)
    return rng, n, o, labels


@pytest.mark.parametrize("seed", range(20))
def test_loss_term_gradients(seed):
    rng, n, o, labels = _instance(seed)
    z_v = Tensor(rng.normal(size=(n, o)), requires_grad=True)
    z_a = Tensor(rng.normal(size=(n, o)), requires_grad=True)
    centers = rng.normal(size=(3, o))
    terms = {
        "corr":   lambda: losses.correlation_loss(z_v, z_a, labels),
        "dist":   lambda: losses.distance_loss(z_v, z_a),
        "center": lambda: losses.center_loss(z_v, z_a, labels, centers),
    }
    for name, term in terms.items():
        z_v.zero_grad()
        z_a.zero_grad()
        grads = backward(term(), {"z_v": z_v, "z_a": z_a})
        for key, t in (("z_v", z_v), ("z_a", z_a)):
            assert_grad_close(grads[key], numeric_grad(lambda: term().item(), t.data))


@pytest.mark.parametrize("seed", range(20))
def test_vae_and_discriminative_gradients(seed):
    rng, n, o, labels = _instance(seed)
    mu = Tensor(rng.normal(size=(n, o)), requires_grad=True)
    lv = Tensor(0.5 * rng.normal(size=(n, o)), requires_grad=True)
    xhat = Tensor(rng.normal(size=(n, 4)), requires_grad=True)
    x = rng.normal(size=(n, 4))
    pred = Tensor(rng.normal(size=(n, 3)), requires_grad=True)
    y = one_hot_matrix(labels, 3)

    def vae():
        code = LatentCode(mu=mu, log_var=lv)
        return losses.vae_loss(x, xhat, x, xhat * 0.5, code, code)

    def discr():
        return losses.discriminative_loss(pred, pred * 2.0, y)

    grads = backward(vae(), {"mu": mu, "lv": lv, "xhat": xhat})
    for key, t in (("mu", mu), ("lv", lv), ("xhat", xhat)):
        assert_grad_close(grads[key], numeric_grad(lambda: vae().item(), t.data))

    grads = backward(discr(), {"pred": pred})
    assert_grad_close(grads["pred"], numeric_grad(lambda: discr().item(), pred.data))


@pytest.mark.parametrize("seed", range(20))
def test_total_objective_gradients_through_the_network(seed):
    rng = np.random.default_rng(seed)
    cfg = ModelConfig(d_visual=5, d_audio=4, hidden=6, latent=3, classes=3)
    params = network.init(cfg, seed)
    n = int(rng.integers(3, 9))
    x_v, x_a = rng.normal(size=(n, 5)), rng.normal(size=(n, 4))
    labels = rng.integers(0, 3, size=n)
    params.centers = rng.normal(size=(3, 3))
    weights = LossWeights(lambda1=0.3, lambda2=0.5, lambda3=0.7, lambda4=0.2)

    def objective():
        parts, _, _ = batch_parts(params, x_v, x_a, labels, np.random.default_rng(seed), full=True)
        return losses.total_tensor(parts, weights)

    grads = backward(objective(), params.tensors)
    for name in ("visual.enc.weight", "shared.logvar.bias", "shared.cls.weight", "audio.dec2.weight"):
        data = params[name].data
        entries = [tuple(rng.integers(0, s) for s in data.shape) for _ in range(4)]
        num = numeric_grad(lambda: objective().item(), data, entries=entries)
        for idx in entries:
            assert grads[name][idx] == pytest.approx(num[idx], rel=1e-4, abs=1e-7)
