import numpy as np
import pytest

from core import cca
from utils.errors import DimensionError, NumericalError


def _pearson(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.corrcoef(a, b)[0, 1])


def test_identical_views_are_perfectly_correlated(rng):
    x = rng.normal(size=(200, 4))
    model = cca.fit(x, x.copy(), k=4, r=0.0)
    np.testing.assert_allclose(model.rho, 1.0, atol=1e-9)


def test_independent_views_have_small_correlations():
    rng = np.random.default_rng(42)
    model = cca.fit(rng.normal(size=(1000, 5)), rng.normal(size=(1000, 5)), k=5, r=0.0)
    assert np.all(model.rho < 0.2)


def test_one_dimensional_views_reduce_to_pearson(rng):
    a = rng.normal(size=(300, 1))
    v = 0.6 * a + rng.normal(size=(300, 1))
    model = cca.fit(a, v, k=1, r=0.0)
    assert model.rho[0] == pytest.approx(abs(_pearson(a[:, 0], v[:, 0])), abs=1e-10)


def test_correlations_are_affine_invariant(rng):
    a = rng.normal(size=(400, 3))
    v = a @ rng.normal(size=(3, 4)) + 0.5 * rng.normal(size=(400, 4))
    base = cca.fit(a, v, k=3, r=0.0)

    mix_a, mix_v = rng.normal(size=(3, 3)), rng.normal(size=(4, 4))
    moved = cca.fit(a @ mix_a + 7.0, v @ mix_v - 3.0, k=3, r=0.0)
    np.testing.assert_allclose(moved.rho, base.rho, atol=1e-6)


def test_projected_training_columns_reproduce_rho(rng):
    a = rng.normal(size=(500, 4))
    v = np.hstack([a[:, :2] + 0.3 * rng.normal(size=(500, 2)), rng.normal(size=(500, 3))])
    model = cca.fit(a, v, k=3, r=0.0)
    pa, pv = cca.transform(model, a, "audio"), cca.transform(model, v, "visual")

    assert pa.shape == (500, 3) and pv.shape == (500, 3)
    for j in range(3):
        assert _pearson(pa[:, j], pv[:, j]) == pytest.approx(model.rho[j], abs=1e-6)
    np.testing.assert_allclose(np.cov(pa, rowvar=False), np.eye(3), atol=1e-8)
    np.testing.assert_allclose(np.cov(pv, rowvar=False), np.eye(3), atol=1e-8)


def test_rho_is_non_increasing_and_bounded(rng):
    a = rng.normal(size=(120, 6))
    v = a[:, :5] @ rng.normal(size=(5, 5)) + rng.normal(size=(120, 5))
    rho = cca.fit(a, v, k=5).rho
    assert np.all(np.diff(rho) <= 0.0)
    assert np.all((rho >= 0.0) & (rho <= 1.0))


def test_sign_convention(rng):
    a, v = rng.normal(size=(80, 3)), rng.normal(size=(80, 3))
    model = cca.fit(a, v, k=3)
    for j in range(3):
        column = model.w_audio[:, j]
        assert column[np.flatnonzero(column)[0]] > 0.0


def test_k_out_of_range_is_rejected(rng):
    a, v = rng.normal(size=(10, 3)), rng.normal(size=(10, 5))
    with pytest.raises(DimensionError):
        cca.fit(a, v, k=0)
    with pytest.raises(DimensionError):
        cca.fit(a, v, k=4)
    with pytest.raises(DimensionError):
        cca.fit(a[:3], v[:3], k=3)


def test_singular_covariance_without_ridge(rng):
    a = rng.normal(size=(50, 3))
    a[:, 2] = a[:, 0] + a[:, 1]
    with pytest.raises(NumericalError):
        cca.fit(a, rng.normal(size=(50, 3)), k=2, r=0.0)


def test_default_ridge_handles_a_constant_column(rng):
    a = rng.normal(size=(60, 4))
    a[:, 1] = 2.5
    model = cca.fit(a, rng.normal(size=(60, 3)), k=2)
    assert model.ridge_audio > 0.0
    assert np.all(np.isfinite(model.rho))
    assert np.all(np.isfinite(cca.transform(model, a, "audio")))


def test_transform_checks_width(rng):
    model = cca.fit(rng.normal(size=(30, 4)), rng.normal(size=(30, 2)), k=2)
    with pytest.raises(DimensionError, match="visual"):
        cca.transform(model, rng.normal(size=(5, 4)), "visual")
