import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from mfgstop import MeanFieldStoppingEquilibrium

T = np.round(np.arange(0, 1.0001, 0.01), 12)


def test_params_and_clone():
    est = MeanFieldStoppingEquilibrium(c=0.9, family="three-mass", eps=0.05)
    params = est.get_params()
    assert params["c"] == 0.9 and params["family"] == "three-mass" and params["eps"] == 0.05
    twin = clone(est).set_params(c=0.2)
    assert twin.c == 0.2 and est.c == 0.9


def test_fit_predict_uniform():
    est = MeanFieldStoppingEquilibrium(c=0.5).fit(T)
    np.testing.assert_allclose(est.predict(T), np.minimum(2 * T, 1.0), atol=1e-12)
    np.testing.assert_allclose(est.curve_.selected, np.minimum(2 * T, 1.0), atol=1e-12)
    assert est.score(T) >= -1e-12
    assert est.n_features_in_ == 1


def test_common_noise_columns():
    x = np.minimum(T ** 2, 2.0)
    X = np.column_stack([T, x])
    est = MeanFieldStoppingEquilibrium(c=0.5, shift="zero").fit(X)
    np.testing.assert_allclose(est.predict(X), np.minimum(2 * x, 1.0), atol=1e-9)
    with pytest.raises(ValueError, match="columns"):
        est.transform(T)


def test_transform_counts_components():
    est = MeanFieldStoppingEquilibrium(family="three-mass", c=0.9).fit(T)
    out = est.transform(T)
    assert out.shape == (T.size, 3)
    assert np.all(out[:, 0] <= out[:, 1])
    assert out[5, 2] == 3 and out[-1, 2] == 1


def test_fitted_curve_policy():
    est = MeanFieldStoppingEquilibrium(c=1.0, policy="minimal").fit(T)
    assert est.predict([0.0])[0] == 0.0
    est = MeanFieldStoppingEquilibrium(c=1.0, policy=np.full(T.size, 0.3)).fit(T)
    np.testing.assert_array_equal(est.predict([0.0, 0.555]), [0.3, 0.3])


def test_not_fitted_and_bad_family():
    with pytest.raises(NotFittedError):
        MeanFieldStoppingEquilibrium().predict(T)
    with pytest.raises(ValueError, match="family"):
        MeanFieldStoppingEquilibrium(family="normal").fit(T)


def test_simulate_from_estimator():
    est = MeanFieldStoppingEquilibrium(c=0.5).fit(T)
    res = est.simulate(10_000, master_seed=42)
    assert res.sup_residual <= 0.02
