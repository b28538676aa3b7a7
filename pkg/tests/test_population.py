import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mfgstop._validation import ContractViolation, time_grid
from mfgstop.distributions import uniform_shifted_family
from mfgstop.equilibrium import build_curve
from mfgstop.model import (MonotonePath, additive_model, constant_rate, linear_function,
                           path_from_function, power_function, step_function)
from mfgstop.population import (PopulationConfig, agent_uniforms, fixed_point_residual, payoff_audit,
                                simulate, sunspot_game)

GRID = time_grid(1.0, 0.01)


def toy(n=10_000, seed=42, c=0.5, **kw):
    x = MonotonePath(GRID, np.zeros(GRID.size))
    cdf = uniform_shifted_family(1.0, linear_function())
    cfg = PopulationConfig(n, seed, cdf, additive_model(c), constant_rate(1.0), x, **kw)
    return cfg, build_curve(cdf, cfg.model, cfg.rate, x)


def common_noise(n=10_000, seed=3):
    grid = np.linspace(0.0, 2.0, 200)
    x = path_from_function(power_function(2.0, 1.0, 2.0), grid)
    cdf = uniform_shifted_family(1.0, lambda t: 0.0)
    cfg = PopulationConfig(n, seed, cdf, additive_model(0.5, True), constant_rate(1.0), x)
    return cfg, build_curve(cdf, cfg.model, cfg.rate, x)


def tautological(n=10_000, seed=5):
    grid = time_grid(1.2, 0.01)
    cdf = uniform_shifted_family(1.0, step_function(1.0))
    cfg = PopulationConfig(n, seed, cdf, additive_model(1.0), constant_rate(1.0),
                           MonotonePath(grid, np.zeros(grid.size)))
    return cfg, grid


def test_uniforms_independent_of_population_size():
    a = agent_uniforms(9, np.arange(1000))
    b = agent_uniforms(9, np.arange(37, 538))
    np.testing.assert_array_equal(a[37:538], b)
    assert np.all((a > 0) & (a < 1))
    assert not np.array_equal(a, agent_uniforms(9, np.arange(1000), stream=1))
    assert not np.array_equal(a, agent_uniforms(10, np.arange(1000)))


def test_toy_lln():
    cfg, curve = toy()
    res = simulate(cfg, curve)
    assert res.sup_residual <= 0.02
    np.testing.assert_allclose(curve.selected, np.minimum(2 * GRID, 1.0), atol=1e-12)
    assert np.all(np.diff(res.empirical_path) >= 0)
    assert 0 <= res.empirical_path.min() and res.empirical_path.max() <= 1
    assert np.max(res.payoff_gaps) <= 1e-12


def test_counting_example():
    # four agents stopping at 0.1, 0.2, 0.3, 0.4
    grid = np.array([0.0, 0.1, 0.2, 0.3, 0.4])
    res = sunspot_game(4, MonotonePath(grid, np.array([0.0, 0.25, 0.5, 0.75, 1.0])), 1.0)
    np.testing.assert_allclose(res.stopping_times, [0.1, 0.2, 0.3, 0.4])
    k = int(np.searchsorted(grid, 0.25, side="right")) - 1
    assert res.empirical_path[k] == 0.5


def test_empirical_proportion_counts_stopping_times():
    cfg, curve = toy(n=2000)
    res = simulate(cfg, curve)
    for t in (0.0, 0.25, 0.5):
        k = int(np.searchsorted(GRID, t, side="right")) - 1
        assert res.empirical_path[k] == np.mean(res.stopping_times <= GRID[k])


@pytest.mark.parametrize("kw", [dict(n_jobs=3), dict(chunk_size=777), dict(chunk_size=97, n_jobs=2)])
def test_bitwise_reproducible(kw):
    cfg, curve = toy(n=3000)
    ref = simulate(cfg, curve)
    cfg2, _ = toy(n=3000, **kw)
    other = simulate(cfg2, curve)
    assert np.array_equal(ref.stopping_times, other.stopping_times)
    assert np.array_equal(ref.empirical_path, other.empirical_path)
    assert np.array_equal(ref.payoff_gaps, other.payoff_gaps)


def test_agents_do_not_depend_on_n():
    cfg_small, curve = toy(n=500)
    cfg_big, _ = toy(n=5000)
    a, b = simulate(cfg_small, curve), simulate(cfg_big, curve)
    np.testing.assert_array_equal(a.stopping_times, b.stopping_times[:500])


def test_common_noise_lln():
    cfg, curve = common_noise()
    res = simulate(cfg, curve)
    np.testing.assert_allclose(curve.selected, np.minimum(2 * cfg.x_path.values, 1.0), atol=1e-9)
    assert res.sup_residual <= 0.02
    assert payoff_audit(cfg, curve, 100) <= 1e-12


def test_candidate_residuals():
    cfg, curve = toy()
    assert fixed_point_residual(cfg, curve.selected) <= 0.02
    assert fixed_point_residual(cfg, np.zeros(GRID.size)) == pytest.approx(1.0, abs=0.02)


@pytest.mark.parametrize("shape", ["half", "square", "step"])
def test_tautological_candidates(shape):
    cfg, grid = tautological()
    f = {"half": lambda t: 0.5 * t, "square": lambda t: t * t, "step": lambda t: 0.3 + 0.2 * (t >= 0.5)}[shape]
    cand = np.where(grid < 1.0, [f(t) for t in grid], 1.0)
    assert fixed_point_residual(cfg, cand) <= 0.02


def test_never_stopping_agent_aborts():
    x = MonotonePath(GRID, np.zeros(GRID.size))
    cfg = PopulationConfig(100, 1, uniform_shifted_family(1.0, lambda t: 0.0), additive_model(0.0),
                           constant_rate(5.0), x)
    with pytest.raises(ContractViolation) as exc:
        simulate(cfg, np.zeros(GRID.size))
    assert exc.value.where == "population.simulate" and "agent 0" in str(exc.value)


def test_invalid_paths_rejected():
    cfg, _ = toy(n=10)
    with pytest.raises(ValueError, match="shape"):
        simulate(cfg, np.zeros(5))
    with pytest.raises(ValueError, match="nondecreasing"):
        simulate(cfg, np.linspace(1, 0, GRID.size))


def test_audit_examples():
    cfg, curve = toy()
    assert payoff_audit(cfg, curve, 100) <= 1e-12
    shifted = np.minimum(curve.selected + 0.2, 1.0)
    taus = simulate(cfg, shifted).stopping_times
    assert payoff_audit(cfg, curve, 100, stopping_times=taus) > 0
    with pytest.raises(ValueError, match="sample_size"):
        payoff_audit(cfg, curve, 10**5)


class TestSunspot:
    def test_index_stopping_times(self):
        grid = time_grid(1.0, 0.01)
        res = sunspot_game(100, path_from_function(lambda t: t, grid), 1.0)
        i = (np.arange(100) + 1) / 100
        np.testing.assert_allclose(res.stopping_times, i, atol=1e-12)
        np.testing.assert_allclose(res.rho, np.minimum(grid, 1.0), atol=1e-12)
        assert res.sup_residual == 0.0 and np.max(res.payoff_gaps) <= 1e-12

    def test_floor_example(self):
        grid = np.array([0.0, 1.0])
        res = sunspot_game(10, MonotonePath(grid, np.array([0.1, 0.37])), 1.0)
        assert res.rho[-1] == pytest.approx(0.3)

    def test_instant_stoppers(self):
        grid = time_grid(1.0, 0.1)
        res = sunspot_game(1000, path_from_function(lambda t: 0.2 + t, grid), 1.0)
        assert np.mean(res.stopping_times == 0.0) == pytest.approx(0.2, abs=1e-3)

    def test_continuum_limit(self):
        grid = time_grid(1.0, 0.01)
        res = sunspot_game(10**6, path_from_function(lambda t: t, grid), 1.0)
        assert np.max(np.abs(res.rho - np.minimum(grid, 1.0))) <= 1e-6
        assert np.max(res.payoff_gaps) <= 1e-12


@settings(max_examples=30, deadline=None)
@given(n=st.integers(1, 400), seed=st.integers(0, 2**63 - 1))
def test_empirical_path_is_valid(n, seed):
    cfg, curve = toy(n=n, seed=seed)
    res = simulate(cfg, curve)
    assert np.all(np.diff(res.empirical_path) >= 0)
    assert res.empirical_path[0] >= 0 and res.empirical_path[-1] <= 1
    assert res.sup_residual >= 0
