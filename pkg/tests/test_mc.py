import math
import warnings

import numpy as np
import pytest

from ratevol.chf import bond_cir, cir_pq
from ratevol.errors import HeavyTailWarning, ValidationError
from ratevol.mc import BLOCK_SIZE, McConfig, PathEnsemble, mc_chf, mc_price, simulate, simulate_t_forward_cir
from ratevol.models import CirParams, MarketState, reference_params


def ones(x):
    return np.ones_like(x)


class TestConfig:
    @pytest.mark.parametrize("kw", [dict(n_paths=0), dict(steps_per_year=0), dict(scheme="milstein"),
                                    dict(jacobi_eps=0.7), dict(n_threads=0)])
    def test_invalid(self, kw):
        with pytest.raises(ValidationError):
            McConfig(**kw)

    def test_step_count(self):
        assert McConfig(steps_per_year=250).n_steps(0.25) == 63
        assert McConfig(steps_per_year=250).n_steps(1.0) == 250
        assert McConfig(steps_per_year=250).n_steps(1e-6) == 1


class TestSimulate:
    def test_single_path_reproducible(self, cir, cir_state):
        a = simulate(cir, cir_state, 1.0, McConfig(n_paths=1, seed=5))
        b = simulate(cir, cir_state, 1.0, McConfig(n_paths=1, seed=5))
        assert a.x_T.tobytes() == b.x_T.tobytes() and a.y_T.tobytes() == b.y_T.tobytes()

    def test_thread_count_invariance(self, jacobi, jacobi_state):
        n = 2 * BLOCK_SIZE + 123
        a = simulate(jacobi, jacobi_state, 0.5, McConfig(n_paths=n, n_threads=1))
        b = simulate(jacobi, jacobi_state, 0.5, McConfig(n_paths=n, n_threads=3))
        assert a.x_T.tobytes() == b.x_T.tobytes() and a.a_T.tobytes() == b.a_T.tobytes()

    def test_nearly_deterministic_driver(self, cir_state):
        p = CirParams(kappa=0.5, theta=0.05, delta=1e-9, gamma=0.04, rho=0.0)
        st = MarketState(0.0, cir_state.x, 0.08)
        ens = simulate(p, st, 2.0, McConfig(n_paths=4, steps_per_year=2000))
        exact = 0.05 + 0.03 * math.exp(-1.0)
        assert np.allclose(ens.y_T, exact, atol=2e-5)

    def test_discounted_asset_is_a_martingale(self, cir, cir_state):
        ens = simulate(cir, cir_state, 1.0, McConfig(n_paths=40_000, seed=8, scheme="reflection"))
        est, se = mc_price(ens, lambda x: np.exp(x - cir_state.x))
        assert abs(est - 1.0) < 3 * se

    def test_cir_state_space_and_truncation_rate(self, cir, cir_state):
        ens = simulate(cir, cir_state, 1.0, McConfig(n_paths=20_000))
        assert np.all(ens.a_T >= 0)
        assert ens.boundary_fraction < 0.05
        assert np.all(np.isfinite(ens.x_T))

    def test_jacobi_clamp(self, jacobi, jacobi_state):
        ens = simulate(jacobi, jacobi_state, 1.0, McConfig(n_paths=5000))
        eps = ens.config.jacobi_eps
        assert np.all((ens.y_T >= eps) & (ens.y_T <= 1 - eps))
        assert 0.0 <= ens.boundary_fraction < 1e-3

    def test_requires_future_maturity(self, cir, cir_state):
        with pytest.raises(ValidationError):
            simulate(cir, cir_state, 0.0)


class TestEstimators:
    def test_bond(self, cir, cir_state):
        ens = simulate(cir, cir_state, 1.0, McConfig(n_paths=40_000, seed=9))
        est, se = mc_price(ens, ones)
        assert abs(est - bond_cir(cir, 0.0, 0.05, 1.0)) < 3 * se

    def test_zero_payoff(self, cir, cir_state):
        ens = simulate(cir, cir_state, 0.25, McConfig(n_paths=100))
        assert mc_price(ens, np.zeros_like) == (0.0, 0.0)

    def test_chf_at_zero_is_the_bond(self, cir, cir_state):
        ens = simulate(cir, cir_state, 0.5, McConfig(n_paths=2000))
        est, se = mc_chf(ens, 0.0, cir_state.x)
        b, sb = mc_price(ens, ones)
        assert est == pytest.approx(b, rel=1e-14) and se == pytest.approx(sb, rel=1e-10)

    def test_stderr_scales_with_paths(self, cir, cir_state):
        call = lambda x: np.maximum(np.exp(x) - 100.0, 0.0)  # noqa: E731
        _, s1 = mc_price(simulate(cir, cir_state, 0.25, McConfig(n_paths=20_000, seed=2)), call)
        _, s2 = mc_price(simulate(cir, cir_state, 0.25, McConfig(n_paths=40_000, seed=3)), call)
        assert s1 / s2 == pytest.approx(math.sqrt(2), rel=0.2)

    def test_seeds_consistent(self, jacobi, jacobi_state):
        call = lambda x: np.maximum(np.exp(x) - 100.0, 0.0)  # noqa: E731
        a, sa = mc_price(simulate(jacobi, jacobi_state, 0.5, McConfig(n_paths=20_000, seed=1)), call)
        b, sb = mc_price(simulate(jacobi, jacobi_state, 0.5, McConfig(n_paths=20_000, seed=2)), call)
        assert abs(a - b) < 4 * math.hypot(sa, sb)

    def test_heavy_tail_warning(self, cir, cir_state):
        ens = simulate(cir, cir_state, 0.25, McConfig(n_paths=1000))
        a = ens.a_T.copy()
        a[::2] = 50.0  # half the samples vanish, a few dominate
        a[1:50:2] = -3.0
        skewed = PathEnsemble(x_T=ens.x_T, y_T=ens.y_T, a_T=a, c_T=ens.c_T, config=ens.config,
                              model=ens.model, state=ens.state, T=ens.T, n_steps=ens.n_steps)
        with pytest.warns(HeavyTailWarning):
            mc_chf(skewed, 0.0, cir_state.x)

    def test_no_warning_on_benign_sample(self, cir, cir_state):
        ens = simulate(cir, cir_state, 0.25, McConfig(n_paths=5000))
        with warnings.catch_warnings():
            warnings.simplefilter("error", HeavyTailWarning)
            mc_chf(ens, 0.5 - 1.5j, cir_state.x)


class TestTForward:
    def test_martingale(self, cir, cir_state):
        te = simulate_t_forward_cir(cir, cir_state, 1.0, McConfig(n_paths=40_000, scheme="reflection", seed=4))
        est, se = te.mean_and_stderr()
        assert te.forward_0 == pytest.approx(100.0 / bond_cir(cir, 0, 0.05, 1.0))
        assert abs(est - te.forward_0) < 3 * se

    def test_covariation_without_correlation(self, cir_state):
        te = simulate_t_forward_cir(reference_params(0.0), cir_state, 1.0, McConfig(n_paths=20_000, seed=6))
        diff = te.covariation - te.predicted_covariation
        assert abs(diff.mean()) < 3 * diff.std(ddof=1) / math.sqrt(diff.size)
        assert te.predicted_covariation.mean() > 0

    def test_q_vanishes_at_maturity(self, cir):
        assert cir_pq(cir, 0.0) == (0.0, 0.0)

    def test_jacobi_not_supported(self, jacobi, jacobi_state):
        with pytest.raises(TypeError):
            simulate_t_forward_cir(jacobi, jacobi_state, 1.0)
