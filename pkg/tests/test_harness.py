import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from bpwave.bathymetry import Params
from bpwave.grid import Grid, sobolev_norm
from bpwave.harness import (
    BATHYMETRY_SCENARIOS,
    SCENARIOS,
    bona_smith_data,
    bona_smith_experiment,
    bona_smith_setup,
    bona_smith_truncate,
    get_scenario,
    mollifier_weights,
    mollify,
    rho,
    truncation_growth_ok,
    weak_limit_experiment,
    weak_limit_recipe,
    weak_limit_setup,
)
from helpers import band_limited

TWO_PI = 2 * np.pi


class TestTruncation:
    def test_projection(self, rng):
        g = Grid(TWO_PI, 256)
        f = rng.standard_normal(g.M)
        once = bona_smith_truncate(g, f, 16)
        assert np.max(np.abs(bona_smith_truncate(g, once, 16) - once)) < 1e-13

    def test_band_limited_unchanged(self, rng):
        g = Grid(TWO_PI, 256)
        f = band_limited(g, rng, kmax=10)
        assert np.max(np.abs(bona_smith_truncate(g, f, 10) - f)) < 1e-13

    def test_high_mode_removed(self):
        g = Grid(TWO_PI, 128)
        assert np.max(np.abs(bona_smith_truncate(g, np.sin(9 * g.x), 8))) < 1e-14
        with pytest.raises(ValueError):
            bona_smith_truncate(g, np.sin(g.x), 0)

    @pytest.mark.parametrize("n", [8, 16, 32, 64])
    def test_growth_bound_on_rough_data(self, n):
        grid, _ = bona_smith_setup(M=512)
        for f in bona_smith_data(grid):
            for r in (1.0, 2.0):
                assert truncation_growth_ok(grid, f, n, 1.0, r)
                assert truncation_growth_ok(grid, f, n, 1.0, r, sharp=True)

    def test_growth_bound_fails_at_the_cutoff(self):
        # a single mode at |xi| = n has <xi> > n, so only the sharp factor holds
        g = Grid(TWO_PI, 128)
        f = np.sin(8 * g.x)
        assert not truncation_growth_ok(g, f, 8, 1.0, 1.0)
        assert truncation_growth_ok(g, f, 8, 1.0, 1.0, sharp=True)

    @given(st.integers(1, 40), st.floats(0.0, 3.0), st.floats(0.1, 3.0))
    def test_sharp_factor_always_holds(self, n, s, r):
        g = Grid(TWO_PI, 128)
        f = band_limited(g, np.random.default_rng(n), kmax=60)
        assert truncation_growth_ok(g, f, n, s, r, sharp=True)


class TestBonaSmith:
    def test_zero_data(self):
        grid, bath = bona_smith_setup(M=256)
        p = Params(eps=0.1, mu=0.1, beta=bath.beta, dt=0.01, t_end=0.1)
        z = np.zeros(grid.M)
        rep = bona_smith_experiment(z, z, bath, p, 1.0, [8, 16, 32], t_probe=0.1)
        assert rep.differences == [0.0, 0.0]
        assert rep.growth_bound_ok

    def test_bad_levels(self):
        grid, bath = bona_smith_setup(M=256)
        p = Params(eps=0.1, mu=0.1, beta=bath.beta, dt=0.01, t_end=0.1)
        z = np.zeros(grid.M)
        with pytest.raises(ValueError):
            bona_smith_experiment(z, z, bath, p, 1.0, [8])
        with pytest.raises(ValueError):
            bona_smith_experiment(z, z, bath, p, 1.0, [8, 12])


class TestMollifier:
    def test_unit_mass(self):
        mass = quad(lambda t: float(rho(t)), 0, 1, epsabs=1e-14)[0]
        assert mass == pytest.approx(1.0, abs=1e-12)
        assert rho(np.array([-0.1, 0.0, 1.0, 1.5])).tolist() == [0.0] * 4

    @pytest.mark.parametrize("n", [1, 4, 16])
    def test_weights(self, n):
        g = Grid(32.0, 2048)
        j, w = mollifier_weights(g, n)
        assert w.sum() == pytest.approx(1.0, abs=1e-14)
        assert np.all(w > 0) and np.all(j * g.dx < 1.0 / n)

    def test_rejects_unresolved_support(self):
        g = Grid(32.0, 256)
        with pytest.raises(ValueError):
            mollifier_weights(g, 4)
        with pytest.raises(ValueError):
            mollifier_weights(g, 1.5)

    def test_averaging(self, rng):
        g = Grid(32.0, 2048)
        f = rng.standard_normal(g.M)
        for n in (1, 4, 16):
            m = mollify(g, f, n)
            assert abs(m.mean() - f.mean()) < 1e-12
            assert m.max() <= f.max() + 1e-14 and m.min() >= f.min() - 1e-14
        assert np.allclose(mollify(g, np.full(g.M, 3.0), 2), 3.0, atol=1e-14)

    def test_matches_continuous_convolution(self):
        g = Grid(32.0, 4096)
        k = 2 * TWO_PI / g.L * 3
        n = 2
        m = mollify(g, np.sin(k * g.x), n)
        for i in range(0, g.M, 512):
            x = g.x[i]
            exact = quad(lambda y: n * float(rho(n * y)) * math.sin(k * (x - y)), 0, 1 / n, epsabs=1e-13)[0]
            assert abs(m[i] - exact) < 1e-9


@pytest.fixture(scope="module")
def small():
    grid, bath = weak_limit_setup(M=512)
    return grid, bath, Params(eps=0.1, mu=0.1, beta=bath.beta, dt=0.02, t_end=0.4)


class TestWeakLimit:
    def test_rest(self, small):
        grid, bath, p = small
        z = np.zeros(grid.M)
        rep = weak_limit_experiment(z, z, bath, p, [1, 2])
        assert rep.u_distances == [0.0] and rep.zeta_distances == [0.0]
        assert rep.bound_holds and rep.jensen_holds

    def test_smooth_data(self, small):
        grid, bath, p = small
        zeta, u = weak_limit_recipe(grid, "dimple")
        rep = weak_limit_experiment(zeta, u, bath, p, [1, 2, 4], recipe="dimple")
        assert rep.bound_holds and rep.jensen_holds
        assert all(v > 0 for v in rep.consistent_slack.values())
        assert rep.summary()["recipe"] == "dimple"
        assert len(rep.moments[4]) == 5

    def test_unknown_recipe(self, small):
        with pytest.raises(ValueError):
            weak_limit_recipe(small[0], "ramp")


class TestScenarios:
    def test_registry(self):
        assert {"rest", "flat-gaussian", "vacuum-start", *BATHYMETRY_SCENARIOS} <= set(SCENARIOS)
        for sc in SCENARIOS.values():
            d = sc.to_dict()
            assert d["name"] == sc.name
            state = sc.initial_state()
            assert state.zeta.shape == (sc.M,)
            assert sc.params().dt <= 0.5 * sc.grid().dx

    def test_unknown(self):
        with pytest.raises(KeyError, match="available"):
            get_scenario("tsunami")

    def test_overrides(self):
        sc = get_scenario("flat-gaussian")
        assert sc.params(dt=1e-4).dt == 1e-4
        assert sobolev_norm(sc.grid(), sc.initial_state().zeta, 0) > 0
