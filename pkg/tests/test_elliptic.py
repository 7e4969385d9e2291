import math

import numpy as np
import pytest
from scipy.integrate import quad

from bpwave.bathymetry import Bathymetry, make_bathymetry, periodic_gaussian
from bpwave.elliptic import (
    NotPositiveDefinite,
    TbOperator,
    apply_Tb,
    apply_Tb_expanded,
    coercivity_constant,
    coercivity_form,
    helmholtz_solve,
    kernel_Kmu,
    kernel_kmu_derivative,
    solve_Tb,
)
from bpwave.grid import Grid, sobolev_norm
from helpers import band_limited

MU = 0.1
TWO_PI = 2 * np.pi


def flat(grid):
    return Bathymetry(grid, np.zeros(grid.M), 0.0, name="flat")


def bump(grid, beta=0.2):
    return make_bathymetry(grid, "gaussian-bump", beta, width=1.0, center=0.5 * grid.L)


@pytest.fixture(params=["fd", "spectral"])
def disc(request):
    return request.param


class TestApply:
    def test_flat_eigenfunction(self, disc):
        g = Grid(TWO_PI, 256)
        k = 3
        op = TbOperator(flat(g), MU, disc)
        out = apply_Tb(op, np.sin(k * g.x))
        lam = 1 + MU * k**2 / 3
        tol = 1e-12 if disc == "spectral" else MU / 3 * k**4 * g.dx**2 / 12 * 1.01
        assert np.max(np.abs(out - lam * np.sin(k * g.x))) <= tol

    def test_constant(self, disc):
        g = Grid(TWO_PI, 64)
        assert np.allclose(TbOperator(flat(g), MU, disc).apply(np.ones(g.M)), 1.0, atol=1e-13)

    def test_fd_matches_expanded_operator(self, rng):
        # second-order agreement: error falls ~4x per halving of dx
        errs = []
        for M in (128, 256, 512):
            g = Grid(16.0, M)
            bath = bump(g)
            v = np.cos(TWO_PI * g.x / g.L) + 0.5 * np.sin(3 * TWO_PI * g.x / g.L)
            ref = apply_Tb_expanded(bath, MU, v)
            errs.append(np.max(np.abs(TbOperator(bath, MU, "fd").apply(v) - ref)) / np.max(np.abs(ref)))
        assert errs[0] / errs[1] > 3.5 and errs[1] / errs[2] > 3.5

    def test_spectral_matches_expanded_operator(self):
        g = Grid(16.0, 256)
        bath = bump(g)
        v = periodic_gaussian(g, 6.0, 1.5)
        ref = apply_Tb_expanded(bath, MU, v)
        assert np.max(np.abs(TbOperator(bath, MU, "spectral").apply(v) - ref)) < 1e-10


class TestSolve:
    def test_flat_eigenpair(self, disc):
        g = Grid(TWO_PI, 256)
        op = TbOperator(flat(g), MU, disc)
        if disc == "fd":
            lam = 1 + MU / 3 * (2 - 2 * math.cos(4 * g.dx)) / g.dx**2
        else:
            lam = 1 + MU * 16 / 3
        assert np.max(np.abs(solve_Tb(op, lam * np.sin(4 * g.x)) - np.sin(4 * g.x))) < 1e-12

    def test_constant(self, disc):
        g = Grid(TWO_PI, 64)
        assert np.allclose(TbOperator(flat(g), MU, disc).solve(np.full(g.M, 2.5)), 2.5, atol=1e-13)

    def test_dense_lu_agreement(self, disc, rng):
        g = Grid(16.0, 256)
        op = TbOperator(bump(g, 0.3), MU, disc)
        f = band_limited(g, rng, kmax=30)
        u = op.solve(f)
        assert np.max(np.abs(u - np.linalg.solve(op.matrix(), f))) < 1e-8
        assert np.linalg.norm(op.apply(u) - f) <= 1e-10 * np.linalg.norm(f)

    def test_spectral_uses_few_iterations(self, rng):
        g = Grid(16.0, 512)
        op = TbOperator(bump(g, 0.3), MU, "spectral")
        op.solve(band_limited(g, rng))
        assert 0 < op.last_iterations <= 10

    def test_refuses_non_positive_operator(self):
        g = Grid(16.0, 128)
        with pytest.raises(NotPositiveDefinite):
            TbOperator(Bathymetry(g, np.ones(g.M), 1.5), MU)

    def test_bad_arguments(self):
        g = Grid(16.0, 64)
        with pytest.raises(ValueError):
            TbOperator(flat(g), 0.0)
        with pytest.raises(ValueError):
            TbOperator(flat(g), MU, "fem")


class TestStructure:
    def test_fd_matrix_symmetric(self):
        g = Grid(16.0, 128)
        A = TbOperator(bump(g, 0.3), MU, "fd").matrix()
        assert np.max(np.abs(A - A.T)) <= 1e-13

    def test_self_adjoint(self, disc, rng):
        g = Grid(16.0, 256)
        op = TbOperator(make_bathymetry(g, "two-bumps", 0.25, width=1.2), MU, disc)
        for _ in range(100):
            u, v = band_limited(g, rng), band_limited(g, rng)
            a, b = g.inner(op.apply(u), v), g.inner(u, op.apply(v))
            assert abs(a - b) <= 1e-10 * max(abs(a), 1.0)

    def test_coercivity_constant(self, rng):
        g = Grid(16.0, 256)
        h0 = 0.5
        op = TbOperator(make_bathymetry(g, "ridge", 0.3, width=1.5), MU, "spectral")
        c = coercivity_constant(h0, MU)
        for _ in range(100):
            u = band_limited(g, rng)
            assert op.quadratic_form(u) >= 0.95 * c * sobolev_norm(g, u, 1) ** 2

    def test_smallest_eigenvalue_bound(self, disc):
        g = Grid(16.0, 128)
        op = TbOperator(bump(g, 0.3), MU, disc)
        assert op.smallest_eigenvalue() >= coercivity_constant(0.5, MU) - 1e-12

    def test_form_on_sine(self):
        g = Grid(TWO_PI, 128)
        op = TbOperator(flat(g), MU, "spectral")
        assert coercivity_form(op, np.sin(g.x)) == pytest.approx(math.pi + MU * math.pi / 3, rel=1e-12)
        assert coercivity_form(op, np.zeros(g.M)) == 0

    def test_form_identity(self, rng):
        g = Grid(16.0, 256)
        op = TbOperator(bump(g, 0.3), MU, "spectral")
        for _ in range(100):
            u = band_limited(g, rng)
            q = op.quadratic_form(u)
            assert abs(op.coercivity_form(u) - q) <= 1e-6 * abs(q)


class TestHelmholtz:
    def test_identity(self, rng):
        g = Grid(TWO_PI, 64)
        f = rng.standard_normal(g.M)
        assert np.array_equal(helmholtz_solve(g, f, 0.0), f)

    def test_sine(self):
        g = Grid(TWO_PI, 64)
        assert np.max(np.abs(helmholtz_solve(g, np.sin(5 * g.x), 0.2) - np.sin(5 * g.x) / 6)) < 1e-14

    def test_negative_parameter(self):
        g = Grid(TWO_PI, 64)
        with pytest.raises(ValueError):
            helmholtz_solve(g, np.zeros(g.M), -1.0)

    def test_kernel_convolution(self):
        # (1 - mu/3 d^2)^{-1} f is convolution with K_mu; adaptive quadrature split at the cusp
        g = Grid(20.0, 1024)
        f = lambda y: sum(math.exp(-(((y - 8.0 + k * g.L) / 0.4) ** 2)) for k in (-1, 0, 1))  # noqa: E731
        spectral = helmholtz_solve(g, np.array([f(x) for x in g.x]), MU / 3)
        K = lambda d: sum(kernel_Kmu(MU, d + k * g.L) for k in (-2, -1, 0, 1, 2))  # noqa: E731
        for i in range(0, g.M, 64):
            x = g.x[i]
            left = quad(lambda y: K(x - y) * f(y), x - g.L / 2, x, epsabs=1e-12, limit=200)[0]
            right = quad(lambda y: K(x - y) * f(y), x, x + g.L / 2, epsabs=1e-12, limit=200)[0]
            assert abs(spectral[i] - (left + right)) < 1e-6


class TestKernels:
    @pytest.mark.parametrize("mu", [0.01, 0.1, 1.0])
    def test_identities(self, mu):
        k = math.sqrt(3 / mu)
        assert kernel_Kmu(mu, 0.0) == 0.5 * k
        mass = 2 * quad(lambda x: kernel_Kmu(mu, x), 0, np.inf, epsabs=1e-14, epsrel=1e-14)[0]
        assert mass == pytest.approx(1.0, abs=1e-10)
        l2 = math.sqrt(2 * quad(lambda x: kernel_Kmu(mu, x) ** 2, 0, np.inf, epsabs=1e-13, epsrel=1e-12)[0])
        assert l2 == pytest.approx(0.5 * (3 / mu) ** 0.25, abs=1e-8)

    @pytest.mark.parametrize("mu", [0.01, 0.1, 1.0])
    def test_derivative_kernel(self, mu):
        x = np.linspace(0.05, 3, 60)
        assert np.array_equal(kernel_kmu_derivative(mu, -x), -kernel_kmu_derivative(mu, x))
        assert kernel_kmu_derivative(mu, 0.0) == 0.0
        l1 = 2 * quad(lambda s: abs(kernel_kmu_derivative(mu, s)), 0, np.inf, epsabs=1e-13)[0]
        assert l1 == pytest.approx(math.sqrt(3 / mu), rel=1e-9)
        h = 1e-5
        fd = (kernel_Kmu(mu, x + h) - kernel_Kmu(mu, x - h)) / (2 * h)
        assert np.max(np.abs(fd - kernel_kmu_derivative(mu, x))) < 1e-8 * max(1.0, 1.5 / mu)

    def test_rejects_bad_mu(self):
        with pytest.raises(ValueError):
            kernel_Kmu(0.0, 1.0)
        with pytest.raises(ValueError):
            kernel_kmu_derivative(-1.0, 1.0)
