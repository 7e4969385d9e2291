import dataclasses
import math
from pathlib import Path

import numpy as np
import pytest

from bpwave.bathymetry import Bathymetry, Params, State, make_bathymetry, periodic_gaussian
from bpwave.dynamics import (
    ABORT_BLOWUP,
    ABORT_POSITIVITY,
    SimulationAbort,
    SystemKind,
    bp_rhs,
    bpw_rhs,
    mass,
    records_table,
    rk4_step,
    simulate,
)
from bpwave.elliptic import TbOperator, helmholtz_solve
from bpwave.grid import Grid, dealias, spectral_derivative
from bpwave.harness import get_scenario

GOLDEN = Path(__file__).parent / "golden" / "flat_gaussian_t1.csv"
TWO_PI = 2 * np.pi
EPS, MU = 0.1, 0.1


def flat(grid):
    return Bathymetry(grid, np.zeros(grid.M), 0.0, name="flat")


class TestRhs:
    def test_rest(self):
        g = Grid(20.0, 64)
        bath = make_bathymetry(g, "gaussian-bump", 0.2)
        p = Params(eps=EPS, mu=MU, beta=0.2)
        for dz, du in (bp_rhs(State.rest(g), bath, p, TbOperator(bath, MU, "spectral")),
                       bpw_rhs(State.rest(g), bath, p)):
            assert np.all(dz == 0) and np.all(du == 0)

    def test_bp_flat_eigenfunction(self):
        g = Grid(TWO_PI, 64)
        p = Params(eps=EPS, mu=MU)
        op = TbOperator(flat(g), MU, "spectral")
        dz, du = bp_rhs(State(np.sin(g.x), np.zeros(g.M)), flat(g), p, op)
        assert np.max(np.abs(dz)) < 1e-14
        assert np.max(np.abs(du + np.cos(g.x) / (1 + MU / 3))) < 1e-13

    def test_bp_recomposition(self):
        g = Grid(20.0, 128)
        bath = make_bathymetry(g, "two-bumps", 0.25, width=1.2)
        p = Params(eps=EPS, mu=MU, beta=0.25, nu=0.01)
        op = TbOperator(bath, MU, "spectral")
        zeta, u = periodic_gaussian(g, 8.0, 1.0), 0.4 * periodic_gaussian(g, 11.0, 1.5)
        dz, du = bp_rhs(State(zeta, u), bath, p, op)
        D = lambda f: spectral_derivative(g, f)  # noqa: E731
        hb = 1 - 0.25 * bath.b
        ref_z = helmholtz_solve(g, -D(dealias(g, hb * u + EPS * u * zeta)), 0.01)
        ref_u = op.solve(-dealias(g, hb * D(zeta + EPS / 2 * dealias(g, u * u))))
        assert np.max(np.abs(dz - ref_z)) < 1e-12
        assert np.max(np.abs(du - ref_u)) < 1e-12

    def test_bpw_recomposition(self):
        g = Grid(TWO_PI, 64)
        p = Params(eps=EPS, mu=MU)
        u = np.sin(g.x)
        dz, du = bpw_rhs(State(np.zeros(g.M), u), flat(g), p)
        assert np.max(np.abs(dz + np.cos(g.x))) < 1e-13
        ref = helmholtz_solve(g, -EPS / 2 * spectral_derivative(g, dealias(g, u * u)), MU / 3)
        assert np.max(np.abs(du - ref)) < 1e-14
        # u u_x = sin(2x)/2, and (1 - mu/3 d^2)^{-1} sin 2x = sin 2x / (1 + 4 mu/3)
        assert np.max(np.abs(du + EPS / 2 * np.sin(2 * g.x) / (1 + 4 * MU / 3))) < 1e-13


class TestRk4:
    def test_zero_rhs(self):
        s = State(np.arange(4.0), np.ones(4), 0.5)
        out = rk4_step(s, lambda st: (np.zeros(4), np.zeros(4)), 0.1)
        assert np.array_equal(out.zeta, s.zeta) and out.t == pytest.approx(0.6)

    def test_scalar_order(self):
        lam = -1.3
        errs = []
        for dt in (0.1, 0.05, 0.025):
            s = State(np.ones(3), np.ones(3))
            out = rk4_step(s, lambda st: (lam * st.zeta, lam * st.u), dt)
            errs.append(abs(out.zeta[0] - math.exp(lam * dt)))
        assert math.log2(errs[0] / errs[1]) == pytest.approx(5, abs=0.2)
        assert math.log2(errs[1] / errs[2]) == pytest.approx(5, abs=0.2)

    def test_nonfinite_stage_rejected(self):
        s = State(np.ones(3), np.ones(3))
        with pytest.raises(SimulationAbort) as exc:
            rk4_step(s, lambda st: (st.zeta * np.inf, st.u), 0.1)
        assert exc.value.code == ABORT_BLOWUP

    def test_bad_step(self):
        with pytest.raises(ValueError):
            rk4_step(State(np.ones(3), np.ones(3)), lambda st: (st.zeta, st.u), 0.0)


class TestSimulate:
    def test_rest_is_constant(self):
        g = Grid(20.0, 64)
        for kind in SystemKind:
            traj = simulate(State.rest(g), kind, flat(g), Params(eps=EPS, mu=MU, dt=0.05, t_end=1.0), stride=5)
            assert all(np.all(s.zeta == 0) and np.all(s.u == 0) for s in traj.states)
            assert len(traj.states) == 5
            assert np.all(np.diff(traj.times) > 0)

    def test_cfl_guard(self):
        g = Grid(20.0, 64)
        with pytest.raises(ValueError, match="guard"):
            simulate(State.rest(g), SystemKind.BPW, flat(g), Params(eps=EPS, mu=MU, dt=0.2, t_end=1.0))

    def test_positivity_gate(self):
        g = Grid(20.0, 64)
        zeta = np.zeros(g.M)
        zeta[5] = -1 / EPS
        with pytest.raises(SimulationAbort) as exc:
            simulate(State(zeta, zeta * 0), SystemKind.BP_REGULARIZED, flat(g), Params(eps=EPS, mu=MU, dt=0.01))
        assert exc.value.code == ABORT_POSITIVITY

    def test_shallow_bottom_gate(self):
        g = Grid(20.0, 64)
        bath = Bathymetry(g, np.ones(g.M), 0.8)
        with pytest.raises(SimulationAbort, match="ABORT_POSITIVITY"):
            simulate(State.rest(g), SystemKind.BPW, bath, Params(eps=EPS, mu=MU, dt=0.01))

    def test_system_parse(self):
        assert SystemKind.parse("BP") is SystemKind.BP_REGULARIZED
        assert SystemKind.parse("bpw") is SystemKind.BPW
        with pytest.raises(ValueError):
            SystemKind.parse("kdv")

    @pytest.mark.parametrize("kind", list(SystemKind))
    def test_mass_conservation(self, kind):
        g = Grid(32.0, 256)
        bath = make_bathymetry(g, "gaussian-bump", 0.2, width=2.0, center=21.0)
        p = Params(eps=EPS, mu=MU, beta=0.2, nu=0.01 if kind is SystemKind.BP_REGULARIZED else 0.0, dt=0.01, t_end=1.0)
        traj = simulate(State(periodic_gaussian(g, 16.0, 1.5), 0.3 * periodic_gaussian(g, 14.0, 2.0)), kind, bath, p,
                        diagnostics=False, stride=10)
        m0 = mass(g, traj.states[0])
        assert max(abs(mass(g, s) - m0) for s in traj.states) <= 1e-10 * max(1.0, abs(m0))

    def test_bp_equals_bpw_on_flat_bottom(self):
        g = Grid(32.0, 256)
        p = Params(eps=EPS, mu=MU, dt=0.01, t_end=1.0)
        init = State(periodic_gaussian(g, 16.0, 1.5), 0.2 * periodic_gaussian(g, 12.0, 2.0))
        a = simulate(init, SystemKind.BPW, flat(g), p, diagnostics=False).final
        b = simulate(init, SystemKind.BP_REGULARIZED, flat(g), p, diagnostics=False).final
        assert np.max(np.abs(a.zeta - b.zeta)) < 1e-9 and np.max(np.abs(a.u - b.u)) < 1e-9

    def test_time_reversal(self):
        g = Grid(32.0, 256)
        bath = make_bathymetry(g, "gaussian-bump", 0.2, width=2.0, center=21.0)
        p = Params(eps=EPS, mu=MU, beta=0.2)
        rhs = lambda s: bpw_rhs(s, bath, p)  # noqa: E731
        errs = []
        for dt in (0.04, 0.02):
            s0 = State(periodic_gaussian(g, 16.0, 1.5), np.zeros(g.M))
            s = s0
            n = round(1.0 / dt)
            for _ in range(n):
                s = rk4_step(s, rhs, dt)
            for _ in range(n):
                s = rk4_step(s, rhs, -dt)
            errs.append(np.max(np.abs(s.zeta - s0.zeta)) + np.max(np.abs(s.u - s0.u)))
        assert errs[1] < 1e-7
        assert math.log2(errs[0] / errs[1]) > 3.5

    def test_dispersion_relation(self):
        # tiny standing wave: zeta = A cos(kx) cos(omega t)
        g = Grid(20.0, 128)
        k = TWO_PI * 3 / g.L
        omega = k / math.sqrt(1 + MU * k**2 / 3)
        period = TWO_PI / omega
        p = Params(eps=EPS, mu=MU, dt=period / 400, t_end=2 * period)
        traj = simulate(State(1e-4 * np.cos(k * g.x), np.zeros(g.M)), SystemKind.BPW, flat(g), p, diagnostics=False)
        amp = np.array([g.inner(s.zeta, np.cos(k * g.x)) for s in traj.states])
        t = traj.times
        crossings = [t[i] - amp[i] * (t[i + 1] - t[i]) / (amp[i + 1] - amp[i])
                     for i in range(len(t) - 1) if amp[i] * amp[i + 1] < 0]
        measured = math.pi / np.mean(np.diff(crossings))
        assert len(crossings) == 4
        assert measured == pytest.approx(omega, rel=0.01)

    def test_doubling_period_changes_nothing(self):
        # the pulse stays far from the wrap, so a twice longer torus gives the same solution
        sc = dataclasses.replace(get_scenario("flat-gaussian"), dt=0.01)
        small = dataclasses.replace(sc, L=32.0, M=256)
        big = dataclasses.replace(sc, L=64.0, M=512)
        fa = small.run().final
        fb = big.run().final
        # align on the pulse centre
        xa = small.grid().x - 16.0
        xb = big.grid().x - 32.0
        sel = np.abs(xb) < 16.0
        zb = fb.zeta[sel]
        za = np.interp(xb[sel], xa, fa.zeta)
        assert np.max(np.abs(za - zb)) < 1e-6

    def test_golden_reference_run(self):
        data = np.loadtxt(GOLDEN, delimiter=",", skiprows=1)
        traj = get_scenario("flat-gaussian").run()
        f = traj.final
        assert np.max(np.abs(f.zeta[::8] - data[:, 1])) < 1e-10
        assert np.max(np.abs(f.u[::8] - data[:, 2])) < 1e-10
        # qualitative: symmetric pulse splitting, u odd about the centre
        c = traj.grid.M // 2
        assert np.max(np.abs(f.zeta[c + 1:c + 100] - f.zeta[c - 1:c - 100:-1])) < 1e-10
        assert np.max(np.abs(f.u[c + 1:c + 100] + f.u[c - 1:c - 100:-1])) < 1e-10
        assert records_table(traj.records).shape == (1001, 11)

    def test_golden_agrees_with_finer_grid(self):
        data = np.loadtxt(GOLDEN, delimiter=",", skiprows=1)
        fine = dataclasses.replace(get_scenario("flat-gaussian"), M=1024).run().final
        assert np.max(np.abs(fine.zeta[::16] - data[:, 1])) < 1e-8

    def test_packets_separate(self):
        sc = dataclasses.replace(get_scenario("flat-gaussian"), M=256, dt=0.05, t_end=8.0)
        f = sc.run().final
        g = sc.grid()
        right = g.x > 32.0
        peak = g.x[right][np.argmax(f.zeta[right])] - 32.0
        assert 6.5 < peak < 9.0  # unit linear speed, slightly slowed by dispersion
        assert f.zeta[g.M // 2] < 0.2 * np.max(f.zeta)
