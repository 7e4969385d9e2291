"""Right-hand sides, RK4 and the simulation driver."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .bathymetry import Bathymetry, Params, State, positivity_check, validate_depth
from .diagnostics import DiagnosticsRecord, DiagnosticsTracker
from .elliptic import TbOperator, helmholtz_solve
from .grid import Grid, dealias, spectral_derivative

ABORT_POSITIVITY = "ABORT_POSITIVITY"
ABORT_BLOWUP = "ABORT_BLOWUP"


class SystemKind(enum.Enum):
    BP_REGULARIZED = "bp"
    BPW = "bpw"

    @classmethod
    def parse(cls, name: str) -> "SystemKind":
        key = name.strip().lower().replace("-", "_")
        aliases = {"bp": cls.BP_REGULARIZED, "bp_regularized": cls.BP_REGULARIZED, "bpw": cls.BPW}
        if key not in aliases:
            raise ValueError(f"unknown system {name!r}; expected bp or bpw")
        return aliases[key]


class SimulationAbort(RuntimeError):
    def __init__(self, code: str, message: str, t: float = 0.0):
        super().__init__(f"{code}: {message} (t={t:.6g})")
        self.code = code
        self.t = t


Rhs = Callable[[State], tuple]


def bp_rhs(state: State, bath: Bathymetry, p: Params, op: TbOperator):
    """Regularized Peregrine system: Helmholtz(nu) on the mass flux, ``T_b^{-1}`` on the momentum."""
    g = bath.grid
    flux = dealias(g, bath.h_b * state.u + p.eps * state.u * state.zeta)
    dzeta = helmholtz_solve(g, -spectral_derivative(g, flux), p.nu)
    w = state.zeta + 0.5 * p.eps * dealias(g, state.u**2)
    du = op.solve(-dealias(g, bath.h_b * spectral_derivative(g, w)))
    return dzeta, du


def bpw_rhs(state: State, bath: Bathymetry, p: Params):
    """Small-bottom system: ``zeta_t = -(h u)_x``, ``u_t = -(1 - mu/3 d^2)^{-1} (zeta + eps u^2/2)_x``."""
    g = bath.grid
    h = 1.0 + p.eps * state.zeta - bath.beta * bath.b
    dzeta = -spectral_derivative(g, dealias(g, h * state.u))
    w = state.zeta + 0.5 * p.eps * dealias(g, state.u**2)
    du = helmholtz_solve(g, -spectral_derivative(g, w), p.mu / 3.0)
    return dzeta, du


def _finite(*arrays) -> bool:
    return all(np.all(np.isfinite(a)) for a in arrays)


def rk4_step(state: State, rhs: Rhs, dt: float) -> State:
    """Classical four-stage step. ``dt < 0`` integrates backwards."""
    if not (np.isfinite(dt) and dt != 0):
        raise ValueError(f"time step must be finite and non-zero, got {dt}")
    z, u, t = state.zeta, state.u, state.t

    def stage(zz, uu, tt):
        k = rhs(State(zz, uu, max(tt, 0.0)))
        if not _finite(*k):
            raise SimulationAbort(ABORT_BLOWUP, "non-finite stage value", t)
        return k

    k1z, k1u = stage(z, u, t)
    k2z, k2u = stage(z + 0.5 * dt * k1z, u + 0.5 * dt * k1u, t + 0.5 * dt)
    k3z, k3u = stage(z + 0.5 * dt * k2z, u + 0.5 * dt * k2u, t + 0.5 * dt)
    k4z, k4u = stage(z + dt * k3z, u + dt * k3u, t + dt)
    zn = z + dt / 6.0 * (k1z + 2 * k2z + 2 * k3z + k4z)
    un = u + dt / 6.0 * (k1u + 2 * k2u + 2 * k3u + k4u)
    if not _finite(zn, un):
        raise SimulationAbort(ABORT_BLOWUP, "non-finite state after step", t)
    tn = t + dt
    if -1e-12 < tn < 0:
        tn = 0.0
    return State(zn, un, tn)


@dataclass
class Trajectory:
    grid: Grid
    bath: Bathymetry
    params: Params
    kind: SystemKind
    states: list = field(default_factory=list)
    records: list = field(default_factory=list)
    s_list: tuple = (0.0, 1.0)
    stride: int = 1

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.states])

    @property
    def final(self) -> State:
        return self.states[-1]


def make_rhs(kind: SystemKind, bath: Bathymetry, p: Params, op: TbOperator | None = None) -> Rhs:
    if kind is SystemKind.BPW:
        return lambda s: bpw_rhs(s, bath, p)
    if op is None:
        op = TbOperator(bath, p.mu, discretization="spectral")
    return lambda s: bp_rhs(s, bath, p, op)


def simulate(
    initial: State,
    kind: SystemKind,
    bath: Bathymetry,
    p: Params,
    *,
    stride: int = 1,
    s_list: Sequence[float] = (0.0, 1.0),
    diagnostics: bool = True,
    op: TbOperator | None = None,
    cfl: float = 0.5,
) -> Trajectory:
    """Integrate from ``initial`` to ``p.t_end`` with fixed ``p.dt``.

    One diagnostics record is kept per step (plus one for the initial state);
    states are kept every ``stride`` steps and at the final time.
    """
    g = bath.grid
    if initial.zeta.shape != (g.M,):
        raise ValueError("initial state does not live on the bathymetry grid")
    if p.dt > cfl * g.dx:
        raise ValueError(f"dt={p.dt:g} violates the guard dt <= {cfl:g} dx = {cfl * g.dx:g}")
    if stride < 1:
        raise ValueError("stride must be >= 1")
    depth = validate_depth(bath, p.h0)
    if not depth.passed:
        raise SimulationAbort(ABORT_POSITIVITY, f"bottom too shallow: {depth}", initial.t)
    hmin = positivity_check(initial, bath, p.eps)
    if hmin <= 0:
        raise SimulationAbort(ABORT_POSITIVITY, f"initial height not positive (min h = {hmin:.4g})", initial.t)

    rhs = make_rhs(kind, bath, p, op)
    traj = Trajectory(g, bath, p, kind, s_list=tuple(s_list), stride=stride)
    tracker = DiagnosticsTracker(bath, p, initial, s_list) if diagnostics else None
    state = initial
    traj.states.append(state)
    if tracker:
        traj.records.append(tracker.observe(state))
    n = p.n_steps
    for i in range(1, n + 1):
        state = rk4_step(state, rhs, p.dt)
        state = State(state.zeta, state.u, initial.t + i * p.dt)  # no drift in t
        hmin = positivity_check(state, bath, p.eps)
        if hmin <= 0:
            raise SimulationAbort(ABORT_POSITIVITY, f"height reached {hmin:.4g}", state.t)
        if tracker:
            traj.records.append(tracker.observe(state))
        if i % stride == 0 or i == n:
            traj.states.append(state)
    return traj


def mass(grid: Grid, state: State) -> float:
    return grid.integrate(state.zeta)


def records_table(records: Sequence[DiagnosticsRecord]) -> np.ndarray:
    return np.array([r.row() for r in records])
