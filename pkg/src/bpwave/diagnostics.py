"""Scalar functionals and identities evaluated along simulated trajectories.

Conventions: ``H(t) = int (u^2/2 + sigma0(h)/eps^2 + (mu/6) u_x^2)`` is the
total entropy. For the small-bottom system it obeys
``dH/dt = -(beta/eps) int b_x u``; with a flat bottom it is conserved.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Sequence

import numpy as np

from .bathymetry import Bathymetry, Params, State, total_height
from .elliptic import helmholtz_solve
from .grid import Grid, dealias, sobolev_mu_norm, sobolev_norm, spectral_derivative
from .kernels import periodic_cubic_interp

if TYPE_CHECKING:  # pragma: no cover
    from .dynamics import Trajectory

# sigma0 ---------------------------------------------------------------------

_SERIES_RADIUS = 0.25
_SERIES_TERMS = 40
# sigma0(1+d) = sum_{k>=2} (-1)^k d^k / (k (k-1))
_SERIES_COEF = np.array([(-1.0) ** k / (k * (k - 1)) for k in range(2, _SERIES_TERMS + 2)])

# two-sided quadratic bounds on sigma0(1+x): c1 x^2 <= sigma0(1+x) <= x^2/c1 for
# -1 <= x < M, and x <= c2 x ln x <= sigma0(1+x) <= x^2/c2 for x >= M.
ESTA_M = 5.0
ESTA_C1 = 0.23
ESTA_C2 = 0.7
# sigma0(1+d) <= d^2 for d >= -1, hence int sigma0(h) <= BOUNDD_C int (eps zeta - beta b)^2
BOUNDD_C = 2.0


def sigma0(x):
    """``x ln x - x + 1`` with ``sigma0(0) = 1``; accurate near ``x = 1``."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 0) or not np.all(np.isfinite(x)):
        raise ValueError("sigma0 is defined on [0, inf) only")
    d = x - 1.0
    near = np.abs(d) <= _SERIES_RADIUS
    out = np.empty_like(x)
    pos = (x > 0) & ~near
    xp = x[pos]
    out[pos] = xp * np.log(xp) - xp + 1.0
    out[x == 0] = 1.0
    dn = d[near]
    acc = np.zeros_like(dn)
    for c in _SERIES_COEF[::-1]:
        acc = acc * dn + c
    out[near] = acc * dn * dn
    return out if out.ndim else float(out)


def entropy_density(h, u, eps):
    """``u^2/2 + sigma0(h)/eps^2``."""
    return 0.5 * np.asarray(u, dtype=float) ** 2 + sigma0(h) / eps**2


def _alpha(h):
    h = np.asarray(h, dtype=float)
    return np.where(h > 0, h * np.log(np.where(h > 0, h, 1.0)), 0.0)


def entropy_flux(h, u, eps):
    """``q(h, u) = h ln h u / eps + eps u^3 / 3``, normalized by ``q(1, 0) = 0``."""
    h = np.asarray(h, dtype=float)
    if np.any(h < 0):
        raise ValueError("entropy flux needs h >= 0")
    u = np.asarray(u, dtype=float)
    out = _alpha(h) * u / eps + eps * u**3 / 3.0
    return out if np.ndim(out) else float(out)


def compatibility_residual(h, u, eps) -> float:
    """Max norm of ``grad(eta) . Df - grad(q)`` for ``f = (eps h u, h/eps + eps u^2/2)``."""
    h = np.asarray(h, dtype=float)
    u = np.asarray(u, dtype=float)
    if np.any(h <= 0):
        raise ValueError("compatibility residual needs h > 0")
    lnh = np.log(h)
    eta_h, eta_u = lnh / eps**2, u
    # Jacobian of f: rows (f1, f2), columns (d/dh, d/du)
    f1_h, f1_u = eps * u, eps * h
    f2_h, f2_u = 1.0 / eps, eps * u
    q_h = (lnh + 1.0) * u / eps
    q_u = h * lnh / eps + eps * u**2
    r_h = eta_h * f1_h + eta_u * f2_h - q_h
    r_u = eta_h * f1_u + eta_u * f2_u - q_u
    return float(max(np.max(np.abs(r_h)), np.max(np.abs(r_u))))


# integrated functionals -------------------------------------------------------

def _height(state: State, bath: Bathymetry, eps: float):
    h = total_height(state.zeta, bath, eps)
    if np.min(h) < 0:
        raise ValueError(f"state leaves the admissible set: min h = {np.min(h):.4g} < 0")
    return h


def entropy_total(state: State, bath: Bathymetry, p: Params) -> float:
    g = bath.grid
    h = _height(state, bath, p.eps)
    ux = spectral_derivative(g, state.u)
    return g.integrate(entropy_density(h, state.u, p.eps) + p.mu / 6.0 * ux**2)


def orlicz_norm(zeta, bath: Bathymetry, eps: float) -> float:
    """``int sigma0(1 + eps zeta - beta b)``."""
    h = total_height(zeta, bath, eps)
    if np.min(h) < 0:
        raise ValueError(f"not in the Orlicz class: min h = {np.min(h):.4g} < 0")
    return bath.grid.integrate(sigma0(h))


def energy_Es(grid: Grid, state: State, s: float, mu: float, nu: float) -> float:
    """``|zeta|_{H^s}^2 + nu |zeta_x|_{H^s}^2 + |u|_{H^s}^2 + mu |u_x|_{H^s}^2``."""
    ez = sobolev_norm(grid, state.zeta, s) ** 2
    if nu > 0:
        ez += nu * sobolev_norm(grid, spectral_derivative(grid, state.zeta), s) ** 2
    return ez + sobolev_mu_norm(grid, state.u, s, mu) ** 2


def inequality_lhs(state: State, bath: Bathymetry, p: Params) -> float:
    """``|u|_{H^1_mu}^2 / 2 + int sigma0(h) / eps^2``."""
    g = bath.grid
    return 0.5 * sobolev_mu_norm(g, state.u, 0.0, p.mu) ** 2 + orlicz_norm(state.zeta, bath, p.eps) / p.eps**2


def inequality_rhs0(initial: State, bath: Bathymetry, p: Params) -> float:
    """Bracket of the entropy inequality at ``t = 0`` (multiply by ``e^t``)."""
    g = bath.grid
    return (
        sobolev_mu_norm(g, initial.u, 0.0, p.mu) ** 2
        + orlicz_norm(initial.zeta, bath, p.eps) / p.eps**2
        + (bath.beta / (2 * p.eps)) ** 2 * g.integrate(bath.b_x**2)
    )


def bottom_work(state: State, bath: Bathymetry) -> float:
    """``int b_x u``."""
    return bath.grid.inner(bath.b_x, state.u)


# per-step records -----------------------------------------------------------

@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    E_s: tuple
    entropy_H: float
    orlicz: float
    min_h: float
    balance_residual: float
    ineq_slack: float
    sup_zeta: float
    sup_u: float
    sup_ux: float
    bottom_work: float = field(default=0.0, compare=False)

    def row(self) -> list[float]:
        return [self.t, *(v for _, v in self.E_s), self.entropy_H, self.orlicz, self.min_h,
                self.balance_residual, self.ineq_slack, self.sup_zeta, self.sup_u, self.sup_ux]

    @staticmethod
    def header(s_list: Sequence[float]) -> list[str]:
        return ["t", *(f"E_s{s:g}" for s in s_list), "entropy_H", "orlicz", "min_h",
                "balance_residual", "ineq_slack", "sup_zeta", "sup_u", "sup_ux"]


class DiagnosticsTracker:
    """Builds one :class:`DiagnosticsRecord` per observed state.

    The balance residual of a record compares it with the previous one; the
    first record carries residual 0.
    """

    def __init__(self, bath: Bathymetry, p: Params, initial: State, s_list: Sequence[float] = (0.0, 1.0)):
        self.bath = bath
        self.p = p
        self.s_list = tuple(float(s) for s in s_list)
        self.rhs0 = inequality_rhs0(initial, bath, p)
        self._prev: DiagnosticsRecord | None = None

    def observe(self, state: State) -> DiagnosticsRecord:
        g, bath, p = self.bath.grid, self.bath, self.p
        H = entropy_total(state, bath, p)
        B = bottom_work(state, bath)
        res = 0.0
        if self._prev is not None:
            dt = state.t - self._prev.t
            res = balance_residual(self._prev.entropy_H, H, self._prev.bottom_work, B, dt, bath.beta, p.eps)
        ux = spectral_derivative(g, state.u)
        rec = DiagnosticsRecord(
            t=float(state.t),
            E_s=tuple((s, energy_Es(g, state, s, p.mu, p.nu)) for s in self.s_list),
            entropy_H=H,
            orlicz=orlicz_norm(state.zeta, bath, p.eps),
            min_h=float(np.min(total_height(state.zeta, bath, p.eps))),
            balance_residual=res,
            ineq_slack=self.rhs0 * math.exp(state.t) - inequality_lhs(state, bath, p),
            sup_zeta=float(np.max(np.abs(state.zeta))),
            sup_u=float(np.max(np.abs(state.u))),
            sup_ux=float(np.max(np.abs(ux))),
            bottom_work=B,
        )
        self._prev = rec
        return rec


def balance_residual(H0, H1, B0, B1, dt, beta, eps) -> float:
    """``|(H1 - H0)/dt + (beta/eps) (B0 + B1)/2| / max(1, H0)``."""
    r = (H1 - H0) / dt + beta / eps * 0.5 * (B0 + B1)
    return abs(r) / max(1.0, abs(H0))


def entropy_balance_residual(records: Sequence[DiagnosticsRecord]) -> float:
    """Worst balance residual over consecutive record pairs."""
    return max((r.balance_residual for r in records[1:]), default=0.0)


def entropy_inequality_check(records: Sequence[DiagnosticsRecord]) -> float:
    """Smallest slack of the entropy inequality over the run (>= 0 certifies it)."""
    return min(r.ineq_slack for r in records)


def flat_conservation_error(records: Sequence[DiagnosticsRecord]) -> float:
    H0 = records[0].entropy_H
    return max(abs(r.entropy_H - H0) for r in records) / max(1.0, abs(H0))


# u_x reconstruction -----------------------------------------------------------

def ux_rate_terms(grid: Grid, state: State, bath: Bathymetry, p: Params) -> dict:
    """The pieces of ``u_tx`` written with the kernel ``K_mu``.

    ``u_tx = (3/mu) zeta + f1 + f2 + f3 + f4`` where ``f1`` convolves
    ``zeta - (beta/eps) b`` and ``f4`` convolves ``(beta/eps) b`` back in.
    Convolution with ``K_mu`` is ``(1 - (mu/3) d_x^2)^{-1}``.
    """
    a = p.mu / 3.0
    c = 3.0 / p.mu
    u2 = dealias(grid, state.u**2)
    shifted = state.zeta - bath.beta / p.eps * bath.b
    return {
        "zeta": c * state.zeta,
        "f1": -c * helmholtz_solve(grid, shifted, a),
        "f2": c * p.eps * 0.5 * u2,
        "f3": -c * p.eps * 0.5 * helmholtz_solve(grid, u2, a),
        "f4": -c * bath.beta / p.eps * helmholtz_solve(grid, bath.b, a),
    }


def ux_reconstruction_check(traj: "Trajectory") -> float:
    """Max deviation between ``u_x(t)`` and ``u_x(0) + int_0^t u_tx`` (trapezoid in time)."""
    g, bath, p = traj.grid, traj.bath, traj.params
    states = traj.states
    if len(states) < 2:
        return 0.0
    acc = spectral_derivative(g, states[0].u)
    prev = sum(ux_rate_terms(g, states[0], bath, p).values())
    worst = 0.0
    for s0, s1 in zip(states[:-1], states[1:]):
        cur = sum(ux_rate_terms(g, s1, bath, p).values())
        acc = acc + 0.5 * (s1.t - s0.t) * (prev + cur)
        prev = cur
        worst = max(worst, float(np.max(np.abs(acc - spectral_derivative(g, s1.u)))))
    return worst


# characteristics ------------------------------------------------------------

@dataclass
class CharacteristicReport:
    x0: float
    times: np.ndarray
    path: np.ndarray
    identity_residual: float
    min_height_on_path: float
    lower_bound: float
    bound_holds: bool
    wraps: int


def characteristic_flow(traj: "Trajectory", x0: float, tol: float = 0.02) -> CharacteristicReport:
    """Follow ``q' = eps u(t, q)`` through the stored trajectory.

    ``u`` is interpolated cubically in space and linearly in time; the path
    and ``int u_x(s, q(s)) ds`` are advanced together by RK4 on the stored
    time levels.
    """
    g, bath, p = traj.grid, traj.bath, traj.params
    states = traj.states
    eps = p.eps
    ux = [spectral_derivative(g, s.u) for s in states]
    hs = [total_height(s.zeta, bath, eps) for s in states]

    def sample(k, w, q):
        a = periodic_cubic_interp(states[k].u, 0.0, g.dx, [q])[0]
        ax = periodic_cubic_interp(ux[k], 0.0, g.dx, [q])[0]
        if w == 0.0:
            return a, ax
        b = periodic_cubic_interp(states[k + 1].u, 0.0, g.dx, [q])[0]
        bx = periodic_cubic_interp(ux[k + 1], 0.0, g.dx, [q])[0]
        return (1 - w) * a + w * b, (1 - w) * ax + w * bx

    def rhs(k, w, q):
        v, vx = sample(k, w, q)
        return np.array([eps * v, vx])

    h0_x0 = periodic_cubic_interp(hs[0], 0.0, g.dx, [x0])[0]
    y = np.array([float(x0), 0.0])
    path = [y[0]]
    worst = 0.0
    hmin = h0_x0
    for k in range(len(states) - 1):
        dt = states[k + 1].t - states[k].t
        k1 = rhs(k, 0.0, y[0])
        k2 = rhs(k, 0.5, y[0] + 0.5 * dt * k1[0])
        k3 = rhs(k, 0.5, y[0] + 0.5 * dt * k2[0])
        k4 = rhs(k + 1, 0.0, y[0] + dt * k3[0])
        y = y + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        path.append(y[0])
        h_here = periodic_cubic_interp(hs[k + 1], 0.0, g.dx, [y[0]])[0]
        worst = max(worst, abs(h_here - h0_x0 * math.exp(-eps * y[1])))
        hmin = min(hmin, h_here)
    T = states[-1].t - states[0].t
    sup_ux = max(float(np.max(np.abs(a))) for a in ux)
    bound = math.exp(-eps * T * sup_ux) * float(np.min(hs[0]))
    path = np.asarray(path)
    return CharacteristicReport(
        x0=float(x0),
        times=np.array([s.t for s in states]),
        path=path,
        identity_residual=worst,
        min_height_on_path=float(hmin),
        lower_bound=bound,
        bound_holds=bool(hmin >= (1 - tol) * bound),
        wraps=int(np.max(np.abs(path - x0)) // g.L),
    )

