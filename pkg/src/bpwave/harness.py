"""Scenarios and the two constructive studies: Bona-Smith regularization and
mollified rough data."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .bathymetry import Bathymetry, Params, State, make_bathymetry, periodic_gaussian
from .diagnostics import entropy_total, inequality_lhs, inequality_rhs0, orlicz_norm
from .dynamics import SimulationAbort, SystemKind, Trajectory, simulate
from .grid import Grid, dealias, sobolev_mu_norm, sobolev_norm, truncate

# scenarios ------------------------------------------------------------------

Recipe = Callable[[Grid], np.ndarray]


def _zero(grid):
    return np.zeros(grid.M)


def _gauss(amp, width, shift=0.0):
    return lambda g: amp * periodic_gaussian(g, 0.5 * g.L + shift, width)


@dataclass(frozen=True)
class Scenario:
    name: str
    description: str
    L: float = 64.0
    M: int = 512
    system: str = "bpw"
    bottom: str = "flat"
    beta: float = 0.0
    bottom_amplitude: float = 1.0
    bottom_width: float = 2.0
    bottom_shift: float = 5.0
    eps: float = 0.1
    mu: float = 0.1
    nu: float = 0.0
    h0: float = 0.5
    dt: float = 1e-3
    t_end: float = 1.0
    zeta: str = "zero"
    u: str = "zero"
    band_limit: bool = True
    seed: int = 0

    def grid(self) -> Grid:
        return Grid(self.L, self.M)

    def bathymetry(self, grid: Grid | None = None) -> Bathymetry:
        grid = grid or self.grid()
        return make_bathymetry(grid, self.bottom, self.beta, self.bottom_amplitude, self.bottom_width,
                               0.5 * grid.L + self.bottom_shift)

    def params(self, **overrides) -> Params:
        kw = dict(eps=self.eps, mu=self.mu, beta=self.beta, nu=self.nu, h0=self.h0, dt=self.dt, t_end=self.t_end)
        kw.update(overrides)
        return Params(**kw)

    def initial_state(self, grid: Grid | None = None) -> State:
        grid = grid or self.grid()
        z = RECIPES[self.zeta](grid)
        u = RECIPES[self.u](grid)
        if self.band_limit:
            z, u = dealias(grid, z), dealias(grid, u)
        return State(z, u)

    def kind(self) -> SystemKind:
        return SystemKind.parse(self.system)

    def to_dict(self) -> dict:
        return asdict(self)

    def run(self, **param_overrides) -> Trajectory:
        grid = self.grid()
        bath = self.bathymetry(grid)
        return simulate(self.initial_state(grid), self.kind(), bath, self.params(**param_overrides))


def _vacuum(g):
    # h = 1 + eps zeta vanishes at the centre for eps = 0.1
    return -10.0 * periodic_gaussian(g, 0.5 * g.L, 1.0)


def _dimple(g, eps=0.1, depth=0.95, width=1.0):
    """Triangular dimple: ``h`` drops to ``1 - depth`` with a Lipschitz kink."""
    tri = np.maximum(0.0, 1.0 - np.abs(g.x - 0.5 * g.L) / width)
    return -depth / eps * tri


def _spike(g, eps=0.1, height=15.0, width=0.15):
    """Tall thin tent: ``h`` reaches ``1 + height``."""
    tri = np.maximum(0.0, 1.0 - np.abs(g.x - 0.5 * g.L) / width)
    return height / eps * tri


RECIPES: dict[str, Recipe] = {
    "zero": _zero,
    "gaussian": _gauss(1.0, 1.5),
    "gaussian-moving": _gauss(0.6, 1.5),
    "vacuum": _vacuum,
    "dimple": _dimple,
    "spike": _spike,
    "u-small": _gauss(0.2, 2.0, -3.0),
}

SCENARIOS: dict[str, Scenario] = {}


def register(s: Scenario) -> Scenario:
    SCENARIOS[s.name] = s
    return s


register(Scenario("rest", "still water over a flat bottom", zeta="zero", u="zero"))
register(Scenario("flat-gaussian", "reference run: gaussian hump released from rest, flat bottom", zeta="gaussian"))
register(Scenario("bump-gaussian", "gaussian hump passing a submerged gaussian bump",
                  bottom="gaussian-bump", beta=0.2, zeta="gaussian", t_end=2.0))
register(Scenario("two-bumps-gaussian", "moving hump over two bumps of different widths",
                  bottom="two-bumps", beta=0.25, zeta="gaussian-moving", u="gaussian-moving", t_end=2.0))
register(Scenario("ridge-gaussian", "hump over a plateau-shaped ridge",
                  bottom="ridge", beta=0.3, bottom_width=1.5, bottom_shift=0.0, zeta="gaussian", t_end=2.0))
register(Scenario("vacuum-start", "initial surface touching the bottom (h = 0 at one point)",
                  system="bp", zeta="vacuum", band_limit=False))

BATHYMETRY_SCENARIOS = ("bump-gaussian", "two-bumps-gaussian", "ridge-gaussian")


def get_scenario(name: str) -> Scenario:
    if name not in SCENARIOS:
        raise KeyError(f"unknown scenario {name!r}; available: {', '.join(sorted(SCENARIOS))}")
    return SCENARIOS[name]


# Bona-Smith ---------------------------------------------------------------------

def bona_smith_truncate(grid: Grid, f, n: float) -> np.ndarray:
    """``S_n``: keep ``|xi| <= n``."""
    if not n > 0:
        raise ValueError(f"cutoff must be positive, got {n}")
    return truncate(grid, f, n)


@dataclass
class BonaSmithReport:
    n_list: list
    horizon: float
    stable_horizons: dict
    differences: list  # sup-in-time distance between runs n_k and n_{k+1}
    slope: float
    growth_bound_ok: bool

    @property
    def strictly_decreasing(self) -> bool:
        d = self.differences
        return all(b < a for a, b in zip(d, d[1:]))

    def summary(self) -> dict:
        return {
            "n_list": self.n_list,
            "horizon": self.horizon,
            "stable_horizons": {str(k): v for k, v in self.stable_horizons.items()},
            "differences": self.differences,
            "fitted_slope": self.slope,
            "strictly_decreasing": self.strictly_decreasing,
            "growth_bound_ok": self.growth_bound_ok,
        }


def truncation_growth_ok(grid: Grid, f, n: float, s: float, r: float, sharp: bool = False) -> bool:
    """``|S_n f|_{H^{s+r}} <= n^r |f|_{H^s}`` (or ``(1+n^2)^{r/2}`` when ``sharp``)."""
    lhs = sobolev_norm(grid, bona_smith_truncate(grid, f, n), s + r)
    factor = (1 + n * n) ** (r / 2) if sharp else n**r
    return lhs <= factor * sobolev_norm(grid, f, s) * (1 + 1e-12)


def bona_smith_distance(grid: Grid, a: State, b: State, s: float, mu: float) -> float:
    """``(|dzeta|_{H^{s-1}}^2 + |du|_{H^s_mu}^2)^{1/2}`` with ``|v|_{H^s_mu}^2 = |v|_{H^{s-1}}^2 + mu |v_x|_{H^{s-1}}^2``."""
    dz = sobolev_norm(grid, a.zeta - b.zeta, s - 1)
    du = sobolev_mu_norm(grid, a.u - b.u, s - 1, mu)
    return math.hypot(dz, du)


def bona_smith_experiment(
    zeta0,
    u0,
    bath: Bathymetry,
    p: Params,
    s: float,
    n_list: Sequence[int],
    t_probe: float | None = None,
) -> BonaSmithReport:
    """Regularized runs with data ``S_n`` and ``nu = n^-5`` for each ``n``.

    Each run must reach ``t_probe`` (default ``p.t_end``) without aborting;
    differences are measured up to half of that common stable horizon.
    """
    n_list = [int(n) for n in n_list]
    if len(n_list) < 2 or any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise ValueError("n_list must be increasing with at least two entries")
    for n in n_list:
        if n & (n - 1):
            raise ValueError(f"n_list entries must be dyadic, got {n}")
    grid = bath.grid
    t_probe = p.t_end if t_probe is None else t_probe
    runs: dict[int, Trajectory] = {}
    horizons = {}
    for n in n_list:
        pn = p.with_(nu=float(n) ** -5, t_end=t_probe)
        init = State(bona_smith_truncate(grid, zeta0, n), bona_smith_truncate(grid, u0, n))
        try:
            runs[n] = simulate(init, SystemKind.BP_REGULARIZED, bath, pn, diagnostics=False)
        except SimulationAbort as exc:
            raise SimulationAbort(exc.code, f"bona-smith run n={n} aborted: {exc}", exc.t) from exc
        horizons[n] = t_probe
    T = 0.5 * min(horizons.values())
    diffs = []
    for n1, n2 in zip(n_list, n_list[1:]):
        a, b = runs[n1].states, runs[n2].states
        diffs.append(max(bona_smith_distance(grid, x, y, s, p.mu) for x, y in zip(a, b) if x.t <= T + 1e-12))
    pos = [(n, d) for n, d in zip(n_list[1:], diffs) if d > 0]
    slope = float(np.polyfit(np.log([n for n, _ in pos]), np.log([d for _, d in pos]), 1)[0]) if len(pos) >= 2 else float("nan")
    growth = all(
        truncation_growth_ok(grid, f, n, s, r) for f in (zeta0, u0) for n in n_list for r in (1.0, 2.0)
    )
    return BonaSmithReport(n_list, T, horizons, diffs, slope, growth)


def bona_smith_data(grid: Grid, kink: float = 0.3) -> tuple[np.ndarray, np.ndarray]:
    """Gaussian hump plus an ``exp(-|x|)`` cusp (spectrum ~ ``xi^-2``, so in ``H^{3/2-}``)."""
    c = 0.5 * grid.L
    d = (grid.x - c + 0.5 * grid.L) % grid.L - 0.5 * grid.L
    zeta = periodic_gaussian(grid, c, 1.0) + kink * np.exp(-np.abs(d - 1.0) / 0.5)
    u = 0.3 * periodic_gaussian(grid, c - 2.0, 1.0)
    return zeta, u


def bona_smith_setup(beta: float = 0.1, L: float = 8 * np.pi, M: int = 1024):
    grid = Grid(L, M)
    bath = make_bathymetry(grid, "gaussian-bump", beta, 1.0, 1.5, 0.5 * L + 3.0)
    return grid, bath


# mollification -----------------------------------------------------------------

def _rho_raw(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    inside = (x > 0) & (x < 1)
    xi = x[inside]
    out[inside] = np.exp(-1.0 / (xi * (1.0 - xi)))
    return out


@lru_cache(maxsize=1)
def rho_normalization() -> float:
    from scipy.integrate import quad

    val, _ = quad(lambda t: float(_rho_raw(t)), 0.0, 1.0, epsabs=1e-15, epsrel=1e-13)
    return 1.0 / val


def rho(x):
    """Bump supported in ``[0, 1]`` with unit mass."""
    return rho_normalization() * _rho_raw(x)


def mollifier_weights(grid: Grid, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Shifts ``j`` and weights of ``rho_n = n rho(n .)`` sampled at ``j dx``.

    The weights are renormalized to sum to one, so the discrete operator is
    an average: it preserves means and constants and obeys Jensen exactly.
    """
    if int(n) != n or n < 1:
        raise ValueError(f"mollification index must be an integer >= 1, got {n}")
    width = 1.0 / n
    if width < 4 * grid.dx:
        raise ValueError(f"support 1/n = {width:g} is below four grid cells ({4 * grid.dx:g}); refine the grid")
    if width > grid.L:
        raise ValueError("mollifier wider than the domain")
    j = np.arange(1, int(np.ceil(width / grid.dx)))
    w = n * rho(n * j * grid.dx)
    keep = w > 0
    j, w = j[keep], w[keep]
    return j, w / w.sum()


def mollify(grid: Grid, f, n: int) -> np.ndarray:
    """``(rho_n * f)(x) = sum_j w_j f(x - j dx)`` on the torus."""
    f = grid.check(f)
    j, w = mollifier_weights(grid, n)
    out = np.zeros_like(f)
    for jj, ww in zip(j, w):
        out += ww * np.roll(f, jj)
    return out


# weak limit --------------------------------------------------------------------

WEAK_RECIPES = ("dimple", "spike")


@dataclass
class WeakLimitReport:
    recipe: str
    n_list: list
    bound_slack: dict  # min over sampled t of RHS(t) - LHS_n(t)
    jensen: dict  # orlicz(original) - orlicz(mollified)
    u_distances: list  # sup_t |u_n - u_{n'}|_{L^2(window)}
    zeta_distances: list  # sup_t |zeta_n - zeta_{n'}|_{L^1(window)}
    moments: dict  # n -> list of int zeta_n(T) phi_j
    consistent_slack: dict = None  # same bound with the coefficients the entropy identity yields

    @property
    def bound_holds(self) -> bool:
        return all(v >= 0 for v in self.bound_slack.values())

    @property
    def jensen_holds(self) -> bool:
        return all(v >= -1e-12 for v in self.jensen.values())

    def summary(self) -> dict:
        return {
            "recipe": self.recipe,
            "n_list": self.n_list,
            "bound_slack": {str(k): v for k, v in self.bound_slack.items()},
            "bound_holds": self.bound_holds,
            "jensen_gap": {str(k): v for k, v in self.jensen.items()},
            "jensen_holds": self.jensen_holds,
            "u_distances": self.u_distances,
            "zeta_distances": self.zeta_distances,
            "moments": {str(k): v for k, v in self.moments.items()},
            "consistent_slack": {str(k): v for k, v in (self.consistent_slack or {}).items()},
        }


def weak_limit_setup(L: float = 32.0, M: int = 2048, beta: float = 0.1):
    grid = Grid(L, M)
    bath = make_bathymetry(grid, "gaussian-bump", beta, 1.0, 1.5, 0.5 * L + 4.0)
    return grid, bath


def weak_limit_experiment(
    zeta0,
    u0,
    bath: Bathymetry,
    p: Params,
    n_list: Sequence[int],
    recipe: str = "custom",
    sample_every: int = 1,
    window: float = 6.0,
) -> WeakLimitReport:
    """Small-bottom runs from mollified data ``(rho_n * zeta0, rho_n * u0)`` over ``rho_n * b``."""
    grid = bath.grid
    zeta0 = grid.check(zeta0)
    u0 = grid.check(u0)
    base = State(zeta0, u0)
    rhs0 = inequality_rhs0(base, bath, p)
    rhs0_consistent = entropy_total(base, bath, p) + 0.5 * (bath.beta / p.eps) ** 2 * grid.integrate(bath.b_x**2)
    orlicz0 = orlicz_norm(zeta0, bath, p.eps)
    c = 0.5 * grid.L
    d = np.abs((grid.x - c + 0.5 * grid.L) % grid.L - 0.5 * grid.L)
    win = d <= window
    tests = [periodic_gaussian(grid, c + off, 1.0) for off in (-4.0, -2.0, 0.0, 2.0, 4.0)]

    slack, consistent, jensen, moments, runs = {}, {}, {}, {}, {}
    for n in n_list:
        bn = Bathymetry(grid, mollify(grid, bath.b, n), bath.beta, name=f"{bath.name}*rho_{n}")
        zn, un = mollify(grid, zeta0, n), mollify(grid, u0, n)
        jensen[n] = orlicz0 - orlicz_norm(zn, bn, p.eps)
        traj = simulate(State(zn, un), SystemKind.BPW, bn, p, stride=sample_every, diagnostics=False)
        slack[n] = min(rhs0 * math.exp(st.t) - inequality_lhs(st, bn, p) for st in traj.states)
        consistent[n] = min(rhs0_consistent * math.exp(st.t) - entropy_total(st, bn, p) for st in traj.states)
        moments[n] = [grid.inner(traj.final.zeta, phi) for phi in tests]
        runs[n] = traj
    u_d, z_d = [], []
    for n1, n2 in zip(n_list, n_list[1:]):
        pairs = list(zip(runs[n1].states, runs[n2].states))
        u_d.append(max(math.sqrt(grid.integrate(np.where(win, (a.u - b.u) ** 2, 0.0))) for a, b in pairs))
        z_d.append(max(grid.integrate(np.where(win, np.abs(a.zeta - b.zeta), 0.0)) for a, b in pairs))
    return WeakLimitReport(recipe, list(n_list), slack, jensen, u_d, z_d, moments, consistent)


def weak_limit_recipe(grid: Grid, recipe: str, eps: float = 0.1) -> tuple[np.ndarray, np.ndarray]:
    if recipe not in WEAK_RECIPES:
        raise ValueError(f"unknown rough recipe {recipe!r}; choose from {WEAK_RECIPES}")
    zeta = RECIPES[recipe](grid)
    u = 0.2 * periodic_gaussian(grid, 0.5 * grid.L - 3.0, 2.0)
    return zeta, u
