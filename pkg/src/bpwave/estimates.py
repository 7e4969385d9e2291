"""Commutator, product and inverse estimates as bounded-ratio statistics.

Each estimate ``LHS <~ RHS`` is turned into the ratio ``LHS / RHS`` over a
seeded corpus of random band-limited fields. "<~" then means: the largest
ratio is finite, is shipped as a constant, and does not grow when the
resolution is doubled. ``W^{k,inf}`` norms use the grid maximum of
``|Lambda^k f|`` and every "+" exponent is ``+0.1``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .bathymetry import Bathymetry, validate_depth
from .elliptic import TbOperator
from .grid import (
    Grid,
    P_high,
    P_low,
    P_tilde,
    check_dyadic,
    lp_project,
    sobolev_mu_norm,
    sobolev_norm,
    spectral_derivative,
    w_infinity_proxy,
)

PLUS = 0.1
N_SWEEP = (8, 16, 32, 64, 128, 256)

PROD2_TRIPLES = ((0.0, 0.6, 0.6), (0.5, 0.6, 0.6), (1.0, 1.0, 1.0), (0.5, 1.0, 0.8))
PROD3_S = (0.5, 1.0, 2.0)
PROD5_THETA = (-1.0, -0.5, 0.0, 0.5, 1.0)
PROD6_THETA = (-0.5, 0.0, 0.5, 1.0)
PRON1_S = (0.5, 1.0)
PRON2_S = (0.75, 1.5)
INVERSE_S = (-1.0, -0.5, 0.0, 0.5, 1.0)

# Max ratios measured on the default corpora (2pi torus, M = 2048, 200 samples),
# rounded up. Re-measured at M = 4096 by the acceptance suite.
SHIPPED_CONSTANTS = {
    "cm1": 0.77,
    "prod2": 0.46,
    "prod3": 0.77,
    "prod5": 0.83,
    "prod6": 0.57,
    "prod6_l2": 0.97,
    "proN1": 0.6,
    "proN1_l2": 0.99,
    "proN2": 0.13,
    "proN2_l2": 0.13,
    "inverse": 1.2,
}


class Corpus:
    """Seeded random real band-limited fields with algebraic spectral decay.

    Sample ``i`` draws a decay exponent in ``[decay_lo, decay_hi]`` and a
    cutoff in ``[band/8, band]`` (integer wavenumbers), then Gaussian Fourier
    coefficients scaled by ``(1 + xi^2)^{-d/2}``. The field depends only on
    ``(seed, i)`` and the period, so the same sample can be put on finer grids.
    """

    def __init__(self, grid: Grid, size: int = 200, seed: int = 0, band: int = 400,
                 decay_lo: float = 0.75, decay_hi: float = 2.5):
        kmax = grid.M // 2 - 1
        if band > kmax:
            raise ValueError(f"band {band} exceeds the grid's {kmax} resolvable wavenumbers")
        self.grid = grid
        self.size = int(size)
        self.seed = int(seed)
        self.band = int(band)
        self.decay = (float(decay_lo), float(decay_hi))

    def __len__(self):
        return self.size

    def sample(self, i: int) -> np.ndarray:
        if not 0 <= i < self.size:
            raise IndexError(i)
        rng = np.random.default_rng([self.seed, i])
        d = rng.uniform(*self.decay)
        cut = int(rng.integers(max(2, self.band // 8), self.band + 1))
        k = np.arange(cut + 1)
        xi = 2 * np.pi * k / self.grid.L
        coef = (rng.standard_normal(cut + 1) + 1j * rng.standard_normal(cut + 1)) * (1 + xi**2) ** (-d / 2)
        coef[0] = coef[0].real
        fh = np.zeros(self.grid.M // 2 + 1, dtype=complex)
        fh[: cut + 1] = coef
        f = self.grid.ifft(fh * self.grid.M)
        return f / np.max(np.abs(f))

    def __iter__(self):
        return (self.sample(i) for i in range(self.size))

    def on(self, grid: Grid) -> "Corpus":
        """Same samples on another grid of the same period."""
        if grid.L != self.grid.L:
            raise ValueError("corpus can only move to a grid with the same period")
        return Corpus(grid, self.size, self.seed, self.band, *self.decay)


@dataclass
class RatioReport:
    name: str
    ratios: np.ndarray
    sweep: dict = field(default_factory=dict)

    def __post_init__(self):
        self.ratios = np.asarray(self.ratios, dtype=float)
        if not np.all(np.isfinite(self.ratios)) or np.any(self.ratios < 0):
            raise ValueError(f"{self.name}: ratios must be finite and non-negative")

    @property
    def max(self) -> float:
        return float(np.max(self.ratios)) if self.ratios.size else 0.0

    @property
    def mean(self) -> float:
        return float(np.mean(self.ratios)) if self.ratios.size else 0.0

    @property
    def p95(self) -> float:
        return float(np.percentile(self.ratios, 95)) if self.ratios.size else 0.0

    def summary(self) -> dict:
        return {"name": self.name, "max": self.max, "mean": self.mean, "p95": self.p95,
                "count": int(self.ratios.size), "sweep": self.sweep}

    def to_json(self) -> str:
        return json.dumps(self.summary(), sort_keys=True)


def _ratio(lhs: float, rhs: float, what: str) -> float:
    if rhs > 0:
        return lhs / rhs
    if lhs <= 1e-14:
        return 0.0
    raise ValueError(f"{what}: right side vanishes while left side is {lhs:.3g}")


def _l2(grid: Grid, f) -> float:
    return float(np.sqrt(grid.integrate(f**2)))


def _linf(f) -> float:
    return float(np.max(np.abs(f)))


# individual estimates -----------------------------------------------------------

def commutator_lhs(grid: Grid, f, g, N: int) -> float:
    """``|[P_N, P_{<<N} f] g_x|_2``."""
    F = P_low(grid, f, N)
    gx = spectral_derivative(grid, g)
    return _l2(grid, lp_project(grid, F * gx, N) - F * lp_project(grid, gx, N))


def commutator_ratio(grid: Grid, f, g, N: int) -> float:
    N = check_dyadic(N)
    if N < 8:
        raise ValueError("commutator estimate is asymptotic in N; use N >= 8")
    lhs = commutator_lhs(grid, f, g, N)
    rhs = _linf(spectral_derivative(grid, f)) * _l2(grid, P_tilde(grid, g, N))
    return _ratio(lhs, rhs, "cm1")


def prod2_ratio(grid: Grid, f, g, t: float, p: float, r: float) -> float:
    if not (r + p > t + 0.5 > 0 and r >= t and p >= t):
        raise ValueError(f"prod2 needs r+p > t+1/2 > 0 and r, p >= t; got t={t}, p={p}, r={r}")
    return _ratio(sobolev_norm(grid, f * g, t), sobolev_norm(grid, f, p) * sobolev_norm(grid, g, r), "prod2")


def prod3_ratio(grid: Grid, f, g, s: float) -> float:
    if s < 0:
        raise ValueError("prod3 needs s >= 0")
    rhs = _linf(f) * sobolev_norm(grid, g, s) + sobolev_norm(grid, f, s) * _linf(g)
    return _ratio(sobolev_norm(grid, f * g, s), rhs, "prod3")


def prod5_ratio(grid: Grid, f, g, theta: float) -> float:
    rhs = w_infinity_proxy(grid, f, abs(theta) + PLUS) * sobolev_norm(grid, g, theta)
    return _ratio(sobolev_norm(grid, f * g, theta), rhs, "prod5")


def prod6_terms(grid: Grid, f, g, theta: float, levels) -> np.ndarray:
    """``N^theta |[P_N, f] g_x|_2 / (|f_x|_{W^{|theta|+}} |g|_{H^theta})`` for each ``N``."""
    gx = spectral_derivative(grid, g)
    rhs = w_infinity_proxy(grid, spectral_derivative(grid, f), abs(theta) + PLUS) * sobolev_norm(grid, g, theta)
    out = []
    for N in levels:
        lhs = N**theta * _l2(grid, lp_project(grid, f * gx, N) - f * lp_project(grid, gx, N))
        out.append(_ratio(lhs, rhs, "prod6"))
    return np.array(out)


def _high_low(grid, f, g, N):
    return lp_project(grid, P_high(grid, f, N) * spectral_derivative(grid, g), N)


def proN1_terms(grid: Grid, f, g, s: float, levels) -> np.ndarray:
    if s <= 0:
        raise ValueError("proN1 needs s > 0")
    gx = spectral_derivative(grid, g)
    rhs = min(sobolev_norm(grid, f, s + 1) * _linf(g), sobolev_norm(grid, f, s) * _linf(gx))
    return np.array([_ratio(N**s * _l2(grid, _high_low(grid, f, g, N)), rhs, "proN1") for N in levels])


def proN2_terms(grid: Grid, f, g, s: float, levels) -> np.ndarray:
    if s <= 0.5:
        raise ValueError("proN2 needs s > 1/2")
    rhs = sobolev_norm(grid, f, s + 1) * sobolev_norm(grid, g, s - 1)
    return np.array([_ratio(N ** (s - 1) * _l2(grid, _high_low(grid, f, g, N)), rhs, "proN2") for N in levels])


def product_ratio(grid: Grid, kind: str, f, g, **kw) -> float:
    """Single ratio for one of the product estimates.

    ``prod6``, ``proN1`` and ``proN2`` take a dyadic ``N``; the others take
    their Sobolev exponents (``t, p, r`` / ``s`` / ``theta``).
    """
    if kind == "prod2":
        return prod2_ratio(grid, f, g, kw["t"], kw["p"], kw["r"])
    if kind == "prod3":
        return prod3_ratio(grid, f, g, kw["s"])
    if kind == "prod5":
        return prod5_ratio(grid, f, g, kw["theta"])
    if kind == "prod6":
        return float(prod6_terms(grid, f, g, kw["theta"], [check_dyadic(kw["N"])])[0])
    if kind == "proN1":
        return float(proN1_terms(grid, f, g, kw["s"], [check_dyadic(kw["N"])])[0])
    if kind == "proN2":
        return float(proN2_terms(grid, f, g, kw["s"], [check_dyadic(kw["N"])])[0])
    raise ValueError(f"unknown product estimate {kind!r}")


def inverse_estimate_ratio(op: TbOperator, f, s: float) -> float:
    """``|T_b^{-1} f|_{H^s_mu-type} / |f|_{H^s}``."""
    u = op.solve(f)
    return _ratio(sobolev_mu_norm(op.grid, u, s, op.mu), sobolev_norm(op.grid, f, s), "inverse")


# sweeps ---------------------------------------------------------------------

def _pairs(corpus: Corpus):
    other = Corpus(corpus.grid, corpus.size, corpus.seed + 7919, corpus.band, *corpus.decay)
    for i in range(corpus.size):
        yield corpus.sample(i), other.sample(i)


def sweep_commutator(corpus: Corpus, levels=N_SWEEP) -> RatioReport:
    g = corpus.grid
    ratios = [commutator_ratio(g, f, h, N) for f, h in _pairs(corpus) for N in levels]
    return RatioReport("cm1", ratios, {"N": list(levels)})


def sweep_products(corpus: Corpus, levels=N_SWEEP) -> dict:
    grid = corpus.grid
    acc = {k: [] for k in ("prod2", "prod3", "prod5", "prod6", "prod6_l2", "proN1", "proN1_l2", "proN2", "proN2_l2")}
    for f, g in _pairs(corpus):
        acc["prod2"] += [prod2_ratio(grid, f, g, *tpr) for tpr in PROD2_TRIPLES]
        acc["prod3"] += [prod3_ratio(grid, f, g, s) for s in PROD3_S]
        acc["prod5"] += [prod5_ratio(grid, f, g, th) for th in PROD5_THETA]
        for th in PROD6_THETA:
            terms = prod6_terms(grid, f, g, th, grid.dyadic_levels())
            acc["prod6"] += list(terms)
            acc["prod6_l2"].append(float(np.sqrt(np.sum(terms**2))))
        for s in PRON1_S:
            terms = proN1_terms(grid, f, g, s, levels)
            acc["proN1"] += list(terms)
            acc["proN1_l2"].append(float(np.sqrt(np.sum(terms**2))))
        for s in PRON2_S:
            terms = proN2_terms(grid, f, g, s, levels)
            acc["proN2"] += list(terms)
            acc["proN2_l2"].append(float(np.sqrt(np.sum(terms**2))))
    sweeps = {
        "prod2": {"t_p_r": [list(x) for x in PROD2_TRIPLES]},
        "prod3": {"s": list(PROD3_S)},
        "prod5": {"theta": list(PROD5_THETA)},
        "prod6": {"theta": list(PROD6_THETA), "N": "all grid levels"},
        "prod6_l2": {"theta": list(PROD6_THETA)},
        "proN1": {"s": list(PRON1_S), "N": list(levels)},
        "proN1_l2": {"s": list(PRON1_S), "N": list(levels)},
        "proN2": {"s": list(PRON2_S), "N": list(levels)},
        "proN2_l2": {"s": list(PRON2_S), "N": list(levels)},
    }
    return {k: RatioReport(k, v, sweeps[k]) for k, v in acc.items()}


def sweep_inverse(op: TbOperator, corpus: Corpus, s_values=INVERSE_S, c0: float | None = None) -> RatioReport:
    if corpus.grid is not op.grid and corpus.grid != op.grid:
        raise ValueError("corpus and operator live on different grids")
    depth = validate_depth(op.bath, h0=0.0) if c0 is None else validate_depth(op.bath, 0.0, c0)
    if any(s < 0 for s in s_values) and not depth.small_bottom:
        raise ValueError(f"negative-index inverse estimate needs the small-bottom hypothesis: {depth}")
    ratios = []
    for f in corpus:
        u = op.solve(f)
        for s in s_values:
            ratios.append(_ratio(sobolev_mu_norm(op.grid, u, s, op.mu), sobolev_norm(op.grid, f, s), "inverse"))
    return RatioReport("inverse", ratios, {"s": list(s_values), "beta": op.bath.beta, "mu": op.mu})


def lab_bathymetry(grid: Grid, beta: float) -> Bathymetry:
    """Smooth bump used by the inverse-estimate sweeps on the ``2 pi`` torus."""
    from .bathymetry import periodic_gaussian

    return Bathymetry(grid, periodic_gaussian(grid, np.pi, 0.5), beta, name="lab-bump")


def run_lab(M: int = 2048, size: int = 200, seed: int = 0, band: int = 400, mu: float = 0.1,
            beta: float = 0.2) -> dict:
    """All sweeps on the ``2 pi`` torus; returns ``{name: RatioReport}``."""
    grid = Grid(2 * np.pi, M)
    corpus = Corpus(grid, size, seed, band)
    reports = {"cm1": sweep_commutator(corpus)}
    reports.update(sweep_products(corpus))
    op = TbOperator(lab_bathymetry(grid, beta), mu, discretization="spectral")
    reports["inverse"] = sweep_inverse(op, corpus)
    return reports


def scale_stability(base: dict, doubled: dict, constants=None, factor: float = 1.1) -> dict:
    """Per estimate: shipped constant, both maxima and whether ``doubled <= factor * C``."""
    constants = SHIPPED_CONSTANTS if constants is None else constants
    out = {}
    for name, C in constants.items():
        b, d = base[name].max, doubled[name].max
        out[name] = {"C": C, "base_max": b, "doubled_max": d, "ok": bool(b <= C and d <= factor * C)}
    return out


def reports_json(reports: dict) -> str:
    return json.dumps({k: v.summary() for k, v in sorted(reports.items())}, indent=2, sort_keys=True)

