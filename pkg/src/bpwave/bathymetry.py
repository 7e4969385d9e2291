"""Parameters, bottom profiles, states and the depth hypotheses."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Mapping

import numpy as np

from .grid import Grid, spectral_derivative, w_infinity_proxy

DEFAULT_TOLERANCES = {
    "flat_conservation": 1e-6,
    "balance": 1e-5,
    "ux_reconstruction": 1e-5,
    "characteristics": 1e-4,
    "mass": 1e-10,
}

# Stand-in for the non-constructive smallness constant on beta. Compared with
# beta * max|Lambda^{5/2 + 0.1} b|; the shipped presets at beta <= 0.4 sit well below it.
DEFAULT_C0 = 5.0
HYP_SOBOLEV_INDEX = 2.6


@dataclass(frozen=True)
class Params:
    eps: float
    mu: float
    beta: float = 0.0
    nu: float = 0.0
    h0: float = 0.5
    dt: float = 1e-3
    t_end: float = 1.0
    tolerances: Mapping[str, float] = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))

    def __post_init__(self):
        for name in ("eps", "mu", "h0", "dt", "t_end"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive, got {v}")
        for name in ("beta", "nu"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v >= 0):
                raise ValueError(f"{name} must be non-negative, got {v}")
        if not self.dt < self.t_end:
            raise ValueError(f"dt={self.dt} must be smaller than t_end={self.t_end}")
        object.__setattr__(self, "tolerances", {**DEFAULT_TOLERANCES, **dict(self.tolerances)})

    def with_(self, **kw) -> "Params":
        return replace(self, **kw)

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))


class Bathymetry:
    """Bottom profile ``b`` with amplitude ``beta``; ``h_b = 1 - beta b``."""

    def __init__(self, grid: Grid, b, beta: float, name: str = "custom"):
        if not (np.isfinite(beta) and beta >= 0):
            raise ValueError(f"beta must be non-negative, got {beta}")
        self.grid = grid
        self.b = grid.check(b).copy()
        self.b.setflags(write=False)
        self.beta = float(beta)
        self.name = name
        self.b_x = spectral_derivative(grid, self.b)
        self.h_b = 1.0 - self.beta * self.b
        for arr in (self.b_x, self.h_b):
            arr.setflags(write=False)

    @property
    def flat(self) -> bool:
        return self.beta == 0.0 or not np.any(self.b)

    def g_b(self, mu: float) -> np.ndarray:
        """Zeroth-order coefficient exactly as the literal display (no ``h_b`` on the last term)."""
        d = spectral_derivative(self.grid, self.h_b**2 * self.b_x)
        return self.h_b + 0.5 * self.beta * mu * d + self.beta**2 * mu * self.b_x**2

    def g_full(self, mu: float) -> np.ndarray:
        """Zeroth-order coefficient from expanding ``h_b (1 + mu T[h_b])``."""
        d = spectral_derivative(self.grid, self.h_b**2 * self.b_x)
        return self.h_b + 0.5 * self.beta * mu * d + self.beta**2 * mu * self.h_b * self.b_x**2


@dataclass(frozen=True)
class State:
    zeta: np.ndarray
    u: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        z = np.asarray(self.zeta, dtype=float)
        u = np.asarray(self.u, dtype=float)
        if z.shape != u.shape or z.ndim != 1:
            raise ValueError("zeta and u must be 1-d arrays on the same grid")
        if not (np.all(np.isfinite(z)) and np.all(np.isfinite(u))):
            raise ValueError("state has non-finite values")
        if not (np.isfinite(self.t) and self.t >= 0):
            raise ValueError(f"time must be non-negative, got {self.t}")
        object.__setattr__(self, "zeta", z)
        object.__setattr__(self, "u", u)

    @classmethod
    def rest(cls, grid: Grid) -> "State":
        return cls(np.zeros(grid.M), np.zeros(grid.M))


def total_height(zeta, bath: Bathymetry, eps: float) -> np.ndarray:
    """``h = 1 + eps zeta - beta b``."""
    zeta = np.asarray(zeta, dtype=float)
    if zeta.shape != bath.b.shape:
        raise ValueError("zeta and bathymetry live on different grids")
    return 1.0 + eps * zeta - bath.beta * bath.b


def positivity_check(state: State, bath: Bathymetry, eps: float) -> float:
    return float(np.min(total_height(state.zeta, bath, eps)))


@dataclass(frozen=True)
class DepthReport:
    passed: bool
    min_hb: float
    argmin_x: float
    h0: float
    smallness_ratio: float
    c0: float

    @property
    def small_bottom(self) -> bool:
        return self.smallness_ratio <= self.c0

    def __str__(self):
        verdict = "pass" if self.passed else f"FAIL at x={self.argmin_x:.6g}"
        return (
            f"depth {verdict}: min h_b={self.min_hb:.6g} (floor {self.h0:g}); "
            f"beta*|b|_W={self.smallness_ratio:.4g} (threshold {self.c0:g})"
        )


def validate_depth(bath: Bathymetry, h0: float, c0: float = DEFAULT_C0) -> DepthReport:
    i = int(np.argmin(bath.h_b))
    ratio = bath.beta * w_infinity_proxy(bath.grid, bath.b, HYP_SOBOLEV_INDEX)
    return DepthReport(
        passed=bool(bath.h_b[i] >= h0),
        min_hb=float(bath.h_b[i]),
        argmin_x=float(bath.grid.x[i]),
        h0=float(h0),
        smallness_ratio=float(ratio),
        c0=float(c0),
    )


# presets -------------------------------------------------------------------

def gaussian(x, center, width):
    return np.exp(-(((x - center) / width) ** 2))


def periodic_gaussian(grid: Grid, center: float, width: float) -> np.ndarray:
    """Gaussian summed over the neighbouring periods so it is smooth on the torus."""
    return sum(gaussian(grid.x, center + k * grid.L, width) for k in (-1, 0, 1))


def preset_profile(grid: Grid, name: str, amplitude: float = 1.0, width: float = 1.0, center: float | None = None):
    c = 0.5 * grid.L if center is None else center
    if name == "flat":
        return np.zeros(grid.M)
    if name == "gaussian-bump":
        return amplitude * periodic_gaussian(grid, c, width)
    if name == "two-bumps":
        off = 2.0 * width
        return amplitude * (periodic_gaussian(grid, c - off, width) + 0.6 * periodic_gaussian(grid, c + off, 0.7 * width))
    if name == "ridge":
        # plateau of half-length 2*width with smooth shoulders
        s = np.sin(np.pi * (grid.x - c) / grid.L)
        d = grid.L / np.pi * s
        return amplitude * 0.5 * (np.tanh((d + 2 * width) / (0.5 * width)) - np.tanh((d - 2 * width) / (0.5 * width)))
    raise ValueError(f"unknown bathymetry preset {name!r}; choose from {PRESETS}")


PRESETS = ("flat", "gaussian-bump", "two-bumps", "ridge")


def make_bathymetry(grid: Grid, name: str, beta: float, amplitude: float = 1.0, width: float = 1.0, center=None) -> Bathymetry:
    b = preset_profile(grid, name, amplitude, width, center)
    return Bathymetry(grid, b, 0.0 if name == "flat" else beta, name=name)
