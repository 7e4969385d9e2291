"""Periodic grid, Fourier multipliers, Sobolev norms and Littlewood-Paley pieces.

Fields are plain float arrays of length ``grid.M``. All transforms use the
real FFT, so every multiplier is evaluated on the non-negative frequencies
and must be even in the frequency variable.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

Symbol = Union[Callable[[np.ndarray], np.ndarray], np.ndarray, float]


@dataclass(frozen=True)
class Grid:
    """Uniform grid on the torus ``[0, L)`` with ``M`` points.

    Parameters
    ----------
    L : float
        Period of the domain.
    M : int
        Number of points; a power of two, at least 32.
    """

    L: float
    M: int
    x: np.ndarray = field(init=False, repr=False, compare=False)
    xi: np.ndarray = field(init=False, repr=False, compare=False)
    xi_odd: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not (np.isfinite(self.L) and self.L > 0):
            raise ValueError(f"domain length must be positive, got {self.L}")
        M = int(self.M)
        if M < 32 or M & (M - 1):
            raise ValueError(f"M must be a power of two >= 32, got {self.M}")
        object.__setattr__(self, "M", M)
        x = np.arange(M) * self.dx
        xi = 2.0 * np.pi * np.fft.rfftfreq(M, d=self.dx)
        xi_odd = xi.copy()
        xi_odd[-1] = 0.0  # Nyquist removed from odd-order symbols
        for arr in (x, xi, xi_odd):
            arr.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "xi", xi)
        object.__setattr__(self, "xi_odd", xi_odd)

    @property
    def dx(self) -> float:
        return self.L / self.M

    @property
    def xi_max(self) -> float:
        return np.pi * self.M / self.L

    @property
    def parseval_weight(self) -> np.ndarray:
        """Weights ``w_k`` with ``sum w_k |rfft(f)_k|^2 == integral of f^2``."""
        w = np.full(self.xi.shape, 2.0 * self.L / self.M**2)
        w[0] *= 0.5
        w[-1] *= 0.5
        return w

    def check(self, f) -> np.ndarray:
        f = np.asarray(f, dtype=float)
        if f.shape != (self.M,):
            raise ValueError(f"field of shape {f.shape} does not live on a grid of {self.M} points")
        if not np.all(np.isfinite(f)):
            raise ValueError("field has non-finite values")
        return f

    def fft(self, f) -> np.ndarray:
        return np.fft.rfft(self.check(f))

    def ifft(self, fh) -> np.ndarray:
        return np.fft.irfft(fh, n=self.M)

    def integrate(self, f) -> float:
        """Trapezoid (= rectangle, on the torus) quadrature."""
        return float(np.sum(f) * self.dx)

    def inner(self, f, g) -> float:
        return float(np.dot(f, g) * self.dx)

    def dyadic_levels(self) -> list[int]:
        """Dyadic ``N`` whose projectors together cover every grid frequency."""
        levels = [1]
        while levels[-1] < self.xi_max:
            levels.append(2 * levels[-1])
        return levels

    def dealias_mask(self) -> np.ndarray:
        """Two-thirds rule: keep ``|k| <= M/3``."""
        k = np.arange(self.xi.size)
        return k <= self.M // 3


def spectral_derivative(grid: Grid, f, order: int = 1) -> np.ndarray:
    """``order``-th derivative by multiplication with ``(i xi)**order``."""
    if int(order) != order or order < 1:
        raise ValueError(f"derivative order must be a positive integer, got {order}")
    xi = grid.xi_odd if order % 2 else grid.xi
    return grid.ifft((1j * xi) ** order * grid.fft(f))


def _evaluate_symbol(grid: Grid, m: Symbol) -> np.ndarray:
    if callable(m):
        vals = np.asarray(m(grid.xi), dtype=float)
        neg = np.asarray(m(-grid.xi), dtype=float)
        if vals.shape == ():
            vals = np.full(grid.xi.shape, float(vals))
            neg = np.full(grid.xi.shape, float(neg))
        if not np.allclose(vals, neg, rtol=1e-12, atol=0.0, equal_nan=True):
            raise ValueError("symbol must be even in xi to act on real fields")
    else:
        vals = np.broadcast_to(np.asarray(m, dtype=float), grid.xi.shape)
    if not np.all(np.isfinite(vals)):
        raise ValueError("symbol is not finite on the grid frequencies")
    return vals


def fourier_multiplier_apply(grid: Grid, f, m: Symbol) -> np.ndarray:
    """Apply the even real symbol ``m(xi)`` to ``f``.

    ``m`` may be a callable evaluated on the grid frequencies, an array of
    values on ``grid.xi`` or a scalar.
    """
    return grid.ifft(_evaluate_symbol(grid, m) * grid.fft(f))


def bessel_symbol(grid: Grid, s: float) -> np.ndarray:
    """``(1 + xi^2)^{s/2}`` on the grid, i.e. the symbol of ``Lambda^s``."""
    return (1.0 + grid.xi**2) ** (0.5 * s)


def sobolev_norm(grid: Grid, f, s: float = 0.0) -> float:
    """``|f|_{H^s} = |Lambda^s f|_{L^2(0, L)}`` computed from the spectrum."""
    fh = grid.fft(f)
    return float(np.sqrt(np.sum(grid.parseval_weight * (1.0 + grid.xi**2) ** s * np.abs(fh) ** 2)))


def sobolev_mu_norm(grid: Grid, f, s: float, mu: float) -> float:
    """``(|f|_{H^s}^2 + mu |f_x|_{H^s}^2)^{1/2}``."""
    if not mu > 0:
        raise ValueError(f"mu must be positive, got {mu}")
    fh = grid.fft(f)
    weight = grid.parseval_weight * (1.0 + grid.xi**2) ** s * (1.0 + mu * grid.xi_odd**2)
    return float(np.sqrt(np.sum(weight * np.abs(fh) ** 2)))


def w_infinity_proxy(grid: Grid, f, s: float) -> float:
    """Grid maximum of ``|Lambda^s f|``, the stand-in for the ``W^{s,inf}`` norm."""
    return float(np.max(np.abs(fourier_multiplier_apply(grid, f, bessel_symbol(grid, s)))))


class BumpEta:
    """Smooth even cutoff: 1 on ``[-1, 1]``, 0 outside ``(-2, 2)``.

    Built from ``f(t) = exp(-1/t)`` as ``f(2-|x|) / (f(2-|x|) + f(|x|-1))``.
    """

    @staticmethod
    def _f(t):
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        pos = t > 0
        out[pos] = np.exp(-1.0 / t[pos])
        return out

    def __call__(self, xi):
        r = np.abs(np.asarray(xi, dtype=float))
        a = self._f(2.0 - r)
        b = self._f(r - 1.0)
        out = np.ones_like(r)
        mid = (r > 1.0) & (r < 2.0)
        out[mid] = a[mid] / (a[mid] + b[mid])
        out[r >= 2.0] = 0.0
        return out

    def phi(self, xi):
        """``eta(xi) - eta(2 xi)``, supported in ``1/2 <= |xi| <= 2``."""
        xi = np.asarray(xi, dtype=float)
        return self(xi) - self(2.0 * xi)

    def phi_N(self, xi, N: int):
        """Dyadic piece ``phi_N``; ``phi_1`` is ``eta`` itself."""
        N = check_dyadic(N)
        if N == 1:
            return self(xi)
        return self.phi(np.asarray(xi, dtype=float) / N)


ETA = BumpEta()


def check_dyadic(N) -> int:
    if int(N) != N or N < 1 or (int(N) & (int(N) - 1)):
        raise ValueError(f"N must be a dyadic integer >= 1, got {N}")
    return int(N)


def lp_project(grid: Grid, f, N: int) -> np.ndarray:
    """Littlewood-Paley piece ``P_N f``."""
    N = check_dyadic(N)
    return grid.ifft(ETA.phi_N(grid.xi, N) * grid.fft(f))


def lp_symbol_sum(grid: Grid, levels) -> np.ndarray:
    """Sum of ``phi_K`` over the dyadic ``levels`` (used for aggregates)."""
    total = np.zeros_like(grid.xi)
    for K in levels:
        total += ETA.phi_N(grid.xi, K)
    return total


def lp_aggregate(grid: Grid, f, levels) -> np.ndarray:
    return grid.ifft(lp_symbol_sum(grid, list(levels)) * grid.fft(f))


def levels_band(grid: Grid, lo: float, hi: float) -> list[int]:
    """Dyadic ``K`` with ``lo <= K <= hi`` that touch the grid spectrum."""
    return [K for K in grid.dyadic_levels() + [2 * grid.dyadic_levels()[-1]] if lo <= K <= hi]


def P_tilde(grid: Grid, f, N: int) -> np.ndarray:
    """``sum_{N/4 <= K <= 4N} P_K f``."""
    return lp_aggregate(grid, f, levels_band(grid, N / 4, 4 * N))


def P_low(grid: Grid, f, N: int) -> np.ndarray:
    """``P_{<<N} = sum_{K <= N/8} P_K``."""
    return lp_aggregate(grid, f, levels_band(grid, 1, N / 8))


def P_high(grid: Grid, f, N: int) -> np.ndarray:
    """``P_{>~N} = sum_{K >= N/4} P_K``; complement of ``P_low``."""
    return lp_aggregate(grid, f, levels_band(grid, N / 4, np.inf))


def dealias(grid: Grid, f) -> np.ndarray:
    """Two-thirds truncation of a (product) field."""
    fh = np.fft.rfft(np.asarray(f, dtype=float))
    fh[~grid.dealias_mask()] = 0.0
    return grid.ifft(fh)


def truncate(grid: Grid, f, n: float) -> np.ndarray:
    """Sharp frequency cutoff keeping ``|xi| <= n``."""
    fh = grid.fft(f)
    fh[grid.xi > n * (1 + 1e-12)] = 0.0
    return grid.ifft(fh)
