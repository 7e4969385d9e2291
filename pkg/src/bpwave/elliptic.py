"""The dispersive operator ``T_b v = -(mu/3)(h_b^3 v_x)_x + g v``, its inverse, and the
flat-bottom Helmholtz inverse with its explicit exponential kernel.

Two realizations of ``T_b`` are available:

``"fd"``
    conservative second-order differences with face-averaged ``h_b^3``. A
    symmetric cyclic tridiagonal matrix, inverted directly.
``"spectral"``
    spectral derivatives, inverted by preconditioned conjugate gradients
    with the ``"fd"`` matrix as preconditioner. This is what the time
    integrators use, so that the flat-bottom case is exactly the Fourier
    multiplier ``1/(1 + mu xi^2 / 3)``.
"""

from __future__ import annotations

import numpy as np

from .bathymetry import Bathymetry
from .grid import Grid, spectral_derivative
from .kernels import cyclic_tridiag_solve

DISCRETIZATIONS = ("fd", "spectral")


class NotPositiveDefinite(ValueError):
    """The assembled operator is not coercive (depth or smallness hypothesis violated)."""


def coercivity_constant(h0: float, mu: float) -> float:
    """``h0 / max(1, 18 / (mu h0^2))``."""
    return h0 / max(1.0, 18.0 / (mu * h0**2))


class TbOperator:
    def __init__(self, bath: Bathymetry, mu: float, discretization: str = "fd", cg_tol: float = 1e-13, cg_maxiter: int = 500):
        if not mu > 0:
            raise ValueError(f"mu must be positive, got {mu}")
        if discretization not in DISCRETIZATIONS:
            raise ValueError(f"discretization must be one of {DISCRETIZATIONS}")
        self.bath = bath
        self.grid: Grid = bath.grid
        self.mu = float(mu)
        self.discretization = discretization
        self.cg_tol = cg_tol
        self.cg_maxiter = cg_maxiter
        self.g_full = bath.g_full(mu)
        self.h3 = bath.h_b**3
        dx2 = self.grid.dx**2
        face = 0.5 * (self.h3 + np.roll(self.h3, -1))  # face i+1/2
        c = self.mu / 3.0 / dx2
        self.upper = -c * face
        self.lower = -c * np.roll(face, 1)
        self.diag = self.g_full - self.upper - self.lower
        self.last_iterations = 0
        self._check_positive()

    # assembly ------------------------------------------------------------
    def _check_positive(self):
        if np.min(self.bath.h_b) <= 0:
            raise NotPositiveDefinite(
                f"min h_b = {np.min(self.bath.h_b):.4g} <= 0; depth hypothesis violated"
            )
        if np.min(self.g_full) > 0:
            return  # diagonal dominance (fd) / positive symbol (spectral)
        lam = self.smallest_eigenvalue()
        if lam <= 0:
            raise NotPositiveDefinite(
                f"operator has eigenvalue {lam:.4g} <= 0 (min g = {np.min(self.g_full):.4g}); "
                "bottom too steep for the smallness hypothesis"
            )

    def smallest_eigenvalue(self) -> float:
        from scipy.sparse.linalg import eigsh

        if self.discretization == "fd":
            A = self.sparse_matrix()
            return float(eigsh(A, k=1, which="SA", tol=1e-10, return_eigenvectors=False)[0])
        from scipy.sparse.linalg import LinearOperator

        M = self.grid.M
        op = LinearOperator((M, M), matvec=lambda v: self._apply_spectral(np.ravel(v)), dtype=float)
        return float(eigsh(op, k=1, which="SA", tol=1e-10, return_eigenvectors=False)[0])

    def sparse_matrix(self):
        from scipy.sparse import diags

        M = self.grid.M
        up = self.upper
        lo = self.lower
        return diags(
            [self.diag, up[:-1], lo[1:], [up[-1]], [lo[0]]],
            [0, 1, -1, -(M - 1), M - 1],
            shape=(M, M),
            format="csr",
        )

    def matrix(self) -> np.ndarray:
        """Dense matrix of the current realization (test oracle only)."""
        if self.discretization == "fd":
            return self.sparse_matrix().toarray()
        eye = np.eye(self.grid.M)
        return np.column_stack([self._apply_spectral(e) for e in eye])

    # application ---------------------------------------------------------
    def _apply_fd(self, v):
        return self.diag * v + self.upper * np.roll(v, -1) + self.lower * np.roll(v, 1)

    def _apply_spectral(self, v):
        flux = self.h3 * spectral_derivative(self.grid, v)
        return -self.mu / 3.0 * spectral_derivative(self.grid, flux) + self.g_full * v

    def apply(self, v) -> np.ndarray:
        v = self.grid.check(v)
        return self._apply_fd(v) if self.discretization == "fd" else self._apply_spectral(v)

    # inversion -----------------------------------------------------------
    def _solve_fd(self, f):
        return np.asarray(cyclic_tridiag_solve(self.lower, self.diag, self.upper, f))

    def _solve_spectral(self, f):
        if self.bath.flat:
            self.last_iterations = 0
            return helmholtz_solve(self.grid, f, self.mu / 3.0)
        norm_f = np.linalg.norm(f)
        if norm_f == 0:
            self.last_iterations = 0
            return np.zeros_like(f)
        from scipy.sparse.linalg import LinearOperator, cg

        M = self.grid.M
        A = LinearOperator((M, M), matvec=lambda v: self._apply_spectral(np.ravel(v)), dtype=float)
        P = LinearOperator((M, M), matvec=lambda v: self._solve_fd(np.ravel(v)), dtype=float)
        count = [0]

        def tick(_):
            count[0] += 1

        x, info = cg(A, f, x0=self._solve_fd(f), rtol=self.cg_tol, atol=0.0, maxiter=self.cg_maxiter, M=P,
                     callback=tick)
        self.last_iterations = count[0]
        if info != 0:
            res = np.linalg.norm(f - self._apply_spectral(x)) / norm_f
            if res > 1e3 * self.cg_tol:  # otherwise stagnated at round-off level
                raise RuntimeError(f"conjugate gradients did not converge: residual {res:.3g}")
        return x

    def solve(self, f) -> np.ndarray:
        f = self.grid.check(f)
        return self._solve_fd(f) if self.discretization == "fd" else self._solve_spectral(f)

    # quadratic forms -----------------------------------------------------
    def coercivity_form(self, u) -> float:
        """Sum-of-squares form of ``<T_b u, u>`` evaluated by quadrature."""
        u = self.grid.check(u)
        bath, mu = self.bath, self.mu
        ux = spectral_derivative(self.grid, u)
        hb = bath.h_b
        sq = hb / np.sqrt(3.0) * ux - np.sqrt(3.0) * bath.beta / 2.0 * bath.b_x * u
        integrand = hb * u**2 + mu * hb * sq**2 + mu * bath.beta**2 / 4.0 * hb * bath.b_x**2 * u**2
        return self.grid.integrate(integrand)

    def quadratic_form(self, u) -> float:
        return self.grid.inner(self.apply(u), u)


def apply_Tb(op: TbOperator, v) -> np.ndarray:
    return op.apply(v)


def solve_Tb(op: TbOperator, f) -> np.ndarray:
    return op.solve(f)


def coercivity_form(op: TbOperator, u) -> float:
    return op.coercivity_form(u)


def apply_Tb_expanded(bath: Bathymetry, mu: float, v) -> np.ndarray:
    """``h_b (1 + mu T[h_b]) v`` from the unsimplified operator, spectrally.

    Independent of :class:`TbOperator`; used as an oracle.
    """
    g = bath.grid
    D = lambda f: spectral_derivative(g, f)  # noqa: E731
    hb, bx, beta = bath.h_b, bath.b_x, bath.beta
    vx = D(v)
    T = -D(hb**3 * vx) / (3 * hb) + beta / (2 * hb) * (D(hb**2 * bx * v) - hb**2 * bx * vx) + beta**2 * bx**2 * v
    return hb * (v + mu * T)


def helmholtz_solve(grid: Grid, f, a: float) -> np.ndarray:
    """``(1 - a d_x^2)^{-1} f`` as the multiplier ``1 / (1 + a xi^2)``."""
    if not (np.isfinite(a) and a >= 0):
        raise ValueError(f"Helmholtz parameter must be non-negative, got {a}")
    if a == 0:
        return grid.check(f).copy()
    return grid.ifft(grid.fft(f) / (1.0 + a * grid.xi**2))


def _check_mu(mu):
    if not (np.isfinite(mu) and mu > 0):
        raise ValueError(f"mu must be positive, got {mu}")


def kernel_Kmu(mu: float, x):
    """``K_mu(x) = (1/2) sqrt(3/mu) exp(-sqrt(3/mu) |x|)``."""
    _check_mu(mu)
    k = np.sqrt(3.0 / mu)
    out = 0.5 * k * np.exp(-k * np.abs(np.asarray(x, dtype=float)))
    return out if np.ndim(out) else float(out)


def kernel_kmu_derivative(mu: float, x):
    """``k_mu = d/dx K_mu = -(3 / (2 mu)) sign(x) exp(-sqrt(3/mu)|x|)``, zero at the origin.

    The sign follows from differentiating ``K_mu``: the kernel decreases away
    from the origin, so ``k_mu`` is negative for ``x > 0``.
    """
    _check_mu(mu)
    x = np.asarray(x, dtype=float)
    out = -1.5 / mu * np.sign(x) * np.exp(-np.sqrt(3.0 / mu) * np.abs(x))
    return out if np.ndim(out) else float(out)


def periodized_Kmu(grid: Grid, mu: float, center: float = 0.0, images: int = 8) -> np.ndarray:
    """``K_mu`` summed over periodic images, sampled on the grid around ``center``."""
    d = grid.x - center
    return sum(kernel_Kmu(mu, d + k * grid.L) for k in range(-images, images + 1))
