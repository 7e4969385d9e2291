import numpy as np


def band_limited(grid, rng, kmax=20, decay=1.5):
    """Random real field with modes ``1..kmax`` (in units of ``2 pi / L``) and algebraic decay."""
    k = np.arange(1, kmax + 1)
    a = rng.standard_normal(kmax) / k**decay
    b = rng.standard_normal(kmax) / k**decay
    phase = 2 * np.pi * np.outer(k, grid.x) / grid.L
    return a @ np.cos(phase) + b @ np.sin(phase) + rng.standard_normal()
