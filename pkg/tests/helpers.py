"""Direct-summation oracles shared by the test modules."""

import numpy as np


def direct_transform(grid, u):
    """O(n^4) Riemann sum ``dx^2/(2 pi) sum_x e^{-i x.xi} u(x)``, FFT-ordered ``xi``."""
    x1 = grid.x1d
    k = grid.k1d
    e = np.exp(-1j * np.outer(k, x1))  # (xi, x)
    return grid.dx**2 / (2 * np.pi) * e @ u @ e.T


def direct_inverse(grid, u_hat):
    """``(2 pi)^-1 sum_xi e^{i x.xi} u_hat(xi) dk^2`` by direct summation."""
    x1 = grid.x1d
    k = grid.k1d
    e = np.exp(1j * np.outer(x1, k))  # (x, xi)
    return grid.dk**2 / (2 * np.pi) * e @ u_hat @ e.T


def random_field(grid, rng, band=None):
    """Complex white noise, optionally restricted to ``|m_j| <= band``."""
    z = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    if band is None:
        return z
    keep = np.abs(grid.modes) <= band
    return grid.ifft(grid.fft(z) * (keep[:, None] & keep[None, :]))


def gaussian(grid, width=1.0, amplitude=1.0, center=(0.0, 0.0)):
    x1, x2 = grid.x
    r2 = (x1 - center[0]) ** 2 + (x2 - center[1]) ** 2
    return amplitude * np.exp(-r2 / (2 * width**2)) + 0j
