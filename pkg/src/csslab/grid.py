"""Periodic box geometry and Fourier multipliers.

Fields are plain ``(n, n)`` numpy arrays; axis 0 carries ``x1`` and axis 1
carries ``x2``. Coordinates are centered, ``x = -L/2 + j L/n``.

Fourier convention
------------------
The forward transform is the Riemann sum of ``(2 pi)^-1 int e^{-i x.xi} u dx``
over the centered grid::

    u_hat(xi) = dx^2 / (2 pi) * sum_x e^{-i x.xi} u(x)

and the inverse is ``u(x) = (2 pi)^-1 sum_xi e^{i x.xi} u_hat(xi) dk^2`` with
``dk = 2 pi / L``. Under this convention

* Parseval is ``sum |u|^2 dx^2 = sum |u_hat|^2 dk^2``,
* a product transforms to ``(2 pi)^-1 sum_eta u_hat(xi - eta) v_hat(eta) dk^2``
  with circular index arithmetic,
* ``d/dxi u_hat`` is the transform of ``-i x u``.

Multipliers are diagonal, so every operator below is applied to raw FFT
coefficients; the centering phase ``(-1)^(m1+m2)`` and the scale only enter
:meth:`SpectralGrid.transform`.
"""

from __future__ import annotations

import os

import numpy as np
import scipy.fft

from .errors import GridError, ParameterError


def fft_workers() -> int:
    """Thread count for FFTs, read from ``CSS_LAB_THREADS`` (default 1)."""
    raw = os.environ.get("CSS_LAB_THREADS", "1")
    try:
        workers = int(raw)
    except ValueError:
        raise ParameterError(f"CSS_LAB_THREADS must be an integer, got {raw!r}") from None
    return max(workers, 1)


def _check_axis(j: int) -> int:
    if j not in (1, 2):
        raise ParameterError(f"axis must be 1 or 2, got {j!r}")
    return j - 1


class SpectralGrid:
    """Uniform ``n x n`` grid on the torus ``[-L/2, L/2)^2``.

    Parameters
    ----------
    n : int
        Points per axis; a power of two, at least 8.
    L : float
        Side length of the box.
    """

    def __init__(self, n: int, L: float):
        if isinstance(n, bool) or not isinstance(n, (int, np.integer)):
            raise ParameterError(f"n must be an integer, got {n!r}")
        n = int(n)
        if n < 8 or n & (n - 1):
            raise ParameterError(f"n must be a power of two >= 8, got {n}")
        L = float(L)
        if not np.isfinite(L) or L <= 0:
            raise ParameterError(f"L must be positive and finite, got {L}")
        self.n = n
        self.L = L
        self.dx = L / n
        self.dk = 2 * np.pi / L

        self.x1d = (np.arange(n) - n // 2) * self.dx
        # integer mode numbers in FFT order: 0, 1, ..., n/2-1, -n/2, ..., -1
        self.modes = np.fft.fftfreq(n, 1.0 / n).astype(np.int64)
        self.k1d = self.dk * self.modes
        kd = self.k1d.copy()
        kd[n // 2] = 0.0  # Nyquist derivative coefficient
        self.kd1d = kd

        self.x = np.meshgrid(self.x1d, self.x1d, indexing="ij")
        self.k = np.meshgrid(self.k1d, self.k1d, indexing="ij")
        kd1, kd2 = np.meshgrid(kd, kd, indexing="ij")
        self.kd = (kd1, kd2)
        self.ik = (1j * kd1, 1j * kd2)
        self.ksq = self.k[0] ** 2 + self.k[1] ** 2
        inv = np.zeros_like(self.ksq)
        np.divide(1.0, self.ksq, out=inv, where=self.ksq > 0)
        self.inv_ksq = inv
        m1, m2 = np.meshgrid(self.modes, self.modes, indexing="ij")
        self._center_phase = np.where((m1 + m2) % 2 == 0, 1.0, -1.0)
        self._forward_scale = self.dx**2 / (2 * np.pi)

    def __repr__(self) -> str:
        return f"SpectralGrid(n={self.n}, L={self.L!r})"

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SpectralGrid):
            return NotImplemented
        return self.n == other.n and self.L == other.L

    def __hash__(self) -> int:
        return hash((self.n, self.L))

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n, self.n)

    @property
    def r2(self) -> np.ndarray:
        """Squared distance from the origin, ``|x|^2``."""
        return self.x[0] ** 2 + self.x[1] ** 2

    def check(self, field: np.ndarray) -> np.ndarray:
        """Return ``field`` as an array, raising :class:`GridError` on a shape mismatch."""
        arr = np.asarray(field)
        if arr.shape != self.shape:
            raise GridError(f"field of shape {arr.shape} does not match grid {self.shape}")
        return arr

    # raw FFT pair; multipliers act on these coefficients
    def fft(self, field: np.ndarray) -> np.ndarray:
        return scipy.fft.fft2(field, workers=fft_workers())

    def ifft(self, coeffs: np.ndarray) -> np.ndarray:
        return scipy.fft.ifft2(coeffs, workers=fft_workers())

    def transform(self, field: np.ndarray, direction: str = "forward") -> np.ndarray:
        """Normalized Fourier transform (see module docstring)."""
        field = self.check(field)
        if direction == "forward":
            return self._forward_scale * self._center_phase * self.fft(field)
        if direction == "inverse":
            return self.ifft(self._center_phase * field) / self._forward_scale
        raise ParameterError(f"direction must be 'forward' or 'inverse', got {direction!r}")

    def derivative(self, field: np.ndarray, j: int) -> np.ndarray:
        """Spectral ``d/dx_j``; the Nyquist coefficient is dropped."""
        a = _check_axis(j)
        field = self.check(field)
        out = self.ifft(self.ik[a] * self.fft(field))
        return out.real if np.isrealobj(field) else out

    def laplacian(self, field: np.ndarray) -> np.ndarray:
        field = self.check(field)
        out = self.ifft(-self.ksq * self.fft(field))
        return out.real if np.isrealobj(field) else out

    def inv_laplacian_derivative(self, field: np.ndarray, j: int) -> np.ndarray:
        """``d/dx_j (-Delta)^-1``, multiplier ``i k_j / |k|^2`` with zero mean output."""
        a = _check_axis(j)
        field = self.check(field)
        out = self.ifft(self.ik[a] * self.inv_ksq * self.fft(field))
        return out.real if np.isrealobj(field) else out

    def inv_laplacian(self, field: np.ndarray) -> np.ndarray:
        """``(-Delta)^-1`` on the mean-free part, multiplier ``1 / |k|^2``."""
        field = self.check(field)
        out = self.ifft(self.inv_ksq * self.fft(field))
        return out.real if np.isrealobj(field) else out

    def schrodinger_propagator(self, field: np.ndarray, dt: float) -> np.ndarray:
        """Apply ``e^{-i dt Delta}``, i.e. multiply coefficients by ``e^{i dt |k|^2}``.

        ``schrodinger_propagator(phi, t)`` is the profile ``f = e^{-it Delta} phi``
        and ``schrodinger_propagator(u0, -t)`` is the free evolution of ``u0``.
        """
        dt = float(dt)
        if not np.isfinite(dt):
            raise ParameterError(f"dt must be finite, got {dt}")
        field = self.check(field)
        return self.ifft(np.exp(1j * dt * self.ksq) * self.fft(field))

    def lp_norm(self, field: np.ndarray, p: float) -> float:
        """Riemann-sum ``L^p`` norm with cell weight ``dx^2``; ``p`` in {2, 3, 4, 6, inf}."""
        field = self.check(field)
        if p == np.inf:
            return self.linf_norm(field)
        if p not in (2, 3, 4, 6):
            raise ParameterError(f"unsupported exponent p={p!r}")
        mod = np.abs(field)
        if p == 2:
            return float(np.sqrt(np.sum(mod * mod) * self.dx**2))
        return float((np.sum(mod**p) * self.dx**2) ** (1.0 / p))

    def linf_norm(self, field: np.ndarray) -> float:
        field = self.check(field)
        return float(np.max(np.abs(field))) if field.size else 0.0

    def fourier_l2_norm(self, field_hat: np.ndarray) -> float:
        """``L^2`` norm of a normalized transform, weight ``dk^2``."""
        field_hat = self.check(field_hat)
        return float(np.sqrt(np.sum(np.abs(field_hat) ** 2)) * self.dk)

    def integrate(self, field: np.ndarray) -> complex | float:
        return np.sum(self.check(field)) * self.dx**2

    def boundary_mass_fraction(self, field: np.ndarray) -> float:
        """Share of ``int |u|^2`` in the strip ``max_k |x_k| > L/2 - L/8``."""
        field = self.check(field)
        dens = np.abs(field) ** 2
        total = float(np.sum(dens))
        if total == 0.0:
            return 0.0
        edge = self.L / 2 - self.L / 8
        strip = (np.abs(self.x[0]) > edge) | (np.abs(self.x[1]) > edge)
        return float(np.sum(dens[strip]) / total)

    def dealias_mask(self) -> np.ndarray:
        """Boolean mask of modes kept by the two-thirds rule, ``|m_j| <= n/3``."""
        keep = np.abs(self.modes) <= self.n / 3
        return keep[:, None] & keep[None, :]
