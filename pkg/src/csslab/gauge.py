"""Coulomb-gauge potentials and the constraint/curvature audits.

With ``rho = |phi|^2`` the spatial potentials are

    A1 = -1/2 d2 (-Delta)^-1 rho,    A2 = +1/2 d1 (-Delta)^-1 rho,

and the temporal potential is split into a quadratic and a quartic part

    A01 = (-Delta)^-1 (d2 q1 - d1 q2),        q_l = Im(conj(phi) d_l phi)
    A02 = (-Delta)^-1 (d2 (A1 rho) - d1 (A2 rho)).

Torus caveat: a periodic ``A`` has ``int (d1 A2 - d2 A1) = 0`` while
``int |phi|^2 > 0``, so the curl constraint can only hold for the mean-free
part of the density. Residuals below are measured on that part; the missing
net flux is reported separately by :func:`flux_defect`.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .grid import SpectralGrid


def fingerprint(phi: np.ndarray) -> str:
    """Short content hash tying potentials to the field that sourced them."""
    data = np.ascontiguousarray(phi, dtype=np.complex128)
    return hashlib.sha1(data.tobytes()).hexdigest()[:16]


@dataclass(frozen=True)
class GaugeConfiguration:
    """Coulomb potentials of one field; ``a0`` is stored as its two parts."""

    a01: np.ndarray
    a02: np.ndarray
    a1: np.ndarray
    a2: np.ndarray
    source_hash: str

    @property
    def a0(self) -> np.ndarray:
        return self.a01 + self.a02

    @property
    def a(self) -> tuple[np.ndarray, np.ndarray]:
        return (self.a1, self.a2)

    @classmethod
    def zero(cls, grid: SpectralGrid, phi: np.ndarray | None = None) -> "GaugeConfiguration":
        z = np.zeros(grid.shape)
        src = phi if phi is not None else np.zeros(grid.shape, dtype=complex)
        return cls(z, z.copy(), z.copy(), z.copy(), fingerprint(src))


def neutral_density(phi: np.ndarray) -> np.ndarray:
    """``|phi|^2`` minus its box average, the part a periodic curl can carry."""
    rho = np.abs(phi) ** 2
    return rho - rho.mean()


def biot_savart(grid: SpectralGrid, phi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Divergence-free potentials with ``curl A = -|phi|^2 / 2`` (mean-free part)."""
    phi = grid.check(phi)
    rho = phi.real**2 + phi.imag**2
    rho_hat = grid.fft(rho) * grid.inv_ksq
    # both potentials are real, so one complex inverse FFT carries the pair
    packed = grid.ifft(-0.5 * grid.ik[1] * rho_hat + 1j * (0.5 * grid.ik[0] * rho_hat))
    return packed.real.copy(), packed.imag.copy()


def covariant_current(
    grid: SpectralGrid, phi: np.ndarray, a1: np.ndarray, a2: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """``Q_l = Im(conj(phi) D_l phi) = Im(conj(phi) d_l phi) + A_l |phi|^2``."""
    phi_hat = grid.fft(phi)
    rho = phi.real**2 + phi.imag**2
    d1 = grid.ifft(grid.ik[0] * phi_hat)
    d2 = grid.ifft(grid.ik[1] * phi_hat)
    q1 = (np.conj(phi) * d1).imag + a1 * rho
    q2 = (np.conj(phi) * d2).imag + a2 * rho
    return q1, q2


def _curl_potential(grid: SpectralGrid, v1: np.ndarray, v2: np.ndarray) -> np.ndarray:
    """``(-Delta)^-1 (d2 v1 - d1 v2)`` for real ``v``."""
    hat = grid.ik[1] * grid.fft(v1) - grid.ik[0] * grid.fft(v2)
    return grid.ifft(grid.inv_ksq * hat).real


def solve_a0(
    grid: SpectralGrid, phi: np.ndarray, a1: np.ndarray, a2: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Quadratic and quartic parts ``(A01, A02)`` of the temporal potential."""
    phi = grid.check(phi)
    phi_hat = grid.fft(phi)
    q1 = (np.conj(phi) * grid.ifft(grid.ik[0] * phi_hat)).imag
    q2 = (np.conj(phi) * grid.ifft(grid.ik[1] * phi_hat)).imag
    rho = phi.real**2 + phi.imag**2
    a01 = _curl_potential(grid, q1, q2)
    a02 = _curl_potential(grid, a1 * rho, a2 * rho)
    return a01, a02


def gauge_from_phi(grid: SpectralGrid, phi: np.ndarray) -> GaugeConfiguration:
    """Solve all Coulomb potentials for ``phi``."""
    a1, a2 = biot_savart(grid, phi)
    a01, a02 = solve_a0(grid, phi, a1, a2)
    return GaugeConfiguration(a01, a02, a1, a2, fingerprint(phi))


def make_coulomb_data(
    grid: SpectralGrid, phi0: np.ndarray
) -> tuple[GaugeConfiguration, np.ndarray]:
    """Initial data set: the datum together with its Coulomb potentials."""
    phi0 = np.array(grid.check(phi0), dtype=np.complex128)
    if not np.all(np.isfinite(phi0)):
        raise ParameterError("initial datum has non-finite samples")
    return gauge_from_phi(grid, phi0), phi0


def constraint_residual(
    grid: SpectralGrid, phi: np.ndarray, gauge: GaugeConfiguration
) -> tuple[float, float]:
    """L2 residuals of ``div A = 0`` and ``curl A = -(|phi|^2 - mean)/2``."""
    div = grid.derivative(gauge.a1, 1) + grid.derivative(gauge.a2, 2)
    curl = grid.derivative(gauge.a2, 1) - grid.derivative(gauge.a1, 2)
    curl_res = curl + 0.5 * neutral_density(phi)
    return grid.lp_norm(div, 2), grid.lp_norm(curl_res, 2)


def flux_defect(grid: SpectralGrid, phi: np.ndarray) -> float:
    """L2 size of the net flux ``mean(|phi|^2)/2`` that no periodic potential carries."""
    return 0.5 * float(np.mean(np.abs(phi) ** 2)) * grid.L


def electric_field_rhs(
    grid: SpectralGrid, phi: np.ndarray, gauge: GaugeConfiguration
) -> tuple[np.ndarray, np.ndarray]:
    """Curvature components ``(F01, F02) = (-Q2, Q1)`` demanded by the field equations."""
    q1, q2 = covariant_current(grid, phi, gauge.a1, gauge.a2)
    return -q2, q1


def curvature_timeslice_check(grid: SpectralGrid, state_prev, state_next, dt: float) -> tuple[float, float]:
    """Residuals of ``F0j = d_t A_j - d_j A0`` against the field equations.

    ``state_prev`` and ``state_next`` carry ``phi`` and ``gauge`` at times
    ``dt`` apart. The time derivative is a centered difference and every other
    quantity is averaged, so the residual is ``O(dt^2)`` about the midpoint.
    The spatial mean of the right-hand side (the net current, which periodic
    potentials cannot balance) is excluded.
    """
    dt = float(dt)
    if not dt > 0:
        raise ParameterError(f"dt must be positive, got {dt}")
    gp, gn = state_prev.gauge, state_next.gauge
    a0_mid = 0.5 * (gp.a0 + gn.a0)
    rp = electric_field_rhs(grid, state_prev.phi, gp)
    rn = electric_field_rhs(grid, state_next.phi, gn)
    out = []
    for j, (ap, an) in enumerate(((gp.a1, gn.a1), (gp.a2, gn.a2)), start=1):
        lhs = (an - ap) / dt - grid.derivative(a0_mid, j)
        rhs = 0.5 * (rp[j - 1] + rn[j - 1])
        out.append(grid.lp_norm(lhs - (rhs - rhs.mean()), 2))
    return out[0], out[1]
