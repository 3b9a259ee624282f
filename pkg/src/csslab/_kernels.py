"""Fused pointwise loops for the time-stepping right-hand side.

Serial, no fastmath: results are bitwise reproducible.
"""

from __future__ import annotations

import numba as nb


@nb.njit(cache=True)
def density_and_velocity_potentials(rho_hat, kd1, kd2, inv_ksq, a1_hat, a2_hat):
    """Half-spectrum Biot-Savart: ``A1 = -1/2 d2 (-Delta)^-1 rho``, ``A2 = 1/2 d1 (-Delta)^-1 rho``."""
    for i in range(rho_hat.shape[0]):
        for j in range(rho_hat.shape[1]):
            v = rho_hat[i, j] * inv_ksq[i, j]
            a1_hat[i, j] = -0.5j * kd2[i, j] * v
            a2_hat[i, j] = 0.5j * kd1[i, j] * v


@nb.njit(cache=True)
def covariant_currents(phi, d1, d2, a1, a2, rho, q1, q2):
    """``q_l = Im(conj(phi) d_l phi) + A_l |phi|^2``."""
    for i in range(phi.shape[0]):
        for j in range(phi.shape[1]):
            p = phi[i, j]
            u = d1[i, j]
            w = d2[i, j]
            r = rho[i, j]
            q1[i, j] = p.real * u.imag - p.imag * u.real + a1[i, j] * r
            q2[i, j] = p.real * w.imag - p.imag * w.real + a2[i, j] * r


@nb.njit(cache=True)
def curl_source(q1_hat, q2_hat, kd1, kd2, inv_ksq, out):
    """Half spectrum of ``(-Delta)^-1 (d2 q1 - d1 q2)``."""
    for i in range(out.shape[0]):
        for j in range(out.shape[1]):
            out[i, j] = 1j * inv_ksq[i, j] * (kd2[i, j] * q1_hat[i, j] - kd1[i, j] * q2_hat[i, j])


@nb.njit(cache=True)
def assemble(phi, d1, d2, a1, a2, a0, rho, g, out):
    """``i (g rho - A0 - |A|^2) phi - 2 A.grad phi``."""
    for i in range(phi.shape[0]):
        for j in range(phi.shape[1]):
            b1 = a1[i, j]
            b2 = a2[i, j]
            w = g * rho[i, j] - a0[i, j] - b1 * b1 - b2 * b2
            out[i, j] = 1j * w * phi[i, j] - 2.0 * (b1 * d1[i, j] + b2 * d2[i, j])
