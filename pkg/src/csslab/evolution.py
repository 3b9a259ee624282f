"""Time integration in the Coulomb gauge.

The field obeys ``i d_t phi + Delta phi = i (N + R + T)`` written as
``d_t phi = i Delta phi + N + R + T`` with

    N = -i A01 phi - 2 A_l d_l phi
    R = -i A02 phi - i A_l A_l phi
    T = i g |phi|^2 phi

The profile ``f = e^{-it Delta} phi`` satisfies ``d_t f_hat = e^{it|xi|^2}
(N + R + T)^``, which is advanced by classical RK4. All potentials are
re-solved from ``phi`` at every stage.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.fft

from . import _kernels
from .errors import IntegrationError, ParameterError, PreconditionError
from .gauge import GaugeConfiguration, fingerprint, gauge_from_phi
from .grid import SpectralGrid, fft_workers

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SimulationState:
    t: float
    phi: np.ndarray
    gauge: GaugeConfiguration
    g: complex
    step_index: int = 0

    @classmethod
    def initial(cls, grid: SpectralGrid, phi0: np.ndarray, g: complex = 1.0, t: float = 0.0):
        phi0 = np.array(grid.check(phi0), dtype=np.complex128)
        return cls(float(t), phi0, gauge_from_phi(grid, phi0), g, 0)


def dealias(grid: SpectralGrid, field_hat: np.ndarray) -> np.ndarray:
    """Two-thirds rule on a Fourier-space field: zero modes with ``|m_j| > n/3``."""
    field_hat = grid.check(field_hat)
    return np.where(grid.dealias_mask(), field_hat, 0)


def nonlinearity(
    grid: SpectralGrid, phi: np.ndarray, gauge: GaugeConfiguration, g: complex
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Cubic transport part ``N``, quintic/quartic part ``R`` and local part ``T``."""
    phi = grid.check(phi)
    if gauge.source_hash != fingerprint(phi):
        raise PreconditionError("gauge configuration was not sourced by this field")
    phi_hat = grid.fft(phi)
    d1 = grid.ifft(grid.ik[0] * phi_hat)
    d2 = grid.ifft(grid.ik[1] * phi_hat)
    a1, a2 = gauge.a1, gauge.a2
    n_part = -1j * gauge.a01 * phi - 2 * (a1 * d1 + a2 * d2)
    r_part = -1j * gauge.a02 * phi - 1j * (a1 * a1 + a2 * a2) * phi
    t_part = 1j * g * np.abs(phi) ** 2 * phi
    return n_part, r_part, t_part


class _Kernel:
    """Right-hand side ``N + R + T`` on raw FFT coefficients.

    Four complex and six real FFTs per call; the pointwise work is fused in
    :mod:`csslab._kernels`.
    """

    def __init__(self, grid: SpectralGrid, g: complex, use_dealias: bool):
        n = grid.n
        h = n // 2 + 1
        self.grid = grid
        self.shape = (n, n)
        self.g = complex(g)
        self.ik1, self.ik2 = grid.ik
        self.kd1h = np.ascontiguousarray(grid.kd[0][:, :h])
        self.kd2h = np.ascontiguousarray(grid.kd[1][:, :h])
        self.invh = np.ascontiguousarray(grid.inv_ksq[:, :h])
        self.mask = grid.dealias_mask().astype(np.float64) if use_dealias else None
        self.a1_hat = np.empty((n, h), dtype=np.complex128)
        self.a2_hat = np.empty((n, h), dtype=np.complex128)
        self.a0_hat = np.empty((n, h), dtype=np.complex128)
        self.q1 = np.empty((n, n))
        self.q2 = np.empty((n, n))
        self.out = np.empty((n, n), dtype=np.complex128)

    def __call__(self, phi_hat: np.ndarray) -> np.ndarray:
        w = fft_workers()
        s = self.shape
        phi = scipy.fft.ifft2(phi_hat, workers=w)
        d1 = scipy.fft.ifft2(self.ik1 * phi_hat, workers=w)
        d2 = scipy.fft.ifft2(self.ik2 * phi_hat, workers=w)
        rho = phi.real * phi.real
        rho += phi.imag * phi.imag
        _kernels.density_and_velocity_potentials(
            scipy.fft.rfft2(rho, workers=w), self.kd1h, self.kd2h, self.invh, self.a1_hat, self.a2_hat
        )
        a1 = scipy.fft.irfft2(self.a1_hat, s=s, workers=w)
        a2 = scipy.fft.irfft2(self.a2_hat, s=s, workers=w)
        _kernels.covariant_currents(phi, d1, d2, a1, a2, rho, self.q1, self.q2)
        _kernels.curl_source(
            scipy.fft.rfft2(self.q1, workers=w),
            scipy.fft.rfft2(self.q2, workers=w),
            self.kd1h,
            self.kd2h,
            self.invh,
            self.a0_hat,
        )
        a0 = scipy.fft.irfft2(self.a0_hat, s=s, workers=w)
        _kernels.assemble(phi, d1, d2, a1, a2, a0, rho, self.g, self.out)
        out = scipy.fft.fft2(self.out, workers=w)
        if self.mask is not None:
            out *= self.mask
        return out


class Stepper:
    """Fixed-step RK4 for the profile, carried in a midpoint interaction picture.

    With ``E(s) = e^{-is|k|^2}`` (the free flow over time ``s``) one step is

        u  = E(h/2) phi_n
        k1 = E(h/2) F(phi_n)
        k2 = F(u + h/2 k1)
        k3 = F(u + h/2 k2)
        k4 = F(E(h/2) (u + h k3))
        phi_{n+1} = E(h/2) (u + h/6 (k1 + 2 k2 + 2 k3)) + h/6 k4

    which is classical RK4 applied to ``f_hat`` up to the constant unitary
    change of variables ``f_hat -> e^{-i(t_n + h/2)|k|^2} f_hat``.
    """

    def __init__(self, grid: SpectralGrid, g: complex = 1.0, dt: float = 1e-3, use_dealias: bool = True):
        dt = float(dt)
        if not np.isfinite(dt) or dt == 0:
            raise ParameterError(f"dt must be finite and nonzero, got {dt}")
        self.grid = grid
        self.g = g
        self.dt = dt
        self.use_dealias = use_dealias
        self.rhs = _Kernel(grid, g, use_dealias)
        self.half = np.exp(-0.5j * dt * grid.ksq)

    def advance(self, phi_hat: np.ndarray) -> np.ndarray:
        """One step on raw FFT coefficients."""
        h, e = self.dt, self.half
        F = self.rhs
        u = e * phi_hat
        k = F(phi_hat)
        k *= e
        acc = k.copy()
        stage = np.multiply(k, 0.5 * h, out=k)
        stage += u
        k = F(stage)
        acc += 2.0 * k
        stage = np.multiply(k, 0.5 * h, out=k)
        stage += u
        k = F(stage)
        acc += 2.0 * k
        stage = np.multiply(k, h, out=k)
        stage += u
        stage *= e
        k = F(stage)
        acc *= h / 6.0
        acc += u
        acc *= e
        k *= h / 6.0
        acc += k
        return acc


def step(grid: SpectralGrid, state: SimulationState, dt: float, use_dealias: bool = True) -> SimulationState:
    """Advance one RK4 step and re-solve the gauge."""
    stepper = Stepper(grid, state.g, dt, use_dealias)
    phi_hat = stepper.advance(grid.fft(state.phi))
    phi = grid.ifft(phi_hat)
    t = state.t + dt
    if not np.all(np.isfinite(phi)):
        raise IntegrationError("non-finite field", t, state.step_index + 1)
    return SimulationState(t, phi, gauge_from_phi(grid, phi), state.g, state.step_index + 1)


@dataclass
class Trajectory:
    """States kept at checkpoints, ordered by time."""

    grid: SpectralGrid
    states: list[SimulationState] = field(default_factory=list)

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.states])


def integrate(
    grid: SpectralGrid,
    phi0: np.ndarray,
    *,
    g: complex = 1.0,
    dt: float = 1e-3,
    t_end: float = 1.0,
    checkpoint_stride: int | None = None,
    use_dealias: bool = True,
    t0: float = 0.0,
    on_checkpoint: Callable[[SimulationState], None] | None = None,
) -> Trajectory:
    """Integrate from ``t0`` to ``t0 + t_end`` with a fixed step.

    ``t_end`` must be an integer multiple of ``|dt|``; a negative ``dt``
    integrates backwards over the same span. A state is kept at step 0, every
    ``checkpoint_stride`` steps and at the final step.
    """
    dt = float(dt)
    t_end = float(t_end)
    if t_end < 0:
        raise ParameterError(f"t_end must be >= 0, got {t_end}")
    if not np.isfinite(dt) or dt == 0:
        raise ParameterError(f"dt must be finite and nonzero, got {dt}")
    ratio = t_end / abs(dt)
    nsteps = int(round(ratio))
    if abs(ratio - nsteps) > 1e-9 * max(1.0, ratio):
        raise ParameterError(f"t_end={t_end} is not a multiple of dt={dt}")
    stride = checkpoint_stride or max(nsteps, 1)
    if stride < 1:
        raise ParameterError(f"checkpoint_stride must be >= 1, got {stride}")

    phi0 = np.array(grid.check(phi0), dtype=np.complex128)
    stepper = Stepper(grid, g, dt, use_dealias)
    phi_hat = grid.fft(phi0)
    if use_dealias:
        phi_hat = phi_hat * grid.dealias_mask()

    traj = Trajectory(grid)

    def keep(step_index: int):
        phi = grid.ifft(phi_hat)
        st = SimulationState(t0 + step_index * dt, phi, gauge_from_phi(grid, phi), g, step_index)
        traj.states.append(st)
        if on_checkpoint is not None:
            on_checkpoint(st)

    keep(0)
    for i in range(1, nsteps + 1):
        phi_hat = stepper.advance(phi_hat)
        if not np.all(np.isfinite(phi_hat)):
            raise IntegrationError("non-finite field", t0 + i * dt, i)
        if i % stride == 0 or i == nsteps:
            keep(i)
    return traj


def plane_wave_exact(grid: SpectralGrid, amplitude: float, mode: tuple[int, int], g: complex, t: float) -> np.ndarray:
    """Exact lattice plane wave ``eps e^{ik.x} e^{i(-|k|^2 + g eps^2) t}`` for real ``g``.

    All potentials vanish because the density and current are constant.
    """
    k1 = grid.dk * mode[0]
    k2 = grid.dk * mode[1]
    phase = k1 * grid.x[0] + k2 * grid.x[1]
    omega = -(k1 * k1 + k2 * k2) + g * amplitude**2
    return amplitude * np.exp(1j * phase) * np.exp(1j * omega * t)


def relative_l2_error(grid: SpectralGrid, phi: np.ndarray, ref: np.ndarray) -> float:
    den = grid.lp_norm(ref, 2)
    return grid.lp_norm(phi - ref, 2) / den if den else grid.lp_norm(phi, 2)


__all__ = [
    "SimulationState",
    "Stepper",
    "Trajectory",
    "dealias",
    "integrate",
    "nonlinearity",
    "plane_wave_exact",
    "relative_l2_error",
    "step",
]
