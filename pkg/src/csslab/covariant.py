"""Covariant derivatives, Galilean vector fields and their identities.

``D_j = d_j + i A_j``, ``J_k = x_k + 2it d_k`` and ``bfJ_k = x_k + 2it D_k``.
``x_k`` is the centered sawtooth coordinate, so every ``J`` operator is only
meaningful for fields that stay away from the box edge.

The identity checks return relative residuals. Wherever a curvature
``F12`` enters they use the torus form ``F12 = -(|phi|^2 - mean)/2`` (see
:mod:`csslab.gauge`).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DomainValidityWarning, ParameterError, PreconditionError
from .gauge import GaugeConfiguration, constraint_residual, fingerprint, neutral_density
from .grid import SpectralGrid

BOUNDARY_TOLERANCE = 1e-8
CONSTRAINT_TOLERANCE = 1e-9
GN_CONSTANT = 3.0

# Levi-Civita symbol on axis labels 1, 2
EPS = {(1, 1): 0.0, (1, 2): 1.0, (2, 1): -1.0, (2, 2): 0.0}


@dataclass(frozen=True)
class OperatorContext:
    """Time and gauge potentials entering ``D`` and ``bfJ``; ``gauge=None`` means ``A = 0``."""

    grid: SpectralGrid
    t: float = 0.0
    gauge: GaugeConfiguration | None = None

    def potential(self, j: int):
        if self.gauge is None:
            return 0.0
        return self.gauge.a1 if j == 1 else self.gauge.a2


def _axis(j: int) -> None:
    if j not in (1, 2):
        raise ParameterError(f"axis must be 1 or 2, got {j!r}")


def check_boundary(grid: SpectralGrid, psi: np.ndarray, tolerance: float = BOUNDARY_TOLERANCE) -> float:
    """Warn if ``psi`` carries more than ``tolerance`` of its mass in the edge strip."""
    frac = grid.boundary_mass_fraction(psi)
    if frac > tolerance:
        warnings.warn(
            f"boundary mass fraction {frac:.3e} exceeds {tolerance:.0e}; "
            "coordinate weights see the sawtooth jump",
            DomainValidityWarning,
            stacklevel=3,
        )
    return frac


def cov_grad(psi: np.ndarray, ctx: OperatorContext, j: int) -> np.ndarray:
    """``D_j psi = d_j psi + i A_j psi``."""
    _axis(j)
    psi = np.asarray(psi, dtype=np.complex128)
    out = ctx.grid.derivative(psi, j)
    if ctx.gauge is not None:
        out = out + 1j * ctx.potential(j) * psi
    return out


def J_op(grid: SpectralGrid, psi: np.ndarray, t: float, k: int, warn: bool = True) -> np.ndarray:
    """``J_k psi = x_k psi + 2it d_k psi``."""
    _axis(k)
    psi = np.asarray(psi, dtype=np.complex128)
    if warn:
        check_boundary(grid, psi)
    out = grid.x[k - 1] * psi
    if t != 0:
        out = out + 2j * t * grid.derivative(psi, k)
    return out


def bfJ_op(psi: np.ndarray, ctx: OperatorContext, k: int, warn: bool = True) -> np.ndarray:
    """``bfJ_k psi = x_k psi + 2it D_k psi``."""
    _axis(k)
    psi = np.asarray(psi, dtype=np.complex128)
    if warn:
        check_boundary(ctx.grid, psi)
    out = ctx.grid.x[k - 1] * psi
    if ctx.t != 0:
        out = out + 2j * ctx.t * cov_grad(psi, ctx, k)
    return out


def _require_sourced(grid: SpectralGrid, phi: np.ndarray, ctx: OperatorContext) -> None:
    if ctx.gauge is None:
        if np.any(phi):
            raise PreconditionError("context has no gauge but phi is nonzero")
        return
    if ctx.gauge.source_hash != fingerprint(phi):
        raise PreconditionError("context gauge was not sourced by phi")
    div, curl = constraint_residual(grid, phi, ctx.gauge)
    scale = grid.lp_norm(np.abs(phi) ** 2, 2)
    if curl > CONSTRAINT_TOLERANCE * scale or div > CONSTRAINT_TOLERANCE * max(scale, 1e-300):
        raise PreconditionError(f"gauge violates the constraints (div {div:.2e}, curl {curl:.2e})")


def _neutral(phi: np.ndarray, ctx: OperatorContext) -> np.ndarray | float:
    return 0.0 if ctx.gauge is None else neutral_density(phi)


def commutator_JD_sides(
    psi: np.ndarray, phi: np.ndarray, ctx: OperatorContext, j: int, k: int
) -> tuple[np.ndarray, np.ndarray]:
    """Both sides of ``bfJ_j D_k psi - D_k bfJ_j psi = -delta_jk psi + t eps_jk F psi``.

    Here ``F = |phi|^2 - mean``. The sign of the ``delta`` term follows from
    ``x_j d_k - d_k x_j = -delta_jk``.
    """
    lhs = bfJ_op(cov_grad(psi, ctx, k), ctx, j, warn=False) - cov_grad(bfJ_op(psi, ctx, j, warn=False), ctx, k)
    rhs = -(1.0 if j == k else 0.0) * psi + ctx.t * EPS[(j, k)] * _neutral(phi, ctx) * psi
    return lhs, rhs


def check_commutator_JD(
    psi: np.ndarray, phi: np.ndarray, ctx: OperatorContext, require_constraint: bool = True
) -> float:
    """Max over ``(j, k)`` of the commutator residual divided by ``||psi||_2``."""
    grid = ctx.grid
    psi = np.asarray(grid.check(psi), dtype=np.complex128)
    if require_constraint:
        _require_sourced(grid, phi, ctx)
    check_boundary(grid, psi)
    norm = grid.lp_norm(psi, 2)
    if norm == 0:
        return 0.0
    worst = 0.0
    for j in (1, 2):
        for k in (1, 2):
            lhs, rhs = commutator_JD_sides(psi, phi, ctx, j, k)
            worst = max(worst, grid.lp_norm(lhs - rhs, 2) / norm)
    return worst


def sobolev3_norm(grid: SpectralGrid, psi: np.ndarray) -> float:
    """``||(1 + |k|^2)^{3/2} psi_hat||_2``, an ``H^3`` size."""
    coeffs = grid.fft(psi) * (1.0 + grid.ksq) ** 1.5
    return grid.lp_norm(grid.ifft(coeffs), 2)


def check_spatial_commutator_D(
    psi: np.ndarray, phi: np.ndarray, ctx: OperatorContext, require_constraint: bool = True
) -> float:
    """Residual of ``D_k D_l D_l psi = D_l D_l D_k psi - i eps_kl (F D_l psi + Re(phi conj(D_l phi)) psi)``.

    ``F = |phi|^2 - mean``; the result is divided by the ``H^3`` norm of ``psi``.
    """
    grid = ctx.grid
    psi = np.asarray(grid.check(psi), dtype=np.complex128)
    phi = np.asarray(phi, dtype=np.complex128)
    if require_constraint:
        _require_sourced(grid, phi, ctx)
    scale = sobolev3_norm(grid, psi)
    if scale == 0:
        return 0.0
    dpsi = {j: cov_grad(psi, ctx, j) for j in (1, 2)}
    dphi = {j: cov_grad(phi, ctx, j) for j in (1, 2)}
    lap_psi = sum(cov_grad(cov_grad(psi, ctx, l), ctx, l) for l in (1, 2))
    dens = _neutral(phi, ctx)
    worst = 0.0
    for k in (1, 2):
        l = 2 if k == 1 else 1
        lhs = cov_grad(lap_psi, ctx, k)
        rhs = sum(cov_grad(cov_grad(dpsi[k], ctx, m), ctx, m) for m in (1, 2))
        sym = 0.5 * (phi * np.conj(dphi[l]) + dphi[l] * np.conj(phi))
        rhs = rhs - 1j * EPS[(k, l)] * (dens * dpsi[l] + sym * psi)
        worst = max(worst, grid.lp_norm(lhs - rhs, 2) / scale)
    return worst


def check_curvature_commutator(
    psi: np.ndarray, phi: np.ndarray, ctx: OperatorContext, require_constraint: bool = True
) -> float:
    """Residual of ``[D1, D2] psi = -(i/2)(|phi|^2 - mean) psi`` divided by ``||psi||_2``."""
    grid = ctx.grid
    psi = np.asarray(grid.check(psi), dtype=np.complex128)
    if require_constraint:
        _require_sourced(grid, phi, ctx)
    norm = grid.lp_norm(psi, 2)
    if norm == 0:
        return 0.0
    lhs = cov_grad(cov_grad(psi, ctx, 2), ctx, 1) - cov_grad(cov_grad(psi, ctx, 1), ctx, 2)
    rhs = -0.5j * _neutral(phi, ctx) * psi
    return grid.lp_norm(lhs - rhs, 2) / norm


def _leibniz(grid, op, psi1, psi2, psi3, sign_middle):
    worst = 0.0
    for k in (1, 2):
        lhs = op(psi1 * np.conj(psi2) * psi3, k)
        terms = (
            op(psi1, k) * np.conj(psi2) * psi3,
            sign_middle * psi1 * np.conj(op(psi2, k)) * psi3,
            psi1 * np.conj(psi2) * op(psi3, k),
        )
        scale = sum(grid.lp_norm(term, 2) for term in terms)
        if scale == 0:
            continue
        worst = max(worst, grid.lp_norm(lhs - sum(terms), 2) / scale)
    return worst


def check_leibniz_J(
    psi1: np.ndarray, psi2: np.ndarray, psi3: np.ndarray, t: float, ctx: OperatorContext | None = None
) -> float:
    """Residual of ``J_k(p1 conj(p2) p3) = (J_k p1) conj(p2) p3 - p1 conj(J_k p2) p3 + p1 conj(p2) J_k p3``.

    With a context carrying a gauge the covariant ``bfJ`` is used. The residual
    is divided by the summed L2 sizes of the three right-hand terms.
    """
    if ctx is None:
        raise ParameterError("a grid context is required")
    grid = ctx.grid
    ctx = OperatorContext(grid, t, ctx.gauge)
    fields = [np.asarray(grid.check(p), dtype=np.complex128) for p in (psi1, psi2, psi3)]
    for p in fields:
        check_boundary(grid, p)
    return _leibniz(grid, lambda u, k: bfJ_op(u, ctx, k, warn=False), *fields, sign_middle=-1.0)


def check_leibniz_D(psi1: np.ndarray, psi2: np.ndarray, psi3: np.ndarray, ctx: OperatorContext) -> float:
    """Residual of ``D_k(p1 conj(p2) p3) = (D_k p1) conj(p2) p3 + p1 conj(D_k p2) p3 + p1 conj(p2) D_k p3``."""
    grid = ctx.grid
    fields = [np.asarray(grid.check(p), dtype=np.complex128) for p in (psi1, psi2, psi3)]
    return _leibniz(grid, lambda u, k: cov_grad(u, ctx, k), *fields, sign_middle=1.0)


def check_conjugation(psi: np.ndarray, ctx: OperatorContext) -> float:
    """Max pointwise gap between ``bfJ_k psi`` and ``2it e^{i|x|^2/4t} D_k (e^{-i|x|^2/4t} psi)``."""
    if not ctx.t > 0:
        raise ParameterError(f"conjugation identity needs t > 0, got {ctx.t}")
    grid = ctx.grid
    psi = np.asarray(grid.check(psi), dtype=np.complex128)
    check_boundary(grid, psi)
    chirp = np.exp(0.25j * grid.r2 / ctx.t)
    worst = 0.0
    for k in (1, 2):
        direct = bfJ_op(psi, ctx, k, warn=False)
        conj = 2j * ctx.t * chirp * cov_grad(np.conj(chirp) * psi, ctx, k)
        worst = max(worst, float(np.max(np.abs(direct - conj))))
    return worst


def l4_sum(grid: SpectralGrid, components) -> float:
    """``(sum_j ||u_j||_4^4)^{1/4}``."""
    return float(sum(grid.lp_norm(u, 4) ** 4 for u in components) ** 0.25)


def l2_sum(grid: SpectralGrid, components) -> float:
    """``(sum_j ||u_j||_2^2)^{1/2}``."""
    return float(np.sqrt(sum(grid.lp_norm(u, 2) ** 2 for u in components)))


def gn_ratio_D(psi: np.ndarray, ctx: OperatorContext) -> float:
    """``(sum_j ||D_j psi||_4^4)^{1/2} / (||psi||_inf ||D^(2) psi||_2)``; at most 3 by integration by parts."""
    grid = ctx.grid
    psi = np.asarray(grid.check(psi), dtype=np.complex128)
    sup = grid.linf_norm(psi)
    if sup == 0:
        raise ParameterError("ratio undefined for psi = 0")
    first = [cov_grad(psi, ctx, j) for j in (1, 2)]
    second = [cov_grad(first[k - 1], ctx, j) for j in (1, 2) for k in (1, 2)]
    return l4_sum(grid, first) ** 2 / (sup * l2_sum(grid, second))


def gn_ratio_J(psi: np.ndarray, ctx: OperatorContext) -> float:
    """``(sum_j ||bfJ_j psi||_4^4)^{1/2} / (||psi||_inf ||bfJ^(2) psi||_2)``."""
    grid = ctx.grid
    psi = np.asarray(grid.check(psi), dtype=np.complex128)
    sup = grid.linf_norm(psi)
    if sup == 0:
        raise ParameterError("ratio undefined for psi = 0")
    check_boundary(grid, psi)
    first = [bfJ_op(psi, ctx, j, warn=False) for j in (1, 2)]
    second = [bfJ_op(first[k - 1], ctx, j, warn=False) for j in (1, 2) for k in (1, 2)]
    return l4_sum(grid, first) ** 2 / (sup * l2_sum(grid, second))


def audit_gagliardo_nirenberg(psi: np.ndarray, ctx: OperatorContext) -> tuple[float, float]:
    """Return ``(ratio_D, ratio_J)``; both are bounded by :data:`GN_CONSTANT`."""
    return gn_ratio_D(psi, ctx), gn_ratio_J(psi, ctx)


def random_wavepackets(
    grid: SpectralGrid,
    rng: np.random.Generator,
    count: int = 3,
    width: float = 1.0,
    spread: float | None = None,
    max_mode: int = 4,
    band: int | None = None,
    jitter: float = 0.3,
) -> np.ndarray:
    """Smooth test field concentrated near the origin: a sum of Gaussian packets.

    Centers are drawn in ``|x_j| < spread`` (default ``L/8``), widths in
    ``width * [1 - jitter, 1 + jitter]`` and lattice momenta with ``|m_j| <= max_mode``. The result is
    projected onto ``|m_j| <= band`` (default: the two-thirds block), so
    products of fields have a known exact bandwidth.
    """
    spread = grid.L / 8 if spread is None else spread
    psi = np.zeros(grid.shape, dtype=np.complex128)
    x1, x2 = grid.x
    for _ in range(count):
        c = rng.uniform(-spread, spread, size=2)
        w = width * rng.uniform(1 - jitter, 1 + jitter)
        m = rng.integers(-max_mode, max_mode + 1, size=2)
        amp = rng.normal() + 1j * rng.normal()
        envelope = np.exp(-((x1 - c[0]) ** 2 + (x2 - c[1]) ** 2) / (2 * w * w))
        psi += amp * envelope * np.exp(1j * grid.dk * (m[0] * x1 + m[1] * x2))
    if band is None:
        mask = grid.dealias_mask()
    else:
        keep = np.abs(grid.modes) <= band
        mask = keep[:, None] & keep[None, :]
    return grid.ifft(grid.fft(psi) * mask)
