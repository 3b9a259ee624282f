"""Fourier-space form of the cubic transport term and its null structure.

With the profile ``f = e^{-it Delta} phi`` and the normalized transform of
:mod:`csslab.grid`, the cubic part ``N`` of the nonlinearity is

    4 pi^2 N_hat(xi) = e^{-it|xi|^2} sum_{eta, sigma} e^{it phase} K(eta) m(eta, sigma)
                       f_hat(xi - sigma) fbar_hat(sigma + eta - xi) f_hat(xi - eta) dk^4

with ``phase = 2 eta.sigma``, ``m = sigma2 eta1 - sigma1 eta2``,
``K(eta) = |eta|^-2`` (zero at ``eta = 0``) and ``fbar_hat(z) = conj(f_hat(-z))``.
Indices wrap modulo ``n``. The lattice sum equals the transform of the
physical-space ``N`` exactly when ``f_hat`` lives in the band
``|m_j| <= alias_free_band(n)``; outside it wrapped frequencies break the
algebra ``phase = 2 eta.sigma``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import CostGuardError, ParameterError
from .evolution import nonlinearity
from .gauge import gauge_from_phi
from .grid import SpectralGrid

MAX_DIRECT_N = 16
IBP_MIN_TIME = 0.5


def phase(eta: np.ndarray, sigma: np.ndarray) -> np.ndarray:
    """``2 eta.sigma``; arrays carry the two components on the last axis."""
    eta = np.asarray(eta, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    return 2.0 * (eta[..., 0] * sigma[..., 0] + eta[..., 1] * sigma[..., 1])


def symbol(eta: np.ndarray, sigma: np.ndarray) -> np.ndarray:
    """``sigma2 eta1 - sigma1 eta2``."""
    eta = np.asarray(eta, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    return sigma[..., 1] * eta[..., 0] - sigma[..., 0] * eta[..., 1]


def kernel(eta: np.ndarray) -> np.ndarray:
    """``|eta|^-2`` with the value 0 at ``eta = 0``."""
    eta = np.asarray(eta, dtype=float)
    r2 = eta[..., 0] ** 2 + eta[..., 1] ** 2
    out = np.zeros_like(r2)
    np.divide(1.0, r2, out=out, where=r2 > 0)
    return out


@dataclass(frozen=True)
class TrilinearSpec:
    """Phase, symbol and kernel of the cubic null form."""

    phase: Callable[[np.ndarray, np.ndarray], np.ndarray] = phase
    symbol: Callable[[np.ndarray, np.ndarray], np.ndarray] = symbol
    kernel: Callable[[np.ndarray], np.ndarray] = kernel


def alias_free_band(n: int) -> int:
    """Largest ``M`` such that the lattice sum is exact for ``f_hat`` supported in ``|m_j| <= M``.

    Every frequency combination then stays inside ``[-n/2, n/2)`` without
    wrapping: the product ``f fbar f`` reaches ``3M``.
    """
    return (n // 2 - 1) // 3


def band_mask(grid: SpectralGrid, band: int | None = None) -> np.ndarray:
    band = alias_free_band(grid.n) if band is None else band
    keep = np.abs(grid.modes) <= band
    return keep[:, None] & keep[None, :]


def _guard(grid: SpectralGrid) -> None:
    if grid.n > MAX_DIRECT_N:
        raise CostGuardError(
            f"direct O(n^4)-per-frequency sum refused for n={grid.n} (limit {MAX_DIRECT_N})"
        )


def _xi_indices(grid: SpectralGrid, xi) -> tuple[np.ndarray, bool]:
    """Flat FFT-order indices for signed mode pairs; ``None`` selects every frequency."""
    n = grid.n
    if xi is None:
        return np.arange(n * n), False
    arr = np.asarray(xi, dtype=np.int64)
    scalar = arr.ndim == 1
    arr = np.atleast_2d(arr)
    if arr.shape[-1] != 2:
        raise ParameterError(f"xi must be mode pairs, got shape {arr.shape}")
    if np.any(arr < -n // 2) or np.any(arr >= n // 2):
        raise ParameterError(f"xi modes must lie in [-{n // 2}, {n // 2})")
    flat = (arr[:, 0] % n) * n + (arr[:, 1] % n)
    return flat, scalar


class _Lattice:
    """Signed mode arrays and the ``(eta, sigma)`` weight matrix for one grid and time."""

    def __init__(self, grid: SpectralGrid, t: float):
        _guard(grid)
        n = grid.n
        m1, m2 = np.meshgrid(grid.modes, grid.modes, indexing="ij")
        self.m1 = m1.ravel()
        self.m2 = m2.ravel()
        dk = grid.dk
        eta = np.stack([self.m1, self.m2], axis=-1) * dk
        e = eta[:, None, :]
        s = eta[None, :, :]
        # weight without the symbol, and the symbol itself, rows eta, columns sigma
        self.base = np.exp(1j * t * phase(e, s)) * kernel(eta)[:, None]
        self.sym = symbol(e, s)
        self.eta = eta
        self.n = n
        self.measure = dk**4

    def shifted(self, x1, x2, a1, a2, sign: int = -1) -> np.ndarray:
        """Flat indices of ``(x1 + sign a1, x2 + sign a2)`` modulo ``n``."""
        n = self.n
        return ((x1 + sign * a1) % n) * n + ((x2 + sign * a2) % n)


def trilinear_N_hat(grid: SpectralGrid, f_hat: np.ndarray, t: float, xi=None) -> np.ndarray | complex:
    """Lattice quadrature of the trilinear representation of ``N_hat(t, xi)``.

    Parameters
    ----------
    grid : SpectralGrid
        Grid with ``n <= 16``.
    f_hat : ndarray
        Normalized transform of the profile, FFT order.
    t : float
        Time entering the phase ``e^{it 2 eta.sigma}`` and ``e^{-it|xi|^2}``.
    xi : sequence of int pairs, optional
        Signed mode numbers at which to evaluate. ``None`` returns the full
        ``(n, n)`` array in FFT order.
    """
    f_hat = np.asarray(grid.check(f_hat), dtype=np.complex128)
    lat = _Lattice(grid, float(t))
    weight = lat.base * lat.sym
    idx, scalar = _xi_indices(grid, xi)
    flat = f_hat.ravel()
    out = np.empty(idx.size, dtype=np.complex128)
    for pos, q in enumerate(idx):
        x1, x2 = grid.modes[q // grid.n], grid.modes[q % grid.n]
        out[pos] = _trilinear_at(lat, weight, flat, x1, x2)
    xi_sq = (grid.dk**2) * (grid.modes[idx // grid.n] ** 2 + grid.modes[idx % grid.n] ** 2)
    out *= np.exp(-1j * t * xi_sq) * lat.measure / (4 * np.pi**2)
    if xi is None:
        return out.reshape(grid.shape)
    return complex(out[0]) if scalar else out


def _trilinear_at(lat: _Lattice, weight: np.ndarray, flat: np.ndarray, x1: int, x2: int, mid=None, right=None):
    left = flat[lat.shifted(x1, x2, lat.m1, lat.m2)]  # f_hat(xi - sigma), by sigma
    if right is None:
        right = flat[lat.shifted(x1, x2, lat.m1, lat.m2)]  # f_hat(xi - eta), by eta
    else:
        right = right[lat.shifted(x1, x2, lat.m1, lat.m2)]
    # fbar_hat(sigma + eta - xi) = conj(f_hat(xi - sigma - eta))
    pair1 = lat.m1[:, None] + lat.m1[None, :]
    pair2 = lat.m2[:, None] + lat.m2[None, :]
    if mid is None:
        middle = np.conj(flat[lat.shifted(x1, x2, pair1, pair2)])
    else:
        middle = mid[lat.shifted(-x1, -x2, pair1, pair2, sign=1)]
    return np.sum(weight * middle * right[:, None] * left[None, :])


def physical_N_hat(grid: SpectralGrid, f_hat: np.ndarray, t: float) -> np.ndarray:
    """Transform of the physical-space cubic term built by :func:`csslab.evolution.nonlinearity`."""
    f_hat = grid.check(f_hat)
    phi_hat = np.exp(-1j * t * grid.ksq) * f_hat
    phi = grid.transform(phi_hat, "inverse")
    n_part, _, _ = nonlinearity(grid, phi, gauge_from_phi(grid, phi), 0.0)
    return grid.transform(n_part)


def oracle_relative_error(grid: SpectralGrid, f_hat: np.ndarray, t: float) -> float:
    """``max |lattice - physical| / max |physical|`` over all frequencies."""
    a = trilinear_N_hat(grid, f_hat, t)
    b = physical_N_hat(grid, f_hat, t)
    scale = np.max(np.abs(b))
    diff = np.max(np.abs(a - b))
    return float(diff / scale) if scale else float(diff)


def random_band_limited(grid: SpectralGrid, rng: np.random.Generator, band: int | None = None) -> np.ndarray:
    """Random normalized spectrum supported in ``|m_j| <= band`` (default: the alias-free band)."""
    z = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    return z * band_mask(grid, band)


@dataclass
class SymbolReport:
    """Maximum residuals of the pointwise null identities over a sample."""

    symbol_identity: float = 0.0
    closedness: float = 0.0
    antisymmetry: float = 0.0
    phase_symmetry: float = 0.0
    parallel_null: float = 0.0
    checked: int = 0
    skipped: int = 0

    def passed(self, tol: float = 1e-13) -> bool:
        return max(
            self.symbol_identity, self.closedness, self.antisymmetry, self.phase_symmetry, self.parallel_null
        ) < tol


def null_symbol_checks(samples: Sequence[tuple[Sequence[float], Sequence[float]]] | np.ndarray) -> SymbolReport:
    """Check the symbol/phase identity and kernel closedness at sample points.

    ``samples`` holds ``(eta, sigma)`` pairs, shape ``(N, 2, 2)``. Samples with
    ``eta = 0`` are skipped and counted. For each point the report records

    * ``|m - (eta1 d_eta2 phase - eta2 d_eta1 phase) / 2|``,
    * ``|d_eta1(eta2 |eta|^-2) - d_eta2(eta1 |eta|^-2)|`` from closed-form partials,
    * ``|m(eta, sigma) + m(sigma, eta)|`` and ``|phase(eta, sigma) - phase(sigma, eta)|``,
    * ``|m(eta, c eta)|`` on the parallel set.

    The first is relative to ``|eta| |sigma|`` and the closedness residual to
    ``|eta|^-2``, so that the tolerance is scale-free.
    """
    arr = np.asarray(samples, dtype=float).reshape(-1, 2, 2)
    eta = arr[:, 0, :]
    sigma = arr[:, 1, :]
    r2 = eta[:, 0] ** 2 + eta[:, 1] ** 2
    ok = r2 > 0
    report = SymbolReport(checked=int(ok.sum()), skipped=int((~ok).sum()))
    if not ok.any():
        return report
    eta, sigma, r2 = eta[ok], sigma[ok], r2[ok]
    e1, e2 = eta[:, 0], eta[:, 1]
    s_norm = np.hypot(sigma[:, 0], sigma[:, 1])
    e_norm = np.sqrt(r2)
    scale = np.maximum(e_norm * s_norm, np.finfo(float).tiny)

    # d phase / d eta_j = 2 sigma_j
    via_phase = 0.5 * (e1 * 2 * sigma[:, 1] - e2 * 2 * sigma[:, 0])
    report.symbol_identity = float(np.max(np.abs(symbol(eta, sigma) - via_phase) / scale))

    # d_eta1(eta2/r2) = -2 eta1 eta2 / r2^2 and d_eta2(eta1/r2) = -2 eta1 eta2 / r2^2
    d1 = -2.0 * e1 * e2 / r2**2
    d2 = -2.0 * e2 * e1 / r2**2
    report.closedness = float(np.max(np.abs(d1 - d2) * r2))

    report.antisymmetry = float(np.max(np.abs(symbol(eta, sigma) + symbol(sigma, eta)) / scale))
    ph_scale = np.maximum(scale, np.finfo(float).tiny)
    report.phase_symmetry = float(np.max(np.abs(phase(eta, sigma) - phase(sigma, eta)) / ph_scale))
    c = s_norm / e_norm
    par = c[:, None] * eta
    report.parallel_null = float(np.max(np.abs(symbol(eta, par)) / scale))
    return report


@dataclass
class IBPDecomposition:
    """The four integrated-by-parts lattice sums at one frequency."""

    xi: tuple[int, int]
    t: float
    terms: tuple[complex, complex, complex, complex]
    recombined: complex
    direct: complex

    @property
    def defect(self) -> float:
        return abs(self.recombined - self.direct)


def ibp_decomposition(grid: SpectralGrid, f: np.ndarray, t: float, xi, x_f=None) -> IBPDecomposition:
    """Split ``e^{it|xi|^2} N_hat(xi)`` into the four integrated-by-parts terms.

    Parameters
    ----------
    grid : SpectralGrid
        Grid with ``n <= 16``.
    f : ndarray
        Profile in physical space.
    t : float
        Time, at least 0.5.
    xi : pair of int
        Signed mode numbers of the output frequency.
    x_f : pair of ndarray, optional
        ``(x1 f, x2 f)``; computed from the centered coordinates when omitted.

    Returns
    -------
    IBPDecomposition
        ``terms`` are ``N1..N4`` with the ``dk^4`` measure included,
        ``recombined = (N1 + N2 + N3 + N4) / (8 pi^2 i t)`` and ``direct`` is
        ``e^{it|xi|^2}`` times :func:`trilinear_N_hat`.

    Notes
    -----
    Frequency derivatives are transforms of coordinate-weighted fields,
    ``d_j f_hat = F(-i x_j f)`` and ``d_j fbar_hat = F(-i x_j conj(f))``, so the
    decomposition only converges under refinement; it is not a lattice identity.
    """
    t = float(t)
    if not np.isfinite(t) or t < IBP_MIN_TIME:
        raise ParameterError(f"t must be >= {IBP_MIN_TIME}, got {t}")
    f = np.asarray(grid.check(f), dtype=np.complex128)
    if x_f is None:
        x_f = (grid.x[0] * f, grid.x[1] * f)
    xi_idx, _ = _xi_indices(grid, xi)
    q = int(xi_idx[0])
    x1, x2 = int(grid.modes[q // grid.n]), int(grid.modes[q % grid.n])

    lat = _Lattice(grid, t)
    f_hat = grid.transform(f).ravel()
    fbar_hat = grid.transform(np.conj(f))  # fbar_hat(z), FFT order
    dfbar = [grid.transform(-1j * np.conj(xf)).ravel() for xf in x_f]  # d_j fbar_hat
    df = [grid.transform(-1j * xf).ravel() for xf in x_f]  # d_j f_hat
    fbar_flat = fbar_hat.ravel()

    eta1 = lat.eta[:, 0][:, None]
    eta2 = lat.eta[:, 1][:, None]
    w1 = lat.base * eta1
    w2 = lat.base * eta2
    # d_eta f_hat(xi - eta) = -(d f_hat)(xi - eta)
    n1 = -_trilinear_at(lat, w1, f_hat, x1, x2, mid=dfbar[1])
    n2 = _trilinear_at(lat, w2, f_hat, x1, x2, mid=dfbar[0])
    n3 = -_trilinear_at(lat, w1, f_hat, x1, x2, mid=fbar_flat, right=-df[1])
    n4 = _trilinear_at(lat, w2, f_hat, x1, x2, mid=fbar_flat, right=-df[0])
    terms = tuple(complex(v * lat.measure) for v in (n1, n2, n3, n4))
    recombined = sum(terms) / (8 * np.pi**2 * 1j * t)

    weight = lat.base * lat.sym
    direct = _trilinear_at(lat, weight, f_hat, x1, x2, mid=fbar_flat) * lat.measure / (4 * np.pi**2)
    return IBPDecomposition((x1, x2), t, terms, complex(recombined), complex(direct))


def ibp_defect(grid: SpectralGrid, f: np.ndarray, t: float, xis: Iterable) -> float:
    """Largest ``|recombined - direct|`` over the sampled frequencies."""
    return max(ibp_decomposition(grid, f, t, xi).defect for xi in xis)


@dataclass
class SupTrack:
    """Sup norms over frequency of the profile and the three nonlinear pieces."""

    t: np.ndarray
    fhat_sup: np.ndarray
    n_sup: np.ndarray
    r_sup: np.ndarray
    t_sup: np.ndarray
    slopes: dict = field(default_factory=dict)


def loglog_slope(t: np.ndarray, values: np.ndarray, shift: float = 1.0) -> float:
    """Least-squares slope of ``log values`` against ``log(shift + t)``; ``nan`` if degenerate."""
    t = np.asarray(t, dtype=float)
    v = np.asarray(values, dtype=float)
    ok = v > 0
    if ok.sum() < 2:
        return float("nan")
    return float(np.polyfit(np.log(shift + t[ok]), np.log(v[ok]), 1)[0])


def nhat_sup_track(
    grid: SpectralGrid,
    times: Sequence[float],
    fields: Sequence[np.ndarray],
    g: complex = 1.0,
    window: tuple[float, float] | None = (1.0, np.inf),
) -> SupTrack:
    """Per-checkpoint ``sup |f_hat|`` and ``sup |N_hat|``, ``sup |R_hat|``, ``sup |T_hat|``.

    ``fields`` are the physical fields ``phi`` at ``times``. Log-log slopes
    against ``1 + t`` are fitted over checkpoints inside ``window``.
    """
    if len(times) != len(fields):
        raise ParameterError("times and fields differ in length")
    if len(times) == 0:
        raise ParameterError("no checkpoints to track")
    rows = []
    for phi in fields:
        phi = np.asarray(grid.check(phi), dtype=np.complex128)
        n_part, r_part, t_part = nonlinearity(grid, phi, gauge_from_phi(grid, phi), g)
        rows.append(
            (
                np.max(np.abs(grid.transform(phi))),
                np.max(np.abs(grid.transform(n_part))),
                np.max(np.abs(grid.transform(r_part))),
                np.max(np.abs(grid.transform(t_part))),
            )
        )
    data = np.array(rows, dtype=float)
    tt = np.asarray(times, dtype=float)
    track = SupTrack(tt, data[:, 0], data[:, 1], data[:, 2], data[:, 3])
    sel = np.ones(tt.size, dtype=bool)
    if window is not None:
        sel = (tt >= window[0]) & (tt <= window[1])
    for name, col in (("N", track.n_sup), ("R", track.r_sup), ("T", track.t_sup)):
        track.slopes[name] = loglog_slope(tt[sel], col[sel])
    return track


__all__ = [
    "IBPDecomposition",
    "SupTrack",
    "SymbolReport",
    "TrilinearSpec",
    "alias_free_band",
    "band_mask",
    "ibp_decomposition",
    "ibp_defect",
    "kernel",
    "loglog_slope",
    "nhat_sup_track",
    "null_symbol_checks",
    "oracle_relative_error",
    "phase",
    "physical_N_hat",
    "random_band_limited",
    "symbol",
    "trilinear_N_hat",
]
