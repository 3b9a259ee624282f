"""Per-checkpoint observables, run-level audits and their file formats."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, fields
from typing import Iterable, Sequence

import numpy as np

from .covariant import OperatorContext, J_op, bfJ_op, cov_grad, l2_sum
from .errors import GridError, ParameterError
from .evolution import SimulationState
from .gauge import constraint_residual, gauge_from_phi
from .grid import SpectralGrid

WEIGHT_VALIDITY = 1e-6  # boundary mass fraction above which weighted norms are unreliable


@dataclass(frozen=True)
class DiagnosticsRecord:
    """Scalars measured at one checkpoint; field order is the CSV column order."""

    t: float
    charge: float
    linf: float
    decay_q: float
    fhat_sup: float
    J_norm: float
    JD_norm: float
    J2_norm: float
    bfJ_norm: float
    bfJD_norm: float
    bfJ2_norm: float
    L2_norm: float
    D_norm: float
    D2_norm: float
    div_res: float
    curl_res: float
    boundary_mass_fraction: float

    @classmethod
    def columns(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    def values(self) -> list[float]:
        return [getattr(self, name) for name in self.columns()]


def _relative(value: float, scale: float) -> float:
    return value / scale if scale > 0 else value


def compute_record(grid: SpectralGrid, state: SimulationState) -> DiagnosticsRecord:
    """Measure every :class:`DiagnosticsRecord` quantity for ``state``.

    ``D`` without bold is the flat gradient; the bold twins use the state's
    Coulomb potentials. ``div_res`` and ``curl_res`` are relative to
    ``||A||`` and ``|| |phi|^2 ||`` respectively.
    """
    phi = np.asarray(grid.check(state.phi), dtype=np.complex128)
    t = float(state.t)
    gauge = state.gauge
    cov = OperatorContext(grid, t, gauge)

    d = [grid.derivative(phi, j) for j in (1, 2)]
    d2 = [grid.derivative(d[k], j) for j in (1, 2) for k in (0, 1)]
    j1 = [J_op(grid, phi, t, k, warn=False) for k in (1, 2)]
    jd = [J_op(grid, d[k], t, j, warn=False) for j in (1, 2) for k in (0, 1)]
    j2 = [J_op(grid, j1[k], t, j, warn=False) for j in (1, 2) for k in (0, 1)]
    bd = [cov_grad(phi, cov, j) for j in (1, 2)]
    bj = [bfJ_op(phi, cov, k, warn=False) for k in (1, 2)]
    bjd = [bfJ_op(bd[k], cov, j, warn=False) for j in (1, 2) for k in (0, 1)]
    bj2 = [bfJ_op(bj[k], cov, j, warn=False) for j in (1, 2) for k in (0, 1)]

    div, curl = constraint_residual(grid, phi, gauge)
    a_norm = grid.lp_norm(gauge.a1, 2) + grid.lp_norm(gauge.a2, 2)
    rho_norm = grid.lp_norm(np.abs(phi) ** 2, 2)
    linf = grid.linf_norm(phi)
    return DiagnosticsRecord(
        t=t,
        charge=float(np.sum(np.abs(phi) ** 2) * grid.dx**2),
        linf=linf,
        decay_q=linf * (1.0 + t),
        fhat_sup=float(np.max(np.abs(grid.transform(phi)))),
        J_norm=l2_sum(grid, j1),
        JD_norm=l2_sum(grid, jd),
        J2_norm=l2_sum(grid, j2),
        bfJ_norm=l2_sum(grid, bj),
        bfJD_norm=l2_sum(grid, bjd),
        bfJ2_norm=l2_sum(grid, bj2),
        L2_norm=grid.lp_norm(phi, 2),
        D_norm=l2_sum(grid, d),
        D2_norm=l2_sum(grid, d2),
        div_res=_relative(div, a_norm),
        curl_res=_relative(curl, rho_norm),
        boundary_mass_fraction=grid.boundary_mass_fraction(phi),
    )


def state_from_field(grid: SpectralGrid, phi: np.ndarray, t: float, g: complex = 1.0, step_index: int = 0) -> SimulationState:
    phi = np.asarray(grid.check(phi), dtype=np.complex128)
    return SimulationState(float(t), phi, gauge_from_phi(grid, phi), g, step_index)


def records_from_fields(
    grid: SpectralGrid, times: Sequence[float], fields_: Sequence[np.ndarray], g: complex = 1.0
) -> list[DiagnosticsRecord]:
    return [compute_record(grid, state_from_field(grid, phi, t, g)) for t, phi in zip(times, fields_)]


# --- scattering -------------------------------------------------------------


@dataclass(frozen=True)
class ScatteringTable:
    """``sup |f_hat(t2) - f_hat(t1)|`` for consecutive pairs and against the final time."""

    times: np.ndarray
    consecutive: np.ndarray
    to_final: np.ndarray

    def delta_to_final(self, t1: float) -> float:
        i = int(np.argmin(np.abs(self.times - t1)))
        if not math.isclose(self.times[i], t1, rel_tol=0, abs_tol=1e-9):
            raise ParameterError(f"no checkpoint at t={t1}")
        return float(self.to_final[i])


def profile_hat(grid: SpectralGrid, phi: np.ndarray, t: float) -> np.ndarray:
    """Normalized transform of the profile, ``e^{it|xi|^2} phi_hat``."""
    return np.exp(1j * t * grid.ksq) * grid.transform(phi)


def scattering_cauchy(grid: SpectralGrid, times: Sequence[float], fields_: Sequence[np.ndarray]) -> ScatteringTable:
    """Cauchy differences of the profile in ``L^inf_xi``.

    ``fields_`` are physical fields ``phi(t)``; the profile is formed with the
    exact phase ``e^{it|xi|^2}``.
    """
    if len(times) != len(fields_):
        raise ParameterError("times and fields differ in length")
    if len(times) < 2:
        raise ParameterError("scattering table needs at least 2 checkpoints")
    profiles = []
    for t, phi in zip(times, fields_):
        if np.shape(phi) != grid.shape:
            raise GridError(f"checkpoint at t={t} has shape {np.shape(phi)}, grid is {grid.shape}")
        profiles.append(profile_hat(grid, phi, t))
    sup = lambda a, b: float(np.max(np.abs(a - b)))  # noqa: E731
    consecutive = np.array([sup(profiles[i + 1], profiles[i]) for i in range(len(profiles) - 1)])
    to_final = np.array([sup(profiles[-1], p) for p in profiles])
    return ScatteringTable(np.asarray(times, dtype=float), consecutive, to_final)


def strictly_decreasing(values: Sequence[float]) -> bool:
    v = np.asarray(values, dtype=float)
    return bool(np.all(np.diff(v) < 0))


# --- dispersive decay interpolation ------------------------------------------


@dataclass(frozen=True)
class DecayAudit:
    t: float
    lhs: float
    rhs: float

    @property
    def ratio(self) -> float:
        return self.lhs / self.rhs if self.rhs > 0 else 0.0


def decay_interpolation_audit(grid: SpectralGrid, phi: np.ndarray, t: float) -> DecayAudit:
    """Both sides of ``||psi||_inf <= C (t^-1 ||psi_hat||_inf + t^-5/4 sum_{m<=2} ||J^(m) psi||_2)``.

    The right side is returned with ``C = 1``; ``J^(0) psi = psi``.
    """
    t = float(t)
    if not t >= 1:
        raise ParameterError(f"decay interpolation needs t >= 1, got {t}")
    phi = np.asarray(grid.check(phi), dtype=np.complex128)
    j1 = [J_op(grid, phi, t, k, warn=False) for k in (1, 2)]
    j2 = [J_op(grid, j1[k], t, j, warn=False) for j in (1, 2) for k in (0, 1)]
    weighted = grid.lp_norm(phi, 2) + l2_sum(grid, j1) + l2_sum(grid, j2)
    rhs = float(np.max(np.abs(grid.transform(phi)))) / t + weighted * t ** (-1.25)
    return DecayAudit(t, grid.linf_norm(phi), rhs)


# --- growth fits ---------------------------------------------------------------


@dataclass(frozen=True)
class GrowthFit:
    """Regression of a weighted norm against three growth models."""

    quantity: str
    exponent: float  # slope of log(norm) against log(1 + t)
    log_slope: float  # slope against log(2 + t)
    log2_slope: float  # slope against log(2 + t)^2
    log_residual: float
    log2_residual: float
    used: int
    skipped: int


def _linear_fit(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    coef, res, *_ = np.polyfit(x, y, 1, full=True)
    return float(coef[0]), float(np.sqrt(res[0] / x.size)) if res.size else 0.0


def weighted_growth_fit(
    records: Sequence[DiagnosticsRecord],
    quantity: str = "J_norm",
    window: tuple[float, float] = (1.0, np.inf),
    skip_contaminated: bool = True,
    require_decade: bool = True,
) -> GrowthFit:
    """Fit ``quantity`` over checkpoints inside ``window``.

    With ``skip_contaminated`` records whose boundary mass fraction exceeds
    :data:`WEIGHT_VALIDITY` are left out. At least five remaining
    checkpoints are required, spanning a decade in ``1 + t`` unless
    ``require_decade`` is off.
    """
    chosen = [r for r in records if window[0] <= r.t <= window[1]]
    kept = [r for r in chosen if not skip_contaminated or r.boundary_mass_fraction < WEIGHT_VALIDITY]
    if len(kept) < 5:
        raise ParameterError(f"need at least 5 usable checkpoints, got {len(kept)}")
    t = np.array([r.t for r in kept])
    if require_decade and (1 + t.max()) / (1 + t.min()) < 10 - 1e-9:
        raise ParameterError("checkpoints must span a decade in 1 + t")
    y = np.array([getattr(r, quantity) for r in kept], dtype=float)
    if np.any(y <= 0):
        raise ParameterError(f"{quantity} must be positive for a power-law fit")
    exponent, _ = _linear_fit(np.log1p(t), np.log(y))
    log_slope, log_res = _linear_fit(np.log(2 + t), y)
    log2_slope, log2_res = _linear_fit(np.log(2 + t) ** 2, y)
    return GrowthFit(quantity, exponent, log_slope, log2_slope, log_res, log2_res, len(kept), len(chosen) - len(kept))


# --- conservation ----------------------------------------------------------------


@dataclass(frozen=True)
class ConservationReport:
    max_charge_drift: float
    max_div_res: float
    max_curl_res: float


def charge_and_constraint_series(records: Sequence[DiagnosticsRecord]) -> ConservationReport:
    """Largest relative charge drift from the first record and largest constraint residuals."""
    if not records:
        return ConservationReport(0.0, 0.0, 0.0)
    q0 = records[0].charge
    drift = max(_relative(abs(r.charge - q0), q0) for r in records)
    return ConservationReport(
        drift, max(r.div_res for r in records), max(r.curl_res for r in records)
    )


# --- files -----------------------------------------------------------------------


def format_float(x: float) -> str:
    return "%.17g" % x


def records_to_csv(records: Iterable[DiagnosticsRecord]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(DiagnosticsRecord.columns())
    for r in records:
        writer.writerow([format_float(v) for v in r.values()])
    return buf.getvalue()


def write_csv(path, records: Iterable[DiagnosticsRecord]) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(records_to_csv(records))


def read_csv(path) -> list[DiagnosticsRecord]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != DiagnosticsRecord.columns():
            raise ParameterError(f"unexpected CSV header {header}")
        return [DiagnosticsRecord(*(float(v) for v in row)) for row in reader]


def _jsonable(value):
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (np.floating, float)):
        v = float(value)
        return v if math.isfinite(v) else None
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, np.bool_):
        return bool(value)
    return value


def write_json(path, summary: dict) -> None:
    with open(path, "w") as fh:
        json.dump(_jsonable(summary), fh, indent=2, sort_keys=True)
        fh.write("\n")


__all__ = [
    "ConservationReport",
    "DecayAudit",
    "DiagnosticsRecord",
    "GrowthFit",
    "ScatteringTable",
    "WEIGHT_VALIDITY",
    "charge_and_constraint_series",
    "compute_record",
    "decay_interpolation_audit",
    "profile_hat",
    "read_csv",
    "records_from_fields",
    "records_to_csv",
    "scattering_cauchy",
    "state_from_field",
    "strictly_decreasing",
    "weighted_growth_fit",
    "write_csv",
    "write_json",
]
