import dataclasses
import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from csslab import diagnostics as dg
from csslab.errors import GridError, ParameterError
from csslab.grid import SpectralGrid


@pytest.fixture(scope="module")
def big():
    return SpectralGrid(256, 40.0)


def free_gaussian(grid, t):
    """Free evolution of ``exp(-|x|^2/2)``."""
    return grid.schrodinger_propagator(np.exp(-grid.r2 / 2) + 0j, -t)


def synthetic(times, fn, boundary=0.0):
    base = dict.fromkeys(dg.DiagnosticsRecord.columns(), 1.0)
    out = []
    for t in times:
        values = dict(base, t=float(t), J_norm=fn(t), boundary_mass_fraction=boundary)
        out.append(dg.DiagnosticsRecord(**values))
    return out


class TestRecord:
    def test_gaussian_at_rest(self, big):
        # exp(-r^2/2): charge pi, ||grad|| = ||x u|| = sqrt(pi), ||Hessian|| = sqrt(2 pi), sup |u_hat| = 1
        rec = dg.compute_record(big, dg.state_from_field(big, free_gaussian(big, 0.0), 0.0))
        assert rec.charge == pytest.approx(np.pi, rel=1e-12)
        assert rec.L2_norm == pytest.approx(np.sqrt(np.pi), rel=1e-12)
        assert rec.D_norm == pytest.approx(np.sqrt(np.pi), rel=1e-12)
        assert rec.D2_norm == pytest.approx(np.sqrt(2 * np.pi), rel=1e-12)
        assert rec.J_norm == pytest.approx(np.sqrt(np.pi), rel=1e-12)
        assert rec.fhat_sup == pytest.approx(1.0, rel=1e-12)
        assert rec.linf == pytest.approx(1.0) and rec.decay_q == pytest.approx(1.0)

    @pytest.mark.parametrize("t", [0.5, 1.0])
    def test_free_flow_weights(self, big, t):
        # J commutes with the free flow; the sup norm is 1/sqrt(1 + 4 t^2)
        rec = dg.compute_record(big, dg.state_from_field(big, free_gaussian(big, t), t, g=0.0))
        assert rec.J_norm == pytest.approx(np.sqrt(np.pi), rel=1e-10)
        assert rec.J2_norm == pytest.approx(np.sqrt(2 * np.pi), rel=1e-10)
        assert rec.linf == pytest.approx(1 / np.sqrt(1 + 4 * t * t), rel=1e-10)
        assert rec.decay_q == pytest.approx((1 + t) / np.sqrt(1 + 4 * t * t), rel=1e-10)

    def test_constraints_and_boundary(self, big):
        phi = 0.2 * free_gaussian(big, 0.0) * np.exp(0.4j * big.x[0])
        rec = dg.compute_record(big, dg.state_from_field(big, phi, 0.0))
        assert rec.div_res < 1e-13 and rec.curl_res < 1e-13
        assert rec.boundary_mass_fraction < 1e-20

    def test_columns_match_fields(self):
        cols = dg.DiagnosticsRecord.columns()
        assert cols[0] == "t" and cols[-1] == "boundary_mass_fraction" and len(cols) == 17

    def test_records_from_fields(self):
        grid = SpectralGrid(32, 16.0)
        recs = dg.records_from_fields(grid, [0.0, 1.0], [free_gaussian(grid, 0.0), free_gaussian(grid, 1.0)], g=0.0)
        assert [r.t for r in recs] == [0.0, 1.0]


class TestScattering:
    def test_free_profile_is_constant(self, big):
        times = [1.0, 2.0, 4.0]
        table = dg.scattering_cauchy(big, times, [free_gaussian(big, t) for t in times])
        assert np.max(table.consecutive) < 1e-12
        assert table.delta_to_final(2.0) < 1e-12

    def test_missing_time(self, big):
        table = dg.ScatteringTable(np.array([1.0, 2.0]), np.array([0.1]), np.array([0.1, 0.0]))
        assert table.delta_to_final(1.0) == 0.1
        with pytest.raises(ParameterError):
            table.delta_to_final(1.5)

    def test_input_checks(self):
        grid = SpectralGrid(8, 4.0)
        with pytest.raises(ParameterError):
            dg.scattering_cauchy(grid, [1.0], [np.zeros(grid.shape)])
        with pytest.raises(ParameterError):
            dg.scattering_cauchy(grid, [1.0, 2.0], [np.zeros(grid.shape)])
        with pytest.raises(GridError):
            dg.scattering_cauchy(grid, [1.0, 2.0], [np.zeros(grid.shape), np.zeros((4, 4))])

    def test_strictly_decreasing(self):
        assert dg.strictly_decreasing([3.0, 2.0, 1.0])
        assert not dg.strictly_decreasing([3.0, 3.0, 1.0])


class TestDecayInterpolation:
    def test_free_gaussian_sides(self, big):
        # at later times the spreading tail reaches the box edge
        t = 1.0
        audit = dg.decay_interpolation_audit(big, free_gaussian(big, t), t)
        weighted = 2 * np.sqrt(np.pi) + np.sqrt(2 * np.pi)
        assert audit.lhs == pytest.approx(1 / np.sqrt(5), rel=1e-10)
        assert audit.rhs == pytest.approx(1 / t + weighted * t**-1.25, rel=1e-10)
        assert audit.ratio == pytest.approx(audit.lhs / audit.rhs)

    def test_early_time_refused(self, big):
        with pytest.raises(ParameterError):
            dg.decay_interpolation_audit(big, free_gaussian(big, 0.0), 0.5)

    def test_zero_field(self):
        grid = SpectralGrid(8, 4.0)
        assert dg.decay_interpolation_audit(grid, np.zeros(grid.shape), 1.0).ratio == 0.0


class TestGrowthFit:
    @given(p=st.floats(-1.0, 2.0), c=st.floats(0.1, 10.0))
    def test_recovers_power_law(self, p, c):
        recs = synthetic(np.linspace(1, 30, 12), lambda t: c * (1 + t) ** p)
        fit = dg.weighted_growth_fit(recs)
        assert fit.exponent == pytest.approx(p, abs=1e-10)
        assert fit.used == 12 and fit.skipped == 0

    def test_logarithmic_growth(self):
        recs = synthetic(np.linspace(1, 30, 12), lambda t: 2.0 * np.log(2 + t))
        fit = dg.weighted_growth_fit(recs)
        assert fit.log_slope == pytest.approx(2.0) and fit.log_residual < 1e-12

    def test_contaminated_records_skipped(self):
        clean = synthetic(np.linspace(1, 30, 6), lambda t: 1 + t)
        dirty = synthetic([31.0, 32.0], lambda t: 1e6, boundary=1e-3)
        fit = dg.weighted_growth_fit(clean + dirty)
        assert fit.skipped == 2 and fit.exponent == pytest.approx(1.0)
        with pytest.raises(ParameterError):
            dg.weighted_growth_fit(clean[:3] + dirty)

    def test_decade_requirement(self):
        recs = synthetic(np.linspace(1, 10, 10), lambda t: 1.0 + t)
        with pytest.raises(ParameterError):
            dg.weighted_growth_fit(recs)
        assert dg.weighted_growth_fit(recs, require_decade=False).exponent == pytest.approx(1.0)

    def test_nonpositive_values(self):
        recs = synthetic(np.linspace(1, 30, 6), lambda t: 0.0)
        with pytest.raises(ParameterError):
            dg.weighted_growth_fit(recs)


class TestConservationSeries:
    def test_drift_and_maxima(self):
        recs = synthetic([0.0, 1.0, 2.0], lambda t: 1.0)
        recs = [dataclasses.replace(r, charge=c, div_res=d) for r, c, d in zip(recs, [2.0, 2.002, 1.999], [0, 3e-15, 1e-15])]
        rep = dg.charge_and_constraint_series(recs)
        assert rep.max_charge_drift == pytest.approx(1e-3)
        assert rep.max_div_res == 3e-15 and rep.max_curl_res == 1.0

    def test_empty(self):
        assert dg.charge_and_constraint_series([]).max_charge_drift == 0.0


class TestFiles:
    @given(values=st.lists(st.floats(allow_nan=False, allow_infinity=False), min_size=17, max_size=17))
    def test_csv_round_trip_is_exact(self, values, tmp_path_factory):
        path = tmp_path_factory.mktemp("csv") / "d.csv"
        rec = dg.DiagnosticsRecord(*values)
        dg.write_csv(path, [rec, rec])
        back = dg.read_csv(path)
        assert [b.values() for b in back] == [rec.values(), rec.values()]

    def test_csv_header(self, tmp_path):
        text = dg.records_to_csv([])
        assert text.strip() == ",".join(dg.DiagnosticsRecord.columns())
        bad = tmp_path / "bad.csv"
        bad.write_text("a,b\n1,2\n")
        with pytest.raises(ParameterError):
            dg.read_csv(bad)

    def test_json_sanitises(self, tmp_path):
        path = tmp_path / "s.json"
        dg.write_json(path, {"x": np.float64(np.nan), "n": np.int64(3), "ok": np.bool_(True), "v": (1.5, np.inf)})
        assert json.loads(path.read_text()) == {"n": 3, "ok": True, "v": [1.5, None], "x": None}
