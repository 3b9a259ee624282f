import struct

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from csslab.errors import CheckpointFormatError, ParameterError
from csslab.evolution import SimulationState
from csslab.fields_io import (
    FORMAT_VERSION,
    HEADER_SIZE,
    MAGIC,
    DatumSpec,
    build_datum,
    norm_inventory,
    read_checkpoint,
    write_checkpoint,
)
from csslab.grid import SpectralGrid


@pytest.fixture(scope="module")
def big():
    return SpectralGrid(256, 40.0)


def save(path, grid, phi, t=0.0, g=1.0):
    write_checkpoint(path, SimulationState.initial(grid, phi, g=g, t=t), grid.L)


class TestData:
    def test_gaussian_inventory(self, big):
        # weak datum: potentials are O(eps^2), so the covariant sizes are the flat ones
        eps = 1e-4
        phi, inv = build_datum(DatumSpec("gaussian", eps, 1.0), big)
        assert phi[128, 128] == pytest.approx(eps)
        rp, r2p = eps * np.sqrt(np.pi), eps * np.sqrt(2 * np.pi)
        expected = dict(l2=rp, cov_grad=rp, cov_hessian=r2p, x_weighted=rp, x_cov_grad=r2p, x2_weighted=r2p)
        got = inv.as_dict()
        for key, value in expected.items():
            assert got[key] == pytest.approx(value, rel=1e-6), key
        assert got["total"] == pytest.approx(sum(expected.values()), rel=1e-6)

    def test_plane_wave(self):
        grid = SpectralGrid(32, 10.0)
        phi, inv = build_datum(DatumSpec("plane_wave", 0.1, momentum=(2, -1)), grid)
        coeffs = np.abs(grid.fft(phi))
        assert coeffs[2, -1] == pytest.approx(0.1 * grid.n**2)
        assert np.count_nonzero(coeffs > 1e-9) == 1
        assert inv.l2 == pytest.approx(0.1 * grid.L)

    @pytest.mark.parametrize("twist", [1, -1, 2])
    def test_ring_winding(self, twist):
        grid = SpectralGrid(64, 16.0)
        phi, _ = build_datum(DatumSpec("ring", 1.0, 1.0, twist=twist), grid)
        assert abs(phi[32, 32]) == 0.0
        theta = np.linspace(0, 2 * np.pi, 200, endpoint=False)
        idx = [(32 + int(round(2 * np.cos(a) / grid.dx)), 32 + int(round(2 * np.sin(a) / grid.dx))) for a in theta]
        ph = np.unwrap([np.angle(phi[i, j]) for i, j in idx] + [np.angle(phi[idx[0]])])
        assert (ph[-1] - ph[0]) / (2 * np.pi) == pytest.approx(twist, abs=1e-9)

    def test_file_datum(self, tmp_path):
        grid = SpectralGrid(16, 6.0)
        phi0 = np.exp(-grid.r2) * (1 + 0.5j)
        path = tmp_path / "d.cssl"
        save(path, grid, phi0)
        phi, _ = build_datum(DatumSpec("file", path=str(path)), grid)
        np.testing.assert_array_equal(phi, phi0)
        with pytest.raises(ParameterError):
            build_datum(DatumSpec("file", path=str(path)), SpectralGrid(32, 6.0))

    @pytest.mark.parametrize(
        "spec",
        [
            DatumSpec("vortex"),
            DatumSpec(amplitude=-1.0),
            DatumSpec(width=0.0),
            DatumSpec("plane_wave", momentum=(0.5, 1)),
            DatumSpec("file"),
        ],
    )
    def test_invalid(self, spec):
        with pytest.raises(ParameterError):
            spec.validate()

    def test_inventory_is_phase_blind(self):
        grid = SpectralGrid(64, 16.0)
        phi, inv = build_datum(DatumSpec("gaussian", 0.3, 1.2), grid)
        other = norm_inventory(grid, np.exp(0.7j) * phi)
        assert other.total == pytest.approx(inv.total, rel=1e-13)


class TestCheckpoint:
    @given(seed=st.integers(0, 2**31), t=st.floats(-1e6, 1e6), g=st.floats(-10, 10), n=st.sampled_from([8, 16]))
    def test_round_trip_is_bitwise(self, seed, t, g, n, tmp_path_factory):
        grid = SpectralGrid(n, 7.5)
        rng = np.random.default_rng(seed)
        phi = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
        path = tmp_path_factory.mktemp("ck") / "x.cssl"
        save(path, grid, phi, t=t, g=g)
        header, back = read_checkpoint(path)
        assert back.tobytes() == phi.tobytes()
        assert (header.version, header.n, header.L, header.t, header.g) == (FORMAT_VERSION, n, 7.5, t, g)

    def test_layout(self, tmp_path):
        grid = SpectralGrid(8, 2.0)
        phi = np.zeros(grid.shape, dtype=complex)
        phi[0, 1] = 1.5 - 2.0j
        path = tmp_path / "x.cssl"
        save(path, grid, phi, t=0.25, g=-1.0)
        data = path.read_bytes()
        assert len(data) == HEADER_SIZE + 16 * 64 and HEADER_SIZE == 36
        assert data[:4] == MAGIC
        assert struct.unpack_from("<IIddd", data, 4) == (1, 8, 2.0, 0.25, -1.0)
        assert struct.unpack_from("<dd", data, HEADER_SIZE + 16) == (1.5, -2.0)

    def test_complex_coupling_warns(self, tmp_path):
        grid = SpectralGrid(8, 2.0)
        with pytest.warns(UserWarning):
            save(tmp_path / "x.cssl", grid, np.zeros(grid.shape), g=1 + 1j)
        assert read_checkpoint(tmp_path / "x.cssl")[0].g == 1.0

    @pytest.fixture
    def good(self, tmp_path):
        grid = SpectralGrid(8, 2.0)
        path = tmp_path / "x.cssl"
        save(path, grid, np.ones(grid.shape))
        return path, path.read_bytes()

    @pytest.mark.parametrize(
        "mutate, offset",
        [
            (lambda d: b"XXXX" + d[4:], 0),
            (lambda d: d[:4] + struct.pack("<I", 2) + d[8:], 4),
            (lambda d: d[:20], 20),
            (lambda d: d[:-1], HEADER_SIZE + 16 * 64 - 1),
            (lambda d: d + b"\0", HEADER_SIZE + 16 * 64),
            (lambda d: d[:3], 0),
        ],
        ids=["magic", "version", "short-header", "short-samples", "trailing", "tiny"],
    )
    def test_corruption_reports_offset(self, good, mutate, offset):
        path, data = good
        path.write_bytes(mutate(data))
        with pytest.raises(CheckpointFormatError) as info:
            read_checkpoint(path)
        assert info.value.offset == offset
