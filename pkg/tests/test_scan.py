"""Grid scans, sections, and file formats."""

import math

import numpy as np
import pytest

from rounddyn import fileio
from rounddyn.backends import backend_for
from rounddyn.indicators import NormSpec, reversibility_final_batch
from rounddyn.maps import Bernoulli, StandardMap, make_map
from rounddyn.scan import (AxisSpec, GridSpec, ScanResult, extract_section,
                           grid_scan, read_scan, write_outputs)

TWO_PI = 2 * math.pi


def _grid(res=20, n=50, indicator="rev", **kw):
    return GridSpec((AxisSpec("x", 0, TWO_PI, res),
                     AxisSpec("y", 0, TWO_PI, res)), {}, n, indicator, **kw)


class TestAxisSpec:
    def test_centers(self):
        ax = AxisSpec("x", 0.0, 1.0, 4)
        assert np.allclose(ax.centers(), [0.125, 0.375, 0.625, 0.875])

    def test_codec_roundtrip(self):
        ax = AxisSpec("y", 0.0, TWO_PI, 150)
        assert AxisSpec.decode(ax.encode()) == ax

    def test_validation(self):
        with pytest.raises(ValueError):
            AxisSpec("x", 0, 1, 0)
        with pytest.raises(ValueError):
            AxisSpec("x", 1, 1, 10)


class TestGridScan:
    def test_single_cell_integrable_exact_is_sentinel(self):
        grid = GridSpec((AxisSpec("x", 0, TWO_PI, 1),
                         AxisSpec("y", 0, TWO_PI, 1)), {}, 10, "rev",
                        spec="exact")
        res = grid_scan(StandardMap(0.0), grid)
        assert res.matrix.shape == (1, 1)
        assert res.matrix[0, 0] == -np.inf

    def test_reversibility_needs_invertible(self):
        from rounddyn.maps import NotInvertibleError
        grid = GridSpec((AxisSpec("x", 0, 1, 2), AxisSpec("x", 0, 1, 2)),
                        {}, 5, "rev")
        with pytest.raises(NotInvertibleError):
            grid_scan(Bernoulli(2), grid)

    def test_missing_fixed_coordinate(self):
        m = make_map("froeschle4d", c=2, mu=0.6)
        grid = GridSpec((AxisSpec("I", 0, 3.6, 2), AxisSpec("J", 0, 3.6, 2)),
                        {"theta": 0.5}, 5, "rev")
        with pytest.raises(ValueError):
            grid_scan(m, grid)

    def test_unknown_axis(self):
        grid = GridSpec((AxisSpec("q", 0, 1, 2), AxisSpec("y", 0, 1, 2)),
                        {}, 5, "rev")
        with pytest.raises(ValueError):
            grid_scan(StandardMap(1.0), grid)

    def test_worker_count_bit_identical(self):
        m = StandardMap(0.971635)
        grid = _grid(res=24, n=60, norm="action")
        a = grid_scan(m, grid, workers=1).matrix
        b = grid_scan(m, grid, workers=4).matrix
        assert np.array_equal(a, b)

    def test_probe_determinism(self):
        # a directly evaluated cell center matches the scan cell bit for bit
        m = StandardMap(0.971635)
        grid = _grid(res=10, n=40, norm="action")
        res = grid_scan(m, grid)
        xs, ys = grid.axes[0].centers(), grid.axes[1].centers()
        i, j = 3, 7
        B = backend_for("single")
        r = reversibility_final_batch(
            m, [B.array([xs[i]]), B.array([ys[j]])], 40, B, NormSpec("action"))
        assert np.log(r[0]) == res.matrix[j, i]

    def test_indicator_kinds_run(self):
        m = StandardMap(0.971635)
        for kind in ("rev", "div", "mlce", "megno", "sali"):
            res = grid_scan(m, _grid(res=3, n=10, indicator=kind))
            assert res.matrix.shape == (3, 3)
            assert res.meta["indicator"] == kind

    def test_invalid_indicator(self):
        with pytest.raises(ValueError):
            _grid(indicator="fli")


class TestSection:
    def _result(self):
        mat = np.arange(12, dtype=float).reshape(3, 4)
        grid = GridSpec((AxisSpec("x", 0, 4, 4), AxisSpec("y", 0, 3, 3)),
                        {}, 5, "rev")
        return ScanResult(mat, grid, {})

    def test_exact_center_row_verbatim(self):
        res = self._result()
        prof = extract_section(res, "y", 1.5)      # second row center
        assert prof.value == 1.5
        assert np.array_equal(prof.values, res.matrix[1])
        assert np.array_equal(prof.coordinates, [0.5, 1.5, 2.5, 3.5])

    def test_nearest_row(self):
        prof = extract_section(self._result(), "y", 2.2)
        assert prof.value == 2.5

    def test_equidistant_resolves_to_lower_index(self):
        prof = extract_section(self._result(), "y", 1.0)  # between 0.5 and 1.5
        assert prof.value == 0.5

    def test_column_section(self):
        prof = extract_section(self._result(), "x", 1.7)
        assert prof.value == 1.5
        assert np.array_equal(prof.values, self._result().matrix[:, 1])

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            extract_section(self._result(), "y", 3.5)

    def test_unknown_axis(self):
        with pytest.raises(ValueError):
            extract_section(self._result(), "z", 0.5)


class TestFileFormats:
    def test_pgm_linear_scaling(self, tmp_path):
        p = tmp_path / "m.pgm"
        fileio.write_pgm(p, np.array([[0.0, 1.0], [2.0, 3.0]]))
        img = fileio.read_pgm(p)
        assert np.array_equal(img, [[0, 85], [170, 255]])

    def test_pgm_all_equal_is_zero(self, tmp_path):
        p = tmp_path / "m.pgm"
        fileio.write_pgm(p, np.full((3, 3), 7.25))
        assert np.array_equal(fileio.read_pgm(p), np.zeros((3, 3), np.uint8))

    def test_pgm_sentinel_maps_to_zero(self, tmp_path):
        p = tmp_path / "m.pgm"
        fileio.write_pgm(p, np.array([[-np.inf, 5.0], [10.0, 5.0]]))
        img = fileio.read_pgm(p)
        assert img[0, 0] == 0 and img[1, 0] == 255

    def test_matrix_csv_roundtrip_bit_exact(self, tmp_path):
        rng = np.random.default_rng(13)
        mat = rng.standard_normal((5, 7)) * 10.0 ** rng.integers(-30, 30, (5, 7))
        mat[0, 0] = -np.inf
        p = tmp_path / "m.csv"
        fileio.write_matrix_csv(p, mat, {"n": 5})
        back, meta = fileio.read_matrix_csv(p)
        assert np.array_equal(back, mat)
        assert meta["n"] == "5"

    def test_scan_roundtrip(self, tmp_path):
        m = StandardMap(0.971635)
        res = grid_scan(m, _grid(res=6, n=20, norm="action"))
        paths = write_outputs(res, str(tmp_path / "scan"))
        back = read_scan(paths["csv"])
        assert np.array_equal(back.matrix, res.matrix)
        assert back.grid.axes == res.grid.axes
        img = fileio.read_pgm(paths["pgm"])
        assert img.shape == res.matrix.shape
        import json
        meta = json.loads(open(paths["json"]).read())
        assert meta["map"] == "standard"
        # the metadata record is sufficient to re-run the scan
        for key in ("params", "axis1", "axis2", "n", "indicator", "spec",
                    "norm", "version"):
            assert key in meta

    def test_config_parsing(self, tmp_path):
        p = tmp_path / "c.cfg"
        p.write_text("# comment\nmap=standard\n n = 12 # trailing\n\nspec=single\n")
        cfg = fileio.read_config(p)
        assert cfg == {"map": "standard", "n": "12", "spec": "single"}
        bad = tmp_path / "bad.cfg"
        bad.write_text("justtext\n")
        with pytest.raises(ValueError):
            fileio.read_config(bad)
