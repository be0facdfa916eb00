import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from regime_split import DetectionConfig, partition_by_band, psi, psi_total_form, sample_mean, scan
from regime_split.core import EmptyGrid
from regime_split.statistic import breakpoint_grid, geometric_grid, make_grid, scan_sample

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)
samples = arrays(np.float64, st.integers(2, 12), elements=finite)


def brute_psi(x, center, b):
    """Direct evaluation from the definition, one band at a time."""
    ordinary = [v for v in x if abs(v - center) < b]
    abnormal = [v for v in x if not abs(v - center) < b]
    n1, n2, n = len(ordinary), len(abnormal), len(x)
    return (n2 * sum(ordinary) - n1 * sum(abnormal)) / n**2, n1


class TestMean:
    def test_tiny(self, tiny):
        assert sample_mean(tiny) == pytest.approx(10 / 3, rel=1e-15)

    @pytest.mark.parametrize("c", [0.1, -7.3, 1e6, 1 / 3])
    def test_constant_exact(self, c):
        assert sample_mean([c] * 17) == c

    def test_symmetric(self):
        assert sample_mean([-1.0, 1.0]) == 0.0


class TestPartition:
    def test_tiny(self, tiny):
        p = partition_by_band(tiny, 10 / 3, 4.0)
        assert p.ordinary_indices.tolist() == [0, 1]
        assert p.abnormal_indices.tolist() == [2]

    def test_zero_band(self, gaussian_sample):
        p = partition_by_band(gaussian_sample, 0.0, 0.0)
        assert p.n1 == 0 and p.n2 == gaussian_sample.size

    def test_wide_band(self, gaussian_sample):
        p = partition_by_band(gaussian_sample, 0.0, 1 + np.abs(gaussian_sample).max())
        assert p.n2 == 0

    def test_boundary_is_abnormal(self):
        p = partition_by_band([0.0, 1.0, 2.0], 1.0, 1.0)
        assert p.ordinary_indices.tolist() == [1]


class TestPsi:
    def test_tiny_both_forms(self, tiny):
        p = partition_by_band(tiny, 10 / 3, 4.0)
        assert psi(tiny, p) == pytest.approx(-20 / 9, rel=1e-14)
        assert psi_total_form(tiny, p) == pytest.approx(-20 / 9, rel=1e-14)

    def test_empty_sides_vanish(self, gaussian_sample):
        for b in (0.0, 1e9):
            p = partition_by_band(gaussian_sample, 0.0, b)
            assert psi(gaussian_sample, p) == 0.0
            assert psi_total_form(gaussian_sample, p) == pytest.approx(0.0, abs=1e-12)

    @given(samples, st.floats(0, 2e3))
    @settings(max_examples=300, deadline=None)
    def test_forms_agree(self, x, b):
        c = sample_mean(x)
        p = partition_by_band(x, c, b)
        a, t = psi(x, p), psi_total_form(x, p)
        scale = np.abs(x).max() + 1e-300
        assert abs(a - t) <= 1e-12 * scale

    @given(samples, st.floats(0, 100), st.floats(1e-3, 1e3))
    @settings(max_examples=200, deadline=None)
    def test_scale_equivariance(self, x, b, c):
        center = sample_mean(x)
        p = partition_by_band(x, center, b)
        direct = psi(c * x, p)
        assert direct == pytest.approx(c * psi(x, p), rel=1e-12, abs=1e-9 * c * (np.abs(x).max() + 1))

    @pytest.mark.parametrize("c", [0.5, 2.0, 8.0])
    def test_band_scales_with_data(self, mixture_sample, c):
        # powers of two scale every deviation exactly
        cfg = DetectionConfig(grid="breakpoints")
        a = scan_sample(mixture_sample, cfg)
        b = scan_sample(c * mixture_sample, cfg)
        assert b.b_star == c * a.b_star
        assert b.J == pytest.approx(c * a.J, rel=1e-12)

    @given(samples, st.floats(0, 100), st.sampled_from([-5.0, 0.25, 3.0, 128.0]))
    @settings(max_examples=200, deadline=None)
    def test_location_shift_keeps_partition(self, x, b, d):
        # shifts that are exact in binary floating point keep every deviation exact
        x = np.round(x, 3)
        center = 0.5
        p = partition_by_band(x, center, b)
        q = partition_by_band(x + d, center + d, b)
        if np.all((x + d) - d == x):
            assert q.ordinary_indices.tolist() == p.ordinary_indices.tolist()


class TestGrids:
    def test_breakpoints(self):
        assert breakpoint_grid(np.array([0.0, 1.0, 1.0, 2.0])).tolist() == [1.0, 2.0]

    def test_breakpoints_capped(self):
        assert breakpoint_grid(np.array([0.5, 1.0, 2.0]), b_max=1.5).tolist() == [0.5, 1.0, 1.5]

    def test_breakpoints_all_zero(self):
        assert breakpoint_grid(np.zeros(3)).tolist() == [1.0]

    def test_geometric(self):
        g = geometric_grid(np.array([0.0, 2.0]), n_grid=200)
        assert g.size == 200 and g[0] == pytest.approx(0.01) and g[-1] == pytest.approx(2.0)
        assert np.all(np.diff(g) > 0)

    def test_explicit_grid_cap(self):
        cfg = DetectionConfig(grid=(1.0, 2.0, 3.0), b_max=2.5)
        assert make_grid(np.zeros(1), cfg).tolist() == [1.0, 2.0]
        with pytest.raises(EmptyGrid):
            make_grid(np.zeros(1), DetectionConfig(grid=(3.0,), b_max=2.5))


class TestScan:
    def test_tiny(self, tiny):
        r = scan(tiny, 10 / 3, np.array([1.0, 4.0]))
        assert r.psi_values[0] == 0.0
        assert r.psi_values[1] == pytest.approx(-20 / 9)
        assert r.J == pytest.approx(20 / 9) and r.b_star == 4.0

    def test_constant_sample(self):
        r = scan_sample(np.full(30, 2.5), DetectionConfig())
        assert r.J == 0.0

    def test_empty_grid(self, tiny):
        with pytest.raises(EmptyGrid):
            scan(tiny, 0.0, np.array([]))

    def test_invariants(self, mixture_sample):
        r = scan_sample(mixture_sample, DetectionConfig())
        assert np.all(np.abs(r.psi_values) <= r.J)
        assert r.b_star in r.grid
        assert abs(r.psi_at_b_star) == r.J

    def test_smallest_maximiser(self):
        # both bands give the same partition, so the smaller one wins
        r = scan([0.0, 0.0, 10.0], 10 / 3, np.array([4.0, 5.0]))
        assert r.b_star == 4.0

    @given(samples)
    @settings(max_examples=300, deadline=None)
    def test_matches_brute_force(self, x):
        c = sample_mean(x)
        dev = np.abs(x - c)
        top = float(dev.max())
        grid = np.unique(np.concatenate([np.linspace(top / 50, top * 1.1, 50), dev[dev > 0]])) if top > 0 else np.array([1.0])
        r = scan(x, c, grid)
        brute = [brute_psi(x, c, b) for b in grid]
        assert [n for _, n in brute] == r.n1.tolist()
        want = np.array([v for v, _ in brute])
        assert np.allclose(r.psi_values, want, rtol=1e-12, atol=1e-12 * (np.abs(x).max() + 1))

    @given(samples)
    @settings(max_examples=300, deadline=None)
    def test_breakpoints_equal_dense_grid(self, x):
        c = sample_mean(x)
        bp = scan_sample(x, DetectionConfig(grid="breakpoints", n_min=1))
        dev = np.abs(x - c)
        top = dev.max()
        if top == 0:
            assert bp.J == 0.0
            return
        # just above each deviation realises the same partitions as the breakpoints
        above = np.nextafter(np.unique(dev), np.inf)
        dense = np.union1d(np.linspace(top / 4000, top * 1.01, 4000), above)
        d = scan(x, c, dense)
        assert bp.J == pytest.approx(d.J, rel=1e-12, abs=1e-12)
