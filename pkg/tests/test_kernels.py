import math

import numpy as np
import pytest

from tfftrack import kernels


def backends():
    return [pytest.param(kernels.get_backend(name), id=name)
            for name in kernels.available_backends()]


def backend_pairs():
    names = kernels.available_backends()
    if len(names) < 2:
        return [pytest.param(None, None, id="compiled-missing",
                             marks=pytest.mark.skip(
                                 reason="only one backend built"))]
    return [pytest.param(kernels.get_backend(names[0]),
                         kernels.get_backend(names[1]),
                         id="+".join(names))]


def brute_ribbon_pixels(h, w, ax, ay, vx, vy, lam, sigma):
    """Reference support: test the membership predicate at every pixel."""
    out = set()
    for y in range(h):
        for x in range(w):
            t = vx * (x - ax) + vy * (y - ay)
            s = -vy * (x - ax) + vx * (y - ay)
            if 0.0 <= t <= lam and abs(s) <= sigma:
                out.add((x, y))
    return out


def random_motion(rng, w, h):
    ax, bx = rng.uniform(0, w, size=2)
    ay, by = rng.uniform(0, h, size=2)
    lam = math.hypot(bx - ax, by - ay)
    if lam == 0.0:
        return ax, ay, 1.0, 0.0, 0.0
    return ax, ay, (bx - ax) / lam, (by - ay) / lam, lam


@pytest.mark.parametrize("impl", backends())
class TestRibbonAccumulate:
    def test_matches_brute_force_support(self, impl, rng):
        h, w = 24, 31
        for _ in range(60):
            ax, ay, vx, vy, lam = random_motion(rng, w, h)
            sigma = rng.uniform(0.2, 4.0)
            sums = np.zeros((h, w, 2))
            counts = np.zeros((h, w), dtype=np.int32)
            impl.ribbon_accumulate(sums, counts, ax, ay, vx, vy, lam, sigma,
                                   vx * 2.0, vy * 2.0)
            got = {(x, y) for y, x in zip(*np.nonzero(counts))}
            want = brute_ribbon_pixels(h, w, ax, ay, vx, vy, lam, sigma)
            assert got == want

    def test_writes_given_vector(self, impl):
        sums = np.zeros((10, 10, 2))
        counts = np.zeros((10, 10), dtype=np.int32)
        impl.ribbon_accumulate(sums, counts, 2.0, 5.0, 1.0, 0.0, 5.0, 1.0,
                               0.25, -0.75)
        inside = counts > 0
        assert inside.any()
        assert np.all(sums[inside] == [0.25, -0.75])
        assert np.all(sums[~inside] == 0.0)

    def test_zero_length_is_noop(self, impl):
        sums = np.zeros((8, 8, 2))
        counts = np.zeros((8, 8), dtype=np.int32)
        impl.ribbon_accumulate(sums, counts, 4.0, 4.0, 0.0, 0.0, 0.0, 1.0,
                               1.0, 1.0)
        assert not counts.any() and not sums.any()

    def test_accumulates_counts(self, impl):
        sums = np.zeros((12, 12, 2))
        counts = np.zeros((12, 12), dtype=np.int32)
        impl.ribbon_accumulate(sums, counts, 1.0, 6.0, 1.0, 0.0, 9.0, 1.0,
                               1.0, 0.0)
        impl.ribbon_accumulate(sums, counts, 6.0, 1.0, 0.0, 1.0, 9.0, 1.0,
                               0.0, 1.0)
        assert counts.max() == 2
        both = counts == 2
        assert np.all(sums[both] == [1.0, 1.0])

    def test_off_grid_motion_is_clipped(self, impl):
        sums = np.zeros((6, 6, 2))
        counts = np.zeros((6, 6), dtype=np.int32)
        impl.ribbon_accumulate(sums, counts, 100.0, 100.0, 1.0, 0.0, 5.0,
                               1.0, 1.0, 0.0)
        assert not counts.any()


@pytest.mark.parametrize("impl", backends())
class TestSampleBilinear:
    def test_reproduces_grid_values(self, impl, rng):
        data = rng.normal(size=(7, 9, 2))
        for y in range(7):
            for x in range(9):
                u, v = impl.sample_bilinear(data, float(x), float(y))
                assert u == pytest.approx(data[y, x, 0], abs=1e-12)
                assert v == pytest.approx(data[y, x, 1], abs=1e-12)

    def test_midpoint_average(self, impl):
        data = np.zeros((2, 2, 2))
        data[0, 0] = (1.0, 0.0)
        data[0, 1] = (0.0, 1.0)
        u, v = impl.sample_bilinear(data, 0.5, 0.0)
        assert (u, v) == pytest.approx((0.5, 0.5))

    def test_constant_field_everywhere(self, impl, rng):
        data = np.full((5, 5, 2), (0.3, -0.7))
        for _ in range(20):
            x, y = rng.uniform(0, 4, size=2)
            assert impl.sample_bilinear(data, x, y) == \
                pytest.approx((0.3, -0.7))

    def test_clamps_outside_grid(self, impl):
        data = np.zeros((3, 3, 2))
        data[2, 2] = (5.0, 6.0)
        assert impl.sample_bilinear(data, 10.0, 10.0) == \
            pytest.approx((5.0, 6.0))
        data[0, 0] = (-1.0, 2.0)
        assert impl.sample_bilinear(data, -3.0, -3.0) == \
            pytest.approx((-1.0, 2.0))


@pytest.mark.parametrize("impl", backends())
class TestLineIntegral:
    def test_constant_aligned_field(self, impl):
        data = np.zeros((10, 10, 2))
        data[:, :, 0] = 1.0
        got = impl.line_integral(data, 1.0, 5.0, 8.0, 5.0, 10)
        assert got == pytest.approx(1.0, abs=1e-12)

    def test_constant_perpendicular_field(self, impl):
        data = np.zeros((10, 10, 2))
        data[:, :, 1] = 1.0
        got = impl.line_integral(data, 1.0, 5.0, 8.0, 5.0, 10)
        assert got == pytest.approx(0.0, abs=1e-12)

    def test_opposing_field(self, impl):
        data = np.full((6, 6, 2), (-1.0, 0.0))
        got = impl.line_integral(data, 0.0, 2.0, 5.0, 2.0, 7)
        assert got == pytest.approx(-1.0, abs=1e-12)

    def test_matches_manual_midpoint_sum(self, impl, rng):
        data = rng.normal(size=(9, 12, 2))
        ax, ay, bx, by = 1.3, 2.1, 9.7, 6.4
        steps = 13
        dx, dy = bx - ax, by - ay
        norm = math.hypot(dx, dy)
        acc = 0.0
        for s in range(steps):
            o = (s + 0.5) / steps
            u, v = impl.sample_bilinear(data, ax + o * dx, ay + o * dy)
            acc += (u * dx + v * dy) / norm
        want = acc / steps
        got = impl.line_integral(data, ax, ay, bx, by, steps)
        assert got == pytest.approx(want, abs=1e-12)


@pytest.mark.parametrize("impl", backends())
class TestGaussianPeakMax:
    def test_center_value_is_amplitude(self, impl):
        grid = np.zeros((21, 21))
        impl.gaussian_peak_max(grid, 10.0, 10.0, 2.0, 1.0)
        assert grid[10, 10] == pytest.approx(1.0)
        assert grid.argmax() == 10 * 21 + 10

    def test_max_composite_not_sum(self, impl):
        grid = np.zeros((21, 21))
        impl.gaussian_peak_max(grid, 10.0, 10.0, 2.0, 1.0)
        impl.gaussian_peak_max(grid, 10.0, 10.0, 2.0, 1.0)
        assert grid[10, 10] == pytest.approx(1.0)

    def test_truncated_beyond_four_sigma(self, impl):
        grid = np.zeros((41, 41))
        impl.gaussian_peak_max(grid, 20.0, 20.0, 2.0, 1.0)
        assert grid[20, 0] == 0.0
        ys, xs = np.nonzero(grid)
        d = np.hypot(xs - 20.0, ys - 20.0)
        assert d.max() <= 8.0 + 1e-9

    def test_off_grid_center_is_safe(self, impl):
        grid = np.zeros((5, 5))
        impl.gaussian_peak_max(grid, 100.0, 100.0, 1.0, 1.0)
        assert not grid.any()


@pytest.mark.parametrize("impl", backends())
class TestDiscAccumulate:
    def test_matches_brute_force_membership(self, impl, rng):
        h, w = 17, 19
        for _ in range(40):
            cx, cy = rng.uniform(-2, 20, size=2)
            radius = rng.uniform(0.3, 6.0)
            sums = np.zeros((h, w, 2))
            counts = np.zeros((h, w), dtype=np.int32)
            impl.disc_accumulate(sums, counts, cx, cy, radius, 1.0, 2.0)
            got = {(x, y) for y, x in zip(*np.nonzero(counts))}
            want = {(x, y) for y in range(h) for x in range(w)
                    if (x - cx) ** 2 + (y - cy) ** 2 <= radius ** 2}
            assert got == want

    def test_overlap_counts(self, impl):
        sums = np.zeros((9, 9, 2))
        counts = np.zeros((9, 9), dtype=np.int32)
        impl.disc_accumulate(sums, counts, 4.0, 4.0, 2.0, 1.0, 0.0)
        impl.disc_accumulate(sums, counts, 4.0, 4.0, 2.0, 3.0, 0.0)
        assert counts[4, 4] == 2
        assert sums[4, 4, 0] == 4.0


@pytest.mark.parametrize("a,b", backend_pairs())
class TestBackendParity:
    def test_ribbon(self, a, b, rng):
        for _ in range(80):
            h, w = rng.integers(4, 40, size=2)
            sa = np.zeros((h, w, 2))
            ca = np.zeros((h, w), dtype=np.int32)
            sb = np.zeros((h, w, 2))
            cb = np.zeros((h, w), dtype=np.int32)
            ax, ay, vx, vy, lam = random_motion(rng, w, h)
            sigma = rng.uniform(0.1, 5.0)
            wx, wy = rng.normal(size=2)
            a.ribbon_accumulate(sa, ca, ax, ay, vx, vy, lam, sigma, wx, wy)
            b.ribbon_accumulate(sb, cb, ax, ay, vx, vy, lam, sigma, wx, wy)
            assert np.array_equal(ca, cb)
            assert np.array_equal(sa, sb)

    def test_sample_and_integral(self, a, b, rng):
        for _ in range(60):
            data = rng.normal(size=(11, 13, 2))
            x, y = rng.uniform(-2, 15, size=2)
            assert a.sample_bilinear(data, x, y) == \
                pytest.approx(b.sample_bilinear(data, x, y), abs=1e-12)
            ax, ay, bx, by = rng.uniform(0, 12, size=4)
            if ax == bx and ay == by:
                continue
            steps = int(rng.integers(1, 40))
            assert a.line_integral(data, ax, ay, bx, by, steps) == \
                pytest.approx(b.line_integral(data, ax, ay, bx, by, steps),
                              abs=1e-12)

    def test_peak_and_disc(self, a, b, rng):
        for _ in range(40):
            h, w = rng.integers(4, 30, size=2)
            ga = np.zeros((h, w))
            gb = np.zeros((h, w))
            cx, cy = rng.uniform(-3, 33, size=2)
            sigma = rng.uniform(0.3, 4.0)
            amp = rng.uniform(0.1, 1.0)
            a.gaussian_peak_max(ga, cx, cy, sigma, amp)
            b.gaussian_peak_max(gb, cx, cy, sigma, amp)
            assert np.allclose(ga, gb, atol=1e-12)
            sa = np.zeros((h, w, 2))
            ca = np.zeros((h, w), dtype=np.int32)
            sb = np.zeros((h, w, 2))
            cb = np.zeros((h, w), dtype=np.int32)
            radius = rng.uniform(0.2, 7.0)
            wx, wy = rng.normal(size=2)
            a.disc_accumulate(sa, ca, cx, cy, radius, wx, wy)
            b.disc_accumulate(sb, cb, cx, cy, radius, wx, wy)
            assert np.array_equal(ca, cb)
            assert np.array_equal(sa, sb)


class TestBackendSelection:
    def test_active_backend_is_listed(self):
        assert kernels.BACKEND in kernels.available_backends()

    def test_unknown_backend_name(self):
        with pytest.raises(ValueError):
            kernels.get_backend("fortran")
