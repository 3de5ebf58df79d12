import numpy as np
import pytest

from tfftrack.core import Keypoint
from tfftrack.fieldio import (
    field_to_rgb,
    read_field_stack,
    read_flow_grid,
    write_field_stack,
    write_flow_grid,
    write_ppm,
)
from tfftrack.flowfield import FlowFieldStack, GridField, render_person_tff
from tfftrack.similarity import FlowGrid


def random_stack(rng, joints=3, w=11, h=7):
    return FlowFieldStack(
        fields=[GridField(rng.normal(size=(h, w, 2))) for _ in range(joints)])


class TestFieldStackFormat:
    def test_roundtrip_preserves_float32_values(self, rng, tmp_path):
        st = random_stack(rng)
        path = tmp_path / "f.tff1"
        write_field_stack(path, st)
        back = read_field_stack(path)
        assert back.joint_count == st.joint_count
        assert (back.width, back.height) == (st.width, st.height)
        want = st.as_array().astype(np.float32).astype(np.float64)
        assert np.array_equal(back.as_array(), want)

    def test_file_roundtrip_is_byte_identical(self, rng, tmp_path):
        st = random_stack(rng)
        first = tmp_path / "a.tff1"
        second = tmp_path / "b.tff1"
        write_field_stack(first, st)
        write_field_stack(second, read_field_stack(first))
        assert first.read_bytes() == second.read_bytes()

    def test_header_layout(self, tmp_path):
        st = FlowFieldStack(fields=[GridField.zeros(5, 3)] * 2)
        path = tmp_path / "f.tff1"
        write_field_stack(path, st)
        blob = path.read_bytes()
        assert blob[:4] == b"TFF1"
        assert int.from_bytes(blob[4:8], "little") == 5
        assert int.from_bytes(blob[8:12], "little") == 3
        assert int.from_bytes(blob[12:16], "little") == 2
        assert len(blob) == 16 + 2 * 3 * 5 * 2 * 4

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "f.tff1"
        path.write_bytes(b"NOPE" + b"\x00" * 32)
        with pytest.raises(ValueError, match="not a TFF1 file"):
            read_field_stack(path)

    def test_truncated_rejected(self, rng, tmp_path):
        st = random_stack(rng)
        path = tmp_path / "f.tff1"
        write_field_stack(path, st)
        blob = path.read_bytes()
        path.write_bytes(blob[:-5])
        with pytest.raises(ValueError, match="truncated"):
            read_field_stack(path)


class TestFlowGridFormat:
    def test_roundtrip(self, rng, tmp_path):
        flow = FlowGrid(rng.normal(scale=4.0, size=(9, 13, 2)))
        path = tmp_path / "f.flo1"
        write_flow_grid(path, flow)
        back = read_flow_grid(path)
        want = flow.data.astype(np.float32).astype(np.float64)
        assert np.array_equal(back.data, want)
        assert path.read_bytes()[:4] == b"FLO1"

    def test_tff_file_is_not_a_flow(self, rng, tmp_path):
        path = tmp_path / "f.tff1"
        write_field_stack(path, random_stack(rng, joints=1))
        with pytest.raises(ValueError, match="not a FLO1 file"):
            read_flow_grid(path)

    def test_multi_channel_flow_rejected(self, tmp_path):
        # hand-build a FLO1 blob claiming two joint channels
        import struct
        blob = struct.pack("<4sIII", b"FLO1", 2, 2, 2) + b"\x00" * (2 * 2 * 2 * 2 * 4)
        path = tmp_path / "f.flo1"
        path.write_bytes(blob)
        with pytest.raises(ValueError, match="one channel"):
            read_flow_grid(path)


class TestPpm:
    def test_zero_field_is_black(self, tmp_path):
        path = tmp_path / "z.ppm"
        write_ppm(path, GridField.zeros(4, 2))
        blob = path.read_bytes()
        assert blob.startswith(b"P6\n4 2\n255\n")
        assert blob[len(b"P6\n4 2\n255\n"):] == b"\x00" * (4 * 2 * 3)

    def test_constant_field_single_color(self):
        f = GridField(np.full((3, 3, 2), (1.0, 0.0)))
        rgb = field_to_rgb(f)
        assert rgb.shape == (3, 3, 3)
        first = rgb[0, 0]
        assert first.max() == 255
        assert np.all(rgb.reshape(-1, 3) == first)

    def test_opposite_directions_get_distinct_hues(self):
        f = GridField(np.zeros((1, 2, 2)))
        f.data[0, 0] = (1.0, 0.0)
        f.data[0, 1] = (-1.0, 0.0)
        rgb = field_to_rgb(f)
        assert not np.array_equal(rgb[0, 0], rgb[0, 1])

    def test_ribbon_renders_colored_band(self, tmp_path):
        f = render_person_tff(Keypoint(5, 10), Keypoint(25, 10), sigma=2.0,
                              dims=(32, 20))
        rgb = field_to_rgb(f)
        lit_rows = np.nonzero(rgb.any(axis=(1, 2)))[0]
        assert list(lit_rows) == [8, 9, 10, 11, 12]
        path = tmp_path / "band.ppm"
        write_ppm(path, f)
        assert path.read_bytes().startswith(b"P6\n32 20\n255\n")

    def test_magnitude_caps_brightness(self):
        f = GridField(np.full((2, 2, 2), (7.0, 0.0)))
        g = GridField(np.full((2, 2, 2), (1.0, 0.0)))
        assert np.array_equal(field_to_rgb(f), field_to_rgb(g))
