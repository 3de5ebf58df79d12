"""Binary file formats for fields and flows, plus PPM visualization.

TFF1 layout: magic "TFF1", then little-endian u32 width, height, J,
then J * height * width * 2 float32 values, row-major with the two
vector channels interleaved per pixel. FLO1 is the same layout with
J = 1 and holds pixel displacements instead of unit directions.
"""

from __future__ import annotations

import math
import struct

import numpy as np

from .flowfield import FlowFieldStack, GridField
from .similarity import FlowGrid

TFF_MAGIC = b"TFF1"
FLO_MAGIC = b"FLO1"
_HEADER = struct.Struct("<4sIII")


def _pack(magic: bytes, array: np.ndarray) -> bytes:
    joints, height, width, _ = array.shape
    header = _HEADER.pack(magic, width, height, joints)
    return header + array.astype("<f4").tobytes(order="C")


def _unpack(blob: bytes, magic: bytes, kind: str) -> np.ndarray:
    if len(blob) < _HEADER.size or blob[:4] != magic:
        raise ValueError(f"not a {kind} file")
    _, width, height, joints = _HEADER.unpack_from(blob)
    expected = _HEADER.size + joints * height * width * 2 * 4
    if len(blob) != expected:
        raise ValueError(f"truncated {kind} file: expected {expected} bytes, "
                         f"got {len(blob)}")
    data = np.frombuffer(blob, dtype="<f4", offset=_HEADER.size)
    return data.reshape(joints, height, width, 2).astype(np.float64)


def write_field_stack(path, stack: FlowFieldStack):
    with open(path, "wb") as fh:
        fh.write(_pack(TFF_MAGIC, stack.as_array()))


def read_field_stack(path) -> FlowFieldStack:
    with open(path, "rb") as fh:
        blob = fh.read()
    data = _unpack(blob, TFF_MAGIC, "TFF1")
    return FlowFieldStack(fields=[GridField(channel) for channel in data])


def write_flow_grid(path, flow: FlowGrid):
    with open(path, "wb") as fh:
        fh.write(_pack(FLO_MAGIC, flow.data[None]))


def read_flow_grid(path) -> FlowGrid:
    with open(path, "rb") as fh:
        blob = fh.read()
    data = _unpack(blob, FLO_MAGIC, "FLO1")
    if data.shape[0] != 1:
        raise ValueError("FLO1 files carry exactly one channel pair")
    return FlowGrid(data[0])


def field_to_rgb(field: GridField) -> np.ndarray:
    """Angle-to-hue, magnitude-to-value rendering of a vector field."""
    u = field.data[:, :, 0]
    v = field.data[:, :, 1]
    magnitude = np.hypot(u, v)
    hue = (np.arctan2(v, u) + 2.0 * math.pi) % (2.0 * math.pi) / (2.0 * math.pi)
    value = np.minimum(magnitude, 1.0)
    saturation = np.ones_like(value)
    h6 = hue * 6.0
    sector = np.floor(h6).astype(int) % 6
    f = h6 - np.floor(h6)
    p = value * (1.0 - saturation)
    q = value * (1.0 - f * saturation)
    t = value * (1.0 - (1.0 - f) * saturation)
    lut = [(value, t, p), (q, value, p), (p, value, t),
           (p, q, value), (t, p, value), (value, p, q)]
    rgb = np.zeros(field.data.shape[:2] + (3,))
    for s, (r_ch, g_ch, b_ch) in enumerate(lut):
        pick = sector == s
        rgb[pick, 0] = r_ch[pick]
        rgb[pick, 1] = g_ch[pick]
        rgb[pick, 2] = b_ch[pick]
    return np.clip(np.round(rgb * 255.0), 0, 255).astype(np.uint8)


def write_ppm(path, field: GridField):
    """Binary P6 image of the field's angle/magnitude rendering."""
    rgb = field_to_rgb(field)
    header = f"P6\n{field.width} {field.height}\n255\n".encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header + rgb.tobytes(order="C"))


__all__ = [
    "TFF_MAGIC", "FLO_MAGIC",
    "write_field_stack", "read_field_stack",
    "write_flow_grid", "read_flow_grid",
    "field_to_rgb", "write_ppm",
]
