import math

import numpy as np
import pytest
from PIL import Image

from conftest import disk_sdf
from drlseg.harness.viz import CONTOUR_RGB, emit_heatmap, render_heatmap, zero_contour


def test_constant_field_is_uniform():
    rgb = render_heatmap(np.full((8, 8), 0.3))
    assert not zero_contour(np.full((8, 8), 0.3)).any()
    assert np.all(rgb == rgb[0, 0])


def test_disk_contour_ring():
    phi = disk_sdf((64, 64), (32, 32), 15)
    ring = zero_contour(phi)
    # 4-connected boundary of a digital disk has about 4r*sqrt(2) pixels
    assert ring.sum() == pytest.approx(4 * math.sqrt(2) * 15, rel=0.10)
    rgb = render_heatmap(phi)
    assert np.all(rgb[ring] == CONTOUR_RGB)


def test_sign_colours_differ():
    phi = disk_sdf((32, 32), (16, 16), 8)
    rgb = render_heatmap(phi).astype(int)
    # inside is red-ish, outside blue-ish
    assert rgb[16, 16, 0] > rgb[16, 16, 2]
    assert rgb[0, 0, 2] > rgb[0, 0, 0]


def test_emit_png(tmp_path):
    path = tmp_path / "h.png"
    emit_heatmap(disk_sdf((16, 16), (8, 8), 5), path)
    with Image.open(path) as im:
        assert im.format == "PNG" and im.size == (16, 16) and im.mode == "RGB"
    a = path.read_bytes()
    emit_heatmap(disk_sdf((16, 16), (8, 8), 5), path)
    assert path.read_bytes() == a


def test_rejects_nonfinite():
    with pytest.raises(ValueError):
        render_heatmap(np.array([[0.0, np.nan]]))
