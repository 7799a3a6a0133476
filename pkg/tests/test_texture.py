"""Control texture tests."""

import numpy as np
import pytest

from sylva_forge.core.exceptions import ArtifactIOError, ForgeValidationError
from sylva_forge.core.geometry import Rect
from sylva_forge.models.enums import TextureOp, VoronoiMode
from sylva_forge.models.params import FractalParams
from sylva_forge.services.texture import (
    Texture,
    constant_texture,
    pixel_extent,
    read_pgm,
    sample_texture,
    texture_from_noise,
    texture_from_voronoi,
    texture_logic,
    write_pgm,
)


def test_noise_zero_amplitude_is_mid_grey():
    t = texture_from_noise(8, 4, FractalParams(amplitude=0.0), seed=1)
    assert t.shape == (4, 8)
    assert np.all(t.values == 0.5)


@pytest.mark.parametrize("seed", range(10))
def test_noise_values_in_unit_interval(seed):
    t = texture_from_noise(32, 32, FractalParams(base_frequency=0.2), seed)
    assert t.values.min() >= 0.0 and t.values.max() <= 1.0


def test_noise_deterministic():
    p = FractalParams(base_frequency=0.1)
    assert np.array_equal(texture_from_noise(16, 16, p, 9).values, texture_from_noise(16, 16, p, 9).values)


def test_voronoi_single_site_distance_endpoints():
    t = texture_from_voronoi(16, 12, sites=1, seed=3, mode=VoronoiMode.DISTANCE)
    assert t.values.min() == 0.0
    assert t.values.max() == 1.0


def test_voronoi_distance_lipschitz():
    """Un-normalized values are nearest-site distances, 1-Lipschitz between neighbours."""
    w, h = 24, 20
    t = texture_from_voronoi(w, h, sites=5, seed=4, mode=VoronoiMode.DISTANCE)
    rows, cols = np.nonzero(t.values == 0.0)
    assert len(rows) == 5
    gx, gy = np.meshgrid(np.arange(w), np.arange(h))
    brute = np.min(np.hypot(gx[..., None] - cols, gy[..., None] - rows), axis=-1)
    distance = t.values * brute.max()
    assert np.allclose(distance, brute)
    assert np.abs(np.diff(distance, axis=1)).max() <= 1.0 + 1e-9
    assert np.abs(np.diff(distance, axis=0)).max() <= 1.0 + 1e-9


def test_voronoi_cellular_single_site_constant():
    t = texture_from_voronoi(10, 10, sites=1, seed=8, mode=VoronoiMode.CELLULAR)
    assert np.all(t.values == t.values[0, 0])


def test_voronoi_rejects_zero_sites():
    with pytest.raises(ForgeValidationError):
        texture_from_voronoi(4, 4, sites=0, seed=0)


def test_invert_is_involution(gradient_texture):
    twice = texture_logic(TextureOp.INVERT, texture_logic(TextureOp.INVERT, gradient_texture))
    assert np.allclose(twice.values, gradient_texture.values)


def test_multiply_identity(gradient_texture):
    ones = constant_texture(1.0, 8, 8)
    assert np.array_equal(texture_logic(TextureOp.MULTIPLY, gradient_texture, ones).values, gradient_texture.values)


def test_threshold():
    t = texture_logic(TextureOp.THRESHOLD, constant_texture(0.7, 3, 3), t=0.5)
    assert np.all(t.values == 1.0)


def test_add_clamped_stays_in_range(gradient_texture):
    t = texture_logic(TextureOp.ADD_CLAMPED, gradient_texture, gradient_texture)
    assert t.values.max() == 1.0
    assert t.values.min() == 0.0


def test_min_max(gradient_texture):
    half = constant_texture(0.5, 8, 8)
    assert texture_logic(TextureOp.MIN, gradient_texture, half).values.max() == 0.5
    assert texture_logic(TextureOp.MAX, gradient_texture, half).values.min() == 0.5


def test_binary_op_dimension_mismatch(gradient_texture):
    with pytest.raises(ForgeValidationError):
        texture_logic(TextureOp.MULTIPLY, gradient_texture, constant_texture(1.0, 4, 4))


def test_binary_op_needs_two_inputs(gradient_texture):
    with pytest.raises(ForgeValidationError):
        texture_logic(TextureOp.MAX, gradient_texture)


def test_texture_rejects_out_of_range_values():
    with pytest.raises(ForgeValidationError):
        Texture(np.array([[1.5]]), pixel_extent(1, 1))


def test_sample_constant():
    t = constant_texture(0.3, 4, 4, extent=Rect(10.0, 10.0, 50.0, 30.0))
    assert sample_texture(t, 12.0, 29.0) == pytest.approx(0.3)


def test_sample_at_pixel_center(gradient_texture):
    xs, ys = gradient_texture.pixel_centers()
    values = sample_texture(gradient_texture, xs.ravel(), ys.ravel())
    assert np.allclose(values, gradient_texture.values.ravel())


def test_sample_midpoint_between_pixels():
    t = Texture(np.array([[0.0, 1.0]]), pixel_extent(2, 1))
    assert sample_texture(t, 1.0, 0.5) == pytest.approx(0.5)


def test_pgm_round_trip_quantizes(tmp_path, gradient_texture):
    path = tmp_path / "gradient.pgm"
    write_pgm(gradient_texture, path)
    assert path.read_bytes().startswith(b"P5")
    loaded = read_pgm(path)
    assert loaded.shape == gradient_texture.shape
    assert np.abs(loaded.values - gradient_texture.values).max() <= 0.5 / 255 + 1e-12


def test_read_pgm_rejects_garbage(tmp_path):
    path = tmp_path / "noise.pgm"
    path.write_bytes(b"not an image at all")
    with pytest.raises(ArtifactIOError):
        read_pgm(path)
