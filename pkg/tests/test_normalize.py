import numpy as np
import pytest

from irisindex import synth
from irisindex.errors import GeometryError, OutOfBoundsError
from irisindex.model import parse_label
from irisindex.normalize import Circle, EyeImage, bilinear, sample_grid, trim_radii, unwrap


@pytest.mark.parametrize("rp, ri, expected", [(50, 150, (60, 145)), (10, 110, (20, 105))])
def test_trim_radii_examples(rp, ri, expected):
    assert trim_radii(rp, ri) == expected


@pytest.mark.parametrize("rp, ri", [(100, 100), (120, 100), (0, 10), (-1, 10)])
def test_trim_radii_rejects(rp, ri):
    with pytest.raises(GeometryError):
        trim_radii(rp, ri)


def test_trim_radii_preserves_order(rng):
    for rp, gap in rng.uniform(0.1, 200, size=(1000, 2)):
        a, b = trim_radii(rp, rp + gap)
        assert a < b


def test_circle_validation():
    with pytest.raises(GeometryError):
        Circle(0, 0, 0)
    with pytest.raises(GeometryError):
        Circle(np.nan, 0, 1)


def test_uniform_image_unwraps_to_constant():
    img, pupil, iris = synth.gen_eye_image(300, "uniform", (150, 150), 40, 120)
    norm = unwrap(img, pupil, iris)
    assert norm.pixels.shape == (64, 512)
    assert np.all(norm.pixels == 0.5)


def test_radial_image_rows_are_constant():
    img, pupil, iris = synth.gen_eye_image(320, "radial", (160.3, 158.7), 40, 120, seed=3)
    norm = unwrap(img, pupil, iris)
    assert norm.pixels.std(axis=1).max() <= 1e-3
    # rows must actually differ from each other, or the check above is vacuous
    assert np.ptp(norm.pixels.mean(axis=1)) > 0.1


def test_row_zero_is_innermost():
    pupil, iris = Circle(100, 100, 20), Circle(100, 100, 80)
    x, y = sample_grid(pupil, iris)
    rho = np.hypot(x - 100, y - 100)
    rp, ri = trim_radii(20, 80)
    np.testing.assert_allclose(rho[0], rp + (ri - rp) * 0.5 / 64)
    np.testing.assert_allclose(rho[63], rp + (ri - rp) * 63.5 / 64)
    assert np.all(np.diff(rho, axis=0) > 0)


def test_angle_convention():
    x, y = sample_grid(Circle(100, 100, 20), Circle(100, 100, 80))
    assert x[0, 0] > 100 and y[0, 0] == pytest.approx(100)
    # a quarter turn later the sample is below the centre (image-down is +y)
    assert y[0, 128] > 100 and x[0, 128] == pytest.approx(100)


def test_non_concentric_boundaries_interpolate_per_angle():
    pupil, iris = Circle(100, 102, 20), Circle(98, 100, 80)
    x, y = sample_grid(pupil, iris)
    rp, ri = trim_radii(20, 80)
    theta = 2 * np.pi * np.arange(512) / 512
    inner = np.stack([100 + rp * np.cos(theta), 102 + rp * np.sin(theta)])
    outer = np.stack([98 + ri * np.cos(theta), 100 + ri * np.sin(theta)])
    t = (5 + 0.5) / 64
    np.testing.assert_allclose(x[5], (1 - t) * inner[0] + t * outer[0])
    np.testing.assert_allclose(y[5], (1 - t) * inner[1] + t * outer[1])


def test_bilinear_matches_manual():
    px = np.array([[0.0, 1.0], [0.5, 0.25]])
    val = bilinear(px, np.array([[0.25]]), np.array([[0.5]]))
    top = 0.0 * 0.75 + 1.0 * 0.25
    bottom = 0.5 * 0.75 + 0.25 * 0.25
    assert val[0, 0] == pytest.approx(0.5 * top + 0.5 * bottom)
    # exact grid points and the far edge
    assert bilinear(px, np.array([[1.0]]), np.array([[1.0]]))[0, 0] == 0.25


@pytest.mark.parametrize("m", [1, 7, 128, 300, 511])
def test_angular_shift_is_column_roll(m):
    img, pupil, iris = synth.gen_eye_image(320, "radial", (160, 160), 40, 120, seed=1)
    # break the radial symmetry so the roll is observable
    px = img.pixels * (0.75 + 0.25 * np.cos(np.arctan2(*np.mgrid[0:320, 0:320] - 160)))
    img = EyeImage(px, img.label, img.sample_id)
    base = unwrap(img, pupil, iris).pixels
    shifted = unwrap(img, pupil, iris, angle_offset_cols=m).pixels
    assert np.array_equal(shifted, np.roll(base, -m, axis=1))


def test_out_of_bounds_is_an_error():
    img = EyeImage(np.full((200, 200), 0.5), parse_label("a_L"), "s")
    with pytest.raises(OutOfBoundsError) as info:
        unwrap(img, Circle(150, 100, 20), Circle(150, 100, 90))
    assert "row=" in str(info.value) and "col=" in str(info.value)


def test_invalid_circles_are_an_error():
    img = EyeImage(np.full((200, 200), 0.5), parse_label("a_L"), "s")
    with pytest.raises(GeometryError):
        unwrap(img, Circle(100, 100, 60), Circle(100, 100, 50))


def test_unwrap_output_is_valid(rng):
    img = EyeImage(rng.uniform(size=(240, 260)), parse_label("a_R"), "s9")
    norm = unwrap(img, Circle(130, 120, 30), Circle(131, 119, 100))
    assert norm.pixels.min() >= 0 and norm.pixels.max() <= 1
    assert norm.label == parse_label("a_R") and norm.sample_id == "s9"
