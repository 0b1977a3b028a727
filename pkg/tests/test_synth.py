import numpy as np
import pytest

from irisindex.embed import fit_map
from irisindex.errors import GeometryError, RankDeficiencyError
from irisindex.model import KEY_SIZE, Stage, format_label
from irisindex.normalize import unwrap
from irisindex.synth import (
    EMBED_SCALE, Embedding, SynthConfig, embedding_basis, eye_label, gen_eye_image, gen_eyes, gen_samples,
)


def stack(keys):
    return np.stack([k.values for k in keys])


def test_gen_eyes_deterministic():
    cfg = SynthConfig(n_eyes=20, d_true=3, seed=11)
    a, b = gen_eyes(cfg), gen_eyes(cfg)
    assert np.array_equal(stack(a), stack(b))
    assert [k.label for k in a] == [k.label for k in b]


def test_seed_changes_output():
    a = stack(gen_eyes(SynthConfig(n_eyes=10, d_true=3, seed=1)))
    b = stack(gen_eyes(SynthConfig(n_eyes=10, d_true=3, seed=2)))
    assert not np.allclose(a, b)


def test_eye_prefix_stable():
    # eye i does not depend on how many eyes are generated after it
    small = stack(gen_eyes(SynthConfig(n_eyes=5, d_true=2, seed=3)))
    large = stack(gen_eyes(SynthConfig(n_eyes=50, d_true=2, seed=3)))
    assert np.array_equal(small, large[:5])


def test_eye_labels_unique_and_sorted():
    eyes = gen_eyes(SynthConfig(n_eyes=1200, d_true=2, seed=0))
    names = [format_label(k.label) for k in eyes]
    assert len(set(names)) == 1200
    assert names == sorted(names)
    assert format_label(eye_label(0, 10)) == "synth_0001_L"
    assert all(k.stage == Stage.AVERAGED for k in eyes)


def test_basis_orthonormal():
    b = embedding_basis(5, 7)
    assert b.shape == (KEY_SIZE, 5)
    np.testing.assert_allclose(b.T @ b, EMBED_SCALE ** 2 * np.eye(5), atol=1e-12)


@pytest.mark.parametrize("embedding", list(Embedding))
def test_values_in_unit_interval(embedding):
    v = stack(gen_eyes(SynthConfig(n_eyes=30, d_true=4, embedding=embedding, seed=5)))
    assert v.min() >= 0.0 and v.max() <= 1.0


def test_linear_rank_matches_d_true():
    v = stack(gen_eyes(SynthConfig(n_eyes=60, d_true=3, seed=9)))
    s = np.linalg.svd(v - v.mean(axis=0), compute_uv=False)
    assert s[2] > 1e-3 * s[0]
    assert s[3] < 1e-10 * s[0]


def test_one_dimensional_variance_capture():
    eyes = gen_eyes(SynthConfig(n_eyes=200, d_true=1, seed=4))
    imap = fit_map(eyes, 1)
    v = stack(eyes)
    total = v.var(axis=0, ddof=1).sum()
    assert imap.explained_variance[0] / total >= 0.999
    with pytest.raises(RankDeficiencyError):
        fit_map(eyes, 2)


def test_linear_embedding_is_isometric():
    cfg = SynthConfig(n_eyes=40, d_true=3, seed=6)
    from irisindex.synth import latent_points
    z = latent_points(cfg)
    v = stack(gen_eyes(cfg))
    dz = np.linalg.norm(z[:, None] - z[None], axis=-1) * EMBED_SCALE
    dv = np.linalg.norm(v[:, None] - v[None], axis=-1)
    np.testing.assert_allclose(dv, dz, atol=1e-12)


def test_zero_noise_samples_equal_eyes():
    eyes = gen_eyes(SynthConfig(n_eyes=8, d_true=2, seed=1))
    samples = gen_samples(eyes, 3, 0.0, seed=1)
    assert len(samples) == 24
    for i, s in enumerate(samples):
        assert np.array_equal(s.values, eyes[i // 3].values)
        assert s.label == eyes[i // 3].label and s.stage == Stage.RAW
    assert samples[0].sample_id == "synth_0001_L_s001"
    assert len({s.sample_id for s in samples}) == 24


def test_noise_mean_converges():
    sigma = 0.02
    eye = gen_eyes(SynthConfig(n_eyes=2, d_true=2, seed=2))[:1]
    # keep values away from the clamp so the mean is unbiased
    assert 5 * sigma < eye[0].values.min() and eye[0].values.max() < 1 - 5 * sigma
    samples = gen_samples(eye, 1000, sigma, seed=2)
    mean = stack(samples).mean(axis=0)
    assert np.abs(mean - eye[0].values).max() <= 4 * sigma / np.sqrt(1000) * 1.5
    # per-pixel deviation std close to sigma
    dev = stack(samples) - eye[0].values
    assert abs(dev.std() - sigma) < 0.01 * sigma


def test_samples_deterministic_and_seeded():
    eyes = gen_eyes(SynthConfig(n_eyes=4, d_true=2, seed=1))
    a = stack(gen_samples(eyes, 2, 0.05, seed=1))
    b = stack(gen_samples(eyes, 2, 0.05, seed=1))
    c = stack(gen_samples(eyes, 2, 0.05, seed=2))
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


@pytest.mark.parametrize("kwargs", [
    dict(n_eyes=1), dict(d_true=0), dict(samples_per_eye=0), dict(noise_sigma=-0.1), dict(seed=-1),
])
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        SynthConfig(**kwargs)


def test_gen_samples_validation():
    eyes = gen_eyes(SynthConfig(n_eyes=2, d_true=1))
    with pytest.raises(ValueError):
        gen_samples(eyes, 1, -1.0, 0)
    with pytest.raises(ValueError):
        gen_samples(eyes, 0, 0.1, 0)


def test_eye_image_uniform_unwraps_flat():
    img, pupil, iris = gen_eye_image(200, "uniform", (100.0, 100.0), 20.0, 80.0)
    norm = unwrap(img, pupil, iris)
    np.testing.assert_allclose(norm.pixels, 0.5, atol=1e-12)


def test_eye_image_radial_is_rotation_invariant():
    img, pupil, iris = gen_eye_image(240, "radial", (120.0, 120.0), 30.0, 100.0, seed=3)
    norm = unwrap(img, pupil, iris)
    assert norm.pixels.std(axis=1).max() <= 1e-3
    assert norm.pixels.std(axis=0).max() > 0.05


@pytest.mark.parametrize("args", [
    (100, "uniform", (50.0, 50.0), 30.0, 20.0),
    (100, "uniform", (50.0, 50.0), 10.0, 60.0),
    (100, "uniform", (10.0, 50.0), 5.0, 20.0),
    (100, "uniform", (50.0, 50.0), 0.0, 20.0),
])
def test_eye_image_bad_geometry(args):
    with pytest.raises(GeometryError):
        gen_eye_image(*args)
