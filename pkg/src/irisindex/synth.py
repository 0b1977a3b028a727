"""Synthetic eyes with a known intrinsic dimension, noisy samples of them, and toy eye images.

Randomness comes from numpy's PCG64 seeded through ``SeedSequence``. Every
stream is keyed by ``(seed, purpose, index...)``, so any single eye or
sample can be regenerated independently of the others.
"""

import enum
from dataclasses import dataclass

import numpy as np

from .errors import GeometryError
from .model import KEY_SIZE, EyeLabel, KeyPortion, Side, Stage
from .normalize import Circle, EyeImage

EMBED_SCALE = 0.4

_BASIS, _LATENT, _MIXING, _NOISE, _IMAGE = range(5)


class Embedding(enum.Enum):
    LINEAR = "linear"
    SMOOTH = "smooth"


class Pattern(enum.Enum):
    RADIAL = "radial"
    UNIFORM = "uniform"


@dataclass(frozen=True)
class SynthConfig:
    n_eyes: int = 1350
    d_true: int = 4
    samples_per_eye: int = 1
    noise_sigma: float = 0.0
    embedding: Embedding = Embedding.LINEAR
    seed: int = 0

    def __post_init__(self):
        if self.n_eyes < 2:
            raise ValueError("n_eyes must be >= 2")
        if not 1 <= self.d_true <= KEY_SIZE:
            raise ValueError(f"d_true must be in [1, {KEY_SIZE}]")
        if self.samples_per_eye < 1:
            raise ValueError("samples_per_eye must be >= 1")
        if not self.noise_sigma >= 0:
            raise ValueError("noise_sigma must be >= 0")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        object.__setattr__(self, "embedding", Embedding(self.embedding))


def rng_for(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), *key]))


def embedding_basis(d_true: int, seed: int) -> np.ndarray:
    """A KEY_SIZE x d_true matrix with orthonormal columns, scaled by EMBED_SCALE."""
    g = rng_for(seed, _BASIS, d_true).standard_normal((KEY_SIZE, d_true))
    q, r = np.linalg.qr(g)
    q *= np.sign(np.diag(r))
    return EMBED_SCALE * q


def eye_label(i: int, n_eyes: int) -> EyeLabel:
    width = max(4, len(str(n_eyes)))
    return EyeLabel(f"synth_{i + 1:0{width}d}", Side.LEFT)


def latent_points(cfg: SynthConfig) -> np.ndarray:
    return np.stack([rng_for(cfg.seed, _LATENT, i).uniform(size=cfg.d_true) for i in range(cfg.n_eyes)])


def gen_eyes(cfg: SynthConfig) -> list:
    """Noise-free eye keys lying on a ``d_true``-dimensional manifold."""
    basis = embedding_basis(cfg.d_true, cfg.seed)
    z = latent_points(cfg)
    if cfg.embedding is Embedding.LINEAR:
        values = 0.5 + (z - 0.5) @ basis.T
    else:
        rng = rng_for(cfg.seed, _MIXING, cfg.d_true)
        freq = rng.uniform(0.5, 1.5, size=(KEY_SIZE, cfg.d_true))
        phase = rng.uniform(0.0, 2 * np.pi, size=(KEY_SIZE, cfg.d_true))
        values = np.stack([
            0.5 + (np.sin(2 * np.pi * freq * zi + phase) * basis).sum(axis=1) for zi in z
        ])
    values = np.clip(values, 0.0, 1.0)
    out = []
    for i, row in enumerate(values):
        label = eye_label(i, cfg.n_eyes)
        out.append(KeyPortion(row, label, str(label), Stage.AVERAGED))
    return out


def gen_samples(eyes, samples_per_eye: int, noise_sigma: float, seed: int) -> list:
    """Raw samples: each eye key plus i.i.d. Gaussian noise, clamped to [0, 1]."""
    if noise_sigma < 0:
        raise ValueError("noise_sigma must be >= 0")
    if samples_per_eye < 1:
        raise ValueError("samples_per_eye must be >= 1")
    out = []
    for i, eye in enumerate(eyes):
        for s in range(samples_per_eye):
            values = eye.values
            if noise_sigma > 0:
                noise = rng_for(seed, _NOISE, i, s).normal(0.0, noise_sigma, KEY_SIZE)
                values = np.clip(values + noise, 0.0, 1.0)
            out.append(KeyPortion(values, eye.label, f"{eye.sample_id}_s{s + 1:03d}", Stage.RAW))
    return out


def radial_profile(rho, phase=0.0):
    return 0.5 + 0.35 * np.sin(rho / 12.0 + phase)


def gen_eye_image(size, pattern, center, r_pupil, r_iris, seed=0, label=None, sample_id="synthetic"):
    """Square test image with concentric pupil and iris circles.

    Returns ``(image, pupil_circle, iris_circle)``.
    """
    cx, cy = center
    if not 0 < r_pupil < r_iris:
        raise GeometryError(f"need 0 < r_pupil < r_iris, got {r_pupil}, {r_iris}")
    if cx - r_iris < 0 or cy - r_iris < 0 or cx + r_iris > size - 1 or cy + r_iris > size - 1:
        raise GeometryError("iris circle does not fit inside the image")
    pattern = Pattern(pattern)
    if pattern is Pattern.UNIFORM:
        pixels = np.full((size, size), 0.5)
    else:
        phase = rng_for(seed, _IMAGE).uniform(0.0, 2 * np.pi)
        yy, xx = np.mgrid[0:size, 0:size]
        pixels = radial_profile(np.hypot(xx - cx, yy - cy), phase)
    label = label or EyeLabel("synth_eye", Side.LEFT)
    return EyeImage(pixels, label, sample_id), Circle(cx, cy, r_pupil), Circle(cx, cy, r_iris)
