"""Domain types shared across the pipeline.

All containers are frozen dataclasses holding read-only numpy arrays, so
they can be shared freely between threads.
"""

import enum
import re
from dataclasses import dataclass, field

import numpy as np

from .errors import LabelParseError, SizeError, DataError

NORM_ROWS = 64
NORM_COLS = 512
KEY_ROWS = 16
KEY_COLS = 256
KEY_SIZE = KEY_ROWS * KEY_COLS

_SUBJECT_RE = re.compile(r"^[^,\s]+$")


class Side(enum.Enum):
    LEFT = "L"
    RIGHT = "R"


class Stage(enum.IntEnum):
    RAW = 0
    PREPROCESSED = 1
    AVERAGED = 2


class Reason(enum.Enum):
    OK = "Ok"
    SATURATION_EXCEEDED = "SaturationExceeded"
    MAD_OUT_OF_RANGE = "MadOutOfRange"


def _frozen_array(values, shape=None, what="array"):
    arr = np.array(values, dtype=np.float64, copy=True)
    if shape is not None and arr.shape != shape:
        if arr.size != int(np.prod(shape)):
            raise SizeError(f"{what}: expected {int(np.prod(shape))} values, got {arr.size}")
        arr = arr.reshape(shape)
    if not np.all(np.isfinite(arr)):
        raise DataError(f"{what}: non-finite values")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, order=False)
class EyeLabel:
    subject_id: str
    side: Side

    def __post_init__(self):
        if not isinstance(self.subject_id, str) or not _SUBJECT_RE.match(self.subject_id):
            raise LabelParseError(f"invalid subject id {self.subject_id!r}")
        if not isinstance(self.side, Side):
            raise LabelParseError(f"invalid side {self.side!r}")

    def __str__(self):
        return format_label(self)


def format_label(label: EyeLabel) -> str:
    return f"{label.subject_id}_{label.side.value}"


def parse_label(text: str) -> EyeLabel:
    """Parse ``<subject_id>_<L|R>``, e.g. ``"04233_L"``."""
    subject, sep, side = text.rpartition("_")
    if not sep:
        raise LabelParseError(f"label {text!r}: missing side suffix '_L' or '_R'")
    if side not in ("L", "R"):
        raise LabelParseError(f"label {text!r}: bad side token {side!r}")
    if not subject or not _SUBJECT_RE.match(subject):
        raise LabelParseError(f"label {text!r}: bad subject id {subject!r}")
    return EyeLabel(subject, Side(side))


def label_sort_key(label: EyeLabel) -> str:
    return format_label(label)


@dataclass(frozen=True)
class NormalizedIris:
    """64x512 rubber-sheet unwrap; row 0 is the innermost radius."""

    pixels: np.ndarray
    label: EyeLabel
    sample_id: str

    def __post_init__(self):
        px = _frozen_array(self.pixels, (NORM_ROWS, NORM_COLS), "normalized iris")
        if px.min() < 0.0 or px.max() > 1.0:
            raise DataError("normalized iris: intensities outside [0, 1]")
        object.__setattr__(self, "pixels", px)


@dataclass(frozen=True)
class KeyPortion:
    """A 16x256 key portion stored as a flat row-major vector of 4096 values."""

    values: np.ndarray
    label: EyeLabel
    sample_id: str
    stage: Stage = Stage.RAW

    def __post_init__(self):
        vals = _frozen_array(self.values, (KEY_SIZE,), "key portion").ravel()
        if self.stage == Stage.PREPROCESSED and (vals.min() < 0.0 or vals.max() > 1.0):
            raise DataError("preprocessed key portion: values outside [0, 1]")
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "stage", Stage(self.stage))

    @property
    def grid(self) -> np.ndarray:
        return self.values.reshape(KEY_ROWS, KEY_COLS)

    def with_values(self, values, stage):
        return KeyPortion(values, self.label, self.sample_id, stage)


@dataclass(frozen=True)
class IntrinsicIrisCode:
    coords: np.ndarray
    label: EyeLabel

    def __post_init__(self):
        c = _frozen_array(self.coords, what="intrinsic iris code").ravel()
        if c.size < 1:
            raise SizeError("intrinsic iris code needs at least one coordinate")
        object.__setattr__(self, "coords", c)

    @property
    def d(self) -> int:
        return self.coords.size


@dataclass(frozen=True)
class QualityReport:
    accepted: bool
    reason: Reason
    saturated_count: int
    mad: float
    sample_id: str = field(default="", compare=False)

    def __post_init__(self):
        if self.accepted != (self.reason is Reason.OK):
            raise ValueError("accepted must be true exactly when reason is Ok")
        if self.saturated_count < 0 or self.mad < 0:
            raise ValueError("counts and spread must be non-negative")
