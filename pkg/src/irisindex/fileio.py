"""Readers and writers for manifests, PGM images, key portions, maps and enrollment databases.

All binary formats are little-endian; all text is written without any
locale-dependent formatting, so files are byte-stable across platforms.
"""

import csv
import io
import math
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .embed import IntrinsicMap
from .errors import CompatibilityError, FormatError, IrisIndexError
from .index import EnrollmentDB
from .model import (
    KEY_COLS,
    KEY_ROWS,
    KEY_SIZE,
    NORM_COLS,
    NORM_ROWS,
    EyeLabel,
    KeyPortion,
    NormalizedIris,
    Side,
    Stage,
    format_label,
    parse_label,
)
from .normalize import Circle

MANIFEST_BASE = ["sample_id", "subject_id", "side", "path"]
MANIFEST_CIRCLES = ["pcx", "pcy", "pr", "icx", "icy", "ir"]

KEY_MAGIC = b"IKP1"
MAP_MAGIC = b"IICM"
_KEY_HEADER = struct.Struct("<4sIIB")

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3


def fnv1a64(data: bytes) -> int:
    h = FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * FNV_PRIME) & 0xFFFFFFFFFFFFFFFF
    return h


# --- manifest ---------------------------------------------------------------


@dataclass(frozen=True)
class ManifestRow:
    sample_id: str
    subject_id: str
    side: Side
    path: str
    pupil: Optional[Circle] = None
    iris: Optional[Circle] = None

    @property
    def label(self) -> EyeLabel:
        return EyeLabel(self.subject_id, self.side)

    @property
    def has_circles(self) -> bool:
        return self.pupil is not None


def _fmt_float(x: float) -> str:
    return repr(float(x))


def write_manifest(path, rows) -> None:
    rows = list(rows)
    with_circles = any(r.has_circles for r in rows)
    header = MANIFEST_BASE + (MANIFEST_CIRCLES if with_circles else [])
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            line = [r.sample_id, r.subject_id, r.side.value, r.path]
            if with_circles:
                if r.has_circles:
                    p, i = r.pupil, r.iris
                    line += [_fmt_float(v) for v in (p.cx, p.cy, p.r, i.cx, i.cy, i.r)]
                else:
                    line += [""] * 6
            w.writerow(line)


def read_manifest(path) -> list:
    rows = []
    seen = set()
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header not in (MANIFEST_BASE, MANIFEST_BASE + MANIFEST_CIRCLES):
            raise FormatError(f"{path}: line 1: bad manifest header {header!r}")
        for lineno, fields in enumerate(reader, start=2):
            if not fields:
                continue
            if len(fields) != len(header):
                raise FormatError(f"{path}: line {lineno}: expected {len(header)} fields, got {len(fields)}")
            sample_id, subject_id, side, fpath = fields[:4]
            if not sample_id:
                raise FormatError(f"{path}: line {lineno}: empty sample_id")
            if sample_id in seen:
                raise FormatError(f"{path}: line {lineno}: duplicate sample_id {sample_id!r}")
            if side not in ("L", "R"):
                raise FormatError(f"{path}: line {lineno}: bad side token {side!r}")
            if not fpath:
                raise FormatError(f"{path}: line {lineno}: empty path")
            pupil = iris = None
            circ = fields[4:]
            present = [c != "" for c in circ]
            if any(present) and not all(present):
                raise FormatError(f"{path}: line {lineno}: circle columns must be all present or all absent")
            try:
                label = EyeLabel(subject_id, Side(side))
                if circ and all(present):
                    vals = [float(c) for c in circ]
                    pupil = Circle(*vals[:3])
                    iris = Circle(*vals[3:])
            except (ValueError, IrisIndexError) as exc:
                raise FormatError(f"{path}: line {lineno}: {exc}") from None
            seen.add(sample_id)
            rows.append(ManifestRow(sample_id, label.subject_id, label.side, fpath, pupil, iris))
    return rows


# --- PGM ---------------------------------------------------------------------


def _pgm_tokens(data: bytes, count: int):
    """Read ``count`` whitespace-separated header tokens, skipping comments."""
    tokens, pos = [], 0
    while len(tokens) < count:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace() and data[pos:pos + 1] != b"#":
            pos += 1
        if start == pos:
            raise FormatError("truncated PGM header")
        tokens.append(data[start:pos])
    # exactly one whitespace byte separates the header from the raster
    if pos >= len(data) or not data[pos:pos + 1].isspace():
        raise FormatError("malformed PGM header")
    return tokens, pos + 1


def read_pgm(path) -> np.ndarray:
    """Read an 8-bit binary PGM (P5) as intensities in [0, 1], shape (height, width)."""
    data = Path(path).read_bytes()
    tokens, offset = _pgm_tokens(data, 4)
    if tokens[0] != b"P5":
        raise FormatError(f"{path}: not a binary PGM (magic {tokens[0]!r})")
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError:
        raise FormatError(f"{path}: non-integer PGM header field") from None
    if maxval != 255:
        raise FormatError(f"{path}: maxval must be 255, got {maxval}")
    if width <= 0 or height <= 0:
        raise FormatError(f"{path}: bad PGM dimensions {width}x{height}")
    raster = data[offset:]
    if len(raster) != width * height:
        raise FormatError(f"{path}: expected {width * height} raster bytes, got {len(raster)}")
    return np.frombuffer(raster, dtype=np.uint8).reshape(height, width) / 255.0


def quantize8(values: np.ndarray) -> np.ndarray:
    return np.floor(np.asarray(values) * 255.0 + 0.5).astype(np.uint8)


def write_pgm(path, pixels) -> None:
    px = np.asarray(pixels, dtype=np.float64)
    if px.ndim != 2:
        raise FormatError("PGM pixels must be 2-D")
    h, w = px.shape
    Path(path).write_bytes(b"P5\n%d %d\n255\n" % (w, h) + quantize8(px).tobytes())


def write_normalized_iris(path, norm: NormalizedIris) -> None:
    write_pgm(path, norm.pixels)


def read_normalized_iris(path, label: EyeLabel, sample_id: str) -> NormalizedIris:
    px = read_pgm(path)
    if px.shape != (NORM_ROWS, NORM_COLS):
        raise FormatError(f"{path}: normalized iris must be {NORM_COLS}x{NORM_ROWS}, got {px.shape[1]}x{px.shape[0]}")
    return NormalizedIris(px, label, sample_id)


# --- key portions --------------------------------------------------------------


def _pack_str(text: str) -> bytes:
    raw = text.encode("utf-8")
    return struct.pack("<I", len(raw)) + raw


def key_to_bytes(key: KeyPortion) -> bytes:
    return b"".join([
        _KEY_HEADER.pack(KEY_MAGIC, KEY_ROWS, KEY_COLS, int(key.stage)),
        key.values.astype("<f4").tobytes(),
        _pack_str(format_label(key.label)),
        _pack_str(key.sample_id),
    ])


def key_from_bytes(data: bytes, source="<bytes>") -> KeyPortion:
    if len(data) < _KEY_HEADER.size:
        raise FormatError(f"{source}: truncated key portion header")
    magic, rows, cols, stage = _KEY_HEADER.unpack_from(data)
    if magic != KEY_MAGIC:
        raise FormatError(f"{source}: bad magic {magic!r}")
    if (rows, cols) != (KEY_ROWS, KEY_COLS):
        raise FormatError(f"{source}: key portion must be {KEY_ROWS}x{KEY_COLS}, got {rows}x{cols}")
    if stage not in {s.value for s in Stage}:
        raise FormatError(f"{source}: unknown stage code {stage}")
    pos = _KEY_HEADER.size
    end = pos + 4 * KEY_SIZE
    if len(data) < end:
        raise FormatError(f"{source}: truncated key portion payload")
    values = np.frombuffer(data, dtype="<f4", count=KEY_SIZE, offset=pos).astype(np.float64)
    pos = end
    strings = []
    for _ in range(2):
        if len(data) < pos + 4:
            raise FormatError(f"{source}: truncated string length")
        (n,) = struct.unpack_from("<I", data, pos)
        pos += 4
        if len(data) < pos + n:
            raise FormatError(f"{source}: truncated string")
        try:
            strings.append(data[pos:pos + n].decode("utf-8"))
        except UnicodeDecodeError:
            raise FormatError(f"{source}: string is not valid UTF-8") from None
        pos += n
    if pos != len(data):
        raise FormatError(f"{source}: {len(data) - pos} trailing bytes")
    try:
        return KeyPortion(values, parse_label(strings[0]), strings[1], Stage(stage))
    except IrisIndexError as exc:
        raise FormatError(f"{source}: {exc}") from None


def write_key_portion(path, key: KeyPortion) -> None:
    Path(path).write_bytes(key_to_bytes(key))


def read_key_portion(path) -> KeyPortion:
    return key_from_bytes(Path(path).read_bytes(), path)


def read_key_dir(directory) -> list:
    """All ``*.ikp`` files in a directory, in file-name order."""
    paths = sorted(Path(directory).glob("*.ikp"))
    if not paths:
        raise FormatError(f"{directory}: no .ikp key portion files")
    return [read_key_portion(p) for p in paths]


# --- intrinsic map --------------------------------------------------------------


def map_to_bytes(imap: IntrinsicMap) -> bytes:
    if imap.dim_in != KEY_SIZE:
        raise FormatError(f"map input dimension must be {KEY_SIZE}, got {imap.dim_in}")
    return b"".join([
        MAP_MAGIC,
        struct.pack("<I", imap.d),
        imap.mean.astype("<f8").tobytes(),
        imap.components.astype("<f8").tobytes(),
        imap.explained_variance.astype("<f8").tobytes(),
    ])


def map_from_bytes(data: bytes, source="<bytes>") -> IntrinsicMap:
    if len(data) < 8 or data[:4] != MAP_MAGIC:
        raise FormatError(f"{source}: bad map magic")
    (d,) = struct.unpack_from("<I", data, 4)
    if d < 1:
        raise FormatError(f"{source}: map dimension must be >= 1")
    expected = 8 + 8 * (KEY_SIZE + d * KEY_SIZE + d)
    if len(data) != expected:
        raise FormatError(f"{source}: expected {expected} bytes for d={d}, got {len(data)}")
    payload = np.frombuffer(data, dtype="<f8", offset=8).astype(np.float64)
    mean = payload[:KEY_SIZE]
    comps = payload[KEY_SIZE:KEY_SIZE + d * KEY_SIZE].reshape(d, KEY_SIZE)
    var = payload[KEY_SIZE + d * KEY_SIZE:]
    return IntrinsicMap(mean, comps, var)


def map_fingerprint(imap: IntrinsicMap) -> str:
    return f"{fnv1a64(map_to_bytes(imap)):016x}"


def write_map(path, imap: IntrinsicMap) -> None:
    Path(path).write_bytes(map_to_bytes(imap))


def read_map(path) -> IntrinsicMap:
    return map_from_bytes(Path(path).read_bytes(), path)


# --- enrollment database -------------------------------------------------------


def _f17(x: float) -> str:
    return "%.17g" % x


def db_to_text(db: EnrollmentDB) -> str:
    out = io.StringIO()
    out.write(f"# map={db.map_fingerprint}\n")
    out.write(",".join(["label"] + [f"c{i + 1}" for i in range(db.d)]) + "\n")
    for label, row in zip(db.labels, db.coords):
        out.write(",".join([format_label(label)] + [_f17(v) for v in row]) + "\n")
    return out.getvalue()


def write_db(path, db: EnrollmentDB) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(db_to_text(db))


def read_db(path, imap: Optional[IntrinsicMap] = None) -> EnrollmentDB:
    """Read an enrollment database; if ``imap`` is given its fingerprint must match."""
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or not lines[0].startswith("# map="):
        raise FormatError(f"{path}: line 1: missing '# map=<fingerprint>' comment")
    fingerprint = lines[0][len("# map="):].strip()
    if len(lines) < 2:
        raise FormatError(f"{path}: missing header")
    header = lines[1].split(",")
    d = len(header) - 1
    if d < 1 or header != ["label"] + [f"c{i + 1}" for i in range(d)]:
        raise FormatError(f"{path}: line 2: bad header {lines[1]!r}")
    labels, coords = [], []
    for lineno, line in enumerate(lines[2:], start=3):
        if not line:
            continue
        fields = line.split(",")
        if len(fields) != d + 1:
            raise FormatError(f"{path}: line {lineno}: expected {d + 1} fields")
        try:
            labels.append(parse_label(fields[0]))
            vals = [float(v) for v in fields[1:]]
        except (ValueError, IrisIndexError) as exc:
            raise FormatError(f"{path}: line {lineno}: {exc}") from None
        if not all(math.isfinite(v) for v in vals):
            raise FormatError(f"{path}: line {lineno}: non-finite coordinate")
        coords.append(vals)
    if not labels:
        raise FormatError(f"{path}: no entries")
    if imap is not None:
        if imap.fingerprint != fingerprint:
            raise CompatibilityError(
                f"{path}: database was built with map {fingerprint}, not {imap.fingerprint}"
            )
        if imap.d != d:
            raise CompatibilityError(f"{path}: database has d={d}, map has d={imap.d}")
    return EnrollmentDB(tuple(labels), np.array(coords, dtype=np.float64), fingerprint)
