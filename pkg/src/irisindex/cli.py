"""Command-line interface: one subcommand per pipeline stage.

Exit codes: 0 success, 1 usage error, 2 data/format error, 3 numeric error.
Errors are reported on stderr as ``error: <category>: <detail>``.
"""

import argparse
import csv
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from pathlib import Path

from . import fileio, intdim, keyextract, normalize, synth
from .embed import fit_map, project, project_all
from .errors import DataError, IrisIndexError
from .index import dimension_sweep, enroll, penetration, query_rank, ranked_candidates
from .model import format_label
from .normalize import EyeImage

THREADS_ENV = "IRISINDEX_THREADS"


class UsageError(Exception):
    category = "usage"
    exit_code = 1


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _positive_int(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _nonneg_int(text):
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {value}")
    return value


def _seed(text):
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def parse_dims(text):
    """``"2..6"`` or ``"2,3,5"`` -> list of ints."""
    dims = []
    for part in text.split(","):
        part = part.strip()
        if ".." in part:
            lo, hi = part.split("..", 1)
            dims.extend(range(int(lo), int(hi) + 1))
        elif part:
            dims.append(int(part))
    if not dims or min(dims) < 1:
        raise argparse.ArgumentTypeError(f"bad dimension list {text!r}")
    return dims


def parse_ranges(text):
    """``"10-20,40-60"`` -> [(10.0, 20.0), (40.0, 60.0)]."""
    ranges = []
    for part in text.split(","):
        lo, _, hi = part.strip().partition("-")
        try:
            ranges.append((float(lo), float(hi)))
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad range {part!r}") from None
    return ranges


def read_config_file(path):
    """Parse optional ``key = value`` lines; ``#`` starts a comment."""
    values = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise UsageError(f"{path}: line {lineno}: expected 'key = value'")
        values[key.strip().replace("-", "_")] = value.strip()
    return values


@contextmanager
def _mapper(threads):
    """An order-preserving ``map``; outputs never depend on the thread count."""
    n = threads or os.cpu_count() or 1
    if n == 1:
        yield map
    else:
        with ThreadPoolExecutor(max_workers=n) as pool:
            yield pool.map


def _resolve(base, path):
    p = Path(path)
    return p if p.is_absolute() else Path(base) / p


def _safe_name(sample_id):
    if not sample_id or "/" in sample_id or "\\" in sample_id or sample_id in (".", ".."):
        raise DataError(f"sample id {sample_id!r} cannot be used as a file name")
    return sample_id


def _write_keys(directory, keys):
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    for k in keys:
        fileio.write_key_portion(out / f"{_safe_name(k.sample_id)}.ikp", k)


def _preprocess_config(args):
    try:
        return keyextract.PreprocessConfig(
            mad_span=args.mad_span,
            saturation_threshold_count=args.saturation_count,
            saturation_level=args.saturation_level,
            mad_min=args.mad_min,
            mad_max=args.mad_max,
            kernel_size=args.kernel_size,
            angular_offset_cols=args.angular_offset_cols,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


# --- subcommands -----------------------------------------------------------


def cmd_synth(args, out):
    try:
        cfg = synth.SynthConfig(args.eyes, args.dim_true, args.samples, args.noise, args.embedding, args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    eyes = synth.gen_eyes(cfg)
    samples = synth.gen_samples(eyes, cfg.samples_per_eye, cfg.noise_sigma, cfg.seed)
    root = Path(args.out)
    _write_keys(root / "eyes", eyes)
    _write_keys(root / "keys", samples)
    rows = [
        fileio.ManifestRow(s.sample_id, s.label.subject_id, s.label.side, f"keys/{s.sample_id}.ikp")
        for s in samples
    ]
    fileio.write_manifest(root / "manifest.csv", rows)
    if args.images:
        (root / "images").mkdir(parents=True, exist_ok=True)
        image_rows = []
        for i, s in enumerate(samples[:args.images]):
            rng = synth.rng_for(cfg.seed, 99, i)
            cx, cy = 160.0 + rng.uniform(-4, 4, size=2)
            img, pupil, iris = synth.gen_eye_image(
                320, "radial", (cx, cy), 40.0, 120.0, seed=(cfg.seed + i) % 2**64, label=s.label, sample_id=s.sample_id
            )
            name = f"images/{s.sample_id}.pgm"
            fileio.write_pgm(root / name, img.pixels)
            image_rows.append(fileio.ManifestRow(s.sample_id, s.label.subject_id, s.label.side, name, pupil, iris))
        fileio.write_manifest(root / "images.csv", image_rows)
    print(f"wrote {len(eyes)} eyes and {len(samples)} samples to {root}", file=out)


def cmd_normalize(args, out):
    rows = fileio.read_manifest(args.manifest)
    base = Path(args.manifest).parent
    missing = [r.sample_id for r in rows if not r.has_circles]
    if missing:
        raise DataError(f"{args.manifest}: no circle parameters for sample {missing[0]!r}")
    dest = Path(args.out)
    dest.mkdir(parents=True, exist_ok=True)

    def work(row):
        image = EyeImage(fileio.read_pgm(_resolve(base, row.path)), row.label, row.sample_id)
        norm = normalize.unwrap(image, row.pupil, row.iris)
        name = f"{_safe_name(row.sample_id)}.pgm"
        fileio.write_normalized_iris(dest / name, norm)
        return fileio.ManifestRow(row.sample_id, row.subject_id, row.side, name)

    with _mapper(args.threads) as m:
        written = list(m(work, rows))
    fileio.write_manifest(dest / "manifest.csv", written)
    print(f"normalized {len(written)} irises into {dest}", file=out)


def cmd_extract(args, out):
    rows = fileio.read_manifest(args.manifest)
    base = Path(args.manifest).parent
    keys = []
    for row in rows:
        norm = fileio.read_normalized_iris(_resolve(base, row.path), row.label, row.sample_id)
        keys.append(keyextract.extract_key(norm, args.angular_offset_cols))
    _write_keys(args.out, keys)
    print(f"extracted {len(keys)} key portions into {args.out}", file=out)


def cmd_preprocess(args, out):
    cfg = _preprocess_config(args)
    keys = fileio.read_key_dir(args.input)
    with _mapper(args.threads) as m:
        kept, reports = keyextract.preprocess_batch(keys, cfg, m)
    _write_keys(args.out, kept)
    if args.report:
        with open(args.report, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["sample_id", "label", "accepted", "reason", "saturated_count", "mad"])
            for key, rep in zip(keys, reports):
                w.writerow([key.sample_id, format_label(key.label), int(rep.accepted), rep.reason.value,
                            rep.saturated_count, repr(rep.mad)])
    counts = {}
    for rep in reports:
        counts[rep.reason.value] = counts.get(rep.reason.value, 0) + 1
    print(f"kept {len(kept)} of {len(keys)} key portions", file=out)
    for reason in sorted(counts):
        print(f"{reason},{counts[reason]}", file=out)


def cmd_average(args, out):
    averages = keyextract.average_per_eye(fileio.read_key_dir(args.input))
    _write_keys(args.out, averages)
    print(f"averaged into {len(averages)} eyes in {args.out}", file=out)


def cmd_dim(args, out):
    keys = fileio.read_key_dir(args.input)
    table = intdim.dimension_table(keys, args.ranges or intdim.TABLE_RANGES, args.fit_points)
    lines = ["lo_pct,hi_pct,dimension"]
    lines += [f"{e.lo_pct:g},{e.hi_pct:g},{e.slope:.17g}" for e in table]
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        out.write(text)


def cmd_fit(args, out):
    imap = fit_map(fileio.read_key_dir(args.input), args.dim)
    fileio.write_map(args.out, imap)
    print(f"map d={imap.d} fingerprint={imap.fingerprint}", file=out)


def cmd_enroll(args, out):
    imap = fileio.read_map(args.map)
    db = enroll(imap, fileio.read_key_dir(args.input))
    fileio.write_db(args.out, db)
    print(f"enrolled {db.n} eyes", file=out)


def cmd_query(args, out):
    imap = fileio.read_map(args.map)
    db = fileio.read_db(args.db, imap)
    code = project(imap, fileio.read_key_portion(args.key))
    ranked = ranked_candidates(db, code.coords)
    if args.limit:
        ranked = ranked[:args.limit]
    if code.label in db:
        out.write(f"# C={query_rank(db, code)}\n")
    else:
        out.write(f"# C=none (label {format_label(code.label)} is not enrolled)\n")
    out.write("rank,label,distance\n")
    for i, (label, dist) in enumerate(ranked, start=1):
        out.write(f"{i},{format_label(label)},{dist:.17g}\n")


def cmd_bench(args, out):
    imap = fileio.read_map(args.map)
    db = fileio.read_db(args.db, imap)
    keys = fileio.read_key_dir(args.input)
    codes = project_all(imap, keys)
    with _mapper(args.threads) as m:
        res = penetration(db, codes, args.bins, m)
    if args.samples_out:
        with open(args.samples_out, "w", newline="", encoding="utf-8") as fh:
            fh.write("sample_id,label,rank,penetration\n")
            for key, rank, frac in zip(keys, res.ranks, res.samples):
                fh.write(f"{key.sample_id},{format_label(key.label)},{rank},{frac:.17g}\n")
    if args.hist_out:
        with open(args.hist_out, "w", newline="", encoding="utf-8") as fh:
            fh.write("bin_lo,bin_hi,count\n")
            for lo, hi, c in zip(res.bin_edges[:-1], res.bin_edges[1:], res.histogram):
                fh.write(f"{lo:.17g},{hi:.17g},{c}\n")
    out.write(f"{res.P:.17g}\n")


def cmd_sweep(args, out):
    averages = fileio.read_key_dir(args.averages)
    samples = fileio.read_key_dir(args.samples)
    rows = dimension_sweep(averages, samples, args.dims, args.bins)
    text = "dimension,penetration_rate\n" + "".join(f"{d},{p:.17g}\n" for d, p in rows)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        out.write(text)


# --- parser ------------------------------------------------------------------


def _add_preprocess_flags(p):
    d = keyextract.PreprocessConfig()
    p.add_argument("--mad-span", type=float, default=d.mad_span)
    p.add_argument("--saturation-count", type=int, default=d.saturation_threshold_count,
                   help="reject keys with more than this many saturated values")
    p.add_argument("--saturation-level", type=float, default=d.saturation_level)
    p.add_argument("--mad-min", type=float, default=d.mad_min)
    p.add_argument("--mad-max", type=float, default=d.mad_max)
    p.add_argument("--kernel-size", type=int, default=d.kernel_size)
    p.add_argument("--angular-offset-cols", type=int, default=d.angular_offset_cols)


def build_parser():
    common = _Parser(add_help=False)
    common.add_argument("--threads", type=_nonneg_int, default=None, help="worker threads, 0 = auto")
    common.add_argument("--seed", type=_seed, default=0)
    common.add_argument("--config", help="optional file of 'key = value' defaults")

    parser = _Parser(prog="irisindex", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, func, help_):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.set_defaults(func=func)
        return p

    p = add("synth", cmd_synth, "write a synthetic manifest and key portions")
    p.add_argument("--eyes", type=_positive_int, default=100)
    p.add_argument("--dim-true", type=_positive_int, default=4)
    p.add_argument("--samples", type=_positive_int, default=5)
    p.add_argument("--noise", type=float, default=0.02)
    p.add_argument("--embedding", choices=[e.value for e in synth.Embedding], default="linear")
    p.add_argument("--images", type=_nonneg_int, default=0, help="also render this many toy eye images")
    p.add_argument("--out", required=True)

    p = add("normalize", cmd_normalize, "eye images + circles -> normalized irises")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)

    p = add("extract", cmd_extract, "normalized irises -> raw key portions")
    p.add_argument("--manifest", required=True)
    p.add_argument("--angular-offset-cols", type=int, default=0)
    p.add_argument("--out", required=True)

    p = add("preprocess", cmd_preprocess, "raw keys -> preprocessed keys + rejection report")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--report")
    _add_preprocess_flags(p)

    p = add("average", cmd_average, "preprocessed keys -> per-eye averages")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)

    p = add("dim", cmd_dim, "correlation-dimension table")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--ranges", type=parse_ranges, default=None, help="e.g. 10-20,40-60")
    p.add_argument("--fit-points", type=_positive_int, default=16)
    p.add_argument("--out")

    p = add("fit", cmd_fit, "fit the PCA map")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--dim", type=_positive_int, default=4)
    p.add_argument("--out", required=True)

    p = add("enroll", cmd_enroll, "project averages into an enrollment database")
    p.add_argument("--map", required=True)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)

    p = add("query", cmd_query, "rank the database for one key portion")
    p.add_argument("--map", required=True)
    p.add_argument("--db", required=True)
    p.add_argument("--key", required=True)
    p.add_argument("--limit", type=_nonneg_int, default=0)

    p = add("bench", cmd_bench, "penetration rate over a directory of sample keys")
    p.add_argument("--map", required=True)
    p.add_argument("--db", required=True)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--bins", type=_positive_int, default=100)
    p.add_argument("--samples-out")
    p.add_argument("--hist-out")

    p = add("sweep", cmd_sweep, "penetration rate for several mapping dimensions")
    p.add_argument("--averages", required=True)
    p.add_argument("--samples", required=True)
    p.add_argument("--dims", type=parse_dims, default=parse_dims("2..6"))
    p.add_argument("--bins", type=_positive_int, default=100)
    p.add_argument("--out")

    return parser, sub


def parse_args(argv):
    parser, sub = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        try:
            values = read_config_file(args.config)
        except OSError as exc:
            raise UsageError(f"cannot read config: {exc}") from None
        subparser = sub.choices[args.command]
        known = {a.dest: a for a in subparser._actions}
        defaults = {}
        for key, text in values.items():
            action = known.get(key)
            if action is None or key in ("config", "func", "help"):
                raise UsageError(f"{args.config}: unknown key {key!r}")
            try:
                defaults[key] = action.type(text) if action.type else text
            except (argparse.ArgumentTypeError, ValueError) as exc:
                raise UsageError(f"{args.config}: bad value for {key}: {exc}") from None
        subparser.set_defaults(**defaults)
        args = parser.parse_args(argv)
    if args.threads is None:
        env = os.environ.get(THREADS_ENV)
        try:
            args.threads = _nonneg_int(env) if env else 0
        except (ValueError, argparse.ArgumentTypeError):
            raise UsageError(f"{THREADS_ENV} must be a non-negative integer") from None
    return args


def main(argv=None, out=None, err=None):
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        args = parse_args(argv)
        args.func(args, out)
    except UsageError as exc:
        print(f"error: usage: {exc}", file=err)
        return UsageError.exit_code
    except IrisIndexError as exc:
        print(f"error: {exc.category}: {exc}", file=err)
        return exc.exit_code
    except OSError as exc:
        print(f"error: data: {exc}", file=err)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
