"""Command-line interface.

Exit codes: 0 success, 1 verification/statistics violations, 2 usage or
configuration error, 3 input parse error, 4 runtime failure.
"""

from __future__ import annotations

import argparse
import logging
import shutil
import sys
import tempfile
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__, _backend
from .baselines import MixError, mix_dataset
from .config import ConfigError, RunConfig, load_config
from .core import HardLabel, ImageError, write_png
from .datasets import (
    INDEX_NAME,
    PROFILES,
    ParseError,
    export_normalized,
    import_normalized,
    parse_skeleton_text,
    parse_split_index,
    read_index_file,
    write_index_file,
)
from .pipeline import (
    IMAGES_DIR,
    MANIFEST_NAME,
    AugmentConfig,
    Manifest,
    ManifestEntry,
    ManifestError,
    PipelineError,
    augment_dataset,
    file_stem,
    load_manifest,
    verify_manifest,
)
from .render import RenderError, Viewpoint, render_sequence
from .report import diff_manifests, param_stats, summarize, to_csv
from .synthetic import synthetic_dataset

log = logging.getLogger("gestaug")

EXIT_OK = 0
EXIT_VIOLATIONS = 1
EXIT_CONFIG = 2
EXIT_PARSE = 3
EXIT_RUNTIME = 4


class _Fail(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


# -- ingest ----------------------------------------------------------------------

def cmd_ingest(args, cfg: RunConfig) -> int:
    src = Path(args.dataset_dir)
    out = Path(args.out)
    if not src.is_dir():
        raise _Fail(EXIT_PARSE, f"dataset directory {src} does not exist")
    (out / "sequences").mkdir(parents=True, exist_ok=True)
    rows, failures = [], []

    def store(sample_id, seq, labels, split, extra):
        rel = f"sequences/{file_stem(sample_id)}.json"
        export_normalized(out / rel, seq, sample_id, labels, extra)
        rows.append({
            "sample_id": sample_id,
            "path": rel,
            "split": split,
            "frames": seq.num_frames,
            "labels": {str(k): v.to_dict() for k, v in sorted(labels.items())},
            **extra,
        })

    if args.profile == "normalized":
        for path in sorted(src.rglob("*.json")):
            try:
                rec = import_normalized(path, args.joint_count)
            except (ParseError, ValueError) as exc:
                failures.append(str(exc))
                continue
            sid = rec.sample_id or path.relative_to(src).with_suffix("").as_posix()
            store(sid, rec.sequence, rec.labels, rec.meta.get("split"), {})
    else:
        profile = PROFILES[args.profile]
        if args.joint_count is not None:
            profile = replace(profile, joint_count=args.joint_count)
        for split, fname in profile.index_files.items():
            index_path = src / fname
            if not index_path.is_file():
                continue
            try:
                index = parse_split_index(index_path, profile.schemes, profile, split)
            except ParseError as exc:
                failures.append(str(exc))
                continue
            for entry in index:
                try:
                    seq = parse_skeleton_text(src / entry.sequence_path, profile.joint_count)
                except (OSError, ParseError) as exc:
                    failures.append(f"{entry.sample_id}: {exc}")
                    continue
                store(entry.sample_id, seq, entry.labels, split,
                      {"subject": entry.subject, "trial": entry.trial})

    write_index_file(out / INDEX_NAME, rows, args.profile)
    print(f"ingested {len(rows)} sequences into {out}")
    if not rows and not failures:
        log.warning("no sequences found under %s", src)
    for msg in failures:
        print(f"error: {msg}", file=sys.stderr)
    return EXIT_PARSE if failures else EXIT_OK


# -- render ----------------------------------------------------------------------

def cmd_render(args, cfg: RunConfig) -> int:
    index_path = Path(args.index)
    try:
        head, rows = read_index_file(index_path)
    except (OSError, ValueError) as exc:
        raise _Fail(EXIT_PARSE, str(exc))
    base = index_path if index_path.is_dir() else index_path.parent
    out = Path(args.out)
    (out / IMAGES_DIR).mkdir(parents=True, exist_ok=True)
    entries, failures = [], []
    for row in rows:
        sid = row["sample_id"]
        label = row.get("labels", {}).get(str(cfg.scheme))
        if label is None:
            failures.append(f"{sid}: no label for the {cfg.scheme}-class scheme")
            continue
        try:
            rec = import_normalized(base / row["path"])
            img = render_sequence(rec.sequence, cfg.view, cfg.render)
        except (OSError, ParseError, RenderError) as exc:
            failures.append(f"{sid}: {exc}")
            continue
        rel = f"{IMAGES_DIR}/{file_stem(sid)}.png"
        digest = write_png(img, out / rel, cfg.png_compress_level)
        entries.append(ManifestEntry(sid, HardLabel.from_dict(label), rel, digest,
                                     shape=img.shape, split=row.get("split")))
    manifest = Manifest(
        global_seed=cfg.seed,
        copies_per_sample=0,
        entries=entries,
        meta={"view": str(cfg.view), "scheme": cfg.scheme,
              "canvas": [cfg.render.width, cfg.render.height]},
        root=out,
    ).sort()
    manifest.save(out / MANIFEST_NAME)
    print(f"rendered {len(entries)} images ({cfg.view}) into {out}")
    for msg in failures:
        print(f"error: {msg}", file=sys.stderr)
    return EXIT_RUNTIME if failures else EXIT_OK


# -- augment ---------------------------------------------------------------------

def _augment_config(cfg: RunConfig) -> AugmentConfig:
    return AugmentConfig(seed=cfg.seed, copies=cfg.copies, workers=cfg.workers,
                         options=cfg.options, toggles=cfg.toggles,
                         compress_level=cfg.png_compress_level)


def cmd_augment(args, cfg: RunConfig) -> int:
    manifest = _load(args.manifest)
    t0 = time.perf_counter()
    result = augment_dataset(manifest, args.out, _augment_config(cfg), force=args.force)
    dt = time.perf_counter() - t0
    n = len(manifest.originals)
    print(f"{n} originals -> {len(result.entries)} entries in {dt:.2f}s "
          f"(seed={cfg.seed}, copies={cfg.copies}, workers={cfg.workers}) -> {args.out}")
    return EXIT_OK


# -- baseline --------------------------------------------------------------------

def cmd_baseline(args, cfg: RunConfig) -> int:
    manifest = _load(args.manifest)
    lam = args.lam if args.lam == "uniform" else float(args.lam)
    records = mix_dataset(manifest, args.out, args.method, cfg.seed, lam)
    print(f"wrote {len(records)} {args.method} samples to {args.out}")
    return EXIT_OK


# -- stats -----------------------------------------------------------------------

def cmd_stats(args, cfg: RunConfig) -> int:
    manifest = _load(args.manifest)
    stats = param_stats(manifest)
    print(summarize(manifest).to_text())
    print(stats.to_text())
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "params_summary.csv").write_text(
            to_csv(("param", "count", "min", "max", "mean"), stats.summary_rows()), encoding="utf-8")
        (out / "params_hist.csv").write_text(
            to_csv(("param", "bin_lo", "bin_hi", "count"), stats.histogram_rows(args.bins)), encoding="utf-8")
    return EXIT_VIOLATIONS if stats.violations else EXIT_OK


# -- verify / diff ---------------------------------------------------------------

def cmd_verify(args, cfg: RunConfig) -> int:
    manifest = _load(args.manifest)
    report = verify_manifest(manifest, rederive=args.rederive, rng_seed=args.pick_seed)
    for v in report.violations:
        print(v)
    status = "ok" if report.ok else f"{len(report.violations)} violation(s)"
    print(f"checked {report.checked_entries} entries, replayed {report.rederived}: {status}")
    return EXIT_OK if report.ok else EXIT_VIOLATIONS


def cmd_diff(args, cfg: RunConfig) -> int:
    diffs = diff_manifests(_load(args.a), _load(args.b))
    for d in diffs:
        print(d)
    print(f"{len(diffs)} difference(s)")
    return EXIT_VIOLATIONS if diffs else EXIT_OK


# -- bench -----------------------------------------------------------------------

def bench_kernels(size: int = 227, repeats: int = 20) -> dict:
    """Seconds per warp call for each available kernel on a ``size`` x ``size`` RGB image."""
    img = np.random.default_rng(0).integers(0, 256, (size, size, 3), dtype=np.uint8)
    c, s = np.cos(0.2), np.sin(0.2)
    cx = (size - 1) / 2
    args = (size, size, c, -s, cx - c * cx + s * cx, s, c, cx - s * cx - c * cx, 0, 0)
    timings, outputs = {}, {}
    for name, kernel in _backend.available_backends().items():
        outputs[name] = kernel(img, *args)
        t0 = time.perf_counter()
        for _ in range(repeats):
            kernel(img, *args)
        timings[name] = (time.perf_counter() - t0) / repeats
    ref = outputs["python"]
    timings["identical"] = all(np.array_equal(ref, o) for o in outputs.values())
    return timings


def run_bench(manifest: Manifest, worker_counts, cfg: RunConfig, workdir: Path) -> list:
    rows = []
    digests = None
    n = len(manifest.originals)
    for w in worker_counts:
        out = workdir / f"w{w}"
        t0 = time.perf_counter()
        result = augment_dataset(manifest, out, replace(_augment_config(cfg), workers=w), force=True)
        dt = time.perf_counter() - t0
        d = [(e.sample_id, e.digest) for e in result.entries]
        same = digests is None or d == digests
        digests = digests or d
        rows.append({"workers": w, "inputs": n, "outputs": len(result.entries), "seconds": dt,
                     "inputs_per_s": n / dt if dt > 0 else float("inf"),
                     "outputs_per_s": len(result.entries) / dt if dt > 0 else float("inf"),
                     "identical": same})
        shutil.rmtree(out, ignore_errors=True)
    return rows


def cmd_bench(args, cfg: RunConfig) -> int:
    if args.kernels:
        t = bench_kernels(args.size)
        print(f"warp {args.size}x{args.size}x3 (active backend: {_backend.BACKEND})")
        for name in ("python", "cython"):
            if name in t:
                print(f"  {name:7s} {t[name] * 1e3:8.3f} ms/call")
        if "cython" in t:
            print(f"  speedup {t['python'] / t['cython']:.1f}x, outputs identical: {t['identical']}")
        if not args.manifest and not args.synthetic:
            return EXIT_OK
    workers = [int(w) for w in args.worker_list.split(",")]
    with tempfile.TemporaryDirectory(prefix="gestaug-bench-") as tmp:
        tmp = Path(tmp)
        if args.synthetic:
            manifest = synthetic_dataset(tmp / "input", args.synthetic, args.size, cfg.seed)
        elif args.manifest:
            manifest = _load(args.manifest)
        else:
            raise _Fail(EXIT_CONFIG, "bench needs a manifest, --synthetic N, or --kernels")
        if not manifest.originals:
            print("0 inputs: nothing to do")
            return EXIT_OK
        rows = run_bench(manifest, workers, cfg, tmp)
    print("workers,inputs,outputs,seconds,inputs_per_s,outputs_per_s,identical")
    for r in rows:
        print(f"{r['workers']},{r['inputs']},{r['outputs']},{r['seconds']:.3f},"
              f"{r['inputs_per_s']:.1f},{r['outputs_per_s']:.1f},{r['identical']}")
    base = rows[0]["seconds"]
    for r in rows[1:]:
        print(f"speedup workers={r['workers']} vs {rows[0]['workers']}: {base / r['seconds']:.2f}x")
    return EXIT_OK if all(r["identical"] for r in rows) else EXIT_RUNTIME


def _load(path) -> Manifest:
    try:
        return load_manifest(path)
    except ManifestError as exc:
        raise _Fail(EXIT_PARSE, str(exc))


# -- argument parsing --------------------------------------------------------------

def _add_common(p, *, seed=False, copies=False, workers=False, toggles=False, render=False):
    p.add_argument("--config", help="YAML config file (default: $GESTAUG_CONFIG)")
    if seed:
        p.add_argument("--seed", type=int, help="global 64-bit seed")
    if copies:
        p.add_argument("--copies", type=int, help="augmented copies per sample (default 3)")
    if workers:
        p.add_argument("--workers", type=int, help="worker processes")
    if toggles:
        p.add_argument("--no-crop", action="store_true")
        p.add_argument("--no-rotate", action="store_true")
        p.add_argument("--no-zoom", action="store_true")
        p.add_argument("--no-brightness-contrast", action="store_true")
        p.add_argument("--fill", type=int, help="fill value for rotate/zoom borders")
        p.add_argument("--contrast-pivot", choices=("fixed", "mean"))
        p.add_argument("--no-crop-resize", action="store_true",
                       help="keep the crop window size instead of resizing to W x H")
    if render:
        p.add_argument("--view", help="top_down | front_away | side_left | custom:AZ,EL")
        p.add_argument("--scheme", type=int, choices=(14, 21, 28), help="label scheme to attach")
        p.add_argument("--width", type=int)
        p.add_argument("--height", type=int)
        p.add_argument("--radius", type=int, dest="joint_radius")
        p.add_argument("--margin", type=float)
        p.add_argument("--no-bones", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gestaug", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse a skeleton dataset into normalized files")
    p.add_argument("dataset_dir")
    p.add_argument("--profile", choices=sorted(PROFILES) + ["normalized"], default="shrec17")
    p.add_argument("--joint-count", type=int)
    p.add_argument("--out", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("render", help="render ingested sequences to spatiotemporal images")
    p.add_argument("index", help="index.jsonl written by ingest (or its directory)")
    p.add_argument("--out", required=True)
    _add_common(p, render=True)
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("augment", help="expand a rendered dataset with augmented copies")
    p.add_argument("manifest")
    p.add_argument("--out", required=True)
    p.add_argument("--force", action="store_true", help="replace a non-empty output directory")
    _add_common(p, seed=True, copies=True, workers=True, toggles=True)
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("baseline", help="write a MixUp or CutMix dataset with soft labels")
    p.add_argument("manifest")
    p.add_argument("--method", choices=("mixup", "cutmix"), default="mixup")
    p.add_argument("--lam", default="uniform", help="'uniform' or a fixed MixUp weight in [0, 1]")
    p.add_argument("--out", required=True)
    _add_common(p, seed=True)
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("stats", help="parameter distributions and range checks")
    p.add_argument("manifest")
    p.add_argument("--out", help="directory for CSV reports")
    p.add_argument("--bins", type=int, default=10)
    _add_common(p)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("verify", help="check a manifest against the files on disk")
    p.add_argument("manifest")
    p.add_argument("--rederive", choices=("none", "one", "all"), default="one")
    p.add_argument("--pick-seed", type=int, default=None, help="seed for choosing the replayed entry")
    _add_common(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("diff", help="compare two manifests entry by entry")
    p.add_argument("a")
    p.add_argument("b")
    _add_common(p)
    p.set_defaults(func=cmd_diff)

    p = sub.add_parser("bench", help="augmentation throughput per worker count")
    p.add_argument("manifest", nargs="?")
    p.add_argument("--workers", dest="worker_list", default="1,4", help="comma-separated worker counts")
    p.add_argument("--synthetic", type=int, default=0, help="benchmark N synthetic images instead")
    p.add_argument("--size", type=int, default=227)
    p.add_argument("--kernels", action="store_true", help="compare compiled and NumPy warp kernels")
    _add_common(p, seed=True, copies=True, toggles=True)
    p.set_defaults(func=cmd_bench)
    return parser


def resolve_config(args) -> RunConfig:
    cfg = load_config(getattr(args, "config", None))
    a = vars(args)
    over = {k: a[k] for k in ("seed", "copies", "workers") if a.get(k) is not None}
    cfg = replace(cfg, **over)
    options = cfg.options
    if a.get("fill") is not None:
        options = replace(options, fill=a["fill"])
    if a.get("contrast_pivot"):
        options = replace(options, contrast_pivot=a["contrast_pivot"])
    if a.get("no_crop_resize"):
        options = replace(options, crop_resize=False)
    toggles = cfg.toggles
    for flag, name in (("no_crop", "crop"), ("no_rotate", "rotate"), ("no_zoom", "zoom"),
                       ("no_brightness_contrast", "brightness_contrast")):
        if a.get(flag):
            toggles = replace(toggles, **{name: False})
    render = cfg.render
    r_over = {k: a[k] for k in ("width", "height", "joint_radius", "margin") if a.get(k) is not None}
    if a.get("no_bones"):
        r_over["draw_bones"] = False
    if r_over:
        render = replace(render, **r_over)
    view = Viewpoint.parse(a["view"]) if a.get("view") else cfg.view
    scheme = a["scheme"] if a.get("scheme") else cfg.scheme
    return replace(cfg, options=options, toggles=toggles, render=render, view=view, scheme=scheme)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args, cfg)
    except _Fail as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (ParseError, ManifestError) as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (PipelineError, ImageError, MixError, RenderError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
