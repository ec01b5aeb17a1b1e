"""Dataset expansion: every original plus ``copies`` augmented variants.

Manifest files are JSON Lines. The first line is a header record, each
following line one entry; keys are sorted and entries are kept in canonical
order, so serialization is byte-stable across runs and worker counts::

    {"copies_per_sample": 3, "format": "gestaug-manifest", "global_seed": 7,
     "options": {...}, "record": "header", "toggles": {...}, "version": 1}
    {"copy_index": null, "digest": "<sha256>", "image_path": "images/a__orig.png",
     "label": {"class_index": 2, "num_classes": 14}, "origin": "original",
     "params": null, "parent_id": null, "record": "entry", "sample_id": "a",
     "shape": [227, 227, 3], "split": "train"}

Image paths are relative to the manifest's directory.
"""

from __future__ import annotations

import json
import logging
import math
import os
import random
import shutil
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import List, Optional
from urllib.parse import quote

from .core import (
    GestureSample,
    HardLabel,
    ImageError,
    decode_png,
    encode_png,
    file_digest,
    read_png,
    sha256_hex,
    PNG_COMPRESS_LEVEL,
)
from .sampler import params_for
from .transforms import (
    AugmentationParams,
    TransformOptions,
    Toggles,
    apply_chain,
    params_violations,
)

log = logging.getLogger(__name__)

MANIFEST_FORMAT = "gestaug-manifest"
MANIFEST_VERSION = 1
MANIFEST_NAME = "manifest.jsonl"
IMAGES_DIR = "images"


class PipelineError(RuntimeError):
    def __init__(self, message: str, sample_id: Optional[str] = None):
        super().__init__(message)
        self.sample_id = sample_id


class ManifestError(ValueError):
    pass


@dataclass
class ManifestEntry:
    sample_id: str
    label: HardLabel
    image_path: str
    digest: str
    copy_index: Optional[int] = None
    parent_id: Optional[str] = None
    params: Optional[AugmentationParams] = None
    shape: Optional[tuple] = None
    split: Optional[str] = None

    @property
    def origin(self) -> str:
        return "original" if self.copy_index is None else "augmented"

    @property
    def group_id(self) -> str:
        return self.sample_id if self.parent_id is None else self.parent_id

    def sort_key(self):
        return (self.group_id, self.copy_index or 0)

    def to_record(self) -> dict:
        return {
            "record": "entry",
            "sample_id": self.sample_id,
            "origin": self.origin,
            "copy_index": self.copy_index,
            "parent_id": self.parent_id,
            "label": self.label.to_dict(),
            "image_path": self.image_path,
            "params": None if self.params is None else self.params.to_dict(),
            "digest": self.digest,
            "shape": None if self.shape is None else list(self.shape),
            "split": self.split,
        }

    @classmethod
    def from_record(cls, rec: dict) -> "ManifestEntry":
        params = rec.get("params")
        shape = rec.get("shape")
        return cls(
            sample_id=rec["sample_id"],
            label=HardLabel.from_dict(rec["label"]),
            image_path=rec["image_path"],
            digest=rec["digest"],
            copy_index=rec.get("copy_index"),
            parent_id=rec.get("parent_id"),
            # range checks are verify_manifest's job, so keep raw values readable
            params=None if params is None else _params_unchecked(params),
            shape=None if shape is None else tuple(shape),
            split=rec.get("split"),
        )


def _params_unchecked(d: dict) -> AugmentationParams:
    try:
        return AugmentationParams.from_dict(d)
    except ValueError:
        obj = object.__new__(AugmentationParams)
        for k, v in d.items():
            object.__setattr__(obj, k, v)
        return obj


@dataclass
class Manifest:
    global_seed: int = 0
    copies_per_sample: int = 3
    entries: List[ManifestEntry] = field(default_factory=list)
    options: TransformOptions = field(default_factory=TransformOptions)
    toggles: Toggles = field(default_factory=Toggles)
    meta: dict = field(default_factory=dict)
    version: int = MANIFEST_VERSION
    root: Optional[Path] = None  # directory image paths are relative to

    def sort(self) -> "Manifest":
        self.entries.sort(key=ManifestEntry.sort_key)
        return self

    @property
    def originals(self) -> List[ManifestEntry]:
        return [e for e in self.entries if e.copy_index is None]

    @property
    def augmented(self) -> List[ManifestEntry]:
        return [e for e in self.entries if e.copy_index is not None]

    def by_id(self) -> dict:
        return {e.sample_id: e for e in self.entries}

    def resolve(self, entry: ManifestEntry) -> Path:
        return (self.root or Path(".")) / entry.image_path

    def header(self) -> dict:
        return {
            "record": "header",
            "format": MANIFEST_FORMAT,
            "version": self.version,
            "global_seed": self.global_seed,
            "copies_per_sample": self.copies_per_sample,
            "options": asdict(self.options),
            "toggles": asdict(self.toggles),
            "meta": self.meta,
        }

    def dumps(self) -> str:
        lines = [_dump(self.header())]
        lines.extend(_dump(e.to_record()) for e in sorted(self.entries, key=ManifestEntry.sort_key))
        return "\n".join(lines) + "\n"

    def save(self, path) -> Path:
        path = Path(path)
        path.write_text(self.dumps(), encoding="utf-8")
        return path


def _dump(rec: dict) -> str:
    return json.dumps(rec, sort_keys=True, separators=(", ", ": "), ensure_ascii=False)


def load_manifest(path) -> Manifest:
    path = Path(path)
    if path.is_dir():
        path = path / MANIFEST_NAME
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise ManifestError(f"cannot read manifest {path}: {exc}") from exc
    records = []
    for lineno, line in enumerate(lines, 1):
        if not line.strip():
            continue
        try:
            records.append(json.loads(line))
        except json.JSONDecodeError as exc:
            raise ManifestError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from exc
    if not records or records[0].get("record") != "header":
        raise ManifestError(f"{path}: first record must be a header")
    head = records[0]
    if head.get("format") != MANIFEST_FORMAT:
        raise ManifestError(f"{path}: not a gestaug manifest (format={head.get('format')!r})")
    if head.get("version") != MANIFEST_VERSION:
        raise ManifestError(f"{path}: unsupported manifest version {head.get('version')!r}")
    entries = []
    for lineno, rec in enumerate(records[1:], 2):
        try:
            entries.append(ManifestEntry.from_record(rec))
        except (KeyError, TypeError, ValueError) as exc:
            raise ManifestError(f"{path}: malformed entry #{lineno - 1}: {exc}") from exc
    return Manifest(
        global_seed=int(head["global_seed"]),
        copies_per_sample=int(head["copies_per_sample"]),
        entries=entries,
        options=TransformOptions(**head.get("options", {})),
        toggles=Toggles(**head.get("toggles", {})),
        meta=head.get("meta", {}),
        root=path.parent,
    )


def file_stem(sample_id: str) -> str:
    """Filesystem-safe, collision-free name for a sample id."""
    return quote(sample_id, safe="")


def augmented_id(parent_id: str, copy_index: int) -> str:
    return f"{parent_id}#aug{copy_index}"


@dataclass(frozen=True)
class AugmentConfig:
    seed: int = 0
    copies: int = 3
    workers: int = 1
    options: TransformOptions = field(default_factory=TransformOptions)
    toggles: Toggles = field(default_factory=Toggles)
    compress_level: int = PNG_COMPRESS_LEVEL

    def __post_init__(self):
        if self.copies < 0:
            raise ValueError(f"copies must be >= 0, got {self.copies}")
        if self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")


def augment_sample(
    sample: GestureSample,
    global_seed: int,
    copies: int = 3,
    options: TransformOptions = TransformOptions(),
    toggles: Toggles = Toggles(),
) -> List[GestureSample]:
    """Return ``[original, aug1, ..., aug<copies>]``."""
    if copies < 0:
        raise ValueError(f"copies must be >= 0, got {copies}")
    out = [sample]
    for k in range(1, copies + 1):
        p = params_for(global_seed, sample.sample_id, k)
        out.append(
            GestureSample(
                image=apply_chain(sample.image, p, options, toggles),
                label=sample.label,
                sample_id=sample.sample_id,
                copy_index=k,
                meta={"params": p},
            )
        )
    return out


def _process_one(entry: ManifestEntry, src: Path, images_dir: Path, cfg: AugmentConfig) -> List[ManifestEntry]:
    try:
        data = src.read_bytes()
        img = decode_png(data)
    except (OSError, ImageError) as exc:
        raise PipelineError(f"cannot read image for sample {entry.sample_id!r}: {exc}", entry.sample_id) from exc
    digest = sha256_hex(data)
    if entry.digest and entry.digest != digest:
        raise PipelineError(f"input digest mismatch for sample {entry.sample_id!r}", entry.sample_id)

    stem = file_stem(entry.sample_id)
    orig_rel = f"{IMAGES_DIR}/{stem}__orig.png"
    (images_dir / f"{stem}__orig.png").write_bytes(data)
    results = [replace(entry, image_path=orig_rel, digest=digest, copy_index=None,
                       parent_id=None, params=None, shape=img.shape)]

    sample = GestureSample(img, entry.label, entry.sample_id)
    for aug in augment_sample(sample, cfg.seed, cfg.copies, cfg.options, cfg.toggles)[1:]:
        k = aug.copy_index
        png = encode_png(aug.image, cfg.compress_level)
        (images_dir / f"{stem}__aug{k}.png").write_bytes(png)
        results.append(ManifestEntry(
            sample_id=augmented_id(entry.sample_id, k),
            label=entry.label,
            image_path=f"{IMAGES_DIR}/{stem}__aug{k}.png",
            digest=sha256_hex(png),
            copy_index=k,
            parent_id=entry.sample_id,
            params=aug.meta["params"],
            shape=aug.image.shape,
            split=entry.split,
        ))
    return results


def _process_chunk(items, images_dir: Path, cfg: AugmentConfig) -> List[ManifestEntry]:
    out = []
    for entry, src in items:
        out.extend(_process_one(entry, src, images_dir, cfg))
    return out


def _chunks(seq, n):
    for i in range(0, len(seq), n):
        yield seq[i:i + n]


def augment_dataset(input_manifest, out_dir, config: AugmentConfig = AugmentConfig(), force: bool = False) -> Manifest:
    """Expand every original in ``input_manifest`` and write a self-contained dataset.

    Output is assembled in a sibling ``.partial`` directory and renamed into
    place only on success; on failure the partial directory is removed.
    """
    src_manifest = input_manifest if isinstance(input_manifest, Manifest) else load_manifest(input_manifest)
    originals = sorted(src_manifest.originals, key=ManifestEntry.sort_key)
    ids = [e.sample_id for e in originals]
    if len(set(ids)) != len(ids):
        raise PipelineError("duplicate sample ids in input manifest")

    out_dir = Path(out_dir)
    if out_dir.exists() and any(out_dir.iterdir()):
        if not force:
            raise PipelineError(f"output directory {out_dir} is not empty")
        shutil.rmtree(out_dir)
    partial = out_dir.with_name(out_dir.name + ".partial")
    if partial.exists():
        shutil.rmtree(partial)
    images_dir = partial / IMAGES_DIR
    images_dir.mkdir(parents=True)

    items = [(e, src_manifest.resolve(e)) for e in originals]
    try:
        if config.workers == 1 or len(items) <= 1:
            entries = _process_chunk(items, images_dir, config)
        else:
            size = max(1, math.ceil(len(items) / (config.workers * 4)))
            entries = []
            with ProcessPoolExecutor(max_workers=config.workers) as pool:
                futures = [pool.submit(_process_chunk, chunk, images_dir, config)
                           for chunk in _chunks(items, size)]
                for fut in futures:
                    entries.extend(fut.result())
        manifest = Manifest(
            global_seed=config.seed,
            copies_per_sample=config.copies,
            entries=entries,
            options=config.options,
            toggles=config.toggles,
            meta=dict(src_manifest.meta),
            root=out_dir,
        ).sort()
        manifest.save(partial / MANIFEST_NAME)
    except BaseException:
        shutil.rmtree(partial, ignore_errors=True)
        raise
    if out_dir.exists():
        out_dir.rmdir()
    os.replace(partial, out_dir)
    log.info("wrote %d entries (%d originals) to %s", len(manifest.entries), len(originals), out_dir)
    return manifest


# -- verification ------------------------------------------------------------

@dataclass(frozen=True)
class Violation:
    sample_id: Optional[str]
    kind: str
    detail: str

    def __str__(self):
        who = self.sample_id if self.sample_id is not None else "<manifest>"
        return f"{who}: {self.kind}: {self.detail}"


@dataclass
class VerifyReport:
    violations: List[Violation] = field(default_factory=list)
    checked_entries: int = 0
    rederived: int = 0

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, sample_id, kind, detail):
        self.violations.append(Violation(sample_id, kind, detail))


def verify_manifest(manifest, rederive: str = "one", rng_seed: Optional[int] = None) -> VerifyReport:
    """Check counts, parent links, digests, parameter ranges and (optionally) replay.

    ``rederive`` is ``"none"``, ``"one"`` (a randomly chosen augmented entry)
    or ``"all"``. Problems are collected, never raised.
    """
    if not isinstance(manifest, Manifest):
        manifest = load_manifest(manifest)
    report = VerifyReport(checked_entries=len(manifest.entries))
    by_id = {}
    for e in manifest.entries:
        if e.sample_id in by_id:
            report.add(e.sample_id, "duplicate", "sample_id appears more than once")
        by_id[e.sample_id] = e

    originals = manifest.originals
    expected = (1 + manifest.copies_per_sample) * len(originals)
    if len(manifest.entries) != expected:
        report.add(None, "count", f"{len(manifest.entries)} entries, expected {expected} "
                                  f"for {len(originals)} originals x {1 + manifest.copies_per_sample}")

    children = {}
    for e in manifest.entries:
        if e.copy_index is None:
            if e.params is not None:
                report.add(e.sample_id, "params", "original entry carries params")
            if e.parent_id is not None:
                report.add(e.sample_id, "parent", "original entry has a parent_id")
        else:
            parent = by_id.get(e.parent_id)
            if parent is None or parent.copy_index is not None:
                report.add(e.sample_id, "parent", f"parent {e.parent_id!r} is not an original in this manifest")
            else:
                children.setdefault(e.parent_id, []).append(e.copy_index)
                if parent.label != e.label:
                    report.add(e.sample_id, "label", "label differs from parent label")
            if not 1 <= e.copy_index <= manifest.copies_per_sample:
                report.add(e.sample_id, "copy_index", f"copy_index {e.copy_index} outside 1..{manifest.copies_per_sample}")
            if e.params is None:
                report.add(e.sample_id, "params", "augmented entry lacks params")
            else:
                problems = params_violations(vars(e.params))
                for msg in problems:
                    report.add(e.sample_id, "params-range", msg)
                if not problems and e.parent_id is not None and \
                        e.params != params_for(manifest.global_seed, e.parent_id, e.copy_index):
                    report.add(e.sample_id, "params-seed", "params do not match the seed-derived draw")
    for o in originals:
        got = sorted(children.get(o.sample_id, []))
        if got != list(range(1, manifest.copies_per_sample + 1)):
            report.add(o.sample_id, "children", f"augmented copies {got}, expected 1..{manifest.copies_per_sample}")

    for e in manifest.entries:
        path = manifest.resolve(e)
        if not path.is_file():
            report.add(e.sample_id, "missing", f"image file {e.image_path} not found")
            continue
        got = file_digest(path)
        if got != e.digest:
            report.add(e.sample_id, "digest", f"file digest {got[:16]}... != recorded {e.digest[:16]}...")

    candidates = [e for e in manifest.augmented if e.params is not None and e.parent_id in by_id]
    if rederive == "all":
        targets = candidates
    elif rederive == "one" and candidates:
        targets = [random.Random(rng_seed).choice(candidates)]
    else:
        targets = []
    for e in targets:
        _check_replay(manifest, e, by_id[e.parent_id], report)
        report.rederived += 1
    return report


def _check_replay(manifest: Manifest, entry: ManifestEntry, parent: ManifestEntry, report: VerifyReport):
    try:
        parent_img = read_png(manifest.resolve(parent))
        stored = manifest.resolve(entry).read_bytes()
    except (OSError, ImageError) as exc:
        report.add(entry.sample_id, "replay", f"cannot load images: {exc}")
        return
    p = params_for(manifest.global_seed, entry.parent_id, entry.copy_index)
    img = apply_chain(parent_img, p, manifest.options, manifest.toggles)
    if sha256_hex(encode_png(img)) == sha256_hex(stored):
        return
    # encoder settings may differ between producer and verifier; pixels are what count
    try:
        same = decode_png(stored) == img
    except ImageError:
        same = False
    if not same:
        report.add(entry.sample_id, "replay", "re-derived image differs from stored image")
