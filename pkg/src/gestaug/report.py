"""Dataset summaries, manifest diffs and parameter statistics (text and CSV)."""

from __future__ import annotations

import csv
import io
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from .pipeline import Manifest
from .transforms import CROP_SCALES, PARAM_RANGES, params_violations


@dataclass
class DatasetSummary:
    total: int = 0
    per_class: Dict[int, int] = field(default_factory=dict)
    per_class_original: Dict[int, int] = field(default_factory=dict)
    per_origin: Dict[str, int] = field(default_factory=dict)
    per_split: Dict[str, int] = field(default_factory=dict)
    dimensions: Dict[str, int] = field(default_factory=dict)

    @property
    def originals(self) -> int:
        return self.per_origin.get("original", 0)

    @property
    def augmented(self) -> int:
        return self.per_origin.get("augmented", 0)

    @property
    def augmented_ratio(self) -> Optional[float]:
        """Augmented entries per original, ``None`` when there are no originals."""
        return self.augmented / self.originals if self.originals else None

    def to_text(self) -> str:
        ratio = "n/a" if self.augmented_ratio is None else f"{self.augmented_ratio:g}:1"
        lines = [
            f"entries: {self.total}",
            f"originals: {self.originals}  augmented: {self.augmented}  ratio: {ratio}",
        ]
        if self.per_split:
            lines.append("splits: " + ", ".join(f"{k}={v}" for k, v in sorted(self.per_split.items())))
        if self.dimensions:
            lines.append("dimensions: " + ", ".join(f"{k}={v}" for k, v in sorted(self.dimensions.items())))
        for cls in sorted(self.per_class):
            lines.append(f"class {cls:3d}: {self.per_class_original.get(cls, 0)} original / {self.per_class[cls]} total")
        return "\n".join(lines)


def summarize(manifest: Manifest) -> DatasetSummary:
    per_class = Counter()
    per_class_orig = Counter()
    per_origin = Counter()
    per_split = Counter()
    dims = Counter()
    for e in manifest.entries:
        per_class[e.label.class_index] += 1
        per_origin[e.origin] += 1
        if e.copy_index is None:
            per_class_orig[e.label.class_index] += 1
        per_split[e.split or "unspecified"] += 1
        if e.shape is not None:
            h, w, c = e.shape
            dims[f"{w}x{h}x{c}"] += 1
    return DatasetSummary(
        total=len(manifest.entries),
        per_class=dict(per_class),
        per_class_original=dict(per_class_orig),
        per_origin={"original": per_origin["original"], "augmented": per_origin["augmented"]},
        per_split=dict(per_split) if manifest.entries else {},
        dimensions=dict(dims),
    )


@dataclass(frozen=True)
class Difference:
    kind: str  # "removed" (only in a), "added" (only in b), "digest", "label", "params"
    sample_id: str
    detail: str = ""

    def __str__(self):
        return f"{self.kind}\t{self.sample_id}\t{self.detail}"


def diff_manifests(a: Manifest, b: Manifest) -> List[Difference]:
    ea, eb = a.by_id(), b.by_id()
    out = []
    for sid in sorted(ea.keys() | eb.keys()):
        x, y = ea.get(sid), eb.get(sid)
        if y is None:
            out.append(Difference("removed", sid))
        elif x is None:
            out.append(Difference("added", sid))
        else:
            if x.digest != y.digest:
                out.append(Difference("digest", sid, f"{x.digest[:12]} -> {y.digest[:12]}"))
            if x.label != y.label:
                out.append(Difference("label", sid, f"{x.label.class_index} -> {y.label.class_index}"))
            if x.params != y.params:
                out.append(Difference("params", sid))
    return out


PARAM_NAMES = ("crop_scale",) + tuple(PARAM_RANGES)


@dataclass
class ParamStats:
    count: int
    violations: List[str]
    columns: Dict[str, np.ndarray]

    def _finite(self, name):
        v = self.columns[name]
        return v[np.isfinite(v)]

    def summary_rows(self):
        for name in PARAM_NAMES:
            v = self._finite(name)
            if v.size:
                yield name, v.size, float(v.min()), float(v.max()), float(v.mean())
            else:
                yield name, 0, float("nan"), float("nan"), float("nan")

    def histogram_rows(self, bins: int = 10):
        for name in PARAM_NAMES:
            v = self._finite(name)
            if name == "crop_scale":
                for s in CROP_SCALES:
                    yield name, s, s, int(np.count_nonzero(v == s))
                continue
            lo, hi = PARAM_RANGES[name]
            counts, edges = np.histogram(np.clip(v, lo, hi), bins=bins, range=(lo, hi))
            for i, c in enumerate(counts):
                yield name, float(edges[i]), float(edges[i + 1]), int(c)

    def to_text(self) -> str:
        lines = [f"augmented entries: {self.count}", f"range violations: {len(self.violations)}"]
        for name, n, lo, hi, mean in self.summary_rows():
            lines.append(f"{name:14s} min={lo:.6g} max={hi:.6g} mean={mean:.6g}")
        lines.extend(f"  ! {v}" for v in self.violations)
        return "\n".join(lines)


def _as_float(v) -> float:
    # corrupted manifests may hold strings or nulls; those show up as violations, not crashes
    return float(v) if isinstance(v, (int, float)) else float("nan")


def param_stats(manifest: Manifest) -> ParamStats:
    rows = [e for e in manifest.entries if e.params is not None]
    violations = []
    for e in rows:
        violations.extend(f"{e.sample_id}: {msg}" for msg in params_violations(vars(e.params)))
    columns = {
        name: np.array([_as_float(getattr(e.params, name, None)) for e in rows], dtype=np.float64)
        for name in PARAM_NAMES
    }
    return ParamStats(len(rows), violations, columns)


def to_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()
