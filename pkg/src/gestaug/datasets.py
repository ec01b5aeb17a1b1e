"""Skeleton dataset parsing and the normalized interchange format.

Native readers cover the SHREC'17 / DHG-14/28 layout: one whitespace
separated text file per sequence, one frame per line, ``joint_count * 3``
world coordinates per frame, plus split-index files with one row per
sequence. Anything else (JHMDB's ``.mat`` joint files, for instance) is
converted once into the normalized JSON format and read from there.

Normalized file schema (``schema_version`` 1)::

    {"format": "gestaug-skeleton", "schema_version": 1,
     "sample_id": "shrec17/g01/f1/s01/e1", "joint_count": 22,
     "frame_rate": null, "labels": {"14": {"class_index": 0, "num_classes": 14}},
     "meta": {...}, "frames": [[[x, y, z], ...], ...]}
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional, Sequence, Tuple, Union

import numpy as np

from .core import HardLabel

log = logging.getLogger(__name__)

NORMALIZED_FORMAT = "gestaug-skeleton"
NORMALIZED_VERSION = 1


class ParseError(ValueError):
    """Malformed dataset file; ``line`` is 1-based when known."""

    def __init__(self, message: str, path=None, line: Optional[int] = None):
        where = ""
        if path is not None:
            where = f"{path}:"
            if line is not None:
                where += f"{line}:"
            where += " "
        elif line is not None:
            where = f"line {line}: "
        super().__init__(where + message)
        self.path = path
        self.line = line


@dataclass(frozen=True)
class SkeletonSequence:
    """Frames of 3D joints, stored as a float64 array of shape (T, J, 3)."""

    frames: np.ndarray
    frame_rate: Optional[float] = None

    def __post_init__(self):
        arr = np.array(self.frames, dtype=np.float64)
        if arr.ndim != 3 or arr.shape[2] != 3:
            raise ValueError(f"frames must have shape (T, J, 3), got {arr.shape}")
        arr.flags.writeable = False
        object.__setattr__(self, "frames", arr)

    @property
    def num_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def joint_count(self) -> int:
        return self.frames.shape[1]

    def __eq__(self, other):
        if not isinstance(other, SkeletonSequence):
            return NotImplemented
        return self.frame_rate == other.frame_rate and np.array_equal(self.frames, other.frames)

    __hash__ = None


@dataclass(frozen=True)
class DatasetProfile:
    """How to read one dataset's on-disk layout.

    ``columns`` maps field names (gesture, finger, subject, trial, and
    ``label<scheme>`` for label columns) to 0-based column indices of the
    split-index rows. Raw labels are shifted by ``label_offset``. With
    ``derived_labels`` the 14/28 labels are computed from gesture and finger
    instead (DHG's info file has no label columns).
    """

    name: str
    joint_count: int
    columns: Dict[str, int]
    index_files: Dict[str, str]
    sequence_template: str
    id_template: str
    schemes: Tuple[int, ...] = (14, 28)
    label_offset: int = 1
    derived_labels: bool = False


SHREC17 = DatasetProfile(
    name="shrec17",
    joint_count=22,
    columns={"gesture": 0, "finger": 1, "subject": 2, "trial": 3, "label14": 4, "label28": 5},
    index_files={"train": "train_gestures.txt", "test": "test_gestures.txt"},
    sequence_template="gesture_{gesture}/finger_{finger}/subject_{subject}/essai_{trial}/skeletons_world.txt",
    id_template="shrec17/g{gesture:02d}/f{finger}/s{subject:02d}/e{trial}",
)

DHG = DatasetProfile(
    name="dhg",
    joint_count=22,
    columns={"gesture": 0, "finger": 1, "subject": 2, "trial": 3},
    index_files={"all": "informations_troncage_sequences.txt"},
    sequence_template="gesture_{gesture}/finger_{finger}/subject_{subject}/essai_{trial}/skeleton_world.txt",
    id_template="dhg/g{gesture:02d}/f{finger}/s{subject:02d}/e{trial}",
    derived_labels=True,
)

PROFILES = {p.name: p for p in (SHREC17, DHG)}


@dataclass
class IndexEntry:
    sample_id: str
    sequence_path: str
    labels: Dict[int, HardLabel]
    subject: int
    trial: int
    split: Optional[str] = None
    fields: Dict[str, int] = field(default_factory=dict)


DatasetIndex = list


def _parse_floats(tokens, path, lineno):
    try:
        return [float(t) for t in tokens]
    except ValueError:
        bad = next(t for t in tokens if not _is_float(t))
        raise ParseError(f"non-numeric token {bad!r}", path, lineno) from None


def _is_float(tok):
    try:
        float(tok)
    except ValueError:
        return False
    return True


def parse_skeleton_text(path, joint_count: int = 22, frame_rate: Optional[float] = None) -> SkeletonSequence:
    """Read one sequence file: a frame per nonempty line, ``joint_count * 3`` numbers each."""
    path = Path(path)
    expected = joint_count * 3
    frames = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            tokens = line.split()
            if not tokens:
                continue
            if len(tokens) != expected:
                raise ParseError(f"expected {expected} values ({joint_count} joints x 3), got {len(tokens)}",
                                 path, lineno)
            frames.append(_parse_floats(tokens, path, lineno))
    arr = np.array(frames, dtype=np.float64).reshape(len(frames), joint_count, 3)
    return SkeletonSequence(arr, frame_rate)


def write_skeleton_text(seq: SkeletonSequence, path) -> None:
    lines = (" ".join(repr(float(v)) for v in frame.ravel()) for frame in seq.frames)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _labels_for_row(fields, profile: DatasetProfile, schemes, path, lineno):
    labels = {}
    for scheme in schemes:
        if profile.derived_labels:
            g = fields["gesture"] - profile.label_offset
            raw = g if scheme == 14 else 2 * g + (fields["finger"] - profile.label_offset)
        else:
            key = f"label{scheme}"
            if key not in fields:
                raise ParseError(f"profile {profile.name!r} has no label column for scheme {scheme}", path, lineno)
            raw = fields[key] - profile.label_offset
        if not 0 <= raw < scheme:
            raise ParseError(f"label {raw + profile.label_offset} maps to class {raw}, "
                             f"outside 0..{scheme - 1} for the {scheme}g scheme", path, lineno)
        labels[scheme] = HardLabel(raw, scheme)
    return labels


def parse_split_index(path, scheme: Union[int, Sequence[int]] = (14, 28),
                      profile: DatasetProfile = SHREC17, split: Optional[str] = None) -> DatasetIndex:
    """Read a split-index file; every row's labels are validated for each scheme."""
    path = Path(path)
    schemes = (scheme,) if isinstance(scheme, int) else tuple(scheme)
    for s in schemes:
        if s not in profile.schemes:
            raise ValueError(f"scheme {s} not supported by profile {profile.name!r}")
    width = max(profile.columns.values()) + 1
    index = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            tokens = line.split()
            if not tokens or tokens[0].startswith("#"):
                continue
            if len(tokens) < width:
                raise ParseError(f"expected at least {width} columns, got {len(tokens)}", path, lineno)
            try:
                fields = {name: int(tokens[col]) for name, col in profile.columns.items()}
            except ValueError:
                raise ParseError("non-integer column value", path, lineno) from None
            labels = _labels_for_row(fields, profile, schemes, path, lineno)
            index.append(IndexEntry(
                sample_id=profile.id_template.format(**fields),
                sequence_path=profile.sequence_template.format(**fields),
                labels=labels,
                subject=fields["subject"],
                trial=fields["trial"],
                split=split,
                fields=fields,
            ))
    if not index:
        log.warning("split index %s contains no rows", path)
    return index


# -- normalized format ----------------------------------------------------------

def export_normalized(path, seq: SkeletonSequence, sample_id: str = "",
                      labels: Optional[Dict[int, HardLabel]] = None, meta: Optional[dict] = None) -> None:
    doc = {
        "format": NORMALIZED_FORMAT,
        "schema_version": NORMALIZED_VERSION,
        "sample_id": sample_id,
        "joint_count": seq.joint_count,
        "frame_rate": seq.frame_rate,
        "labels": {str(k): v.to_dict() for k, v in sorted((labels or {}).items())},
        "meta": meta or {},
        # float repr round-trips exactly through JSON
        "frames": seq.frames.tolist(),
    }
    Path(path).write_text(json.dumps(doc, separators=(",", ":")), encoding="utf-8")


@dataclass
class NormalizedRecord:
    sequence: SkeletonSequence
    labels: Dict[int, HardLabel]
    sample_id: str = ""
    meta: dict = field(default_factory=dict)


def import_normalized(path, joint_count: Optional[int] = None) -> NormalizedRecord:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", path, exc.lineno) from exc
    if doc.get("format") != NORMALIZED_FORMAT:
        raise ParseError(f"not a normalized skeleton file (format={doc.get('format')!r})", path)
    if doc.get("schema_version") != NORMALIZED_VERSION:
        raise ParseError(f"unsupported schema_version {doc.get('schema_version')!r}, "
                         f"expected {NORMALIZED_VERSION}", path)
    declared = doc.get("joint_count")
    if joint_count is not None and declared != joint_count:
        raise ParseError(f"file declares {declared} joints, expected {joint_count}", path)
    frames = doc.get("frames")
    if not isinstance(frames, list):
        raise ParseError("missing 'frames' list", path)
    for t, frame in enumerate(frames):
        if not isinstance(frame, list) or len(frame) != declared:
            n = len(frame) if isinstance(frame, list) else "non-list"
            raise ParseError(f"frame {t} has {n} joints, expected {declared}", path)
        for j, joint in enumerate(frame):
            if not isinstance(joint, list) or len(joint) != 3 or \
                    not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in joint):
                raise ParseError(f"frame {t} joint {j} must be 3 numbers, got {joint!r}", path)
    arr = np.array(frames, dtype=np.float64).reshape(len(frames), declared, 3)
    labels = {int(k): HardLabel.from_dict(v) for k, v in doc.get("labels", {}).items()}
    return NormalizedRecord(SkeletonSequence(arr, doc.get("frame_rate")), labels,
                            doc.get("sample_id", ""), doc.get("meta", {}))


def from_jhmdb_positions(pos: np.ndarray, frame_rate: Optional[float] = None) -> SkeletonSequence:
    """Convert a JHMDB ``pos_world`` array of shape (2, 15, T) to a 15-joint sequence with z = 0.

    Typical use::

        mat = scipy.io.loadmat("joint_positions.mat")
        seq = from_jhmdb_positions(mat["pos_world"])
        export_normalized("clip.json", seq, "jhmdb/brush_hair/clip", {21: HardLabel(0, 21)})
    """
    pos = np.asarray(pos, dtype=np.float64)
    if pos.ndim != 3 or pos.shape[0] != 2:
        raise ValueError(f"expected shape (2, J, T), got {pos.shape}")
    xy = np.transpose(pos, (2, 1, 0))
    frames = np.concatenate([xy, np.zeros(xy.shape[:2] + (1,))], axis=2)
    return SkeletonSequence(frames, frame_rate)


# -- index files written by ``gestaug ingest`` -----------------------------------

INDEX_FORMAT = "gestaug-index"
INDEX_VERSION = 1
INDEX_NAME = "index.jsonl"


def write_index_file(path, rows: Sequence[dict], profile: str) -> None:
    header = {"record": "header", "format": INDEX_FORMAT, "version": INDEX_VERSION,
              "profile": profile, "count": len(rows)}
    lines = [json.dumps(header, sort_keys=True)]
    lines.extend(json.dumps(dict(r, record="row"), sort_keys=True)
                 for r in sorted(rows, key=lambda r: r["sample_id"]))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_index_file(path) -> Tuple[dict, list]:
    path = Path(path)
    if path.is_dir():
        path = path / INDEX_NAME
    records = [json.loads(line) for line in path.read_text(encoding="utf-8").splitlines() if line.strip()]
    if not records or records[0].get("format") != INDEX_FORMAT:
        raise ParseError("not a gestaug index file", path)
    if records[0].get("version") != INDEX_VERSION:
        raise ParseError(f"unsupported index version {records[0].get('version')!r}", path)
    return records[0], records[1:]
