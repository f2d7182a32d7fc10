"""File formats: probability streams, labels, manifests, weights, predictions.

Streams and labels are comma-separated text with a header row. Class
columns are matched by name, so column order in a file does not matter.

* per-frame stream:  ``frame,neutral,anger,disgust,fear,happiness,sadness,surprise``
* windowed stream:   ``frame,start_s,end_s,neutral,...,surprise``
* 8-class streams add one extra column (default name ``other``) that is
  dropped on read, after which the 7 remaining values are renormalized.
* labels:            ``frame,label`` with class names, not indices.
* predictions:       ``frame,label,<7 score columns>``.

Manifests and weights files are JSON. Floats go through ``repr`` which
round-trips every double exactly.
"""
from __future__ import annotations

import csv
import json
import logging
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .emotions import (
    BASIC_NAMES,
    COMPOUND_NAMES,
    N_CLASSES,
    parse_basic,
    parse_compound,
)
from .exceptions import DataError, ParameterError
from .fusion import FusionParameters
from .temporal import (
    AlignedDataset,
    StreamSpec,
    expand_windows,
    hold_frames,
    resample_fps,
)

logger = logging.getLogger(__name__)

TASKS = ("basic", "compound")
SUM_TOLERANCE = 1e-3
DEFAULT_EXTRA_COLUMN = "other"


def _fmt(x: float) -> str:
    return repr(float(x))


def task_names(task: str) -> tuple[str, ...]:
    if task not in TASKS:
        raise ParameterError(f"task must be one of {TASKS}, got {task!r}")
    return BASIC_NAMES if task == "basic" else COMPOUND_NAMES


def _parse_name(name: str, task: str) -> int:
    return int(parse_basic(name) if task == "basic" else parse_compound(name))


# -- probability streams -----------------------------------------------------


@dataclass
class RawStream:
    """One stream as stored on disk, after validation and 8->7 reduction."""

    frame: np.ndarray
    probs: np.ndarray
    start_s: np.ndarray | None = None
    end_s: np.ndarray | None = None

    @property
    def windows(self):
        return list(zip(self.start_s, self.end_s, self.probs))


def _open_csv(path):
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise OSError(f"cannot open {path}: {exc.strerror or exc}") from exc
    return fh


def _number(path, line, col, text) -> float:
    try:
        x = float(text)
    except (TypeError, ValueError):
        raise DataError(f"{path}: row {line}, column {col!r}: not a number: {text!r}") from None
    if math.isnan(x) or math.isinf(x):
        raise DataError(f"{path}: row {line}, column {col!r}: non-finite value {text!r}")
    return x


def read_stream(path, spec: StreamSpec | None = None, class_count: int = N_CLASSES,
                extra_column: str = DEFAULT_EXTRA_COLUMN) -> RawStream:
    """Parse and validate a probability stream file.

    Every row must sum to 1 within 1e-3 (over all class columns, the extra
    one included); rows are then renormalized exactly.
    """
    spec = spec or StreamSpec()
    if class_count not in (7, 8):
        raise ParameterError(f"class_count must be 7 or 8, got {class_count}")
    windowed = spec.kind == "windowed"
    required = ["frame"] + (["start_s", "end_s"] if windowed else []) + list(BASIC_NAMES)
    if class_count == 8:
        required.append(extra_column)

    with _open_csv(path) as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip().lower() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path}: empty file, expected a header row") from None
        for col in required:
            if col not in header:
                raise DataError(f"{path}: row 1, column {col!r}: missing from header {header}")
        unexpected = [h for h in header if h not in required]
        if unexpected:
            raise DataError(f"{path}: row 1, column {unexpected[0]!r}: unexpected column")
        pos = {c: header.index(c) for c in required}
        prob_cols = list(BASIC_NAMES) + ([extra_column] if class_count == 8 else [])

        frames, starts, ends, rows = [], [], [], []
        for line, rec in enumerate(reader, start=2):
            if not rec or all(not x.strip() for x in rec):
                continue
            if len(rec) != len(header):
                raise DataError(f"{path}: row {line}, column {header[min(len(rec), len(header) - 1)]!r}: "
                                f"expected {len(header)} fields, got {len(rec)}")
            f = _number(path, line, "frame", rec[pos["frame"]])
            if f != int(f) or f < 0:
                raise DataError(f"{path}: row {line}, column 'frame': not a non-negative integer: {rec[pos['frame']]!r}")
            if frames and f <= frames[-1]:
                raise DataError(f"{path}: row {line}, column 'frame': index {int(f)} not increasing")
            frames.append(int(f))
            vals = []
            for col in prob_cols:
                x = _number(path, line, col, rec[pos[col]])
                if x < 0:
                    raise DataError(f"{path}: row {line}, column {col!r}: negative probability {x}")
                vals.append(x)
            total = sum(vals)
            if abs(total - 1.0) > SUM_TOLERANCE + 1e-12:
                raise DataError(f"{path}: row {line}, column {prob_cols[-1]!r}: probabilities sum to {total:.6f}")
            if windowed:
                s = _number(path, line, "start_s", rec[pos["start_s"]])
                e = _number(path, line, "end_s", rec[pos["end_s"]])
                if e <= s:
                    raise DataError(f"{path}: row {line}, column 'end_s': window ends before it starts")
                if starts and s < starts[-1]:
                    raise DataError(f"{path}: row {line}, column 'start_s': windows not sorted by start")
                starts.append(s)
                ends.append(e)
            rows.append(vals)

    if not rows:
        raise DataError(f"{path}: row 2, column 'frame': stream has no data rows")
    probs = np.array(rows, dtype=float)[:, :N_CLASSES]
    kept = probs.sum(axis=1, keepdims=True)
    if np.any(kept <= 0):
        bad = int(np.flatnonzero(kept[:, 0] <= 0)[0])
        raise DataError(f"{path}: row {bad + 2}, column {extra_column!r}: no mass left after dropping the extra class")
    probs = probs / kept
    return RawStream(
        np.array(frames, dtype=np.int64),
        probs,
        np.array(starts) if windowed else None,
        np.array(ends) if windowed else None,
    )


def write_stream(path, probs, frame=None, start_s=None, end_s=None,
                 extra=None, extra_column: str = DEFAULT_EXTRA_COLUMN) -> None:
    """Write a stream file; pass ``start_s``/``end_s`` for a windowed stream."""
    p = np.asarray(probs, dtype=float)
    frame = np.arange(len(p)) if frame is None else np.asarray(frame)
    header = ["frame"]
    if start_s is not None:
        header += ["start_s", "end_s"]
    header += list(BASIC_NAMES)
    if extra is not None:
        header.append(extra_column)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for i in range(len(p)):
            row = [int(frame[i])]
            if start_s is not None:
                row += [_fmt(start_s[i]), _fmt(end_s[i])]
            row += [_fmt(x) for x in p[i]]
            if extra is not None:
                row.append(_fmt(extra[i]))
            w.writerow(row)


# -- labels -----------------------------------------------------------------


def read_labels(path, task: str = "basic") -> tuple[np.ndarray, np.ndarray]:
    """Return ``(frame_index, label_index)`` from a ``frame,label`` file."""
    task_names(task)
    frames, labels = [], []
    with _open_csv(path) as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip().lower() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path}: empty file, expected a header row") from None
        for col in ("frame", "label"):
            if col not in header:
                raise DataError(f"{path}: row 1, column {col!r}: missing from header {header}")
        fi, li = header.index("frame"), header.index("label")
        for line, rec in enumerate(reader, start=2):
            if not rec or all(not x.strip() for x in rec):
                continue
            f = _number(path, line, "frame", rec[fi])
            if frames and f <= frames[-1]:
                raise DataError(f"{path}: row {line}, column 'frame': index {int(f)} not increasing")
            try:
                lab = _parse_name(rec[li], task)
            except DataError as exc:
                raise DataError(f"{path}: row {line}, column 'label': {exc}") from None
            frames.append(int(f))
            labels.append(lab)
    return np.array(frames, dtype=np.int64), np.array(labels, dtype=np.int64)


def write_labels(path, labels, task: str = "basic", frame=None) -> None:
    """Write labels by name; entries < 0 (unlabelled) are skipped."""
    names = task_names(task)
    lab = np.asarray(labels, dtype=np.int64)
    frame = np.arange(len(lab)) if frame is None else np.asarray(frame)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["frame", "label"])
        for f, y in zip(frame, lab):
            if y >= 0:
                w.writerow([int(f), names[y]])


# -- predictions ------------------------------------------------------------


def write_predictions(path, decisions, scores, task: str = "compound", frame=None) -> None:
    """One row per frame: index, decided class name, and the 7 class scores."""
    names = task_names(task)
    d = np.asarray(decisions, dtype=np.int64).reshape(-1)
    s = np.asarray(scores, dtype=float).reshape(len(d), N_CLASSES) if len(d) else np.zeros((0, N_CLASSES))
    frame = np.arange(len(d)) if frame is None else np.asarray(frame)
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["frame", "label", *names])
            for i in range(len(d)):
                w.writerow([int(frame[i]), names[d[i]], *(_fmt(x) for x in s[i])])
    except OSError as exc:
        raise OSError(f"cannot write predictions to {path}: {exc.strerror or exc}") from exc


def read_predictions(path, task: str = "compound") -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return ``(frame, decision, scores)``; scores are NaN if the file has none."""
    names = task_names(task)
    frames, labels = [], []
    with _open_csv(path) as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip().lower() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path}: empty file, expected a header row") from None
        for col in ("frame", "label"):
            if col not in header:
                raise DataError(f"{path}: row 1, column {col!r}: missing from header {header}")
        has_scores = all(n in header for n in names)
        score_pos = [header.index(n) for n in names] if has_scores else []
        scores = []
        for line, rec in enumerate(reader, start=2):
            if not rec:
                continue
            frames.append(int(_number(path, line, "frame", rec[header.index("frame")])))
            try:
                labels.append(_parse_name(rec[header.index("label")], task))
            except DataError as exc:
                raise DataError(f"{path}: row {line}, column 'label': {exc}") from None
            scores.append([_number(path, line, names[k], rec[j]) for k, j in enumerate(score_pos)]
                          if has_scores else [math.nan] * N_CLASSES)
    return (np.array(frames, dtype=np.int64), np.array(labels, dtype=np.int64),
            np.array(scores, dtype=float).reshape(-1, N_CLASSES))


def write_diagnostics(path, flags: dict[str, np.ndarray], frame=None) -> int:
    """List flagged frames as ``frame,flag`` rows; returns the number of rows."""
    n = 0
    size = len(next(iter(flags.values()))) if flags else 0
    frame = np.arange(size) if frame is None else np.asarray(frame)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["frame", "flag"])
        for i in range(size):
            for name, f in flags.items():
                if f[i]:
                    w.writerow([int(frame[i]), name])
                    n += 1
    return n


# -- manifest ---------------------------------------------------------------


@dataclass(frozen=True)
class ModelEntry:
    model_id: str
    path: str
    spec: StreamSpec = field(default_factory=StreamSpec)
    class_count: int = N_CLASSES
    extra_column: str = DEFAULT_EXTRA_COLUMN

    def __post_init__(self):
        if self.class_count not in (7, 8):
            raise ParameterError(f"model {self.model_id!r}: class_count must be 7 or 8")


@dataclass(frozen=True)
class LabelsEntry:
    path: str
    task: str = "basic"

    def __post_init__(self):
        task_names(self.task)


@dataclass(frozen=True)
class DatasetManifest:
    dataset_id: str
    fps: float
    frame_count: int
    models: tuple[ModelEntry, ...]
    labels: tuple[LabelsEntry, ...] = ()
    root: str = "."

    def __post_init__(self):
        ids = [m.model_id for m in self.models]
        if len(set(ids)) != len(ids):
            raise ParameterError(f"model ids must be unique, got {ids}")
        if not self.models:
            raise ParameterError("manifest lists no models")
        if not self.fps > 0 or int(self.frame_count) < 0:
            raise ParameterError("manifest needs fps > 0 and frame_count >= 0")

    def resolve(self, rel: str) -> Path:
        p = Path(rel)
        return p if p.is_absolute() else Path(self.root) / p

    def labels_for(self, task: str) -> LabelsEntry | None:
        for entry in self.labels:
            if entry.task == task:
                return entry
        return None

    def to_dict(self) -> dict:
        models = []
        for m in self.models:
            d = {"model_id": m.model_id, "path": m.path, "kind": m.spec.kind, "class_count": m.class_count}
            for key in ("native_fps", "window_seconds", "step_seconds"):
                val = getattr(m.spec, key)
                if val is not None:
                    d[key] = val
            if m.spec.frame_sampling_step != 1:
                d["frame_sampling_step"] = m.spec.frame_sampling_step
            if m.class_count == 8:
                d["extra_column"] = m.extra_column
            models.append(d)
        return {
            "dataset_id": self.dataset_id,
            "fps": self.fps,
            "frame_count": self.frame_count,
            "models": models,
            "labels": [{"path": e.path, "task": e.task} for e in self.labels],
        }


def manifest_from_dict(data: dict, root=".") -> DatasetManifest:
    try:
        models = tuple(
            ModelEntry(
                model_id=str(m["model_id"]),
                path=str(m["path"]),
                spec=StreamSpec(
                    kind=m.get("kind", "per_frame"),
                    native_fps=m.get("native_fps"),
                    window_seconds=m.get("window_seconds"),
                    step_seconds=m.get("step_seconds"),
                    frame_sampling_step=int(m.get("frame_sampling_step", 1)),
                ),
                class_count=int(m.get("class_count", N_CLASSES)),
                extra_column=str(m.get("extra_column", DEFAULT_EXTRA_COLUMN)),
            )
            for m in data["models"]
        )
        labels = data.get("labels") or []
        if isinstance(labels, dict):
            labels = [labels]
        return DatasetManifest(
            dataset_id=str(data.get("dataset_id", "")),
            fps=float(data["fps"]),
            frame_count=int(data["frame_count"]),
            models=models,
            labels=tuple(LabelsEntry(str(e["path"]), e.get("task", "basic")) for e in labels),
            root=str(root),
        )
    except KeyError as exc:
        raise DataError(f"manifest is missing field {exc.args[0]!r}") from None


def read_manifest(path) -> DatasetManifest:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: row {exc.lineno}, column {exc.colno}: invalid JSON: {exc.msg}") from None
    return manifest_from_dict(data, root=path.parent)


def write_manifest(path, manifest: DatasetManifest) -> None:
    Path(path).write_text(json.dumps(manifest.to_dict(), indent=2) + "\n")


def _align_stream(entry: ModelEntry, raw: RawStream, manifest: DatasetManifest) -> np.ndarray:
    n = manifest.frame_count
    fps = manifest.fps
    if entry.spec.kind == "windowed":
        return expand_windows(raw.windows, n, fps)
    native = entry.spec.native_fps or fps
    n_native = max(math.ceil(n * native / fps - 1e-9), int(raw.frame[-1]) + 1)
    dense = hold_frames(raw.frame, raw.probs, n_native)
    if native != fps:
        dense = resample_fps(dense, native, fps)
    if len(dense) < n:
        raise DataError(f"stream {entry.model_id!r} covers {len(dense)} of {n} frames")
    return dense[:n]


def load_dataset(manifest: DatasetManifest, tasks=TASKS) -> AlignedDataset:
    """Read every stream and label file of ``manifest`` onto one frame grid."""
    probs = []
    for entry in manifest.models:
        raw = read_stream(manifest.resolve(entry.path), entry.spec, entry.class_count, entry.extra_column)
        probs.append(_align_stream(entry, raw, manifest))
    labels = {}
    for entry in manifest.labels:
        if entry.task not in tasks:
            continue
        frame, lab = read_labels(manifest.resolve(entry.path), entry.task)
        if frame.size and (frame.min() < 0 or frame.max() >= manifest.frame_count):
            raise DataError(f"{entry.path}: label frame index outside [0, {manifest.frame_count})")
        dense = np.full(manifest.frame_count, -1, dtype=np.int64)
        dense[frame] = lab
        labels[entry.task] = dense
    return AlignedDataset(
        probs=np.stack(probs) if probs else np.zeros((0, manifest.frame_count, N_CLASSES)),
        model_ids=tuple(m.model_id for m in manifest.models),
        fps=manifest.fps,
        labels=labels,
        dataset_id=manifest.dataset_id,
    )


# -- weights ----------------------------------------------------------------


def weights_to_dict(params: FusionParameters, provenance: dict | None = None) -> dict:
    return {
        "class_order": list(BASIC_NAMES),
        "model_ids": list(params.model_ids),
        "mode": params.mode,
        "weight_matrix": [[float(x) for x in row] for row in params.weight_matrix],
        "model_weights": [float(x) for x in params.model_weights],
        "provenance": dict(provenance or {}),
    }


def write_weights(path, params: FusionParameters, provenance: dict | None = None) -> None:
    text = json.dumps(weights_to_dict(params, provenance), indent=2) + "\n"
    tmp = f"{path}.tmp"
    with open(tmp, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def read_weights(path) -> tuple[FusionParameters, dict]:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: row {exc.lineno}, column {exc.colno}: invalid JSON: {exc.msg}") from None
    try:
        order = [parse_basic(n) for n in data["class_order"]]
        if sorted(int(e) for e in order) != list(range(N_CLASSES)):
            raise DataError(f"{path}: class_order must name each basic emotion once")
        w = np.asarray(data["weight_matrix"], dtype=float)
        if w.ndim != 2 or w.shape[1] != N_CLASSES:
            raise DataError(f"{path}: weight_matrix must have {N_CLASSES} columns")
        canon = np.empty_like(w)
        canon[:, [int(e) for e in order]] = w
        params = FusionParameters(canon, np.asarray(data["model_weights"], dtype=float),
                                  tuple(data["model_ids"]), data.get("mode", "dirichlet"))
    except KeyError as exc:
        raise DataError(f"{path}: missing field {exc.args[0]!r}") from None
    return params, dict(data.get("provenance", {}))
