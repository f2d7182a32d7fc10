"""Bring per-frame and windowed probability streams onto one frame grid."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .emotions import N_CLASSES
from .exceptions import DataError, ParameterError

STREAM_KINDS = ("per_frame", "windowed")


@dataclass(frozen=True)
class StreamSpec:
    kind: str = "per_frame"
    native_fps: float | None = None
    window_seconds: float | None = None
    step_seconds: float | None = None
    frame_sampling_step: int = 1

    def __post_init__(self):
        if self.kind not in STREAM_KINDS:
            raise ParameterError(f"stream kind must be one of {STREAM_KINDS}, got {self.kind!r}")
        if self.kind == "windowed":
            if not (self.window_seconds and self.window_seconds > 0):
                raise ParameterError("windowed streams need window_seconds > 0")
            if not (self.step_seconds and self.step_seconds > 0):
                raise ParameterError("windowed streams need step_seconds > 0")
        if self.native_fps is not None and not self.native_fps > 0:
            raise ParameterError(f"native_fps must be > 0, got {self.native_fps}")
        if int(self.frame_sampling_step) < 1:
            raise ParameterError(f"frame_sampling_step must be >= 1, got {self.frame_sampling_step}")


@dataclass
class AlignedDataset:
    """Frame-aligned model streams, stacked as ``(n_models, n_frames, 7)``.

    ``labels`` maps a task name (``"basic"`` / ``"compound"``) to an int
    array of length ``frame_count`` where -1 marks unlabelled frames.
    """

    probs: np.ndarray
    model_ids: tuple[str, ...]
    fps: float
    labels: dict[str, np.ndarray] = field(default_factory=dict)
    dataset_id: str = ""

    def __post_init__(self):
        self.probs = np.asarray(self.probs, dtype=float)
        if self.probs.ndim != 3 or self.probs.shape[2] != N_CLASSES:
            raise DataError(f"probs must be (n_models, n_frames, {N_CLASSES}), got {self.probs.shape}")
        self.model_ids = tuple(self.model_ids)
        if len(self.model_ids) != self.probs.shape[0]:
            raise DataError(f"{len(self.model_ids)} model ids for {self.probs.shape[0]} streams")
        if not np.allclose(self.probs.sum(axis=-1), 1.0, atol=1e-6):
            raise DataError("aligned streams must hold normalized vectors")
        for task, lab in self.labels.items():
            if len(lab) != self.frame_count:
                raise DataError(f"{task} labels have {len(lab)} entries for {self.frame_count} frames")

    @property
    def frame_count(self) -> int:
        return self.probs.shape[1]

    @property
    def X(self) -> np.ndarray:
        """Estimator view: ``(n_frames, n_models, 7)``."""
        return np.ascontiguousarray(self.probs.transpose(1, 0, 2))


def _round_half_up(x):
    return np.floor(np.asarray(x, dtype=float) + 0.5).astype(np.int64)


def window_frame_count(window_seconds: float, fps: float) -> int:
    """Frames in a window: ``round(window_seconds * fps)``."""
    return int(_round_half_up(window_seconds * fps))


def resample_fps(stream, fps_in: float, fps_out: float, allow_upsample: bool = False) -> np.ndarray:
    """Nearest-frame resampling of a ``(n, ...)`` stream.

    Output frame ``t`` takes input frame ``round(t * fps_in / fps_out)``;
    the output has ``ceil(n * fps_out / fps_in)`` frames.
    """
    s = np.asarray(stream)
    if not (fps_in > 0 and fps_out > 0):
        raise ParameterError("frame rates must be > 0")
    if fps_out > fps_in and not allow_upsample:
        raise ParameterError(f"refusing to upsample {fps_in} -> {fps_out} FPS (pass allow_upsample=True)")
    if fps_in == fps_out:
        return s.copy()
    n = s.shape[0]
    n_out = math.ceil(n * fps_out / fps_in - 1e-9)
    idx = np.minimum(_round_half_up(np.arange(n_out) * (fps_in / fps_out)), n - 1)
    return s[idx]


def resample_indices(n: int, fps_in: float, fps_out: float) -> np.ndarray:
    return resample_fps(np.arange(n), fps_in, fps_out, allow_upsample=True)


def window_bounds(frame_count: int, fps: float, window_seconds: float, step_seconds: float):
    """Start/end times (seconds) of sliding windows covering ``frame_count`` frames.

    The last window is kept even when it runs past the end of the clip.
    """
    duration = frame_count / fps
    starts = []
    k = 0
    while True:
        t = k * step_seconds
        starts.append(t)
        if t + window_seconds >= duration - 1e-9:
            break
        k += 1
    return [(s, s + window_seconds) for s in starts]


def expand_windows(window_preds, frame_count: int, fps: float) -> np.ndarray:
    """Map ``[(start_s, end_s, vector), ...]`` onto ``frame_count`` frames.

    Frame ``i`` sits at ``i / fps`` and is covered by windows with
    ``start <= t < end``. Covered frames get the mean of their windows,
    renormalized; uncovered frames copy the nearest window (earlier one
    on ties).
    """
    if not fps > 0:
        raise ParameterError(f"fps must be > 0, got {fps}")
    if len(window_preds) == 0:
        raise DataError("no windows to expand")
    starts = np.array([w[0] for w in window_preds], dtype=float)
    ends = np.array([w[1] for w in window_preds], dtype=float)
    vecs = np.array([np.asarray(w[2], dtype=float) for w in window_preds])
    if vecs.ndim != 2 or vecs.shape[1] != N_CLASSES:
        raise DataError(f"window vectors must have {N_CLASSES} entries")
    if np.any(np.diff(starts) < 0):
        raise DataError("windows must be sorted by start time")
    if np.any(ends <= starts):
        raise DataError("every window must end after it starts")

    t = np.arange(frame_count) / fps
    cover = (starts[None, :] <= t[:, None] + 1e-9) & (t[:, None] < ends[None, :] - 1e-9)
    counts = cover.sum(axis=1)
    out = cover.astype(float) @ vecs
    out[counts > 0] /= counts[counts > 0, None]

    lonely = np.flatnonzero(counts == 0)
    if lonely.size:
        dist = np.maximum(starts[None, :] - t[lonely, None], 0) + np.maximum(t[lonely, None] - ends[None, :], 0)
        out[lonely] = vecs[np.argmin(dist, axis=1)]

    total = out.sum(axis=1, keepdims=True)
    if np.any(total <= 0):
        raise DataError("a frame received an all-zero probability vector")
    return out / total


def hold_frames(frame_index, vectors, n_out: int) -> np.ndarray:
    """Densify a sparse per-frame stream: each frame copies the latest row at or before it.

    Frames before the first row copy the first row. Used for streams
    computed on every N-th frame.
    """
    fi = np.asarray(frame_index, dtype=np.int64)
    v = np.asarray(vectors, dtype=float)
    if fi.size == 0:
        raise DataError("stream has no rows")
    pos = np.searchsorted(fi, np.arange(n_out), side="right") - 1
    return v[np.maximum(pos, 0)]


def majority_label(frame_labels) -> int:
    """Most frequent label; ties go to the lowest label value."""
    lab = np.asarray(frame_labels, dtype=np.int64)
    if lab.size == 0:
        raise DataError("cannot take the majority of an empty label sequence")
    if lab.min() < 0:
        raise DataError("labels must be >= 0")
    return int(np.argmax(np.bincount(lab)))
