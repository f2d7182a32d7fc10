"""Seeded synthetic corpora standing in for real model outputs.

Ground truth is a sequence of contiguous emotion segments. For every
frame (or window) each model emits a Dirichlet draw centred on the
confusion-matrix row of the true class; ``concentration`` sets how
tightly the draws hug that row.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .emotions import N_CLASSES, BasicEmotion, compound_for_pair, parse_basic
from .exceptions import ParameterError
from .io import (
    DatasetManifest,
    LabelsEntry,
    ModelEntry,
    RawStream,
    write_labels,
    write_manifest,
    write_stream,
)
from .temporal import AlignedDataset, StreamSpec, expand_windows, window_bounds

_FLOOR = 1e-3


@dataclass(frozen=True)
class LeadSegment:
    """A segment at the start of the clip whose models see a 50/50 blend of two emotions.

    The basic-emotion label is ``emotion``; the compound label is the
    expression formed by the pair, if any.
    """

    emotion: BasicEmotion
    blend_with: BasicEmotion
    frames: int


@dataclass(frozen=True)
class SyntheticProfile:
    model_ids: tuple[str, ...]
    confusions: np.ndarray  # (n_models, 7, 7), row-stochastic
    concentrations: tuple[float, ...]
    specs: tuple[StreamSpec, ...] = ()
    frame_count: int = 5000
    fps: float = 5.0
    seed: int = 0
    segment_frames: tuple[int, int] = (10, 40)
    class_prior: tuple[float, ...] | None = None
    lead_segments: tuple[LeadSegment, ...] = ()
    dataset_id: str = "synthetic"

    def __post_init__(self):
        c = np.asarray(self.confusions, dtype=float)
        m = len(self.model_ids)
        if c.shape != (m, N_CLASSES, N_CLASSES):
            raise ParameterError(f"confusions must be ({m}, 7, 7), got {c.shape}")
        if np.any(c < 0) or not np.allclose(c.sum(axis=2), 1.0, atol=1e-9):
            raise ParameterError("confusion rows must be non-negative and sum to 1")
        if len(self.concentrations) != m or any(not k > 0 for k in self.concentrations):
            raise ParameterError("need one concentration > 0 per model")
        specs = self.specs or tuple(StreamSpec() for _ in range(m))
        if len(specs) != m:
            raise ParameterError("need one StreamSpec per model")
        lo, hi = self.segment_frames
        if not 1 <= lo <= hi:
            raise ParameterError(f"segment_frames must satisfy 1 <= min <= max, got {self.segment_frames}")
        if self.frame_count < 1 or not self.fps > 0:
            raise ParameterError("frame_count must be >= 1 and fps > 0")
        c.setflags(write=False)
        object.__setattr__(self, "confusions", c)
        object.__setattr__(self, "specs", specs)
        object.__setattr__(self, "model_ids", tuple(self.model_ids))

    def with_seed(self, seed: int) -> "SyntheticProfile":
        return SyntheticProfile(**{**self.__dict__, "seed": seed})


@dataclass
class SyntheticData:
    dataset: AlignedDataset
    basic_labels: np.ndarray
    compound_labels: np.ndarray  # -1 where no compound expression applies
    raw_streams: dict[str, RawStream] = field(default_factory=dict)


def _segments(profile: SyntheticProfile, rng: np.random.Generator):
    """Return ``[(emotion, blend_with_or_None, length)]`` covering the clip."""
    prior = np.full(N_CLASSES, 1.0 / N_CLASSES) if profile.class_prior is None else np.asarray(profile.class_prior)
    prior = prior / prior.sum()
    segs = [(int(s.emotion), int(s.blend_with), int(s.frames)) for s in profile.lead_segments]
    total = sum(s[2] for s in segs)
    lo, hi = profile.segment_frames
    while total < profile.frame_count:
        prev = segs[-1][0] if segs else -1
        e = int(rng.choice(N_CLASSES, p=prior))
        while e == prev and np.count_nonzero(prior) > 1:
            e = int(rng.choice(N_CLASSES, p=prior))
        length = int(rng.integers(lo, hi + 1))
        segs.append((e, None, length))
        total += length
    return segs


def _compound_for_segments(segs) -> list[int]:
    out = []
    for i, (e, blend, _) in enumerate(segs):
        ce = None
        if blend is not None:
            ce = compound_for_pair(BasicEmotion(e), BasicEmotion(blend))
        else:
            for j in (i + 1, i - 1):
                if 0 <= j < len(segs):
                    ce = compound_for_pair(BasicEmotion(e), BasicEmotion(segs[j][0]))
                    if ce is not None:
                        break
        out.append(-1 if ce is None else int(ce))
    return out


def _draw(rng: np.random.Generator, centre: np.ndarray, concentration: float) -> np.ndarray:
    if np.isinf(concentration):
        return centre / centre.sum(axis=-1, keepdims=True)
    g = rng.gamma(concentration * centre + _FLOOR)
    total = g.sum(axis=-1, keepdims=True)
    # Underflow of every component is only possible for tiny shapes; fall back to the centre.
    bad = total[..., 0] <= 0
    if np.any(bad):
        g[bad] = centre[bad]
        total[bad] = centre[bad].sum(axis=-1, keepdims=True)
    return g / total


def generate_synthetic(profile: SyntheticProfile) -> SyntheticData:
    """Deterministic corpus for ``profile`` (same seed -> identical arrays)."""
    root = np.random.SeedSequence(int(profile.seed))
    truth_ss, *model_ss = root.spawn(1 + len(profile.model_ids))
    rng = np.random.default_rng(truth_ss)

    segs = _segments(profile, rng)
    ces = _compound_for_segments(segs)
    n = profile.frame_count
    basic = np.concatenate([np.full(length, e) for e, _, length in segs])[:n]
    compound = np.concatenate([np.full(length, c) for c, (_, _, length) in zip(ces, segs)])[:n]
    soft = np.zeros((n, N_CLASSES))
    soft[np.arange(n), basic] = 1.0
    start = 0
    for e, blend, length in segs:
        stop = min(start + length, n)
        if blend is not None and stop > start:
            soft[start:stop] = 0.0
            soft[start:stop, e] = 0.5
            soft[start:stop, blend] = 0.5
        start = stop
        if start >= n:
            break

    streams, raws = [], {}
    for mid, conf, kappa, spec, ss in zip(profile.model_ids, profile.confusions,
                                          profile.concentrations, profile.specs, model_ss):
        mrng = np.random.default_rng(ss)
        centre = soft @ conf
        if spec.kind == "windowed":
            bounds = window_bounds(n, profile.fps, spec.window_seconds, spec.step_seconds)
            wc = []
            for s, e in bounds:
                a = int(np.floor(s * profile.fps + 1e-9))
                b = min(int(np.ceil(e * profile.fps - 1e-9)), n)
                wc.append(centre[a:b].mean(axis=0) if b > a else centre[min(a, n - 1)])
            vecs = _draw(mrng, np.array(wc), kappa)
            starts = np.array([b[0] for b in bounds])
            ends = np.array([b[1] for b in bounds])
            raws[mid] = RawStream(np.arange(len(bounds)), vecs, starts, ends)
            streams.append(expand_windows(raws[mid].windows, n, profile.fps))
        else:
            step = int(spec.frame_sampling_step)
            frames = np.arange(0, n, step)
            vecs = _draw(mrng, centre[frames], kappa)
            raws[mid] = RawStream(frames, vecs)
            streams.append(vecs[np.repeat(np.arange(len(frames)), step)[:n]])

    dataset = AlignedDataset(
        probs=np.stack(streams),
        model_ids=profile.model_ids,
        fps=profile.fps,
        labels={"basic": basic, "compound": compound},
        dataset_id=profile.dataset_id,
    )
    return SyntheticData(dataset, basic, compound, raws)


def write_synthetic(data: SyntheticData, profile: SyntheticProfile, out_dir) -> Path:
    """Write streams, labels and ``manifest.json`` under ``out_dir``; return the manifest path."""
    out = Path(out_dir)
    (out / "streams").mkdir(parents=True, exist_ok=True)
    models = []
    for mid, spec in zip(profile.model_ids, profile.specs):
        raw = data.raw_streams[mid]
        rel = f"streams/{mid}.csv"
        write_stream(out / rel, raw.probs, frame=raw.frame, start_s=raw.start_s, end_s=raw.end_s)
        models.append(ModelEntry(mid, rel, StreamSpec(spec.kind, profile.fps, spec.window_seconds,
                                                      spec.step_seconds, spec.frame_sampling_step)))
    write_labels(out / "labels_basic.csv", data.basic_labels, "basic")
    write_labels(out / "labels_compound.csv", data.compound_labels, "compound")
    manifest = DatasetManifest(
        dataset_id=profile.dataset_id,
        fps=profile.fps,
        frame_count=profile.frame_count,
        models=tuple(models),
        labels=(LabelsEntry("labels_basic.csv", "basic"), LabelsEntry("labels_compound.csv", "compound")),
        root=str(out),
    )
    path = out / "manifest.json"
    write_manifest(path, manifest)
    return path


# -- presets ----------------------------------------------------------------


def _confusion(diag: float, extra: dict[int, float] | None = None, rows=None) -> np.ndarray:
    """Rows with ``diag`` on the diagonal, optional fixed off-diagonal mass, rest spread evenly."""
    extra = extra or {}
    out = np.zeros((N_CLASSES, N_CLASSES))
    for r in range(N_CLASSES):
        d = diag if rows is None or r in rows else None
        if d is None:
            out[r] = 1.0 / N_CLASSES
            continue
        row = np.zeros(N_CLASSES)
        row[r] = d
        for c, v in extra.items():
            if c != r:
                row[c] += v
        free = [c for c in range(N_CLASSES) if c != r and c not in extra]
        row[free] += (1.0 - row.sum()) / len(free)
        out[r] = row
    return out


def three_model_default(seed: int = 7, frame_count: int = 5000) -> SyntheticProfile:
    """Sharp per-frame model, biased 2 s window model, near-uniform 4 s audio model."""
    sharp = _confusion(0.55)
    biased = _confusion(0.35, {int(BasicEmotion.NEUTRAL): 0.25, int(BasicEmotion.HAPPINESS): 0.15})
    flat = _confusion(0.16)
    return SyntheticProfile(
        model_ids=("static", "dynamic", "audio"),
        confusions=np.stack([sharp, biased, flat]),
        concentrations=(2.5, 2.5, 1.0),
        specs=(
            StreamSpec("per_frame"),
            StreamSpec("windowed", window_seconds=2.0, step_seconds=1.0),
            StreamSpec("windowed", window_seconds=4.0, step_seconds=2.0),
        ),
        frame_count=frame_count,
        fps=5.0,
        seed=seed,
        segment_frames=(10, 40),
        lead_segments=(LeadSegment(BasicEmotion.SADNESS, BasicEmotion.SURPRISE, 25),),
        dataset_id="three-model-default",
    )


def audio_informative(seed: int = 0, frame_count: int = 3000) -> SyntheticProfile:
    """Audio model reliable only on Anger and Sadness; visual models weak exactly there."""
    anger, sadness = int(BasicEmotion.ANGER), int(BasicEmotion.SADNESS)
    audio = _confusion(0.85, rows={anger, sadness})
    visual = _confusion(0.7)
    for r in (anger, sadness):
        visual[r] = _confusion(0.15, {int(BasicEmotion.NEUTRAL): 0.35})[r]
    visual2 = visual.copy()
    return SyntheticProfile(
        model_ids=("static", "dynamic", "audio"),
        confusions=np.stack([visual, visual2, audio]),
        concentrations=(6.0, 6.0, 6.0),
        specs=(
            StreamSpec("per_frame"),
            StreamSpec("windowed", window_seconds=2.0, step_seconds=1.0),
            StreamSpec("windowed", window_seconds=4.0, step_seconds=2.0),
        ),
        frame_count=frame_count,
        fps=5.0,
        seed=seed,
        segment_frames=(20, 50),
        dataset_id="audio-informative",
    )


PRESETS = {
    "three-model-default": three_model_default,
    "audio-informative": audio_informative,
}


def preset(name: str, seed: int | None = None, frame_count: int | None = None) -> SyntheticProfile:
    if name not in PRESETS:
        raise ParameterError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    kwargs = {}
    if seed is not None:
        kwargs["seed"] = seed
    if frame_count is not None:
        kwargs["frame_count"] = frame_count
    return PRESETS[name](**kwargs)


def profile_to_dict(profile: SyntheticProfile) -> dict:
    return {
        "model_ids": list(profile.model_ids),
        "confusions": profile.confusions.tolist(),
        "concentrations": list(profile.concentrations),
        "specs": [
            {"kind": s.kind, "window_seconds": s.window_seconds, "step_seconds": s.step_seconds,
             "frame_sampling_step": s.frame_sampling_step}
            for s in profile.specs
        ],
        "frame_count": profile.frame_count,
        "fps": profile.fps,
        "seed": profile.seed,
        "segment_frames": list(profile.segment_frames),
        "class_prior": None if profile.class_prior is None else list(profile.class_prior),
        "lead_segments": [
            {"emotion": s.emotion.label, "blend_with": s.blend_with.label, "frames": s.frames}
            for s in profile.lead_segments
        ],
        "dataset_id": profile.dataset_id,
    }


def profile_from_dict(d: dict) -> SyntheticProfile:
    return SyntheticProfile(
        model_ids=tuple(d["model_ids"]),
        confusions=np.asarray(d["confusions"], dtype=float),
        concentrations=tuple(float(k) for k in d["concentrations"]),
        specs=tuple(StreamSpec(s.get("kind", "per_frame"), None, s.get("window_seconds"),
                               s.get("step_seconds"), int(s.get("frame_sampling_step", 1)))
                    for s in d.get("specs", [])),
        frame_count=int(d.get("frame_count", 5000)),
        fps=float(d.get("fps", 5.0)),
        seed=int(d.get("seed", 0)),
        segment_frames=tuple(d.get("segment_frames", (10, 40))),
        class_prior=None if d.get("class_prior") is None else tuple(d["class_prior"]),
        lead_segments=tuple(LeadSegment(parse_basic(s["emotion"]), parse_basic(s["blend_with"]), int(s["frames"]))
                            for s in d.get("lead_segments", [])),
        dataset_id=str(d.get("dataset_id", "synthetic")),
    )
