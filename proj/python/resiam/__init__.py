"""Rotation-equivariant Siamese tracking."""

from ._core import (
    Box,
    EvalCurves,
    FrameAnnotation,
    Network,
    SamplerConfig,
    StoredSequence,
    SynthConfig,
    SyntheticSequence,
    TrackState,
    TrackerConfig,
    TrackerHead,
    TrainConfig,
    average_curves,
    desk_network,
    digit_glyph,
    enclosing_box,
    forward,
    generate_sequence,
    iou,
    load_network,
    ope_curves,
    orientation_sr,
    random_baseline,
    read_sequence,
    rotate_sequence,
    save_network,
    track_sequence,
    train_on_dataset,
    wrap_angle_deg,
    write_sequence,
)

__all__ = [
    "Box",
    "EvalCurves",
    "FrameAnnotation",
    "Network",
    "SamplerConfig",
    "StoredSequence",
    "SynthConfig",
    "SyntheticSequence",
    "TrackState",
    "TrackerConfig",
    "TrackerHead",
    "TrainConfig",
    "average_curves",
    "desk_network",
    "digit_glyph",
    "enclosing_box",
    "forward",
    "generate_sequence",
    "iou",
    "load_network",
    "ope_curves",
    "orientation_sr",
    "random_baseline",
    "read_sequence",
    "rotate_sequence",
    "save_network",
    "track_sequence",
    "train_on_dataset",
    "wrap_angle_deg",
    "write_sequence",
]
