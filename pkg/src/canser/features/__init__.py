"""Preprocessing: alignment tables, audio slicing, MFCCs and synthetic data."""

from .alignment import (
    SPECIAL_TOKENS,
    AlignmentTable,
    Span,
    absorb_special_tokens,
    apply_overlap,
    equal_segmentation,
    format_alignment,
    parse_alignment,
    read_alignment,
    write_alignment,
)
from .audio import AudioSignal, load_audio, segment_audio, write_raw, write_wav
from .manifest import ManifestEntry, read_manifest, write_manifest
from .mfcc import MfccConfig, frame_count, mfcc
from .segments import (
    SegmentedAudioFeatures,
    TokenSequence,
    Vocabulary,
    build_segment_tensor,
    extract_features,
    read_feature_cache,
    segment_table,
    write_feature_cache,
)
from .synth import SynthConfig, synthesize_dataset

__all__ = [
    "SPECIAL_TOKENS",
    "AlignmentTable",
    "AudioSignal",
    "ManifestEntry",
    "MfccConfig",
    "SegmentedAudioFeatures",
    "Span",
    "SynthConfig",
    "TokenSequence",
    "Vocabulary",
    "absorb_special_tokens",
    "apply_overlap",
    "build_segment_tensor",
    "equal_segmentation",
    "extract_features",
    "format_alignment",
    "frame_count",
    "load_audio",
    "mfcc",
    "parse_alignment",
    "read_alignment",
    "read_feature_cache",
    "read_manifest",
    "segment_audio",
    "segment_table",
    "synthesize_dataset",
    "write_alignment",
    "write_feature_cache",
    "write_manifest",
    "write_raw",
    "write_wav",
]
