"""Media decoding and encoder pooling that emit EVCF feature files.

This package is deliberately independent of the evc library: the only
contract between the two is the EVCF byte format itself, so everything
here is written against the published layout rather than shared code.
"""

from .errors import AdapterError, EncoderError, InvalidSpec, MediaError
from .evcf import write_evcf
from .extract import (
    ExtractionSpec,
    extract_audio_features,
    extract_features,
    extract_video_features,
)
from .encoders import available_encoders, get_encoder, register_encoder

__all__ = [
    "AdapterError",
    "EncoderError",
    "InvalidSpec",
    "MediaError",
    "ExtractionSpec",
    "available_encoders",
    "extract_audio_features",
    "extract_features",
    "extract_video_features",
    "get_encoder",
    "register_encoder",
    "write_evcf",
]
