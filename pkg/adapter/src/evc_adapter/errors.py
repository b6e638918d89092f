"""Adapter exception hierarchy."""


class AdapterError(Exception):
    """Base class for all adapter failures."""

    exit_code = 2


class MediaError(AdapterError):
    """The media file is missing, undecodable, or too short to use."""


class EncoderError(AdapterError):
    """The requested encoder does not exist or cannot handle the input."""


class InvalidSpec(AdapterError):
    """An extraction spec field is out of range or inconsistent."""
