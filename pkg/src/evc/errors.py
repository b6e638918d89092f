"""Typed errors shared across the package.

Every error the library raises on bad input or bad numerics derives from
EvcError and carries the exit code the CLI maps it to: 2 for input/domain
problems, 3 for numerical failures.
"""


class EvcError(Exception):
    exit_code = 2


class InputError(EvcError):
    """Bad inputs: malformed files, invalid values, shape mismatches."""

    exit_code = 2


# file formats

class FormatError(InputError):
    """Bad magic: the file is not in the expected container format."""


class UnsupportedVersion(InputError):
    """Recognized container, unknown version number."""


class CorruptFile(InputError):
    """Truncated payload, trailing bytes, or a failed checksum."""


class IoError(InputError):
    """Underlying OS-level read/write failure."""


class InvalidData(InputError):
    """Values that violate a documented invariant (non-finite, wrong range)."""


# event curves

class ZeroNormFrame(InputError):
    """Cosine dissimilarity is undefined for a zero-norm feature frame."""


class InvalidKernel(InputError):
    """Smoothing kernel size must be odd and >= 1."""


class NoValidWindows(InputError):
    """Every correlation window was skipped (too few samples or flat)."""


# shapes and pairing

class ShapeError(InputError):
    """Mismatched dimensions where identical ones are required."""


class PairingError(InputError):
    """Per-item pairing required but the collections differ in length."""


# metrics

class NoCuts(InputError):
    """Scene-cut hit ratio is undefined for an empty cut list."""


class InsufficientBeats(InputError):
    """Tempo estimation needs at least two events per timeline."""


# numerics

class NumericalError(EvcError):
    """Non-finite intermediate values or a singular system."""

    exit_code = 3


class TrainingDiverged(NumericalError):
    """Training loss became non-finite."""
