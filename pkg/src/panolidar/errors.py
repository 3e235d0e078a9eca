"""Exception types shared across the toolkit.

Kept in one module so the CLI can map them to exit codes in a single place.
"""

from __future__ import annotations


class PanolidarError(Exception):
    """Base class for all toolkit errors."""


class FormatMismatch(PanolidarError):
    """File header or record arity disagrees with the declared format."""


class DegeneratePoint(PanolidarError):
    """Point with x = y = 0 has no defined azimuth."""


class BadWidth(PanolidarError):
    """Panorama width is not divisible by 8, so it cannot be quartered."""


class OutOfBounds(PanolidarError):
    """Pixel coordinate outside the segment or panorama bounds."""


class BackendUnavailable(PanolidarError):
    """Vision backend could not be reached (connect failure or timeout).

    ``segment`` carries the segment label the request was issued for, when
    known, so partial-scene reporting can attribute the failure.
    """

    def __init__(self, message: str, segment: str | None = None):
        super().__init__(message)
        self.segment = segment


class ProtocolError(PanolidarError):
    """Vision backend answered, but the response violates the wire protocol."""

    def __init__(self, message: str, segment: str | None = None):
        super().__init__(message)
        self.segment = segment


class FixtureParseError(PanolidarError):
    """Mock-backend fixture file is malformed."""


class PlacementOutOfFov(PanolidarError):
    """Synthetic placement falls outside the sensor's vertical field of view."""


class DimensionMismatch(PanolidarError):
    """Scene description does not match the panorama it is applied to."""
