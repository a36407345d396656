"""Exception types raised across the simulation chain."""

from __future__ import annotations


class HydroLinkError(Exception):
    """Base class for all errors raised by hydrolink."""


class ConfigInvalid(HydroLinkError, ValueError):
    """A configuration value violates its invariants.

    ``field`` names the offending parameter when known, so front ends can
    report it.
    """

    def __init__(self, message: str, field: str | None = None):
        super().__init__(message)
        self.field = field


class PointInsideSource(HydroLinkError, ValueError):
    """A field point lies on or inside the oscillating sphere."""

    def __init__(self, message: str, index: int | None = None):
        super().__init__(message)
        self.index = index


class DegenerateFingerprint(HydroLinkError, ValueError):
    """The spatial fingerprint has zero norm, so it cannot weight a beamformer."""


class EmptyGrid(HydroLinkError, ValueError):
    """No grid point is valid for evaluation."""


class LengthMismatch(HydroLinkError, ValueError):
    """A waveform is not made of a whole number of symbols."""


class ChannelCountMismatch(HydroLinkError, ValueError):
    """Channel count of a signal does not match the weight vector."""
