"""Exception hierarchy shared across the sifter package."""

from __future__ import annotations


class SifterError(Exception):
    """Base class for all domain errors raised by this package."""

    code = "error"


class ValidationError(SifterError, ValueError):
    """Bad input: malformed records, out-of-range parameters, contract violations."""

    code = "validation"


class ManifestError(ValidationError):
    """Corpus manifest could not be parsed or violates uniqueness rules."""

    code = "manifest"


class FrameSourceError(SifterError):
    """Frames for a video could not be loaded or decoded."""

    code = "frame_source"

    def __init__(self, video_id: str, message: str):
        super().__init__(f"{video_id}: {message}")
        self.video_id = video_id


class NotFoundError(SifterError):
    """Referenced job, session, or page does not exist."""

    code = "not_found"


class ConflictError(SifterError):
    """Request conflicts with current state (overlapping roles, open pages, capacity)."""

    code = "conflict"


class StateError(ConflictError):
    """Operation invoked in the wrong job phase or session lifecycle state."""

    code = "state"


class OutOfScopeError(ValidationError):
    """A selection referenced a video outside the worker's assignment or page."""

    code = "out_of_scope"


class CapExceededError(ConflictError):
    """Worker attempted to select more videos than their stage cap allows."""

    code = "cap_exceeded"
