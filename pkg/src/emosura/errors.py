"""Exception types raised across the package.

Parsing of model responses never raises: malformed output is encoded in the
returned value (format-failure flags, dropped units) so failure rates stay
countable. Exceptions are reserved for caller mistakes and transport faults.
"""

from __future__ import annotations


class EmosuraError(Exception):
    """Base class for all package-specific errors."""


class EmptyCaption(EmosuraError, ValueError):
    """A caption that must be non-empty was empty."""


class BackendError(EmosuraError):
    """Transport-level failure talking to a model endpoint."""


class BackendTimeout(BackendError):
    """Request timed out after exhausting retries."""


class HttpStatusError(BackendError):
    """Endpoint returned a non-2xx status after exhausting retries."""

    def __init__(self, status_code: int, body: str = ""):
        self.status_code = status_code
        self.body = body
        super().__init__(f"HTTP {status_code}: {body[:500]}")


class MalformedResponse(BackendError):
    """Endpoint returned JSON that is not a chat-completion payload."""


class AttachmentTooLarge(BackendError, ValueError):
    """Audio attachment exceeds the configured size cap."""


class MissingFixture(BackendError, KeyError):
    """Strict mock backend has no entry for the requested key."""


class MissingAnnotationStats(EmosuraError, ValueError):
    """Sample record lacks the valence/arousal std needed for filtering."""


class OutOfRange(EmosuraError, ValueError):
    """A value fell outside its documented domain (e.g. V/A mean not in [1,7])."""


class TooShort(EmosuraError, ValueError):
    """Audio clip shorter than the minimum analyzable duration."""


class SilentAudio(EmosuraError, ValueError):
    """Audio has no voiced frames and is below the silence floor."""


class NoGoldExamples(EmosuraError, ValueError):
    """Few-shot caption prompt requested without any gold examples."""


class NoSubstitutableSpan(EmosuraError, ValueError):
    """Caption contains nothing the requested perturbation type can alter."""


class LengthMismatch(EmosuraError, ValueError):
    """Paired vectors have different lengths."""


class ZeroVariance(EmosuraError, ValueError):
    """Correlation undefined because one input is constant."""


class AllTied(EmosuraError, ValueError):
    """Kendall tau-b undefined because one ranking is fully tied."""


class EmptyCandidate(EmosuraError, ValueError):
    """Metric asked to score an empty candidate caption."""


class EmptyInput(EmosuraError, ValueError):
    """Metric asked to score an empty candidate or reference."""


class CorpusTooSmall(EmosuraError, ValueError):
    """CIDEr-D needs at least two corpus items for document frequencies."""


class EmptyList(EmosuraError, ValueError):
    """Statistic requested over an empty collection."""


class JoinMismatch(EmosuraError, ValueError):
    """Score / MOS join found ids present on only one side."""

    def __init__(self, missing_ids):
        self.missing_ids = sorted(missing_ids)
        super().__init__(f"unmatched sample ids: {', '.join(self.missing_ids)}")


class ConfigError(EmosuraError, ValueError):
    """Bad flag combination, unreadable config, or missing fixture directory."""
