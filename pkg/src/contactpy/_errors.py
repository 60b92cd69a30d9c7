from typing import Sequence


class ContactpyError(Exception):
    """Base class of every error raised by contactpy."""


class AspectError(ContactpyError):
    def __init__(
        self,
        u: object,
        v: object,
    ) -> None:
        self.u = u
        self.v = v

    def __str__(self) -> str:
        return (
            f"Edge region between {self.u} and {self.v} is neither wide "
            "(|a-c| >= 2|b-d|) nor tall (2|a-c| <= |b-d|)"
        )


class HalfSpaceError(ContactpyError):
    def __init__(self, what: object) -> None:
        self.what = what

    def __str__(self) -> str:
        return f"{self.what} leaves the half-space Im >= 0"


class InfiniteRegionError(ContactpyError):
    def __init__(self, region: object) -> None:
        self.region = region

    def __str__(self) -> str:
        return (
            f"{self.region} is infinite and cannot be materialized without "
            "a bounding window"
        )


class SpecError(ContactpyError):
    def __init__(self, spec: str, reason: str) -> None:
        self.spec = spec
        self.reason = reason

    def __str__(self) -> str:
        return f"invalid distribution spec '{self.spec}': {self.reason}"


class WindowError(ContactpyError):
    def __init__(self, what: object, window: object) -> None:
        self.what = what
        self.window = window

    def __str__(self) -> str:
        return f"{self.what} lies outside the window {self.window}"


class FormatError(ContactpyError):
    def __init__(self, source: str, line: int, reason: str) -> None:
        self.source = source
        self.line = line
        self.reason = reason

    def __str__(self) -> str:
        return f"{self.source}, line {self.line}: {self.reason}"


class ConstraintError(ContactpyError):
    def __init__(self, sites: object) -> None:
        self.sites = sites

    def __str__(self) -> str:
        return f"initial sites {self.sites} violate the constraint"


class GeomError(ContactpyError):
    def __init__(self, reason: str) -> None:
        self.reason = reason

    def __str__(self) -> str:
        return f"invalid route geometry: {self.reason}"


class WindowTooLargeError(ContactpyError):
    def __init__(self, size: int, limit: int) -> None:
        self.size = size
        self.limit = limit

    def __str__(self) -> str:
        return (
            f"window has {self.size} sites, subset laws are only estimable "
            f"for at most {self.limit}"
        )


class PreconditionError(ContactpyError):
    def __init__(self, reason: str) -> None:
        self.reason = reason

    def __str__(self) -> str:
        return self.reason


class NotIncreasingError(ContactpyError):
    def __init__(self, event: object) -> None:
        self.event = event

    def __str__(self) -> str:
        return (
            f"{self.event!r} is not built from increasing primitives only"
        )


class ConfigError(ContactpyError):
    def __init__(self, diagnostics: Sequence[str]) -> None:
        self.diagnostics = list(diagnostics)

    def __str__(self) -> str:
        lines = "\n".join(f"  - {d}" for d in self.diagnostics)
        return f"{len(self.diagnostics)} configuration error(s):\n{lines}"
