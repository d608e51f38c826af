"""Exception types shared across the package.

The CLI maps these onto exit codes: input-side problems (bad files, empty
or unmapped data) exit with 2, computation failures with 1.
"""


class PoiNamesError(Exception):
    """Base class for errors raised by this package."""


class IngestError(PoiNamesError):
    """The input source or a support file (e.g. region mapping) is unusable."""


class EmptyCorpusError(PoiNamesError, ValueError):
    """An operation that needs documents received none."""
