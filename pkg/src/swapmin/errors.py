"""Exception hierarchy shared by the pipeline.

Anything deriving from :class:`DataError` is a problem with user-supplied
data (malformed files, unresolvable ids, empty subsets) and maps to exit
code 2 in the command-line interface.
"""


class DataError(Exception):
    """Input data cannot be used as given."""


class InvalidDistribution(DataError, ValueError):
    pass


class ConlluError(DataError):
    """Malformed CoNLL-U input; carries the source position."""

    def __init__(self, message, source="<stream>", line=None):
        self.source = source
        self.line = line
        where = source if line is None else f"{source}:{line}"
        super().__init__(f"{where}: {message}")


class CountsTableError(DataError):
    pass


class TaxonomyError(DataError):
    pass


class UnresolvedLanguage(DataError, KeyError):
    def __init__(self, language_id):
        self.language_id = language_id
        super().__init__(language_id)

    def __str__(self):
        return f"cannot resolve language id {self.language_id!r}"


class DegenerateSample(DataError):
    """Every paired difference is zero, so no signed-rank test exists."""
