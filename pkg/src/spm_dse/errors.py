"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: usage errors exit 1, validation errors
exit 2, evaluation errors exit 3 and I/O errors exit 4.
"""


class SpmDseError(Exception):
    """Base class for all errors raised by this package."""


class WorkloadParseError(SpmDseError):
    """A workload, cost-table or net-descriptor file is structurally malformed."""


class ValidationError(SpmDseError):
    """Inputs parse but violate an invariant (negative count, duplicate name, ...)."""


class InfeasibleConfigError(SpmDseError):
    """An operation does not fit into a memory organization.

    Enumeration only emits feasible organizations, so hitting this during
    evaluation signals an enumeration bug rather than bad user input.
    """


class CostQueryError(SpmDseError):
    """The cost model cannot price a geometry (empty table, refused extrapolation)."""


class EvaluationError(SpmDseError):
    """Evaluating a configuration failed; carries the config id in the message."""


class ReportError(SpmDseError):
    """Writing a report bundle failed."""
