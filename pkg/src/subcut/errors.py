"""Error types shared across the package.

Plain ValueError is used for malformed arguments (dimension mismatches,
bad indices); the classes here mark conditions callers may want to
catch separately.
"""


class ModelError(ValueError):
    """Instance data violates a model-level requirement (e.g. negative cut weights)."""


class CapacityError(ValueError):
    """A brute-force or enumeration guard was exceeded."""


class NumericError(RuntimeError):
    """Numerical failure inside a solver (singular basis, iteration cap, ...)."""


class SeparationBudget(RuntimeError):
    """The step-length search ran out of its iteration budget; the cut is skipped."""
