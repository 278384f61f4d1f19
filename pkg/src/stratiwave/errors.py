"""Exception hierarchy.

The CLI maps these onto process exit codes: ConfigError -> 2,
StagnationError / ProfileError / NoLaminarFlowError -> 3,
DivergenceError -> 4.  Structural and domain errors are programming or
input-contract violations and subclass ValueError.
"""


class StratiwaveError(Exception):
    """Base class for all package errors."""


class ConfigError(StratiwaveError):
    """Invalid or inconsistent configuration / input file."""


class StagnationError(StratiwaveError):
    """The no-stagnation condition u < c fails somewhere in the fluid."""


class ProfileError(StratiwaveError):
    """Density or Bernoulli profile violates its admissibility conditions."""


class DivergenceError(StratiwaveError):
    """An iteration produced non-finite values or failed to converge."""


class NoLaminarFlowError(StratiwaveError):
    """No laminar flow exists for the requested head/depth pair."""


class StructuralError(StratiwaveError, ValueError):
    """Operands live on incompatible grids/domains/orders."""


class DomainError(StratiwaveError, ValueError):
    """Evaluation point outside the represented domain."""


class SurfaceEscapeError(StratiwaveError):
    """Free-surface root finding found no bracket (point outside the
    recovered region)."""


class InsufficientDataError(StratiwaveError, ValueError):
    """Not enough coefficients/samples for the requested estimate."""
