"""Exception types shared across the package."""


class DomainError(ValueError):
    """A parameter is outside its mathematical domain."""


class LevelMismatchError(ValueError):
    """A cell address requests more blow-up levels than the prefix provides."""


class IndeterminacyError(ArithmeticError):
    """The projective map was evaluated at its indeterminacy point."""


class NonConvergenceError(RuntimeError):
    """An iterative computation failed to converge within its budget."""


class WindowError(ValueError):
    """A spectral window is inconsistent with the data it is applied to."""


class PreconditionError(ValueError):
    """A documented operation precondition is violated."""
