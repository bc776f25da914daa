"""Exception types shared across the package."""


class InputError(ValueError):
    """Malformed or inconsistent user input (shapes, names, values)."""


class StructureError(InputError):
    """Structure constants violate antisymmetry or the Jacobi identity."""


class RepresentationError(ArithmeticError):
    """A matrix representation failed to close on its basis."""


class DegenerateInputError(InputError):
    """Input is valid but degenerate for the requested construction."""


class CertificationRefused(DegenerateInputError):
    """A check declined to certify because its hypotheses do not hold.

    ``rank`` carries the generator rank that was found.
    """

    def __init__(self, message, rank):
        super().__init__(message)
        self.rank = rank


class SamplerError(RuntimeError):
    """A chart sampler could not produce the requested elements."""


class FiberMismatchError(InputError):
    """An element does not lie in the fiber a map is defined on."""


class ChartDomainError(ValueError):
    """A chart map was evaluated outside its domain."""


class DivergenceError(ArithmeticError):
    """Numerical integration produced a non-finite state.

    The partial trajectory up to the last finite state is kept on
    ``trajectory``; ``last_time`` is its final time.
    """

    def __init__(self, message, trajectory, last_time):
        super().__init__(message)
        self.trajectory = trajectory
        self.last_time = last_time
