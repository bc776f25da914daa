"""Co-adjoint orbits of Lie groupoids, linear Poisson dynamics and numeric checks."""
from .errors import (
    CertificationRefused,
    ChartDomainError,
    DegenerateInputError,
    DivergenceError,
    FiberMismatchError,
    InputError,
    RepresentationError,
    SamplerError,
    StructureError,
)
from .lie_core import StructureConstants, catalog

__version__ = "0.1.0"
