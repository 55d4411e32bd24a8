"""Linear delay integro-differential systems in finite dimension.

Building blocks: exponential-polynomial memory kernels with exact Laplace
transforms, matrix-valued delay measures on [-r, 0], the resolvent family of
the memory-perturbed state equation, two independent time-stepping schemes
for the full state/input/output delay system, characteristic-root location
with winding-number certification, and shift-semigroup diagnostics.
"""

from .errors import NumericalError, SpecError
from .kernels import Kernel, KernelPoleError, KernelTerm
from .matfuncs import expm
from .measures import DelayMeasure, DensityPiece
from .resolvent import (
    ResolventFamily,
    commutation_defect,
    compute_resolvent,
    resolvent_residual,
    upsilon_apply,
)
from .shift import (
    admissibility_check,
    composition_check,
    control_map,
    input_output_map,
    shift_apply,
)
from .solver import SolveReport, cross_validate, solve_direct, solve_mild
from .spectral import (
    CharacteristicFunction,
    RootRecord,
    SingularFreePartError,
    SpectrumReport,
    find_roots,
    spectral_abscissa,
)
from .system import SystemSpec, load_spec, spec_from_dict
from .trajectories import HistorySegment, Trajectory

__version__ = "0.1.0"

__all__ = [
    "CharacteristicFunction",
    "DelayMeasure",
    "DensityPiece",
    "HistorySegment",
    "Kernel",
    "KernelPoleError",
    "KernelTerm",
    "NumericalError",
    "ResolventFamily",
    "RootRecord",
    "SingularFreePartError",
    "SolveReport",
    "SpecError",
    "SpectrumReport",
    "SystemSpec",
    "Trajectory",
    "admissibility_check",
    "commutation_defect",
    "composition_check",
    "compute_resolvent",
    "control_map",
    "cross_validate",
    "expm",
    "find_roots",
    "input_output_map",
    "load_spec",
    "resolvent_residual",
    "shift_apply",
    "solve_direct",
    "solve_mild",
    "spec_from_dict",
    "spectral_abscissa",
    "upsilon_apply",
]
