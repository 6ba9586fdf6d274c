"""Hermite spectral solver for the von Neumann equation in Weyl variables."""

__version__ = "0.1.0"

from .grid import Grid  # noqa: E402
from .hermite import BasisSpec, gauss_hermite_rule, phi_all  # noqa: E402
from .potentials import Potential  # noqa: E402
from .coupling import CouplingMatrix, assemble_coupling  # noqa: E402
from .evolution import (  # noqa: E402
    EvolutionConfig,
    GalerkinSystem,
    HermiteState,
    InitialData,
    coherent_state,
    run,
)

__all__ = [
    "BasisSpec",
    "CouplingMatrix",
    "EvolutionConfig",
    "GalerkinSystem",
    "Grid",
    "HermiteState",
    "InitialData",
    "Potential",
    "assemble_coupling",
    "coherent_state",
    "gauss_hermite_rule",
    "phi_all",
    "run",
]
