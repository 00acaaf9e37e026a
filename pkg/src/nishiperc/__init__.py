"""Desk-scale toolkit for the entanglement phase diagram of weakly monitored
circuits with qubit loss.

Samples Nishimori-line disorder on a diluted square space-time lattice,
compiles it into a (1+1)D non-unitary kicked-Ising circuit, evolves it with
four interchangeable backends (dense, MPS, stabilizer, Majorana Gaussian) and
extracts central charges, correlation-length exponents and multifractal
cumulant spectra.
"""

from .lattice import (
    LatticeSpec,
    DilutionMask,
    DisorderRealization,
    VortexConfig,
    sample_dilution,
    sample_signs_nishimori,
    gauge_transform,
    gauge_fix_temporal,
    vortices,
)
from .compiler import (
    DualCouplings,
    GateDescriptor,
    RowProgram,
    CircuitProgram,
    couplings_from_t,
    compile_program,
    attach_test_spins,
)

__all__ = [
    "LatticeSpec",
    "DilutionMask",
    "DisorderRealization",
    "VortexConfig",
    "sample_dilution",
    "sample_signs_nishimori",
    "gauge_transform",
    "gauge_fix_temporal",
    "vortices",
    "DualCouplings",
    "GateDescriptor",
    "RowProgram",
    "CircuitProgram",
    "couplings_from_t",
    "compile_program",
    "attach_test_spins",
]

__version__ = "0.1.0"
