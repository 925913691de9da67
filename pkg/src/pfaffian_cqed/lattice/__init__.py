from .basis import FockBasis, capped_composition_count, enumerate_basis
from .hamiltonian import LatticeSpec, SparseHam, basis_for, build_hamiltonian
from .hopping import hop_amplitude, hopping_terms
from .lanczos import EDResult, dense_lowest, lanczos_lowest

__all__ = [
    "FockBasis", "capped_composition_count", "enumerate_basis", "LatticeSpec", "SparseHam",
    "basis_for", "build_hamiltonian", "hop_amplitude", "hopping_terms", "EDResult",
    "dense_lowest", "lanczos_lowest",
]
