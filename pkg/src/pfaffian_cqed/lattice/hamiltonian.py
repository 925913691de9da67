"""Many-body Hofstadter-Bose-Hubbard Hamiltonian with two- and three-body on-site terms."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.sparse as sp

from ..errors import ParameterError
from .basis import FockBasis, enumerate_basis
from .hopping import HoppingTerms, hopping_terms, normalize_scheme

HARDCORE = "hardcore"


@dataclass
class LatticeSpec:
    """Torus lattice problem. Energies in units of the NN hopping J.

    ``U3=None`` means the three-body hard core (occupancy capped at 2).
    A finite ``U3`` needs ``n_max >= 3`` so triple occupancy is penalised
    rather than forbidden; ``n_max`` defaults accordingly.
    """

    Lx: int = 4
    Ly: int = 4
    alpha: float = 0.25
    N: int = 4
    n_max: int | None = None
    U2: float = 0.0
    U3: float | None = None
    scheme: str = "NN"
    R: int | None = None
    theta_x: float = 0.0
    theta_y: float = 0.0

    def __post_init__(self):
        if self.Lx < 2 or self.Ly < 2:
            raise ParameterError("Lx and Ly must be at least 2")
        if self.N < 1:
            raise ParameterError("need at least one particle")
        if isinstance(self.U3, str):
            if self.U3.strip().lower() != HARDCORE:
                raise ParameterError(f"U3 must be a number or {HARDCORE!r}, got {self.U3!r}")
            self.U3 = None
        if self.n_max is None:
            self.n_max = 2 if self.U3 is None else 3
        if self.n_max < 1:
            raise ParameterError("n_max must be >= 1")
        if self.U3 is not None and self.n_max < 3:
            raise ParameterError("a finite U3 requires n_max >= 3")
        try:
            self.scheme = normalize_scheme(self.scheme)
        except ValueError as exc:
            raise ParameterError(str(exc)) from None
        flux = self.alpha * self.Lx * self.Ly
        if abs(flux - round(flux)) > 1e-9:
            raise ParameterError(
                f"total flux alpha*Lx*Ly = {flux} must be an integer on the torus")
        if self.N > self.n_max * self.Lx * self.Ly:
            raise ParameterError("particle number exceeds lattice capacity")

    @property
    def n_sites(self) -> int:
        return self.Lx * self.Ly

    @property
    def flux_quanta(self) -> int:
        return int(round(self.alpha * self.Lx * self.Ly))

    @property
    def filling(self) -> float:
        return self.N / self.flux_quanta if self.flux_quanta else math.inf

    @property
    def hardcore(self) -> bool:
        return self.U3 is None

    def replace(self, **changes) -> "LatticeSpec":
        d = asdict(self)
        if "U3" in changes and "n_max" not in changes:
            d["n_max"] = None
        d.update(changes)
        return LatticeSpec(**d)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["U3"] = HARDCORE if self.U3 is None else self.U3
        return d


@dataclass
class SparseHam:
    """Hermitian sparse matrix in CSR form with the structure needed to re-twist it."""

    matrix: sp.csr_matrix
    spec: LatticeSpec | None = None
    structure: "HamiltonianStructure | None" = field(default=None, repr=False)

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    def entries(self):
        coo = self.matrix.tocoo()
        return coo.row, coo.col, coo.data

    def matvec(self, v):
        return self.matrix @ v

    def norm_bound(self) -> float:
        """Max absolute row sum, an upper bound on the spectral norm."""
        return float(np.max(np.asarray(abs(self.matrix).sum(axis=1)))) if self.dimension else 0.0

    def hermiticity_error(self) -> float:
        diff = self.matrix - self.matrix.getH()
        return float(np.max(np.abs(diff.data))) if diff.nnz else 0.0

    def check_hermitian(self, tol: float = 1e-12):
        err = self.hermiticity_error()
        if err > tol:
            raise AssertionError(f"Hamiltonian not Hermitian: max |H - H^dag| = {err:.3e}")
        diag = self.matrix.diagonal()
        if np.any(np.abs(diag.imag) > tol):
            raise AssertionError("Hamiltonian diagonal is not real")

    def toarray(self):
        return self.matrix.toarray()


@dataclass
class HamiltonianStructure:
    """Sparsity pattern of the hopping part; values depend only on the twist."""

    rows: np.ndarray
    cols: np.ndarray
    factors: np.ndarray
    term: np.ndarray
    diagonal: np.ndarray
    hops: HoppingTerms
    dimension: int

    def assemble(self, theta_x: float = 0.0, theta_y: float = 0.0) -> sp.csr_matrix:
        amps = self.hops.twisted(theta_x, theta_y)
        vals = self.factors * amps[self.term]
        n = self.dimension
        off = sp.csr_matrix((vals, (self.rows, self.cols)), shape=(n, n))
        return (off + sp.diags(self.diagonal.astype(complex), format="csr")).tocsr()


def interaction_diagonal(spec: LatticeSpec, basis: FockBasis) -> np.ndarray:
    n = basis.states.astype(float)
    diag = 0.5 * spec.U2 * np.sum(n * (n - 1), axis=1)
    if spec.U3 is not None:
        diag += spec.U3 / 6.0 * np.sum(n * (n - 1) * (n - 2), axis=1)
    return diag


def build_structure(spec: LatticeSpec, basis: FockBasis, gauge=None) -> HamiltonianStructure:
    if basis.n_sites != spec.n_sites or basis.n_max != spec.n_max or basis.n_particles != spec.N:
        raise ParameterError("basis does not match the lattice spec")
    hops = hopping_terms(spec.Lx, spec.Ly, spec.alpha, spec.scheme, spec.R, gauge=gauge)
    states = basis.states
    weights = basis.site_weights()
    rows, cols, factors, term = [], [], [], []
    all_cols = np.arange(basis.dimension)
    for k, (t, s) in enumerate(zip(hops.target, hops.source)):
        # hard core: hops into a full site are simply absent
        mask = (states[:, s] > 0) & (states[:, t] < basis.n_max)
        src = all_cols[mask]
        if src.size == 0:
            continue
        new_keys = basis.keys[mask] - weights[s] + weights[t]
        dst = basis.lookup(new_keys)
        if np.any(dst < 0):
            raise ParameterError("hop produced a state outside the basis")
        fac = np.sqrt(states[mask, s].astype(float) * (states[mask, t].astype(float) + 1.0))
        rows.append(dst)
        cols.append(src)
        factors.append(fac)
        term.append(np.full(src.size, k))
    cat = (lambda xs, dt: np.concatenate(xs).astype(dt) if xs else np.zeros(0, dtype=dt))
    return HamiltonianStructure(
        rows=cat(rows, np.int64), cols=cat(cols, np.int64), factors=cat(factors, float),
        term=cat(term, np.int64), diagonal=interaction_diagonal(spec, basis), hops=hops,
        dimension=basis.dimension)


def build_hamiltonian(spec: LatticeSpec, basis: FockBasis | None = None, *, gauge=None,
                      check: bool = True) -> SparseHam:
    basis = basis if basis is not None else enumerate_basis(spec.n_sites, spec.N, spec.n_max)
    structure = build_structure(spec, basis, gauge=gauge)
    ham = SparseHam(structure.assemble(spec.theta_x, spec.theta_y), spec, structure)
    if check:
        ham.check_hermitian(1e-12)
    return ham


def basis_for(spec: LatticeSpec) -> FockBasis:
    return enumerate_basis(spec.n_sites, spec.N, spec.n_max)


def twist_unitary_diagonal(basis: FockBasis, Lx: int, direction: str, turns: int = 1) -> np.ndarray:
    """Diagonal of W with H(theta + 2 pi turns) = W H(theta) W^dag for the distributed twist."""
    x = np.arange(basis.n_sites) % Lx
    y = np.arange(basis.n_sites) // Lx
    if direction == "x":
        L = Lx
        coord = x
    else:
        L = basis.n_sites // Lx
        coord = y
    total = basis.states.astype(float) @ coord
    return np.exp(2j * math.pi * turns * total / L)
