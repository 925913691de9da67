"""Parameter scans behind the interaction maps, the scheme comparison and the order-parameter map."""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError
from .lattice.analysis import DegeneracyInfo, detect_degeneracy
from .lattice.hamiltonian import LatticeSpec, basis_for, build_hamiltonian
from .lattice.lanczos import EDResult, lanczos_lowest
from .qubit import EffectiveModel, sweep_U2_U3, zero_U2_contour

TARGETS = ("fig2_map", "fig4a_schemes", "fig4b_order", "feasibility")
GAPPED_LAMBDA = 5.0
FEASIBLE_RATIO = 60.0
MIN_J_MHZ = 10.0
ORDER_MAP_SCHEME = "NNN"

DEFAULT_U2_GRID = tuple(float(u) for u in np.linspace(0.0, 10.0, 11))
DEFAULT_U3_GRID = tuple(float(u) for u in np.logspace(0.0, 2.0, 13))


@dataclass
class SweepPlan:
    target: str
    axes: dict = field(default_factory=dict)
    fixed: dict = field(default_factory=dict)
    output: str | None = None

    def __post_init__(self):
        if self.target not in TARGETS:
            raise ParameterError(f"unknown sweep target {self.target!r}; expected one of {TARGETS}")
        for name, grid in self.axes.items():
            if len(grid) == 0:
                raise ParameterError(f"axis {name!r} is empty")


def reference_lattice(scheme: str = "NN") -> LatticeSpec:
    """4 bosons on a 4x4 torus at alpha = 1/4 with the three-body hard core."""
    return LatticeSpec(Lx=4, Ly=4, alpha=0.25, N=4, n_max=2, U3=None, scheme=scheme)


def solve_lattice(spec: LatticeSpec, k: int = 13, *, manifold: int = 3, seed: int = 12345,
                  tol: float = 1e-10, block_size: int = 4, return_vectors: bool = False,
                  basis=None) -> EDResult:
    basis = basis if basis is not None else basis_for(spec)
    ham = build_hamiltonian(spec, basis)
    res = lanczos_lowest(ham, min(k, basis.dimension), tol=tol, block_size=block_size,
                         seed=seed, return_vectors=return_vectors)
    if res.eigenvalues.size > manifold:
        res.degeneracy = detect_degeneracy(res.eigenvalues, manifold)
    return res


def run_fig4a(base: LatticeSpec | None = None, *, k: int = 13, seed: int = 12345,
              tol: float = 1e-10, schemes=("NN", "NNN", "long-range")) -> dict:
    """Lowest ``k`` levels for each hopping scheme on one shared basis and solver seed."""
    base = base or reference_lattice()
    basis = basis_for(base)
    out = {}
    for scheme in schemes:
        spec = base.replace(scheme=scheme)
        out[spec.scheme] = solve_lattice(spec, k, seed=seed, tol=tol, basis=basis)
    return out


@dataclass
class OrderCell:
    index: int
    U2: float
    U3: float
    lambda_order: float
    gap: float
    spread: float
    eigenvalues: list


def order_cell(args) -> OrderCell:
    index, base, u2, u3, seed, tol = args
    spec = base.replace(U2=float(u2), U3=float(u3), n_max=max(base.n_max or 3, 3))
    res = solve_lattice(spec, 4, seed=seed, tol=tol)
    d: DegeneracyInfo = res.degeneracy
    return OrderCell(index, float(u2), float(u3), d.lambda_order, d.gap, d.spread,
                     [float(e) for e in res.eigenvalues])


def run_fig4b(U2_grid=DEFAULT_U2_GRID, U3_grid=DEFAULT_U3_GRID, base: LatticeSpec | None = None,
              *, workers: int = 1, seed: int = 12345, tol: float = 1e-10) -> list[OrderCell]:
    """lambda over the (U2, U3) grid with soft three-body interaction (n_max = 3), U2-major order.

    The default base uses NNN hopping: with NN alone the hard-core point itself
    has lambda below GAPPED_LAMBDA, so no finite U3 can reach the gapped regime.
    """
    base = base or reference_lattice(ORDER_MAP_SCHEME)
    U2_grid = [float(u) for u in U2_grid]
    U3_grid = [float(u) for u in U3_grid]
    if not U2_grid or not U3_grid:
        raise ParameterError("order-parameter grids must be non-empty")
    tasks = [(i, base, u2, u3, seed, tol)
             for i, (u2, u3) in enumerate((a, b) for a in U2_grid for b in U3_grid)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            cells = list(pool.map(order_cell, tasks))
    else:
        cells = [order_cell(t) for t in tasks]
    return sorted(cells, key=lambda c: c.index)


def hardcore_lambda(base: LatticeSpec | None = None, *, seed: int = 12345, tol: float = 1e-10) -> float:
    base = base or reference_lattice(ORDER_MAP_SCHEME)
    spec = base.replace(U3=None, U2=0.0)
    return solve_lattice(spec, 4, seed=seed, tol=tol).degeneracy.lambda_order


def monotonic_trends(cells: list[OrderCell], *, fixed_U3: float | None = None, rel_tol: float = 1e-9) -> dict:
    """Check lambda is non-increasing in U2 at the largest (or given) U3 and
    non-decreasing in U3 at the smallest U2. Reported, not enforced."""
    u3_fix = max(c.U3 for c in cells) if fixed_U3 is None else fixed_U3
    along_u2 = [c.lambda_order for c in sorted(cells, key=lambda c: c.U2)
                if math.isclose(c.U3, u3_fix, rel_tol=1e-12)]
    u2_min = min(c.U2 for c in cells)
    along_u3 = [c.lambda_order for c in sorted(cells, key=lambda c: c.U3)
                if math.isclose(c.U2, u2_min, rel_tol=0, abs_tol=1e-12)]

    def nonincreasing(v):
        return all(b <= a * (1 + rel_tol) + 1e-12 for a, b in zip(v, v[1:]))

    return {
        "fixed_U3": u3_fix, "lambda_along_U2": along_u2,
        "decreasing_in_U2": nonincreasing(along_u2),
        "fixed_U2": u2_min, "lambda_along_U3": along_u3,
        "increasing_in_U3": nonincreasing(along_u3[::-1]),
    }


@dataclass
class FeasibilityRow:
    EJ_GHz: float
    U3_over_EJ: float
    U3_MHz: float
    J_MHz: float
    ratio: float
    ratio_ok: bool
    J_ok: bool
    few_hundred_MHz: bool

    @property
    def feasible(self) -> bool:
        return self.ratio_ok and self.J_ok


def feasibility_report(model: EffectiveModel, J_MHz: float = MIN_J_MHZ,
                       EJ_GHz=(10.0, 20.0, 30.0, 40.0, 50.0), *,
                       threshold: float = FEASIBLE_RATIO, min_J_MHz: float = MIN_J_MHZ
                       ) -> list[FeasibilityRow]:
    """U3/J for a qubit design across Josephson energies of tens of GHz.

    Frequencies are ordinary (divided by 2 pi): J_MHz = 10 stands for
    J = 2 pi x 10 MHz. A vanishing J gives an infinite ratio and fails the
    coherence requirement J >= min_J_MHz.
    """
    rows = []
    for ej in EJ_GHz:
        u3_mhz = model.U3 * float(ej) * 1e3
        ratio = u3_mhz / J_MHz if J_MHz > 0 else math.inf
        rows.append(FeasibilityRow(
            EJ_GHz=float(ej), U3_over_EJ=model.U3, U3_MHz=u3_mhz, J_MHz=float(J_MHz),
            ratio=ratio, ratio_ok=ratio >= threshold * (1 - 1e-12),
            J_ok=J_MHz >= min_J_MHz * (1 - 1e-12), few_hundred_MHz=100.0 <= u3_mhz < 1000.0))
    return rows


def run_fig2(Ec: float, EL_grid, phi_grid, *, basis_size: int = 80, workers: int = 1):
    """Interaction map rows plus the U2 = 0 contour over the same EL grid."""
    table = sweep_U2_U3(Ec, EL_grid, phi_grid, basis_size=basis_size, workers=workers)
    window = (float(min(phi_grid)), float(max(phi_grid)))
    contour = zero_U2_contour(Ec, EL_grid, window, basis_size=basis_size)
    return table, contour


def reproduce_cell(cell: OrderCell, base: LatticeSpec | None = None, *, seed: int = 12345,
                   tol: float = 1e-10) -> float:
    """Recompute lambda for one recorded cell in isolation."""
    return order_cell((cell.index, base or reference_lattice(ORDER_MAP_SCHEME), cell.U2, cell.U3, seed, tol)).lambda_order


__all__ = [
    "SweepPlan", "reference_lattice", "solve_lattice", "run_fig4a", "run_fig4b", "hardcore_lambda",
    "feasibility_report", "run_fig2", "reproduce_cell", "OrderCell", "FeasibilityRow",
    "order_cell", "monotonic_trends", "ORDER_MAP_SCHEME",
]
