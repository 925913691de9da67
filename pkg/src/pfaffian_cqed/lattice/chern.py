"""Many-body Chern number of a degenerate ground manifold over the boundary-twist torus.

Link variables det(<Psi(theta)|Psi(theta + d)>) of the manifold are multiplied
around each plaquette of a twist grid; the plaquette phases sum to 2 pi times an
integer regardless of the gauge chosen at each grid point. Twists are distributed
over the hops, so H(theta + 2 pi) = W H(theta) W^dag and the links that close the
grid use W Psi(0).
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConvergenceError, GapClosedError, ParameterError
from .hamiltonian import LatticeSpec, basis_for, build_structure, twist_unitary_diagonal
from .lanczos import lanczos_lowest

log = logging.getLogger(__name__)

INTEGER_TOLERANCE = 1e-6


@dataclass
class ChernResult:
    total: int
    raw: float
    grid: int
    manifold: int
    curvature: np.ndarray  # plaquette Berry phases, shape (grid, grid), index [i_x, i_y]
    min_gap: float
    per_state: float
    state_chern: list | None = None
    meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "grid": [self.grid, self.grid],
            "manifold": self.manifold,
            "total": self.total,
            "raw_total": self.raw,
            "per_state": self.per_state,
            "state_chern": self.state_chern,
            "min_gap": self.min_gap,
            "curvature": self.curvature.tolist(),
            **self.meta,
        }


def _link(a: np.ndarray, b: np.ndarray) -> complex:
    d = np.linalg.det(a.conj().T @ b)
    if abs(d) < 1e-14:
        raise GapClosedError("vanishing overlap between neighbouring twist points; refine the grid")
    return d / abs(d)


def _solve_row(args):
    spec, manifold, grid, ix, solver = args
    basis = basis_for(spec)
    structure = build_structure(spec, basis)
    thetas = 2 * math.pi * np.arange(grid) / grid
    vecs, energies = [], []
    start = None
    for iy in range(grid):
        mat = structure.assemble(thetas[ix], thetas[iy])
        res = lanczos_lowest(mat, manifold + 1, start=start, **solver)
        vecs.append(res.eigenvectors[:, :manifold])
        energies.append(res.eigenvalues)
        start = res.eigenvectors
    return ix, vecs, energies


def twist_grid_states(spec: LatticeSpec, manifold: int, grid: int, *, workers: int = 1,
                      solver: dict | None = None, min_gap: float = 1e-6):
    """Lowest ``manifold`` eigenvectors at every twist point of a grid x grid mesh."""
    solver = dict(solver or {})
    solver.setdefault("block_size", max(4, manifold + 1))
    solver.setdefault("tol", 1e-9)
    tasks = [(spec, manifold, grid, ix, solver) for ix in range(grid)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_solve_row, tasks))
    else:
        rows = [_solve_row(t) for t in tasks]
    rows.sort(key=lambda r: r[0])
    states = [r[1] for r in rows]
    energies = np.array([r[2] for r in rows])  # (grid, grid, manifold + 1)
    gaps = energies[:, :, manifold] - energies[:, :, manifold - 1]
    worst = np.unravel_index(np.argmin(gaps), gaps.shape)
    if gaps[worst] < min_gap:
        twist = (2 * math.pi * worst[0] / grid, 2 * math.pi * worst[1] / grid)
        raise GapClosedError(
            f"ground manifold gap {gaps[worst]:.2e} at twist (theta_x, theta_y) = "
            f"({twist[0]:.4f}, {twist[1]:.4f})", twist=twist, gap=float(gaps[worst]))
    return states, energies


def chern_from_states(states, wx: np.ndarray, wy: np.ndarray) -> np.ndarray:
    """Plaquette Berry phases from a periodic grid of manifold states."""
    g = len(states)

    def at(i, j):
        v = states[i % g][j % g]
        if i >= g:
            v = wx[:, None] * v
        if j >= g:
            v = wy[:, None] * v
        return v

    flux = np.zeros((g, g))
    for i in range(g):
        for j in range(g):
            u = (_link(at(i, j), at(i + 1, j)) * _link(at(i + 1, j), at(i + 1, j + 1))
                 * np.conj(_link(at(i, j + 1), at(i + 1, j + 1))) * np.conj(_link(at(i, j), at(i, j + 1))))
            flux[i, j] = np.angle(u)
    return flux


def chern_number(spec: LatticeSpec, manifold: int = 3, grid: int = 8, *, workers: int = 1,
                 solver: dict | None = None, min_gap: float = 1e-6,
                 per_state_min_split: float = 1e-6) -> ChernResult:
    """Total Chern number of the lowest ``manifold`` states over (theta_x, theta_y) in [0, 2 pi)^2.

    Raises GapClosedError if the manifold touches the next level anywhere on
    the grid. When the manifold stays split into non-degenerate levels over
    the whole grid, each level's own Chern number is reported too.
    """
    if grid < 2:
        raise ParameterError("twist grid needs at least 2 points per direction")
    if spec.theta_x or spec.theta_y:
        spec = spec.replace(theta_x=0.0, theta_y=0.0)
    states, energies = twist_grid_states(spec, manifold, grid, workers=workers, solver=solver,
                                         min_gap=min_gap)
    basis = basis_for(spec)
    wx = twist_unitary_diagonal(basis, spec.Lx, "x")
    wy = twist_unitary_diagonal(basis, spec.Lx, "y")
    flux = chern_from_states(states, wx, wy)
    raw = float(flux.sum() / (2 * math.pi))
    total = int(round(raw))
    if abs(raw - total) > INTEGER_TOLERANCE:
        raise ConvergenceError(f"Berry flux sum {raw} is not an integer; grid too coarse")

    state_chern = None
    if manifold > 1:
        splits = np.diff(energies[:, :, :manifold], axis=2)
        if np.min(splits) > per_state_min_split:
            state_chern = []
            for s in range(manifold):
                single = [[states[i][j][:, s:s + 1] for j in range(grid)] for i in range(grid)]
                state_chern.append(int(round(chern_from_states(single, wx, wy).sum() / (2 * math.pi))))
    gaps = energies[:, :, manifold] - energies[:, :, manifold - 1]
    return ChernResult(total=total, raw=raw, grid=grid, manifold=manifold, curvature=flux,
                       min_gap=float(gaps.min()), per_state=total / manifold,
                       state_chern=state_chern,
                       meta={"spec": spec.to_dict()})


def chern_with_refinement(spec: LatticeSpec, manifold: int = 3, grid: int = 8, **kwargs):
    """Chern number on ``grid`` and on the doubled grid; both must agree."""
    coarse = chern_number(spec, manifold, grid, **kwargs)
    fine = chern_number(spec, manifold, 2 * grid, **kwargs)
    if coarse.total != fine.total:
        raise ConvergenceError(
            f"Chern number changed under grid doubling: {coarse.total} ({grid}x{grid}) vs "
            f"{fine.total} ({2 * grid}x{2 * grid})")
    return coarse, fine
