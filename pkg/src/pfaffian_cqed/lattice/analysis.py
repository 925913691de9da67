"""Ground-manifold clustering, the gap-to-spread order parameter and local correlators."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ParameterError
from .basis import FockBasis

LAMBDA_CAP = 1e12
CLUSTER_RATIO = 5.0


@dataclass
class DegeneracyInfo:
    expected_manifold: int
    cluster_size: int  # levels below the widest spacing; compare with expected_manifold
    spread: float      # E_m - E_1
    gap: float         # E_{m+1} - E_m
    lambda_order: float
    clusters: list

    @property
    def consistent(self) -> bool:
        return self.cluster_size == self.expected_manifold

    @property
    def clean(self) -> bool:
        """Spread below gap / CLUSTER_RATIO."""
        return self.lambda_order > CLUSTER_RATIO

    def to_dict(self) -> dict:
        return {"expected_manifold": self.expected_manifold, "cluster_size": self.cluster_size,
                "spread": self.spread, "gap": self.gap, "lambda": self.lambda_order,
                "clean": self.clean}


def order_parameter(spread: float, gap: float, eps: float = 1e-12) -> float:
    """gap / spread, capped at LAMBDA_CAP when the manifold is exactly degenerate."""
    if spread <= eps:
        return LAMBDA_CAP
    return min(gap / spread, LAMBDA_CAP)


def _split_at_largest_spacing(e: np.ndarray) -> list:
    # the ground cluster ends at the widest spacing among the supplied levels;
    # ties go to the lowest index
    steps = np.diff(e)
    m = int(np.argmax(steps)) + 1
    return [list(range(m)), list(range(m, e.size))]


def detect_degeneracy(eigenvalues, expected_manifold: int = 3, *,
                      eps: float = 1e-12) -> DegeneracyInfo:
    """Spread E_m - E_1, gap E_{m+1} - E_m and lambda = gap / spread for an m-fold manifold.

    Indices are 1-based as in lambda = (E_4 - E_3)/(E_3 - E_1) for m = 3. As a
    cross-check the cluster is also located independently, ending at the widest
    spacing among the supplied levels; ``consistent`` compares the two.
    ``lambda > CLUSTER_RATIO`` is what counts as a clean cluster.
    """
    e = np.sort(np.asarray(eigenvalues, dtype=float))
    m = expected_manifold
    if m < 1:
        raise ParameterError("expected_manifold must be >= 1")
    if e.size < m + 1:
        raise ParameterError(f"need at least {m + 1} eigenvalues, got {e.size}")
    spread = float(e[m - 1] - e[0])
    gap = float(e[m] - e[m - 1])
    clusters = _split_at_largest_spacing(e)
    return DegeneracyInfo(m, len(clusters[0]), spread, gap, order_parameter(spread, gap, eps),
                          clusters)


@dataclass
class Diagnostics:
    density: np.ndarray  # site-resolved, averaged over the manifold
    g2: float            # site average of <a^dag^2 a^2> = <n(n-1)>
    g3: float            # site average of <a^dag^3 a^3> = <n(n-1)(n-2)>
    density_spread: float


def pair_pfaffian_diagnostics(result, basis: FockBasis, manifold: int | None = None) -> Diagnostics:
    """Density and local two-/three-body correlators averaged over the lowest ``manifold`` states.

    Averaging over the whole manifold makes the numbers independent of how a
    degenerate subspace was rotated by the eigensolver.
    """
    vecs = getattr(result, "eigenvectors", None)
    if vecs is None:
        raise ParameterError("eigenvectors were not retained")
    vecs = np.asarray(vecs)
    if vecs.ndim == 1:
        vecs = vecs[:, None]
    manifold = vecs.shape[1] if manifold is None else manifold
    weights = np.sum(np.abs(vecs[:, :manifold]) ** 2, axis=1) / manifold
    n = basis.states.astype(float)
    density = weights @ n
    g2 = float(np.mean(weights @ (n * (n - 1))))
    g3 = float(np.mean(weights @ (n * (n - 1) * (n - 2))))
    return Diagnostics(density, g2, g3, float(np.max(density) - np.min(density)))
