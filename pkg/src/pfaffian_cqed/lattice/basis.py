"""Fixed-particle-number bosonic Fock basis with a per-site occupancy cap."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import comb

import numpy as np

from ..errors import ParameterError

MAX_DIMENSION = 5_000_000


def capped_composition_count(n_sites: int, n_particles: int, n_max: int) -> int:
    """Number of occupation vectors with entries in [0, n_max] summing to n_particles.

    Inclusion-exclusion over the sites that hold more than n_max bosons.
    """
    total = 0
    for k in range(n_sites + 1):
        rest = n_particles - k * (n_max + 1)
        if rest < 0:
            break
        total += (-1) ** k * comb(n_sites, k) * comb(rest + n_sites - 1, n_sites - 1)
    return total


@lru_cache(maxsize=None)
def _block(n_sites: int, n_particles: int, n_max: int) -> np.ndarray:
    # all capped vectors over n_sites sites, ascending lexicographic order
    if n_sites == 0:
        return np.zeros((1, 0), dtype=np.int8) if n_particles == 0 else np.zeros((0, 0), dtype=np.int8)
    parts = []
    for first in range(min(n_max, n_particles) + 1):
        tail = _block(n_sites - 1, n_particles - first, n_max)
        if tail.shape[0] == 0:
            continue
        head = np.full((tail.shape[0], 1), first, dtype=np.int8)
        parts.append(np.hstack([head, tail]))
    if not parts:
        return np.zeros((0, n_sites), dtype=np.int8)
    return np.vstack(parts)


@dataclass
class FockBasis:
    """Occupation vectors in ascending lexicographic order.

    ``keys`` encodes each vector as a base-(n_max+1) integer, which preserves
    the lexicographic order, so the reverse lookup is a binary search.
    """

    states: np.ndarray
    n_max: int
    keys: np.ndarray

    @property
    def dimension(self) -> int:
        return self.states.shape[0]

    @property
    def n_sites(self) -> int:
        return self.states.shape[1]

    @property
    def n_particles(self) -> int:
        return int(self.states[0].sum()) if self.dimension else 0

    def site_weights(self) -> np.ndarray:
        base = self.n_max + 1
        return base ** np.arange(self.n_sites - 1, -1, -1, dtype=np.int64)

    def encode(self, states) -> np.ndarray:
        return np.asarray(states, dtype=np.int64) @ self.site_weights()

    def lookup(self, keys) -> np.ndarray:
        """Ordinals for encoded vectors; -1 where a key is not in the basis."""
        keys = np.asarray(keys, dtype=np.int64)
        pos = np.searchsorted(self.keys, keys)
        pos_c = np.minimum(pos, self.dimension - 1)
        return np.where(self.keys[pos_c] == keys, pos_c, -1)

    def index(self, state) -> int:
        i = int(self.lookup([self.encode(np.asarray(state)[None, :])[0]])[0])
        if i < 0:
            raise KeyError(tuple(state))
        return i

    def __len__(self):
        return self.dimension


def enumerate_basis(n_sites: int, n_particles: int, n_max: int, *,
                    max_dimension: int = MAX_DIMENSION) -> FockBasis:
    if n_particles < 0 or n_sites < 1 or n_max < 1:
        raise ParameterError("need n_sites >= 1, n_max >= 1 and n_particles >= 0")
    if n_particles > n_max * n_sites:
        raise ParameterError(
            f"{n_particles} particles do not fit on {n_sites} sites with at most {n_max} each")
    if (n_max + 1) ** n_sites >= 2 ** 63:
        raise ParameterError("lattice too large for the integer state encoding")
    dim = capped_composition_count(n_sites, n_particles, n_max)
    if dim > max_dimension:
        raise ParameterError(f"basis dimension {dim} exceeds the limit {max_dimension}")
    states = _block(n_sites, n_particles, n_max).copy()
    basis = FockBasis(states=states, n_max=n_max, keys=np.empty(0, dtype=np.int64))
    basis.keys = basis.encode(states)
    return basis
