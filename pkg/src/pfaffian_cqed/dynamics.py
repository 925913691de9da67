"""Two inductively coupled fluxonium qubits versus a two-mode bosonic model.

Qubit eigenlevels play the role of Fock states: the product label ``(n1, n2)``
is eigenlevel ``n1`` of the left qubit times eigenlevel ``n2`` of the right one.
The coupling ``M phi1 phi2`` is kept in full (no rotating-wave reduction).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .qubit import QubitParams, diagonalize_qubit, extract_effective_model

# weak enough that (1,2) -> (3,0)/(0,3) stays below 1e-7 at the reference operating point
DEFAULT_COUPLING = 3e-6
LEAKAGE_WARN = 1e-9  # perturbative population in discarded levels


@dataclass
class CoupledSpec:
    left: QubitParams
    right: QubitParams
    M: float = DEFAULT_COUPLING
    levels_per_qubit: int = 6
    t_max: float | None = None  # defaults to 20 / J_eff
    n_steps: int = 2000

    def __post_init__(self):
        if not math.isfinite(self.M):
            raise ParameterError(f"M must be a finite real number, got {self.M}")
        if self.levels_per_qubit < 4:
            raise ParameterError("levels_per_qubit must be >= 4 to resolve triple occupancy")
        if self.n_steps < 2:
            raise ParameterError("n_steps must be >= 2")
        if self.t_max is not None and self.t_max <= 0:
            raise ParameterError("t_max must be positive")


@dataclass
class PopulationTrace:
    """Populations sampled on ``times``; column ``k`` belongs to ``labels[k]``."""

    times: np.ndarray
    labels: list
    populations: np.ndarray

    def __getitem__(self, label) -> np.ndarray:
        return self.populations[:, self.labels.index(tuple(label))]

    def get(self, label) -> np.ndarray:
        label = tuple(label)
        if label in self.labels:
            return self[label]
        return np.zeros_like(self.times, dtype=float)

    def total(self) -> np.ndarray:
        return self.populations.sum(axis=1)

    def as_dict(self) -> dict:
        return {lab: self.populations[:, k] for k, lab in enumerate(self.labels)}


@dataclass
class CoupledSystem:
    """Coupled Hamiltonian together with the single-qubit data it was built from."""

    hamiltonian: np.ndarray
    labels: list
    left_energies: np.ndarray
    right_energies: np.ndarray
    left_phi: np.ndarray
    right_phi: np.ndarray
    leakage_estimate: float


def _qubit_data(params: QubitParams, levels: int):
    # two spare levels so coupling into the truncated-away part can be estimated
    m = levels + 2
    spec = diagonalize_qubit(params, m=max(m, 4))
    return spec


def build_coupled_hamiltonian(spec: CoupledSpec) -> CoupledSystem:
    """H = E1 (x) 1 + 1 (x) E2 + M phi1 (x) phi2 on the truncated product eigenbasis."""
    L = spec.levels_per_qubit
    left = _qubit_data(spec.left, L)
    right = _qubit_data(spec.right, L)
    e1 = left.energies[:L] - left.energies[0]
    e2 = right.energies[:L] - right.energies[0]
    p1 = left.phi_elements[:L, :L]
    p2 = right.phi_elements[:L, :L]
    eye = np.eye(L)
    ham = (np.kron(np.diag(e1), eye) + np.kron(eye, np.diag(e2))
           + spec.M * np.kron(p1, p2))
    labels = [(a, b) for a in range(L) for b in range(L)]

    # levels up to 3 carry the physics; their coupling into discarded levels
    reach = min(4, L)
    cut1 = np.max(np.abs(left.phi_elements[:reach, L:])) if left.phi_elements.shape[0] > L else 0.0
    cut2 = np.max(np.abs(right.phi_elements[:reach, L:])) if right.phi_elements.shape[0] > L else 0.0
    leak = float(max(cut1 * np.max(np.abs(p2)), cut2 * np.max(np.abs(p1))))
    # the discarded levels sit at least one level spacing away
    spacing = min(left.energies[L] - left.energies[L - 1], right.energies[L] - right.energies[L - 1])
    estimate = (spec.M * leak / spacing) ** 2
    if estimate > LEAKAGE_WARN:
        warnings.warn(
            f"levels_per_qubit={L}: coupling into truncated levels is {leak:.2e} M, "
            f"estimated leaked population {estimate:.1e}", RuntimeWarning)
    return CoupledSystem(ham, labels, e1, e2, p1, p2, leak)


def j_eff(spec: CoupledSpec) -> float:
    """Leading-order hopping M |<0|phi|1>_1| |<0|phi|1>_2|."""
    p1 = diagonalize_qubit(spec.left, m=4).phi_elements
    p2 = diagonalize_qubit(spec.right, m=4).phi_elements
    return abs(spec.M) * abs(p1[0, 1]) * abs(p2[0, 1])


def reference_U2(spec: CoupledSpec) -> float:
    u_left = extract_effective_model(diagonalize_qubit(spec.left, m=4)).U2
    u_right = extract_effective_model(diagonalize_qubit(spec.right, m=4)).U2
    return 0.5 * (u_left + u_right)


def default_times(spec: CoupledSpec) -> np.ndarray:
    t_max = spec.t_max
    if t_max is None:
        J = j_eff(spec)
        if J == 0:
            raise ParameterError("t_max must be given when the coupling vanishes")
        t_max = 20.0 / J
    return np.linspace(0.0, t_max, spec.n_steps)


def _evolve_amplitudes(ham: np.ndarray, psi0: np.ndarray, times: np.ndarray) -> np.ndarray:
    """Exact propagation through the full eigendecomposition; rows are times."""
    w, v = np.linalg.eigh(ham)
    c = v.conj().T @ psi0
    phases = np.exp(-1j * np.outer(times, w - w[0]))
    return (phases * c) @ v.T


def evolve(spec: CoupledSpec, initial, times=None, *, system: CoupledSystem | None = None,
           return_states: bool = False):
    """Evolve product state ``initial=(n1, n2)`` and record product-label populations."""
    L = spec.levels_per_qubit
    n1, n2 = initial
    if not (0 <= n1 < L and 0 <= n2 < L):
        raise ParameterError(f"initial state {initial} outside truncation {L}x{L}")
    system = system or build_coupled_hamiltonian(spec)
    times = default_times(spec) if times is None else np.asarray(times, dtype=float)
    psi0 = np.zeros(L * L, dtype=complex)
    psi0[n1 * L + n2] = 1.0
    amps = _evolve_amplitudes(system.hamiltonian, psi0, times)
    trace = PopulationTrace(times, list(system.labels), np.abs(amps) ** 2)
    if return_states:
        return trace, amps
    return trace


def bosonic_reference(J_eff: float, U2: float, initial, times, U3: float | None = None
                      ) -> PopulationTrace:
    """Two bosonic modes, -J (a1^dag a2 + h.c.) + U2/2 sum n(n-1) (+ U3/6 sum n(n-1)(n-2)).

    ``U3=None`` is the three-body hard core: each mode holds at most two
    excitations. A finite ``U3`` allows three.
    """
    cap = 2 if U3 is None else 3
    total = sum(initial)
    labels = [(a, total - a) for a in range(total, -1, -1)
              if a <= cap and total - a <= cap]
    if tuple(initial) not in labels:
        raise ParameterError(f"initial state {initial} outside the capped space (cap={cap})")
    index = {lab: k for k, lab in enumerate(labels)}
    ham = np.zeros((len(labels), len(labels)))
    for lab, k in index.items():
        a, b = lab
        ham[k, k] = 0.5 * U2 * (a * (a - 1) + b * (b - 1))
        if U3 is not None:
            ham[k, k] += U3 / 6.0 * (a * (a - 1) * (a - 2) + b * (b - 1) * (b - 2))
        # a1^dag a2 moves one excitation from mode 2 to mode 1
        target = (a + 1, b - 1)
        if b > 0 and target in index:
            amp = -J_eff * math.sqrt(b * (a + 1))
            ham[index[target], k] += amp
            ham[k, index[target]] += amp
    times = np.asarray(times, dtype=float)
    psi0 = np.zeros(len(labels), dtype=complex)
    psi0[index[tuple(initial)]] = 1.0
    amps = _evolve_amplitudes(ham, psi0, times)
    return PopulationTrace(times, labels, np.abs(amps) ** 2)


@dataclass
class TraceComparison:
    max_deviation: dict
    rms_deviation: dict
    overall_max: float


def compare_traces(a: PopulationTrace, b: PopulationTrace, labels=None) -> TraceComparison:
    """Pointwise population differences; a label missing from one trace counts as zero population."""
    if a.times.shape != b.times.shape or not np.allclose(a.times, b.times, rtol=0, atol=1e-12):
        raise ParameterError("traces are sampled on different time grids")
    if labels is None:
        labels = list(dict.fromkeys(list(a.labels) + list(b.labels)))
    max_dev, rms_dev = {}, {}
    for lab in labels:
        diff = a.get(lab) - b.get(lab)
        max_dev[tuple(lab)] = float(np.max(np.abs(diff)))
        rms_dev[tuple(lab)] = float(np.sqrt(np.mean(diff ** 2)))
    overall = max(max_dev.values()) if max_dev else 0.0
    return TraceComparison(max_dev, rms_dev, overall)


def triple_occupancy(trace: PopulationTrace) -> np.ndarray:
    """Total population with three or more excitations on one qubit."""
    cols = [k for k, (n1, n2) in enumerate(trace.labels) if n1 >= 3 or n2 >= 3]
    return trace.populations[:, cols].sum(axis=1)


def sector_population(trace: PopulationTrace, excitations: int, max_per_site=None) -> np.ndarray:
    cols = [k for k, (n1, n2) in enumerate(trace.labels)
            if n1 + n2 == excitations and (max_per_site is None or max(n1, n2) <= max_per_site)]
    return trace.populations[:, cols].sum(axis=1)
