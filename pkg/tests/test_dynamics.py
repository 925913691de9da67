import math

import numpy as np
import pytest

from pfaffian_cqed.dynamics import (
    DEFAULT_COUPLING,
    CoupledSpec,
    PopulationTrace,
    bosonic_reference,
    build_coupled_hamiltonian,
    compare_traces,
    evolve,
    j_eff,
    sector_population,
    triple_occupancy,
)
from pfaffian_cqed.errors import ParameterError


@pytest.fixture(scope="module")
def pair(operating_qubit):
    return CoupledSpec(operating_qubit, operating_qubit)


def test_norm_is_conserved(pair):
    trace = evolve(pair, (1, 2))
    assert np.max(np.abs(trace.total() - 1)) < 1e-10


def test_energy_is_conserved(pair):
    system = build_coupled_hamiltonian(pair)
    trace, amps = evolve(pair, (1, 1), system=system, return_states=True)
    energy = np.einsum("ti,ij,tj->t", amps.conj(), system.hamiltonian, amps).real
    assert np.ptp(energy) < 1e-12


def test_hamiltonian_hermitian(pair):
    h = build_coupled_hamiltonian(pair).hamiltonian
    assert np.allclose(h, h.conj().T, atol=1e-15)


def test_mirror_symmetry(pair):
    a = evolve(pair, (1, 0))
    b = evolve(pair, (0, 1))
    assert np.allclose(a[(1, 0)], b[(0, 1)], atol=1e-10)
    assert np.allclose(a[(0, 1)], b[(1, 0)], atol=1e-10)


def test_zero_coupling_freezes_populations(operating_qubit):
    spec = CoupledSpec(operating_qubit, operating_qubit, M=0.0, n_steps=50)
    trace = evolve(spec, (2, 1), times=np.linspace(0, 1e5, 50))
    assert np.allclose(trace[(2, 1)], 1.0)


def test_single_excitation_rabi(pair):
    J = j_eff(pair)
    trace = evolve(pair, (1, 0))
    expected = np.cos(J * trace.times) ** 2
    assert np.max(np.abs(trace[(1, 0)] - expected)) < 1e-2
    assert np.max(trace[(0, 1)]) > 0.999


def test_blockade_keeps_triple_occupancy_small(pair):
    trace = evolve(pair, (1, 2))
    assert np.max(triple_occupancy(trace)) < 1e-7


def test_triple_occupancy_scales_with_coupling_squared(operating_qubit):
    def peak(M):
        spec = CoupledSpec(operating_qubit, operating_qubit, M=M, n_steps=20000)
        return np.max(triple_occupancy(evolve(spec, (1, 2))))
    ratio = peak(2 * DEFAULT_COUPLING) / peak(DEFAULT_COUPLING)
    assert ratio == pytest.approx(4.0, rel=0.05)


def test_reference_single_excitation_is_cosine():
    t = np.linspace(0, 10, 101)
    ref = bosonic_reference(0.3, 0.7, (1, 0), t)
    assert np.allclose(ref[(1, 0)], np.cos(0.3 * t) ** 2, atol=1e-12)


def test_reference_two_photon_interference():
    # U2 = 0: |1,1> returns as cos^2(2 J t)
    t = np.linspace(0, 10, 101)
    ref = bosonic_reference(0.25, 0.0, (1, 1), t)
    assert np.allclose(ref[(1, 1)], np.cos(2 * 0.25 * t) ** 2, atol=1e-12)


def test_reference_cap():
    t = np.linspace(0, 1, 5)
    assert (3, 0) not in bosonic_reference(1.0, 0.0, (2, 1), t).labels
    assert (3, 0) in bosonic_reference(1.0, 0.0, (2, 1), t, U3=1.0).labels
    with pytest.raises(ParameterError):
        bosonic_reference(1.0, 0.0, (3, 0), t)


def test_compare_traces_missing_label_counts_as_zero():
    t = np.array([0.0, 1.0])
    a = PopulationTrace(t, [(1, 0), (0, 1)], np.array([[1.0, 0.0], [0.5, 0.5]]))
    b = PopulationTrace(t, [(1, 0)], np.array([[1.0], [0.5]]))
    cmp = compare_traces(a, b)
    assert cmp.max_deviation[(0, 1)] == pytest.approx(0.5)
    assert cmp.overall_max == pytest.approx(0.5)


def test_sector_population(pair):
    trace = evolve(pair, (1, 1))
    two = sector_population(trace, 2)
    assert np.allclose(two, 1.0, atol=1e-6)


def test_invalid_specs(operating_qubit):
    with pytest.raises(ParameterError):
        CoupledSpec(operating_qubit, operating_qubit, M=math.nan)
    with pytest.raises(ParameterError):
        CoupledSpec(operating_qubit, operating_qubit, levels_per_qubit=3)
    with pytest.raises(ParameterError):
        evolve(CoupledSpec(operating_qubit, operating_qubit), (6, 0))
