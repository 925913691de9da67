import math

import numpy as np
import pytest

from pfaffian_cqed.errors import NoRootError, ParameterError
from pfaffian_cqed.qubit import (
    QubitParams,
    build_qubit_hamiltonian,
    check_convergence,
    diagonalize_qubit,
    effective_model,
    extract_effective_model,
    find_zero_U2,
    ladder_leakage,
    ladder_ratios,
    optimal_operating_point,
    phi_operator,
    sweep_U2_U3,
)


def test_harmonic_limit_is_exact():
    p = QubitParams(Ec=0.05, EL=1.4, phi_x=1.3, EJ=0.0)
    m = effective_model(p)
    assert m.omega0 == pytest.approx(math.sqrt(8 * 0.05 * 1.4), rel=1e-12)
    assert abs(m.U2) < 1e-12 and abs(m.U3) < 1e-12


def test_hamiltonian_is_real_symmetric():
    h = build_qubit_hamiltonian(QubitParams(0.05, 1.4, 2.68))
    assert np.allclose(h, h.T.conj(), atol=1e-13)
    assert np.isrealobj(h) or np.max(np.abs(h.imag)) < 1e-13


def test_phi_operator_matches_ladder_definition():
    p = QubitParams(0.05, 1.4, 0.0, basis_size=30)
    phi = phi_operator(p)
    a = np.diag(np.sqrt(np.arange(1, 30)), 1)
    expected = p.phi_zpf * (a + a.T) / math.sqrt(2)
    assert np.allclose(phi, expected)


def test_flux_periodicity_and_parity():
    base = effective_model(QubitParams(0.05, 1.4, 2.3))
    shifted = effective_model(QubitParams(0.05, 1.4, 2.3 + 2 * math.pi))
    mirrored = effective_model(QubitParams(0.05, 1.4, -2.3))
    # flux enters only through cos(phi + phi_x); phi -> -phi maps phi_x -> -phi_x
    for other in (shifted, mirrored):
        assert other.omega0 == pytest.approx(base.omega0, abs=1e-10)
        assert other.U2 == pytest.approx(base.U2, abs=1e-10)
        assert other.U3 == pytest.approx(base.U3, abs=1e-10)


def test_ladder_gauge_is_positive(operating_qubit):
    spec = diagonalize_qubit(operating_qubit)
    assert np.all(np.diag(spec.phi_elements, 1) >= 0)
    assert np.allclose(spec.phi_elements, spec.phi_elements.T.conj())


def test_converged_at_default_basis(operating_qubit):
    assert check_convergence(operating_qubit, levels=4)


def test_too_many_levels_rejected():
    with pytest.raises(ParameterError):
        diagonalize_qubit(QubitParams(0.05, 1.4, 2.68, basis_size=20), m=8)


def test_invalid_parameters():
    with pytest.raises(ParameterError):
        QubitParams(-0.05, 1.4, 2.68)
    with pytest.raises(ParameterError):
        QubitParams(0.05, 1.4, 2.68, basis_size=5)


def test_model_round_trip(operating_qubit):
    spec = diagonalize_qubit(operating_qubit, m=4)
    m = extract_effective_model(spec)
    e = spec.energies[:4] - spec.energies[0]
    assert np.allclose(m.level_energies()[:4], e, atol=1e-12)


def test_root_at_operating_point():
    r = find_zero_U2(0.05, 1.4)
    assert r.phi_x == pytest.approx(2.6828538525, abs=1e-8)
    assert abs(r.model.U2) < 1e-12
    assert r.model.U3 == pytest.approx(0.0172521, rel=1e-4)
    assert not r.flagged


def test_no_sign_change_raises():
    with pytest.raises(NoRootError):
        find_zero_U2(0.05, 1.4, (0.0, 0.5))


def test_flat_U2_is_flagged():
    r = find_zero_U2(0.05, 1.4, EJ=0.0)
    assert r.flagged and r.phi_x == pytest.approx(2.6)


def test_leakage_and_ratios(operating_qubit):
    spec = diagonalize_qubit(operating_qubit)
    assert ladder_leakage(spec) == pytest.approx(0.0964, abs=1e-3)
    assert ladder_ratios(spec)[0] == pytest.approx(1.0)
    harmonic = diagonalize_qubit(QubitParams(0.05, 1.4, 0.0, EJ=0.0))
    assert ladder_leakage(harmonic) < 1e-10
    assert np.allclose(ladder_ratios(harmonic), 1.0, atol=1e-10)


def test_sweep_rows_and_failures_recorded():
    rows = sweep_U2_U3(0.05, [1.0, 1.4], [2.5, 2.7])
    assert [r[:2] for r in rows] == [(1.0, 2.5), (1.0, 2.7), (1.4, 2.5), (1.4, 2.7)]
    assert all(r[5] == "" for r in rows)
    with pytest.raises(ParameterError):
        sweep_U2_U3(0.05, [1.4, 1.0], [2.5])


def test_sweep_is_worker_independent():
    a = sweep_U2_U3(0.05, [1.2, 1.4], [2.6, 2.7], workers=1)
    b = sweep_U2_U3(0.05, [1.2, 1.4], [2.6, 2.7], workers=2)
    assert a == b


@pytest.mark.slow
def test_optimal_point_respects_leakage_bound():
    op = optimal_operating_point(tol=5e-3)
    assert op.leakage <= 0.1 + 1e-6
    assert 1.2 < op.EL < 1.6
    assert abs(op.model.U2) < 1e-10


def test_zero_flux_is_parity_block_diagonal():
    h = build_qubit_hamiltonian(QubitParams(0.05, 1.4, 0.0, basis_size=40))
    idx = np.arange(40)
    assert np.max(np.abs(h[np.ix_(idx % 2 == 0, idx % 2 == 1)])) < 1e-13
