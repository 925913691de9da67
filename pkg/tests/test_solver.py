import numpy as np
import pytest
import scipy.sparse as sp

from pfaffian_cqed.errors import ParameterError
from pfaffian_cqed.lattice import LatticeSpec, basis_for, capped_composition_count, build_hamiltonian, dense_lowest, lanczos_lowest
from pfaffian_cqed.lattice.analysis import detect_degeneracy, order_parameter, pair_pfaffian_diagnostics, LAMBDA_CAP


def random_small_spec(rng):
    while True:
        alpha = float(rng.choice([0.0, 0.25, 1 / 3]))
        Lx, Ly = (int(v) for v in rng.choice([2, 3, 4, 6], size=2))
        if abs(alpha * Lx * Ly - round(alpha * Lx * Ly)) > 1e-9:
            continue
        N = int(rng.integers(1, 4))
        hard = bool(rng.integers(0, 2))
        try:
            spec = LatticeSpec(Lx=Lx, Ly=Ly, alpha=alpha, N=N, scheme=str(rng.choice(["NN", "NNN", "long-range"])),
                               U2=float(rng.uniform(0, 3)), U3=None if hard else float(rng.uniform(1, 20)),
                               theta_x=float(rng.uniform(0, 2 * np.pi)),
                               theta_y=float(rng.uniform(0, 2 * np.pi)),
                               R=1 if min(Lx, Ly) < 4 else None)
        except ParameterError:
            continue
        if 20 < capped_composition_count(spec.n_sites, spec.N, spec.n_max) <= 500:
            return spec


def test_lanczos_matches_dense_on_random_configurations():
    rng = np.random.default_rng(7)
    for _ in range(20):
        spec = random_small_spec(rng)
        ham = build_hamiltonian(spec)
        k = min(6, ham.dimension - 1)
        ours = lanczos_lowest(ham, k, tol=1e-11).eigenvalues
        ref = dense_lowest(ham, k)
        assert np.max(np.abs(ours - ref)) < 1e-9, spec


def test_exact_degeneracy_resolved():
    # one particle on the 4 x 4 torus at quarter flux has fourfold levels;
    # adding a distinct offset per copy keeps every level exactly fourfold
    ham = build_hamiltonian(LatticeSpec(N=1, n_max=1))
    offsets = sp.diags(np.linspace(0.0, 0.9, 10))
    mat = (sp.kron(ham.matrix, sp.eye(10)) + sp.kron(sp.eye(16), offsets)).tocsr()
    res = lanczos_lowest(mat, 12, block_size=4)
    ref = dense_lowest(mat, 12)
    assert np.allclose(res.eigenvalues, ref, atol=1e-9)
    assert np.allclose(res.eigenvalues[:4], res.eigenvalues[0], atol=1e-9)


def test_residuals_and_vectors():
    ham = build_hamiltonian(LatticeSpec(Lx=4, Ly=3, alpha=0.25, N=3, scheme="NNN"))
    res = lanczos_lowest(ham, 5, tol=1e-10)
    v = res.eigenvectors
    assert np.allclose(v.conj().T @ v, np.eye(5), atol=1e-10)
    r = ham.matrix @ v - v * res.eigenvalues
    assert np.max(np.linalg.norm(r, axis=0)) < 1e-8


def test_seed_determinism():
    ham = build_hamiltonian(LatticeSpec(Lx=4, Ly=3, alpha=0.25, N=3))
    a = lanczos_lowest(ham, 4, seed=3).eigenvalues
    b = lanczos_lowest(ham, 4, seed=3).eigenvalues
    assert np.array_equal(a, b)


def test_bad_requests():
    ham = build_hamiltonian(LatticeSpec(Lx=2, Ly=2, alpha=0.0, N=1, n_max=1))
    with pytest.raises(ParameterError):
        lanczos_lowest(ham, 10)
    with pytest.raises(ParameterError):
        lanczos_lowest(ham, 0)


# -- degeneracy analysis -------------------------------------------------------

def test_degeneracy_threefold():
    d = detect_degeneracy([0.0, 0.0, 0.01, 0.06, 0.06], 3)
    assert d.spread == pytest.approx(0.01)
    assert d.gap == pytest.approx(0.05)
    assert d.lambda_order == pytest.approx(5.0)
    assert d.cluster_size == 3


def test_degeneracy_exact_is_capped():
    d = detect_degeneracy([1.0, 1.0, 1.0, 2.0], 3)
    assert d.lambda_order == LAMBDA_CAP
    assert order_parameter(0.0, 0.3) == LAMBDA_CAP


def test_degeneracy_gapless():
    d = detect_degeneracy([0.0, 0.1, 0.2, 0.3, 0.4], 3)
    assert d.lambda_order == pytest.approx(0.5)
    assert not d.consistent


def test_degeneracy_needs_enough_levels():
    with pytest.raises(ParameterError):
        detect_degeneracy([0.0, 0.0, 0.0], 3)


def test_diagnostics_uniform_density_without_flux():
    spec = LatticeSpec(Lx=4, Ly=4, alpha=0.0, N=4)
    basis = basis_for(spec)
    res = lanczos_lowest(build_hamiltonian(spec, basis), 1)
    diag = pair_pfaffian_diagnostics(res, basis, 1)
    assert np.allclose(diag.density, 0.25, atol=1e-8)
    assert diag.g3 == 0.0
    assert diag.g2 > 0


def test_diagnostics_need_vectors():
    spec = LatticeSpec(Lx=2, Ly=2, alpha=0.0, N=1, n_max=1)
    res = lanczos_lowest(build_hamiltonian(spec), 1, return_vectors=False)
    with pytest.raises(ParameterError):
        pair_pfaffian_diagnostics(res, basis_for(spec))
