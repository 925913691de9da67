"""Fluxonium spectrum in the oscillator basis and the effective three-level-interaction model.

All energies are in units of the Josephson energy E_J. The circuit Hamiltonian is

    H = 4 Ec n^2 + EL phi^2 / 2 - EJ cos(phi + phi_x)

written in the Fock basis of its quadratic part, where
phi = s (a + a^dag) / sqrt(2) and n = i (a^dag - a) / (sqrt(2) s) with s = (8 Ec / EL)^(1/4).
The quadratic part is then sqrt(8 Ec EL) (a^dag a + 1/2).
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh, eigh_tridiagonal
from scipy.optimize import brentq

from .errors import ConvergenceError, NoRootError, ParameterError

DEFAULT_BASIS = 80
U2_TOLERANCE = 5e-4


@dataclass(frozen=True)
class QubitParams:
    """Circuit energies in units of E_J plus the external flux (radians).

    ``EJ`` is kept as a field so the harmonic limit ``EJ=0`` can be expressed;
    everything else is measured relative to the unit Josephson energy.
    """

    Ec: float
    EL: float
    phi_x: float
    EJ: float = 1.0
    basis_size: int = DEFAULT_BASIS

    def __post_init__(self):
        if not (self.Ec > 0):
            raise ParameterError(f"Ec must be positive, got {self.Ec}")
        if not (self.EL > 0):
            raise ParameterError(f"EL must be positive, got {self.EL}")
        if self.EJ < 0:
            raise ParameterError(f"EJ must be non-negative, got {self.EJ}")
        if int(self.basis_size) != self.basis_size or self.basis_size < 20:
            raise ParameterError(f"basis_size must be an integer >= 20, got {self.basis_size}")
        if not math.isfinite(self.phi_x):
            raise ParameterError(f"phi_x must be finite, got {self.phi_x}")

    @property
    def plasma_frequency(self) -> float:
        return math.sqrt(8.0 * self.Ec * self.EL)

    @property
    def phi_zpf(self) -> float:
        """Oscillator length (8 Ec/EL)^(1/4) of the phase variable."""
        return (8.0 * self.Ec / self.EL) ** 0.25

    def replace(self, **changes) -> "QubitParams":
        kwargs = dict(Ec=self.Ec, EL=self.EL, phi_x=self.phi_x, EJ=self.EJ,
                      basis_size=self.basis_size)
        kwargs.update(changes)
        return QubitParams(**kwargs)


@dataclass
class QubitSpectrum:
    energies: np.ndarray
    phi_elements: np.ndarray
    params: QubitParams | None = None


@dataclass(frozen=True)
class EffectiveModel:
    omega0: float
    U2: float
    U3: float

    def level_energies(self) -> np.ndarray:
        """Energies E_n - E_0 for n = 0..3 implied by the model."""
        n = np.arange(4, dtype=float)
        return (self.omega0 * n + self.U2 * n * (n - 1) / 2
                + self.U3 * n * (n - 1) * (n - 2) / 6)


@dataclass
class ZeroU2Result:
    phi_x: float
    model: EffectiveModel | None
    flagged: bool = False
    message: str = ""
    roots: list = field(default_factory=list)


def phi_operator(params: QubitParams) -> np.ndarray:
    """Tridiagonal phase operator in the truncated oscillator basis."""
    off = params.phi_zpf * np.sqrt(np.arange(1, params.basis_size) / 2.0)
    return np.diag(off, 1) + np.diag(off, -1)


def _cos_sin_phi(params: QubitParams):
    # phi is real symmetric tridiagonal; f(phi) = W f(x) W^T is exp(i phi) split into real/imag parts
    off = params.phi_zpf * np.sqrt(np.arange(1, params.basis_size) / 2.0)
    x, w = eigh_tridiagonal(np.zeros(params.basis_size), off)
    cos_phi = (w * np.cos(x)) @ w.T
    sin_phi = (w * np.sin(x)) @ w.T
    return cos_phi, sin_phi


def build_qubit_hamiltonian(params: QubitParams) -> np.ndarray:
    """Dense real symmetric matrix of the fluxonium Hamiltonian."""
    n = np.arange(params.basis_size, dtype=float)
    ham = np.diag(params.plasma_frequency * (n + 0.5))
    if params.EJ != 0.0:
        cos_phi, sin_phi = _cos_sin_phi(params)
        # cos(phi + phi_x) = cos(phi_x) cos(phi) - sin(phi_x) sin(phi)
        ham -= params.EJ * (math.cos(params.phi_x) * cos_phi - math.sin(params.phi_x) * sin_phi)
    return 0.5 * (ham + ham.T)


def _fix_ladder_gauge(vecs: np.ndarray, phi_eig: np.ndarray):
    """Choose eigenvector signs so that <n|phi|n+1> >= 0, as for a + a^dag."""
    signs = np.ones(vecs.shape[1])
    for k in range(1, vecs.shape[1]):
        if signs[k - 1] * phi_eig[k - 1, k] < 0:
            signs[k] = -1.0
    return vecs * signs, phi_eig * np.outer(signs, signs)


def diagonalize_qubit(params: QubitParams, m: int = 6) -> QubitSpectrum:
    """Return the ``m`` lowest levels and phase matrix elements between them."""
    if m < 1 or m > params.basis_size // 4:
        raise ParameterError(
            f"m={m} levels requested; at most basis_size/4={params.basis_size // 4} are kept")
    ham = build_qubit_hamiltonian(params)
    energies, vecs = eigh(ham, subset_by_index=[0, m - 1])
    phi_eig = vecs.T @ phi_operator(params) @ vecs
    vecs, phi_eig = _fix_ladder_gauge(vecs, phi_eig)
    phi_eig = 0.5 * (phi_eig + phi_eig.T)
    return QubitSpectrum(energies=energies, phi_elements=phi_eig, params=params)


def check_convergence(params: QubitParams, levels: int = 4, factor: float = 2.0,
                      tol: float = 1e-9) -> float:
    """Compare the lowest ``levels`` eigenvalues against a run with a larger basis.

    Returns the largest deviation; raises ConvergenceError when it exceeds ``tol``.
    """
    bigger = params.replace(basis_size=int(math.ceil(params.basis_size * factor)))
    e_small = eigh(build_qubit_hamiltonian(params), eigvals_only=True,
                   subset_by_index=[0, levels - 1])
    e_big = eigh(build_qubit_hamiltonian(bigger), eigvals_only=True,
                 subset_by_index=[0, levels - 1])
    dev = float(np.max(np.abs(e_small - e_big)))
    if dev > tol:
        raise ConvergenceError(
            f"lowest {levels} levels moved by {dev:.3e} E_J when basis grew "
            f"{params.basis_size} -> {bigger.basis_size}")
    return dev


def extract_effective_model(spectrum: QubitSpectrum) -> EffectiveModel:
    e = np.asarray(spectrum.energies, dtype=float)
    if e.size < 4:
        raise ParameterError(f"need at least 4 levels, got {e.size}")
    omega0 = e[1] - e[0]
    U2 = (e[2] - e[0]) - 2.0 * omega0
    U3 = (e[3] - e[0]) - 3.0 * omega0 - 3.0 * U2
    return EffectiveModel(float(omega0), float(U2), float(U3))


def effective_model(params: QubitParams) -> EffectiveModel:
    return extract_effective_model(diagonalize_qubit(params, m=4))


def ladder_leakage(spectrum: QubitSpectrum) -> float:
    """|<0|phi|2>| / |<0|phi|1>|: weight of the phase operator outside the a + a^dag pattern."""
    p = spectrum.phi_elements
    return float(abs(p[0, 2]) / abs(p[0, 1]))


def ladder_ratios(spectrum: QubitSpectrum) -> np.ndarray:
    """<n|phi|n+1> / (sqrt(n+1) <0|phi|1>); all ones for an ideal bosonic mode."""
    p = spectrum.phi_elements
    k = min(p.shape[0] - 1, 3)
    return np.array([p[n, n + 1] / (math.sqrt(n + 1) * p[0, 1]) for n in range(k)])


def _u2(phi_x, Ec, EL, EJ, basis_size):
    return effective_model(QubitParams(Ec, EL, phi_x, EJ, basis_size)).U2


def find_zero_U2(Ec: float, EL: float, phi_window=(2.0, 3.2), *, EJ: float = 1.0,
                 basis_size: int = DEFAULT_BASIS, scan_step: float = 1e-2,
                 flat_tol: float = 1e-12) -> ZeroU2Result:
    """Locate phi_x where U2 changes sign and return the model there.

    The window is scanned at ``scan_step`` and every bracketed sign change is
    refined with Brent's method. When several roots exist, the one with the
    largest U3 is returned. A U2 that is flat zero across the window (EJ -> 0)
    yields the window midpoint with ``flagged=True``.
    """
    lo, hi = phi_window
    if not lo < hi:
        raise ParameterError(f"phi_window must be ascending, got {phi_window}")
    n_pts = max(int(math.ceil((hi - lo) / scan_step)) + 1, 3)
    grid = np.linspace(lo, hi, n_pts)
    values = np.array([_u2(p, Ec, EL, EJ, basis_size) for p in grid])

    if np.max(np.abs(values)) < flat_tol:
        mid = 0.5 * (lo + hi)
        return ZeroU2Result(mid, effective_model(QubitParams(Ec, EL, mid, EJ, basis_size)),
                            flagged=True, message="U2 vanishes identically across the window")

    roots = []
    for a, b, fa, fb in zip(grid[:-1], grid[1:], values[:-1], values[1:]):
        if fa == 0.0:
            roots.append(float(a))
        elif fa * fb < 0:
            roots.append(brentq(_u2, a, b, args=(Ec, EL, EJ, basis_size), xtol=1e-13, rtol=1e-14))
    if values[-1] == 0.0:
        roots.append(float(grid[-1]))
    if not roots:
        raise NoRootError(f"U2 does not change sign for phi_x in [{lo}, {hi}] "
                          f"(Ec={Ec}, EL={EL})")

    models = [effective_model(QubitParams(Ec, EL, r, EJ, basis_size)) for r in roots]
    best = int(np.argmax([m.U3 for m in models]))
    result = ZeroU2Result(roots[best], models[best], roots=list(roots))
    if abs(models[best].U2) >= U2_TOLERANCE:
        result.flagged = True
        result.message = f"|U2|={abs(models[best].U2):.2e} above tolerance at the root"
    return result


def _sweep_cell(args):
    Ec, EL, phi_x, basis_size = args
    try:
        m = effective_model(QubitParams(Ec, EL, phi_x, 1.0, basis_size))
        return (EL, phi_x, m.omega0, m.U2, m.U3, "")
    except Exception as exc:  # recorded per cell, sweeps never abort
        return (EL, phi_x, math.nan, math.nan, math.nan, str(exc))


def sweep_U2_U3(Ec: float, EL_grid, phi_grid, *, basis_size: int = DEFAULT_BASIS,
                workers: int = 1) -> list[tuple]:
    """Rows ``(EL, phi_x, omega0, U2, U3, error)`` over the EL x phi_x grid, EL-major."""
    EL_grid = np.asarray(EL_grid, dtype=float)
    phi_grid = np.asarray(phi_grid, dtype=float)
    if EL_grid.size == 0 or phi_grid.size == 0:
        raise ParameterError("sweep grids must be non-empty")
    if np.any(np.diff(EL_grid) <= 0) or np.any(np.diff(phi_grid) <= 0):
        raise ParameterError("sweep grids must be strictly ascending")
    cells = [(Ec, float(el), float(p), basis_size) for el in EL_grid for p in phi_grid]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_sweep_cell, cells, chunksize=16))
    return [_sweep_cell(c) for c in cells]


def zero_U2_contour(Ec: float, EL_grid, phi_window=(2.0, 3.2), *,
                    basis_size: int = DEFAULT_BASIS):
    """U3 along the U2 = 0 line: rows ``(EL, phi_x, model, leakage)`` or ``None`` entries on failure."""
    rows = []
    for el in EL_grid:
        try:
            res = find_zero_U2(Ec, float(el), phi_window, basis_size=basis_size)
        except NoRootError:
            rows.append((float(el), math.nan, None, math.nan))
            continue
        spec = diagonalize_qubit(QubitParams(Ec, float(el), res.phi_x, 1.0, basis_size), m=4)
        rows.append((float(el), res.phi_x, res.model, ladder_leakage(spec)))
    return rows


def _golden_max(f, a, b, tol):
    inv_phi = (math.sqrt(5) - 1) / 2
    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    fc, fd = f(c), f(d)
    while abs(b - a) > tol:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


@dataclass
class OperatingPoint:
    EL: float
    phi_x: float
    model: EffectiveModel
    leakage: float


def optimal_operating_point(Ec: float = 0.05, EL_bracket=(0.8, 3.0), *,
                            max_leakage: float = 0.1, phi_window=(2.0, 3.2),
                            tol: float = 1e-3, basis_size: int = DEFAULT_BASIS) -> OperatingPoint:
    """Largest U3 on the U2 = 0 contour among qubits that still behave as bosonic modes.

    Bosonic behaviour is enforced by ``ladder_leakage <= max_leakage``; below
    the resulting EL bound the phase operator picks up large non-ladder
    elements. The remaining interval is searched by golden section.
    """
    def point(el):
        res = find_zero_U2(Ec, el, phi_window, basis_size=basis_size)
        spec = diagonalize_qubit(QubitParams(Ec, el, res.phi_x, 1.0, basis_size), m=4)
        return res, ladder_leakage(spec)

    lo, hi = EL_bracket
    leak_lo = point(lo)[1]
    if leak_lo > max_leakage:
        if point(hi)[1] > max_leakage:
            raise NoRootError(f"ladder leakage exceeds {max_leakage} across EL in {EL_bracket}")
        lo = brentq(lambda el: point(el)[1] - max_leakage, lo, hi, xtol=tol / 10)

    def u3(el):
        return point(el)[0].model.U3

    el_best = _golden_max(u3, lo, hi, tol)
    res, leak = point(el_best)
    return OperatingPoint(el_best, res.phi_x, res.model, leak)


def reference_operating_point(basis_size: int = DEFAULT_BASIS) -> QubitParams:
    """Ec = 0.05, EL = 1.4 with phi_x tuned to the U2 = 0 root (about 2.68)."""
    res = find_zero_U2(0.05, 1.4, (2.0, 3.2), basis_size=basis_size)
    return QubitParams(0.05, 1.4, res.phi_x, 1.0, basis_size)
