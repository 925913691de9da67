"""Magnetic hopping amplitudes in the Landau gauge and the hopping schemes built from them."""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

SCHEMES = ("NN", "NNN", "long-range")
AMPLITUDE_FLOOR = 1e-8


def hop_amplitude(dx: int, dy: int, y: float, alpha: float) -> complex:
    """Coefficient of a^dag_{x+dx, y+dy} a_{x, y}, normalised so the NN hop is -J = -1.

    Gaussian-suppressed amplitudes with sign (-1)^(dx+dy+dx dy) and Landau-gauge
    phase exp(-2 pi i alpha (y dx + dx dy / 2)). Dividing by the nearest-neighbour
    Gaussian exp(-pi/2 (1 - alpha)) fixes |t(1, 0)| = 1.
    """
    if dx == 0 and dy == 0:
        raise ValueError("on-site term is not a hop")
    sign = -1.0 if (dx + dy + dx * dy) % 2 else 1.0
    magnitude = math.exp(-0.5 * math.pi * (1.0 - alpha) * (dx * dx + dy * dy - 1))
    phase = cmath.exp(-2j * math.pi * alpha * (y * dx + dx * dy / 2.0))
    return sign * magnitude * phase


def normalize_scheme(scheme: str) -> str:
    s = scheme.strip().lower().replace("_", "-")
    aliases = {"nn": "NN", "nnn": "NNN", "long-range": "long-range", "longrange": "long-range",
               "lr": "long-range"}
    if s not in aliases:
        raise ValueError(f"unknown hopping scheme {scheme!r}; expected one of {SCHEMES}")
    return aliases[s]


def displacements(scheme: str, Lx: int, Ly: int, R: int | None = None):
    """Displacements ``(dx, dy, weight)`` included by a scheme.

    NN and NNN list every displacement once (diagonals for NNN). The
    long-range scheme takes the box max(|dx|, |dy|) <= R with minimal-image
    wrapping; a displacement of exactly half the torus has two equally short
    images, so each carries weight 1/2.
    """
    scheme = normalize_scheme(scheme)
    if scheme == "NN":
        return [(1, 0, 1.0), (-1, 0, 1.0), (0, 1, 1.0), (0, -1, 1.0)]
    if scheme == "NNN":
        return [(dx, dy, 1.0) for dx in (-1, 0, 1) for dy in (-1, 0, 1) if (dx, dy) != (0, 0)]
    if R is None:
        R = min(Lx, Ly) // 2
    if R < 1 or 2 * R > min(Lx, Ly):
        raise ValueError(f"long-range cutoff R={R} must satisfy 1 <= R <= min(Lx, Ly)/2")
    out = []
    for dx in range(-R, R + 1):
        for dy in range(-R, R + 1):
            if (dx, dy) == (0, 0):
                continue
            w = 1.0
            if 2 * abs(dx) == Lx:
                w *= 0.5
            if 2 * abs(dy) == Ly:
                w *= 0.5
            out.append((dx, dy, w))
    return out


def site_index(x: int, y: int, Lx: int) -> int:
    return y * Lx + x


def site_coords(j: int, Lx: int):
    return j % Lx, j // Lx


@dataclass
class HoppingTerms:
    """Single-particle hops on the torus, one entry per (displacement, source site).

    ``amp`` already contains the boundary gauge factor; the twist enters through
    ``dx``/``dy`` as exp(i (theta_x dx / Lx + theta_y dy / Ly)).
    """

    target: np.ndarray
    source: np.ndarray
    dx: np.ndarray
    dy: np.ndarray
    amp: np.ndarray
    Lx: int
    Ly: int

    def twisted(self, theta_x: float = 0.0, theta_y: float = 0.0) -> np.ndarray:
        return self.amp * np.exp(1j * (theta_x * self.dx / self.Lx + theta_y * self.dy / self.Ly))

    def matrix(self, theta_x: float = 0.0, theta_y: float = 0.0) -> np.ndarray:
        n = self.Lx * self.Ly
        h = np.zeros((n, n), dtype=complex)
        np.add.at(h, (self.target, self.source), self.twisted(theta_x, theta_y))
        return h


def hopping_terms(Lx: int, Ly: int, alpha: float, scheme: str = "NN", R: int | None = None,
                  gauge=None) -> HoppingTerms:
    """Enumerate all hops on an Lx x Ly torus.

    Wrapping in y uses the magnetic-translation identification
    a_{x, y + Ly} = exp(-2 pi i alpha Ly x) a_{x, y}, which keeps every
    plaquette at flux alpha even when alpha * Ly is not an integer
    (alpha * Lx * Ly must be). ``gauge`` optionally holds per-site phases chi
    for a local gauge transformation a_j -> exp(i chi_j) a_j.
    """
    rows = []
    for dx, dy, w in displacements(scheme, Lx, Ly, R):
        for y in range(Ly):
            for x in range(Lx):
                t = hop_amplitude(dx, dy, y, alpha) * w
                if abs(t) < AMPLITUDE_FLOOR:
                    continue
                X, Y = x + dx, y + dy
                cy = Y // Ly
                # creation operator at unwrapped (X, Y) in terms of the fundamental cell
                t *= cmath.exp(2j * math.pi * alpha * Ly * cy * X)
                tgt = site_index(X % Lx, Y % Ly, Lx)
                src = site_index(x, y, Lx)
                if gauge is not None:
                    t *= cmath.exp(1j * (gauge[tgt] - gauge[src]))
                rows.append((tgt, src, dx, dy, t))
    target, source, dxs, dys, amps = zip(*rows)
    return HoppingTerms(np.array(target), np.array(source), np.array(dxs), np.array(dys),
                        np.array(amps, dtype=complex), Lx, Ly)
