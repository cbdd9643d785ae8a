"""Sampled far-field patterns on a (theta, phi) grid.

Fields are stored as two complex arrays (theta- and phi-polarized
components) on a uniform grid with theta in [0, pi] (both poles included)
and phi in [0, 2*pi) (periodic).  Normalization is such that the radiated
power is the surface integral of ``|e_theta|^2 + |e_phi|^2``.

Integrals use the trapezoidal rule in theta and the (spectrally accurate)
periodic rectangle rule in phi.  All reductions go through a single 1-D
``np.sum`` call, which numpy evaluates by pairwise summation, so results
are reproducible bit for bit.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .errors import DegenerateBasis, FileFormatError, GridMismatch

log = logging.getLogger(__name__)

DEFAULT_N_THETA = 181
DEFAULT_N_PHI = 360


def sphere_grid(n_theta: int = DEFAULT_N_THETA, n_phi: int = DEFAULT_N_PHI):
    if n_theta < 4 or n_phi < 4:
        raise ValueError("grid needs at least 4 points per axis")
    theta = np.linspace(0.0, np.pi, n_theta)
    phi = 2.0 * np.pi * np.arange(n_phi) / n_phi
    return theta, phi


@dataclass(frozen=True, eq=False)
class FarFieldPattern:
    theta: np.ndarray
    phi: np.ndarray
    e_theta: np.ndarray
    e_phi: np.ndarray

    def __post_init__(self):
        theta = np.asarray(self.theta, dtype=float)
        phi = np.asarray(self.phi, dtype=float)
        shape = (theta.size, phi.size)
        et = np.broadcast_to(np.asarray(self.e_theta, dtype=complex), shape).copy()
        ep = np.broadcast_to(np.asarray(self.e_phi, dtype=complex), shape).copy()
        if theta.size < 4 or phi.size < 4:
            raise ValueError("grid needs at least 4 points per axis")
        dt, dp = np.pi / (theta.size - 1), 2 * np.pi / phi.size
        if not (np.allclose(theta, dt * np.arange(theta.size), atol=1e-9)
                and np.allclose(phi, dp * np.arange(phi.size), atol=1e-9)):
            raise ValueError("theta must span [0, pi] and phi [0, 2pi) uniformly")
        if not (np.all(np.isfinite(et)) and np.all(np.isfinite(ep))):
            raise ValueError("pattern values must be finite")
        for name, arr in (("theta", theta), ("phi", phi), ("e_theta", et), ("e_phi", ep)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def shape(self) -> tuple[int, int]:
        return self.e_theta.shape

    def same_grid(self, other: "FarFieldPattern") -> bool:
        return self.shape == other.shape

    def _check(self, other: "FarFieldPattern") -> None:
        if not self.same_grid(other):
            raise GridMismatch(f"grid {self.shape} vs {other.shape}")

    def __add__(self, other: "FarFieldPattern") -> "FarFieldPattern":
        self._check(other)
        return self._with(self.e_theta + other.e_theta, self.e_phi + other.e_phi)

    def __sub__(self, other: "FarFieldPattern") -> "FarFieldPattern":
        self._check(other)
        return self._with(self.e_theta - other.e_theta, self.e_phi - other.e_phi)

    def __mul__(self, k: complex) -> "FarFieldPattern":
        return self._with(k * self.e_theta, k * self.e_phi)

    __rmul__ = __mul__

    def _with(self, et, ep) -> "FarFieldPattern":
        return FarFieldPattern(self.theta, self.phi, et, ep)

    def intensity(self) -> np.ndarray:
        return np.abs(self.e_theta) ** 2 + np.abs(self.e_phi) ** 2


def pattern_from_function(
    fn: Callable[[np.ndarray, np.ndarray], tuple],
    n_theta: int = DEFAULT_N_THETA,
    n_phi: int = DEFAULT_N_PHI,
) -> FarFieldPattern:
    """Sample ``fn(theta, phi) -> (e_theta, e_phi)`` on the default grid."""
    theta, phi = sphere_grid(n_theta, n_phi)
    tt, pp = np.meshgrid(theta, phi, indexing="ij")
    et, ep = fn(tt, pp)
    return FarFieldPattern(theta, phi, et, ep)


def quadrature_weights(theta: np.ndarray, phi: np.ndarray) -> np.ndarray:
    dt = theta[1] - theta[0]
    wt = np.full(theta.size, dt)
    wt[0] = wt[-1] = dt / 2
    wt *= np.sin(theta)
    return np.outer(wt, np.full(phi.size, 2 * np.pi / phi.size))


def _integrate(p: FarFieldPattern, integrand: np.ndarray):
    w = quadrature_weights(p.theta, p.phi)
    return np.sum((w * integrand).ravel())


def radiated_power(p: FarFieldPattern) -> float:
    return float(_integrate(p, p.intensity()))


def pattern_inner_product(a: FarFieldPattern, b: FarFieldPattern) -> complex:
    """Surface integral of ``a . conj(b)`` over both polarizations."""
    a._check(b)
    integrand = a.e_theta * np.conj(b.e_theta) + a.e_phi * np.conj(b.e_phi)
    return complex(_integrate(a, integrand))


@dataclass(frozen=True, eq=False)
class BasisPair:
    b1: FarFieldPattern
    b2: FarFieldPattern

    def __post_init__(self):
        self.b1._check(self.b2)

    def powers(self) -> tuple[float, float]:
        return radiated_power(self.b1), radiated_power(self.b2)

    def orthogonality_residual(self) -> float:
        """``|<b1, b2>| / sqrt(P1 P2)``; zero for orthogonal bases."""
        p1, p2 = self.powers()
        if p1 <= 0 or p2 <= 0:
            raise DegenerateBasis("basis pattern radiates no power")
        return abs(pattern_inner_product(self.b1, self.b2)) / np.sqrt(p1 * p2)


def basis_from_states(e_plus: FarFieldPattern, e_minus: FarFieldPattern) -> BasisPair:
    """Half-sum and half-difference of the xbar = +1 and xbar = -1 patterns."""
    e_plus._check(e_minus)
    return BasisPair((e_plus + e_minus) * 0.5, (e_plus - e_minus) * 0.5)


def instantaneous_from_basis(basis: BasisPair, xbar: complex) -> FarFieldPattern:
    return basis.b1 + basis.b2 * xbar


def imbalance_ratio_db(basis: BasisPair, floor: float = 1e-300) -> float:
    p1, p2 = basis.powers()
    if p1 <= floor or p2 <= floor:
        raise DegenerateBasis(f"basis powers ({p1:g}, {p2:g}) too small for a ratio")
    return float(10.0 * np.log10(p1 / p2))


def evm_map(
    basis: BasisPair,
    states: Sequence[tuple[complex, FarFieldPattern]],
    zero_denominator: float = np.nan,
) -> np.ndarray:
    """Per-direction EVM in dB between ideal superpositions and realized states.

    Directions where the ideal patterns all vanish get ``zero_denominator``
    (NaN by default); perfectly reconstructed directions come out as -inf.
    """
    if not states:
        raise ValueError("at least one state pattern is required")
    num = np.zeros(basis.b1.shape)
    den = np.zeros(basis.b1.shape)
    for xbar, e in states:
        ideal = instantaneous_from_basis(basis, xbar)
        num += (ideal - e).intensity()
        den += ideal.intensity()
    bad = den == 0
    if bad.any():
        log.info("EVM undefined at %d grid points (ideal pattern is zero)", int(bad.sum()))
    with np.errstate(divide="ignore", invalid="ignore"):
        out = 10.0 * np.log10(num / np.where(bad, 1.0, den))
    out[bad] = zero_denominator
    return out


def cut_columns(p: FarFieldPattern, phi0_deg: float) -> tuple[int, int]:
    """Grid columns of the plane cut phi = phi0 and phi0 + 180 deg."""
    n = p.phi.size
    j0 = int(round(np.deg2rad(phi0_deg) / (2 * np.pi / n))) % n
    return j0, (j0 + n // 2) % n


def evm_cut_average_db(evm_db: np.ndarray, p: FarFieldPattern, phi0_deg: float) -> float:
    """Average EVM over a plane cut, averaging |EVM|^2 linearly; NaNs skipped."""
    j0, j1 = cut_columns(p, phi0_deg)
    vals = np.concatenate([evm_db[:, j0], evm_db[:, j1]])
    vals = vals[~np.isnan(vals)]
    if vals.size == 0:
        return float("nan")
    with np.errstate(divide="ignore"):
        return float(10.0 * np.log10(np.mean(10.0 ** (vals / 10.0))))


def mirror_pattern(p: FarFieldPattern) -> FarFieldPattern:
    """Reflect a pattern through the plane phi = 90-270 deg (x -> -x).

    ``E'(theta, phi) = (E_theta, -E_phi)(theta, pi - phi)``.  Requires an even
    number of phi samples so the mirrored grid coincides with the original.
    """
    n = p.phi.size
    if n % 2:
        raise GridMismatch("mirroring needs an even number of phi samples")
    src = (n // 2 - np.arange(n)) % n
    return p._with(p.e_theta[:, src], -p.e_phi[:, src])


def nearest_index(p: FarFieldPattern, theta, phi) -> tuple[np.ndarray, np.ndarray]:
    dt = np.pi / (p.theta.size - 1)
    dp = 2 * np.pi / p.phi.size
    i = np.clip(np.rint(np.asarray(theta) / dt).astype(int), 0, p.theta.size - 1)
    j = np.rint(np.asarray(phi) / dp).astype(int) % p.phi.size
    return i, j


def sample(p: FarFieldPattern, theta, phi) -> np.ndarray:
    """Field at the nearest grid points, shape ``(..., 2)`` as (theta, phi) comps."""
    i, j = nearest_index(p, theta, phi)
    return np.stack([p.e_theta[i, j], p.e_phi[i, j]], axis=-1)


def unit_vectors(theta, phi) -> np.ndarray:
    st = np.sin(theta)
    return np.stack([st * np.cos(phi), st * np.sin(phi), np.cos(theta)], axis=-1)


def displaced(p: FarFieldPattern, offset_m: Sequence[float], wavelength_m: float) -> FarFieldPattern:
    """Pattern of the same element moved by ``offset_m`` from the phase origin."""
    tt, pp = np.meshgrid(p.theta, p.phi, indexing="ij")
    k = 2 * np.pi / wavelength_m
    phase = np.exp(1j * k * unit_vectors(tt, pp) @ np.asarray(offset_m, dtype=float))
    return p._with(p.e_theta * phase, p.e_phi * phase)


# -- analytic fixtures -------------------------------------------------------

def isotropic(n_theta: int = DEFAULT_N_THETA, n_phi: int = DEFAULT_N_PHI, psi: float = 0.0):
    """Direction-independent pattern, linearly polarized at angle ``psi`` from theta-hat."""
    return pattern_from_function(
        lambda t, p: (np.cos(psi) * np.ones_like(t), np.sin(psi) * np.ones_like(t)),
        n_theta, n_phi,
    )


def dipole(n_theta: int = DEFAULT_N_THETA, n_phi: int = DEFAULT_N_PHI) -> FarFieldPattern:
    """Short z-directed dipole, ``e_theta = sin(theta)``."""
    return pattern_from_function(lambda t, p: (np.sin(t), np.zeros_like(t)), n_theta, n_phi)


def slant_states(
    n_theta: int = DEFAULT_N_THETA, n_phi: int = DEFAULT_N_PHI, coupling: float = 1.0
) -> tuple[FarFieldPattern, FarFieldPattern]:
    """Mirrored pair ``(E+1, E-1)`` whose basis is a z-dipole and a z-loop.

    The +1 state radiates ``sin(theta) (theta_hat + coupling * phi_hat)``;
    the -1 state is its mirror image, so the basis patterns are orthogonal
    and balanced for ``coupling = 1``.
    """
    e_plus = pattern_from_function(
        lambda t, p: (np.sin(t), coupling * np.sin(t) * np.ones_like(p)), n_theta, n_phi
    )
    return e_plus, mirror_pattern(e_plus)


def cardioid_states(
    n_theta: int = DEFAULT_N_THETA, n_phi: int = DEFAULT_N_PHI
) -> tuple[FarFieldPattern, FarFieldPattern]:
    """Mirrored pair of tilted cardioids with both polarization components."""

    def fn(t, p):
        lobe = 1.0 + np.sin(t) * np.cos(p - 0.3)
        return lobe * np.sin(t), 0.4j * lobe * np.cos(t) * np.sin(p)

    e_plus = pattern_from_function(fn, n_theta, n_phi)
    return e_plus, mirror_pattern(e_plus)


# -- file format --------------------------------------------------------------

def save_pattern(p: FarFieldPattern, path) -> None:
    doc = {
        "n_theta": int(p.theta.size),
        "n_phi": int(p.phi.size),
        "e_theta": {"re": p.e_theta.real.tolist(), "im": p.e_theta.imag.tolist()},
        "e_phi": {"re": p.e_phi.real.tolist(), "im": p.e_phi.imag.tolist()},
    }
    Path(path).write_text(json.dumps(doc), encoding="utf-8")


def load_pattern(path) -> FarFieldPattern:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        theta, phi = sphere_grid(int(doc["n_theta"]), int(doc["n_phi"]))
        et = np.array(doc["e_theta"]["re"]) + 1j * np.array(doc["e_theta"]["im"])
        ep = np.array(doc["e_phi"]["re"]) + 1j * np.array(doc["e_phi"]["im"])
        if et.shape != (theta.size, phi.size) or ep.shape != et.shape:
            raise ValueError(f"array shape {et.shape} does not match the grid")
        return FarFieldPattern(theta, phi, et, ep)
    except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
        raise FileFormatError(f"{path}: not a valid pattern file ({exc})") from exc
