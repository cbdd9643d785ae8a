"""Three-port network algebra for the reconfigurable radiator.

Port ordering is fixed throughout the package as
``(active, passive1, passive2)``: port 0 is fed by the RF chain, ports 1
and 2 are terminated by the variable reactive loads.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import FileFormatError, SingularConversion, SingularReduction

#: Largest condition number accepted for any matrix solve in this module.
COND_MAX = 1e12


def _as_matrix3(entries) -> np.ndarray:
    a = np.array(entries, dtype=complex)
    if a.shape != (3, 3):
        raise ValueError(f"expected a 3x3 matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix entries must be finite")
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class ScatteringMatrix3:
    """S-parameters of a three-port at a single frequency."""

    entries: np.ndarray
    z0: float = 50.0

    def __post_init__(self):
        object.__setattr__(self, "entries", _as_matrix3(self.entries))
        if not self.z0 > 0:
            raise ValueError(f"reference impedance must be positive, got {self.z0}")

    def __getitem__(self, idx):
        return self.entries[idx]

    def is_symmetric_radiator(self, tol: float = 1e-9) -> bool:
        """True if the matrix has the mirror symmetry between the passive ports."""
        s = self.entries
        pairs = [(s[0, 1], s[0, 2]), (s[1, 0], s[2, 0]), (s[1, 1], s[2, 2]), (s[1, 2], s[2, 1])]
        return all(abs(a - b) <= tol for a, b in pairs)

    def singular_values(self) -> np.ndarray:
        return np.linalg.svd(self.entries, compute_uv=False)


@dataclass(frozen=True, eq=False)
class ImpedanceMatrix3:
    entries: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "entries", _as_matrix3(self.entries))


@dataclass(frozen=True)
class LoadTermination:
    """Series R + jX loads on the two passive ports (ohms)."""

    x1: float
    x2: float
    r1: float = 0.0
    r2: float = 0.0

    def __post_init__(self):
        if self.r1 < 0 or self.r2 < 0:
            raise ValueError("load resistances must be non-negative")
        if not all(np.isfinite([self.x1, self.x2, self.r1, self.r2])):
            raise ValueError("load values must be finite")

    @property
    def impedances(self) -> np.ndarray:
        return np.array([self.r1 + 1j * self.x1, self.r2 + 1j * self.x2])


def _singular(m: np.ndarray, scale: float) -> bool:
    """True if ``m`` is ill-conditioned or tiny relative to the terms it was built from."""
    sv = np.linalg.svd(m, compute_uv=False)
    return not np.all(np.isfinite(sv)) or sv[-1] <= max(sv[0], scale) / COND_MAX


def _solve_right(a: np.ndarray, b: np.ndarray, scale: float, what: str) -> np.ndarray:
    """Return ``a @ inv(b)`` without forming the inverse."""
    if _singular(b, scale):
        raise SingularConversion(f"{what} is numerically singular")
    # a @ inv(b) == solve(b.T, a.T).T
    return np.linalg.solve(b.T, a.T).T


def s_to_z(s: ScatteringMatrix3) -> ImpedanceMatrix3:
    """Z = z0 (I + S)(I - S)^-1."""
    eye = np.eye(3)
    scale = 1.0 + np.linalg.norm(s.entries, 2)
    z = s.z0 * _solve_right(eye + s.entries, eye - s.entries, scale, "I - S")
    return ImpedanceMatrix3(z)


def z_to_s(z: ImpedanceMatrix3, z0: float = 50.0) -> ScatteringMatrix3:
    """S = (Z - z0 I)(Z + z0 I)^-1."""
    eye = np.eye(3)
    scale = z0 + np.linalg.norm(z.entries, 2)
    s = _solve_right(z.entries - z0 * eye, z.entries + z0 * eye, scale, "Z + z0 I")
    return ScatteringMatrix3(s, z0)


def amend_with_losses(s: ScatteringMatrix3, r1: float, r2: float) -> ScatteringMatrix3:
    """Fold series load resistances into the radiator's S-matrix.

    The resulting matrix, terminated by the purely reactive part of the
    loads, behaves like the original one terminated by ``r_k + j x_k``.
    """
    if r1 < 0 or r2 < 0:
        raise ValueError("loss resistances must be non-negative")
    z = s_to_z(s).entries + np.diag([0.0, r1, r2])
    return z_to_s(ImpedanceMatrix3(z), s.z0)


def load_reflections(s: ScatteringMatrix3, load: LoadTermination) -> np.ndarray:
    zl = load.impedances
    return (zl - s.z0) / (zl + s.z0)


def input_reflection(s: ScatteringMatrix3, load: LoadTermination) -> complex:
    """Reflection coefficient at the active port with both passive ports loaded."""
    gl = np.diag(load_reflections(s, load))
    spp = s.entries[1:, 1:]
    m = np.eye(2) - spp @ gl
    if _singular(m, 1.0 + np.linalg.norm(spp @ gl, 2)):
        raise SingularReduction("passive-port subsystem is singular for this termination")
    x = np.linalg.solve(m, s.entries[1:, 0])
    return complex(s.entries[0, 0] + s.entries[0, 1:] @ gl @ x)


def return_loss_db(gamma: complex) -> float:
    """Return loss in dB (positive for |gamma| < 1)."""
    return float(-20.0 * np.log10(abs(gamma)))


def load_smatrix(path) -> ScatteringMatrix3:
    """Read an S-matrix file: ``{"z0": 50, "s": [[[re, im], ...], ...]}``."""
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        s = np.array([[complex(re, im) for re, im in row] for row in doc["s"]])
        return ScatteringMatrix3(s, float(doc.get("z0", 50.0)))
    except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
        raise FileFormatError(f"{path}: not a valid S-matrix file ({exc})") from exc


def save_smatrix(s: ScatteringMatrix3, path) -> None:
    doc = {
        "z0": s.z0,
        "s": [[[float(v.real), float(v.imag)] for v in row] for row in s.entries],
    }
    Path(path).write_text(json.dumps(doc, indent=1) + "\n", encoding="utf-8")


def printed_smatrix() -> ScatteringMatrix3:
    """The optimized radiator's S-matrix at 2.45 GHz (bundled fixture)."""
    ref = resources.files("bsmimo") / "data" / "radiator_2g45.json"
    with resources.as_file(ref) as p:
        return load_smatrix(p)
