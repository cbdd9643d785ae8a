"""2x2 channel matrices: synthesis, measured-ensemble processing, statistics.

Channel matrices have receive antennas on rows and transmit branches on
columns.  For the beam-space transmitter the columns are the responses to
the two basis patterns; for a conventional array they are the responses to
the two physical antennas.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import EmptyPathSet, FileFormatError, ZeroEnsemble
from .farfield import BasisPair, FarFieldPattern, sample, unit_vectors

SPEED_OF_LIGHT = 299_792_458.0
CARRIER_HZ = 2.45e9
WAVELENGTH_M = SPEED_OF_LIGHT / CARRIER_HZ
TX_SPACING_M = 0.120
RX_SPACING_M = 0.240


def _rng(seed) -> np.random.Generator:
    return np.random.default_rng(seed)


def crandn(rng: np.random.Generator, shape, var: float = 1.0) -> np.ndarray:
    """Circular complex Gaussian samples with the given variance."""
    s = math.sqrt(var / 2.0)
    return s * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def stack_mean(a: np.ndarray) -> np.ndarray:
    """Mean over axis 0, reduced pairwise along a contiguous axis."""
    a = np.asarray(a)
    n = a.shape[0]
    flat = np.ascontiguousarray(a.reshape(n, -1).T)
    return (np.sum(flat, axis=1) / n).reshape(a.shape[1:])


# -- path-based synthesis ------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PathSet:
    """Discrete propagation paths.

    ``departure`` and ``arrival`` hold (theta, phi) per path; ``polarization``
    maps transmit (theta_hat, phi_hat) components onto receive components.
    """

    departure: np.ndarray
    arrival: np.ndarray
    gain: np.ndarray
    polarization: np.ndarray

    def __post_init__(self):
        dep = np.atleast_2d(np.asarray(self.departure, dtype=float))
        arr = np.atleast_2d(np.asarray(self.arrival, dtype=float))
        g = np.atleast_1d(np.asarray(self.gain, dtype=complex))
        n = g.size
        if n == 0:
            raise EmptyPathSet("a path set needs at least one path")
        pol = np.asarray(self.polarization, dtype=complex)
        if pol.shape == (2, 2):
            pol = np.broadcast_to(pol, (n, 2, 2)).copy()
        if dep.shape != (n, 2) or arr.shape != (n, 2) or pol.shape != (n, 2, 2):
            raise ValueError("departure/arrival must be (n, 2) and polarization (n, 2, 2)")
        if not np.all(np.isfinite(g)):
            raise ValueError("path gains must be finite")
        object.__setattr__(self, "departure", dep)
        object.__setattr__(self, "arrival", arr)
        object.__setattr__(self, "gain", g)
        object.__setattr__(self, "polarization", pol)

    def __len__(self):
        return self.gain.size

    def __add__(self, other: "PathSet") -> "PathSet":
        return PathSet(
            np.concatenate([self.departure, other.departure]),
            np.concatenate([self.arrival, other.arrival]),
            np.concatenate([self.gain, other.gain]),
            np.concatenate([self.polarization, other.polarization]),
        )


def _uniform_directions(rng, n) -> np.ndarray:
    return np.column_stack([np.arccos(rng.uniform(-1.0, 1.0, n)), rng.uniform(0.0, 2 * np.pi, n)])


def uniform_paths(n: int, seed=None, power: float = 1.0, depolarize: bool = True) -> PathSet:
    """Rich-scattering surrogate: ``n`` paths with uniform 3-D directions.

    Gains are i.i.d. CN(0, power/n).  With ``depolarize`` each path gets an
    i.i.d. complex Gaussian polarization transfer (0 dB cross-polar ratio),
    otherwise the identity.
    """
    rng = _rng(seed)
    dep = _uniform_directions(rng, n)
    arr = _uniform_directions(rng, n)
    gain = crandn(rng, n, power / n)
    pol = crandn(rng, (n, 2, 2), 0.5) if depolarize else np.eye(2)
    return PathSet(dep, arr, gain, pol)


def azimuthal_paths(n: int, seed=None) -> PathSet:
    """Paths spread uniformly in azimuth within the horizontal plane."""
    rng = _rng(seed)
    dep = np.column_stack([np.full(n, np.pi / 2), rng.uniform(0.0, 2 * np.pi, n)])
    arr = np.column_stack([np.full(n, np.pi / 2), rng.uniform(0.0, 2 * np.pi, n)])
    return PathSet(dep, arr, crandn(rng, n, 1.0 / n), np.eye(2))


def los_paths(
    scatter_fraction: float = 0.1,
    n_scatter: int = 200,
    seed=None,
    departure=(np.pi / 2, 0.0),
) -> PathSet:
    """One dominant line-of-sight path plus depolarized diffuse scattering.

    The LOS ray leaves along ``departure`` and arrives from the opposite
    direction; its polarization transfer keeps the field vector unchanged,
    which in local (theta_hat, phi_hat) components reads ``diag(1, -1)``.
    """
    rng = _rng(seed)
    th, ph = departure
    los = PathSet(
        [[th, ph]],
        [[np.pi - th, (ph + np.pi) % (2 * np.pi)]],
        [math.sqrt(1.0 - scatter_fraction) * np.exp(2j * np.pi * rng.uniform())],
        np.diag([1.0, -1.0]),
    )
    if scatter_fraction <= 0:
        return los
    return los + uniform_paths(n_scatter, rng, power=scatter_fraction)


def _geometry_phase(directions: np.ndarray, positions) -> np.ndarray:
    """exp(j k u.r) per (path, element); ``positions`` is (n_elem, 3) metres."""
    u = unit_vectors(directions[:, 0], directions[:, 1])
    k = 2 * np.pi / WAVELENGTH_M
    return np.exp(1j * k * u @ np.asarray(positions, dtype=float).T)


def _path_sum(tx_fields, rx_fields, paths: PathSet, tx_phase, rx_phase) -> np.ndarray:
    # tx_fields: (n_tx, P, 2), rx_fields: (n_rx, P, 2)
    h = np.einsum("p,mpi,pij,npj,pm,pn->mn",
                  paths.gain, rx_fields, paths.polarization, tx_fields, rx_phase, tx_phase)
    return h


def _rx_fields(rx_patterns, paths):
    th, ph = paths.arrival[:, 0], paths.arrival[:, 1]
    return np.stack([sample(f, th, ph) for f in rx_patterns])


def _positions_along(axis, spacing: float, n: int = 2) -> np.ndarray:
    ax = np.asarray(axis, dtype=float)
    ax = ax / np.linalg.norm(ax)
    offs = (np.arange(n) - (n - 1) / 2) * spacing
    return offs[:, None] * ax[None, :]


def synthesize_beamspace_channel(
    basis: BasisPair,
    rx_patterns: Sequence[FarFieldPattern],
    paths: PathSet,
    rx_spacing_m: float = 0.0,
    rx_axis=(0.0, 1.0, 0.0),
) -> np.ndarray:
    """Responses of each receive antenna to each basis pattern (path sum).

    ``h[m, n] = sum_p g_p F_m(arrival_p)^T O_p B_n(departure_p)`` with the
    receive elements placed ``rx_spacing_m`` apart along ``rx_axis``.
    """
    if len(paths) == 0:
        raise EmptyPathSet("a path set needs at least one path")
    th, ph = paths.departure[:, 0], paths.departure[:, 1]
    tx = np.stack([sample(basis.b1, th, ph), sample(basis.b2, th, ph)])
    rx = _rx_fields(rx_patterns, paths)
    rx_phase = _geometry_phase(paths.arrival, _positions_along(rx_axis, rx_spacing_m, len(rx_patterns)))
    tx_phase = np.ones((len(paths), 2))
    return _path_sum(tx, rx, paths, tx_phase, rx_phase)


def synthesize_conventional_channel(
    tx_patterns: Sequence[FarFieldPattern],
    rx_patterns: Sequence[FarFieldPattern],
    paths: PathSet,
    tx_spacing_m: float = TX_SPACING_M,
    tx_axis=(1.0, 0.0, 0.0),
    rx_spacing_m: float = 0.0,
    rx_axis=(0.0, 1.0, 0.0),
) -> np.ndarray:
    """Same path sum with two physical transmit antennas ``tx_spacing_m`` apart."""
    if len(paths) == 0:
        raise EmptyPathSet("a path set needs at least one path")
    th, ph = paths.departure[:, 0], paths.departure[:, 1]
    tx = np.stack([sample(f, th, ph) for f in tx_patterns])
    rx = _rx_fields(rx_patterns, paths)
    tx_phase = _geometry_phase(paths.departure, _positions_along(tx_axis, tx_spacing_m, len(tx_patterns)))
    rx_phase = _geometry_phase(paths.arrival, _positions_along(rx_axis, rx_spacing_m, len(rx_patterns)))
    return _path_sum(tx, rx, paths, tx_phase, rx_phase)


# -- statistical generators ----------------------------------------------------

def iid_rayleigh(seed=None, shape=(2, 2)) -> np.ndarray:
    return crandn(_rng(seed), shape)


def ricean(k_factor: float, h_los, seed=None) -> np.ndarray:
    if k_factor < 0:
        raise ValueError("Rice factor must be non-negative")
    h_los = np.asarray(h_los, dtype=complex)
    if math.isinf(k_factor):
        return h_los.copy()
    nlos = crandn(_rng(seed), h_los.shape)
    return math.sqrt(k_factor / (k_factor + 1)) * h_los + math.sqrt(1 / (k_factor + 1)) * nlos


# -- measured ensembles ----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ChannelRecord:
    s: int
    t: int
    h: np.ndarray
    measured_ser: float | None = None
    rx_power_dbm: tuple[float, float] | None = None
    unvalidated: bool = False

    def __post_init__(self):
        h = np.array(self.h, dtype=complex)
        if h.shape != (2, 2) or not np.all(np.isfinite(h)):
            raise ValueError(f"record ({self.s},{self.t}): h must be a finite 2x2 matrix")
        if self.s < 1 or self.t < 1:
            raise ValueError(f"record indices must be >= 1, got ({self.s},{self.t})")
        if self.measured_ser is not None and not 0.0 <= self.measured_ser <= 1.0:
            raise ValueError(f"record ({self.s},{self.t}): SER outside [0, 1]")
        h.setflags(write=False)
        object.__setattr__(self, "h", h)

    def same_as(self, other: "ChannelRecord") -> bool:
        return (self.s, self.t, self.measured_ser, self.rx_power_dbm) == (
            other.s, other.t, other.measured_ser, other.rx_power_dbm
        ) and np.array_equal(self.h, other.h)


@dataclass(frozen=True)
class EnsembleMeta:
    scenario: str = ""
    S: int = 0
    T: int = 0
    rx_spacing_mm: float = RX_SPACING_M * 1e3
    notes: str = ""


@dataclass(frozen=True, eq=False)
class ChannelEnsemble:
    records: tuple[ChannelRecord, ...]
    meta: EnsembleMeta = field(default_factory=EnsembleMeta)

    def __post_init__(self):
        recs = tuple(self.records)
        keys = [(r.s, r.t) for r in recs]
        if len(set(keys)) != len(keys):
            raise ValueError("duplicate (s, t) records in ensemble")
        if self.meta.S and self.meta.T and self.meta.S * self.meta.T < len(recs):
            raise ValueError("more records than S*T")
        object.__setattr__(self, "records", recs)

    def __len__(self):
        return len(self.records)

    def spatial_indices(self) -> list[int]:
        return sorted({r.s for r in self.records})


def filter_records(e: ChannelEnsemble, ser_threshold: float = 0.10) -> ChannelEnsemble:
    """Drop records whose measured SER exceeds the threshold.

    Records without a measured SER are kept and flagged ``unvalidated``.
    """
    kept = []
    for r in e.records:
        if r.measured_ser is None:
            kept.append(replace(r, unvalidated=True))
        elif r.measured_ser <= ser_threshold:
            kept.append(r)
    return ChannelEnsemble(tuple(kept), e.meta)


def spatial_retention(e: ChannelEnsemble, n_spatial: int | None = None) -> float:
    """Fraction of spatial points with at least one record."""
    n = n_spatial or e.meta.S
    if not n:
        raise ValueError("number of spatial points unknown (set meta.S)")
    return len(e.spatial_indices()) / n


def temporal_average(e: ChannelEnsemble) -> list[tuple[int, np.ndarray]]:
    """Entrywise mean channel per spatial index, sorted by index."""
    groups: dict[int, list[np.ndarray]] = {}
    for r in e.records:
        groups.setdefault(r.s, []).append(r.h)
    return [(s, stack_mean(np.stack(groups[s]))) for s in sorted(groups)]


def normalize_ensemble(h_av, target: float = 2.0) -> np.ndarray:
    """Scale by one global constant so the RMS Frobenius norm equals ``target``."""
    h = np.asarray(h_av, dtype=complex)
    if h.ndim == 2:
        h = h[None]
    if h.shape[0] == 0:
        raise ZeroEnsemble("empty channel ensemble")
    power = float(stack_mean(np.sum(np.abs(h.reshape(h.shape[0], -1)) ** 2, axis=1)))
    if not power > 0:
        raise ZeroEnsemble("all channel matrices are zero")
    return h * (target / math.sqrt(power))


def rms_frobenius(h) -> float:
    h = np.asarray(h)
    return math.sqrt(float(stack_mean(np.sum(np.abs(h.reshape(h.shape[0], -1)) ** 2, axis=1))))


def vec(h: np.ndarray) -> np.ndarray:
    """Column-stacking vectorization; works on stacks of matrices."""
    h = np.asarray(h)
    return np.swapaxes(h, -1, -2).reshape(*h.shape[:-2], -1)


def correlation_matrix(h_norm) -> np.ndarray:
    """Sample mean of vec(H) vec(H)^H over the ensemble."""
    v = vec(np.asarray(h_norm, dtype=complex).reshape(-1, 2, 2))
    outer = v[:, :, None] * np.conj(v[:, None, :])
    r = stack_mean(outer)
    return (r + r.conj().T) / 2


def ellipticity(h) -> float | np.ndarray:
    """Geometric over arithmetic mean of the eigenvalues of H H^H.

    Accepts one matrix or a stack; all-zero matrices give 0.
    """
    h = np.asarray(h, dtype=complex)
    lam = np.linalg.svd(h, compute_uv=False) ** 2
    n = lam.shape[-1]
    arith = lam.mean(axis=-1)
    geo = np.prod(lam, axis=-1) ** (1.0 / n)
    with np.errstate(invalid="ignore", divide="ignore"):
        g = np.where(arith > 0, geo / np.where(arith > 0, arith, 1.0), 0.0)
    g = np.clip(g, 0.0, 1.0)
    return float(g) if g.ndim == 0 else g


def empirical_cdf(values) -> tuple[np.ndarray, np.ndarray]:
    """Sorted values with plotting positions k/N, k = 1..N."""
    x = np.sort(np.asarray(values, dtype=float))
    return x, np.arange(1, x.size + 1) / x.size


@dataclass(frozen=True, eq=False)
class EllipticityStats:
    values: np.ndarray
    mean: float
    mean_db: float
    n_zero: int

    def cdf(self):
        return empirical_cdf(self.values)


def ellipticity_stats(h_stack) -> EllipticityStats:
    g = np.atleast_1d(ellipticity(np.asarray(h_stack).reshape(-1, 2, 2)))
    pos = g[g > 0]
    mean_db = float(np.mean(10 * np.log10(pos))) if pos.size else float("-inf")
    return EllipticityStats(g, float(np.mean(g)), mean_db, int(g.size - pos.size))


def average_rx_power_dbm(e: ChannelEnsemble, compensation_db: float = 0.0) -> tuple[float, float] | None:
    """Global average of per-point average received power, per antenna.

    Powers are averaged in linear scale; ``compensation_db`` is added to the
    result (e.g. -3.01 dB for a two-antenna transmitter at twice the power).
    """
    recs = [r for r in e.records if r.rx_power_dbm is not None]
    if not recs:
        return None
    per_point: dict[int, list] = {}
    for r in recs:
        per_point.setdefault(r.s, []).append(10 ** (np.asarray(r.rx_power_dbm) / 10))
    pts = np.stack([stack_mean(np.stack(v)) for _, v in sorted(per_point.items())])
    avg = stack_mean(pts)
    return tuple(float(10 * np.log10(x) + compensation_db) for x in avg)


# -- file formats ------------------------------------------------------------------

ENSEMBLE_MAGIC = "# bsmimo-ensemble 1"
_COLUMNS = ["s", "t", "h11_re", "h11_im", "h12_re", "h12_im", "h21_re", "h21_im",
            "h22_re", "h22_im", "ser", "p_rx1_dbm", "p_rx2_dbm"]


def _fmt(x) -> str:
    return "" if x is None else repr(float(x))


def save_ensemble(e: ChannelEnsemble, path) -> None:
    buf = io.StringIO()
    buf.write(ENSEMBLE_MAGIC + "\n")
    for key in ("scenario", "S", "T", "rx_spacing_mm", "notes"):
        buf.write(f"# {key} = {json.dumps(getattr(e.meta, key))}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(_COLUMNS)
    for r in e.records:
        flat = r.h.reshape(-1)
        row = [r.s, r.t]
        for v in flat:
            row += [repr(float(v.real)), repr(float(v.imag))]
        p = r.rx_power_dbm or (None, None)
        row += [_fmt(r.measured_ser), _fmt(p[0]), _fmt(p[1])]
        w.writerow(row)
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def load_ensemble(path) -> ChannelEnsemble:
    text = Path(path).read_text(encoding="utf-8")
    lines = text.splitlines()
    if not lines or lines[0].strip() != ENSEMBLE_MAGIC:
        raise FileFormatError(f"{path}: missing '{ENSEMBLE_MAGIC}' header")
    meta: dict = {}
    body_start = 1
    for i, line in enumerate(lines[1:], start=1):
        if not line.startswith("#"):
            body_start = i
            break
        key, sep, val = line[1:].partition("=")
        if not sep:
            raise FileFormatError(f"{path}:{i + 1}: malformed header line")
        meta[key.strip()] = json.loads(val)
    else:
        body_start = len(lines)
    rows = list(csv.reader(lines[body_start:]))
    if not rows or rows[0] != _COLUMNS:
        raise FileFormatError(f"{path}: missing or wrong column header")
    records = []
    for n, row in enumerate(rows[1:], start=body_start + 2):
        if not row:
            continue
        try:
            vals = [float(x) for x in row[2:10]]
            h = np.array(vals[0::2]) + 1j * np.array(vals[1::2])
            ser = float(row[10]) if row[10] else None
            p = (float(row[11]), float(row[12])) if row[11] and row[12] else None
            records.append(ChannelRecord(int(row[0]), int(row[1]), h.reshape(2, 2), ser, p))
        except (ValueError, IndexError) as exc:
            raise FileFormatError(f"{path}:{n}: bad record ({exc})") from exc
    try:
        m = EnsembleMeta(
            scenario=str(meta.get("scenario", "")),
            S=int(meta.get("S", 0)),
            T=int(meta.get("T", 0)),
            rx_spacing_mm=float(meta.get("rx_spacing_mm", RX_SPACING_M * 1e3)),
            notes=str(meta.get("notes", "")),
        )
        return ChannelEnsemble(tuple(records), m)
    except ValueError as exc:
        raise FileFormatError(f"{path}: {exc}") from exc


def save_matrix_csv(m: np.ndarray, path, fmt: str = "{:.2f}") -> None:
    """Write a real matrix (e.g. |R_H|) as CSV."""
    rows = [",".join(fmt.format(float(x)) for x in row) for row in np.asarray(m)]
    Path(path).write_text("\n".join(rows) + "\n", encoding="utf-8")


def load_matrix_csv(path) -> np.ndarray:
    try:
        rows = [r for r in csv.reader(Path(path).read_text(encoding="utf-8").splitlines()) if r]
        return np.array([[float(x) for x in r] for r in rows])
    except ValueError as exc:
        raise FileFormatError(f"{path}: {exc}") from exc


def ensemble_from_matrices(
    h: Iterable[np.ndarray], scenario: str = "", T: int = 1
) -> ChannelEnsemble:
    """Wrap a plain stack of matrices as an ensemble with one snapshot each."""
    recs = tuple(ChannelRecord(i + 1, 1, m) for i, m in enumerate(h))
    return ChannelEnsemble(recs, EnsembleMeta(scenario=scenario, S=len(recs), T=T))
