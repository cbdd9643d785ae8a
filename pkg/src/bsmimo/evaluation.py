"""Monte-Carlo performance metrics over channel matrices.

SNR convention: ``snr`` is the total transmit symbol energy per channel
use over the per-receive-antenna noise variance.  With ``n_t`` unit-energy
streams the noise variance is therefore ``N0 = n_t / snr``, which makes the
Gaussian-input capacity ``log2 det(I + (snr / n_t) H H^H)``.

All random draws come from sub-streams ``SeedSequence([seed, i, j, ...])``
indexed by the work item, so results do not depend on ``threads``.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.special import logsumexp

from .baseband import QPSK, Constellation
from .channel import empirical_cdf

COND_MAX = 1e12
TRIAL_BLOCK = 20_000


def subseed_rng(seed: int, *index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), *map(int, index)]))


def _master_seed(seed) -> int:
    if seed is None:
        return int(np.random.SeedSequence().entropy % (2**63))
    return int(seed)


def _pmap(fn: Callable, items: Sequence, threads: int = 1) -> list:
    if threads <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, items))


def db_to_linear(db) -> np.ndarray:
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


@dataclass(frozen=True)
class SnrGrid:
    points: tuple[float, ...]

    def __post_init__(self):
        pts = tuple(float(p) for p in self.points)
        if not pts:
            raise ValueError("SNR grid is empty")
        if any(b <= a for a, b in zip(pts, pts[1:])):
            raise ValueError("SNR grid must be strictly increasing")
        object.__setattr__(self, "points", pts)

    @classmethod
    def from_range(cls, start: float, stop: float, step: float) -> "SnrGrid":
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        return cls(tuple(start + k * step for k in range(n)))

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    @property
    def linear(self) -> np.ndarray:
        return db_to_linear(self.points)


@dataclass(frozen=True, eq=False)
class PerformanceCurve:
    metric: str
    snr_db: np.ndarray
    values: np.ndarray
    stderr: np.ndarray
    n_trials: int
    per_stream: np.ndarray | None = None
    singular_fallbacks: int = 0

    def __post_init__(self):
        if self.metric not in ("mi_bits", "capacity_bits", "ser"):
            raise ValueError(f"unknown metric {self.metric!r}")
        if self.metric == "ser" and np.any((self.values < 0) | (self.values > 1)):
            raise ValueError("SER outside [0, 1]")


# -- mutual information and capacity ---------------------------------------------

def symbol_vectors(constellation: Constellation, n_t: int) -> np.ndarray:
    """All ``M**n_t`` transmit vectors as columns, shape (n_t, M**n_t)."""
    combos = itertools.product(constellation.points, repeat=n_t)
    return np.array(list(combos), dtype=complex).T


def mutual_information_mc(
    h,
    snr_db: float,
    constellation: Constellation = QPSK,
    n_noise_samples: int = 500,
    rng_seed=None,
    full_output: bool = False,
):
    """Finite-alphabet mutual information for equiprobable inputs, bits/channel use.

    ``I = n_t log2 M - (1/K) sum_i E_n[log2 sum_j exp((|n|^2 - |H(x_i - x_j) + n|^2) / N0)]``
    with ``K = M**n_t``.  With ``full_output`` returns ``(mi, stderr)``.
    """
    if n_noise_samples < 1:
        raise ValueError("n_noise_samples must be >= 1")
    h = np.atleast_2d(np.asarray(h, dtype=complex))
    n_r, n_t = h.shape
    x = symbol_vectors(constellation, n_t)
    k = x.shape[1]
    hmax = n_t * math.log2(constellation.order)
    hd = np.einsum("rt,tij->rij", h, x[:, :, None] - x[:, None, :])  # (n_r, i, j)
    snr = float(db_to_linear(snr_db))
    if math.isinf(snr):
        coincide = np.sum(np.all(np.abs(hd) < 1e-12, axis=0), axis=1)
        mi = hmax - float(np.mean(np.log2(coincide)))
        return (mi, 0.0) if full_output else mi
    n0 = n_t / snr
    rng = np.random.default_rng(rng_seed)
    noise = math.sqrt(n0 / 2) * (
        rng.standard_normal((n_r, k, n_noise_samples)) + 1j * rng.standard_normal((n_r, k, n_noise_samples))
    )
    # exponent[i, j, s] = (|n|^2 - |hd_ij + n|^2) / N0
    d = hd[:, :, :, None] + noise[:, :, None, :]
    expo = (np.sum(np.abs(noise) ** 2, axis=0)[:, None, :] - np.sum(np.abs(d) ** 2, axis=0)) / n0
    per_sample = np.mean(logsumexp(expo, axis=1), axis=0) / math.log(2)  # over i, per noise draw
    mi = hmax - float(np.mean(per_sample))
    se = float(np.std(per_sample, ddof=1) / math.sqrt(n_noise_samples)) if n_noise_samples > 1 else math.nan
    return (mi, se) if full_output else mi


def capacity(h, snr_db: float) -> np.ndarray | float:
    """Equal-power Gaussian-input capacity per matrix, bits/channel use."""
    h = np.asarray(h, dtype=complex)
    n_r, n_t = h.shape[-2:]
    g = np.eye(n_r) + (float(db_to_linear(snr_db)) / n_t) * (h @ np.conj(np.swapaxes(h, -1, -2)))
    _, logdet = np.linalg.slogdet(g)
    out = logdet / math.log(2)
    return float(out) if h.ndim == 2 else out


def ergodic_capacity(h, snr_db: float) -> float:
    """Capacity of one matrix, or its mean over a stack of matrices."""
    return float(np.mean(capacity(h, snr_db)))


@dataclass(frozen=True, eq=False)
class MiSummary:
    snr_db: float
    mean: float
    values: np.ndarray
    stderr: np.ndarray
    cdf_x: np.ndarray = field(repr=False)
    cdf_p: np.ndarray = field(repr=False)

    def percentile(self, q: float) -> float:
        return float(np.percentile(self.values, q))


def mi_over_ensemble(
    ensemble,
    snr_db: float,
    constellation: Constellation = QPSK,
    n_noise_samples: int = 500,
    rng_seed=None,
    threads: int = 1,
    snr_index: int = 0,
) -> MiSummary:
    """Per-channel MI, its sample mean and empirical CDF (plotting positions k/N)."""
    hs = np.asarray(ensemble, dtype=complex)
    if hs.ndim == 2:
        hs = hs[None]
    if hs.shape[0] == 0:
        raise ValueError("ensemble is empty")
    seed = _master_seed(rng_seed)

    def one(i):
        return mutual_information_mc(hs[i], snr_db, constellation, n_noise_samples,
                                     subseed_rng(seed, snr_index, i), full_output=True)

    res = np.array(_pmap(one, range(hs.shape[0]), threads))
    values, se = res[:, 0], res[:, 1]
    cx, cp = empirical_cdf(values)
    return MiSummary(float(snr_db), float(np.mean(values)), values, se, cx, cp)


def mi_curve(ensemble, grid: SnrGrid, constellation: Constellation = QPSK,
             n_noise_samples: int = 500, rng_seed=None, threads: int = 1) -> PerformanceCurve:
    """Ensemble-mean MI per SNR point.

    The same sub-seeds are reused at every SNR point (common random numbers),
    which keeps the curve smooth and comparisons between ensembles paired.
    """
    seed = _master_seed(rng_seed)
    sums = [mi_over_ensemble(ensemble, s, constellation, n_noise_samples, seed, threads)
            for s in grid]
    vals = np.array([m.mean for m in sums])
    se = np.array([np.std(m.values, ddof=1) / math.sqrt(m.values.size) if m.values.size > 1
                   else float(m.stderr[0]) for m in sums])
    return PerformanceCurve("mi_bits", np.array(grid.points), vals, se, len(sums[0].values) * n_noise_samples)


def capacity_curve(ensemble, grid: SnrGrid) -> PerformanceCurve:
    hs = np.asarray(ensemble, dtype=complex)
    if hs.ndim == 2:
        hs = hs[None]
    caps = [np.atleast_1d(capacity(hs, s)) for s in grid]
    vals = np.array([c.mean() for c in caps])
    se = np.array([c.std(ddof=1) / math.sqrt(c.size) if c.size > 1 else 0.0 for c in caps])
    return PerformanceCurve("capacity_bits", np.array(grid.points), vals, se, hs.shape[0])


# -- symbol error rate --------------------------------------------------------------

def _zf_matrices(hs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """ZF filters per channel; pseudo-inverse where the inverse is ill-conditioned."""
    w = np.empty(hs.shape[:1] + hs.shape[:0:-1], dtype=complex)
    flags = np.zeros(hs.shape[0], dtype=bool)
    for i, h in enumerate(hs):
        if h.shape[0] == h.shape[1] and np.all(np.isfinite(h)) and np.linalg.cond(h) <= COND_MAX:
            w[i] = np.linalg.inv(h)
        else:
            w[i] = np.linalg.pinv(h)
            flags[i] = True
    return w, flags


def _ser_block(hs, w, constellation, snr, n, rng):
    n_r, n_t = hs.shape[1:]
    ch = rng.integers(0, hs.shape[0], n)
    idx = rng.integers(0, constellation.order, (n, n_t))
    x = constellation.points[idx]
    n0 = n_t / snr
    if math.isinf(snr):
        noise = np.zeros((n, n_r), dtype=complex)
    else:
        noise = math.sqrt(n0 / 2) * (rng.standard_normal((n, n_r)) + 1j * rng.standard_normal((n, n_r)))
    y = np.einsum("nrt,nt->nr", hs[ch], x) + noise
    xh = np.einsum("ntr,nr->nt", w[ch], y)
    return constellation.nearest(xh) != idx  # (n, n_t) error indicators


def ser_sweep(
    ensemble,
    grid: SnrGrid,
    constellation: Constellation = QPSK,
    n_trials_per_point: int = 100_000,
    rng_seed=None,
    threads: int = 1,
) -> PerformanceCurve:
    """Monte-Carlo SER of exact-channel ZF with per-stream hard decisions.

    ``ensemble`` is a stack of ``n_r x n_t`` matrices (``1 x 1`` gives the
    single-stream case).  Channels that cannot be inverted use the
    pseudo-inverse; their count is reported in ``singular_fallbacks``.
    A stream in the null space yields an all-zero estimate whose decision
    is the first constellation point, i.e. random guessing.
    """
    hs = np.asarray(ensemble, dtype=complex)
    if hs.ndim == 2:
        hs = hs[None]
    if hs.shape[0] == 0:
        raise ValueError("ensemble is empty")
    if n_trials_per_point < 2:
        raise ValueError("need at least two trials per point")
    w, flags = _zf_matrices(hs)
    seed = _master_seed(rng_seed)
    blocks = [(p, b, min(TRIAL_BLOCK, n_trials_per_point - b * TRIAL_BLOCK))
              for p in range(len(grid))
              for b in range(math.ceil(n_trials_per_point / TRIAL_BLOCK))]
    snrs = grid.linear

    def run(task):
        p, b, n = task
        return _ser_block(hs, w, constellation, float(snrs[p]), n, subseed_rng(seed, p, b))

    results = _pmap(run, blocks, threads)
    vals, ses, per = [], [], []
    for p in range(len(grid)):
        err = np.concatenate([r for (q, _, _), r in zip(blocks, results) if q == p])
        per_trial = err.mean(axis=1)
        vals.append(per_trial.mean())
        ses.append(per_trial.std(ddof=1) / math.sqrt(per_trial.size))
        per.append(err.mean(axis=0))
    return PerformanceCurve("ser", np.array(grid.points), np.array(vals), np.array(ses),
                            n_trials_per_point, np.array(per), int(flags.sum()))


def qpsk_awgn_ser(snr_db) -> np.ndarray:
    """Closed-form QPSK symbol error rate, ``2Q(sqrt(snr)) - Q(sqrt(snr))^2``."""
    from scipy.special import erfc

    q = 0.5 * erfc(np.sqrt(db_to_linear(snr_db)) / math.sqrt(2))
    return 2 * q - q ** 2


# -- combined sweep table ------------------------------------------------------------

SWEEP_COLUMNS = ("snr_db", "mi_mean", "mi_p10", "mi_p50", "mi_p90", "cap_mean", "ser", "stderr_ser")


def sweep_table(
    ensemble,
    grid: SnrGrid,
    constellation: Constellation = QPSK,
    n_noise_samples: int = 500,
    n_trials_per_point: int = 100_000,
    rng_seed=None,
    threads: int = 1,
) -> list[dict]:
    """One row per SNR point with MI percentiles, mean capacity and SER."""
    seed = _master_seed(rng_seed)
    hs = np.asarray(ensemble, dtype=complex)
    ser = ser_sweep(hs, grid, constellation, n_trials_per_point, seed, threads)
    rows = []
    for i, s in enumerate(grid):
        mi = mi_over_ensemble(hs, s, constellation, n_noise_samples, seed, threads)
        rows.append({
            "snr_db": s,
            "mi_mean": mi.mean,
            "mi_p10": mi.percentile(10),
            "mi_p50": mi.percentile(50),
            "mi_p90": mi.percentile(90),
            "cap_mean": ergodic_capacity(hs, s),
            "ser": float(ser.values[i]),
            "stderr_ser": float(ser.stderr[i]),
        })
    return rows
