"""Frame-based 2x2 baseband transceiver.

Transmit side: frame construction for the beam-space antenna (one RF
stream plus a virtual stream carried by the load states) and for a
conventional two-antenna transmitter, RRC pulse shaping, and the load
control waveform.  Receive side: timing acquisition, carrier-offset
estimation, matched filtering, least-squares channel estimation and
zero-forcing equalization.

The channel is flat: one 2x2 matrix per frame, applied at symbol level.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, signal

from .errors import InsufficientSamples, LengthMismatch, SingularChannel, SingularTraining
from .loads import LoadSchedule

COND_MAX = 1e12


# -- constellations ---------------------------------------------------------------

def _gray(n: int) -> np.ndarray:
    k = np.arange(n)
    return k ^ (k >> 1)


@dataclass(frozen=True, eq=False)
class Constellation:
    """Unit-average-energy symbol alphabet with integer bit labels."""

    points: np.ndarray
    labels: np.ndarray
    bits_per_symbol: int

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=complex)
        if len(set(np.round(pts, 12))) != pts.size:
            raise ValueError("constellation points must be distinct")
        if abs(np.mean(np.abs(pts) ** 2) - 1) > 1e-12:
            raise ValueError("constellation must have unit average energy")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "labels", np.asarray(self.labels, dtype=int))

    @property
    def order(self) -> int:
        return self.points.size

    def is_psk(self) -> bool:
        return bool(np.allclose(np.abs(self.points), 1.0))

    def ratio_set(self) -> np.ndarray:
        """All ratios x2/x1 of two symbols from this alphabet."""
        r = (self.points[None, :] / self.points[:, None]).ravel()
        return np.unique(np.round(r, 12))

    def nearest(self, x) -> np.ndarray:
        """Index of the nearest point; ties go to the lowest index."""
        x = np.asarray(x)
        return np.argmin(np.abs(x[..., None] - self.points) ** 2, axis=-1)

    def random_symbols(self, n, rng) -> np.ndarray:
        return self.points[rng.integers(0, self.order, n)]


def psk(order: int, offset: float | None = None) -> Constellation:
    """Gray-labelled M-PSK; QPSK sits at odd multiples of 45 degrees."""
    if offset is None:
        offset = math.pi / 4 if order == 4 else 0.0
    k = np.arange(order)
    pts = np.exp(1j * (offset + 2 * np.pi * k / order))
    return Constellation(pts, _gray(order), int(math.log2(order)))


QPSK = psk(4)

#: Antenna state numbering for QPSK load states (state 1 is xbar = -1).
STATE_OF_RATIO = {-1: 1, 1: 2, 1j: 3, -1j: 4}


# -- link parameters and frames --------------------------------------------------

@dataclass(frozen=True)
class LinkParams:
    n_sync: int = 4
    l_sync: int = 32
    l_train: int = 64
    l_data: int = 256
    symbol_rate: float = 390_625.0
    tx_oversample: int = 256
    rx_oversample: int = 4
    rrc_rolloff: float = 0.5
    rrc_span_symbols: int = 8

    def __post_init__(self):
        for name in ("n_sync", "l_sync", "l_train", "l_data", "tx_oversample",
                     "rx_oversample", "rrc_span_symbols"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or v < 1:
                raise ValueError(f"{name} must be a positive integer, got {v!r}")
        if not 0 < self.rrc_rolloff <= 1:
            raise ValueError(f"rrc_rolloff must be in (0, 1], got {self.rrc_rolloff}")
        if not self.symbol_rate > 0:
            raise ValueError("symbol_rate must be positive")

    @property
    def frame_length(self) -> int:
        return self.n_sync * self.l_sync + 2 * self.l_train + self.l_data

    @property
    def rx_sample_rate(self) -> float:
        return self.symbol_rate * self.rx_oversample

    @property
    def tx_sample_rate(self) -> float:
        return self.symbol_rate * self.tx_oversample

    def segments(self) -> dict[str, slice]:
        a = self.n_sync * self.l_sync
        b = a + self.l_train
        c = b + self.l_train
        return {"sync": slice(0, a), "train1": slice(a, b), "train2": slice(b, c),
                "data": slice(c, c + self.l_data)}

    def cfo_range_hz(self) -> float:
        """Largest offset the repetition estimator resolves without aliasing."""
        return self.symbol_rate / (2 * self.l_sync)

    def taps(self) -> np.ndarray:
        return rrc_taps(self.rrc_rolloff, self.rrc_span_symbols, self.rx_oversample)


@dataclass(frozen=True, eq=False)
class FramePair:
    """The two parallel symbol streams of one frame.

    ``stream1`` drives the RF port (or antenna 1); ``stream2`` is the
    virtual stream realized by the load states (or antenna 2).
    """

    stream1: np.ndarray
    stream2: np.ndarray
    params: LinkParams
    mode: str
    sync: np.ndarray = field(repr=False)
    training: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.stream1.shape != self.stream2.shape:
            raise LengthMismatch("streams must have equal length")
        if self.mode not in ("beamspace", "conventional"):
            raise ValueError(f"unknown frame mode {self.mode!r}")

    @property
    def symbols(self) -> np.ndarray:
        return np.vstack([self.stream1, self.stream2])

    @property
    def segments(self) -> dict[str, slice]:
        return self.params.segments()

    def segment(self, name: str) -> np.ndarray:
        return self.symbols[:, self.segments[name]]

    @property
    def state_sequence(self) -> np.ndarray:
        """Per-symbol combination ratio stream2/stream1 (NaN where stream1 is silent)."""
        with np.errstate(divide="ignore", invalid="ignore"):
            r = self.stream2 / self.stream1
        r[self.stream1 == 0] = np.nan
        return r

    def antenna_states(self) -> np.ndarray:
        """QPSK antenna state number (1-4) per symbol."""
        r = np.round(self.state_sequence, 9)
        return np.array([STATE_OF_RATIO[complex(v.real + 0.0, v.imag + 0.0)] for v in r])

    def known_symbols(self) -> np.ndarray:
        """Sync + training portion, known to the receiver."""
        seg = self.segments
        return self.symbols[:, : seg["train2"].stop]

    def check_invariants(self, constellation: Constellation = QPSK) -> list[str]:
        """List of violated frame-structure rules (empty when valid)."""
        bad = []
        seg = self.segments
        s1, s2 = self.stream1, self.stream2
        if self.mode == "beamspace":
            if not np.array_equal(s2[seg["sync"]], -s1[seg["sync"]]):
                bad.append("sync: stream2 != -stream1")
            if not np.array_equal(s2[seg["train1"]], s1[seg["train1"]]):
                bad.append("train1: stream2 != stream1")
            if not np.array_equal(s2[seg["train2"]], -s1[seg["train2"]]):
                bad.append("train2: stream2 != -stream1")
            ratios = constellation.ratio_set()
            r = self.state_sequence[seg["data"]]
            if np.any(np.min(np.abs(r[:, None] - ratios[None, :]), axis=1) > 1e-9):
                bad.append("data: ratio outside the constellation ratio set")
        else:
            if np.any(s2[seg["train1"]] != 0):
                bad.append("train1: stream2 not silent")
            if np.any(s1[seg["train2"]] != 0):
                bad.append("train2: stream1 not silent")
            if np.array_equal(self.sync[0], self.sync[1]):
                bad.append("sync: streams share one sequence")
        return bad


def _payloads(params: LinkParams, payload1, payload2):
    p1 = np.asarray(payload1, dtype=complex)
    p2 = np.asarray(payload2, dtype=complex)
    if p1.shape != (params.l_data,) or p2.shape != (params.l_data,):
        raise LengthMismatch(
            f"payloads must have {params.l_data} symbols, got {p1.shape} and {p2.shape}"
        )
    return p1, p2


def build_beamspace_frames(
    params: LinkParams, payload1, payload2, rng_seed=None, constellation: Constellation = QPSK
) -> FramePair:
    """Sync (xbar = -1), training (+1 then -1), then data."""
    p1, p2 = _payloads(params, payload1, payload2)
    rng = np.random.default_rng(rng_seed)
    sync = constellation.random_symbols(params.l_sync, rng)
    t = constellation.random_symbols(params.l_train, rng)
    sync_rep = np.tile(sync, params.n_sync)
    s1 = np.concatenate([sync_rep, t, t, p1])
    s2 = np.concatenate([-sync_rep, t, -t, p2])
    return FramePair(s1, s2, params, "beamspace", np.vstack([sync, -sync]), t[None, :])


def build_conventional_frames(
    params: LinkParams, payload1, payload2, rng_seed=None, constellation: Constellation = QPSK
) -> FramePair:
    """Distinct sync per antenna; each antenna trains while the other is silent."""
    p1, p2 = _payloads(params, payload1, payload2)
    rng = np.random.default_rng(rng_seed)
    sync = np.vstack([constellation.random_symbols(params.l_sync, rng) for _ in range(2)])
    t = np.vstack([constellation.random_symbols(params.l_train, rng) for _ in range(2)])
    z = np.zeros(params.l_train, dtype=complex)
    s1 = np.concatenate([np.tile(sync[0], params.n_sync), t[0], z, p1])
    s2 = np.concatenate([np.tile(sync[1], params.n_sync), z, t[1], p2])
    return FramePair(s1, s2, params, "conventional", sync, t)


def build_frames(mode: str, params: LinkParams, payload1, payload2, rng_seed=None) -> FramePair:
    if mode == "beamspace":
        return build_beamspace_frames(params, payload1, payload2, rng_seed)
    if mode == "conventional":
        return build_conventional_frames(params, payload1, payload2, rng_seed)
    raise ValueError(f"unknown mode {mode!r}")


def control_waveform(frames: FramePair, schedule: LoadSchedule, oversample: int | None = None) -> np.ndarray:
    """Reactance pair per transmit sample (zero-order hold), shape (2, n)."""
    if frames.mode != "beamspace":
        raise ValueError("control waveforms exist only for beam-space frames")
    os_ = oversample or frames.params.tx_oversample
    x = np.array([schedule.reactances(r) for r in frames.state_sequence])
    return np.repeat(x.T, os_, axis=1)


# -- pulse shaping ------------------------------------------------------------------

def rrc_taps(rolloff: float, span_symbols: int, oversample: int) -> np.ndarray:
    """Unit-energy root-raised-cosine taps, ``span_symbols * oversample + 1`` long."""
    if not 0 < rolloff <= 1:
        raise ValueError(f"rolloff must be in (0, 1], got {rolloff}")
    if span_symbols < 1 or oversample < 1:
        raise ValueError("span and oversampling must be positive")
    n = span_symbols * oversample
    t = (np.arange(n + 1) - n / 2) / oversample
    a = rolloff
    h = np.empty_like(t)
    for i, ti in enumerate(t):
        if ti == 0:
            h[i] = 1 + a * (4 / np.pi - 1)
        elif abs(abs(4 * a * ti) - 1) < 1e-12:
            h[i] = a / np.sqrt(2) * ((1 + 2 / np.pi) * np.sin(np.pi / (4 * a))
                                     + (1 - 2 / np.pi) * np.cos(np.pi / (4 * a)))
        else:
            h[i] = (np.sin(np.pi * ti * (1 - a)) + 4 * a * ti * np.cos(np.pi * ti * (1 + a))) / (
                np.pi * ti * (1 - (4 * a * ti) ** 2))
    return h / np.sqrt(np.sum(h ** 2))


def upsample_shape(symbols, taps: np.ndarray, oversample: int) -> np.ndarray:
    """Zero-stuff by ``oversample`` and filter; output has
    ``(n - 1) * oversample + len(taps)`` samples per row."""
    return signal.upfirdn(taps, np.asarray(symbols, dtype=complex), up=oversample, axis=-1)


def matched_filter_decimate(
    samples, taps: np.ndarray, oversample: int, timing_offset: int = 0, n_symbols: int | None = None
) -> np.ndarray:
    """Matched-filter and pick one sample per symbol.

    Symbol ``k`` is read at ``timing_offset + len(taps) - 1 + k * oversample``
    of the full convolution, which inverts :func:`upsample_shape` when the
    waveform starts ``timing_offset`` samples into ``samples``.
    """
    x = np.asarray(samples, dtype=complex)
    mf = signal.fftconvolve(x, np.conj(taps[::-1])[(None,) * (x.ndim - 1)], axes=-1)
    first = timing_offset + len(taps) - 1
    avail = (mf.shape[-1] - 1 - first) // oversample + 1
    n = avail if n_symbols is None else n_symbols
    if n > avail or first < 0:
        raise InsufficientSamples(f"need {n} symbols from offset {timing_offset}, have {avail}")
    return mf[..., first: first + n * oversample: oversample]


# -- channel application ------------------------------------------------------------

def simulate_link(
    frames: FramePair,
    h,
    snr_db: float,
    cfo_hz: float = 0.0,
    delay_samples: int = 0,
    params: LinkParams | None = None,
    rng_seed=None,
    tail_samples: int | None = None,
) -> np.ndarray:
    """Received samples at both antennas, shape (2, n), at the receiver rate.

    The noise variance per sample is the mean received data-symbol energy
    divided by the linear SNR (``snr_db = inf`` disables noise).
    """
    params = params or frames.params
    h = np.asarray(h, dtype=complex)
    taps = params.taps()
    os_ = params.rx_oversample
    y_sym = h @ frames.symbols
    wave = upsample_shape(y_sym, taps, os_)
    tail = len(taps) if tail_samples is None else tail_samples
    rx = np.zeros((h.shape[0], delay_samples + wave.shape[1] + tail), dtype=complex)
    rx[:, delay_samples: delay_samples + wave.shape[1]] = wave
    n = np.arange(rx.shape[1])
    rx *= np.exp(2j * np.pi * cfo_hz * n / params.rx_sample_rate)
    if math.isfinite(snr_db):
        rng = np.random.default_rng(rng_seed)
        es = np.mean(np.abs(y_sym[:, frames.segments["data"]]) ** 2)
        var = es / 10 ** (snr_db / 10)
        rx += math.sqrt(var / 2) * (rng.standard_normal(rx.shape) + 1j * rng.standard_normal(rx.shape))
    return rx


# -- receiver -----------------------------------------------------------------------

@dataclass(frozen=True)
class TimingResult:
    offset: int
    peak_to_average: float
    confident: bool


def timing_sync(rx, sync_sequences, params: LinkParams, threshold: float = 3.0) -> TimingResult:
    """Frame start (in samples) by correlating against the known sync sequences.

    Each single sync sequence is correlated coherently; the ``n_sync``
    repetitions, the receive antennas and the sequences are then combined
    non-coherently, which keeps the metric insensitive to carrier offset.
    ``peak_to_average`` is the metric peak over its mean across lags.
    """
    rx = np.atleast_2d(np.asarray(rx, dtype=complex))
    seqs = np.atleast_2d(np.asarray(sync_sequences, dtype=complex))
    taps = params.taps()
    os_ = params.rx_oversample
    period = params.l_sync * os_
    n_lags = rx.shape[1] - (params.n_sync - 1) * period - (params.l_sync - 1) * os_ - len(taps) + 1
    if n_lags < 1:
        raise InsufficientSamples("received block shorter than the sync preamble")
    power = np.zeros(rx.shape[1])
    for seq in seqs:
        ref = upsample_shape(seq, taps, os_)
        for r in rx:
            c = signal.correlate(r, ref, mode="valid", method="fft")
            power[: c.size] += np.abs(c) ** 2
    metric = np.zeros(n_lags)
    for k in range(params.n_sync):
        metric += power[k * period: k * period + n_lags]
    metric = np.sqrt(metric)
    best = int(np.argmax(metric))
    par = float(metric[best] / np.mean(metric))
    return TimingResult(best, par, par >= threshold)


def estimate_cfo(rx, params: LinkParams, start: int = 0) -> float:
    """Carrier offset from the repeated sync sequence (autocorrelation at one period).

    Antennas are combined by summing their autocorrelations before taking
    the angle.  Offsets beyond +-symbol_rate / (2 l_sync) alias.
    """
    rx = np.atleast_2d(np.asarray(rx, dtype=complex))
    os_ = params.rx_oversample
    period = params.l_sync * os_
    g = params.rrc_span_symbols * os_ + 1
    lo = start + g - 1
    hi = start + (params.n_sync - 1) * period
    if params.n_sync < 2 or hi <= lo or start + params.n_sync * period > rx.shape[1]:
        raise InsufficientSamples("need at least two clean sync repetitions")
    acc = np.sum(rx[:, lo + period: hi + period] * np.conj(rx[:, lo:hi]))
    return float(np.angle(acc) / (2 * np.pi * period / params.rx_sample_rate))


def refine_cfo(y_known, x_known, symbol_rate: float, search_hz: float = 200.0) -> float:
    """Residual offset from symbols whose transmitted values are known.

    Maximizes the energy of the least-squares fit of ``y`` onto the row
    space of ``x`` after de-rotation, over ``[-search_hz, search_hz]``.
    """
    y = np.atleast_2d(y_known)
    x = np.atleast_2d(x_known)
    n = np.arange(y.shape[1])
    gram = x @ x.conj().T
    if np.linalg.cond(gram) > COND_MAX:
        raise SingularTraining("known symbols do not span both streams")

    def neg_fit(f):
        yd = y * np.exp(-2j * np.pi * f * n / symbol_rate)
        b = yd @ x.conj().T
        return -float(np.real(np.sum(np.conj(b) * np.linalg.solve(gram.T, b.T).T)))

    grid = np.linspace(-search_hz, search_hz, 81)
    f0 = grid[int(np.argmin([neg_fit(f) for f in grid]))]
    step = grid[1] - grid[0]
    res = optimize.minimize_scalar(neg_fit, bounds=(f0 - step, f0 + step), method="bounded",
                                   options={"xatol": 1e-4})
    return float(res.x)


def training_matrix(training, mode: str = "beamspace") -> np.ndarray:
    """Two-phase training block ``T`` (2 x 2L).

    Beam-space: ``[[t, t], [t, -t]]``.  Conventional with two sequences
    ``t1, t2``: ``[[t1, 0], [0, t2]]``.
    """
    t = np.atleast_2d(np.asarray(training, dtype=complex))
    if mode == "beamspace":
        t = t[0]
        return np.block([[t, t], [t, -t]])
    if mode == "conventional":
        if t.shape[0] == 1:
            t = np.vstack([t, t])
        z = np.zeros_like(t[0])
        return np.block([[t[0], z], [z, t[1]]])
    raise ValueError(f"unknown mode {mode!r}")


def estimate_channel_ls(y_t1, y_t2, training) -> np.ndarray:
    """Least-squares channel estimate ``[y_t1 y_t2] T^H (T T^H)^-1``.

    ``training`` is either the beam-space sequence ``t`` (1-D) or an
    explicit 2 x 2L training block.
    """
    tr = np.asarray(training, dtype=complex)
    T = training_matrix(tr) if tr.ndim == 1 else tr
    Y = np.hstack([np.atleast_2d(y_t1), np.atleast_2d(y_t2)])
    if Y.shape[1] != T.shape[1]:
        raise LengthMismatch(f"observations ({Y.shape[1]}) and training ({T.shape[1]}) differ")
    gram = T @ T.conj().T
    if not np.any(gram) or np.linalg.cond(gram) > COND_MAX:
        raise SingularTraining("training block is rank deficient")
    b = Y @ T.conj().T
    return np.linalg.solve(gram.T, b.T).T


def check_streams_visible(h_hat, y_train, T, margin_db: float = 10.0) -> np.ndarray:
    """Per-stream column energy of ``h_hat`` over its LS noise floor, in dB.

    The noise variance is taken from the training residual.  Raises
    :class:`SingularChannel` when any stream sits less than ``margin_db``
    above the floor, i.e. the receiver cannot see it.
    """
    y = np.asarray(y_train, dtype=complex)
    T = np.asarray(T, dtype=complex)
    resid = y - h_hat @ T
    dof = y.shape[0] * (T.shape[1] - T.shape[0])
    sigma2 = np.sum(np.abs(resid) ** 2) / dof
    floor = y.shape[0] * sigma2 * np.real(np.diag(np.linalg.inv(T @ T.conj().T)))
    col = np.sum(np.abs(h_hat) ** 2, axis=0)
    with np.errstate(divide="ignore"):
        ratio_db = 10 * np.log10(col / np.maximum(floor, np.finfo(float).tiny))
    if np.any(ratio_db < margin_db):
        k = int(np.argmin(ratio_db)) + 1
        raise SingularChannel(f"stream {k} is {ratio_db[k - 1]:.1f} dB above the estimation noise floor")
    return ratio_db


def zf_equalize(h_hat, y, cond_max: float = COND_MAX) -> np.ndarray:
    h_hat = np.asarray(h_hat, dtype=complex)
    if not np.all(np.isfinite(h_hat)) or np.linalg.cond(h_hat) > cond_max:
        raise SingularChannel("channel matrix is not invertible")
    return np.linalg.solve(h_hat, np.asarray(y, dtype=complex))


@dataclass(frozen=True, eq=False)
class DemapResult:
    symbols: np.ndarray
    ser: float
    rce_db: float
    ser_per_stream: np.ndarray
    rce_db_per_stream: np.ndarray


def _rce_db(err, ref, axis=None):
    with np.errstate(divide="ignore"):
        return 10 * np.log10(np.mean(np.abs(err) ** 2, axis=axis) / np.mean(np.abs(ref) ** 2, axis=axis))


def demap_and_score(x_eq, constellation: Constellation, reference_symbols) -> DemapResult:
    x = np.atleast_2d(np.asarray(x_eq))
    ref = np.atleast_2d(np.asarray(reference_symbols))
    idx = constellation.nearest(x)
    dec = constellation.points[idx]
    wrong = ~np.isclose(dec, ref, atol=1e-9)
    return DemapResult(
        dec,
        float(np.mean(wrong)),
        float(_rce_db(x - ref, ref)),
        np.mean(wrong, axis=1),
        np.atleast_1d(_rce_db(x - ref, ref, axis=1)),
    )


@dataclass(frozen=True, eq=False)
class RxResult:
    timing: TimingResult
    cfo_coarse_hz: float
    cfo_hz: float
    h_hat: np.ndarray
    x_eq: np.ndarray
    score: DemapResult


def receive(
    rx,
    frames: FramePair,
    params: LinkParams | None = None,
    constellation: Constellation = QPSK,
    refine: bool = True,
    decision_directed: bool = True,
) -> RxResult:
    """Full receive chain for one frame.

    Timing, coarse CFO on the sync repetitions, de-rotation, matched
    filter, optional data-aided CFO refinement on the sync and training
    symbols, LS channel estimate, ZF on the data segment, scoring against
    the transmitted payload.  A stream whose channel column does not rise
    above the training noise floor raises :class:`SingularChannel`.  With ``decision_directed`` the residual
    offset is re-estimated once over the whole frame using the data
    decisions, and the estimate and equalizer are recomputed.  Beam-space and conventional frames share
    every step except the training block.
    """
    params = params or frames.params
    rx = np.atleast_2d(np.asarray(rx, dtype=complex))
    seg = frames.segments
    timing = timing_sync(rx, frames.sync, params)
    cfo = estimate_cfo(rx, params, timing.offset)
    n = np.arange(rx.shape[1])
    rx = rx * np.exp(-2j * np.pi * cfo * n / params.rx_sample_rate)
    y = matched_filter_decimate(rx, params.taps(), params.rx_oversample, timing.offset,
                                params.frame_length)
    cfo_total = cfo
    if refine:
        known = frames.known_symbols()
        k = known.shape[1]
        resid = refine_cfo(y[:, :k], known, params.symbol_rate)
        y = y * np.exp(-2j * np.pi * resid * np.arange(y.shape[1]) / params.symbol_rate)
        cfo_total += resid
    T = training_matrix(frames.training, frames.mode)
    y_t = y[:, seg["train1"].start: seg["train2"].stop]
    h_hat = estimate_channel_ls(y[:, seg["train1"]], y[:, seg["train2"]], T)
    check_streams_visible(h_hat, y_t, T)
    x_eq = zf_equalize(h_hat, y[:, seg["data"]])
    if refine and decision_directed:
        x_all = np.hstack([frames.known_symbols(), constellation.points[constellation.nearest(x_eq)]])
        resid = refine_cfo(y, x_all, params.symbol_rate, search_hz=20.0)
        y = y * np.exp(-2j * np.pi * resid * np.arange(y.shape[1]) / params.symbol_rate)
        cfo_total += resid
        h_hat = estimate_channel_ls(y[:, seg["train1"]], y[:, seg["train2"]], T)
        x_eq = zf_equalize(h_hat, y[:, seg["data"]])
    score = demap_and_score(x_eq, constellation, frames.symbols[:, seg["data"]])
    return RxResult(timing, cfo, cfo_total, h_hat, x_eq, score)
