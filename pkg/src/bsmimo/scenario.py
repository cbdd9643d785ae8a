"""Scenario configuration and the measurement-to-metrics pipeline.

A scenario is an INI file.  Sections and keys (defaults in brackets):

``[scenario]``  name, mode (beamspace | conventional), seed [0]
``[link]``      any :class:`~bsmimo.baseband.LinkParams` field
``[channel]``   source (rayleigh | ricean | paths | file), k_factor, file,
                n_paths [200], los (bool), scatter_fraction [0.1],
                rx_pol_deg [0], rx_spacing_m, tx_spacing_m, temporal_spread [0.01]
``[collect]``   spatial_points [400], snapshots [11], link_level [yes],
                snr_db [25], cfo_hz [0], delay_samples [0], interference_prob [0],
                ser_threshold [0.10], tx_power_dbm [0]
``[sweep]``     snr_db (list or start:step:stop), n_noise_samples [200],
                n_trials [20000]
``[antenna]``   s_matrix (printed | path), loss_r1_ohm [2], loss_r2_ohm [2],
                modulation_order [4], x1_free [-200], grid_min [-500],
                grid_max [500], grid_step [1], tuning_min, tuning_max,
                patterns (slant | cardioid | files), pattern_plus, pattern_minus,
                state_error [0.05], evm_cuts_deg [0, 90]
"""

from __future__ import annotations

import configparser
import csv
import io
import json
import logging
import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from . import baseband as bb
from . import channel as ch
from . import evaluation as ev
from . import farfield as ff
from . import loads, network
from .errors import BsmimoError, ConfigError, NumericalError, ZeroEnsemble

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
#: Power compensation for the two-antenna transmitter, which radiates twice
#: the total power of the single-feed antenna.
CONVENTIONAL_COMPENSATION_DB = -10 * math.log10(2)

SOURCES = ("rayleigh", "ricean", "paths", "file")


@dataclass(frozen=True)
class ChannelSource:
    kind: str = "rayleigh"
    k_factor: float = 0.0
    file: str | None = None
    n_paths: int = 200
    los: bool = False
    scatter_fraction: float = 0.1
    rx_pol_deg: float = 0.0
    rx_spacing_m: float = ch.RX_SPACING_M
    tx_spacing_m: float | None = None
    temporal_spread: float = 0.01


@dataclass(frozen=True)
class CollectParams:
    spatial_points: int = 400
    snapshots: int = 11
    link_level: bool = True
    snr_db: float = 25.0
    cfo_hz: float = 0.0
    delay_samples: int = 0
    interference_prob: float = 0.0
    ser_threshold: float = 0.10
    tx_power_dbm: float = 0.0


@dataclass(frozen=True)
class SweepParams:
    snr_db: tuple[float, ...] = (-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0)
    n_noise_samples: int = 200
    n_trials: int = 20_000


@dataclass(frozen=True)
class AntennaParams:
    s_matrix: str = "printed"
    loss_r1_ohm: float = 2.0
    loss_r2_ohm: float = 2.0
    modulation_order: int = 4
    x1_free: float = -200.0
    grid_min: float = -500.0
    grid_max: float = 500.0
    grid_step: float = 1.0
    tuning_min: float = -math.inf
    tuning_max: float = math.inf
    patterns: str = "slant"
    pattern_plus: str | None = None
    pattern_minus: str | None = None
    state_error: float = 0.05
    evm_cuts_deg: tuple[float, ...] = (0.0, 90.0)


@dataclass(frozen=True)
class ScenarioConfig:
    name: str = "scenario"
    mode: str = "beamspace"
    seed: int = 0
    link: bb.LinkParams = field(default_factory=bb.LinkParams)
    channel: ChannelSource = field(default_factory=ChannelSource)
    collect: CollectParams = field(default_factory=CollectParams)
    sweep: SweepParams = field(default_factory=SweepParams)
    antenna: AntennaParams = field(default_factory=AntennaParams)
    base_dir: Path = Path(".")

    def resolve(self, p: str) -> Path:
        q = Path(p)
        return q if q.is_absolute() else self.base_dir / q

    def with_seed(self, seed: int) -> "ScenarioConfig":
        return replace(self, seed=int(seed))


# -- parsing ---------------------------------------------------------------------

def _parse_floats(text: str) -> tuple[float, ...]:
    text = text.strip()
    if ":" in text:
        start, step, stop = (float(x) for x in text.split(":"))
        return ev.SnrGrid.from_range(start, stop, step).points
    return tuple(float(x) for x in text.replace(",", " ").split())


def _convert(section: str, key: str, raw: str, typ):
    where = f"{section}.{key}"
    try:
        if typ is bool:
            v = raw.strip().lower()
            if v in ("1", "yes", "true", "on"):
                return True
            if v in ("0", "no", "false", "off"):
                return False
            raise ValueError(f"not a boolean: {raw!r}")
        if typ is int:
            return int(raw)
        if typ is float:
            return float(raw)
        if typ == "floats":
            return _parse_floats(raw)
        return raw.strip()
    except ValueError as exc:
        raise ConfigError(where, str(exc)) from None


def _field_type(cls, name):
    ann = {f.name: f.type for f in fields(cls)}[name]
    ann = ann if isinstance(ann, str) else ann.__name__
    if ann.startswith("tuple"):
        return "floats"
    for key, typ in (("bool", bool), ("int", int), ("float", float)):
        if ann.startswith(key):
            return typ
    return str


def _section(cp, section: str, cls):
    if not cp.has_section(section):
        return cls()
    known = {f.name for f in fields(cls)}
    kw = {}
    for key, raw in cp.items(section):
        if key not in known:
            raise ConfigError(f"{section}.{key}", "unknown key")
        kw[key] = _convert(section, key, raw, _field_type(cls, key))
    try:
        return cls(**kw)
    except ValueError as exc:
        raise ConfigError(section, str(exc)) from None


def parse_config(text: str, base_dir: Path | str = ".") -> ScenarioConfig:
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError("config", str(exc).splitlines()[0]) from None
    allowed = {"scenario", "link", "channel", "collect", "sweep", "antenna"}
    for s in cp.sections():
        if s not in allowed:
            raise ConfigError(s, "unknown section")
    sc = dict(cp.items("scenario")) if cp.has_section("scenario") else {}
    for key in sc:
        if key not in ("name", "mode", "seed"):
            raise ConfigError(f"scenario.{key}", "unknown key")
    chan_raw = dict(cp.items("channel")) if cp.has_section("channel") else {}
    if "source" in chan_raw:
        cp.set("channel", "kind", chan_raw["source"])
        cp.remove_option("channel", "source")
    cfg = ScenarioConfig(
        name=sc.get("name", "scenario"),
        mode=sc.get("mode", "beamspace"),
        seed=_convert("scenario", "seed", sc.get("seed", "0"), int),
        link=_section(cp, "link", bb.LinkParams),
        channel=_section(cp, "channel", ChannelSource),
        collect=_section(cp, "collect", CollectParams),
        sweep=_section(cp, "sweep", SweepParams),
        antenna=_section(cp, "antenna", AntennaParams),
        base_dir=Path(base_dir),
    )
    validate(cfg)
    return cfg


def load_config(path) -> ScenarioConfig:
    p = Path(path)
    if not p.is_file():
        raise ConfigError("--config", f"file not found: {p}")
    return parse_config(p.read_text(encoding="utf-8"), p.parent)


def validate(cfg: ScenarioConfig) -> None:
    if cfg.mode not in ("beamspace", "conventional"):
        raise ConfigError("scenario.mode", f"must be beamspace or conventional, got {cfg.mode!r}")
    c = cfg.channel
    if c.kind not in SOURCES:
        raise ConfigError("channel.source", f"must be one of {', '.join(SOURCES)}, got {c.kind!r}")
    if c.kind == "file":
        if not c.file:
            raise ConfigError("channel.file", "required when source = file")
        if not cfg.resolve(c.file).is_file():
            raise ConfigError("channel.file", f"file not found: {cfg.resolve(c.file)}")
    if c.kind == "ricean" and c.k_factor < 0:
        raise ConfigError("channel.k_factor", "must be non-negative")
    if cfg.mode == "conventional" and not (c.tx_spacing_m and c.tx_spacing_m > 0):
        raise ConfigError("channel.tx_spacing_m", "conventional mode needs a positive antenna spacing")
    if not 0 <= c.scatter_fraction <= 1:
        raise ConfigError("channel.scatter_fraction", "must be in [0, 1]")
    if c.n_paths < 1:
        raise ConfigError("channel.n_paths", "must be >= 1")
    k = cfg.collect
    if k.spatial_points < 1 or k.snapshots < 1:
        raise ConfigError("collect", "spatial_points and snapshots must be >= 1")
    if not 0 <= k.interference_prob <= 1:
        raise ConfigError("collect.interference_prob", "must be in [0, 1]")
    if not 0 <= k.ser_threshold <= 1:
        raise ConfigError("collect.ser_threshold", "must be in [0, 1]")
    try:
        ev.SnrGrid(cfg.sweep.snr_db)
    except ValueError as exc:
        raise ConfigError("sweep.snr_db", str(exc)) from None
    if cfg.sweep.n_noise_samples < 2 or cfg.sweep.n_trials < 2:
        raise ConfigError("sweep", "n_noise_samples and n_trials must be >= 2")
    a = cfg.antenna
    if a.patterns not in ("slant", "cardioid", "files"):
        raise ConfigError("antenna.patterns", f"unknown pattern source {a.patterns!r}")
    if a.patterns == "files":
        for key in ("pattern_plus", "pattern_minus"):
            val = getattr(a, key)
            if not val or not cfg.resolve(val).is_file():
                raise ConfigError(f"antenna.{key}", f"pattern file not found: {val}")
    if a.s_matrix != "printed" and not cfg.resolve(a.s_matrix).is_file():
        raise ConfigError("antenna.s_matrix", f"file not found: {a.s_matrix}")


# -- deterministic output ----------------------------------------------------------

def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.floating, float)):
        return float(x) if math.isfinite(x) else None
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, Path):
        return str(x)
    return x


def write_json(doc: dict, path: Path) -> None:
    doc = {"schema_version": SCHEMA_VERSION, **doc}
    text = json.dumps(_jsonable(doc), sort_keys=True, indent=2, allow_nan=False)
    Path(path).write_text(text + "\n", encoding="utf-8")


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (float, np.floating)):
        return repr(float(v)) if math.isfinite(v) else ("nan" if math.isnan(v) else ("inf" if v > 0 else "-inf"))
    return str(v)


def write_csv(rows: list[dict], columns, path: Path) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_cell(r[c]) for c in columns])
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


# -- antenna side ------------------------------------------------------------------

def antenna_smatrix(cfg: ScenarioConfig, amended: bool = True) -> network.ScatteringMatrix3:
    a = cfg.antenna
    s = network.printed_smatrix() if a.s_matrix == "printed" else network.load_smatrix(cfg.resolve(a.s_matrix))
    if amended and (a.loss_r1_ohm or a.loss_r2_ohm):
        s = network.amend_with_losses(s, a.loss_r1_ohm, a.loss_r2_ohm)
    return s


def synth_loads(cfg: ScenarioConfig, out_dir: Path) -> dict:
    """Free-parameter sweep (CSV) and the schedule at the configured free parameter (JSON)."""
    a = cfg.antenna
    s_raw = antenna_smatrix(cfg, amended=False)
    s_am = antenna_smatrix(cfg)
    tuning = loads.TuningRange(a.tuning_min, a.tuning_max) if (
        math.isfinite(a.tuning_min) or math.isfinite(a.tuning_max)) else loads.UNBOUNDED
    grid = np.arange(a.grid_min, a.grid_max + a.grid_step / 2, a.grid_step)
    pts = loads.sweep_free_parameter(s_am, a.modulation_order, grid, tuning)
    rows = []
    ratios = loads.ratio_set(a.modulation_order)
    for p in pts:
        for k, xbar in enumerate(ratios):
            x1 = x2 = math.nan
            if p.schedule is not None:
                x1, x2 = p.schedule.states[k].x1, p.schedule.states[k].x2
            rows.append({"x1_free": p.x1_free, "state": k + 1, "xbar_re": xbar.real,
                         "xbar_im": xbar.imag, "x1": x1, "x2": x2, "feasible": p.feasible,
                         "pole": p.pole})
    write_csv(rows, ["x1_free", "state", "xbar_re", "xbar_im", "x1", "x2", "feasible", "pole"],
              out_dir / "loads_sweep.csv")
    sched = loads.build_schedule(s_am, a.modulation_order, a.x1_free, s_matrix_ref=a.s_matrix)
    states = []
    for k, (st, term) in enumerate(zip(sched.states, sched.terminations(a.loss_r1_ohm, a.loss_r2_ohm))):
        g = network.input_reflection(s_raw, term)
        states.append({"state": k + 1, "xbar": [st.xbar.real, st.xbar.imag], "x1_ohm": st.x1,
                       "x2_ohm": st.x2, "gamma": [g.real, g.imag],
                       "return_loss_db": network.return_loss_db(g)})
    doc = {
        "command": "synth-loads",
        "scenario": cfg.name,
        "x1_free_ohm": a.x1_free,
        "loss_ohm": [a.loss_r1_ohm, a.loss_r2_ohm],
        "symmetric": sched.check_symmetry(),
        "feasible_intervals": loads.feasible_intervals(pts),
        "states": states,
    }
    write_json(doc, out_dir / "load_schedule.json")
    return doc


def state_patterns(cfg: ScenarioConfig) -> tuple[ff.FarFieldPattern, ff.FarFieldPattern]:
    a = cfg.antenna
    if a.patterns == "slant":
        return ff.slant_states()
    if a.patterns == "cardioid":
        return ff.cardioid_states()
    return ff.load_pattern(cfg.resolve(a.pattern_plus)), ff.load_pattern(cfg.resolve(a.pattern_minus))


def antenna_report(cfg: ScenarioConfig, out_dir: Path) -> dict:
    """Basis powers, imbalance, orthogonality and EVM of the +-j states.

    The +-j state patterns are modelled as the ideal superposition with the
    second basis pattern scaled by ``1 + state_error``.
    """
    a = cfg.antenna
    e_plus, e_minus = state_patterns(cfg)
    basis = ff.basis_from_states(e_plus, e_minus)
    states = [(xb, ff.instantaneous_from_basis(ff.BasisPair(basis.b1, basis.b2 * (1 + a.state_error)), xb))
              for xb in (1j, -1j)]
    evm = ff.evm_map(basis, states)
    p1, p2 = basis.powers()
    s_raw = antenna_smatrix(cfg, amended=False)
    sched = loads.build_schedule(antenna_smatrix(cfg), a.modulation_order, a.x1_free)
    gammas = [network.input_reflection(s_raw, t) for t in sched.terminations(a.loss_r1_ohm, a.loss_r2_ohm)]
    doc = {
        "command": "antenna-report",
        "scenario": cfg.name,
        "basis_power": [p1, p2],
        "imbalance_db": ff.imbalance_ratio_db(basis),
        "orthogonality_residual": basis.orthogonality_residual(),
        "evm_cut_db": {f"{c:g}": ff.evm_cut_average_db(evm, basis.b1, c) for c in a.evm_cuts_deg},
        "return_loss_db": [network.return_loss_db(g) for g in gammas],
        "state_error": a.state_error,
    }
    write_json(doc, out_dir / "antenna_report.json")
    return doc


# -- channel generation --------------------------------------------------------------

@dataclass
class _Arms:
    tx_basis: ff.BasisPair | None
    tx_patterns: list | None
    rx_patterns: list


def _arms(cfg: ScenarioConfig) -> _Arms:
    psi = math.radians(cfg.channel.rx_pol_deg)
    rx = [ff.isotropic(psi=psi), ff.isotropic(psi=-psi)]
    if cfg.mode == "beamspace":
        return _Arms(ff.basis_from_states(*state_patterns(cfg)), None, rx)
    d = ff.dipole()
    return _Arms(None, [d, d], rx)


def true_channels(cfg: ScenarioConfig) -> np.ndarray:
    """Channel per (spatial point, snapshot), shape (S, T, 2, 2)."""
    c, k = cfg.channel, cfg.collect
    S, T = k.spatial_points, k.snapshots
    out = np.empty((S, T, 2, 2), dtype=complex)
    arms = _arms(cfg) if c.kind == "paths" else None
    for s in range(S):
        rng = ev.subseed_rng(cfg.seed, 1, s)
        if c.kind == "rayleigh":
            base = ch.iid_rayleigh(rng)
        elif c.kind == "ricean":
            h_los = np.exp(2j * np.pi * rng.uniform(size=(2, 2)))
            base = ch.ricean(c.k_factor, h_los, rng)
        if c.kind in ("rayleigh", "ricean"):
            for t in range(T):
                out[s, t] = math.sqrt(1 - c.temporal_spread) * base + ch.crandn(rng, (2, 2), c.temporal_spread)
            continue
        paths = (ch.los_paths(c.scatter_fraction, c.n_paths, rng) if c.los
                 else ch.uniform_paths(c.n_paths, rng))
        for t in range(T):
            jitter = np.exp(1j * math.sqrt(c.temporal_spread) * rng.standard_normal(len(paths)))
            pt = ch.PathSet(paths.departure, paths.arrival, paths.gain * jitter, paths.polarization)
            if cfg.mode == "beamspace":
                out[s, t] = ch.synthesize_beamspace_channel(arms.tx_basis, arms.rx_patterns, pt, c.rx_spacing_m)
            else:
                out[s, t] = ch.synthesize_conventional_channel(arms.tx_patterns, arms.rx_patterns, pt,
                                                               c.tx_spacing_m, rx_spacing_m=c.rx_spacing_m)
    return out


def _measure(cfg: ScenarioConfig, h: np.ndarray, s: int, t: int) -> tuple[np.ndarray, float]:
    """One link-level frame over ``h``; returns (H estimate, data SER)."""
    k = cfg.collect
    rng = ev.subseed_rng(cfg.seed, 2, s, t)
    p = cfg.link
    pay = [bb.QPSK.random_symbols(p.l_data, rng) for _ in range(2)]
    frames = bb.build_frames(cfg.mode, p, pay[0], pay[1], rng)
    rx = bb.simulate_link(frames, h, k.snr_db, k.cfo_hz, k.delay_samples, p, rng)
    if rng.uniform() < k.interference_prob:
        # wideband burst over the data segment at the signal power
        seg = frames.segments["data"]
        start = k.delay_samples + seg.start * p.rx_oversample
        stop = k.delay_samples + seg.stop * p.rx_oversample
        pw = np.mean(np.abs(rx[:, start:stop]) ** 2)
        rx[:, start:stop] += ch.crandn(rng, (2, stop - start), 4 * pw)
    try:
        res = bb.receive(rx, frames, p)
    except (NumericalError, ValueError) as exc:
        log.info("frame (%d, %d) lost: %s", s + 1, t + 1, exc)
        return np.zeros((2, 2)), 1.0
    return res.h_hat, res.score.ser


def collect(cfg: ScenarioConfig, threads: int = 1) -> ch.ChannelEnsemble:
    """Stage 1: per (spatial point, snapshot) channel record with measured SER."""
    if cfg.channel.kind == "file":
        return ch.load_ensemble(cfg.resolve(cfg.channel.file))
    k = cfg.collect
    hs = true_channels(cfg)
    tasks = [(s, t) for s in range(k.spatial_points) for t in range(k.snapshots)]
    if k.link_level:
        meas = ev._pmap(lambda st: _measure(cfg, hs[st], *st), tasks, threads)
    else:
        meas = [(hs[st], None) for st in tasks]
    recs = []
    for (s, t), (h_hat, ser) in zip(tasks, meas):
        row_power = np.sum(np.abs(h_hat) ** 2, axis=1)
        with np.errstate(divide="ignore"):
            p_rx = tuple(float(k.tx_power_dbm + 10 * np.log10(x)) if x > 0 else None for x in row_power)
        recs.append(ch.ChannelRecord(s + 1, t + 1, h_hat, ser, None if None in p_rx else p_rx))
    meta = ch.EnsembleMeta(cfg.name, k.spatial_points, k.snapshots, cfg.channel.rx_spacing_m * 1e3,
                           f"mode={cfg.mode} source={cfg.channel.kind}")
    return ch.ChannelEnsemble(tuple(recs), meta)


# -- pipeline ------------------------------------------------------------------------

def analyze(cfg: ScenarioConfig, ens: ch.ChannelEnsemble, out_dir: Path) -> tuple[dict, np.ndarray]:
    """Filter -> temporal average -> normalization -> ensemble statistics."""
    kept = ch.filter_records(ens, cfg.collect.ser_threshold)
    n_spatial = ens.meta.S or len(ens.spatial_indices())
    if len(kept) == 0:
        raise ZeroEnsemble("every record was rejected by the SER filter")
    avg = ch.temporal_average(kept)
    h_norm = ch.normalize_ensemble(np.stack([h for _, h in avg]))
    comp = CONVENTIONAL_COMPENSATION_DB if cfg.mode == "conventional" else 0.0
    ell = ch.ellipticity_stats(h_norm)
    r = ch.correlation_matrix(h_norm)
    ch.save_matrix_csv(np.abs(r), out_dir / "correlation_abs.csv", fmt="{!r}")
    doc = {
        "n_records": len(ens),
        "n_records_kept": len(kept),
        "n_unvalidated": sum(rec.unvalidated for rec in kept.records),
        "spatial_points": n_spatial,
        "spatial_retention": ch.spatial_retention(kept, n_spatial),
        "rms_frobenius": ch.rms_frobenius(h_norm),
        "ellipticity_mean": ell.mean,
        "ellipticity_mean_db": ell.mean_db,
        "ellipticity_n_zero": ell.n_zero,
        "correlation_abs": np.abs(r),
        "power_compensation_db": comp,
        "rx_power_dbm": ch.average_rx_power_dbm(kept, comp),
    }
    return doc, h_norm


def sweep(cfg: ScenarioConfig, h_norm: np.ndarray, out_dir: Path, threads: int = 1) -> list[dict]:
    sw = cfg.sweep
    rows = ev.sweep_table(h_norm, ev.SnrGrid(sw.snr_db), bb.QPSK, sw.n_noise_samples, sw.n_trials,
                          cfg.seed, threads)
    write_csv(rows, ev.SWEEP_COLUMNS, out_dir / "sweep.csv")
    return rows


def run(cfg: ScenarioConfig, out_dir: Path, threads: int = 1) -> dict:
    """Collect, filter, average, normalize, then compute metrics and write artifacts."""
    ens = collect(cfg, threads)
    ch.save_ensemble(ens, out_dir / "ensemble.csv")
    stats, h_norm = analyze(cfg, ens, out_dir)
    rows = sweep(cfg, h_norm, out_dir, threads)
    doc = {
        "command": "run",
        "scenario": cfg.name,
        "mode": cfg.mode,
        "seed": cfg.seed,
        "channel_source": cfg.channel.kind,
        "snapshots": cfg.collect.snapshots,
        **stats,
        "snr_db": [r["snr_db"] for r in rows],
        "mi_mean": [r["mi_mean"] for r in rows],
        "capacity_mean": [r["cap_mean"] for r in rows],
        "ser": [r["ser"] for r in rows],
    }
    write_json(doc, out_dir / "summary.json")
    return doc


def analyze_dataset(cfg: ScenarioConfig, ensemble_path: Path, out_dir: Path) -> dict:
    ens = ch.load_ensemble(ensemble_path)
    stats, _ = analyze(cfg, ens, out_dir)
    doc = {"command": "analyze-dataset", "scenario": ens.meta.scenario or cfg.name, **stats}
    write_json(doc, out_dir / "analysis.json")
    return doc


SIMULATE_COLUMNS = ("snr_db", "seed", "ser", "rce_db", "cfo_hat", "timing",
                    "h11_re", "h11_im", "h12_re", "h12_im", "h21_re", "h21_im", "h22_re", "h22_im")


def simulate(cfg: ScenarioConfig, out_dir: Path, n_frames: int = 10, threads: int = 1) -> list[dict]:
    """Link-level frames over channels from the configured source, per SNR point."""
    if cfg.channel.kind == "file":
        recs = ch.load_ensemble(cfg.resolve(cfg.channel.file)).records[:n_frames]
        hs = np.stack([r.h for r in recs])
    else:
        one_shot = replace(cfg.collect, spatial_points=n_frames, snapshots=1)
        hs = true_channels(replace(cfg, collect=one_shot))[:, 0]
    k = cfg.collect
    tasks = [(snr, f) for snr in cfg.sweep.snr_db for f in range(hs.shape[0])]

    def one(task):
        snr, f = task
        rng = ev.subseed_rng(cfg.seed, 3, f, int(round(snr * 1000)))
        p = cfg.link
        pay = [bb.QPSK.random_symbols(p.l_data, rng) for _ in range(2)]
        frames = bb.build_frames(cfg.mode, p, pay[0], pay[1], rng)
        h = hs[f]
        rx = bb.simulate_link(frames, h, snr, k.cfo_hz, k.delay_samples, p, rng)
        row = {"snr_db": snr, "seed": f}
        try:
            r = bb.receive(rx, frames, p)
            e = r.h_hat.ravel()
            row.update(ser=r.score.ser, rce_db=r.score.rce_db, cfo_hat=r.cfo_hz, timing=r.timing.offset)
        except (NumericalError, ValueError):
            e = np.full(4, np.nan + 1j * np.nan)
            row.update(ser=1.0, rce_db=math.nan, cfo_hat=math.nan, timing=-1)
        for n, v in zip(("h11", "h12", "h21", "h22"), e):
            row[f"{n}_re"], row[f"{n}_im"] = v.real, v.imag
        return row

    rows = ev._pmap(one, tasks, threads)
    write_csv(rows, SIMULATE_COLUMNS, out_dir / "simulate.csv")
    return rows


__all__ = [
    "ScenarioConfig", "ChannelSource", "CollectParams", "SweepParams", "AntennaParams",
    "parse_config", "load_config", "validate", "synth_loads", "antenna_report", "collect",
    "true_channels", "analyze", "analyze_dataset", "sweep", "simulate", "run", "write_csv",
    "write_json", "SCHEMA_VERSION", "BsmimoError",
]
