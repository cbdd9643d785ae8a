"""End-to-end acceptance checks, one test per criterion.

Each test prints a single ``CRITERION <n>: PASS|FAIL`` line with the
measured quantities, then asserts.
"""

import json
import math
import time

import numpy as np
import pytest

from bsmimo import baseband as bb, channel as ch, cli, evaluation as ev, farfield as ff, loads, network

REFERENCE_LOADS = [(-200.0, -66.0), (-66.0, -200.0), (-95.4, -13.8), (-13.8, -95.4)]


@pytest.fixture
def verdict(capsys):
    def report(n, ok, detail):
        with capsys.disabled():
            print(f"\nCRITERION {n}: {'PASS' if ok else 'FAIL'} | {detail}")
        assert ok, detail
    return report


def crandn(rng, shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2)


def worst_rel(sched):
    return max(abs(x - ref) / abs(ref) for st, row in zip(sched, REFERENCE_LOADS) for x, ref in zip((st.x1, st.x2), row))


def test_c01_reference_load_schedule(verdict, printed_s, amended_s):
    t0 = time.perf_counter()
    amended = loads.build_schedule(amended_s, 4, -200.0)
    raw = loads.build_schedule(printed_s, 4, -200.0)
    dt = time.perf_counter() - t0
    ok = worst_rel(amended) <= 0.10 and amended.check_symmetry() and raw.check_symmetry() and dt < 1
    verdict(1, ok, f"amended worst dev {worst_rel(amended):.1%} {amended.all_reactances().round(1).tolist()}; "
                   f"raw worst dev {worst_rel(raw):.1%} (informational); symmetric; {dt * 1e3:.1f} ms")


def test_c02_return_loss(verdict, printed_s):
    t0 = time.perf_counter()
    sched = loads.build_schedule(printed_s, 4, -200.0)
    g = np.array([network.input_reflection(printed_s, t) for t in sched.terminations()])
    dt = time.perf_counter() - t0
    spread = float(np.max(np.abs(g - g[0])))
    rl = -20 * math.log10(abs(g[0]))
    ok = spread < 1e-9 and abs(rl - 19.6) <= 1.5 and dt < 1
    verdict(2, ok, f"Gamma spread {spread:.1e}, |Gamma|^2 = {-rl:.2f} dB, {dt * 1e3:.1f} ms")


def test_c03_normalization(verdict):
    rng = np.random.default_rng(3)
    h = ch.normalize_ensemble(5.7 * crandn(rng, (400, 2, 2)))
    rms = ch.rms_frobenius(h)
    again = ch.normalize_ensemble(h)
    ok = abs(rms - 2) < 1e-12 and np.allclose(again, h, rtol=1e-14, atol=0)
    verdict(3, ok, f"rms Frobenius - 2 = {rms - 2:.1e}, idempotent max diff {np.max(np.abs(again - h)):.1e}")


def test_c04_ellipticity(verdict):
    g = ch.ellipticity(np.diag([1.0, 3.0]))
    rng = np.random.default_rng(4)
    hs = crandn(rng, (10_000, 2, 2))
    e = ch.ellipticity(hs)
    scaled = ch.ellipticity(hs * (0.01 + 100 * rng.uniform(size=(10_000, 1, 1))) * np.exp(1j * rng.uniform(size=(10_000, 1, 1))))
    dev = float(np.max(np.abs(scaled - e)))
    ok = g == 0.6 and np.all((e >= 0) & (e <= 1)) and dev < 1e-12
    verdict(4, ok, f"gamma(diag(1,3)) = {g!r}, range [{e.min():.3g}, {e.max():.3g}], scale dev {dev:.1e}")


def test_c05_mutual_information(verdict):
    t0 = time.perf_counter()
    sat = ev.mutual_information_mc(np.eye(2), 30, rng_seed=0)
    low = [(s, ev.mutual_information_mc(np.eye(2), s, n_noise_samples=2000, rng_seed=1), ev.capacity(np.eye(2), s))
           for s in (-20, -15, -10, -5, 0)]
    hs = ch.normalize_ensemble(crandn(np.random.default_rng(5), (50, 2, 2)))
    erg = []
    for s in (-10, -5, 0):
        m = ev.mi_over_ensemble(hs, s, n_noise_samples=500, rng_seed=2, snr_index=0)
        erg.append(abs(m.mean - ev.ergodic_capacity(hs, s)))
    worst_low = max([abs(m - c) for _, m, c in low] + erg)
    z_max = -math.inf
    for i, h in enumerate(hs):
        for j, s in enumerate((-5, 10, 25)):
            mi, se = ev.mutual_information_mc(h, s, n_noise_samples=500, rng_seed=ev.subseed_rng(6, i, j),
                                              full_output=True)
            z_max = max(z_max, (mi - ev.capacity(h, s)) / se if se > 0 else -math.inf)
    dt = time.perf_counter() - t0
    ok = abs(sat - 4) <= 0.05 and worst_low < 0.1 and z_max <= 3 and dt < 120
    verdict(5, ok, f"I(H=I, 30 dB) = {sat:.4f}; max |MI - C| at <= 0 dB = {worst_low:.4f}; "
                   f"max (MI - C)/stderr over 50 channels = {z_max:.2f}; {dt:.1f} s")


def test_c06_ser_oracle(verdict):
    t0 = time.perf_counter()
    grid = ev.SnrGrid((0, 4, 8, 12))
    c = ev.ser_sweep(np.ones((1, 1, 1)), grid, n_trials_per_point=100_000, rng_seed=6)
    p = ev.qpsk_awgn_ser(grid.points)
    z = (c.values - p) / np.sqrt(p * (1 - p) / c.n_trials)
    dt = time.perf_counter() - t0
    ok = bool(np.all(np.abs(z) < 3)) and dt < 60
    verdict(6, ok, f"SER {np.round(c.values, 6).tolist()} vs {np.round(p, 6).tolist()}, z {np.round(z, 2).tolist()}, "
                   f"{dt:.1f} s")


def _link_trial(mode, seed):
    rng = np.random.default_rng([7, seed])
    while True:
        h = crandn(rng, (2, 2))
        if np.linalg.cond(h) <= 4:
            break
    h = 2 * h / np.linalg.norm(h)
    p = bb.LinkParams()
    pay = [bb.QPSK.random_symbols(p.l_data, rng) for _ in range(2)]
    frames = bb.build_frames(mode, p, pay[0], pay[1], rng)
    rx = bb.simulate_link(frames, h, 30, 500.0, 37, p, rng)
    r = bb.receive(rx, frames, p)
    return r.cfo_hz - 500.0, r.timing.offset, np.linalg.norm(r.h_hat - h) / np.linalg.norm(h), r.score.ser


def test_c07_loopback(verdict):
    t0 = time.perf_counter()
    parts, ok = [], True
    for mode in ("beamspace", "conventional"):
        res = np.array([_link_trial(mode, s) for s in range(100)])
        cfo_err, timing, h_err, ser = res.T
        good = (np.max(np.abs(cfo_err)) <= 5 and np.all(timing == 37) and np.max(h_err) < 0.02
                and np.all(ser == 0))
        ok &= bool(good)
        parts.append(f"{mode}: max|CFO err| {np.max(np.abs(cfo_err)):.2f} Hz, timing exact "
                     f"{int(np.sum(timing == 37))}/100, max H err {np.max(h_err):.2%}, SER>0 in {int(np.sum(ser > 0))}")
    dt = time.perf_counter() - t0
    verdict(7, ok and dt < 120, "; ".join(parts) + f"; {dt:.1f} s")


def test_c08_ls_estimator(verdict):
    rng = np.random.default_rng(8)
    t = bb.QPSK.random_symbols(64, rng)
    T = bb.training_matrix(t)
    worst = 0.0
    for _ in range(100):
        h = crandn(rng, (2, 2))
        y = h @ T
        worst = max(worst, float(np.max(np.abs(bb.estimate_channel_ls(y[:, :64], y[:, 64:], T) - h))))
    h = crandn(rng, (2, 2))
    sigma2, n = 0.05, 10_000
    noise = math.sqrt(sigma2) * crandn(rng, (n, 2, 128))
    y = h @ T + noise
    est = np.stack([bb.estimate_channel_ls(yy[:, :64], yy[:, 64:], T) for yy in y])
    mse = float(np.mean(np.sum(np.abs(est - h) ** 2, axis=(1, 2))))
    analytic = sigma2 * 2 * float(np.trace(np.linalg.inv(T @ T.conj().T)).real)
    ok = worst < 1e-10 and abs(mse / analytic - 1) < 0.05
    verdict(8, ok, f"noiseless max err {worst:.1e}; noisy MSE/analytic = {mse / analytic:.4f}")


def test_c09_basis_orthogonality(verdict):
    res = [ff.basis_from_states(*f()).orthogonality_residual() for f in (ff.slant_states, ff.cardioid_states)]
    iso = ff.radiated_power(ff.isotropic())
    dip = ff.radiated_power(ff.dipole())
    ok = max(res) < 1e-9 and abs(iso - 4 * math.pi) < 1e-3 and abs(dip - 8 * math.pi / 3) < 1e-3
    verdict(9, ok, f"orthogonality residuals {[f'{r:.1e}' for r in res]}; isotropic - 4pi = {iso - 4 * math.pi:.1e}; "
                   f"dipole - 8pi/3 = {dip - 8 * math.pi / 3:.1e}")


def _rx_fixture(alpha_deg):
    a = math.radians(alpha_deg)
    return [ff.isotropic(psi=a), ff.isotropic(psi=-a)]


def _variation(x):
    x = np.asarray(x)
    return float((x.max() - x.min()) / x.max())


def test_c10_qualitative(verdict):
    t0 = time.perf_counter()
    basis = ff.basis_from_states(*ff.slant_states())
    d = ff.dipole()
    rx0 = _rx_fixture(0)

    def bs(paths, rx):
        return ch.synthesize_beamspace_channel(basis, rx, paths, ch.RX_SPACING_M)

    rich = [ch.uniform_paths(200, s) for s in range(200)]
    h_bs = ch.normalize_ensemble(np.stack([bs(p, rx0) for p in rich]))
    h_cv = ch.normalize_ensemble(np.stack([
        ch.synthesize_conventional_channel([d, d], rx0, p, ch.TX_SPACING_M, rx_spacing_m=ch.RX_SPACING_M)
        for p in rich]))
    grid = ev.SnrGrid.from_range(-10, 30, 5)
    gap = np.abs(ev.mi_curve(h_bs, grid, n_noise_samples=100, rng_seed=1).values
                 - ev.mi_curve(h_cv, grid, n_noise_samples=100, rng_seed=1).values)

    def pol_sweep(path_sets):
        ell, mi = [], []
        for alpha in (0, 15, 30, 45):
            h = ch.normalize_ensemble(np.stack([bs(p, _rx_fixture(alpha)) for p in path_sets]))
            ell.append(ch.ellipticity_stats(h).mean)
            mi.append(ev.mi_over_ensemble(h, 10, n_noise_samples=100, rng_seed=1).mean)
        return _variation(ell), _variation(mi)

    los_ell, los_mi = pol_sweep([ch.los_paths(0.1, 200, s) for s in range(400)])
    rich_ell, rich_mi = pol_sweep([ch.uniform_paths(200, 10_000 + s) for s in range(400)])
    dt = time.perf_counter() - t0
    ok = (gap.max() < 0.2 and los_ell > 0.10 and los_mi > 0.10 and rich_ell < 0.05 and rich_mi < 0.05
          and dt < 600)
    verdict(10, ok, f"(a) max MI gap {gap.max():.3f} bits; (b) LOS variation ellipticity {los_ell:.1%} "
                    f"MI {los_mi:.1%}, rich ellipticity {rich_ell:.1%} MI {rich_mi:.1%}; {dt:.1f} s")


SMALL = """
[scenario]
name = det
mode = {mode}
seed = 11
[channel]
source = paths
n_paths = 40
tx_spacing_m = 0.12
[collect]
spatial_points = 5
snapshots = 2
interference_prob = 0.3
[sweep]
snr_db = 0:10:20
n_noise_samples = 20
n_trials = 2000
"""


def test_c11_determinism(verdict, tmp_path):
    mismatched = []
    for mode in ("beamspace", "conventional"):
        cfg = tmp_path / f"{mode}.cfg"
        cfg.write_text(SMALL.format(mode=mode))
        for cmd in (["run"], ["simulate", "--frames", "2"], ["synth-loads"], ["antenna-report"]):
            outs = []
            for k in range(2):
                out = tmp_path / f"{mode}-{cmd[0]}-{k}"
                assert cli.main([*cmd, "--config", str(cfg), "--out-dir", str(out), "--threads", str(1 + 2 * k)]) == 0
                outs.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})
            if outs[0] != outs[1] or not outs[0]:
                mismatched.append(f"{mode}/{cmd[0]}")
            for name, blob in outs[0].items():
                if name.endswith(".json"):
                    json.loads(blob)
    verdict(11, not mismatched, f"byte-identical reruns for run/simulate/synth-loads/antenna-report in both modes"
                                if not mismatched else f"differences in {mismatched}")
