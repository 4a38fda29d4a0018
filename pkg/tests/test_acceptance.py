"""Acceptance criteria, one test per criterion.

Each test prints a single ``[criterion n] PASS|FAIL`` line (also collected
into ``RESULTS`` and echoed in the pytest terminal summary). Tolerances and
runtime limits are the contractual ones; runtime counts toward the verdict.
"""
import io
import math
import time

import numpy as np
import pytest

from ratevol.chf import GArgs, bond_cir, g_cir, g_jacobi, pricing_wz
from ratevol.cli import RunConfig, cmd_smile
from ratevol.mc import McConfig, mc_chf, mc_price, simulate, simulate_t_forward_cir
from ratevol.models import JacobiParams, MarketState, reference_params
from ratevol.pricing import bond, price_call, price_put
from ratevol.specfun import hyp1f1, jacobi_p_explicit, jacobi_p_sequence, log_gamma, pochhammer
from ratevol.vol import atm_slope, bs_call_forward, implied_vol, smile, SmileRequest

RESULTS = []
S0 = 100.0
X0 = math.log(S0)
STRIKES = (90.0, 100.0, 110.0)
MATURITIES = (0.25, 1.0)

CIR = reference_params(0.5)
JACOBI = JacobiParams(kappa=0.3, theta=0.8, delta=0.2, gamma=0.2, eta=0.05, rho=0.5)
CIR_STATE = MarketState(0.0, X0, CIR.theta)
JACOBI_STATE = MarketState(0.0, X0, 0.5)


def report(n, ok, detail, elapsed, limit):
    ok = bool(ok) and elapsed < limit
    line = f"[criterion {n:>2}] {'PASS' if ok else 'FAIL'} ({elapsed:.2f}s / {limit:g}s) {detail}"
    RESULTS.append(line)
    print(line)
    return ok


def relerr(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


def test_criterion_01_special_functions():
    t0 = time.perf_counter()
    rng = np.random.default_rng(1)
    z = rng.uniform(-10, 10, 200) + 1j * rng.uniform(-10, 10, 200)
    z = z[np.abs(z) <= 10]
    a = rng.uniform(-5, 5, z.size) + 1j * rng.uniform(-5, 5, z.size)
    zs = z[np.abs(z) > 1e-2]
    errs = {
        # Gamma(z+1) = z Gamma(z), kept away from the poles
        "gamma": np.max(np.abs(np.exp(log_gamma(z + 1) - log_gamma(z)) - z) / np.abs(z)),
        "1F1(a;a;z)": max(relerr(hyp1f1(ai, ai, zi), np.exp(zi)) for ai, zi in zip(a, z)),
        "1F1(1;2;z)": max(relerr(hyp1f1(1.0, 2.0, zi), np.expm1(zi) / zi) for zi in zs),
    }
    xs = rng.uniform(-1, 1, 40)
    al = rng.uniform(-0.9, 5, 40) + 1j * rng.uniform(-2, 2, 40)
    be = rng.uniform(-0.9, 5, 40) + 1j * rng.uniform(-2, 2, 40)
    worst = 0.0
    for x, p, q in zip(xs, al, be):
        seq = jacobi_p_sequence(10, p, q, x)
        for n in range(11):
            ref = jacobi_p_explicit(n, p, q, x)
            worst = max(worst, abs(seq[n] - ref) / max(abs(ref), 1.0))
    errs["jacobi"] = worst
    worst = 0.0
    for x in a:
        for n in range(11):
            ref = np.exp(log_gamma(x + n) - log_gamma(x))
            worst = max(worst, relerr(pochhammer(x, n), ref))
    errs["pochhammer"] = worst
    elapsed = time.perf_counter() - t0
    detail = " ".join(f"{k}={v:.1e}" for k, v in errs.items())
    assert report(1, max(errs.values()) < 1e-10, detail, elapsed, 1.0)


def test_criterion_02_normalisation():
    t0 = time.perf_counter()
    worst = 0.0
    omegas = np.array([0.0, 0.5 - 1.5j, 2 - 1.5j, 10 + 0.3j, -3 - 0.5j])
    for T in (0.1, 1.0, 5.0):
        for y in (0.01, 0.05, 0.2):
            g = g_cir(CIR, GArgs(0.0, T, y, np.zeros(5, complex), np.zeros(5, complex), omegas))
            worst = max(worst, np.max(np.abs(g - 1)))
        for y in (0.1, 0.5, 0.9):
            g = g_jacobi(JACOBI, GArgs(0.0, T, y, np.zeros(5, complex), np.zeros(5, complex), omegas))
            worst = max(worst, np.max(np.abs(g - 1)))
    elapsed = time.perf_counter() - t0
    assert report(2, worst < 1e-10, f"max |G - 1| = {worst:.1e}", elapsed, 1.0)


def test_criterion_03_cir_bond():
    t0 = time.perf_counter()
    worst = 0.0
    for tau in (0.1, 0.25, 1.0, 5.0):
        for y in (0.01, 0.05, 0.2):
            g = complex(g_cir(CIR, GArgs(0.0, tau, y, 1.0 + 0j, 0j, 0j)))
            worst = max(worst, abs(g - bond_cir(CIR, 0.0, y, tau)) / bond_cir(CIR, 0.0, y, tau))
    elapsed = time.perf_counter() - t0
    assert report(3, worst < 1e-8, f"max rel err = {worst:.1e}", elapsed, 1.0)


def test_criterion_04_mc_chf():
    t0 = time.perf_counter()
    cfg = McConfig(n_paths=100_000, steps_per_year=250)
    parts, zmax = [], 0.0
    for name, model, state, T, g in (("cir", CIR, CIR_STATE, 0.25, g_cir),
                                     ("jacobi", JACOBI, JACOBI_STATE, 0.5, g_jacobi)):
        ens = simulate(model, state, T, cfg)
        for omega in (0.5 - 1.5j, 2 - 1.5j):
            w, z = pricing_wz(omega)
            exact = complex(g(model, GArgs(0.0, T, state.y, w, z, omega)))
            est, se = mc_chf(ens, omega, state.x)
            zs = abs(est - exact) / se
            zmax = max(zmax, zs)
            parts.append(f"{name}@{omega.real:g}:{zs:.2f}")
    elapsed = time.perf_counter() - t0
    assert report(4, zmax < 3, "|z| " + " ".join(parts), elapsed, 120.0)


def _call_z(model, state, cfg):
    out = []
    for T in MATURITIES:
        ens = simulate(model, state, T, cfg)
        for K in STRIKES:
            fourier = price_call(model, state, T, K)
            est, se = mc_price(ens, lambda x: np.maximum(np.exp(x) - K, 0.0))
            out.append((T, K, (est - fourier) / se))
    return out


def test_criterion_05_mc_calls():
    t0 = time.perf_counter()
    # CIR: reflection removes the clip bias of full truncation at this parameter set
    cir = _call_z(CIR, CIR_STATE, McConfig(scheme="reflection"))
    jac = _call_z(JACOBI, JACOBI_STATE, McConfig())
    elapsed = time.perf_counter() - t0
    zmax = max(abs(z) for *_, z in cir + jac)
    fmt = lambda rows: " ".join(f"{T:g}/{K:g}:{z:+.2f}" for T, K, z in rows)  # noqa: E731
    ok = report(5, zmax < 3, f"cir[reflection] {fmt(cir)} | jacobi {fmt(jac)}", elapsed, 300.0)
    ft = _call_z(CIR, CIR_STATE, McConfig(scheme="full_truncation"))
    info = f"[criterion  5] info: cir[full_truncation] z {fmt(ft)}"
    RESULTS.append(info)
    print(info)
    assert ok


def test_criterion_06_parity():
    t0 = time.perf_counter()
    worst = 0.0
    for model, state in ((CIR, CIR_STATE), (JACOBI, JACOBI_STATE)):
        for T in MATURITIES:
            B = bond(model, state, T)
            for K in STRIKES:
                c = price_call(model, state, T, K)
                p = price_put(model, state, T, K)
                worst = max(worst, abs(c - p - (S0 - K * B)))
    elapsed = time.perf_counter() - t0
    assert report(6, worst < 1e-6 * S0, f"max |C - P - (S - K B)| = {worst:.1e}", elapsed, 60.0)


def test_criterion_07_smile_shape():
    t0 = time.perf_counter()
    ok, parts = True, []
    for T in MATURITIES:
        slopes = [abs(atm_slope(reference_params(r), CIR_STATE, T)) for r in (0.0, 0.5, 1.0)]
        ok &= slopes[0] < slopes[1] < slopes[2]
        parts.append(f"T={T:g} |slope| " + "<".join(f"{s:.4f}" for s in slopes))
    res = smile(SmileRequest(reference_params(0.0), CIR_STATE, 0.25, (-0.2, 0.2)))
    gap = abs(res.implied_vols[0] - res.implied_vols[1])
    ok &= gap > 1e-3
    parts.append(f"rho=0 |s(-0.2)-s(0.2)|={gap:.4f}")
    elapsed = time.perf_counter() - t0
    assert report(7, ok, "; ".join(parts), elapsed, 300.0)


def test_criterion_08_t_forward_martingale():
    t0 = time.perf_counter()
    te = simulate_t_forward_cir(CIR, CIR_STATE, 1.0, McConfig(scheme="reflection"))
    est, se = te.mean_and_stderr()
    target = S0 / bond_cir(CIR, 0.0, CIR_STATE.y, 1.0)
    z = (est - target) / se
    elapsed = time.perf_counter() - t0
    assert report(8, abs(z) < 3, f"mean={est:.4f} target={target:.4f} z={z:+.2f} [reflection]", elapsed, 60.0)


def test_criterion_09_implied_vol_round_trip():
    rng = np.random.default_rng(9)
    n = 1000
    F = np.exp(rng.uniform(math.log(1.0), math.log(1000.0), n))
    tau = rng.uniform(0.01, 5.0, n)
    sigma = rng.uniform(0.01, 2.0, n)
    # strikes within three standard deviations, where the price carries the vol
    K = F * np.exp(rng.uniform(-3, 3, n) * sigma * np.sqrt(tau))
    t0 = time.perf_counter()
    worst = 0.0
    for f, k, t, s in zip(F, K, tau, sigma):
        price = bs_call_forward(f, k, t, s)
        worst = max(worst, abs(implied_vol(price, f, k, t) - s))
    elapsed = time.perf_counter() - t0
    assert report(9, worst < 1e-8, f"max |sigma error| = {worst:.1e} over {n}", elapsed, 1.0)


def test_criterion_10_determinism():
    t0 = time.perf_counter()
    cfg = RunConfig()
    runs = []
    for _ in range(2):
        buf = io.StringIO()
        cmd_smile(cfg, 0.25, -0.3, 0.3, 31, buf)
        runs.append(buf.getvalue().encode())
    same_csv = runs[0] == runs[1]
    payoff = lambda x: np.maximum(np.exp(x) - 100.0, 0.0)  # noqa: E731
    one = mc_price(simulate(CIR, CIR_STATE, 1.0, McConfig(n_paths=50_000, n_threads=1)), payoff)
    many = mc_price(simulate(CIR, CIR_STATE, 1.0, McConfig(n_paths=50_000, n_threads=4)), payoff)
    same_mc = one == many
    elapsed = time.perf_counter() - t0
    assert report(10, same_csv and same_mc,
                  f"csv identical={same_csv} ({len(runs[0])} bytes), mc 1 vs 4 threads identical={same_mc}",
                  elapsed, 60.0)
