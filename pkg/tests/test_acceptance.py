"""Acceptance criteria, each at its stated tolerance and time budget.

Every test records one PASS/FAIL line; the lines are printed in the pytest
terminal summary (and immediately when run with ``-s``).
"""

import time

import numpy as np
import pytest

from conftest import make_power_market, make_setting_b
from randcfg import FAMILIES, random_configs
from spectrum_nash import DemandModel, MarketConfig, PenaltyModel, solve
from spectrum_nash.efficiency import (
    asymptotic_limit, classify_regime, efficiency, r_ne, r_opt_exact, r_opt_monte_carlo,
    sweep_efficiency,
)
from spectrum_nash.simulation import estimate_state_payoff
from spectrum_nash.verification import verify_equilibrium, verify_structure

RESULTS = {}


def record(number, ok, detail, elapsed):
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  ({elapsed:.1f}s)  {detail}"
    RESULTS[number] = line
    print(line)
    return ok


@pytest.fixture(scope="module")
def fifty():
    return random_configs(50, seed=2024)


def test_1_closed_form_regression():
    t0 = time.perf_counter()
    cfg = make_setting_b()
    s = solve(cfg)
    rep = efficiency(cfg, strategy=s)
    got = np.array([*s.p, *s.lower, rep.r_ne, rep.r_opt, rep.eta])
    want = np.array([0.8, 1.5, 1 / 7, -0.5, 1.38, 2.19, 1.38 / 2.19])
    err = float(np.max(np.abs(got - want)))
    elapsed = time.perf_counter() - t0
    ok = err <= 1e-9 and elapsed < 1.0
    assert record(1, ok, f"setting B max error {err:.2e}, eta {rep.eta:.4f}", elapsed)


def test_2_structure_suite(fifty):
    t0 = time.perf_counter()
    fams = {cfg.penalty.family.value for cfg, _ in fifty}
    fails = []
    for k, (cfg, s) in enumerate(fifty):
        assert cfg.l <= 30 and cfg.n <= 5
        rep = verify_structure(s, eps=1e-6, tol=1e-9)
        if not rep.ok:
            fails.append((k, rep.failures[:2]))
    elapsed = time.perf_counter() - t0
    ok = not fails and fams == set(FAMILIES) and elapsed < 30
    detail = f"{len(fifty) - len(fails)}/{len(fifty)} configs pass, families {sorted(fams)}"
    assert record(2, ok, detail + (f", failures {fails[:3]}" if fails else ""), elapsed)


def test_3_equilibrium_suite(fifty):
    t0 = time.perf_counter()
    fails, worst_on, worst_off = [], 0.0, -np.inf
    for k, (cfg, s) in enumerate(fifty):
        rep = verify_equilibrium(s, 1000, tol_on=1e-8, tol_off=1e-8)
        for st in rep.states:
            worst_on = max(worst_on, st.max_abs_on_support_dev / st.scale)
            worst_off = max(worst_off, st.max_off_support_excess / st.scale)
        if not rep.ok:
            fails.append(k)
    elapsed = time.perf_counter() - t0
    ok = not fails and elapsed < 300
    detail = (f"{len(fifty) - len(fails)}/{len(fifty)} pass, worst on-support {worst_on:.1e}, "
              f"worst off-support excess {worst_off:.1e}")
    assert record(3, ok, detail, elapsed)


def test_4_simulation_cross_check():
    t0 = time.perf_counter()
    zs = []
    for name, cfg in (("power m=10", make_power_market(m=10)), ("setting B", make_setting_b())):
        s = solve(cfg)
        for j in range(1, cfg.n + 1):
            est = estimate_state_payoff(cfg, s, j, n_trials=10**6, seed=100 + j)
            zs.append((name, j, est.z(float(s.umax[j - 1]))))
    elapsed = time.perf_counter() - t0
    worst = max(abs(z) for *_, z in zs)
    ok = worst <= 4 and elapsed < 120
    detail = "z = " + ", ".join(f"{n}/{j}: {z:+.2f}" for n, j, z in zs)
    assert record(4, ok, detail, elapsed)


def _large(m):
    return MarketConfig(2001, DemandModel.fixed(m), (0.3, 0.3), 0.0, 1.0,
                        PenaltyModel("additive", (1.0, 2.0)))


LARGE_M = {"high": 1400, "middle": 900, "low": 400}


def test_5_asymptotics():
    t0 = time.perf_counter()
    parts, ok = [], True
    for kind, m in LARGE_M.items():
        cfg = _large(m)
        regime = classify_regime(cfg, eps=0.05)
        assert regime.kind == kind
        per = r_ne(solve(cfg)) / cfg.l
        limit = asymptotic_limit(cfg, regime)
        if kind == "low":
            good = per <= 1e-3 * (cfg.f(2, cfg.v) - cfg.c)
        else:
            good = abs(per - limit) <= 0.02 * max(1.0, abs(limit))
        ok &= good
        parts.append(f"{regime} m={m}: R_NE/l={per:.6g} (limit {limit:g})")
    elapsed = time.perf_counter() - t0
    assert record(5, ok and elapsed < 60, "; ".join(parts), elapsed)


def test_6_efficiency_thresholds():
    t0 = time.perf_counter()
    parts, ok = [], True
    for kind in ("high", "low"):
        cfg = _large(LARGE_M[kind])
        rne = r_ne(solve(cfg))
        opt = r_opt_monte_carlo(cfg, 10**5, seed=6)
        if kind == "high":
            eta = rne / (opt.value + 4 * opt.stderr)
            good = eta >= 0.98
        else:
            eta = rne / max(opt.value - 4 * opt.stderr, 1e-300)
            good = eta <= 0.02
        ok &= good
        parts.append(f"{kind}: eta bound {eta:.6g} (R_OPT {opt.value:.6g} +- {opt.stderr:.2g})")
    elapsed = time.perf_counter() - t0
    assert record(6, ok and elapsed < 300, "; ".join(parts), elapsed)


def test_7_power_market_sweep():
    t0 = time.perf_counter()
    parts, ok = [], True
    for r in (0.1, 0.2, 0.3):
        rows = sweep_efficiency(make_power_market(r=r), m_values=range(1, 20))
        eta = np.array([row["eta"] for row in rows])
        drops = int(np.sum(np.diff(eta) < 0))
        good = (np.all((eta >= 0) & (eta <= 1)) and eta[-1] - eta[0] >= 0.5 and drops <= 3
                and not any(row["error"] for row in rows))
        ok &= bool(good)
        parts.append(f"r={r}: eta {eta[0]:.3f} -> {eta[-1]:.3f}, {drops} drops")
    elapsed = time.perf_counter() - t0
    assert record(7, ok and elapsed < 120, "; ".join(parts), elapsed)


def test_8_random_point_mass():
    t0 = time.perf_counter()
    worst = 0.0
    for cfg, s in random_configs(10, seed=8):
        m = cfg.demand.m
        pmf = np.zeros(m + 1)
        pmf[m] = 1.0
        t = solve(cfg.with_demand(DemandModel.random(pmf)))
        scale = np.maximum(1.0, np.abs(np.concatenate([s.p, s.lower])))
        diff = np.abs(np.concatenate([t.p - s.p, t.lower - s.lower])) / scale
        worst = max(worst, float(diff.max()))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-12 and elapsed < 10
    assert record(8, ok, f"max scaled difference in p, L: {worst:.1e}", elapsed)
