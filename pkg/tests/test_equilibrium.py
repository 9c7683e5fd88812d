import mpmath
import numpy as np
import pytest
from scipy.stats import kstest

from conftest import make_power_market, make_setting_a, make_setting_b
from spectrum_nash import DemandModel, MarketConfig, PenaltyModel
from spectrum_nash.equilibrium import EquilibriumStrategy, NumericError, solve
from spectrum_nash.penalty import DomainError
from spectrum_nash.tail import TailFunction, tail_sums
from randcfg import random_configs

mpmath.mp.dps = 50


# -- high-precision oracle: the recursion and the cdf formula evaluated as written

def _mp_fg(cfg):
    pm = cfg.penalty
    fam, r = pm.family.value, mpmath.mpf(pm.r)
    h = [mpmath.mpf(x) for x in pm.h]
    if fam == "additive":
        return (lambda i, p: p - h[i - 1]), (lambda i, x: x + h[i - 1])
    if fam == "multiplicative":
        return (lambda i, p: p / h[i - 1]), (lambda i, x: x * h[i - 1])
    if fam == "power_shift":
        return (lambda i, p: p**r - h[i - 1]), (lambda i, x: (x + h[i - 1]) ** (1 / r))
    if fam == "exp_shift":
        return (lambda i, p: mpmath.exp(p) - h[i - 1]), (lambda i, x: mpmath.log(x + h[i - 1]))
    return (lambda i, p: mpmath.log(p) - h[i - 1]), (lambda i, x: mpmath.exp(x + h[i - 1]))


def _mp_w(cfg):
    l = cfg.l
    pmf = cfg.demand.weights()

    def w(x):
        terms = [mpmath.binomial(l - 1, k) * x**k * (1 - x) ** (l - 1 - k) for k in range(l)]
        return sum(mpmath.mpf(float(g)) * sum(terms[k:]) for k, g in enumerate(pmf)
                   if g > 0 and k <= l - 1)
    return w


def mp_solve(cfg):
    g, f = _mp_fg(cfg)
    w = _mp_w(cfg)
    q = [mpmath.mpf(x) for x in cfg.q]
    c, v = mpmath.mpf(cfg.c), mpmath.mpf(cfg.v)
    ws = [w(sum(q[i:])) for i in range(cfg.n)] + [w(mpmath.mpf(0))]
    L, p = [v], []
    for i in range(1, cfg.n + 1):
        pi = c + (f(i, L[-1]) - c) * (1 - ws[i - 1])
        p.append(pi)
        L.append(g(i, (pi - c) / (1 - ws[i]) + c))
    return p, L, ws


def mp_cdf(cfg, state, x, p):
    """psi_i(x) from its closed form with w inverted by high-precision bisection."""
    g, f = _mp_fg(cfg)
    w = _mp_w(cfg)
    c = mpmath.mpf(cfg.c)
    fx = f(state, mpmath.mpf(x))
    target = (fx - p) / (fx - c)
    lo, hi = mpmath.mpf(0), mpmath.mpf(1)
    for _ in range(180):
        mid = (lo + hi) / 2
        if w(mid) < target:
            lo = mid
        else:
            hi = mid
    s_next = sum(mpmath.mpf(x) for x in cfg.q[state:])
    return ((lo + hi) / 2 - s_next) / mpmath.mpf(cfg.q[state - 1])


class TestClosedForms:
    def test_setting_a(self):
        s = solve(make_setting_a())
        assert s.p[0] == pytest.approx(1.5, abs=1e-12)
        assert s.lower[0] == pytest.approx(1.5, abs=1e-12)
        assert s.cdf(1, 1.75) == pytest.approx(2 / 3, abs=1e-12)
        assert s.quantile(1, 2 / 3) == pytest.approx(1.75, abs=1e-12)

    def test_setting_b(self):
        s = solve(make_setting_b())
        np.testing.assert_allclose(s.p, [0.8, 1.5], atol=1e-12)
        np.testing.assert_allclose(s.L, [1.0, 1 / 7, -0.5], atol=1e-12)
        assert s.cdf(2, 1 / 7) == pytest.approx(1.0, abs=1e-12)
        assert s.cdf(1, 1 / 7) == pytest.approx(0.0, abs=1e-12)

    def test_degenerate_prices_at_cap(self):
        cfg = make_power_market(m=20)
        s = solve(cfg)
        assert s.degenerate
        np.testing.assert_array_equal(s.L, np.full(4, 100.0))
        for i in range(1, 4):
            assert s.p[i - 1] == pytest.approx(cfg.f(i, 100.0), rel=1e-14)
            assert s.cdf(i, 99.999) == 0.0 and s.cdf(i, 100.0) == 1.0
            assert s.quantile(i, 0.3) == 100.0

    def test_one_state_upper_is_cap(self):
        s = solve(make_setting_a())
        assert s.upper[0] == s.config.v


ORACLE_CFGS = [
    make_setting_a(), make_setting_b(), make_power_market(m=1), make_power_market(m=10),
    make_power_market(m=15, r=0.3),
    MarketConfig(7, DemandModel.fixed(3), (0.2, 0.1, 0.25), 0.5, 4.0,
                 PenaltyModel("exp_shift", (0.5, 2.0, 3.0))),
    MarketConfig(9, DemandModel.random([0.1, 0.3, 0.4, 0.2]), (0.3, 0.2), 1.0, 2.0,
                 PenaltyModel("log_shift", (0.1, 0.6))),
    MarketConfig(5, DemandModel.fixed(2), (0.25, 0.35), 1.0, 3.0,
                 PenaltyModel("multiplicative", (1.0, 1.6))),
]


class TestAgainstHighPrecision:
    @pytest.mark.parametrize("cfg", ORACLE_CFGS, ids=range(len(ORACLE_CFGS)))
    def test_recursion(self, cfg):
        s = solve(cfg)
        p_ref, L_ref, _ = mp_solve(cfg)
        for i in range(cfg.n):
            assert s.umax[i] == pytest.approx(float(p_ref[i] - cfg.c), rel=1e-10)
            assert s.L[i + 1] == pytest.approx(float(L_ref[i + 1]),
                                               rel=1e-10, abs=1e-10 * abs(cfg.v))

    @pytest.mark.parametrize("cfg", ORACLE_CFGS[2:6], ids=range(4))
    def test_cdf_interior(self, cfg):
        s = solve(cfg)
        p_ref, _, _ = mp_solve(cfg)
        for i in range(1, cfg.n + 1):
            lo, hi = s.support(i)
            for t in (0.1, 0.5, 0.9):
                x = lo + t * (hi - lo)
                assert s.cdf(i, x) == pytest.approx(float(mp_cdf(cfg, i, x, p_ref[i - 1])),
                                                    abs=1e-8)


class TestInvariants:
    @pytest.fixture(scope="class")
    @classmethod
    def solved(cls):
        return random_configs(15, seed=77)

    def test_recursion_consistency(self, solved):
        for cfg, s in solved:
            sale_next = cfg.tail.sale(tail_sums(cfg.q)[1:])
            lhs = np.array([cfg.f(i, s.lower[i - 1]) - cfg.c for i in range(1, cfg.n + 1)])
            np.testing.assert_allclose(lhs * sale_next, s.umax, rtol=1e-10)

    def test_chained_payoffs(self, solved):
        for cfg, s in solved:
            for a in range(1, cfg.n + 1):
                for b in range(a + 1, cfg.n + 1):
                    prod = np.prod([(cfg.f(i + 1, s.lower[i - 1]) - cfg.c)
                                    / (cfg.f(i, s.lower[i - 1]) - cfg.c) for i in range(a, b)])
                    assert s.umax[b - 1] == pytest.approx(s.umax[a - 1] * prod, rel=1e-9)

    def test_supports_ordered(self, solved):
        for cfg, s in solved:
            assert np.all(np.diff(s.L) < 0)
            assert np.all(s.umax > 0)
            assert all(cfg.f(i, s.lower[i - 1]) > cfg.c for i in range(1, cfg.n + 1))

    def test_cdf_monotone_pairs(self, solved):
        rng = np.random.default_rng(2)
        for _, s in solved:
            for i in range(1, s.n + 1):
                lo, hi = s.support(i)
                xy = np.sort(rng.uniform(lo, hi, (1000, 2)), axis=1)
                xy = xy[xy[:, 0] < xy[:, 1]]
                a, b = s.cdf(i, xy[:, 0]), s.cdf(i, xy[:, 1])
                assert np.all(a < b)

    def test_boundaries(self, solved):
        for _, s in solved:
            for i in range(1, s.n + 1):
                lo, hi = s.support(i)
                assert abs(s.cdf(i, lo)) <= 1e-9 and abs(s.cdf(i, hi) - 1) <= 1e-9
                assert s.cdf(i, lo - 1.0) == 0.0 and s.cdf(i, hi + 1.0) == 1.0

    def test_anchored_matches_direct_where_well_conditioned(self):
        cfg = make_setting_b()
        s = solve(cfg)
        plain = EquilibriumStrategy.from_prices(cfg, s.p, s.lower, s.upper)
        for i in (1, 2):
            xs = np.linspace(*s.support(i), 51)
            np.testing.assert_allclose(s.cdf(i, xs), plain.cdf(i, xs), atol=1e-12)


class TestQuantileAndSampling:
    @pytest.mark.parametrize("cfg", [make_setting_a(), make_setting_b(), make_power_market(m=1)],
                             ids=["A", "B", "power-m1"])
    def test_quantile_inverts_cdf(self, cfg):
        s = solve(cfg)
        u = np.linspace(0, 1, 201)
        for i in range(1, cfg.n + 1):
            x = s.quantile(i, u)
            lo, hi = s.support(i)
            assert np.all((x >= lo) & (x <= hi))
            assert np.max(np.abs(s.cdf(i, x) - u)) <= 1e-10
            assert x[0] == lo and x[-1] == hi

    def test_quantile_domain(self):
        with pytest.raises(DomainError):
            solve(make_setting_a()).quantile(1, 1.5)

    def test_sample_support_and_pit(self):
        s = solve(make_setting_a())
        x = s.sample(1, np.random.default_rng(0), 100_000)
        assert np.all((x >= 1.5) & (x <= 2.0))
        assert np.mean(s.cdf(1, x)) == pytest.approx(0.5, abs=0.005)

    @pytest.mark.parametrize("cfg", [make_setting_b(), make_power_market(m=10)], ids=["B", "power"])
    def test_ks(self, cfg):
        s = solve(cfg)
        rng = np.random.default_rng(4)
        for i in range(1, cfg.n + 1):
            x = s.sample(i, rng, 100_000)
            stat = kstest(x, lambda t, i=i: s.cdf(i, t)).statistic
            # where the cdf grows like (x - L)**(1/m) it already jumps between L
            # and the next float; no float-valued sampler can beat that jump
            lo = s.support(i)[0]
            jump = float(s.cdf(i, np.nextafter(lo, np.inf)))
            assert stat <= max(0.01, jump)
            assert x.min() >= lo

    def test_first_float_jump_is_real(self):
        s = solve(make_power_market(m=10))
        lo = s.support(3)[0]
        assert float(s.cdf(3, np.nextafter(lo, np.inf))) > 0.01

    def test_unavailable_state(self):
        s = solve(make_setting_b())
        assert s.sample(0, np.random.default_rng(0)) == 2.0
        assert np.all(s.sample_states(np.array([0, 0]), np.array([0.1, 0.2])) == 2.0)


class TestErrors:
    def test_unchecked_invalid_family_hits_numeric_error(self):
        # decreasing weights: state 2 prices below cost at the top of its support
        pen = PenaltyModel("additive", (2.0, 0.5))
        cfg = MarketConfig(2, DemandModel.fixed(1), (0.5, 0.4), 0.0, 1.0, pen)
        with pytest.raises(NumericError):
            solve(cfg, check=False)

    def test_checked_invalid_family_is_config_error(self):
        pen = PenaltyModel("additive", (2.0, 0.5))
        cfg = MarketConfig(2, DemandModel.fixed(1), (0.5, 0.4), 0.0, 1.0, pen)
        with pytest.raises(ValueError, match="ordering"):
            solve(cfg)

    def test_strategy_arrays_read_only(self):
        s = solve(make_setting_b())
        with pytest.raises(ValueError):
            s.p[0] = 3.0
