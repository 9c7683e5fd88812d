"""Equilibrium profit versus the collusive optimum.

``R_NE`` is the total expected equilibrium profit ``l * sum_i q_i (p_i - c)``.
``R_OPT`` is the best the primaries can earn jointly: quote the cap ``v`` and
sell the highest-state available channels first, which maximizes profit in
every realization because ``f_j(v)`` increases with ``j``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.stats import binom

from .config import MarketConfig
from .equilibrium import EquilibriumStrategy, solve
from .simulation import block_rng
from .tail import DemandModel, tail_sums


class RegimeError(ValueError):
    """Demand falls in no band of the large-market classification."""


class Regime(NamedTuple):
    kind: str  # "high", "middle" or "low"
    index: int | None = None

    def __str__(self):
        return f"middle:{self.index}" if self.kind == "middle" else self.kind


@dataclass
class ROpt:
    value: float
    stderr: float
    method: str


@dataclass
class EfficiencyReport:
    r_ne: float
    r_opt: float
    eta: float
    method: str
    r_opt_stderr: float
    config_digest: str

    def row(self) -> dict:
        return {"R_NE": self.r_ne, "R_OPT": self.r_opt, "eta": self.eta,
                "r_opt_method": self.method, "r_opt_stderr": self.r_opt_stderr,
                "config": self.config_digest}


def r_ne(strategy: EquilibriumStrategy) -> float:
    cfg = strategy.config
    return float(cfg.l * np.dot(cfg.q_array, np.exp(strategy.log_umax)))


def _cap_values(cfg: MarketConfig) -> np.ndarray:
    return np.array([cfg.f(j, cfg.v) - cfg.c for j in range(1, cfg.n + 1)])


def _demand_tail(cfg: MarketConfig, size: int) -> np.ndarray:
    """P(M >= k) for k = 0..size-1."""
    pmf = cfg.demand.weights()
    sf = np.concatenate([np.cumsum(pmf[::-1])[::-1], [0.0]])
    out = np.zeros(size)
    k = min(size, sf.size)
    out[:k] = sf[:k]
    return out


def r_opt_exact(cfg: MarketConfig) -> float:
    """Collusive optimum by conditioning on counts of better channels.

    For state ``j`` let ``A`` be the number of channels in states above ``j``
    (binomial) and ``N_j`` the state-``j`` count given ``A`` (binomial on the
    rest).  Sales in state ``j`` are ``min(N_j, max(M - A, 0))``, whose mean is
    ``sum_{k>=1} P(N_j >= k) P(M >= A + k)``.  Exact; ``O(n l^2)``.
    """
    l, q = cfg.l, cfg.q_array
    values = _cap_values(cfg)
    s = tail_sums(q)
    demand_sf = _demand_tail(cfg, 2 * l + 2)
    total = 0.0
    for j in range(1, cfg.n + 1):
        above = s[j]
        p_above = binom.pmf(np.arange(l + 1), l, above)
        cond = q[j - 1] / (1.0 - above)
        expected = 0.0
        for a in range(l + 1):
            if p_above[a] == 0.0:
                continue
            rest = l - a
            k = np.arange(1, rest + 1)
            sf_nj = binom.sf(k - 1, rest, cond)
            expected += p_above[a] * np.dot(sf_nj, demand_sf[a + k])
        total += values[j - 1] * expected
    return float(total)


def r_opt_monte_carlo(cfg: MarketConfig, n_trials: int, seed: int = 0,
                      block: int = 1 << 16) -> ROpt:
    """Collusive optimum averaged over sampled state-count vectors and demand."""
    values = _cap_values(cfg)
    q = cfg.q_array
    pvals = np.concatenate([[1.0 - q.sum()], q])
    s1 = s2 = 0.0
    for b, start in enumerate(range(0, n_trials, block)):
        size = min(block, n_trials - start)
        rng = block_rng(seed, b)
        counts = rng.multinomial(cfg.l, pvals, size=size)
        if cfg.demand.is_random:
            edges = np.cumsum(cfg.demand.pmf)
            left = np.minimum(np.searchsorted(edges, rng.random(size), side="right"),
                              len(edges) - 1)
        else:
            left = np.full(size, cfg.demand.m)
        profit = np.zeros(size)
        for j in range(cfg.n, 0, -1):
            sold = np.minimum(counts[:, j], left)
            profit += sold * values[j - 1]
            left = left - sold
        s1 += profit.sum()
        s2 += np.square(profit).sum()
    mean = s1 / n_trials
    var = max(s2 / n_trials - mean**2, 0.0) * n_trials / max(n_trials - 1, 1)
    return ROpt(float(mean), float(np.sqrt(var / n_trials)), "monte-carlo")


def r_opt(cfg: MarketConfig, mode: str = "exact", n_trials: int = 10**5,
          seed: int = 0) -> ROpt:
    if mode == "exact":
        return ROpt(r_opt_exact(cfg), 0.0, "exact")
    if mode in ("mc", "monte-carlo"):
        return r_opt_monte_carlo(cfg, n_trials, seed)
    raise ValueError(f"unknown R_OPT mode {mode!r}")


def efficiency(cfg: MarketConfig, mode: str = "exact", n_trials: int = 10**5,
               seed: int = 0, strategy: EquilibriumStrategy | None = None) -> EfficiencyReport:
    strategy = solve(cfg) if strategy is None else strategy
    rne = r_ne(strategy)
    opt = r_opt(cfg, mode, n_trials, seed)
    return EfficiencyReport(rne, opt.value, rne / opt.value, opt.method, opt.stderr,
                            cfg.digest())


def classify_regime(cfg: MarketConfig, eps: float = 0.05) -> Regime:
    """Place fixed demand ``m`` in a band of the large-market classification."""
    if cfg.demand.is_random:
        raise RegimeError("regimes are defined for fixed demand")
    m, k = cfg.demand.m, cfg.l - 1
    s = tail_sums(cfg.q)
    n = cfg.n
    if m >= k * (s[0] + eps):
        return Regime("high")
    if m <= k * (cfg.q[-1] - eps):
        return Regime("low")
    for i in range(2, n + 1):
        if k * (s[i - 2] - eps) >= m >= k * (s[i - 1] + eps):
            return Regime("middle", i)
    raise RegimeError(f"m={m} lies in no demand band for l={cfg.l}, eps={eps}")


def asymptotic_limit(cfg: MarketConfig, regime: Regime | None = None,
                     eps: float = 0.05) -> float:
    """Large-``l`` limit of ``R_NE / l`` in the given (or classified) regime."""
    regime = classify_regime(cfg, eps) if regime is None else regime
    q = cfg.q_array
    if regime.kind == "high":
        return float(np.dot(q, _cap_values(cfg)))
    if regime.kind == "low":
        return 0.0
    i = regime.index
    if not 2 <= i <= cfg.n:
        raise RegimeError(f"middle band index {i} outside 2..{cfg.n}")
    floor = cfg.g(i - 1, cfg.c)
    return float(sum(q[j - 1] * (cfg.f(j, floor) - cfg.c) for j in range(i, cfg.n + 1)))


def sweep_efficiency(base: MarketConfig, m_values=None, r_values=None, mode: str = "exact",
                     n_trials: int = 10**5, seed: int = 0) -> list[dict]:
    """Efficiency over a list of fixed demands or of uniform state probabilities.

    Failed rows keep their parameter and carry the error text.
    """
    if (m_values is None) == (r_values is None):
        raise ValueError("give exactly one of m_values or r_values")
    rows = []
    params = m_values if m_values is not None else r_values
    if len(params) == 0:
        raise ValueError("empty parameter list")
    for value in params:
        row = {"m_or_r": value, "R_NE": np.nan, "R_OPT": np.nan, "eta": np.nan,
               "r_opt_method": mode, "r_opt_stderr": np.nan, "error": ""}
        try:
            if m_values is not None:
                cfg = base.with_demand(DemandModel.fixed(int(value)))
            else:
                cfg = base.with_q(np.broadcast_to(np.asarray(value, float), (base.n,)))
            rep = efficiency(cfg, mode, n_trials, seed)
            row.update(R_NE=rep.r_ne, R_OPT=rep.r_opt, eta=rep.eta,
                       r_opt_method=rep.method, r_opt_stderr=rep.r_opt_stderr)
        except (ValueError, ArithmeticError) as exc:
            row["error"] = f"{type(exc).__name__}: {exc}"
        rows.append(row)
    return rows
