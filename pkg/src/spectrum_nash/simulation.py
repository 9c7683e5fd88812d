"""Monte Carlo simulation of the one-shot spectrum market.

Each trial draws channel states independently, lets every available primary
quote a penalty from its state's distribution, and sells the ``min(Y, M)``
lowest-penalty channels among the ``Y`` quoted at or below ``v``.  Ties are
broken by a uniform random permutation.

Trials are generated in fixed-size blocks; block ``b`` draws from a stream
seeded by ``(seed, b)``, so results do not depend on execution order.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .config import MarketConfig

BLOCK = 1 << 15


@dataclass
class MarketOutcome:
    states: np.ndarray
    penalties: np.ndarray
    sold: np.ndarray
    profit: np.ndarray
    demand: int


@dataclass
class PayoffEstimate:
    mean: float
    stderr: float
    n_trials: int

    def z(self, expected: float) -> float:
        if self.stderr == 0:
            return 0.0 if self.mean == expected else np.inf
        return (self.mean - expected) / self.stderr


@dataclass
class SimulationSummary:
    n_trials: int
    seed: int
    state_mean: np.ndarray
    state_stderr: np.ndarray
    state_count: np.ndarray
    total_mean: float
    total_stderr: float
    analytic_umax: np.ndarray = field(default=None)

    def rows(self) -> list[dict]:
        out = []
        for i, (mu, se) in enumerate(zip(self.state_mean, self.state_stderr), 1):
            expected = float(self.analytic_umax[i - 1])
            z = (mu - expected) / se if se > 0 else 0.0
            out.append({"state": i, "mean_profit": float(mu), "stderr": float(se),
                        "n_trials": self.n_trials, "p_minus_c_analytic": expected,
                        "z_score": float(z)})
        return out


def block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(block,)))


def draw_states(cfg: MarketConfig, u: np.ndarray) -> np.ndarray:
    """Map uniforms to states 0..n with P(i) = q_i, P(0) = 1 - sum(q)."""
    q = cfg.q_array
    edges = np.cumsum(np.concatenate([[1.0 - q.sum()], q]))
    return np.minimum(np.searchsorted(edges, u, side="right"), cfg.n)


def draw_demand(cfg: MarketConfig, u: np.ndarray) -> np.ndarray:
    if not cfg.demand.is_random:
        return np.full(np.shape(u), cfg.demand.m)
    edges = np.cumsum(cfg.demand.pmf)
    return np.minimum(np.searchsorted(edges, u, side="right"), len(edges) - 1)


def allocate(penalties, v: float, m, tie_keys) -> np.ndarray:
    """Sold mask: rank by (penalty, tie key); the first ``m`` with penalty <= v sell.

    Works on a single market (1-d) or a batch of markets (rows).
    """
    penalties = np.asarray(penalties, dtype=float)
    batch = np.atleast_2d(penalties)
    keys = np.atleast_2d(np.asarray(tie_keys, dtype=float))
    order = np.lexsort((keys, batch), axis=-1)
    rank = np.empty_like(order)
    rows = np.arange(batch.shape[0])[:, None]
    rank[rows, order] = np.arange(batch.shape[1])
    m = np.reshape(np.asarray(m), (-1, 1))
    sold = (batch <= v) & (rank < m)
    return sold.reshape(penalties.shape)


def _profits(cfg: MarketConfig, states, penalties, sold):
    profit = np.zeros(penalties.shape)
    for i in range(1, cfg.n + 1):
        mask = sold & (states == i)
        if np.any(mask):
            profit[mask] = cfg.f(i, penalties[mask]) - cfg.c
    return profit


def simulate_block(cfg, strategy, rng, size, pin_state=None, pin_penalty=None):
    """Simulate ``size`` markets; returns (states, penalties, sold, profit, demand)."""
    l = cfg.l
    states = draw_states(cfg, rng.random((size, l)))
    if pin_state is not None:
        states[:, 0] = pin_state
    penalties = strategy.sample_states(states, rng.random((size, l)))
    if pin_penalty is not None:
        penalties[:, 0] = pin_penalty
    demand = draw_demand(cfg, rng.random(size))
    sold = allocate(penalties, cfg.v, demand, rng.random((size, l)))
    return states, penalties, sold, _profits(cfg, states, penalties, sold), demand


def run_trial(cfg: MarketConfig, strategy, rng: np.random.Generator) -> MarketOutcome:
    """One market realization; ``strategy`` needs ``sample_states(states, u)``."""
    states, penalties, sold, profit, demand = simulate_block(cfg, strategy, rng, 1)
    return MarketOutcome(states[0], penalties[0], sold[0], profit[0], int(demand[0]))


def _blocks(n_trials, block):
    starts = range(0, n_trials, block)
    return [(b, min(block, n_trials - s)) for b, s in enumerate(starts)]


def _map_blocks(fn, n_trials, block, workers):
    jobs = _blocks(n_trials, block)
    if workers and workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            return list(pool.map(lambda job: fn(*job), jobs))
    return [fn(*job) for job in jobs]


def _loss_floor(sold_mean, losses, trials):
    """Variance floor for a rare no-sale atom, with the loss rate Laplace-smoothed.

    When a sale is lost with probability far below ``1 / trials`` the sample
    variance sees no losses and the standard error collapses; the smoothed
    rate ``(losses + 1) / (trials + 2)`` keeps it honest.
    """
    rate = (losses + 1.0) / (trials + 2.0)
    return np.square(sold_mean) * rate * (1.0 - rate)


def estimate_state_payoff(cfg, strategy, state: int, deviation_penalty=None,
                          n_trials: int = 10**6, seed: int = 0, block: int = BLOCK,
                          workers: int = 1) -> PayoffEstimate:
    """Mean profit of primary 1 with its channel pinned to ``state``.

    Primary 1 quotes ``deviation_penalty`` if given, else draws from its state's
    distribution; the other ``l - 1`` primaries follow ``strategy``.
    """
    if deviation_penalty is not None and deviation_penalty > cfg.v:
        return PayoffEstimate(0.0, 0.0, n_trials)

    def one(b, size):
        rng = block_rng(seed, b)
        _, _, sold, profit, _ = simulate_block(cfg, strategy, rng, size, pin_state=state,
                                               pin_penalty=deviation_penalty)
        return profit[:, 0].sum(), np.square(profit[:, 0]).sum(), int(sold[:, 0].sum())

    parts = _map_blocks(one, n_trials, block, workers)
    s1 = sum(p[0] for p in parts)
    s2 = sum(p[1] for p in parts)
    n_sold = sum(p[2] for p in parts)
    mean = s1 / n_trials
    var = max(s2 / n_trials - mean**2, 0.0) * n_trials / max(n_trials - 1, 1)
    sold_mean = s1 / n_sold if n_sold else 0.0
    var = max(var, _loss_floor(sold_mean, n_trials - n_sold, n_trials))
    return PayoffEstimate(float(mean), float(np.sqrt(var / n_trials)), n_trials)


def simulate(cfg, strategy, n_trials: int, seed: int = 0, block: int = BLOCK,
             workers: int = 1) -> SimulationSummary:
    """Per-state mean profit pooled over all primaries, plus mean total profit.

    Per-state standard errors use the ratio-estimator linearization over
    independent trials, since primaries within a trial are dependent.
    """
    n = cfg.n

    def one(b, size):
        rng = block_rng(seed, b)
        states, _, sold, profit, _ = simulate_block(cfg, strategy, rng, size)
        y = np.stack([np.where(states == i, profit, 0.0).sum(1) for i in range(1, n + 1)], 1)
        k = np.stack([(states == i).sum(1) for i in range(1, n + 1)], 1).astype(float)
        won = np.stack([(sold & (states == i)).sum(1) for i in range(1, n + 1)], 1)
        return y, k, profit.sum(1), won.sum(0)

    parts = _map_blocks(one, n_trials, block, workers)
    y = np.concatenate([p[0] for p in parts])
    k = np.concatenate([p[1] for p in parts])
    total = np.concatenate([p[2] for p in parts])
    won = sum(p[3] for p in parts)
    count = k.sum(0)
    with np.errstate(invalid="ignore", divide="ignore"):
        mean = y.sum(0) / count
        resid = y - mean * k
        stderr = np.sqrt(np.square(resid).sum(0)) / count
        floor = np.sqrt(_loss_floor(y.sum(0) / won, count - won, count) / count)
        stderr = np.fmax(stderr, np.nan_to_num(floor))
    tm = float(total.mean())
    tse = float(total.std(ddof=1) / np.sqrt(n_trials)) if n_trials > 1 else 0.0
    analytic = getattr(strategy, "umax", np.full(n, np.nan))
    return SimulationSummary(n_trials, seed, mean, stderr, count.astype(int), tm, tse,
                             np.asarray(analytic))
