"""Symmetric equilibrium penalty strategy.

The state-``i`` strategy randomizes the quoted penalty over ``[L_i, L_{i-1}]``
with ``L_0 = v``; better states quote lower penalties.  Endpoints and the
equilibrium payoffs ``p_i - c`` come from a downward recursion over states,
and each per-state distribution has a closed form through the inverse of the
tail function.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import ConfigError, MarketConfig
from .penalty import DomainError
from .tail import TailFunction, tail_sums


class NumericError(ArithmeticError):
    """The recursion left the region where prices exceed the cost."""


@dataclass(frozen=True)
class EquilibriumStrategy:
    """Per-state penalty distributions of the symmetric equilibrium.

    ``lower[i-1]`` and ``upper[i-1]`` bound the support of state ``i``; for a
    solved strategy ``upper[i-1] == lower[i-2]`` and ``upper[0] == v``.
    ``log_umax`` holds ``log(p_i - c)`` so tiny payoffs keep their precision.
    ``log_margin`` holds ``log(f_i(L_i) - c)`` and ``log(f_i(L_{i-1}) - c)``
    from the recursion; when present the cdf is evaluated relative to the
    support endpoints, otherwise (hand-built strategies) from ``p`` directly.
    """

    config: MarketConfig
    p: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    log_umax: np.ndarray
    degenerate: bool = False
    log_margin: np.ndarray | None = None
    tail: TailFunction = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.tail is None:
            object.__setattr__(self, "tail", self.config.tail)
        for name in ("p", "lower", "upper", "log_umax", "log_margin"):
            if getattr(self, name) is None:
                continue
            arr = np.asarray(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def from_prices(cls, cfg: MarketConfig, p, lower, upper) -> "EquilibriumStrategy":
        """Build a strategy from explicit payoffs and supports (for perturbation tests)."""
        p = np.asarray(p, dtype=float)
        with np.errstate(divide="ignore"):
            log_umax = np.log(p - cfg.c)
        return cls(cfg, p, lower, upper, log_umax)

    @property
    def n(self) -> int:
        return self.config.n

    @property
    def L(self) -> np.ndarray:
        """``L_0..L_n`` with ``L_0 = v``."""
        return np.concatenate([[self.config.v], self.lower])

    @property
    def umax(self) -> np.ndarray:
        return self.p - self.config.c

    def support(self, state: int) -> tuple[float, float]:
        self._check_state(state)
        return float(self.lower[state - 1]), float(self.upper[state - 1])

    def _check_state(self, state):
        if not 1 <= state <= self.n:
            raise ValueError(f"state {state} outside 1..{self.n}")

    def cdf(self, state: int, x):
        """Probability that a state-``state`` primary quotes a penalty ``<= x``."""
        self._check_state(state)
        x = np.asarray(x, dtype=float)
        lo, hi = self.support(state)
        if self.degenerate:
            return (x >= hi).astype(float)[()]
        out = np.where(x > hi, 1.0, 0.0)
        inside = (x >= lo) & (x <= hi)
        if np.any(inside):
            solve_share = self._share_direct if self.log_margin is None else self._share_anchored
            share = solve_share(state, x[inside])
            s_next = tail_sums(self.config.q)[state]
            out[inside] = np.clip((share - s_next) / self.config.q[state - 1], 0.0, 1.0)
        return out[()]

    def _share_direct(self, state, x):
        """Invert ``1 - w(share) = (p_i - c) / (f_i(x) - c)`` as written."""
        cfg = self.config
        with np.errstate(divide="ignore", invalid="ignore"):
            log_z = self.log_umax[state - 1] - np.log(cfg.f(state, x) - cfg.c)
        bottom, top = self.tail.log_sale(1.0), self.tail.log_sale(0.0)
        log_z = np.clip(np.nan_to_num(log_z, nan=top, posinf=top), bottom, top)
        return self.tail.inverse_log_sale(log_z)

    def _share_anchored(self, state, x):
        """Same equation, measured from the nearer support endpoint.

        With ``d = f_i(x) - f_i(L_i)`` and ``A = f_i(L_i) - c``, the target is
        ``w(share) = (A w_{i+1} + d) / (A + d)``; from the top, with
        ``d' = f_i(L_{i-1}) - f_i(x)`` and ``B = f_i(L_{i-1}) - c``, it is
        ``w(share) = (B w_i - d') / (B - d')``.  ``A`` and ``B`` come from the
        recursion, so both ends stay exact even where ``w`` is flat to high
        order or the support is narrow.
        """
        cfg = self.config
        lo, hi = self.support(state)
        s = tail_sums(cfg.q)
        lo_b, hi_b = s[state], s[state - 1]
        tail = self.tail
        log_a, log_b = self.log_margin[state - 1]
        from_lo = (x - lo) <= (hi - x)
        share = np.empty(x.shape)
        with np.errstate(divide="ignore", invalid="ignore"):
            if np.any(from_lo):
                d = np.maximum(cfg.penalty.price_step(state, lo, x[from_lo] - lo), 0.0)
                log_den = np.logaddexp(log_a, np.log(d))
                log_tw = np.logaddexp(log_a + tail.log_w(lo_b), np.log(d)) - log_den
                log_ts = log_a + tail.log_sale(lo_b) - log_den
                share[from_lo] = np.where(d > 0, self._invert(log_tw, log_ts, lo_b, hi_b), lo_b)
            if np.any(~from_lo):
                d = np.maximum(-cfg.penalty.price_step(state, hi, x[~from_lo] - hi), 0.0)
                b = np.exp(log_b)
                log_den = np.log(np.maximum(b - d, np.finfo(float).tiny))
                log_tw = np.log(np.maximum(b * tail.w(hi_b) - d, 0.0)) - log_den
                log_ts = log_b + tail.log_sale(hi_b) - log_den
                share[~from_lo] = np.where(d > 0, self._invert(log_tw, log_ts, lo_b, hi_b), hi_b)
        return share

    def _invert(self, log_tw, log_ts, lo_b, hi_b):
        """Solve for the share using whichever tail is below one half."""
        tail = self.tail
        out = np.empty(np.shape(log_tw))
        small_w = log_tw < np.log(0.5)
        if np.any(small_w):
            t = np.clip(log_tw[small_w], tail.log_w(lo_b), tail.log_w(hi_b))
            out[small_w] = tail.inverse_log_w(t, lo_b, hi_b)
        if np.any(~small_w):
            t = np.clip(log_ts[~small_w], tail.log_sale(hi_b), tail.log_sale(lo_b))
            out[~small_w] = tail.inverse_log_sale(t, lo_b, hi_b)
        return out

    def quantile(self, state: int, u):
        """Inverse of :meth:`cdf` on the support, in closed form.

        Solving ``cdf = u`` gives a sale probability ``z = 1 - w(S_{i+1} + q_i u)``
        and the price ``c + (p_i - c) / z``.  The penalty is stepped from the
        nearer support endpoint, whose price margin is known exactly.
        """
        self._check_state(state)
        u = np.asarray(u, dtype=float)
        if np.any(~(u >= 0)) or np.any(~(u <= 1)):
            raise DomainError("quantile level must lie in [0, 1]")
        lo, hi = self.support(state)
        if self.degenerate:
            return np.full(u.shape, hi)[()]
        cfg = self.config
        s = tail_sums(cfg.q)
        share = np.clip(s[state] + cfg.q[state - 1] * u, 0.0, 1.0)
        log_z = self.tail.log_sale(share)
        if self.log_margin is None:
            price = cfg.c + np.exp(self.log_umax[state - 1] - log_z)
            x = cfg.g(state, price)
        else:
            log_a, log_b = self.log_margin[state - 1]
            from_lo = u <= 0.5
            # price above f(L_i): A * (z_{i+1} / z - 1); below f(U_i): B * (z_i / z - 1)
            anchor_log = np.where(from_lo, log_a, log_b)
            ref = np.where(from_lo, self.tail.log_sale(s[state]), self.tail.log_sale(s[state - 1]))
            step = np.exp(anchor_log) * np.expm1(ref - log_z)
            x = np.empty(u.shape)
            x[from_lo] = lo + np.asarray(cfg.penalty.penalty_step(
                state, cfg.c + np.exp(log_a), step[from_lo]))
            x[~from_lo] = hi + np.asarray(cfg.penalty.penalty_step(
                state, cfg.c + np.exp(log_b), step[~from_lo]))
        x = np.clip(x, lo, hi)
        x = np.where(u == 0, lo, np.where(u == 1, hi, x))
        return x[()]

    def sample(self, state: int, rng: np.random.Generator, size=None):
        """Inverse-CDF draws for one state; state 0 quotes ``v + 1``."""
        if state == 0:
            return np.full(size, self.config.v + 1.0)[()] if size is not None else self.config.v + 1.0
        return self.quantile(state, rng.random(size))

    def sample_states(self, states: np.ndarray, u: np.ndarray) -> np.ndarray:
        """Penalties for an array of states given matching uniforms."""
        states = np.asarray(states)
        out = np.full(states.shape, self.config.v + 1.0)
        for i in range(1, self.n + 1):
            mask = states == i
            if np.any(mask):
                out[mask] = self.quantile(i, u[mask])
        return out

    def cdf_table(self, state: int, points: int = 201) -> tuple[np.ndarray, np.ndarray]:
        lo, hi = self.support(state)
        xs = np.linspace(lo, hi, points)
        return xs, np.asarray(self.cdf(state, xs))

    def rows(self) -> list[dict]:
        return [
            {"state": i, "L_lower": float(self.lower[i - 1]), "L_upper": float(self.upper[i - 1]),
             "p_state": float(self.p[i - 1]), "u_max": float(self.umax[i - 1])}
            for i in range(1, self.n + 1)
        ]


def solve(cfg: MarketConfig, check: bool = True) -> EquilibriumStrategy:
    """Compute the unique symmetric equilibrium for ``cfg``.

    Runs the recursion from the top state (``L_0 = v``) down.  When demand
    never binds every state quotes the cap ``v`` with certainty.
    """
    if check:
        cfg.check_penalties()
    tail = cfg.tail
    _, log_sale = tail.log_constants(cfg.q)
    c, v = cfg.c, cfg.v
    n = cfg.n
    lower = np.empty(n)
    log_umax = np.empty(n)
    log_margin = np.empty((n, 2))
    top = v
    for i in range(1, n + 1):
        try:
            margin = cfg.f(i, top) - c
        except DomainError as exc:
            raise NumericError(f"f_{i}(L_{i - 1}) undefined: {exc}") from exc
        if not margin > 0:
            raise NumericError(f"f_{i}(L_{i - 1}) = {margin + c} <= c")
        log_umax[i - 1] = np.log(margin) + log_sale[i - 1]
        log_margin[i - 1] = log_umax[i - 1] - log_sale[i], np.log(margin)
        if tail.degenerate:
            lower[i - 1] = v
        else:
            # price drop from the top of the support: margin * (w_i - w_{i+1}) / (1 - w_{i+1})
            drop = -margin * np.expm1(log_sale[i - 1] - log_sale[i])
            lower[i - 1] = top + cfg.penalty.penalty_step(i, c + margin, -drop)
        top = lower[i - 1]
    upper = np.concatenate([[v], lower[:-1]])
    p = c + np.exp(log_umax)
    return EquilibriumStrategy(cfg, p, lower, upper, log_umax, degenerate=tail.degenerate,
                               log_margin=log_margin, tail=tail)


__all__ = ["ConfigError", "EquilibriumStrategy", "NumericError", "solve"]
