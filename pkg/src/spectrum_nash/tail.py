"""Win-probability curve ``w(x)`` for fixed or random demand.

``w(x)`` is the probability that at least ``M`` of the ``l - 1`` competitors
undercut a penalty threshold when each does so independently with probability
``x``; ``1 - w(x)`` is the probability of a sale.  Both tails are evaluated
from log-space binomial terms so that the sale probability keeps its relative
precision when it is astronomically small (large ``l``).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.optimize import elementwise
from scipy.special import gammaln, xlog1py, xlogy

from .penalty import DomainError


def logsumexp(a, axis=-1, keepdims=False):
    """Log of summed exponentials along ``axis``; all ``-inf`` gives ``-inf``.

    A lean replacement for the scipy routine, which dominates root-finding time
    through its argument handling.
    """
    a = np.asarray(a, dtype=float)
    top = np.max(a, axis=axis, keepdims=True)
    top = np.where(np.isfinite(top), top, 0.0)
    with np.errstate(divide="ignore"):
        out = np.log(np.sum(np.exp(a - top), axis=axis, keepdims=True)) + top
    return out if keepdims else np.squeeze(out, axis=axis)

_BISECT_MAX_ITER = 200
_HUGE = 1e300


@dataclass(frozen=True)
class DemandModel:
    """Number of secondaries: a known ``m`` or a pmf over ``0..len(pmf)-1``."""

    m: int | None = None
    pmf: tuple[float, ...] | None = None

    def __post_init__(self):
        if (self.m is None) == (self.pmf is None):
            raise ValueError("give exactly one of m or pmf")
        if self.m is not None:
            if int(self.m) != self.m or self.m < 1:
                raise ValueError("fixed demand m must be a positive integer")
            object.__setattr__(self, "m", int(self.m))
        else:
            pmf = np.asarray(self.pmf, dtype=float)
            if pmf.ndim != 1 or pmf.size == 0 or np.any(pmf < 0):
                raise ValueError("demand pmf entries must be non-negative")
            if abs(pmf.sum() - 1.0) > 1e-12:
                raise ValueError(f"demand pmf sums to {pmf.sum()!r}, not 1")
            if pmf[0] >= 1.0:
                raise ValueError("demand pmf puts all mass on zero secondaries")
            object.__setattr__(self, "pmf", tuple(float(x) for x in pmf))

    @classmethod
    def fixed(cls, m: int) -> "DemandModel":
        return cls(m=m)

    @classmethod
    def random(cls, pmf) -> "DemandModel":
        return cls(pmf=tuple(pmf))

    @property
    def is_random(self) -> bool:
        return self.pmf is not None

    def weights(self) -> np.ndarray:
        """Demand pmf as an array (a point mass for fixed demand)."""
        if self.pmf is not None:
            return np.asarray(self.pmf)
        out = np.zeros(self.m + 1)
        out[self.m] = 1.0
        return out

    def mean(self) -> float:
        w = self.weights()
        return float(np.dot(np.arange(w.size), w))


class TailFunction:
    """``w(x)`` for ``l`` primaries under a demand model."""

    def __init__(self, l: int, demand: DemandModel):
        if int(l) != l or l < 2:
            raise ValueError("need at least two primaries")
        self.l = int(l)
        self.demand = demand
        trials = self.l - 1
        k = np.arange(trials + 1)
        self._k = k
        self._log_binom = gammaln(trials + 1) - gammaln(k + 1) - gammaln(trials - k + 1)
        if demand.is_random:
            gamma = np.asarray(demand.pmf)
            # mass on k > l-1 never loses a sale; k=0 always does
            self._gamma_in = np.zeros(trials + 1)
            head = gamma[: trials + 1]
            self._gamma_in[: head.size] = head
            self._log_gamma_in = np.log(self._gamma_in, where=self._gamma_in > 0,
                                        out=np.full(self._gamma_in.shape, -np.inf))
            self._gamma_over = float(gamma[trials + 1:].sum())
        else:
            self._gamma_in = None

    def __repr__(self):
        return f"TailFunction(l={self.l}, demand={self.demand})"

    @cached_property
    def degenerate(self) -> bool:
        """True when ``w`` is constant (no demand mass on ``1..l-1``)."""
        if not self.demand.is_random:
            return self.demand.m >= self.l
        return not np.any(self._gamma_in[1:] > 0)

    def _logpmf(self, x):
        """Log pmf of B ~ Bin(l-1, x) over k = 0..l-1, broadcast along a new last axis."""
        x = np.asarray(x, dtype=float)[..., None]
        trials = self.l - 1
        logpmf = self._log_binom + xlogy(self._k, x) + xlog1py(trials - self._k, -x)
        # lgamma drift grows with l; renormalize so the pmf sums to one
        return logpmf - logsumexp(logpmf, axis=-1, keepdims=True)

    def _check_unit(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(~(x >= 0)) or np.any(~(x <= 1)):
            raise DomainError("w is defined on [0, 1]")
        return x

    def _log_tails(self, x):
        """``(log w(x), log(1 - w(x)))`` from one pmf evaluation.

        Each tail is summed directly, then whichever is near one is recomputed
        as ``log1p(-other)`` so that a tiny complement still shows in its log.
        """
        x = self._check_unit(x)
        if not self.demand.is_random:
            m = self.demand.m
            if m > self.l - 1:
                return np.full(x.shape, -np.inf), np.zeros(x.shape)
            logpmf = self._logpmf(x)
            lw = logsumexp(logpmf[..., m:], axis=-1)
            ls = logsumexp(logpmf[..., :m], axis=-1)
        else:
            logpmf = self._logpmf(x)
            with np.errstate(invalid="ignore"):
                log_cdf = np.logaddexp.accumulate(logpmf, axis=-1)
                log_sf = np.logaddexp.accumulate(logpmf[..., ::-1], axis=-1)[..., ::-1]
            # w(x) = sum_k gamma_k P(B >= k)
            lw = logsumexp(self._log_gamma_in + log_sf, axis=-1)
            # 1 - w(x) = sum_{k>=1} gamma_k P(B <= k-1) + mass beyond l-1
            terms = self._log_gamma_in[1:] + log_cdf[..., :-1]
            if self._gamma_over > 0:
                over = np.broadcast_to(np.log(self._gamma_over), terms.shape[:-1] + (1,))
                terms = np.concatenate([terms, over], axis=-1)
            ls = logsumexp(terms, axis=-1)
        half = np.log(0.5)
        with np.errstate(divide="ignore", invalid="ignore"):
            lw_fix = np.where(ls < half, np.log1p(-np.exp(ls)), lw)
            ls_fix = np.where(lw < half, np.log1p(-np.exp(lw)), ls)
        return np.minimum(lw_fix, 0.0), np.minimum(ls_fix, 0.0)

    def log_w(self, x):
        return self._log_tails(x)[0][()]

    def log_sale(self, x):
        """``log(1 - w(x))`` computed without cancellation."""
        return self._log_tails(x)[1][()]

    def w(self, x):
        """Exact tail probability ``w(x)``."""
        return np.exp(self.log_w(x))

    def sale(self, x):
        """``1 - w(x)``."""
        return np.exp(self.log_sale(x))

    def w0(self) -> float:
        return float(self.w(0.0))

    def w1(self) -> float:
        return float(self.w(1.0))

    def inverse(self, y, lo=0.0, hi=1.0):
        """Solve ``w(x) = y`` by bracketed root finding; ``y`` is clipped within 1e-12 of the range."""
        y = np.asarray(y, dtype=float)
        ymin, ymax = self.w(lo), self.w(hi)
        if np.any(y < ymin - 1e-12) or np.any(y > ymax + 1e-12):
            raise DomainError(f"w_inverse argument outside [{ymin}, {ymax}]")
        if self.degenerate:
            raise DomainError("w is constant; no inverse")
        y = np.clip(y, ymin, ymax)
        return _bisect(self.w, y, lo, hi, increasing=True)

    def inverse_log_w(self, log_y, lo=0.0, hi=1.0):
        """Solve ``log w(x) = log_y`` on ``[lo, hi]`` by bracketed root finding."""
        log_y = np.asarray(log_y, dtype=float)
        if self.degenerate:
            raise DomainError("w is constant; no inverse")
        bottom, top = self.log_w(lo), self.log_w(hi)
        if np.any(log_y < bottom - 1e-12) or np.any(log_y > top + 1e-12):
            raise DomainError(f"w_inverse argument outside [{np.exp(bottom)}, {np.exp(top)}]")
        return _bisect(self.log_w, np.clip(log_y, bottom, top), lo, hi, increasing=True)

    def inverse_sale(self, z, lo=0.0, hi=1.0):
        """Solve ``1 - w(x) = z`` by bracketed root finding."""
        z = np.asarray(z, dtype=float)
        with np.errstate(divide="ignore"):
            return self.inverse_log_sale(np.log(z), lo, hi)

    def inverse_log_sale(self, log_z, lo=0.0, hi=1.0):
        """Solve ``log(1 - w(x)) = log_z``; targets within 1e-12 of the range are clipped."""
        log_z = np.asarray(log_z, dtype=float)
        if self.degenerate:
            raise DomainError("w is constant; no inverse")
        top, bottom = self.log_sale(lo), self.log_sale(hi)
        if np.any(log_z > top + 1e-12) or np.any(log_z < bottom - 1e-12):
            raise DomainError(f"sale probability outside [{np.exp(bottom)}, {np.exp(top)}]")
        target = np.clip(log_z, bottom, top)
        return _bisect(self.log_sale, target, lo, hi, increasing=False)

    def constants(self, q):
        """``w_1..w_{n+1}`` where ``w_i = w(q_i + ... + q_n)`` and ``w_{n+1} = w(0)``."""
        return np.exp(self.log_constants(q)[0])

    def log_constants(self, q):
        """Log of ``w_i`` and of ``1 - w_i`` for ``i = 1..n+1``."""
        return self._log_tails(tail_sums(q))


def tail_sums(q) -> np.ndarray:
    """``S_i = q_i + ... + q_n`` for ``i = 1..n+1`` (``S_{n+1} = 0``)."""
    q = np.asarray(q, dtype=float)
    if q.ndim != 1 or q.size == 0 or np.any(q <= 0):
        raise ValueError("state probabilities must be positive")
    if q.sum() >= 1.0:
        raise ValueError("state probabilities sum >= 1")
    return np.append(np.cumsum(q[::-1])[::-1], 0.0)


def _bisect(fn, target, lo, hi, increasing):
    """Solve the monotone equation ``fn(x) = target`` elementwise on ``[lo, hi]``.

    Chandrupatla's bracketing method does the work; any element it does not
    settle falls back to plain bisection.  Targets at or beyond an endpoint
    value return that endpoint.
    """
    target = np.asarray(target, dtype=float)
    lo = np.broadcast_to(np.asarray(lo, dtype=float), target.shape).astype(float)
    hi = np.broadcast_to(np.asarray(hi, dtype=float), target.shape).astype(float)
    sign = 1.0 if increasing else -1.0
    flo = sign * (np.asarray(fn(lo)) - target)
    fhi = sign * (np.asarray(fn(hi)) - target)
    with np.errstate(invalid="ignore"):
        at_lo = ~(flo < 0)
        at_hi = ~(fhi > 0) & ~at_lo
    out = np.where(at_lo, lo, hi)
    inner = ~(at_lo | at_hi)
    if np.any(inner):
        t, a, b = target[inner], lo[inner], hi[inner]

        def resid(x, t):
            with np.errstate(invalid="ignore"):
                r = sign * (np.asarray(fn(x)) - t)
            # -inf at x = 0 would poison the interpolation steps
            return np.clip(np.nan_to_num(r, nan=0.0), -_HUGE, _HUGE)

        res = elementwise.find_root(resid, (a, b), args=(t,),
                                    tolerances={"xatol": 0.0, "fatol": 0.0})
        x = np.asarray(res.x, dtype=float)
        bad = ~np.asarray(res.success)
        if np.any(bad):
            x[bad] = _plain_bisect(fn, t[bad], a[bad], b[bad], increasing)
        out[inner] = x
    return out[()]


def _plain_bisect(fn, target, lo, hi, increasing):
    target = np.asarray(target, dtype=float)
    lo = np.broadcast_to(np.asarray(lo, dtype=float), target.shape).copy()
    hi = np.broadcast_to(np.asarray(hi, dtype=float), target.shape).copy()
    for _ in range(_BISECT_MAX_ITER):
        mid = 0.5 * (lo + hi)
        active = (mid > lo) & (mid < hi)
        if not np.any(active):
            break
        val = np.asarray(fn(mid))
        below = val < target if increasing else val > target
        lo = np.where(active & below, mid, lo)
        hi = np.where(active & ~below, mid, hi)
    # pick whichever bracket end is closer in value
    flo, fhi = np.asarray(fn(lo)), np.asarray(fn(hi))
    with np.errstate(invalid="ignore"):
        take_hi = np.abs(fhi - target) < np.abs(flo - target)
    out = np.where(take_hi, hi, lo)
    return out[()]
