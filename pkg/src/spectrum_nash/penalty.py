"""Quality-indexed penalty functions and their inverses.

A channel in state ``i`` quoted at price ``p`` presents penalty ``g_i(p)`` to a
secondary; ``f_i`` maps a penalty back to the price.  States are 1-based.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np


class DomainError(ValueError):
    """Raised when a price or penalty lies outside a family's domain."""


class Family(str, Enum):
    ADDITIVE = "additive"
    MULTIPLICATIVE = "multiplicative"
    POWER_SHIFT = "power_shift"
    EXP_SHIFT = "exp_shift"
    LOG_SHIFT = "log_shift"


@dataclass(frozen=True)
class Zeta:
    """Strictly increasing piecewise-linear map given by knots."""

    xs: tuple[float, ...]
    ys: tuple[float, ...]

    def __post_init__(self):
        xs = np.asarray(self.xs, dtype=float)
        ys = np.asarray(self.ys, dtype=float)
        if xs.shape != ys.shape or xs.size < 2:
            raise ValueError("zeta needs at least two (x, y) knots of equal length")
        if np.any(np.diff(xs) <= 0) or np.any(np.diff(ys) <= 0):
            raise ValueError("zeta knots must be strictly increasing in both x and y")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(x < self.xs[0]) or np.any(x > self.xs[-1]):
            raise DomainError(f"zeta argument outside [{self.xs[0]}, {self.xs[-1]}]")
        return np.interp(x, self.xs, self.ys)

    def inverse(self, y):
        y = np.asarray(y, dtype=float)
        if np.any(y < self.ys[0]) or np.any(y > self.ys[-1]):
            raise DomainError(f"zeta inverse argument outside [{self.ys[0]}, {self.ys[-1]}]")
        return np.interp(y, self.ys, self.xs)


def _scalar_or_array(out):
    out = np.asarray(out, dtype=float)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class PenaltyModel:
    """Penalty family ``{g_i}`` for states ``1..n``.

    Forms (``h`` strictly increasing, ``zeta`` identity unless knots given):

    * additive:        g_i(p) = zeta(p - h_i)
    * multiplicative:  g_i(p) = zeta(p / h_i), h_i > 0
    * power_shift:     g_i(p) = p**r - h_i, p >= 0
    * exp_shift:       g_i(p) = exp(p) - h_i
    * log_shift:       g_i(p) = log(p) - h_i, p > 0
    """

    family: Family
    h: tuple[float, ...]
    r: float = 1.0
    zeta: Zeta | None = None
    _h: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        object.__setattr__(self, "h", tuple(float(x) for x in self.h))
        h = np.asarray(self.h, dtype=float)
        if h.size < 1:
            raise ValueError("penalty model needs at least one state")
        if not np.all(np.isfinite(h)):
            raise ValueError("h values must be finite")
        if self.family is Family.POWER_SHIFT and not self.r > 0:
            raise ValueError("power_shift exponent r must be positive")
        if self.family is Family.MULTIPLICATIVE and np.any(h <= 0):
            raise ValueError("multiplicative weights h must be positive")
        if self.zeta is not None and self.family not in (Family.ADDITIVE, Family.MULTIPLICATIVE):
            raise ValueError("zeta knots only apply to additive and multiplicative families")
        object.__setattr__(self, "_h", h)

    @property
    def n(self) -> int:
        return len(self.h)

    def _weight(self, state: int) -> float:
        if not 1 <= state <= self.n:
            raise ValueError(f"state {state} outside 1..{self.n}")
        return self._h[state - 1]

    def _zeta(self, x):
        return x if self.zeta is None else self.zeta(x)

    def _zeta_inv(self, y):
        return y if self.zeta is None else self.zeta.inverse(y)

    def price_domain(self, state: int) -> tuple[float, float]:
        """Closed/open interval of admissible prices for ``state``."""
        hi = self._weight(state)
        fam = self.family
        if fam is Family.POWER_SHIFT:
            return 0.0, np.inf
        if fam is Family.LOG_SHIFT:
            return 0.0, np.inf
        if self.zeta is not None:
            lo, up = self.zeta.xs[0], self.zeta.xs[-1]
            if fam is Family.ADDITIVE:
                return lo + hi, up + hi
            return lo * hi, up * hi
        return -np.inf, np.inf

    def penalty_domain(self, state: int) -> tuple[float, float]:
        """Range of ``g_state``; the domain of ``f_state``."""
        hi = self._weight(state)
        fam = self.family
        if fam in (Family.POWER_SHIFT, Family.EXP_SHIFT):
            return -hi, np.inf
        if fam is Family.LOG_SHIFT:
            return -np.inf, np.inf
        if self.zeta is not None:
            return self.zeta.ys[0], self.zeta.ys[-1]
        return -np.inf, np.inf

    def penalty(self, state: int, price):
        """``g_state(price)``; accepts scalars or arrays."""
        h = self._weight(state)
        p = np.asarray(price, dtype=float)
        fam = self.family
        if fam is Family.ADDITIVE:
            out = self._zeta(p - h)
        elif fam is Family.MULTIPLICATIVE:
            out = self._zeta(p / h)
        elif fam is Family.POWER_SHIFT:
            if np.any(p < 0):
                raise DomainError("power_shift price must be non-negative")
            out = p**self.r - h
        elif fam is Family.EXP_SHIFT:
            out = np.exp(p) - h
        else:
            if np.any(p <= 0):
                raise DomainError("log_shift price must be positive")
            out = np.log(p) - h
        return _scalar_or_array(out)

    def price(self, state: int, penalty):
        """``f_state(penalty)``, the inverse of :meth:`penalty`."""
        h = self._weight(state)
        x = np.asarray(penalty, dtype=float)
        fam = self.family
        if fam is Family.ADDITIVE:
            out = self._zeta_inv(x) + h
        elif fam is Family.MULTIPLICATIVE:
            out = self._zeta_inv(x) * h
        elif fam is Family.POWER_SHIFT:
            if np.any(x + h < 0):
                raise DomainError(f"power_shift penalty below reachable minimum {-h}")
            out = (x + h) ** (1.0 / self.r)
        elif fam is Family.EXP_SHIFT:
            if np.any(x + h <= 0):
                raise DomainError(f"exp_shift penalty must exceed {-h}")
            out = np.log(x + h)
        else:
            out = np.exp(x + h)
        return _scalar_or_array(out)

    def penalty_step(self, state: int, base: float, delta):
        """``g_state(base + delta) - g_state(base)`` without cancellation for small ``delta``."""
        h = self._weight(state)
        d = np.asarray(delta, dtype=float)
        fam = self.family
        if self.zeta is not None:
            out = self.penalty(state, base + d) - self.penalty(state, base)
        elif fam is Family.ADDITIVE:
            out = d
        elif fam is Family.MULTIPLICATIVE:
            out = d / h
        elif fam is Family.POWER_SHIFT:
            out = base**self.r * np.expm1(self.r * np.log1p(d / base))
        elif fam is Family.EXP_SHIFT:
            out = np.exp(base) * np.expm1(d)
        else:
            out = np.log1p(d / base)
        return _scalar_or_array(out)

    def price_step(self, state: int, base: float, delta):
        """``f_state(base + delta) - f_state(base)`` without cancellation for small ``delta``."""
        h = self._weight(state)
        d = np.asarray(delta, dtype=float)
        fam = self.family
        if self.zeta is not None:
            out = self.price(state, base + d) - self.price(state, base)
        elif fam is Family.ADDITIVE:
            out = d
        elif fam is Family.MULTIPLICATIVE:
            out = d * h
        elif fam is Family.POWER_SHIFT:
            a = base + h
            out = a ** (1.0 / self.r) * np.expm1(np.log1p(d / a) / self.r)
        elif fam is Family.EXP_SHIFT:
            out = np.log1p(d / (base + h))
        else:
            out = np.exp(base + h) * np.expm1(d)
        return _scalar_or_array(out)


@dataclass
class ValidationReport:
    ok: bool
    check: str = ""
    detail: str = ""
    violation: tuple | None = None

    def __bool__(self):
        return self.ok


def validate(model: PenaltyModel, c: float, v: float, grid_size: int = 512) -> ValidationReport:
    """Check ordering, monotonicity and the ratio condition on the working range.

    For each pair ``j < k`` the ratio ``(f_j(x) - c) / (f_k(x) - c)`` must be
    strictly increasing on ``(g_j(c), v]``.  Never raises; the first violation
    is returned in the report.
    """
    if grid_size < 100:
        raise ValueError("grid_size must be at least 100")
    n = model.n
    try:
        costs = np.array([model.penalty(i, c) for i in range(1, n + 1)])
    except DomainError as exc:
        return ValidationReport(False, "domain", f"cost outside price domain: {exc}")
    if not v > costs[0]:
        return ValidationReport(False, "cap", f"v={v} must exceed g_1(c)={costs[0]}", (1, c, v))

    lo = costs.max()
    xs = np.linspace(lo, v, grid_size)
    prices = np.linspace(c, model.price(n, v), grid_size + 1)[1:]
    try:
        for i in range(1, n + 1):
            g = model.penalty(i, prices)
            bad = np.flatnonzero(np.diff(g) <= 0)
            if bad.size:
                return ValidationReport(
                    False, "monotonicity", f"g_{i} not strictly increasing",
                    (i, float(prices[bad[0]]), float(prices[bad[0] + 1])))
        for i in range(1, n):
            gi = model.penalty(i, prices)
            gj = model.penalty(i + 1, prices)
            bad = np.flatnonzero(gi <= gj)
            if bad.size:
                return ValidationReport(
                    False, "ordering", f"g_{i} <= g_{i + 1}", (i, i + 1, float(prices[bad[0]])))
            fi = model.price(i, xs)
            fj = model.price(i + 1, xs)
            bad = np.flatnonzero(fi >= fj)
            if bad.size:
                return ValidationReport(
                    False, "ordering", f"f_{i} >= f_{i + 1}", (i, i + 1, float(xs[bad[0]])))
        for j in range(1, n + 1):
            grid = np.linspace(costs[j - 1], v, grid_size + 1)[1:]
            fj = model.price(j, grid) - c
            for k in range(j + 1, n + 1):
                ratio = fj / (model.price(k, grid) - c)
                bad = np.flatnonzero(np.diff(ratio) <= 0)
                if bad.size:
                    y, x = float(grid[bad[0]]), float(grid[bad[0] + 1])
                    return ValidationReport(
                        False, "ratio", f"(f_{j}-c)/(f_{k}-c) not increasing at y={y}, x={x}",
                        (j, k, y, x))
    except DomainError as exc:
        return ValidationReport(False, "domain", str(exc))
    return ValidationReport(True)
