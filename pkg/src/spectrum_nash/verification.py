"""Numerical checks that a strategy is a symmetric equilibrium.

The expected profit of quoting penalty ``x`` in state ``j`` against ``l - 1``
opponents is ``(f_j(x) - c) * (1 - w(sum_k q_k psi_k(x)))``.  A strategy is an
equilibrium when this is flat at ``p_j - c`` on the state's own support and
never exceeds it elsewhere.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .equilibrium import EquilibriumStrategy

CONTINUITY_DECADES = 6


def undercut_share(strategy: EquilibriumStrategy, x) -> np.ndarray:
    """Probability that one opponent quotes a penalty ``<= x``."""
    q = strategy.config.q_array
    x = np.asarray(x, dtype=float)
    return sum(q[k - 1] * np.asarray(strategy.cdf(k, x)) for k in range(1, strategy.n + 1))


def analytic_payoff(strategy: EquilibriumStrategy, state: int, x):
    """Expected profit of quoting penalty ``x`` in ``state``; zero above ``v``."""
    cfg = strategy.config
    x = np.asarray(x, dtype=float)
    share = np.clip(undercut_share(strategy, x), 0.0, 1.0)
    margin = cfg.f(state, x) - cfg.c
    out = margin * strategy.tail.sale(share)
    return np.where(x > cfg.v, 0.0, out)[()]


def _payoff_from_share(strategy, state, x, share):
    cfg = strategy.config
    out = (cfg.f(state, x) - cfg.c) * strategy.tail.sale(np.clip(share, 0.0, 1.0))
    return np.where(x > cfg.v, 0.0, out)


@dataclass
class StateCheck:
    state: int
    interval: tuple[float, float]
    max_abs_on_support_dev: float
    max_off_support_excess: float
    worst_on_x: float
    worst_off_x: float
    scale: float
    on_ok: bool
    off_ok: bool

    @property
    def worst_x(self) -> float:
        if self.on_ok and not self.off_ok:
            return self.worst_off_x
        return self.worst_on_x


@dataclass
class VerificationReport:
    states: list[StateCheck]
    grid_points_per_interval: int
    tol_on: float
    tol_off: float

    @property
    def ok(self) -> bool:
        return all(s.on_ok and s.off_ok for s in self.states)

    def __bool__(self):
        return self.ok

    def rows(self) -> list[dict]:
        return [
            {"state": s.state, "interval": f"[{s.interval[0]!r}, {s.interval[1]!r}]",
             "max_abs_on_support_dev": s.max_abs_on_support_dev,
             "max_off_support_excess": s.max_off_support_excess,
             "worst_x": s.worst_x, "pass": int(s.on_ok and s.off_ok)}
            for s in self.states
        ]


def deviation_grid(strategy: EquilibriumStrategy, points: int) -> np.ndarray:
    """Penalties probed for profitable deviations.

    Dense grids on every support interval and on ``[g_n(c), L_n]``, a stretch
    below ``g_n(c)``, the boundary points ``L_i`` and ``g_j(c)``, and two
    points above the cap.
    """
    cfg = strategy.config
    L = strategy.L
    costs = np.array([cfg.g(j, cfg.c) for j in range(1, cfg.n + 1)])
    floor = costs.min()
    pieces = [np.linspace(L[k], L[k - 1], points) for k in range(1, cfg.n + 1)]
    if L[-1] > floor:
        pieces.append(np.linspace(floor, L[-1], points))
    span = max(cfg.v - floor, 1.0)
    pieces.append(np.linspace(floor - span, floor, points // 10 + 2))
    pieces.append(L)
    pieces.append(costs)
    pieces.append([np.nextafter(cfg.v, np.inf), cfg.v + 1.0])
    return np.unique(np.concatenate(pieces))


def verify_equilibrium(strategy: EquilibriumStrategy, grid_points_per_interval: int = 1000,
                       tol_on: float | None = None, tol_off: float | None = None
                       ) -> VerificationReport:
    """Check on-support flatness and absence of profitable deviations on a grid.

    Tolerances are absolute, scaled by ``max(1, p_j - c)``.
    """
    if grid_points_per_interval < 100:
        raise ValueError("grid_points_per_interval must be at least 100")
    cfg = strategy.config
    tol_on = cfg.tol_on if tol_on is None else tol_on
    tol_off = cfg.tol_off if tol_off is None else tol_off
    grid = deviation_grid(strategy, grid_points_per_interval)
    share = undercut_share(strategy, grid)
    L = strategy.L
    checks = []
    for j in range(1, cfg.n + 1):
        target = float(strategy.umax[j - 1])
        scale = max(1.0, abs(target))
        lo_dom, hi_dom = cfg.penalty.penalty_domain(j)
        usable = (grid > lo_dom) & (grid < hi_dom)
        xs, sh = grid[usable], share[usable]
        phi = _payoff_from_share(strategy, j, xs, sh)
        lo, hi = strategy.support(j)
        if strategy.degenerate:
            on = xs == hi
        else:
            on = (xs >= lo) & (xs <= hi)
        dev = np.abs(phi[on] - target)
        i_on = int(np.argmax(dev)) if dev.size else 0
        excess = phi[~on] - target
        i_off = int(np.argmax(excess)) if excess.size else 0
        max_dev = float(dev[i_on]) if dev.size else np.inf
        max_exc = float(excess[i_off]) if excess.size else -np.inf
        checks.append(StateCheck(
            state=j, interval=(float(L[j]), float(L[j - 1])),
            max_abs_on_support_dev=max_dev, max_off_support_excess=max_exc,
            worst_on_x=float(xs[on][i_on]) if dev.size else np.nan,
            worst_off_x=float(xs[~on][i_off]) if excess.size else np.nan,
            scale=scale, on_ok=max_dev <= tol_on * scale, off_ok=max_exc <= tol_off * scale))
    return VerificationReport(checks, grid_points_per_interval, tol_on, tol_off)


@dataclass
class StructureReport:
    ok: bool
    failures: list[str] = field(default_factory=list)
    boundary_error: float = 0.0

    def __bool__(self):
        return self.ok


def _jump_shrinks(strategy, state, edge, side, eps, width):
    """Distance of the cdf from its edge value along a ladder of shrinking probes.

    Continuous at ``edge`` if the distance is already negligible or keeps
    shrinking over ``CONTINUITY_DECADES`` decades (a jump would stay put).
    """
    base = float(strategy.cdf(state, edge))
    steps = eps * max(width, np.finfo(float).tiny) * 10.0 ** -np.arange(CONTINUITY_DECADES + 1)
    probes = edge + side * steps
    gaps = np.abs(np.asarray(strategy.cdf(state, probes)) - base)
    if gaps[0] <= 1e-9:
        return True, gaps
    return bool(gaps[-1] <= 0.9 * gaps[0] and np.all(np.diff(gaps) <= 1e-12)), gaps


def verify_structure(strategy: EquilibriumStrategy, eps: float = 1e-6, pairs: int = 1000,
                     tol: float = 1e-9, seed: int = 0) -> StructureReport:
    """Support ordering and contiguity, boundary values, continuity, strict monotonicity."""
    cfg = strategy.config
    fails = []
    lower, upper = strategy.lower, strategy.upper
    if strategy.degenerate:
        ok = np.all(lower == cfg.v) and np.all(upper == cfg.v)
        return StructureReport(bool(ok), [] if ok else ["degenerate supports not at v"])
    if upper[0] != cfg.v:
        fails.append(f"U_1 = {upper[0]!r} != v")
    for i in range(1, cfg.n + 1):
        lo, hi = lower[i - 1], upper[i - 1]
        if not lo < hi:
            fails.append(f"state {i}: empty support [{lo!r}, {hi!r}]")
        if i > 1:
            gap = hi - lower[i - 2]
            if abs(gap) > 1e-12 * max(1.0, abs(hi)):
                fails.append(f"state {i}: U_{i} - L_{i - 1} = {gap!r} (not contiguous)")
            if hi > lower[i - 2] + 1e-12 * max(1.0, abs(hi)):
                fails.append(f"state {i}: support overlaps state {i - 1}")
        if not cfg.f(i, lo) > cfg.c:
            fails.append(f"state {i}: f(L_{i}) <= c")
    bmax = 0.0
    rng = np.random.default_rng(seed)
    for i in range(1, cfg.n + 1):
        lo, hi = strategy.support(i)
        if not lo < hi:
            continue
        at_lo, at_hi = float(strategy.cdf(i, lo)), float(strategy.cdf(i, hi))
        bmax = max(bmax, abs(at_lo), abs(at_hi - 1.0))
        if abs(at_lo) > tol:
            fails.append(f"state {i}: psi(L_{i}) = {at_lo!r}")
        if abs(at_hi - 1.0) > tol:
            fails.append(f"state {i}: psi(U_{i}) = {at_hi!r}")
        width = hi - lo
        for edge, side, name in ((lo, -1, "below L"), (lo, 1, "above L"),
                                 (hi, -1, "below U"), (hi, 1, "above U")):
            good, gaps = _jump_shrinks(strategy, i, edge, side, eps, width)
            if not good:
                fails.append(f"state {i}: discontinuous {name} (gaps {gaps[0]:.3g} -> {gaps[-1]:.3g})")
        xy = np.sort(rng.uniform(lo, hi, size=(pairs, 2)), axis=1)
        xy = xy[xy[:, 0] < xy[:, 1]]
        psi = np.asarray(strategy.cdf(i, xy.ravel())).reshape(xy.shape)
        bad = np.flatnonzero(psi[:, 0] >= psi[:, 1])
        if bad.size:
            x, y = xy[bad[0]]
            fails.append(f"state {i}: psi not strictly increasing at ({x!r}, {y!r})")
    return StructureReport(not fails, fails, bmax)
