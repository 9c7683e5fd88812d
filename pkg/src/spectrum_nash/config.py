"""Market description and its flat ``key = value`` file format."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .penalty import DomainError, Family, PenaltyModel, Zeta, validate
from .tail import DemandModel, TailFunction


class ConfigError(ValueError):
    """Invalid market configuration."""


@dataclass(frozen=True)
class MarketConfig:
    """``l`` primaries, ``n = len(q)`` channel states, cost ``c`` and penalty cap ``v``."""

    l: int
    demand: DemandModel
    q: tuple[float, ...]
    c: float
    v: float
    penalty: PenaltyModel
    seed: int = 0
    tol_on: float = 1e-8
    tol_off: float = 1e-8
    validate_grid: int = 512

    def __post_init__(self):
        object.__setattr__(self, "q", tuple(float(x) for x in self.q))
        if int(self.l) != self.l or self.l < 2:
            raise ConfigError("l must be an integer >= 2")
        q = np.asarray(self.q)
        if q.size < 1:
            raise ConfigError("need at least one channel state")
        if np.any(q <= 0):
            raise ConfigError("state probabilities must be positive")
        if q.sum() >= 1.0:
            raise ConfigError("state probabilities sum >= 1")
        if self.penalty.n != q.size:
            raise ConfigError(f"penalty model has {self.penalty.n} states, q has {q.size}")
        if self.c < 0:
            raise ConfigError("transition cost c must be non-negative")
        try:
            g1c = self.penalty.penalty(1, self.c)
        except DomainError as exc:
            raise ConfigError(f"cost outside price domain: {exc}") from exc
        if not self.v > g1c:
            raise ConfigError(f"penalty cap v={self.v} must exceed g_1(c)={g1c}")

    @property
    def n(self) -> int:
        return len(self.q)

    @property
    def q_array(self) -> np.ndarray:
        return np.asarray(self.q)

    @property
    def tail(self) -> TailFunction:
        return TailFunction(self.l, self.demand)

    @property
    def degenerate(self) -> bool:
        """Demand never binds: every offered channel is sold."""
        return self.tail.degenerate

    def f(self, state: int, x):
        return self.penalty.price(state, x)

    def g(self, state: int, p):
        return self.penalty.penalty(state, p)

    def check_penalties(self):
        rep = validate(self.penalty, self.c, self.v, self.validate_grid)
        if not rep.ok:
            raise ConfigError(f"penalty family invalid ({rep.check}): {rep.detail}")
        return rep

    def with_demand(self, demand: DemandModel) -> "MarketConfig":
        return replace(self, demand=demand)

    def with_q(self, q) -> "MarketConfig":
        return replace(self, q=tuple(q))

    def to_lines(self) -> list[str]:
        """Canonical text form; parses back to an equal config."""
        lines = [f"l = {self.l}"]
        if self.demand.is_random:
            lines.append("demand.pmf = " + ", ".join(repr(x) for x in self.demand.pmf))
        else:
            lines.append(f"demand.fixed_m = {self.demand.m}")
        lines += [
            f"n = {self.n}",
            "q = " + ", ".join(repr(x) for x in self.q),
            f"c = {self.c!r}",
            f"v = {self.v!r}",
            f"penalty.family = {self.penalty.family.value}",
            f"penalty.r = {self.penalty.r!r}",
            "penalty.h = " + ", ".join(repr(x) for x in self.penalty.h),
        ]
        if self.penalty.zeta is not None:
            lines.append("penalty.zeta_x = " + ", ".join(repr(x) for x in self.penalty.zeta.xs))
            lines.append("penalty.zeta_y = " + ", ".join(repr(x) for x in self.penalty.zeta.ys))
        lines += [
            f"tol_on = {self.tol_on!r}",
            f"tol_off = {self.tol_off!r}",
            f"seed = {self.seed}",
        ]
        return lines

    def digest(self) -> str:
        return hashlib.sha256("\n".join(self.to_lines()).encode()).hexdigest()[:16]


_KNOWN = {
    "l", "demand.fixed_m", "demand.pmf", "n", "q", "c", "v", "penalty.family", "penalty.r",
    "penalty.h", "penalty.zeta_x", "penalty.zeta_y", "tol_on", "tol_off", "seed",
    "validate_grid",
}


@dataclass
class _Raw:
    values: dict = field(default_factory=dict)
    lines: dict = field(default_factory=dict)


def _floats(text, key, lineno):
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise ConfigError(f"line {lineno}: {key} expects comma-separated numbers") from None


def _int(text, key, lineno):
    try:
        val = float(text)
    except ValueError:
        raise ConfigError(f"line {lineno}: {key} expects an integer") from None
    if val != int(val):
        raise ConfigError(f"line {lineno}: {key} expects an integer")
    return int(val)


def _swap(found, key):
    text, lineno = found
    return text, key, lineno


def parse_config_text(text: str, validate_penalties: bool = True) -> MarketConfig:
    """Parse ``key = value`` lines; ``#`` starts a comment, lists are comma-separated."""
    raw = _Raw()
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in _KNOWN:
            raise ConfigError(f"line {lineno}: unknown field {key!r}")
        if key in raw.values:
            raise ConfigError(f"line {lineno}: duplicate field {key!r}")
        raw.values[key] = val
        raw.lines[key] = lineno

    def need(key):
        if key not in raw.values:
            raise ConfigError(f"missing field {key!r}")
        return raw.values[key], raw.lines[key]

    l = _int(*_swap(need("l"), "l"))
    if ("demand.fixed_m" in raw.values) == ("demand.pmf" in raw.values):
        raise ConfigError("give exactly one of demand.fixed_m or demand.pmf")
    try:
        if "demand.fixed_m" in raw.values:
            demand = DemandModel.fixed(_int(raw.values["demand.fixed_m"], "demand.fixed_m",
                                            raw.lines["demand.fixed_m"]))
        else:
            demand = DemandModel.random(_floats(raw.values["demand.pmf"], "demand.pmf",
                                                raw.lines["demand.pmf"]))
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"demand: {exc}") from None

    q = _floats(*_swap(need("q"), "q"))
    if "n" in raw.values:
        n = _int(raw.values["n"], "n", raw.lines["n"])
        if len(q) == 1 and n > 1:
            q = q * n
        if len(q) != n:
            raise ConfigError(f"line {raw.lines['q']}: q has {len(q)} entries, n = {n}")
    if len(q) and sum(q) >= 1.0:
        raise ConfigError("state probabilities sum >= 1")

    family_text, fam_line = need("penalty.family")
    try:
        family = Family(family_text.lower())
    except ValueError:
        raise ConfigError(f"line {fam_line}: unknown penalty family {family_text!r}") from None
    h = _floats(*_swap(need("penalty.h"), "penalty.h"))
    r = 1.0
    if "penalty.r" in raw.values:
        rs = _floats(raw.values["penalty.r"], "penalty.r", raw.lines["penalty.r"])
        if len(rs) != 1:
            raise ConfigError(f"line {raw.lines['penalty.r']}: penalty.r is a scalar")
        r = rs[0]
    zeta = None
    if "penalty.zeta_x" in raw.values or "penalty.zeta_y" in raw.values:
        zx = _floats(*_swap(need("penalty.zeta_x"), "penalty.zeta_x"))
        zy = _floats(*_swap(need("penalty.zeta_y"), "penalty.zeta_y"))
        try:
            zeta = Zeta(tuple(zx), tuple(zy))
        except ValueError as exc:
            raise ConfigError(f"penalty.zeta: {exc}") from None
    try:
        model = PenaltyModel(family, tuple(h), r=r, zeta=zeta)
    except ValueError as exc:
        raise ConfigError(f"penalty: {exc}") from None

    kw = {}
    for key in ("tol_on", "tol_off"):
        if key in raw.values:
            vals = _floats(raw.values[key], key, raw.lines[key])
            if len(vals) != 1 or not vals[0] > 0:
                raise ConfigError(f"line {raw.lines[key]}: {key} must be one positive number")
            kw[key] = vals[0]
    if "seed" in raw.values:
        kw["seed"] = _int(raw.values["seed"], "seed", raw.lines["seed"])
    if "validate_grid" in raw.values:
        kw["validate_grid"] = _int(raw.values["validate_grid"], "validate_grid",
                                   raw.lines["validate_grid"])
    c = _floats(*_swap(need("c"), "c"))
    v = _floats(*_swap(need("v"), "v"))
    if len(c) != 1 or len(v) != 1:
        raise ConfigError("c and v are scalars")
    try:
        cfg = MarketConfig(l=l, demand=demand, q=tuple(q), c=c[0], v=v[0], penalty=model, **kw)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if validate_penalties:
        cfg.check_penalties()
    return cfg


def parse_config(path, validate_penalties: bool = True) -> MarketConfig:
    return parse_config_text(Path(path).read_text(), validate_penalties)
