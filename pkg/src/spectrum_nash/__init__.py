"""Symmetric equilibrium pricing for primaries selling idle spectrum.

Each of ``l`` primaries owns a channel whose state (0 = unavailable, 1..n by
increasing quality) is private.  Secondaries rank offers by a penalty
``g_i(price)`` and buy the ``m`` cheapest in penalty, up to a cap ``v``.  The
package solves the unique symmetric mixed equilibrium, verifies it, simulates
the market and measures efficiency against the collusive optimum.
"""

from .config import ConfigError, MarketConfig, parse_config, parse_config_text
from .efficiency import (
    EfficiencyReport, Regime, RegimeError, ROpt, asymptotic_limit, classify_regime,
    efficiency, r_ne, r_opt, r_opt_exact, r_opt_monte_carlo, sweep_efficiency,
)
from .equilibrium import EquilibriumStrategy, NumericError, solve
from .penalty import DomainError, Family, PenaltyModel, ValidationReport, Zeta, validate
from .simulation import (
    MarketOutcome, PayoffEstimate, SimulationSummary, allocate, estimate_state_payoff,
    run_trial, simulate,
)
from .tail import DemandModel, TailFunction, tail_sums
from .verification import (
    StructureReport, VerificationReport, analytic_payoff, verify_equilibrium, verify_structure,
)

__all__ = [
    "ConfigError", "DemandModel", "DomainError", "EfficiencyReport", "EquilibriumStrategy",
    "Family", "MarketConfig", "MarketOutcome", "NumericError", "PayoffEstimate", "PenaltyModel",
    "ROpt", "Regime", "RegimeError", "SimulationSummary", "StructureReport", "TailFunction",
    "ValidationReport", "VerificationReport", "Zeta", "allocate", "analytic_payoff",
    "asymptotic_limit", "classify_regime", "efficiency", "estimate_state_payoff",
    "parse_config", "parse_config_text", "r_ne", "r_opt", "r_opt_exact", "r_opt_monte_carlo",
    "run_trial", "simulate", "solve", "sweep_efficiency", "tail_sums", "validate",
    "verify_equilibrium", "verify_structure",
]
