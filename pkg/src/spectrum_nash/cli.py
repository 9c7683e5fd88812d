"""Command-line front end.

    spectrum-nash solve      --config market.cfg --out run/
    spectrum-nash verify     --config market.cfg --out run/ [--grid 1000]
    spectrum-nash simulate   --config market.cfg --out run/ [--trials N] [--seed S]
    spectrum-nash efficiency --config market.cfg --out run/ [--exact-ropt false]
    spectrum-nash sweep      --config market.cfg --out run/ [--m-range 1..19]

Every CSV starts with a ``# config <digest>`` line followed by a header row.
The run manifest is echoed to ``manifest.txt`` in the output directory.

Exit codes: 0 success, 1 verification failure, 2 config error, 3 numeric error.
"""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import asdict, dataclass
from pathlib import Path

from .config import ConfigError, MarketConfig, parse_config
from .efficiency import efficiency, sweep_efficiency
from .equilibrium import NumericError, solve
from .penalty import DomainError
from .simulation import simulate
from .verification import verify_equilibrium, verify_structure

EXIT_OK, EXIT_VERIFY, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3


@dataclass
class RunManifest:
    config: str
    subcommand: str
    seed: int
    out: str
    trials: int
    grid: int
    tol_on: float
    tol_off: float
    exact_ropt: bool
    m_range: str | None
    plots: bool

    def lines(self) -> list[str]:
        # the output directory is omitted so reruns elsewhere compare equal
        return [f"{k} = {v}" for k, v in asdict(self).items() if k != "out"]


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text!r}")


def parse_m_range(text: str) -> list[int]:
    """``A..B`` inclusive, or a comma list of integers."""
    try:
        if ".." in text:
            a, b = text.split("..", 1)
            a, b = int(a), int(b)
            if b < a:
                raise ValueError
            return list(range(a, b + 1))
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad m range {text!r}; use A..B") from None


def write_csv(path: Path, rows: list[dict], digest: str, columns=None) -> Path:
    columns = list(columns or (rows[0].keys() if rows else []))
    with open(path, "w", newline="") as fh:
        fh.write(f"# config {digest}\n")
        writer = csv.DictWriter(fh, fieldnames=columns, lineterminator="\n",
                                extrasaction="ignore")
        writer.writeheader()
        for row in rows:
            writer.writerow(row)
    return path


def _write_manifest(out: Path, manifest: RunManifest, cfg: MarketConfig):
    text = ["# run manifest", *manifest.lines(), "", "# resolved config",
            f"# digest {cfg.digest()}", *cfg.to_lines()]
    (out / "manifest.txt").write_text("\n".join(text) + "\n")


def cmd_solve(cfg, man, out):
    strategy = solve(cfg)
    digest = cfg.digest()
    write_csv(out / "strategy.csv", strategy.rows(), digest)
    for i in range(1, cfg.n + 1):
        xs, ys = strategy.cdf_table(i, 201)
        rows = [{"penalty": float(x), "cdf": float(y)} for x, y in zip(xs, ys)]
        write_csv(out / f"cdf_state{i}.csv", rows, digest)
    if man.plots:
        from .plotting import plot_strategy_cdfs
        plot_strategy_cdfs(strategy, out / "strategy_cdf.png")
    for row in strategy.rows():
        print(f"state {row['state']}: support [{row['L_lower']:.10g}, {row['L_upper']:.10g}]"
              f"  p = {row['p_state']:.10g}")
    return EXIT_OK


def cmd_verify(cfg, man, out):
    strategy = solve(cfg)
    report = verify_equilibrium(strategy, man.grid, man.tol_on, man.tol_off)
    digest = cfg.digest()
    write_csv(out / "verification.csv", report.rows(), digest)
    structure = verify_structure(strategy)
    rows = [{"check": "structure", "pass": int(structure.ok),
             "boundary_error": structure.boundary_error, "detail": "; ".join(structure.failures)}]
    write_csv(out / "structure.csv", rows, digest)
    for row in report.rows():
        flag = "ok" if row["pass"] else "FAIL"
        print(f"state {row['state']}: on-support dev {row['max_abs_on_support_dev']:.3e}, "
              f"off-support excess {row['max_off_support_excess']:.3e}  {flag}")
    print(f"structure: {'ok' if structure.ok else 'FAIL'}")
    for failure in structure.failures:
        print(f"  {failure}")
    return EXIT_OK if report.ok and structure.ok else EXIT_VERIFY


def cmd_simulate(cfg, man, out):
    strategy = solve(cfg)
    summary = simulate(cfg, strategy, man.trials, man.seed)
    write_csv(out / "simulation.csv", summary.rows(), cfg.digest())
    for row in summary.rows():
        print(f"state {row['state']}: mean profit {row['mean_profit']:.6g} "
              f"(+- {row['stderr']:.2g}), analytic {row['p_minus_c_analytic']:.6g}, "
              f"z = {row['z_score']:.2f}")
    return EXIT_OK


def cmd_efficiency(cfg, man, out):
    mode = "exact" if man.exact_ropt else "mc"
    rep = efficiency(cfg, mode, man.trials, man.seed)
    write_csv(out / "efficiency.csv", [rep.row()], cfg.digest())
    print(f"R_NE = {rep.r_ne:.10g}  R_OPT = {rep.r_opt:.10g} ({rep.method})  eta = {rep.eta:.6f}")
    return EXIT_OK


SWEEP_COLUMNS = ("m_or_r", "R_NE", "R_OPT", "eta", "r_opt_method", "r_opt_stderr", "error")


def cmd_sweep(cfg, man, out):
    m_values = parse_m_range(man.m_range) if man.m_range else list(range(1, cfg.l))
    mode = "exact" if man.exact_ropt else "mc"
    rows = sweep_efficiency(cfg, m_values=m_values, mode=mode, n_trials=man.trials,
                            seed=man.seed)
    write_csv(out / "sweep.csv", rows, cfg.digest(), SWEEP_COLUMNS)
    if man.plots:
        from .plotting import plot_efficiency_sweep
        plot_efficiency_sweep(rows, out / "eta_vs_m.png")
    for row in rows:
        tail = f"  [{row['error']}]" if row["error"] else ""
        print(f"m = {row['m_or_r']}: eta = {row['eta']:.6f}{tail}")
    return EXIT_OK


COMMANDS = {"solve": cmd_solve, "verify": cmd_verify, "simulate": cmd_simulate,
            "efficiency": cmd_efficiency, "sweep": cmd_sweep}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spectrum-nash",
        description="Equilibrium penalty strategies for primaries selling idle channels.")
    parser.add_argument("subcommand", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="market config file")
    parser.add_argument("--out", default="out", help="output directory (created)")
    parser.add_argument("--seed", type=int, default=None, help="RNG seed (default: config seed)")
    parser.add_argument("--trials", type=int, default=10**5, help="Monte Carlo trials")
    parser.add_argument("--grid", type=int, default=1000,
                        help="deviation grid points per interval")
    parser.add_argument("--tol-on", type=float, default=None)
    parser.add_argument("--tol-off", type=float, default=None)
    parser.add_argument("--m-range", type=str, default=None, help="sweep demands, A..B")
    parser.add_argument("--exact-ropt", type=_bool, default=True,
                        help="exact collusive optimum (else Monte Carlo)")
    parser.add_argument("--no-plots", action="store_true", help="skip figure output")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.m_range:
        try:
            parse_m_range(args.m_range)
        except argparse.ArgumentTypeError as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
    try:
        cfg = parse_config(args.config)
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.trials < 1 or args.grid < 100:
        print("config error: --trials must be >= 1 and --grid >= 100", file=sys.stderr)
        return EXIT_CONFIG
    man = RunManifest(
        config=str(args.config), subcommand=args.subcommand,
        seed=cfg.seed if args.seed is None else args.seed, out=str(args.out),
        trials=args.trials, grid=args.grid,
        tol_on=cfg.tol_on if args.tol_on is None else args.tol_on,
        tol_off=cfg.tol_off if args.tol_off is None else args.tol_off,
        exact_ropt=args.exact_ropt, m_range=args.m_range, plots=not args.no_plots)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_manifest(out, man, cfg)
    try:
        return COMMANDS[args.subcommand](cfg, man, out)
    except (ConfigError, DomainError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericError, ArithmeticError, FloatingPointError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
