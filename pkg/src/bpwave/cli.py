"""Command-line entry point.

Exit codes: 0 when every asserted check passes, 1 on a failed check or an
aborted run, 2 on configuration errors (bad flags, unknown scenario,
malformed config file).
"""

from __future__ import annotations

import argparse
import dataclasses
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bathymetry import Bathymetry, Params
from .diagnostics import (
    compatibility_residual,
    entropy_balance_residual,
    entropy_inequality_check,
    flat_conservation_error,
)
from .dynamics import SimulationAbort, SystemKind, mass, simulate
from .elliptic import NotPositiveDefinite, TbOperator, coercivity_constant
from .grid import spectral_derivative
from .estimates import run_lab, scale_stability
from .harness import (
    BATHYMETRY_SCENARIOS,
    SCENARIOS,
    WEAK_RECIPES,
    bona_smith_data,
    bona_smith_experiment,
    bona_smith_setup,
    get_scenario,
    weak_limit_experiment,
    weak_limit_recipe,
    weak_limit_setup,
)
from .io import ConfigError, RunConfig, output_root, write_report, write_series

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


class Check:
    """One named assertion: ``value`` compared against ``limit``."""

    def __init__(self, name: str, value: float, limit: float, kind: str = "<="):
        self.name, self.value, self.limit, self.kind = name, float(value), float(limit), kind

    @property
    def ok(self) -> bool:
        if not math.isfinite(self.value):
            return False
        return self.value <= self.limit if self.kind == "<=" else self.value >= self.limit

    def line(self) -> str:
        return f"{'PASS' if self.ok else 'FAIL'}  {self.name}: {self.value:.3e} {self.kind} {self.limit:.3e}"

    def as_dict(self) -> dict:
        return {"name": self.name, "value": self.value, "limit": self.limit, "kind": self.kind, "ok": self.ok}


def _report(checks, out) -> int:
    for c in checks:
        print(c.line(), file=out)
    return EXIT_OK if all(c.ok for c in checks) else EXIT_FAIL


# configuration ----------------------------------------------------------------

def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def resolve_run(cfg: RunConfig):
    """Scenario with config overrides applied, plus the grid, bathymetry, params and initial state."""
    try:
        sc = get_scenario(cfg.scenario)
    except KeyError as exc:
        raise ConfigError(str(exc.args[0])) from exc
    over = {}
    if cfg.system:
        over["system"] = cfg.system
    over.update(cfg.grid)
    over.update(cfg.params)
    try:
        sc = dataclasses.replace(sc, **over)
        kind = sc.kind()
        grid = sc.grid()
        bath = sc.bathymetry(grid)
        p = sc.params()
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return sc, kind, grid, bath, p, sc.initial_state(grid)


def _out_dir(args, default: str) -> Path:
    return Path(args.output) if args.output else output_root() / default


# subcommands ------------------------------------------------------------------

def cmd_simulate(args, out) -> int:
    if args.config:
        cfg = RunConfig.load(args.config)
    else:
        if not args.scenario:
            raise ConfigError("simulate needs --scenario or --config")
        cfg = RunConfig(scenario=args.scenario)
    if args.scenario:
        cfg.scenario = args.scenario
    if args.system:
        cfg.system = args.system
    for key in ("t_end", "dt", "eps", "mu", "beta", "nu"):
        v = getattr(args, key)
        if v is not None:
            cfg.params[key] = v
    if args.M is not None:
        cfg.grid["M"] = args.M
    if args.L is not None:
        cfg.grid["L"] = args.L
    if args.stride is not None:
        cfg.stride = args.stride
    if args.seed is not None:
        cfg.seed = args.seed
    if args.output:
        cfg.output = args.output
    sc, kind, grid, bath, p, init = resolve_run(cfg)
    np.random.seed(cfg.seed)  # no stochastic step today; pinned for provenance
    traj = simulate(init, kind, bath, p, stride=cfg.stride, s_list=cfg.s_list)
    d = Path(cfg.output) if cfg.output else output_root() / f"simulate-{sc.name}-{kind.value}"
    write_series(traj, d, cfg, {"scenario": sc.to_dict()})
    last = traj.records[-1]
    print(f"{sc.name} ({kind.value}): {p.n_steps} steps to t={last.t:g}, min h={last.min_h:.6g}, "
          f"H={last.entropy_H:.10g}", file=out)
    print(f"wrote {d}", file=out)
    checks = [Check("min height", min(r.min_h for r in traj.records), 0.0, ">=")]
    return _report(checks, out)


def entropy_checks(sc_name: str, kind: SystemKind | None = None, **overrides) -> list[Check]:
    """Checks behind ``verify-entropy`` for one scenario."""
    sc = get_scenario(sc_name)
    if overrides:
        sc = dataclasses.replace(sc, **overrides)
    grid = sc.grid()
    bath = sc.bathymetry(grid)
    p = sc.params()
    kind = kind or SystemKind.BPW
    traj = simulate(sc.initial_state(grid), kind, bath, p)
    h = np.linspace(0.2, 3.0, 20)
    u = np.linspace(-2.0, 2.0, 20)
    H, U = np.meshgrid(h, u)
    checks = [
        Check("entropy pair compatibility", compatibility_residual(H.ravel(), U.ravel(), p.eps), 1e-12),
        Check("entropy balance residual", entropy_balance_residual(traj.records), p.tolerances["balance"]),
        Check("entropy inequality slack", entropy_inequality_check(traj.records), 0.0, ">="),
        Check("mass drift per unit time",
              abs(mass(grid, traj.final) - mass(grid, traj.states[0])) / p.t_end, p.tolerances["mass"]),
    ]
    if bath.flat:
        checks.append(Check("flat-bottom entropy drift", flat_conservation_error(traj.records),
                            p.tolerances["flat_conservation"]))
    return checks


def cmd_verify_entropy(args, out) -> int:
    names = [args.scenario] if args.scenario else ["flat-gaussian", *BATHYMETRY_SCENARIOS]
    over = {"t_end": args.t_end} if args.t_end else {}
    checks = []
    for name in names:
        try:
            get_scenario(name)
        except KeyError as exc:
            raise ConfigError(str(exc.args[0])) from exc
        for c in entropy_checks(name, **over):
            c.name = f"[{name}] {c.name}"
            checks.append(c)
    return _report(checks, out)


def elliptic_checks(bath: Bathymetry, mu: float, h0: float, n_fields: int = 100, seed: int = 0) -> list[Check]:
    """Solver residual, dense-LU agreement, symmetry, coercivity and form identity."""
    rng = np.random.default_rng(seed)
    grid = bath.grid
    checks = []
    for disc in ("fd", "spectral"):
        op = TbOperator(bath, mu, discretization=disc)
        A = op.matrix()
        f = rng.standard_normal(grid.M)
        u = op.solve(f)
        res = np.linalg.norm(op.apply(u) - f) / np.linalg.norm(f)
        lu = np.linalg.norm(u - np.linalg.solve(A, f)) / np.linalg.norm(u)
        sym = np.max(np.abs(A - A.T)) / np.max(np.abs(A))
        checks += [Check(f"{disc} solve residual", res, 1e-10),
                   Check(f"{disc} dense-LU agreement", lu, 1e-8),
                   Check(f"{disc} self-adjointness", sym, 1e-10)]
    op = TbOperator(bath, mu, discretization="spectral")
    c_ref = coercivity_constant(h0, mu)
    worst_c, worst_form = np.inf, 0.0
    for _ in range(n_fields):
        v = _random_field(grid, rng)
        q = op.quadratic_form(v)
        h1 = grid.integrate(v**2) + grid.integrate(spectral_derivative(grid, v) ** 2)
        worst_c = min(worst_c, q / h1)
        worst_form = max(worst_form, abs(op.coercivity_form(v) - q) / abs(q))
    checks += [Check("coercivity constant", worst_c, 0.95 * c_ref, ">="),
               Check("coercivity form identity", worst_form, 1e-6)]
    return checks


def _random_field(grid, rng, band: int = 40):
    k = np.arange(grid.xi.size)
    amp = np.where((k > 0) & (k <= band), rng.standard_normal(k.size) + 1j * rng.standard_normal(k.size), 0.0)
    amp[0] = rng.standard_normal()
    amp /= (1.0 + k) ** 1.0
    return np.fft.irfft(amp * grid.M, n=grid.M)


def cmd_verify_elliptic(args, out) -> int:
    names = [args.scenario] if args.scenario else list(BATHYMETRY_SCENARIOS)
    checks = []
    for name in names:
        try:
            sc = get_scenario(name)
        except KeyError as exc:
            raise ConfigError(str(exc.args[0])) from exc
        if args.M:
            sc = dataclasses.replace(sc, M=args.M)
        bath = sc.bathymetry()
        for c in elliptic_checks(bath, sc.mu, sc.h0, args.fields, args.seed):
            c.name = f"[{name}] {c.name}"
            checks.append(c)
    return _report(checks, out)


def cmd_verify_estimates(args, out) -> int:
    base = run_lab(M=args.M, size=args.size, seed=args.seed)
    doubled = run_lab(M=2 * args.M, size=args.size, seed=args.seed)
    stab = scale_stability(base, doubled)
    d = _out_dir(args, "verify-estimates")
    write_report(d, "estimates.json", {
        "M": args.M, "size": args.size, "seed": args.seed,
        "base": {k: v.summary() for k, v in base.items()},
        "doubled": {k: v.summary() for k, v in doubled.items()},
        "stability": stab,
    })
    checks = []
    for name, row in stab.items():
        checks.append(Check(f"{name} max ratio at M={args.M}", row["base_max"], row["C"]))
        checks.append(Check(f"{name} max ratio at M={2 * args.M}", row["doubled_max"], 1.1 * row["C"]))
    print(f"wrote {d / 'estimates.json'}", file=out)
    return _report(checks, out)


def cmd_bona_smith(args, out) -> int:
    grid, bath = bona_smith_setup(beta=args.beta)
    zeta0, u0 = bona_smith_data(grid)
    p = Params(eps=0.1, mu=0.1, beta=args.beta, dt=args.dt, t_end=args.t_probe)
    rep = bona_smith_experiment(zeta0, u0, bath, p, args.s, args.n_list)
    d = _out_dir(args, "bona-smith")
    write_report(d, "bona_smith.json", rep.summary())
    for (n1, n2), diff in zip(zip(rep.n_list, rep.n_list[1:]), rep.differences):
        print(f"  n={n1:>4} vs {n2:>4}: {diff:.6e}", file=out)
    print(f"fitted slope {rep.slope:.3f}; wrote {d / 'bona_smith.json'}", file=out)
    checks = [Check("differences strictly decrease", float(rep.strictly_decreasing), 1.0, ">="),
              Check("truncation growth bound", float(rep.growth_bound_ok), 1.0, ">=")]
    return _report(checks, out)


def cmd_weak_limit(args, out) -> int:
    grid, bath = weak_limit_setup(M=args.M)
    p = Params(eps=0.1, mu=0.1, beta=bath.beta, dt=args.dt, t_end=args.t_end)
    recipes = WEAK_RECIPES if args.recipe == "all" else (args.recipe,)
    d = _out_dir(args, "weak-limit")
    checks = []
    for r in recipes:
        zeta0, u0 = weak_limit_recipe(grid, r)
        rep = weak_limit_experiment(zeta0, u0, bath, p, args.n_list, recipe=r, sample_every=args.sample_every)
        write_report(d, f"weak_limit_{r}.json", rep.summary())
        checks.append(Check(f"[{r}] entropy bound slack", min(rep.bound_slack.values()), 0.0, ">="))
        checks.append(Check(f"[{r}] Jensen gap", min(rep.jensen.values()), -1e-12, ">="))
    print(f"wrote {d}", file=out)
    return _report(checks, out)


def cmd_list_scenarios(args, out) -> int:
    for name in sorted(SCENARIOS):
        sc = SCENARIOS[name]
        print(f"{name:<20} {sc.system:<4} bottom={sc.bottom:<14} beta={sc.beta:<5g} {sc.description}", file=out)
    return EXIT_OK


# parser -----------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    """argparse that raises instead of exiting, so ``cli_main`` owns the exit code."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(f"{self.prog}: error: {message}")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="bpwave", description="Peregrine-type Boussinesq solver over variable bottoms.")
    ap.add_argument("--version", action="version", version=f"bpwave {__version__}")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("simulate", help="run one scenario and write diagnostics and snapshots")
    s.add_argument("--system", choices=("bp", "bpw"))
    s.add_argument("--scenario")
    s.add_argument("--config", help="INI run configuration")
    s.add_argument("--t-end", dest="t_end", type=float)
    s.add_argument("--dt", type=float)
    s.add_argument("--eps", type=float)
    s.add_argument("--mu", type=float)
    s.add_argument("--beta", type=float)
    s.add_argument("--nu", type=float)
    s.add_argument("--M", type=int)
    s.add_argument("--L", type=float)
    s.add_argument("--stride", type=int)
    s.add_argument("--seed", type=int)
    s.add_argument("--output")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("verify-entropy", help="entropy pair, balance, inequality and mass checks")
    s.add_argument("--scenario")
    s.add_argument("--t-end", dest="t_end", type=float)
    s.set_defaults(func=cmd_verify_entropy)

    s = sub.add_parser("verify-elliptic", help="solver, symmetry and coercivity checks")
    s.add_argument("--scenario")
    s.add_argument("--M", type=int)
    s.add_argument("--fields", type=int, default=100)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_verify_elliptic)

    s = sub.add_parser("verify-estimates", help="estimates lab and scale stability of shipped constants")
    s.add_argument("--M", type=int, default=2048)
    s.add_argument("--size", type=int, default=200)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--output")
    s.set_defaults(func=cmd_verify_estimates)

    s = sub.add_parser("bona-smith", help="truncation/regularization convergence study")
    s.add_argument("--n-list", dest="n_list", type=_int_list, default=[8, 16, 32, 64])
    s.add_argument("--s", type=float, default=1.0)
    s.add_argument("--beta", type=float, default=0.1)
    s.add_argument("--dt", type=float, default=0.005)
    s.add_argument("--t-probe", dest="t_probe", type=float, default=1.0)
    s.add_argument("--output")
    s.set_defaults(func=cmd_bona_smith)

    s = sub.add_parser("weak-limit", help="mollification sweep on rough data")
    s.add_argument("--recipe", choices=(*WEAK_RECIPES, "all"), default="all")
    s.add_argument("--n-list", dest="n_list", type=_int_list, default=[1, 2, 4, 8, 16])
    s.add_argument("--M", type=int, default=2048)
    s.add_argument("--dt", type=float, default=0.004)
    s.add_argument("--t-end", dest="t_end", type=float, default=1.0)
    s.add_argument("--sample-every", dest="sample_every", type=int, default=5)
    s.add_argument("--output")
    s.set_defaults(func=cmd_weak_limit)

    s = sub.add_parser("list-scenarios", help="print the shipped scenarios")
    s.set_defaults(func=cmd_list_scenarios)
    return ap


def cli_main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args, out)
    except ConfigError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_CONFIG
    except SimulationAbort as exc:
        print(f"ABORT {exc}", file=sys.stderr)
        return EXIT_FAIL
    except NotPositiveDefinite as exc:
        print(f"elliptic operator rejected: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_FAIL


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
