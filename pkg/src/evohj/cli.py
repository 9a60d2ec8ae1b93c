"""``evohj`` command line interface.

Exit codes: 0 ok, 1 configuration/usage, 2 no ESS, 3 expansion failure,
4 slope failure, 5 solver failure.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .adaptive import find_ess
from .asymptotics import convergence_study
from .config import ConfigError, load_config, parse_eps_list
from .correctors import corrector_coefficients
from .exceptions import (
    DegenerateEss,
    DomainError,
    Extinction,
    InvalidParameters,
    NoEssFound,
    NonConvergence,
    QuadratureFailure,
    SingularSystem,
)
from .hj import hj_profile
from .model import ModelParams
from .solver import Grid, default_grid, solve_steady

logger = logging.getLogger("evohj")

EXIT_OK, EXIT_CONFIG, EXIT_NO_ESS, EXIT_EXPANSION, EXIT_SLOPE, EXIT_SOLVER = range(6)

ESS_COLUMNS = ("point_index", "z", "alpha1", "alpha2", "N1", "N2", "max_excess")
EXPAND_COLUMNS = ("point_index", "habitat", "zstar", "A", "B", "C", "v_star", "D", "E", "F", "K_star")
COMPARE_COLUMNS = ("eps", "habitat", "observable", "predicted", "measured", "abs_error")
PROFILE_COLUMNS = ("z", "n1", "n2")
SWEEP_COLUMNS = ("parameter", "value", "morphtype", "point_index", "z", "N1", "N2", "max_excess")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(message)


def fmt(x) -> str:
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    if isinstance(x, str):
        return x
    return "%.16e" % float(x)


def write_csv(path: Path, header, rows) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="ascii") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])
    return path


def _apply_overrides(cfg, args):
    if getattr(args, "eps", None):
        cfg.eps_list = parse_eps_list(args.eps)
        cfg.params = cfg.params.with_epsilon(cfg.eps_list[0])
    if getattr(args, "grid_points", None):
        cfg.n_points = args.grid_points
    return cfg


def _grid_for(cfg, eps):
    if cfg.zmin is not None:
        return Grid(cfg.zmin, cfg.zmax, cfg.n_points or default_grid(cfg.params, eps).n_points)
    return default_grid(cfg.params, eps, n_points=cfg.n_points)


def _ess(cfg):
    return find_ess(cfg.params, tol_ess=cfg.tol_ess)


def cmd_ess(cfg) -> int:
    ess = _ess(cfg)
    rows = [(j, z, ess.weights[0, j], ess.weights[1, j], ess.sizes.N1, ess.sizes.N2, ess.max_excess)
            for j, z in enumerate(ess.support)]
    path = write_csv(cfg.out_dir / "ess.csv", ESS_COLUMNS, rows)
    print(f"morphtype: {ess.morphtype}")
    print("support: " + ", ".join(fmt(z) for z in ess.support))
    print(f"N1* = {fmt(ess.sizes.N1)}  N2* = {fmt(ess.sizes.N2)}  max_excess = {fmt(ess.max_excess)}")
    print(f"wrote {path}")
    return EXIT_OK


def cmd_expand(cfg) -> int:
    ess = _ess(cfg)
    hj = hj_profile(ess, cfg.params)
    corr = corrector_coefficients(ess, hj, cfg.params)
    rows = []
    for j, pt in enumerate(corr.points):
        for i in (0, 1):
            rows.append((j, i + 1, pt.zstar, pt.A, pt.B, pt.C, pt.v_star[i], pt.D[i], pt.E[i], pt.F[i],
                         pt.K_star[i]))
    path = write_csv(cfg.out_dir / "expand.csv", EXPAND_COLUMNS, rows)
    print(f"morphtype: {ess.morphtype}; wrote {path}")
    return EXIT_OK


def cmd_solve(cfg) -> int:
    eps = cfg.epsilon
    ess = _ess(cfg)
    sol = solve_steady(cfg.params, grid=_grid_for(cfg, eps), eps=eps, ess=ess, tol_solver=cfg.tol_solver)
    path = write_csv(cfg.out_dir / "profile.csv", PROFILE_COLUMNS, zip(sol.z, sol.n1, sol.n2))
    print(f"eps = {fmt(eps)}  N1 = {fmt(sol.N1)}  N2 = {fmt(sol.N2)}  residual = {fmt(sol.residual_norm)}")
    print(f"wrote {path}")
    return EXIT_OK


def cmd_compare(cfg) -> int:
    if len(cfg.eps_list) < 3:
        raise ConfigError("compare needs at least three eps values (use --eps or eps_list)")
    report = convergence_study(cfg.eps_list, cfg.params, ess=_ess(cfg))

    def label(obs, peak):
        return obs if peak is None else f"{obs}[{peak}]"

    rows = [(e, h, label(obs, pk), a, b, err) for e, h, pk, obs, a, b, err in report.rows]
    for key, fit in report.slopes.items():
        obs, h, pk = key
        if not report.mandated[key]:
            verdict = "report"
        else:
            verdict = "pass" if report.passes(key) else "fail"
        rows.append(("slope", h, label(obs, pk), fit.slope, fit.halfwidth, verdict))
    path = write_csv(cfg.out_dir / "compare.csv", COMPARE_COLUMNS, rows)
    print(f"comparison mode: {report.mode}; wrote {path}")
    for key, fit in report.slopes.items():
        print(f"  slope {key[0]:<9} habitat {key[1]} peak {key[2]}: {fit.slope:.3f} ({fit.status})")
    return EXIT_OK if report.passed else EXIT_SLOPE


def _sweep_values(args):
    if args.values:
        return parse_eps_list_any(args.values)
    start, stop, num = args.range.split(",")
    return tuple(np.linspace(float(start), float(stop), int(num)))


def parse_eps_list_any(text):
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError as exc:
        raise ConfigError(f"bad value list {text!r}") from exc


def cmd_sweep(cfg, args) -> int:
    name = args.param
    if name not in ModelParams.__dataclass_fields__ or name == "epsilon":
        raise ConfigError(f"unknown sweep parameter {name!r}")
    if not args.values and not args.range:
        raise ConfigError("sweep needs --values or --range")
    rows = []
    status = EXIT_OK
    for value in _sweep_values(args):
        try:
            p = replace(cfg.params, **{name: value})
            ess = find_ess(p, tol_ess=cfg.tol_ess)
        except InvalidParameters as exc:
            logger.warning("%s=%g skipped: %s", name, value, exc)
            continue
        except NoEssFound:
            rows.append((name, value, "none", -1, float("nan"), float("nan"), float("nan"), float("nan")))
            status = EXIT_NO_ESS
            continue
        for j, z in enumerate(ess.support):
            rows.append((name, value, ess.morphtype, j, z, ess.sizes.N1, ess.sizes.N2, ess.max_excess))
    path = write_csv(cfg.out_dir / "sweep.csv", SWEEP_COLUMNS, rows)
    print(f"wrote {path}")
    return status


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="evohj", description="Evolutionary equilibria of a two-habitat population "
                     "and their small-mutation asymptotics.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, help_ in (
        ("ess", "locate the evolutionarily stable strategy"),
        ("solve", "finite-difference steady state at the first eps"),
        ("expand", "Taylor jets and corrector coefficients at the ESS points"),
        ("compare", "asymptotic vs reference moments over an eps sweep"),
        ("sweep", "re-run the ESS search while varying one parameter"),
    ):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--config", required=True, type=Path)
        sp.add_argument("--out", type=Path, default=None, help="output directory (default: .)")
        sp.add_argument("--eps", default=None, help="comma separated mutation scales")
        sp.add_argument("--grid-points", type=int, default=None)
        if name == "sweep":
            sp.add_argument("--param", required=True)
            sp.add_argument("--values", default=None, help="comma separated values")
            sp.add_argument("--range", default=None, help="start,stop,num")
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        cfg = _apply_overrides(load_config(args.config, out_dir=args.out), args)
        if args.command == "sweep":
            return cmd_sweep(cfg, args)
        return {"ess": cmd_ess, "solve": cmd_solve, "expand": cmd_expand, "compare": cmd_compare}[
            args.command](cfg)
    except (ConfigError, InvalidParameters) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NoEssFound as exc:
        print(f"no ESS found: {exc}", file=sys.stderr)
        return EXIT_NO_ESS
    except (DegenerateEss, SingularSystem, DomainError, QuadratureFailure) as exc:
        print(f"expansion failed: {exc}", file=sys.stderr)
        return EXIT_EXPANSION
    except (NonConvergence, Extinction) as exc:
        print(f"solver failed: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
