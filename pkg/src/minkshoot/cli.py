"""CLI entry point for minkshoot."""

from __future__ import annotations

import argparse
import json
import logging
import sys

import argcomplete

from .bifurcation_sweep import sweep_q, write_gap_log, write_gnuplot_blocks, write_sweep_csv
from .config import RunConfig, build_config, load_config
from .errors import (
    ConfigError,
    ContractViolationError,
    DegeneratePathError,
    DomainError,
    HypothesisError,
    IncompleteSolveError,
    IntegrationError,
    SearchFailureError,
    UsageError,
)
from .neumann_eigen import eigenvalue
from .pruefer_angle import crossing_count
from .shooting_solver import Side, make_profile, scan, shoot, solve_all, verify_solution

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_SEARCH = 2
EXIT_INTEGRATION = 3
EXIT_HYPOTHESIS = 4
EXIT_INCOMPLETE = 5
EXIT_VERIFY = 6


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _out_dir(cfg: RunConfig):
    cfg.out.mkdir(parents=True, exist_ok=True)
    return cfg.out


def cmd_eigen(cfg: RunConfig) -> int:
    """Print k,lambda rows for k = 1..kmax."""
    geom = cfg.geometry()
    print("k,lambda")
    for k in range(1, cfg.kmax + 1):
        print(f"{k},{_fmt(eigenvalue(geom, k, cfg.tol))}")
    return EXIT_OK


def cmd_shoot(cfg: RunConfig) -> int:
    if cfg.d is None:
        raise ConfigError("shoot needs --d")
    geom, nl = cfg.geometry(), cfg.nonlinearity()
    shot = shoot(geom, nl, cfg.d, cfg.tol)
    csv_path = shot.traj.to_csv(_out_dir(cfg) / f"trajectory_d{cfg.d!r}.csv")
    summary = {
        "d": shot.d,
        "theta_end": shot.theta_end,
        "half_turns": shot.half_turns,
        "crossings": crossing_count(shot.traj, nl.s0),
        "csv_path": str(csv_path),
    }
    print(json.dumps(summary, indent=2))
    return EXIT_OK


def _solve(cfg: RunConfig, geom, nl):
    return solve_all(
        geom,
        nl,
        cfg.k,
        cfg.tol,
        grid_size=cfg.grid_size,
        jobs=cfg.jobs,
        accept_tol=cfg.accept_tol,
        extended=cfg.extended,
    )


def cmd_solve(cfg: RunConfig) -> int:
    """Solve for k, write one profile CSV per solution and print the summaries."""
    geom, nl = cfg.geometry(), cfg.nonlinearity()
    profiles = _solve(cfg, geom, nl)
    out = _out_dir(cfg)
    rows = []
    for i, p in enumerate(profiles):
        path = p.traj.to_csv(out / f"profile_{p.side}_j{p.crossings}_{i}.csv")
        rows.append(p.to_dict(str(path)))
    print(json.dumps(rows, indent=2))
    return EXIT_OK


def cmd_verify(cfg: RunConfig) -> int:
    """Verify the profile of --d, or every profile a solve finds."""
    geom, nl = cfg.geometry(), cfg.nonlinearity()
    if cfg.d is not None:
        profiles = [make_profile(geom, nl, cfg.d, cfg.tol)]
    else:
        profiles = _solve(cfg, geom, nl)
    rows = []
    for p in profiles:
        report = verify_solution(p, geom, nl)
        rows.append({"d": p.d, "side": str(p.side), "crossings": p.crossings, **report.to_dict()})
    print(json.dumps(rows, indent=2))
    if not all(row["passed"] for row in rows):
        print("ERROR: verification failed", file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


def cmd_sweep(cfg: RunConfig) -> int:
    """Sweep q for the prototype with exponent r; writes CSV, gnuplot blocks and a gap log."""
    if cfg.r is None:
        raise ConfigError("sweep needs --r")
    if cfg.q_range is None:
        raise ConfigError("sweep needs --q-range LO HI")
    geom = cfg.geometry()
    result = sweep_q(
        geom,
        cfg.r,
        cfg.q_range,
        cfg.q_steps,
        cfg.k_max,
        cfg.tol,
        grid_size=cfg.grid_size,
        jobs=cfg.jobs,
        accept_tol=cfg.accept_tol,
    )
    out = _out_dir(cfg)
    csv_path = write_sweep_csv(result.points, out / "sweep.csv")
    gp_path = write_gnuplot_blocks(result.points, out / "sweep_branches.dat")
    gap_path = write_gap_log(result.gaps, out / "sweep_gaps.log")
    print(f"points: {len(result.points)}  gaps: {len(result.gaps)}")
    print(f"  {csv_path}")
    print(f"  {gp_path}")
    print(f"  {gap_path}")
    if result.all_failed:
        print("ERROR: every admissible q step failed, see the gap log", file=sys.stderr)
        return EXIT_INCOMPLETE
    return EXIT_OK


def cmd_scan(cfg: RunConfig) -> int:
    """Print d,theta_end,half_turns for the scan grid of one side."""
    geom, nl = cfg.geometry(), cfg.nonlinearity()
    shots = scan(
        geom, nl, Side(cfg.side), cfg.grid_size, cfg.tol, jobs=cfg.jobs, extended=cfg.extended
    )
    print("d,theta_end,half_turns")
    for shot in shots:
        print(f"{_fmt(shot.d)},{_fmt(shot.theta_end)},{shot.half_turns}")
    return EXIT_OK


def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
    group = common.add_argument_group("problem and run options")
    group.add_argument("--N", type=int, help="Space dimension (default 1)")
    group.add_argument("--R1", type=float, help="Inner radius, 0 for a ball (default 0)")
    group.add_argument("--R2", type=float, help="Outer radius (default 1)")
    group.add_argument("--q", type=float, help="Prototype exponent q")
    group.add_argument("--r", type=float, help="Prototype exponent r")
    group.add_argument("--callback", help="Nonlinearity as 'module:function' (needs --s0)")
    group.add_argument("--s0", type=float, help="Equilibrium of the callback nonlinearity")
    group.add_argument("--tol", type=float, help="Integration tolerance (default 1e-10)")
    group.add_argument("--jobs", type=int, help="Worker processes (default 1)")
    group.add_argument("--out", help="Output directory (default .)")
    group.add_argument("--config", help="JSON config file; flags override its values")
    group.add_argument(
        "-v", "--verbose", action="count", default=0, help="More logging (-v info, -vv debug)"
    )
    return common


def _store_true() -> dict:
    return {"action": "store_const", "const": True, "default": None}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="minkshoot",
        description="minkshoot: radial Neumann solutions of the Minkowski-curvature equation",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        allow_abbrev=False,
        epilog="""
Examples:
  # Radial Neumann eigenvalues of the unit interval
  %(prog)s eigen --N 1 --R1 0 --R2 1 --kmax 3

  # One shot from u(0) = 0.999
  %(prog)s shoot --q 15 --r 3 --N 1 --R2 1 --d 0.999

  # All solutions with one crossing, profiles written to ./out
  %(prog)s solve --q 15 --r 3 --N 1 --R2 1 --k 1 --out out

  # Re-check every solution at a finer tolerance
  %(prog)s verify --q 15 --r 3 --N 1 --R2 1 --k 1

  # Bifurcation data over q in [4, 50]
  %(prog)s sweep --r 3 --N 1 --R2 1 --q-range 4 50 --q-steps 200 --k-max 2

  # Winding profile of the scan grid
  %(prog)s scan --q 15 --r 3 --side above

Tab completion (add to ~/.bashrc or ~/.zshrc):
  eval "$(register-python-argcomplete %(prog)s)"
        """,
    )
    common = _common_parser()
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    def add(name, handler, help_text):
        p = sub.add_parser(name, parents=[common], help=help_text, allow_abbrev=False)
        p.set_defaults(handler=handler)
        return p

    p = add("eigen", cmd_eigen, "Radial Neumann eigenvalues lambda_1..lambda_kmax")
    p.add_argument("--kmax", type=int, help="Largest index (default 3)")

    p = add("shoot", cmd_shoot, "Integrate from one datum d and report its angle")
    p.add_argument("--d", type=float, help="Initial datum u(R1)")

    for name, handler, help_text in (
        ("solve", cmd_solve, "Find every solution with 1..k crossings"),
        ("verify", cmd_verify, "Solve (or take --d) and verify at a finer tolerance"),
    ):
        p = add(name, handler, help_text)
        p.add_argument("--k", type=int, help="Crossing count to reach (default 1)")
        p.add_argument("--grid-size", type=int, help="Scan points per side (default 256)")
        p.add_argument("--accept-tol", type=float, help="Largest accepted |v(R2)| (default 1e-8)")
        p.add_argument("--extended", help="Scan the above side up to 2 d*", **_store_true())
        if name == "verify":
            p.add_argument("--d", type=float, help="Verify this datum instead of solving")

    p = add("sweep", cmd_sweep, "Bifurcation data for the prototype over a q range")
    p.add_argument("--q-range", type=float, nargs=2, metavar=("LO", "HI"), help="q interval")
    p.add_argument("--q-steps", type=int, help="Uniform q grid size (default 200)")
    p.add_argument("--k-max", type=int, help="Largest k solved per q (default 2)")
    p.add_argument("--grid-size", type=int, help="Scan points per side (default 256)")
    p.add_argument("--accept-tol", type=float, help="Largest accepted |v(R2)| (default 1e-8)")

    p = add("scan", cmd_scan, "Print d, theta(R2) and half-turns over one side's scan grid")
    p.add_argument("--side", choices=[s.value for s in Side], help="below or above s0")
    p.add_argument("--grid-size", type=int, help="Scan points (default 256)")
    p.add_argument("--extended", help="Scan the above side up to 2 d*", **_store_true())

    return parser


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    file_values = load_config(args.config) if args.config else {}
    cli_values = {k: v for k, v in vars(args).items() if k not in ("command", "handler", "config")}
    return build_config(file_values, cli_values)


def _setup_logging(verbose: int) -> None:
    level = logging.WARNING if verbose <= 0 else logging.INFO if verbose == 1 else logging.DEBUG
    logging.basicConfig(
        level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr
    )


def run(args: argparse.Namespace) -> int:
    """Dispatch a parsed command line and map failures to exit codes."""
    try:
        cfg = _config_from_args(args)
        return args.handler(cfg)
    except HypothesisError as e:
        print(f"ERROR: hypothesis fails: {e}", file=sys.stderr)
        return EXIT_HYPOTHESIS
    except UsageError as e:
        print(f"ERROR: {e}", file=sys.stderr)
        return EXIT_USAGE
    except SearchFailureError as e:
        print(f"ERROR: eigenvalue search failed: {e}", file=sys.stderr)
        return EXIT_SEARCH
    except (IntegrationError, DomainError, DegeneratePathError, ContractViolationError) as e:
        print(f"ERROR: integration failed: {e}", file=sys.stderr)
        return EXIT_INTEGRATION
    except IncompleteSolveError as e:
        print(f"ERROR: incomplete solve: {e}", file=sys.stderr)
        return EXIT_INCOMPLETE


def main(argv: list[str] | None = None) -> None:
    parser = build_parser()
    argcomplete.autocomplete(parser)
    args = parser.parse_args(argv)

    if args.command is None:
        parser.print_help()
        return

    _setup_logging(args.verbose)
    code = run(args)
    if code:
        sys.exit(code)
