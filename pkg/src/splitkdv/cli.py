"""Command-line front end.

Subcommands: ``logistic``, ``kdv-converge``, ``kdv-solve``, ``selftest``.
Settings come from an optional ``--config`` file of ``key = value`` lines,
overridden by flags.  Exit codes: 0 ok, 1 numerical failure, 2 config error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from . import logistic
from .convergence import (
    ACCEPTANCE_BANDS,
    ExactClosedForm,
    ExactSoliton,
    FineReference,
    kdv_problem,
    logistic_problem,
    run_refinement_studies,
)
from .exceptions import ConfigError, SplittingFailure
from .kdv import AiryFlow, BurgersFlow, SolitonParams, conserved_quantities, soliton
from .selftest import format_table, run_selftest
from .spectral import PeriodicGrid, read_field_csv, sobolev_norm, write_field_csv
from .splitting import SplitScheme, TimeGrid, run_splitting

log = logging.getLogger("splitkdv")

EXIT_OK, EXIT_NUMERICAL, EXIT_CONFIG = 0, 1, 2

DEFAULTS = {
    "problem": None,
    "scheme": "godunov",
    "dt": None,
    "ladder": None,
    "T": 1.0,
    "L": 100.0,
    "N": 512,
    "kappa": 0.4,
    "x0": None,
    "u0": 0.5,
    "norm": "0",
    "out": None,
    "strict": False,
    "jobs": None,
    "oracle": "reference",
    "init": None,
    "every": 0,
}

CASTS = {
    "dt": float,
    "T": float,
    "L": float,
    "N": int,
    "kappa": float,
    "x0": float,
    "u0": float,
    "jobs": int,
    "every": int,
}


def _parse_bool(text):
    value = str(text).strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off", ""):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


def read_config(path) -> dict:
    """Flat ``key = value`` file; ``#`` starts a comment."""
    settings = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.lstrip("-").replace("-", "_")
        if key not in DEFAULTS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        settings[key] = value
    return settings


def resolve_settings(args: argparse.Namespace) -> dict:
    settings = dict(DEFAULTS)
    if getattr(args, "config", None):
        settings.update(read_config(args.config))
    for key in DEFAULTS:
        value = getattr(args, key, None)
        if value is not None and value is not False:
            settings[key] = value
    for key, cast in CASTS.items():
        if settings[key] is not None:
            try:
                settings[key] = cast(settings[key])
            except (TypeError, ValueError):
                raise ConfigError(f"{key} must be a number, got {settings[key]!r}") from None
    settings["strict"] = _parse_bool(settings["strict"])
    try:
        settings["norm"] = [int(s) for s in str(settings["norm"]).split(",") if s.strip()]
    except ValueError:
        raise ConfigError(f"norm must be a comma-separated list of integers, got {settings['norm']!r}") from None
    if not settings["norm"] or min(settings["norm"]) < 0:
        raise ConfigError("norm indices must be nonnegative integers")
    try:
        settings["scheme"] = SplitScheme.parse(settings["scheme"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if not settings["T"] > 0:
        raise ConfigError(f"T must be positive, got {settings['T']}")
    return settings


def _ladder_counts(settings, default) -> list[int]:
    text = settings["ladder"]
    if text is None:
        return list(default)
    try:
        counts = [int(s) for s in str(text).split(",") if s.strip()]
    except ValueError:
        raise ConfigError(f"ladder must be comma-separated step counts, got {text!r}") from None
    if len(counts) < 4:
        raise ConfigError("ladder needs at least 4 step counts")
    if min(counts) < 1 or any(b <= a for a, b in zip(counts, counts[1:])):
        raise ConfigError("ladder step counts must be positive and strictly increasing")
    return counts


def _jobs(settings, n_tasks: int) -> int:
    jobs = settings["jobs"]
    if jobs is None:
        jobs = min(n_tasks, os.cpu_count() or 1)
    cap = os.environ.get("SPLITKDV_THREADS")
    if cap:
        try:
            jobs = min(jobs, max(1, int(cap)))
        except ValueError:
            raise ConfigError(f"SPLITKDV_THREADS must be an integer, got {cap!r}") from None
    return max(1, jobs)


def _grid(settings) -> PeriodicGrid:
    try:
        return PeriodicGrid(settings["L"], settings["N"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _kdv_initial(settings):
    """Initial field and, for soliton data, its parameters."""
    problem = settings["problem"] or "kdv-soliton"
    if problem == "kdv-soliton":
        grid = _grid(settings)
        x0 = settings["x0"] if settings["x0"] is not None else grid.L / 2
        try:
            params = SolitonParams(settings["kappa"], x0, grid.L)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        return soliton(grid, params), params
    if problem == "kdv-custom":
        if not settings["init"]:
            raise ConfigError("kdv-custom needs --init pointing to an 'x,u' CSV snapshot")
        try:
            return read_field_csv(settings["init"]), None
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot load initial data: {exc}") from None
    raise ConfigError(f"problem {problem!r} is not a KdV problem (use kdv-soliton or kdv-custom)")


def _emit(text: str, out):
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def cmd_logistic(settings) -> int:
    dt = settings["dt"] if settings["dt"] is not None else 0.05
    config = logistic.LogisticConfig(settings["u0"], settings["T"], dt).validate()
    try:
        rows = logistic.logistic_table(config)
    except SplittingFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    cols = ["n", "t_n", "godunov", "strang", "exact", "err_godunov", "err_strang"]
    lines = [",".join(cols)]
    for row in rows:
        lines.append(",".join(str(row[c]) if c == "n" else f"{row[c]:.17g}" for c in cols))
    _emit("\n".join(lines) + "\n", settings["out"])
    return EXIT_OK


def cmd_kdv_converge(settings) -> int:
    scheme = settings["scheme"]
    T = settings["T"]
    if settings["problem"] == "logistic":
        if not 0 < settings["u0"] < 1:
            raise ConfigError(f"u0 must lie in (0, 1), got {settings['u0']}")
        counts = _ladder_counts(settings, [5, 10, 20, 40, 80])
        problem = logistic_problem(settings["u0"], T)
        oracle = ExactClosedForm(settings["u0"])
    else:
        counts = _ladder_counts(settings, [32, 64, 128, 256, 512])
        u0, params = _kdv_initial(settings)
        problem = kdv_problem(u0, T, name=settings["problem"] or "kdv-soliton")
        ladder = [T / n for n in counts]
        if settings["oracle"] == "soliton":
            if params is None:
                raise ConfigError("the exact-soliton oracle needs --problem kdv-soliton")
            oracle = ExactSoliton(u0.grid, params)
        elif settings["oracle"] == "reference":
            oracle = FineReference.for_ladder(u0, ladder)
        else:
            raise ConfigError(f"unknown oracle {settings['oracle']!r} (reference or soliton)")
    ladder = [T / n for n in counts]
    jobs = _jobs(settings, len(ladder))
    reports = run_refinement_studies(problem, scheme, ladder, settings["norm"], oracle, jobs)

    status = EXIT_OK
    out = settings["out"]
    for s, report in reports.items():
        target = out
        if out not in (None, "-") and len(reports) > 1:
            p = Path(out)
            target = p.with_name(f"{p.stem}_H{s}{p.suffix or '.csv'}")
        _emit(report.to_csv(), target)
        for dt, why in sorted(report.failures.items(), reverse=True):
            print(f"dt={dt:.6g} failed: {why}", file=sys.stderr)
        slope = "n/a" if report.slope is None else f"{report.slope:.4f}"
        lo, hi = ACCEPTANCE_BANDS[scheme]
        print(f"{problem.name} {scheme.value} H^{s}: slope {slope} (band [{lo}, {hi}])", file=sys.stderr)
        if report.slope is None:
            status = EXIT_NUMERICAL
        elif settings["strict"] and not report.within():
            status = EXIT_NUMERICAL
    return status


def cmd_kdv_solve(settings) -> int:
    u0, params = _kdv_initial(settings)
    grid = u0.grid
    T = settings["T"]
    dt = settings["dt"] if settings["dt"] is not None else T / 256
    if not 0 < dt <= T:
        raise ConfigError(f"dt must lie in (0, T], got {dt}")
    every = settings["every"]
    if every < 0:
        raise ConfigError("every must be >= 0")
    out = Path(settings["out"] or "kdv_out")
    out.mkdir(parents=True, exist_ok=True)
    tgrid = TimeGrid(T, dt)
    n_last = tgrid.n_steps
    conserved = ["t,mass,momentum,hamiltonian"]

    def record(n, t, state):
        q = conserved_quantities(state)
        conserved.append(f"{t:.17g},{q.mass:.17g},{q.momentum:.17g},{q.hamiltonian:.17g}")
        if n == 0 or n == n_last or (every and n % every == 0):
            write_field_csv(out / f"snapshot_{n:06d}.csv", state)

    try:
        traj = run_splitting(AiryFlow(grid), BurgersFlow(grid), u0, tgrid, settings["scheme"], callback=record)
    except SplittingFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    finally:
        (out / "conserved.csv").write_text("\n".join(conserved) + "\n")
    if params is not None:
        err = sobolev_norm(traj.final_state - soliton(grid, params, traj.final_time), 0)
        print(f"final time {traj.final_time:.6g}: H0 distance to exact soliton {err:.3e}", file=sys.stderr)
    return EXIT_OK


def cmd_selftest(settings) -> int:
    results = run_selftest()
    print(format_table(results))
    return EXIT_OK if all(r.passed for r in results) else EXIT_NUMERICAL


COMMANDS = {
    "logistic": cmd_logistic,
    "kdv-converge": cmd_kdv_converge,
    "kdv-solve": cmd_kdv_solve,
    "selftest": cmd_selftest,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="file of 'key = value' lines; flags take precedence")
    common.add_argument("--problem", choices=["logistic", "kdv-soliton", "kdv-custom"])
    common.add_argument("--scheme", choices=[s.value for s in SplitScheme])
    common.add_argument("--dt", help="time step")
    common.add_argument("--ladder", help="comma-separated step counts n (dt = T/n), e.g. 32,64,128,256,512")
    common.add_argument("--T", help="final time")
    common.add_argument("--L", help="domain length")
    common.add_argument("--N", help="number of grid points (even)")
    common.add_argument("--kappa", help="soliton parameter")
    common.add_argument("--x0", help="initial soliton crest position (default L/2)")
    common.add_argument("--u0", help="logistic initial value in (0, 1)")
    common.add_argument("--norm", help="Sobolev indices for errors, comma separated")
    common.add_argument("--out", help="output file (directory for kdv-solve); '-' for stdout")
    common.add_argument("--strict", action="store_true", default=None,
                        help="exit 1 when a fitted slope leaves its acceptance band")
    common.add_argument("--jobs", help="concurrent ladder runs (capped by SPLITKDV_THREADS)")
    common.add_argument("--oracle", choices=["reference", "soliton"], help="KdV error oracle")
    common.add_argument("--init", help="'x,u' CSV initial data for kdv-custom")
    common.add_argument("--every", help="kdv-solve: snapshot every k steps (0: first and last only)")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(
        prog="splitkdv",
        description="Godunov/Strang operator splitting for KdV and the logistic ODE.",
    )
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.add_parser("logistic", parents=[common], help="per-step logistic iterates as CSV")
    sub.add_parser("kdv-converge", parents=[common], help="refinement study, report CSV")
    sub.add_parser("kdv-solve", parents=[common], help="single KdV run with snapshots")
    sub.add_parser("selftest", parents=[common], help="run the invariant suite")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        settings = resolve_settings(args)
        return COMMANDS[args.command](settings)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
