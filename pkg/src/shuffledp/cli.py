"""Command-line front end.

Commands: delta, solve-m, table1, sweep, asymptotics, sensitivity,
validate, compose, min-n, admissibility. Output is CSV (default) with a
header row and 17-significant-digit floats, or JSON with one object per
row. File output is atomic (temp then rename); nothing is written on
error. Randomized commands require an explicit --seed.

Exit codes: 0 success, 2 invalid parameters or failed checks, 64 usage,
65 precondition or representability error, 66 unreadable config file.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile

import numpy as np

from . import accountant, asymptotics, montecarlo
from .errors import (
    DomainError,
    NumericalError,
    PreconditionError,
    RangeError,
    SaturationError,
    ValidityError,
)
from .lognormal import B_UPPER

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_USAGE = 64
EXIT_PRECONDITION = 65
EXIT_NOINPUT = 66

TABLE1_SIGMAS = (0.5, 0.75, 1.0, 1.5, 2.0)
TABLE1_DELTA = 0.01


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def _write_atomic(text: str, out_path: str | None) -> None:
    if out_path is None:
        sys.stdout.write(text)
        return
    directory = os.path.dirname(os.path.abspath(out_path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".shuffledp-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, out_path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(rows, columns, fmt: str, out_path: str | None) -> None:
    """Render rows fully in memory, then write in one atomic step."""
    if fmt == "json":
        text = "\n".join(
            json.dumps({c: r[c] for c in columns}) for r in rows
        ) + "\n"
    else:
        lines = [",".join(columns)]
        lines += [",".join(_fmt(r[c]) for c in columns) for r in rows]
        text = "\n".join(lines) + "\n"
    _write_atomic(text, out_path)


def _add_output_flags(p):
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", default=None, help="write to this file atomically")


def _float_list(text: str):
    values = [float(v) for v in text.split(",") if v.strip()]
    if not values:
        raise ValueError("empty list")
    return values


def _breakdown_row(sigma, m, bd):
    return {
        "sigma": sigma,
        "M": m,
        "mu": bd.mu,
        "term_be": bd.term_be,
        "term_linear": bd.term_linear,
        "term_quad": bd.term_quad,
        "term_cubic": bd.term_cubic,
        "term_quartic": bd.term_quartic,
        "term_tail": bd.term_tail,
        "total": bd.total,
        "validity_lhs": bd.validity_lhs,
        "validity_rhs": bd.validity_rhs,
        "valid": bd.valid,
    }


def _cmd_delta(args) -> int:
    bd = accountant.delta_bound(args.sigma, args.m, args.b)
    row = _breakdown_row(args.sigma, args.m, bd)
    if args.epochs > 1:
        row["epochs"] = args.epochs
        row["composed_shift"] = accountant.multi_epoch(
            accountant.PrivacyParams(args.sigma, args.m, args.epochs), args.b
        ).composed_shift if bd.valid else math.nan
    if accountant.below_impossibility_threshold(args.sigma, args.m):
        print(
            f"note: sigma={args.sigma} is below 1/sqrt(2 ln M); this regime "
            "is provably non-private",
            file=sys.stderr,
        )
    _emit([row], list(row.keys()), args.format, args.out)
    return EXIT_OK if bd.valid else EXIT_INVALID


def _cmd_solve_m(args) -> int:
    max_delta = accountant.admissibility(sigma=args.sigma)
    if args.delta > max_delta:
        max_sigma = None
        if args.delta < 1.0 / 3.0:
            max_sigma = accountant.admissibility(delta=args.delta)
        hint = f"delta={args.delta} exceeds the frontier at sigma={args.sigma}: " \
               f"max admissible delta is {max_delta:.6g}"
        if max_sigma is not None:
            hint += f" (and delta={args.delta} would allow sigma <= {max_sigma:.4g})"
        print(hint, file=sys.stderr)
        return EXIT_INVALID
    sol = accountant.solve_m_exact(args.sigma, args.delta, args.b)
    row = {
        "sigma": args.sigma,
        "delta": args.delta,
        "M_two_term": math.ceil(accountant.m_closed_form(args.sigma, args.delta, args.b)),
        "M_exact": sol.M,
        "delta_achieved": sol.delta_achieved,
        "N_min": sol.N_min,
    }
    _emit([row], list(row.keys()), args.format, args.out)
    return EXIT_OK


def _cmd_table1(args) -> int:
    rows = []
    for sigma in TABLE1_SIGMAS:
        sol = accountant.solve_m_exact(sigma, TABLE1_DELTA, args.b)
        rows.append({
            "sigma": sigma,
            "M_two_term": math.ceil(
                accountant.m_closed_form(sigma, TABLE1_DELTA, args.b)
            ),
            "M_exact": sol.M,
            "N_min": sol.N_min,
        })
    _emit(rows, ["sigma", "M_two_term", "M_exact", "N_min"], args.format, args.out)
    return EXIT_OK


_SWEEP_KEYS = {
    "sigma_list", "delta_list", "m_min", "m_max", "m_points", "m_spacing",
    "epochs", "b", "output", "seed",
}


def _parse_config(path: str) -> dict:
    try:
        with open(path) as fh:
            raw = fh.read()
    except OSError as exc:
        raise FileNotFoundError(f"cannot read config {path}: {exc}") from exc
    config = {}
    for lineno, line in enumerate(raw.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in _SWEEP_KEYS:
            raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
        config[key] = value
    return config


def _sweep_grid(config: dict):
    sigmas = _float_list(config.get("sigma_list", ""))
    m_min = float(config.get("m_min", "0"))
    m_max = float(config.get("m_max", "0"))
    points = int(config.get("m_points", "0"))
    spacing = config.get("m_spacing", "log")
    if m_min < 3 or m_max < m_min or points < 1:
        raise ValueError("need m_min >= 3, m_max >= m_min, m_points >= 1")
    if spacing == "log":
        ms = np.geomspace(m_min, m_max, points)
    elif spacing == "linear":
        ms = np.linspace(m_min, m_max, points)
    else:
        raise ValueError(f"m_spacing must be 'log' or 'linear', got {spacing!r}")
    return sigmas, [max(3, int(round(m))) for m in ms]


def _cmd_sweep(args) -> int:
    try:
        config = _parse_config(args.config)
        sigmas, ms = _sweep_grid(config)
    except FileNotFoundError as exc:
        print(exc, file=sys.stderr)
        return EXIT_NOINPUT
    except ValueError as exc:
        print(f"bad config: {exc}", file=sys.stderr)
        return EXIT_NOINPUT
    b = float(config.get("b", B_UPPER))
    fmt = config.get("output", args.format)
    columns = ["sigma", "M", "delta_total", "term_be", "term_linear",
               "term_quad", "term_cubic", "term_quartic", "term_tail", "valid"]
    rows = []
    for sigma in sigmas:
        for m in ms:
            try:
                bd = accountant.delta_bound(sigma, m, b)
                rows.append({
                    "sigma": sigma, "M": m, "delta_total": bd.total,
                    "term_be": bd.term_be, "term_linear": bd.term_linear,
                    "term_quad": bd.term_quad, "term_cubic": bd.term_cubic,
                    "term_quartic": bd.term_quartic, "term_tail": bd.term_tail,
                    "valid": bd.valid,
                })
            except (RangeError, PreconditionError):
                # out-of-guard rows are reported, never dropped
                rows.append({
                    "sigma": sigma, "M": m, "delta_total": math.nan,
                    "term_be": math.nan, "term_linear": math.nan,
                    "term_quad": math.nan, "term_cubic": math.nan,
                    "term_quartic": math.nan, "term_tail": math.nan,
                    "valid": False,
                })
    _emit(rows, columns, fmt, args.out)
    return EXIT_OK


def _sigma_grid(args):
    if args.sigma_min <= 0 or args.sigma_max < args.sigma_min or args.points < 2:
        raise DomainError("need 0 < sigma-min <= sigma-max and points >= 2")
    if args.linear:
        return np.linspace(args.sigma_min, args.sigma_max, args.points)
    return np.geomspace(args.sigma_min, args.sigma_max, args.points)


def _cmd_asymptotics(args) -> int:
    rows = []
    for sigma in _sigma_grid(args):
        cmp_ = asymptotics.coeff_ratio(float(sigma))
        rows.append({
            "sigma": float(sigma),
            "shuffle_mu": cmp_.shuffle_mu,
            "poisson_mu": cmp_.poisson_mu,
            "ratio": cmp_.ratio,
        })
    _emit(rows, ["sigma", "shuffle_mu", "poisson_mu", "ratio"], args.format, args.out)
    return EXIT_OK


def _cmd_sensitivity(args) -> int:
    rows = []
    for sigma in _sigma_grid(args):
        for delta in args.deltas:
            rows.append({
                "sigma": float(sigma),
                "delta": delta,
                "m_two_term": accountant.m_closed_form(float(sigma), delta, args.b),
            })
    _emit(rows, ["sigma", "delta", "m_two_term"], args.format, args.out)
    return EXIT_OK


def _cmd_validate(args) -> int:
    report = montecarlo.validate_all(args.sigma, args.m, args.replicas, args.seed)
    if args.format == "json":
        rows = [{
            "check": c.name, "status": c.status, "margin": c.margin,
            "detail": c.detail,
        } for c in report.checks]
        _emit(rows, ["check", "status", "margin", "detail"], "json", args.out)
    else:
        lines = [f"backend: {report.backend}"]
        for c in report.checks:
            lines.append(
                f"{c.name}: {c.status.upper()} (margin={c.margin:.6g}) {c.detail}"
            )
        lines.append("all checks passed" if report.all_passed else "FAILURES present")
        _write_atomic("\n".join(lines) + "\n", args.out)
    return EXIT_OK if report.all_passed else EXIT_INVALID


def _cmd_compose(args) -> int:
    if (args.m is None) == (args.delta_target is None):
        print("pass exactly one of --m (evaluate) or --delta-target (plan)",
              file=sys.stderr)
        return EXIT_USAGE
    if args.m is not None:
        if args.mode != "proven":
            print("--m evaluation is only defined for the proven mode",
                  file=sys.stderr)
            return EXIT_USAGE
        result = accountant.multi_epoch(
            accountant.PrivacyParams(args.sigma, args.m, args.epochs), args.b
        )
        row = {
            "sigma": args.sigma, "M": args.m, "epochs": args.epochs,
            "mode": "proven", "per_epoch_delta": result.per_epoch_delta,
            "composed_shift": result.composed_shift,
            "guaranteed": result.guaranteed,
        }
    else:
        plan = accountant.plan_epochs(
            args.sigma, args.epochs, args.delta_target, args.b, args.mode
        )
        if not plan.guaranteed:
            print("warning: conjectured sqrt(E) scaling; this is not a proven "
                  "guarantee", file=sys.stderr)
        row = {
            "sigma": args.sigma, "epochs": args.epochs, "mode": plan.mode,
            "composed_target": plan.composed_target,
            "per_epoch_delta": plan.per_epoch_delta,
            "M_required": plan.rounds_required, "N_min": plan.n_min,
            "guaranteed": plan.guaranteed,
        }
    _emit([row], list(row.keys()), args.format, args.out)
    return EXIT_OK


def _cmd_min_n(args) -> int:
    n = accountant.min_dataset(args.sigma, args.m, args.clip, args.budget)
    row = {"sigma": args.sigma, "M": args.m, "clip": args.clip,
           "noise_budget": args.budget, "N_min": n}
    _emit([row], list(row.keys()), args.format, args.out)
    return EXIT_OK


def _cmd_admissibility(args) -> int:
    if (args.sigma is None) == (args.delta is None):
        print("pass exactly one of --sigma or --delta", file=sys.stderr)
        return EXIT_USAGE
    if args.sigma is not None:
        row = {"sigma": args.sigma,
               "max_delta": accountant.admissibility(sigma=args.sigma)}
    else:
        row = {"delta": args.delta,
               "max_sigma": accountant.admissibility(delta=args.delta)}
    _emit([row], list(row.keys()), args.format, args.out)
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="shuffledp",
                     description="f-DP accounting for shuffled DP-SGD")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("delta", help="six-term delta bound at (sigma, M)")
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--epochs", type=int, default=1)
    p.add_argument("--b", type=float, default=B_UPPER)
    _add_output_flags(p)
    p.set_defaults(func=_cmd_delta)

    p = sub.add_parser("solve-m", help="smallest M hitting a delta target")
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--b", type=float, default=B_UPPER)
    _add_output_flags(p)
    p.set_defaults(func=_cmd_solve_m)

    p = sub.add_parser("table1", help="reference parameter table at delta=0.01")
    p.add_argument("--b", type=float, default=B_UPPER)
    _add_output_flags(p)
    p.set_defaults(func=_cmd_table1)

    p = sub.add_parser("sweep", help="delta breakdown over a (sigma, M) grid")
    p.add_argument("--config", required=True, help="key = value config file")
    _add_output_flags(p)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("asymptotics", help="GDP coefficients and their ratio")
    p.add_argument("--sigma-min", type=float, default=0.2)
    p.add_argument("--sigma-max", type=float, default=20.0)
    p.add_argument("--points", type=int, default=200)
    p.add_argument("--linear", action="store_true", help="linear sigma spacing")
    _add_output_flags(p)
    p.set_defaults(func=_cmd_asymptotics)

    p = sub.add_parser("sensitivity", help="closed-form M over sigma at delta levels")
    p.add_argument("--sigma-min", type=float, default=0.4)
    p.add_argument("--sigma-max", type=float, default=4.0)
    p.add_argument("--points", type=int, default=100)
    p.add_argument("--linear", action="store_true")
    p.add_argument("--deltas", type=_float_list, default=[1e-2, 1e-3, 1e-4])
    p.add_argument("--b", type=float, default=B_UPPER)
    _add_output_flags(p)
    p.set_defaults(func=_cmd_sensitivity)

    p = sub.add_parser("validate", help="Monte Carlo checks of the bounds")
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--replicas", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    _add_output_flags(p)
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("compose", help="multi-epoch composition or planning")
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--epochs", type=int, required=True)
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--delta-target", type=float, default=None)
    p.add_argument("--mode", choices=("proven", "conjectured_sqrtE"),
                   default="proven")
    p.add_argument("--b", type=float, default=B_UPPER)
    _add_output_flags(p)
    p.set_defaults(func=_cmd_compose)

    p = sub.add_parser("min-n", help="smallest dataset for the noise budget")
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--clip", type=float, default=accountant.DEFAULT_CLIP)
    p.add_argument("--budget", type=float, default=accountant.DEFAULT_NOISE_BUDGET)
    _add_output_flags(p)
    p.set_defaults(func=_cmd_min_n)

    p = sub.add_parser("admissibility", help="recommended (sigma, delta) frontier")
    p.add_argument("--sigma", type=float, default=None)
    p.add_argument("--delta", type=float, default=None)
    _add_output_flags(p)
    p.set_defaults(func=_cmd_admissibility)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else EXIT_USAGE
    try:
        return args.func(args)
    except (PreconditionError, RangeError, SaturationError, NumericalError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except (DomainError, ValidityError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
