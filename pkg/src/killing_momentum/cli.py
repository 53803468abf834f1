"""Command-line front end.

Exit codes: 0 success, 1 verification failure, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import fields as dc_fields

import numpy as np

from .errors import ConfigError, KillingMomentumError
from .quadrature import build_grid_s3
from .spectra import build_eigenbasis, coefficient_norm, propagate, spectrum_table
from .verification import RunConfig, run_verification

SCHEMA = 1
EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

_CONFIG_KEYS = {f.name for f in dc_fields(RunConfig)}


def fmt_float(x: float) -> str:
    return format(float(x), ".17g")


def parse_grid(text: str) -> tuple[int, int, int]:
    parts = text.lower().split("x")
    if len(parts) != 3:
        raise ConfigError(f"grid must look like NxNxN, got {text!r}")
    try:
        return tuple(int(p) for p in parts)  # type: ignore[return-value]
    except ValueError:
        raise ConfigError(f"grid must look like NxNxN, got {text!r}") from None


def _coerce(key: str, value: str):
    try:
        if key == "grid":
            return parse_grid(value)
        if key in ("radius", "hbar", "mass", "perturb_x3"):
            return float(value)
        if key in ("n_max", "seed", "workers"):
            return int(value)
    except ValueError:
        raise ConfigError(f"bad value for {key}: {value!r}") from None
    return value


def read_config_file(path: str) -> dict:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _CONFIG_KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        out[key] = _coerce(key, value)
    return out


def build_config(args: argparse.Namespace) -> RunConfig:
    values = read_config_file(args.config) if args.config else {}
    for key in _CONFIG_KEYS:
        v = getattr(args, key, None)
        if v is not None:
            values[key] = v
    cfg = RunConfig(**values)
    cfg.validate()
    return cfg


# -- output -------------------------------------------------------------------------


def _write(cfg: RunConfig, text: str) -> None:
    if cfg.out is None or cfg.out == "-":
        sys.stdout.write(text)
        return
    try:
        with open(cfg.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise ConfigError(f"cannot write {cfg.out}: {exc.strerror}") from None


def _csv(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt_float(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def _json(payload: dict) -> str:
    return json.dumps({"schema": SCHEMA, **payload}, indent=2) + "\n"


def render_report(report, fmt: str) -> str:
    if fmt == "csv":
        rows = [[c.name, c.max_residual, c.tolerance, "pass" if c.passed else "fail"] for c in report.checks]
        return _csv(["check", "max_residual", "tolerance", "status"], rows)
    return _json(
        {
            "status": "pass" if report.passed else "fail",
            "config": report.config,
            "checks": [
                {"name": c.name, "max_residual": c.max_residual, "tolerance": c.tolerance, "passed": c.passed}
                for c in report.checks
            ],
        }
    )


# -- commands -------------------------------------------------------------------------


def cmd_verify(cfg: RunConfig) -> int:
    report = run_verification(cfg)
    _write(cfg, render_report(report, cfg.format))
    if not report.passed:
        print(f"verification failed: {', '.join(report.failed())}", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def cmd_spectrum(cfg: RunConfig, branches: tuple[str, ...] = ("+",)) -> int:
    rows = spectrum_table(cfg.n_max, cfg.radius, cfg.constants, branches)
    if cfg.format == "csv":
        text = _csv(
            ["n", "k", "branch", "energy", "momentum", "spacing"],
            [[r.n, r.k, r.branch, r.energy, r.momentum, r.spacing] for r in rows],
        )
    else:
        text = _json({"rows": [r.__dict__ for r in rows]})
    _write(cfg, text)
    return EXIT_OK


def cmd_sample(cfg: RunConfig, n: int, k: int, branch: str) -> int:
    if not 0 <= k <= n:
        raise ConfigError(f"need 0 <= k <= n, got n={n}, k={k}")
    if n > cfg.n_max:
        raise ConfigError(f"n={n} exceeds n_max={cfg.n_max}")
    if branch not in ("+", "-"):
        raise ConfigError(f"branch must be + or -, got {branch!r}")
    grid = build_grid_s3(*cfg.grid, R=cfg.radius)
    state = build_eigenbasis(n, branch, cfg.radius, cfg.constants, grid)[k]
    psi = state.field(grid.nodes)
    chi, theta, phi = grid.nodes.T
    abs2 = np.abs(psi) ** 2
    if cfg.format == "csv":
        rows = [list(map(float, r)) for r in zip(chi, theta, phi, psi.real, psi.imag, abs2, grid.weights)]
        text = _csv(["chi", "theta", "phi", "re", "im", "abs2", "weight"], rows)
    else:
        text = _json(
            {
                "state": {"n": n, "k": k, "branch": branch, "energy": state.energy, "momentum": state.momentum},
                "columns": ["chi", "theta", "phi", "re", "im", "abs2", "weight"],
                "rows": [list(map(float, r)) for r in zip(chi, theta, phi, psi.real, psi.imag, abs2, grid.weights)],
            }
        )
    _write(cfg, text)
    return EXIT_OK


def read_coefficients(path: str, n_max: int) -> dict:
    """CSV lines ``n,k,branch,re,im``; an optional header line starting with ``n`` is skipped."""
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read coefficients {path}: {exc.strerror}") from None
    coeffs = {}
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line or (lineno == 1 and line.replace(" ", "").lower().startswith("n,")):
            continue
        parts = [p.strip() for p in line.split(",")]
        if len(parts) != 5:
            raise ConfigError(f"{path}:{lineno}: expected n,k,branch,re,im")
        try:
            n, k = int(parts[0]), int(parts[1])
            re, im = float(parts[3]), float(parts[4])
        except ValueError:
            raise ConfigError(f"{path}:{lineno}: malformed number") from None
        branch = parts[2]
        if branch not in ("+", "-"):
            raise ConfigError(f"{path}:{lineno}: branch must be + or -")
        if not 0 <= k <= n or n > n_max:
            raise ConfigError(f"{path}:{lineno}: need 0 <= k <= n <= n_max={n_max}")
        key = (n, k, branch)
        if key in coeffs:
            raise ConfigError(f"{path}:{lineno}: duplicate state {key}")
        coeffs[key] = complex(re, im)
    return coeffs


def parse_times(text: str) -> list[float]:
    text = text.strip()
    if not text:
        return []
    try:
        return [float(t) for t in text.split(",")]
    except ValueError:
        raise ConfigError(f"times must be a comma-separated list of numbers, got {text!r}") from None


def cmd_evolve(cfg: RunConfig, coeff_path: str, times: list[float]) -> int:
    coeffs = read_coefficients(coeff_path, cfg.n_max)
    keys = sorted(coeffs)
    series = [(t, propagate(coeffs, t, cfg.radius, cfg.constants)) for t in times]
    if cfg.format == "csv":
        rows = []
        for t, c in series:
            nrm = coefficient_norm(c)
            for key in keys:
                rows.append([float(t), key[0], key[1], key[2], c[key].real, c[key].imag, nrm])
        text = _csv(["t", "n", "k", "branch", "re", "im", "norm"], rows)
    else:
        text = _json(
            {
                "series": [
                    {
                        "t": t,
                        "norm": coefficient_norm(c),
                        "coefficients": [
                            {"n": key[0], "k": key[1], "branch": key[2], "re": c[key].real, "im": c[key].imag}
                            for key in keys
                        ],
                    }
                    for t, c in series
                ]
            }
        )
    _write(cfg, text)
    return EXIT_OK


# -- argument parsing -------------------------------------------------------------------


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key = value config file; flags override it")
    p.add_argument("--manifold", choices=["sphere3", "circle", "euclidean-plane"])
    p.add_argument("--radius", type=float, help="R for S^3, rho for S^1")
    p.add_argument("--hbar", type=float)
    p.add_argument("--mass", type=float)
    p.add_argument("--grid", type=parse_grid_arg, metavar="NxNxN")
    p.add_argument("--n-max", dest="n_max", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--format", choices=["csv", "json"])
    p.add_argument("--out", metavar="PATH")
    p.add_argument("--workers", type=int)


def parse_grid_arg(text: str):
    try:
        return parse_grid(text)
    except ConfigError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="killing-momentum", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="run the verification suite")
    _common(v)
    v.add_argument("--perturb-x3", dest="perturb_x3", type=float, help=argparse.SUPPRESS)

    s = sub.add_parser("spectrum", help="energy and momentum table")
    _common(s)
    s.add_argument("--branch", choices=["+", "-", "both"], default="+")

    sa = sub.add_parser("sample", help="sample an eigenstate on the quadrature grid")
    _common(sa)
    sa.add_argument("--n", type=int, required=True)
    sa.add_argument("--k", type=int, required=True)
    sa.add_argument("--branch", choices=["+", "-"], default="+")

    e = sub.add_parser("evolve", help="free evolution of eigenstate coefficients")
    _common(e)
    e.add_argument("--coeffs", required=True, metavar="PATH", help="CSV of n,k,branch,re,im")
    e.add_argument("--times", default="", help="comma-separated time list")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = build_config(args)
        if args.command == "verify":
            return cmd_verify(cfg)
        if args.command == "spectrum":
            branches = ("+", "-") if args.branch == "both" else (args.branch,)
            return cmd_spectrum(cfg, branches)
        if args.command == "sample":
            return cmd_sample(cfg, args.n, args.k, args.branch)
        return cmd_evolve(cfg, args.coeffs, parse_times(args.times))
    except (KillingMomentumError, ValueError, OverflowError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BrokenPipeError:
        # downstream reader closed early (e.g. piped into head)
        sys.stderr.close()
        return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
