"""Command-line front end.

Subcommands: ``solve``, ``verify``, ``ml-table`` and ``fracop``. Exit codes:
0 success, 2 invalid input, 3 numeric domain error, 4 failed check.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from subdiffusion import __version__
from subdiffusion._validation import DomainError, ParameterError
from subdiffusion.config import RunConfig, load_config
from subdiffusion.fracops import TimeSignal, caputo_derivative, gl_derivative, rl_derivative, rl_integral
from subdiffusion.ml_special import MLParams, mittag_leffler
from subdiffusion.serialization import read_snapshots, write_snapshots
from subdiffusion.solver import solve
from subdiffusion.spectral import min_grid_points
from subdiffusion import verify as vf

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_DOMAIN = 3
EXIT_CHECK = 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_VALIDATION, f"{self.prog}: error: {message}\n")


def _say(args, text: str):
    if not args.quiet:
        print(text)


def _out_dir(args, cfg: RunConfig) -> Path:
    if args.out is not None:
        return Path(args.out)
    if cfg.output_dir is not None:
        return Path(cfg.output_dir)
    raise ParameterError("no output directory: pass --out or set 'output_dir'")


def _solve_config(cfg: RunConfig):
    grid = cfg.grid_points
    if grid is not None:
        grid = max(grid, min_grid_points(cfg.problem.band_K))
    return solve(cfg.problem, cfg.eval_times, cfg.quadrature, grid_M=grid)


def cmd_solve(args) -> int:
    cfg = load_config(args.config)
    out = _out_dir(args, cfg)
    snaps = _solve_config(cfg)
    files = write_snapshots(snaps, out)
    manifest = dict(cfg.document)
    manifest["manifest"] = {
        "version": __version__,
        # the only nondeterministic field of any output
        "created": datetime.now(timezone.utc).isoformat(),
        "files": files,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=1) + "\n")
    _say(args, f"wrote {len(snaps)} snapshots to {out}")
    return EXIT_OK


def _compare_snapshots(cfg: RunConfig, directory: Path, rtol: float) -> tuple[bool, str]:
    try:
        stored = read_snapshots(directory)
    except (ParameterError, ValueError, OSError) as exc:
        return False, f"snapshots: unreadable ({exc})"
    if not stored:
        return True, "snapshots: none stored, skipped"
    fresh = _solve_config(cfg)
    if len(stored) != len(fresh):
        return False, f"snapshots: {len(stored)} stored, {len(fresh)} expected"
    worst = 0.0
    for a, b in zip(stored, fresh):
        if a.t != b.t or not np.array_equal(a.field.modes, b.field.modes):
            return False, f"snapshots: time or mode set differs at t = {b.t!r}"
        scale = max(float(np.max(np.abs(b.field.coeffs), initial=0.0)), 1e-300)
        worst = max(worst, float(np.max(np.abs(a.field.coeffs - b.field.coeffs), initial=0.0)) / scale)
    ok = worst <= rtol
    return ok, f"snapshots: max relative deviation {worst!r} (tolerance {rtol!r})"


def cmd_verify(args) -> int:
    cfg = load_config(args.config)
    c = cfg.checks
    results: dict[str, dict] = {}
    lines = []

    if c["residual"].enabled:
        o = c["residual"].options
        coarse, fine = vf.residual_study(cfg.problem, int(o["steps"]), quad=cfg.quadrature, burn_in=o["burn_in"])
        order = vf.observed_order(coarse, fine)
        lo, hi = o["order_min"], o["order_max"]
        if cfg.problem.rho == 1.0:
            lo, hi = lo + 1.0, hi + 1.0
        ok = coarse.max_relative <= o["tolerance"] and lo <= order <= hi
        results["residual"] = {"passed": ok, "order": order, "coarse": coarse.to_dict(), "fine": fine.to_dict()}
        lines.append(f"residual: max relative {coarse.max_relative!r}, observed order {order!r} -> {'PASS' if ok else 'FAIL'}")

    if c["initial_limit"].enabled:
        o = c["initial_limit"].options
        probes = 2.0 ** -np.arange(o["probe_j_min"], o["probe_j_max"] + 1, dtype=float)
        rep = vf.initial_limit_check(cfg.problem, probes, cfg.quadrature)
        ok = rep.eventually_monotone
        results["initial_limit"] = {"passed": ok, "report": rep.to_dict()}
        lines.append(f"initial_limit: decay exponent {rep.decay_exponent!r} -> {'PASS' if ok else 'FAIL'}")

    if c["truncation"].enabled:
        o = c["truncation"].options
        t = o["t"] if o["t"] is not None else float(cfg.eval_times[-1])
        rep = vf.truncation_study(cfg.problem, o["band_K_values"], t, cfg.quadrature)
        ok = rep.bounded
        results["truncation"] = {"passed": ok, "report": rep.to_dict()}
        lines.append(f"truncation: diffs within tail bounds -> {'PASS' if ok else 'FAIL'}")

    if c["kernel"].enabled:
        o = c["kernel"].options
        rep = vf.kernel_estimate_suite(o["rho_values"], o["epsilon_values"])
        ok = rep.passed
        results["kernel"] = {"passed": ok, "report": rep.to_dict()}
        lines.append(f"kernel: uniformly bounded -> {'PASS' if ok else 'FAIL'}")

    if c["snapshots"].enabled:
        directory = Path(args.out) if args.out is not None else (Path(cfg.output_dir) if cfg.output_dir else None)
        if directory is None:
            ok, msg = True, "snapshots: no output directory, skipped"
        else:
            ok, msg = _compare_snapshots(cfg, directory, c["snapshots"].options["rtol"])
        results["snapshots"] = {"passed": ok, "message": msg}
        lines.append(f"{msg} -> {'PASS' if ok else 'FAIL'}")

    passed = all(r["passed"] for r in results.values())
    if args.out is not None:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        report = {"passed": passed, "checks": results}
        (out / "verify_report.json").write_text(json.dumps(report, indent=1) + "\n")
        (out / "verify_report.txt").write_text("\n".join(lines) + "\n")
    for line in lines:
        _say(args, line)
    _say(args, "verify: " + ("all checks passed" if passed else "checks failed"))
    return EXIT_OK if passed else EXIT_CHECK


def cmd_ml_table(args) -> int:
    if args.count < 2:
        raise ParameterError(f"--count must be >= 2, got {args.count}")
    if not args.z_min < args.z_max:
        raise ParameterError("--z-min must be smaller than --z-max")
    params = MLParams(args.rho, args.mu)
    z = np.linspace(args.z_min, args.z_max, args.count)
    values = mittag_leffler(z, params.rho, params.mu)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["z", "E"])
    for zi, ei in zip(z, values):
        w.writerow([repr(float(zi)), repr(float(ei))])
    sys.stdout.write(buf.getvalue())
    return EXIT_OK


def _read_signal(path) -> TimeSignal:
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or [h.strip() for h in rows[0]] != ["t", "value"]:
        raise ParameterError(f"{path}:1: expected header 't,value'")
    try:
        data = np.array([[float(a), float(b)] for a, b in rows[1:]])
    except ValueError as exc:
        raise ParameterError(f"{path}: non-numeric entry ({exc})") from exc
    if data.shape[0] < 3:
        raise ParameterError(f"{path}: need at least 3 samples")
    t = data[:, 0]
    dt = t[1] - t[0]
    if dt <= 0 or np.any(np.abs(np.diff(t) - dt) > 1e-9 * max(abs(t[-1]), dt)):
        raise ParameterError(f"{path}: samples must be uniformly spaced and increasing")
    return TimeSignal(float(t[0]), float(dt), data[:, 1])


_FRACOPS = {
    "integral": lambda h, a: rl_integral(h, -a),
    "rl": rl_derivative,
    "caputo": caputo_derivative,
    "gl": gl_derivative,
}


def cmd_fracop(args) -> int:
    h = _read_signal(args.input)
    out = _FRACOPS[args.op](h, args.order)
    values = out.evaluate()
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "value"])
    for t, v in zip(out.times, values):
        w.writerow([repr(float(t)), repr(float(np.real(v)))])
    if args.out is not None:
        Path(args.out).write_text(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--quiet", action="store_true", help="suppress progress messages")

    p = _Parser(prog="subdiffusion", description="Fractional subdiffusion on the torus.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("solve", parents=[common], help="solve a configured problem")
    s.add_argument("--config", required=True, help="JSON run configuration")
    s.add_argument("--out", help="output directory (overrides 'output_dir')")
    s.set_defaults(func=cmd_solve)

    v = sub.add_parser("verify", parents=[common], help="run the configured checks")
    v.add_argument("--config", required=True)
    v.add_argument("--out", help="directory with stored snapshots; reports are written here")
    v.set_defaults(func=cmd_verify)

    m = sub.add_parser("ml-table", parents=[common], help="tabulate E_{rho,mu}(z) as CSV")
    m.add_argument("--rho", type=float, required=True)
    m.add_argument("--mu", type=float, required=True)
    m.add_argument("--z-min", type=float, required=True)
    m.add_argument("--z-max", type=float, required=True)
    m.add_argument("--count", type=int, required=True)
    m.set_defaults(func=cmd_ml_table)

    f = sub.add_parser("fracop", parents=[common], help="apply a fractional operator to a CSV signal")
    f.add_argument("--input", required=True, help="CSV with header 't,value', uniform t from 0")
    f.add_argument("--op", choices=sorted(_FRACOPS), required=True)
    f.add_argument("--order", type=float, required=True, help="order in (0, 1] (integral: order > 0)")
    f.add_argument("--out", help="output CSV (default: standard output)")
    f.set_defaults(func=cmd_fracop)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (DomainError, OverflowError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except (ParameterError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
