"""Run configuration: a single JSON document.

Example::

    {
      "problem": {
        "dim": 2, "rho": 0.5, "horizon": 1.0, "band_K": 64,
        "phi": {"modes": [{"n": [1, 0], "value": [1.0, 0.0]}]},
        "forcing": {"kind": "constant", "modes": [{"n": [0, 1], "value": [0.5, 0.0]}]}
      },
      "eval_times": [0.01, 0.1, 1.0],
      "quadrature": {"scheme": "product_linear", "nodes_per_unit": 64},
      "grid_points": 17,
      "seed": 0,
      "verify": {"residual": {"enabled": true}}
    }

``phi`` may instead be a decay law
``{"decay": {"s": 2.0, "amplitude": 1.0, "zero_mode": 0.0, "real": true}}``,
meaning ``phi_n = amplitude |n|^{-s} exp(i theta_n)`` with phases drawn from
``seed``. Sampled forcing is
``{"kind": "sampled", "dt": 0.01, "modes": [[1, 0], ...], "values": [[[re, im], ...], ...]}``
with one row of values per time sample.

A ``manifest`` section is accepted and ignored, so a run manifest can be fed
back in as a configuration.
"""

from __future__ import annotations

import copy
import json
import math
import re
from dataclasses import dataclass, field

import numpy as np

from subdiffusion._validation import ParameterError, check_times
from subdiffusion.solver import DuhamelQuadrature, Forcing, ProblemSpec
from subdiffusion.spectral import SpectralField, band_modes

__all__ = ["ConfigError", "RunConfig", "CheckSettings", "load_config", "parse_config", "DEFAULT_VERIFY"]


class ConfigError(ParameterError):
    """Invalid configuration; the message names the offending line where possible."""


#: verification defaults, matching the documented tolerances
DEFAULT_VERIFY = {
    "residual": {"enabled": True, "steps": 4096, "tolerance": 5e-3, "order_min": 0.8, "order_max": 1.2, "burn_in": 0.0625},
    "initial_limit": {"enabled": True, "probe_j_min": 3, "probe_j_max": 20},
    "truncation": {"enabled": False, "band_K_values": [], "t": None},
    "kernel": {"enabled": False, "rho_values": [0.3, 0.5, 0.7], "epsilon_values": [0.25, 0.5, 0.75]},
    "snapshots": {"enabled": True, "rtol": 1e-12},
}

_TOP_KEYS = {"problem", "eval_times", "quadrature", "grid_points", "seed", "output_dir", "verify", "manifest"}
_PROBLEM_KEYS = {"dim", "rho", "horizon", "band_K", "phi", "forcing"}
_QUAD_KEYS = {"scheme", "nodes_per_unit", "grading_exponent"}


@dataclass(frozen=True)
class CheckSettings:
    name: str
    enabled: bool
    options: dict = field(default_factory=dict)


@dataclass(frozen=True, eq=False)
class RunConfig:
    problem: ProblemSpec
    eval_times: np.ndarray
    quadrature: DuhamelQuadrature
    grid_points: int | None
    seed: int
    output_dir: str | None
    checks: dict[str, CheckSettings]
    #: the normalized document (defaults filled in, manifest dropped)
    document: dict


class _Locator:
    """Maps key names back to line numbers of the source text."""

    def __init__(self, text: str, source: str):
        self.lines = text.splitlines()
        self.source = source

    def line_of(self, key: str) -> int | None:
        pat = re.compile(r'"' + re.escape(str(key)) + r'"\s*:')
        for i, line in enumerate(self.lines, start=1):
            if pat.search(line):
                return i
        return None

    def error(self, key: str, message: str) -> ConfigError:
        line = self.line_of(key)
        where = f"{self.source}:{line}" if line is not None else self.source
        return ConfigError(f"{where}: {message}")


def _check_keys(doc: dict, allowed: set[str], where: str, loc: _Locator):
    if not isinstance(doc, dict):
        raise loc.error(where, f"'{where}' must be an object")
    for key in doc:
        if key not in allowed:
            raise loc.error(key, f"unknown key '{key}' in {where}")


def _complex(pair, key: str, loc: _Locator) -> complex:
    if isinstance(pair, (int, float)):
        return complex(float(pair))
    if isinstance(pair, list) and len(pair) == 2 and all(isinstance(v, (int, float)) for v in pair):
        return complex(float(pair[0]), float(pair[1]))
    raise loc.error(key, f"'{key}' values must be numbers or [re, im] pairs, got {pair!r}")


def _mode_list(entries, dim: int, K: float, key: str, loc: _Locator) -> SpectralField:
    if not isinstance(entries, list):
        raise loc.error(key, f"'{key}' must be a list of {{'n': [...], 'value': [re, im]}}")
    modes, coeffs = [], []
    for e in entries:
        if not isinstance(e, dict) or set(e) != {"n", "value"}:
            raise loc.error(key, f"each entry of '{key}' needs exactly the keys 'n' and 'value'")
        n = e["n"]
        if not isinstance(n, list) or len(n) != dim or not all(isinstance(v, int) for v in n):
            raise loc.error(key, f"mode {n!r} must be a list of {dim} integers")
        modes.append(n)
        coeffs.append(_complex(e["value"], key, loc))
    try:
        return SpectralField(dim, K, np.array(modes, dtype=np.int64).reshape(-1, dim), coeffs)
    except ParameterError as exc:
        raise loc.error(key, str(exc)) from exc


def _decay_field(law: dict, dim: int, K: float, seed: int, loc: _Locator) -> SpectralField:
    _check_keys(law, {"s", "amplitude", "zero_mode", "real"}, "decay", loc)
    s = law.get("s")
    if not isinstance(s, (int, float)) or s < 0:
        raise loc.error("s", f"decay exponent 's' must be a number >= 0, got {s!r}")
    amp = float(law.get("amplitude", 1.0))
    zero = float(law.get("zero_mode", 0.0))
    real = bool(law.get("real", True))
    modes = band_modes(dim, K)
    rng = np.random.default_rng(seed)
    theta = rng.uniform(0.0, 2.0 * math.pi, size=len(modes))
    index = {tuple(n): i for i, n in enumerate(modes.tolist())}
    if real:
        # theta_{-n} = -theta_n keeps the synthesized field real
        for n, i in index.items():
            j = index[tuple(-v for v in n)]
            if j < i:
                theta[i] = -theta[j]
            elif j == i:
                theta[i] = 0.0
    lam = np.sum(modes * modes, axis=1).astype(float)
    with np.errstate(divide="ignore"):
        mag = np.where(lam > 0.0, amp * np.sqrt(lam) ** -float(s), zero)
    return SpectralField(dim, K, modes, mag * np.exp(1j * theta))


def _forcing(doc: dict, dim: int, K: float, loc: _Locator) -> Forcing | None:
    if doc is None:
        return None
    kind = doc.get("kind") if isinstance(doc, dict) else None
    if kind == "constant":
        _check_keys(doc, {"kind", "modes"}, "forcing", loc)
        return Forcing.constant(_mode_list(doc.get("modes", []), dim, K, "modes", loc))
    if kind == "sampled":
        _check_keys(doc, {"kind", "dt", "modes", "values"}, "forcing", loc)
        modes = doc.get("modes")
        values = doc.get("values")
        if not isinstance(modes, list) or not isinstance(values, list):
            raise loc.error("forcing", "sampled forcing needs 'modes' and 'values' lists")
        try:
            arr = np.array(
                [[_complex(v, "values", loc) for v in row] for row in values], dtype=complex
            )
            if arr.ndim != 2 or arr.shape[1] != len(modes):
                raise ParameterError("each row of 'values' needs one entry per mode")
            return Forcing(dim, K, np.array(modes, dtype=np.int64).reshape(-1, dim), arr, float(doc.get("dt", 0)))
        except (ParameterError, ValueError, TypeError) as exc:
            raise loc.error("values", f"invalid sampled forcing: {exc}") from exc
    raise loc.error("forcing", "forcing 'kind' must be 'constant' or 'sampled'")


def _number(doc: dict, key: str, loc: _Locator, *, integer: bool = False):
    v = doc.get(key)
    ok = isinstance(v, int) if integer else isinstance(v, (int, float))
    if isinstance(v, bool) or not ok:
        kind = "an integer" if integer else "a number"
        raise loc.error(key, f"'{key}' must be {kind}, got {v!r}")
    return v


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    """Validate a configuration document and build the run objects."""
    loc = _Locator(text, source)
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}:{exc.lineno}: invalid JSON ({exc.msg})") from exc
    _check_keys(doc, _TOP_KEYS, "config", loc)
    doc = copy.deepcopy(doc)
    doc.pop("manifest", None)

    if "problem" not in doc:
        raise ConfigError(f"{source}: missing section 'problem'")
    prob = doc["problem"]
    _check_keys(prob, _PROBLEM_KEYS, "problem", loc)
    for key in ("dim", "rho", "horizon", "band_K", "phi"):
        if key not in prob:
            raise loc.error("problem", f"'problem' lacks '{key}'")
    dim = _number(prob, "dim", loc, integer=True)
    K = float(_number(prob, "band_K", loc))
    seed = doc.setdefault("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise loc.error("seed", f"'seed' must be an integer, got {seed!r}")
    if dim < 1 or K <= 0:
        raise loc.error("dim", "need dim >= 1 and band_K > 0")

    phi_doc = prob["phi"]
    if isinstance(phi_doc, dict) and set(phi_doc) == {"modes"}:
        phi = _mode_list(phi_doc["modes"], dim, K, "modes", loc)
    elif isinstance(phi_doc, dict) and set(phi_doc) == {"decay"}:
        phi = _decay_field(phi_doc["decay"], dim, K, seed, loc)
    else:
        raise loc.error("phi", "'phi' must be {'modes': [...]} or {'decay': {...}}")
    forcing = _forcing(prob.get("forcing"), dim, K, loc)

    rho, horizon = _number(prob, "rho", loc), _number(prob, "horizon", loc)
    try:
        problem = ProblemSpec(dim, rho, horizon, phi, forcing)
    except ValueError as exc:
        raise loc.error("problem", str(exc)) from exc

    times = doc.get("eval_times")
    if not isinstance(times, list) or not times or not all(
        isinstance(v, (int, float)) and not isinstance(v, bool) for v in times
    ):
        raise loc.error("eval_times", "'eval_times' must be a non-empty list of numbers")
    try:
        check_times(times, "eval_times")
    except ValueError as exc:
        raise loc.error("eval_times", str(exc)) from exc
    if times[-1] > horizon:
        raise loc.error("eval_times", f"'eval_times' must not exceed the horizon {horizon}")

    qdoc = doc.setdefault("quadrature", {})
    _check_keys(qdoc, _QUAD_KEYS, "quadrature", loc)
    try:
        quad = DuhamelQuadrature(
            qdoc.get("scheme", "product_linear"),
            qdoc.get("nodes_per_unit", 64),
            qdoc.get("grading_exponent"),
        )
    except ValueError as exc:
        raise loc.error("scheme", f"invalid quadrature scheme: {exc}") from exc

    grid = doc.setdefault("grid_points", None)
    if grid is not None and (not isinstance(grid, int) or isinstance(grid, bool) or grid < 1):
        raise loc.error("grid_points", f"'grid_points' must be a positive integer, got {grid!r}")
    out_dir = doc.setdefault("output_dir", None)
    if out_dir is not None and not isinstance(out_dir, str):
        raise loc.error("output_dir", "'output_dir' must be a string")

    vdoc = doc.setdefault("verify", {})
    _check_keys(vdoc, set(DEFAULT_VERIFY), "verify", loc)
    checks = {}
    for name, defaults in DEFAULT_VERIFY.items():
        given = vdoc.get(name, {})
        _check_keys(given, set(defaults), name, loc)
        merged = {**defaults, **given}
        vdoc[name] = merged
        opts = {k: v for k, v in merged.items() if k != "enabled"}
        checks[name] = CheckSettings(name, bool(merged["enabled"]), opts)

    return RunConfig(
        problem=problem,
        eval_times=np.asarray(times, dtype=float),
        quadrature=quad,
        grid_points=grid,
        seed=seed,
        output_dir=out_dir,
        checks=checks,
        document=doc,
    )


def load_config(path) -> RunConfig:
    """Read and validate the configuration file at ``path``."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config ({exc.strerror})") from exc
    return parse_config(text, str(path))
