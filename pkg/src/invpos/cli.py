"""Batch front-end: JSON configs in, CSV reports and verdict summaries out.

One command per process.  The config schema is strict (unknown keys are
rejected with their path) and every numeric printed in summary.txt also
appears as a column of report.csv.  Exit codes: 0 all verdicts pass, 1 any
verdict fails, 2 usage/config error, 3 numerical failure (bracketing,
witness search, non-convergence).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass
from typing import List, Optional

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

COMMANDS = (
    "energy",
    "transform",
    "positivity",
    "represent",
    "symmetrize",
    "hemiball",
    "lizhu-check",
    "counterexample",
    "sharp-constant",
)

_FAMILIES = ("extremizer", "gaussian", "indicator")


class ConfigError(ValueError):
    """Invalid run configuration; maps to exit code 2."""


@dataclass
class RunConfig:
    command: str
    dim: int
    lam: float
    grid_min: list
    grid_max: list
    points: list
    function: Optional[dict]
    region: Optional[dict]
    tolerances: dict
    seed: Optional[int]


@dataclass
class Verdict:
    name: str
    measured: float
    tolerance: float
    passed: bool


def _check_keys(obj: dict, allowed, path: str) -> None:
    for key in obj:
        if key not in allowed:
            raise ConfigError(f"unknown key {path}.{key}" if path else f"unknown key {key}")


def _per_axis(value, dim: int, name: str, cast=float) -> list:
    if isinstance(value, (int, float)):
        return [cast(value)] * dim
    if isinstance(value, list) and len(value) == dim:
        return [cast(v) for v in value]
    raise ConfigError(f"{name} must be a scalar or a list of {dim} entries")


def parse_config(text: str) -> RunConfig:
    """Validate a JSON run config; unknown keys are rejected with their path."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    _check_keys(doc, {"command", "kernel", "grid", "function", "region", "tolerances", "seed"}, "")

    command = doc.get("command")
    if command not in COMMANDS:
        raise ConfigError(f"command must be one of {', '.join(COMMANDS)}")

    kernel = doc.get("kernel")
    if not isinstance(kernel, dict):
        raise ConfigError("kernel must be an object with dim and lambda")
    _check_keys(kernel, {"dim", "lambda"}, "kernel")
    dim = kernel.get("dim")
    lam = kernel.get("lambda")
    if not isinstance(dim, int) or not 1 <= dim <= 3:
        raise ConfigError("kernel.dim must be an integer in [1, 3]")
    if not isinstance(lam, (int, float)) or not 0 < lam < dim:
        raise ConfigError("lambda must lie in (0, N)")

    grid = doc.get("grid", {})
    if not isinstance(grid, dict):
        raise ConfigError("grid must be an object")
    _check_keys(grid, {"min", "max", "points"}, "grid")
    grid_min = _per_axis(grid.get("min", -8.0), dim, "grid.min")
    grid_max = _per_axis(grid.get("max", 8.0), dim, "grid.max")
    points = _per_axis(grid.get("points", 128), dim, "grid.points", cast=int)
    for lo, hi in zip(grid_min, grid_max):
        if not lo < hi:
            raise ConfigError("grid.min must be strictly below grid.max on every axis")
    for n in points:
        if not 8 <= n <= 4096:
            raise ConfigError("grid.points must lie in [8, 4096]")

    function = doc.get("function")
    if function is not None:
        if not isinstance(function, dict):
            raise ConfigError("function must be an object")
        if "file" in function:
            _check_keys(function, {"file"}, "function")
            if not isinstance(function["file"], str):
                raise ConfigError("function.file must be a path string")
        else:
            fam = function.get("family")
            if fam not in _FAMILIES:
                raise ConfigError(f"function.family must be one of {', '.join(_FAMILIES)}")
            allowed = {
                "extremizer": {"family", "alpha", "beta", "center"},
                "gaussian": {"family", "center", "width", "amplitude"},
                "indicator": {"family", "lo", "hi"},
            }[fam]
            _check_keys(function, allowed, "function")

    region = doc.get("region")
    if region is not None:
        if not isinstance(region, dict) or len(region) != 1:
            raise ConfigError("region must hold exactly one of: ball, halfspace")
        kind = next(iter(region))
        if kind == "ball":
            _check_keys(region["ball"], {"center", "radius"}, "region.ball")
            if not region["ball"].get("radius", 0) > 0:
                raise ConfigError("region.ball.radius must be positive")
        elif kind == "halfspace":
            _check_keys(region["halfspace"], {"normal", "offset"}, "region.halfspace")
        else:
            raise ConfigError("region must hold exactly one of: ball, halfspace")

    tolerances = doc.get("tolerances", {})
    if not isinstance(tolerances, dict) or not all(isinstance(v, (int, float)) for v in tolerances.values()):
        raise ConfigError("tolerances must map names to numbers")

    seed = doc.get("seed")
    if seed is not None and not isinstance(seed, int):
        raise ConfigError("seed must be an integer")

    return RunConfig(
        command=command,
        dim=dim,
        lam=float(lam),
        grid_min=grid_min,
        grid_max=grid_max,
        points=points,
        function=function,
        region=region,
        tolerances=tolerances,
        seed=seed,
    )


def _build_grid(cfg: RunConfig):
    from .fields import Grid

    import numpy as np

    lo = np.asarray(cfg.grid_min)
    hi = np.asarray(cfg.grid_max)
    shape = tuple(cfg.points)
    spacing = float((hi[0] - lo[0]) / shape[0])
    for a in range(1, cfg.dim):
        if abs((hi[a] - lo[a]) / shape[a] - spacing) > 1e-12 * spacing:
            raise ConfigError("grid must have equal spacing on every axis")
    return Grid(lo=lo, spacing=spacing, shape=shape)


def _build_field(cfg: RunConfig, kp, grid):
    import numpy as np

    from .coverage import box_coverage
    from .energy import gaussian_field
    from .fields import Field, extremizer_spec, make_extremizer, read_field_csv

    fn = cfg.function or {"family": "extremizer"}
    if "file" in fn:
        return read_field_csv(fn["file"])
    fam = fn["family"]
    if fam == "extremizer":
        center = fn.get("center", [0.0] * cfg.dim)
        spec = extremizer_spec(kp, alpha=fn.get("alpha", 1.0), beta=fn.get("beta", 1.0), center=np.asarray(center, dtype=float))
        return make_extremizer(spec, kp, grid)
    if fam == "gaussian":
        return gaussian_field(grid, fn.get("center", [0.0] * cfg.dim), fn.get("width", 1.0), fn.get("amplitude", 1.0))
    lo = _per_axis(fn.get("lo", -1.0), cfg.dim, "function.lo")
    hi = _per_axis(fn.get("hi", 1.0), cfg.dim, "function.hi")
    return Field(grid, box_coverage(grid, lo, hi).reshape(grid.shape))


def _build_region(cfg: RunConfig):
    import numpy as np

    from .geometry import Ball, HalfSpace

    if cfg.region is None:
        raise ConfigError(f"command {cfg.command} requires a region")
    kind, params = next(iter(cfg.region.items()))
    if kind == "ball":
        return Ball(center=np.asarray(params.get("center", [0.0] * cfg.dim), dtype=float), radius=float(params["radius"]))
    normal = np.asarray(params.get("normal", [0.0] * (cfg.dim - 1) + [1.0]), dtype=float)
    normal = normal / np.linalg.norm(normal)
    return HalfSpace(normal=normal, offset=float(params.get("offset", 0.0)))


def _fmt(x) -> str:
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, (int, str)):
        return str(x)
    return format(float(x), ".17g")


class Report:
    """Accumulates named numerics and verdicts for the two output files."""

    def __init__(self):
        self.columns: List[tuple] = []
        self.verdicts: List[Verdict] = []
        self.lines: List[str] = []

    def add(self, name: str, value) -> None:
        self.columns.append((name, value))
        self.lines.append(f"{name} = {_fmt(value)}")

    def verdict(self, name: str, measured: float, tolerance: float, passed: bool) -> None:
        self.verdicts.append(Verdict(name, measured, tolerance, passed))
        self.columns.append((f"{name}_measured", measured))
        self.columns.append((f"{name}_tolerance", tolerance))
        self.columns.append((f"{name}_pass", passed))
        tag = "PASS" if passed else "FAIL"
        self.lines.append(f"{tag} {name}: measured = {_fmt(measured)}, tolerance = {_fmt(tolerance)}")

    def write(self, out_dir: str) -> None:
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, "report.csv"), "w") as fh:
            fh.write(",".join(name for name, _ in self.columns) + "\n")
            fh.write(",".join(_fmt(value) for _, value in self.columns) + "\n")
        with open(os.path.join(out_dir, "summary.txt"), "w") as fh:
            fh.write("\n".join(self.lines) + "\n")

    @property
    def all_pass(self) -> bool:
        return all(v.passed for v in self.verdicts)


def _cmd_sharp_constant(cfg: RunConfig, kp, rep: Report, out_dir: str) -> None:
    import math

    from .energy import sharp_constant

    value = sharp_constant(kp)
    rep.add("value", value)
    rep.verdict("value_finite", value, math.inf, math.isfinite(value) and value > 0)


def _cmd_energy(cfg: RunConfig, kp, rep: Report, out_dir: str) -> None:
    from .energy import energy_direct, sharp_constant
    from .fields import lp_norm

    grid = _build_grid(cfg)
    f = _build_field(cfg, kp, grid)
    res = energy_direct(f, f, kp)
    rep.add("value", res.value)
    rep.add("quadrature", res.quadrature)
    rep.add("est_error", res.est_error)
    quotient = res.value / lp_norm(f, kp.p) ** 2
    rep.add("rayleigh_quotient", quotient)
    if (cfg.function or {}).get("family", "extremizer") == "extremizer" and "file" not in (cfg.function or {}):
        tol = cfg.tolerances.get("rel_tol", 0.01)
        diff = abs(quotient - sharp_constant(kp)) / sharp_constant(kp)
        rep.verdict("quotient_matches_sharp_constant", diff, tol, diff <= tol)


def _cmd_transform(cfg: RunConfig, kp, rep: Report, out_dir: str) -> None:
    from .energy import energy_direct
    from .fields import apply_region_map

    grid = _build_grid(cfg)
    f = _build_field(cfg, kp, grid)
    region = _build_region(cfg)
    theta_f = apply_region_map(region, f, kp)
    e_f = energy_direct(f, f, kp)
    e_t = energy_direct(theta_f, theta_f, kp)
    rep.add("energy", e_f.value)
    rep.add("energy_transformed", e_t.value)
    rep.add("est_error", e_f.est_error)
    rep.add("est_error_transformed", e_t.est_error)
    sigma = cfg.tolerances.get("sigma", 1.0)
    combined = sigma * (e_f.est_error + e_t.est_error)
    diff = abs(e_t.value - e_f.value)
    rep.verdict("conformal_invariance", diff, combined, diff <= combined)


def _cmd_positivity(cfg: RunConfig, kp, rep: Report, out_dir: str) -> None:
    from .positivity import positivity_defect

    grid = _build_grid(cfg)
    f = _build_field(cfg, kp, grid)
    region = _build_region(cfg)
    result = positivity_defect(region, f, kp)
    rep.add("defect", result.defect)
    rep.add("defect_via_g", result.defect_via_g)
    rep.add("est_error", result.est_error)
    rep.add("strict_flag", result.strict_flag)
    rep.add("positivity_valid", kp.positivity_valid)
    if result.oracle_value is not None:
        rep.add("oracle_value", result.oracle_value)
    if kp.positivity_valid:
        bound = 3.0 * result.est_error
        rep.verdict("defect_nonnegative", result.defect, bound, result.defect >= -bound)


def _cmd_represent(cfg: RunConfig, kp, rep: Report, out_dir: str) -> None:
    from .positivity import halfspace_representation, reflected_energy

    grid = _build_grid(cfg)
    f = _build_field(cfg, kp, grid)
    value = halfspace_representation(f, kp)
    direct = reflected_energy(f, f, kp)
    rep.add("representation", value)
    rep.add("direct", direct.value)
    rep.add("direct_est_error", direct.est_error)
    tol = max(3.0 * direct.est_error, cfg.tolerances.get("rel_tol", 0.005) * abs(value))
    diff = abs(value - direct.value)
    rep.verdict("representation_matches_direct", diff, tol, diff <= tol)


def _cmd_symmetrize(cfg: RunConfig, kp, rep: Report, out_dir: str) -> None:
    from .fields import write_field_csv
    from .symmetrize import SymmetrizationConfig, run_symmetrization

    grid = _build_grid(cfg)
    f0 = _build_field(cfg, kp, grid)
    sym_cfg = SymmetrizationConfig(seed=cfg.seed)
    trace = run_symmetrization(f0, kp, sym_cfg)
    rep.add("n_steps", len(trace.steps))
    rep.add("converged", trace.converged)
    if trace.final_fit is not None:
        rep.add("fit_error", trace.final_fit.fit_error)
        rep.add("fit_alpha", trace.final_fit.alpha)
        rep.add("fit_beta", trace.final_fit.beta)
        tol = cfg.tolerances.get("fit_error", 0.05)
        rep.verdict("fit_error_small", trace.final_fit.fit_error, tol, trace.final_fit.fit_error <= tol)
    if trace.final_field is not None:
        write_field_csv(trace.final_field, os.path.join(out_dir, "final_field.csv"))
    if not trace.converged:
        raise _NumericalFailure("symmetrization did not converge within the sweep budget")


def _cmd_hemiball(cfg: RunConfig, kp, rep: Report, out_dir: str) -> None:
    from .symmetrize import hemiball_radius

    grid = _build_grid(cfg)
    f = _build_field(cfg, kp, grid)
    center = [0.0] * cfg.dim
    if cfg.region is not None and "ball" in cfg.region:
        center = cfg.region["ball"].get("center", center)
    radius = hemiball_radius(f, kp, center)
    rep.add("radius", radius)
    if "expected" in cfg.tolerances:
        tol = cfg.tolerances.get("abs_tol", 1e-4)
        diff = abs(radius - cfg.tolerances["expected"])
        rep.verdict("radius_matches_expected", diff, tol, diff <= tol)


def _cmd_lizhu_check(cfg: RunConfig, kp, rep: Report, out_dir: str) -> None:
    import numpy as np

    from .geometry import Ball
    from .lizhu import check_mass_identity, check_pointwise_invariance, fit_invariant_density

    grid = _build_grid(cfg)
    v = _build_field(cfg, kp, grid)
    fit = fit_invariant_density(v)
    rep.add("fit_error", fit.fit_error)
    rep.add("fit_alpha", fit.alpha)
    rep.add("fit_beta", fit.beta)
    rep.add("mass_divergence", fit.mass_divergence)
    scale = np.sqrt(fit.beta)
    offsets = np.linspace(-0.8 * scale, 0.8 * scale, 10)
    centers = [fit.center + off * np.eye(cfg.dim)[0] for off in offsets]
    cv = check_mass_identity(v, centers)
    rep.add("mass_identity_cv", cv)
    deviation = check_pointwise_invariance(v, Ball(center=fit.center, radius=np.sqrt(fit.beta)))
    rep.add("pointwise_deviation", deviation)
    cv_tol = cfg.tolerances.get("cv_tol", 1e-3)
    dev_tol = cfg.tolerances.get("dev_tol", 1e-3)
    rep.verdict("mass_identity", cv, cv_tol, cv <= cv_tol)
    rep.verdict("pointwise_invariance", deviation, dev_tol, deviation <= dev_tol)


def _cmd_counterexample(cfg: RunConfig, kp, rep: Report, out_dir: str) -> None:
    from .fields import write_field_csv
    from .positivity import find_negative_defect, newton_zero_overlap

    if kp.positivity_valid:
        result = newton_zero_overlap(kp)
        rep.add("overlap", result.overlap)
        rep.add("est_error", result.est_error)
        rep.add("self_energy", result.self_energy)
        write_field_csv(result.field, os.path.join(out_dir, "newton_field.csv"))
        rep.verdict("overlap_vanishes", abs(result.overlap), result.est_error, abs(result.overlap) <= result.est_error)
        rep.verdict(
            "self_energy_large",
            result.self_energy,
            100.0 * result.est_error,
            result.self_energy > 100.0 * result.est_error,
        )
    else:
        result = find_negative_defect(kp)
        rep.add("negative_defect", result.negative_defect)
        rep.add("positive_defect", result.positive_defect)
        rep.add("est_error", result.est_error)
        write_field_csv(result.negative_field, os.path.join(out_dir, "negative_witness.csv"))
        write_field_csv(result.positive_field, os.path.join(out_dir, "positive_witness.csv"))
        bound = 3.0 * result.est_error
        rep.verdict("negative_witness", result.negative_defect, -bound, result.negative_defect < -bound)
        rep.verdict("positive_witness", result.positive_defect, bound, result.positive_defect > bound)


class _NumericalFailure(RuntimeError):
    pass


_HANDLERS = {
    "sharp-constant": _cmd_sharp_constant,
    "energy": _cmd_energy,
    "transform": _cmd_transform,
    "positivity": _cmd_positivity,
    "represent": _cmd_represent,
    "symmetrize": _cmd_symmetrize,
    "hemiball": _cmd_hemiball,
    "lizhu-check": _cmd_lizhu_check,
    "counterexample": _cmd_counterexample,
}


def run(config: RunConfig, out_dir: str, verbose: bool = False) -> int:
    """Execute one command, writing report.csv and summary.txt to out_dir."""
    from .fields import KernelParams
    from .positivity import SearchFailureError
    from .symmetrize import BracketingError

    kp = KernelParams(dim=config.dim, lam=config.lam)
    rep = Report()
    rep.lines.append(f"command: {config.command} (N={config.dim}, lambda={_fmt(config.lam)})")
    os.makedirs(out_dir, exist_ok=True)
    try:
        _HANDLERS[config.command](config, kp, rep, out_dir)
    except (BracketingError, SearchFailureError, _NumericalFailure) as exc:
        rep.lines.append(f"NUMERICAL FAILURE: {exc}")
        rep.write(out_dir)
        if verbose:
            print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    rep.write(out_dir)
    if verbose:
        for line in rep.lines:
            print(line)
    return EXIT_PASS if rep.all_pass else EXIT_FAIL


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="invpos", description=__doc__, add_help=True)
    parser.add_argument("--config", required=True, help="path to a JSON run config")
    parser.add_argument("--out", default=".", help="output directory for report.csv and summary.txt")
    parser.add_argument("--threads", type=int, default=1, help="BLAS/FFT thread count")
    parser.add_argument("--verbose", action="store_true")
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else 0
    if args.threads < 1:
        print("--threads must be at least 1", file=sys.stderr)
        return EXIT_CONFIG
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(var, str(args.threads))
    try:
        with open(args.config) as fh:
            text = fh.read()
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        config = parse_config(text)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return run(config, args.out, verbose=args.verbose)


if __name__ == "__main__":
    sys.exit(main())
