"""Batch front end: sweeps, verification suites for the limit claims, persistence.

Subcommands map one-to-one to the verification pipelines; every pass/fail
entry carries the measured value and its threshold.  Identical
configurations reproduce byte-identical CSV/JSON (timings live in a
separate metadata file), serial and parallel sweeps produce identical
records, and cached solves replay exactly.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import hashlib
import json
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .asymptotics import decay_bound_check, find_root_f1, kernel_expansion_check, tail_fit, verify_f2_rootless
from .cache import cached_solve, default_cache_dir
from .linearized import build_linearized, kernel_diagnostics
from .renorm import gauge_fix
from .solvers import (
    ConvergenceError,
    fractional_ground_state,
    lambda_of_s,
    local_ground_state,
    petviashvili_mass_constrained,
)
from .spectral import Profile, make_grid
from .symbols import ModelParams

COMMANDS = (
    "solve",
    "sweep",
    "verify-th2",
    "verify-th3",
    "verify-th4",
    "linearize",
    "kernel",
    "gn-constant",
)

EXIT_OK = 0
EXIT_CRITERION_FAIL = 1
EXIT_CONFIG_ERROR = 2
EXIT_SOLVER_FAILURE = 3


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    s_list: tuple = (1.5,)
    n_list: tuple = (0.1,)
    beta_list: tuple = (0.0,)
    grid_l: float = 64.0
    grid_m: int = 4096
    tol: float = 1e-10
    cache_dir: str = ""
    output_dir: str = "fracnls-out"
    output_format: str = "csv"
    workers: int = 1
    inits: int = 5  # random initializations for the uniqueness probe

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        if not self.s_list or not self.n_list or not self.beta_list:
            raise ConfigError("s-list, N-list and beta-list must be nonempty")
        if self.output_format not in ("csv", "json"):
            raise ConfigError(f"unknown output format {self.output_format!r}")
        if any(not 1.0 < s < 2.0 for s in self.s_list) and self.command != "gn-constant":
            raise ConfigError("s values must lie in (1, 2) outside gn-constant validation")
        if not self.cache_dir:
            self.cache_dir = str(default_cache_dir())

    def config_hash(self) -> str:
        """Hash of the scientific content only.

        Worker count and directory locations cannot influence results, so
        they stay out of the hash: parallel and serial runs of one
        configuration share their output identity.
        """
        fields = ("command", "s_list", "n_list", "beta_list", "grid_l", "grid_m", "tol", "inits")
        payload = json.dumps(
            {k: (repr(v) if isinstance(v, float) else v) for k, v in asdict(self).items() if k in fields},
            sort_keys=True,
        )
        return hashlib.sha256(payload.encode()).hexdigest()[:16]


@dataclass
class RunRecord:
    config: dict
    points: list
    version: str = __version__
    timings: dict = field(default_factory=dict)  # emitted to the metadata file only

    def any_failure(self) -> bool:
        for pt in self.points:
            if pt.get("error"):
                return True
            for chk in pt.get("checks", {}).values():
                if not chk["pass"]:
                    return True
        return False

    def any_solver_error(self) -> bool:
        return any(pt.get("error") for pt in self.points)


def _check(value: float, threshold: float, mode: str = "le") -> dict:
    ok = value <= threshold if mode == "le" else value >= threshold
    return {"value": float(value), "threshold": float(threshold), "mode": mode, "pass": bool(ok)}


def _solve_point(s: float, n: float, grid_l: float, grid_m: int, tol: float,
                 cache_dir: str, out_dir: str = "", plot_rel: str = "") -> dict:
    grid = make_grid(grid_l, grid_m)
    params = ModelParams(s, 0.0, n)
    result, _ = cached_solve(
        cache_dir,
        s,
        n,
        grid,
        "petviashvili",
        tol,
        lambda: petviashvili_mass_constrained(grid, params, tol=tol),
    )
    plot_file = None
    if plot_rel:
        # records carry the output-dir-relative path so their bytes do not
        # depend on where the run happened to live
        full_dir = Path(out_dir) / plot_rel
        full_dir.mkdir(parents=True, exist_ok=True)
        name = f"profile-s{s:g}-N{n:g}.dat"
        plot_file = str(Path(plot_rel) / name)
        emit_profile_plotdata(result.profile, full_dir / name)
    _, lam = lambda_of_s(s)
    return {
        "s": s,
        "N": n,
        "beta": 0.0,
        "theta": result.multiplier,
        "lambda_s": lam,
        "theta_gap": abs(result.multiplier - lam),
        "residual": result.residual,
        "energy": result.energy,
        "iterations": result.iterations,
        "plot_data": plot_file,
        "checks": {
            "el_residual": _check(result.residual, 1e-8),
            "mass_constraint": _check(
                abs(result.profile.mass() - params.s0) / params.s0, 1e-10
            ),
        },
        "error": None,
    }


def _solve_point_star(args) -> dict:
    try:
        return _solve_point(*args)
    except ConvergenceError as exc:
        s, n = args[0], args[1]
        return {"s": s, "N": n, "beta": 0.0, "checks": {}, "error": str(exc)}


def _run_solve(config: RunConfig) -> list:
    plot_rel = f"profiles-{config.config_hash()}"
    jobs = [
        (s, n, config.grid_l, config.grid_m, config.tol, config.cache_dir,
         config.output_dir, plot_rel)
        for s in sorted(config.s_list)
        for n in sorted(config.n_list)
    ]
    if config.workers > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=config.workers) as pool:
            return list(pool.map(_solve_point_star, jobs))
    return [_solve_point_star(j) for j in jobs]


def _run_verify_th2(config: RunConfig) -> list:
    points = []
    for s in sorted(config.s_list):
        grid = make_grid(config.grid_l, config.grid_m)
        _, lam = lambda_of_s(s)
        base = local_ground_state(s, lam, grid)
        norm_r = np.sqrt(grid.h * np.sum(np.abs(base.values) ** 2))
        gaps, dists = [], []
        for n in sorted(config.n_list, reverse=True):
            pt = {"s": s, "N": n, "beta": 0.0, "checks": {}, "error": None}
            try:
                params = ModelParams(s, 0.0, n)
                result, _ = cached_solve(
                    config.cache_dir, s, n, grid, "petviashvili", config.tol,
                    lambda: petviashvili_mass_constrained(grid, params, tol=config.tol),
                )
                fixed, _, _ = gauge_fix(result.profile)
                dist = float(
                    np.sqrt(grid.h * np.sum(np.abs(fixed.values - base.values) ** 2)) / norm_r
                )
                gap = abs(result.multiplier - lam)
                gaps.append(gap)
                dists.append(dist)
                pt.update(
                    theta=result.multiplier, lambda_s=lam, theta_gap=gap,
                    profile_distance=dist, residual=result.residual,
                    energy=result.energy,
                )
                pt["checks"]["el_residual"] = _check(result.residual, 1e-8)
            except ConvergenceError as exc:
                pt["error"] = str(exc)
            points.append(pt)
        mono_gap = all(a > b for a, b in zip(gaps, gaps[1:]))
        mono_dist = all(a > b for a, b in zip(dists, dists[1:]))
        points.append(
            {
                "s": s,
                "N": None,
                "beta": 0.0,
                "summary": "th2-monotonicity",
                "checks": {
                    "theta_gap_decreasing": _check(0.0 if mono_gap else 1.0, 0.5),
                    "distance_decreasing": _check(0.0 if mono_dist else 1.0, 0.5),
                    "theta_gap_smallest": _check(gaps[-1] if gaps else np.inf, 2e-2 * lam),
                    "distance_smallest": _check(dists[-1] if dists else np.inf, 5e-2),
                },
                "error": None,
            }
        )
    return points


def _run_verify_th3(config: RunConfig) -> list:
    points = []
    rng = np.random.default_rng(20260810)
    for s in sorted(config.s_list):
        for n in sorted(config.n_list):
            pt = {"s": s, "N": n, "beta": 0.0, "checks": {}, "error": None}
            try:
                grid = make_grid(config.grid_l, config.grid_m)
                params = ModelParams(s, 0.0, n)
                fixed_profiles = []
                for _ in range(config.inits):
                    envelope = np.exp(-np.abs(grid.xi) * float(rng.uniform(1.0, 3.0)))
                    coeffs = envelope * (
                        rng.standard_normal(grid.points) + 1j * rng.standard_normal(grid.points)
                    )
                    vals = grid.from_fourier_coefficients(coeffs)
                    init = Profile(grid, vals)
                    res = petviashvili_mass_constrained(grid, params, init=init, tol=config.tol)
                    fixed_profiles.append(gauge_fix(res.profile)[0])
                dmax = 0.0
                for i in range(len(fixed_profiles)):
                    for j in range(i + 1, len(fixed_profiles)):
                        d = np.sqrt(
                            grid.h
                            * np.sum(
                                np.abs(fixed_profiles[i].values - fixed_profiles[j].values) ** 2
                            )
                        )
                        dmax = max(dmax, float(d))
                pt["pairwise_distance_max"] = dmax
                pt["checks"]["uniqueness"] = _check(dmax, 1e-6)
            except ConvergenceError as exc:
                pt["error"] = str(exc)
            points.append(pt)
    return points


def _run_verify_th4(config: RunConfig) -> list:
    points = []
    for s in sorted(config.s_list):
        grid = make_grid(config.grid_l, config.grid_m)
        _, lam = lambda_of_s(s)
        base = local_ground_state(s, lam, grid)
        c_values = []
        for n in sorted(config.n_list, reverse=True):
            pt = {"s": s, "N": n, "beta": 0.0, "checks": {}, "error": None}
            try:
                params = ModelParams(s, 0.0, n)
                result, _ = cached_solve(
                    config.cache_dir, s, n, grid, "petviashvili", config.tol,
                    lambda: petviashvili_mass_constrained(grid, params, tol=config.tol),
                )
                fit = tail_fit(result, base, params)
                bound = decay_bound_check(result, params)
                c_values.append(bound["C_min"])
                rate_dev = abs(fit.exp_rate - np.sqrt(lam)) / np.sqrt(lam)
                amp_dev = abs(fit.exp_amplitude - fit.exp_amplitude_oracle) / fit.exp_amplitude_oracle
                pt.update(
                    exp_rate=fit.exp_rate, exp_amplitude=fit.exp_amplitude,
                    exp_amplitude_oracle=fit.exp_amplitude_oracle,
                    alg_exponent=fit.alg_exponent, C_min=bound["C_min"],
                )
                pt["checks"]["tail_rate"] = _check(rate_dev, 2e-2)
                pt["checks"]["tail_amplitude"] = _check(amp_dev, 5e-2)
            except (ConvergenceError, RuntimeError) as exc:
                pt["error"] = str(exc)
            points.append(pt)
        if c_values:
            ratio = max(c_values) / min(c_values)
            points.append(
                {
                    "s": s,
                    "N": None,
                    "beta": 0.0,
                    "summary": "decay-bound-uniformity",
                    "C_values": c_values,
                    "checks": {"C_uniform_factor_2": _check(ratio, 2.0)},
                    "error": None,
                }
            )
    return points


def _run_linearize(config: RunConfig) -> list:
    points = []
    for s in sorted(config.s_list):
        for n in sorted(config.n_list):
            pt = {"s": s, "N": n, "beta": 0.0, "checks": {}, "error": None}
            try:
                grid = make_grid(config.grid_l, config.grid_m)
                params = ModelParams(s, 0.0, n)
                result, _ = cached_solve(
                    config.cache_dir, s, n, grid, "petviashvili", config.tol,
                    lambda: petviashvili_mass_constrained(grid, params, tol=config.tol),
                )
                op = build_linearized(result, params)
                rep = kernel_diagnostics(op)
                pt.update(
                    eigenvalues=[float(v) for v in rep.eigenvalues],
                    correlations=list(rep.correlations),
                    coercivity=rep.coercivity,
                )
                pt["checks"]["kernel_dimension"] = _check(float(len(rep.near_zero)), 2.0, mode="le")
                pt["checks"]["kernel_dimension_lower"] = _check(float(len(rep.near_zero)), 2.0, mode="ge")
                pt["checks"]["correlation"] = _check(min(rep.correlations), 0.999, mode="ge")
            except (ConvergenceError, RuntimeError) as exc:
                pt["error"] = str(exc)
            points.append(pt)
    return points


def _run_kernel(config: RunConfig) -> list:
    points = []
    for s in sorted(config.s_list):
        _, lam = lambda_of_s(s)
        for n in sorted(config.n_list):
            pt = {"s": s, "N": n, "beta": 0.0, "checks": {}, "error": None}
            try:
                params = ModelParams(s, 0.0, n)
                rep = kernel_expansion_check(params, lam)
                root = find_root_f1("+", params, lam)
                f2 = verify_f2_rootless("+", params, lam)
                pt.update(
                    exp_window_deviation=rep["exp_window_deviation"],
                    alg_exponent=rep["alg_exponent"],
                    envelope_ratio=rep["envelope_ratio"],
                    oscillation_frequency=rep["oscillation_frequency"],
                    root=repr(root.y),
                    winding=f2["winding"],
                )
                pt["checks"]["exp_window"] = _check(rep["exp_window_deviation"], 2e-2)
                pt["checks"]["alg_exponent"] = _check(
                    abs(rep["alg_exponent"] - (s + 1.0)), 5e-2
                )
                pt["checks"]["envelope"] = _check(abs(rep["envelope_ratio"] - 1.0), 5e-2)
                pt["checks"]["frequency"] = _check(
                    abs(rep["oscillation_frequency"] * params.kappa - 1.0), 2e-2
                )
                pt["checks"]["root_residual"] = _check(root.residual, 1e-12)
                pt["checks"]["winding"] = _check(float(abs(f2["winding"])), 0.0)
            except RuntimeError as exc:
                pt["error"] = str(exc)
            points.append(pt)
    return points


def _run_gn_constant(config: RunConfig) -> list:
    points = []
    for s in sorted(config.s_list):
        pt = {"s": s, "N": None, "beta": 0.0, "checks": {}, "error": None}
        try:
            validation = s == 2.0
            q, c_s, mass = fractional_ground_state(s, validation=validation)
            pt.update(C_s=c_s, mass_threshold=mass)
            if validation:
                quintic_mass = np.pi * np.sqrt(3.0) / 2.0
                pt["checks"]["quintic_mass"] = _check(abs(mass - quintic_mass), 1e-6)
            else:
                pt["checks"]["threshold_positive"] = _check(mass, 0.0, mode="ge")
                over = [n for n in config.n_list if n >= mass]
                pt["checks"]["masses_below_threshold"] = _check(float(len(over)), 0.0)
        except ConvergenceError as exc:
            pt["error"] = str(exc)
        points.append(pt)
    return points


def run(config: RunConfig) -> RunRecord:
    """Execute the mapped pipeline; per-point errors are recorded, not raised."""
    t0 = time.time()
    dispatch = {
        "solve": _run_solve,
        "sweep": _run_solve,
        "verify-th2": _run_verify_th2,
        "verify-th3": _run_verify_th3,
        "verify-th4": _run_verify_th4,
        "linearize": _run_linearize,
        "kernel": _run_kernel,
        "gn-constant": _run_gn_constant,
    }
    points = dispatch[config.command](config)
    record = RunRecord(config=asdict(config), points=points)
    record.timings = {"wall_seconds": time.time() - t0}
    return record


CSV_COLUMNS = (
    "s", "N", "beta", "theta", "lambda_s", "theta_gap", "residual", "energy",
    "profile_distance", "exp_rate", "exp_amplitude", "exp_amplitude_oracle",
    "alg_exponent", "C_min", "C_s", "mass_threshold", "pairwise_distance_max",
    "coercivity", "envelope_ratio", "oscillation_frequency", "winding",
)


def _csv_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return str(obj)


def emit_outputs(record: RunRecord, config: RunConfig) -> list:
    """Write the CSV/JSON record, per-profile plot data, and the metadata file.

    File names derive from the config hash, so identical configurations
    overwrite identically; timestamps live only in the metadata file.
    """
    outdir = Path(config.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    stem = f"{config.command}-{config.config_hash()}"
    written = []

    if config.output_format == "csv":  # json-only runs skip the CSV
        csv_path = outdir / f"{stem}.csv"
        lines = [",".join(CSV_COLUMNS + ("pass_flags", "error"))]
        for pt in record.points:
            cells = [_csv_cell(pt.get(col)) for col in CSV_COLUMNS]
            chks = ";".join(
                f"{name}:{'pass' if chk['pass'] else 'fail'}" for name, chk in pt.get("checks", {}).items()
            )
            cells.append(chks)
            cells.append(_csv_cell(pt.get("error")))
            lines.append(",".join(cells))
        csv_path.write_text("\n".join(lines) + "\n")
        written.append(csv_path)

    json_path = outdir / f"{stem}.json"
    json_path.write_text(
        json.dumps({"version": record.version, "config": record.config, "points": record.points},
                   sort_keys=True, indent=1, default=_json_default)
    )
    written.append(json_path)

    meta_path = outdir / f"{stem}.meta.json"
    meta_path.write_text(json.dumps({"timings": record.timings, "written_at": time.time()}))
    written.append(meta_path)
    return written


def emit_profile_plotdata(profile: Profile, path) -> None:
    """(x, Re, Im, abs) rows, one per grid point."""
    data = np.column_stack(
        [profile.grid.x, profile.values.real, profile.values.imag, np.abs(profile.values)]
    )
    header = "x re im abs"
    np.savetxt(path, data, header=header, comments="# ")


def load_config_file(path) -> dict:
    """Flat KEY = VALUE text config; '#' starts a comment."""
    out = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"malformed config line: {raw!r}")
        key, val = (part.strip() for part in line.split("=", 1))
        out[key.replace("-", "_")] = val
    return out


_LIST_KEYS = {"s_list", "n_list", "beta_list"}
_FLOAT_KEYS = {"grid_l", "tol"}
_INT_KEYS = {"grid_m", "workers", "inits"}


def _coerce(key: str, val):
    if key in _LIST_KEYS:
        if isinstance(val, str):
            return tuple(float(tok) for tok in val.split(",") if tok.strip())
        return tuple(float(v) for v in val)
    if key in _FLOAT_KEYS:
        return float(val)
    if key in _INT_KEYS:
        return int(val)
    return val


_CONFIG_KEYS = (
    "s_list", "n_list", "beta_list", "grid_l", "grid_m", "tol",
    "cache_dir", "output_dir", "output_format", "workers", "inits",
)


def build_config(args: argparse.Namespace) -> RunConfig:
    """Defaults < config file < command-line flags."""
    merged: dict = {}
    if args.config:
        for k, v in load_config_file(args.config).items():
            if k not in _CONFIG_KEYS:
                raise ConfigError(f"unknown config key {k!r} (expected one of {_CONFIG_KEYS})")
            merged[k] = _coerce(k, v)
    for key in _CONFIG_KEYS:
        val = getattr(args, key, None)
        if val is not None:
            merged[key] = _coerce(key, val)
    return RunConfig(command=args.command, **merged)


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fracnls",
        description="Traveling-wave laboratory for the 1-D mass-critical fractional NLS",
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help="flat KEY = VALUE config file")
    parser.add_argument("--s-list", dest="s_list", help="comma-separated s values")
    parser.add_argument("--n-list", dest="n_list", help="comma-separated masses")
    parser.add_argument("--beta-list", dest="beta_list", help="comma-separated drifts")
    parser.add_argument("--grid-l", dest="grid_l", type=float, help="torus length")
    parser.add_argument("--grid-m", dest="grid_m", type=int, help="grid points (power of two)")
    parser.add_argument("--tol", type=float, help="solver tolerance")
    parser.add_argument("--cache-dir", dest="cache_dir", help="profile cache directory")
    parser.add_argument("--output-dir", dest="output_dir", help="output directory")
    parser.add_argument("--format", dest="output_format", choices=("csv", "json"))
    parser.add_argument("--workers", type=int, help="sweep worker processes")
    parser.add_argument("--inits", type=int, help="random initializations (verify-th3)")
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        config = build_config(args)
    except (ConfigError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    record = run(config)
    files = emit_outputs(record, config)
    for f in files:
        print(f"wrote {f}")
    for pt in record.points:
        label = f"s={pt.get('s')} N={pt.get('N')}"
        if pt.get("error"):
            print(f"{label}: ERROR {pt['error']}")
            continue
        for name, chk in pt.get("checks", {}).items():
            status = "pass" if chk["pass"] else "FAIL"
            print(f"{label}: {name} = {chk['value']:.6g} (threshold {chk['threshold']:.6g}) {status}")
    if record.any_solver_error():
        return EXIT_SOLVER_FAILURE
    if record.any_failure():
        return EXIT_CRITERION_FAIL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
