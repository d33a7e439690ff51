"""Config parsing, run orchestration and serialization of outputs.

The config is one JSON document with flat physical keys plus optional nested
``integrator`` / ``conditioning`` sections; unknown keys are rejected.  Every
run writes ``summary.json`` (full report, config echo, versions, seed) and
CSV files with 17-significant-digit numbers so external re-analysis is
bit-faithful.  Identical config and seed give byte-identical outputs except
for the timestamp field, regardless of the thread count.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

import numpy as np
import scipy

from . import __version__
from .ensemble import (
    ComOffset,
    ConditioningStarved,
    IntegratorConfig,
    NoConditioning,
    OppositeSlits,
    SamplerConfig,
)
from .scenarios import (
    SELECTIVE_CASE,
    SYMMETRIC_CASE,
    ConstraintViolated,
    ScenarioConfig,
    run_scenario,
)
from .sqm import ScreenConfig
from .wavefunction import PhysicalParams, sigma_t

__all__ = ["ConfigError", "RunConfig", "parse_config", "execute", "main"]

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3

REJECTION_BUDGET = 1e-3  # completed-trajectory shortfall allowed before exit 3

_TOP_KEYS = {
    "case", "sigma0", "Y", "kx", "ky", "hbar", "mass", "amplitude_re", "amplitude_im",
    "D", "target_st", "delta", "n_bins", "screen_halfwidth",
    "seed", "n_pairs", "integrator", "conditioning",
    "out_dir", "emit_trajectories", "trajectory_sample_stride",
}
_INTEG_KEYS = {"method", "dt_initial", "tol", "max_steps"}
_COND_KEYS = {"kind", "target", "window", "opposite_sides"}


class ConfigError(ValueError):
    """Invalid run configuration; the message names the offending field."""


@dataclass(frozen=True)
class RunConfig:
    scenario: ScenarioConfig
    output_dir: Path
    emit_trajectories: bool
    trajectory_sample_stride: int
    echo: dict[str, Any]  # normalized config, written back into summary.json


def _fail(path: str, reason: str) -> None:
    raise ConfigError(f"{path}: {reason}")


def _get_number(data: dict, key: str, default=None, required: bool = False):
    if key not in data:
        if required:
            _fail(key, "required key is missing")
        return default
    value = data[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        _fail(key, f"expected a number, got {value!r}")
    if not math.isfinite(value):
        _fail(key, "must be finite")
    return float(value)


def _get_int(data: dict, key: str, default=None, required: bool = False):
    if key not in data:
        if required:
            _fail(key, "required key is missing")
        return default
    value = data[key]
    if isinstance(value, bool) or not isinstance(value, int):
        _fail(key, f"expected an integer, got {value!r}")
    return value


def _get_bool(data: dict, key: str, default: bool) -> bool:
    if key not in data:
        return default
    value = data[key]
    if not isinstance(value, bool):
        _fail(key, f"expected true/false, got {value!r}")
    return value


def _reject_unknown(data: dict, allowed: set, prefix: str = "") -> None:
    for key in data:
        if key not in allowed:
            _fail(f"{prefix}{key}", "unknown key")


def _build_conditioning(case: str, data: dict | None, sigma0: float):
    if data is None:
        if case == SELECTIVE_CASE:
            return ComOffset(target=3.0 * sigma0, window=0.5 * sigma0, opposite_sides=True)
        return NoConditioning()
    if not isinstance(data, dict):
        _fail("conditioning", "expected an object")
    _reject_unknown(data, _COND_KEYS, "conditioning.")
    kind = data.get("kind")
    if kind == "none":
        return NoConditioning()
    if kind == "opposite_slits":
        return OppositeSlits()
    if kind == "com_offset":
        target = _get_number(data, "target", required=True)
        window = _get_number(data, "window", default=0.5 * sigma0)
        opposite = _get_bool(data, "opposite_sides", default=(case == SELECTIVE_CASE))
        try:
            return ComOffset(target=target, window=window, opposite_sides=opposite)
        except ValueError as exc:
            _fail("conditioning.window", str(exc))
    _fail("conditioning.kind", f"expected none|opposite_slits|com_offset, got {kind!r}")


def _config_from_dict(data: dict[str, Any]) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("config root must be a JSON object")
    _reject_unknown(data, _TOP_KEYS)

    case = data.get("case")
    if case not in (SYMMETRIC_CASE, SELECTIVE_CASE):
        _fail("case", f"expected {SYMMETRIC_CASE!r} or {SELECTIVE_CASE!r}, got {case!r}")

    sigma0 = _get_number(data, "sigma0", required=True)
    if sigma0 <= 0:
        _fail("sigma0", "must be > 0")
    slit_offset = _get_number(data, "Y", required=True)
    if slit_offset < 0:
        _fail("Y", "must be >= 0")
    kx = _get_number(data, "kx", required=True)
    if kx <= 0:
        _fail("kx", "must be > 0")
    ky = _get_number(data, "ky", default=0.0)
    hbar = _get_number(data, "hbar", default=1.0)
    mass = _get_number(data, "mass", default=1.0)
    if hbar <= 0:
        _fail("hbar", "must be > 0")
    if mass <= 0:
        _fail("mass", "must be > 0")
    amplitude = complex(_get_number(data, "amplitude_re", default=1.0),
                        _get_number(data, "amplitude_im", default=0.0))
    params = PhysicalParams(sigma0=sigma0, slit_offset=slit_offset, kx=kx, ky=ky,
                            hbar=hbar, mass=mass, amplitude=amplitude)

    spreading = params.spreading_rate
    ux = params.group_velocity_x
    distance = _get_number(data, "D", default=None)
    target_st = _get_number(data, "target_st", default=None)
    if distance is None:
        if target_st is None:
            _fail("D", "required (or provide target_st to derive it)")
        distance = ux * target_st / spreading
    if distance <= 0:
        _fail("D", "must be > 0")

    tof = distance / ux
    delta = _get_number(data, "delta", default=0.5 * sigma0)
    if delta <= 0:
        _fail("delta", "must be > 0")
    n_bins = _get_int(data, "n_bins", default=50)
    if n_bins < 1:
        _fail("n_bins", "must be >= 1")
    halfwidth = _get_number(data, "screen_halfwidth", default=None)
    if halfwidth is None:
        halfwidth = slit_offset + 8.0 * abs(complex(sigma_t(params, tof)))
    if halfwidth <= 0:
        _fail("screen_halfwidth", "must be > 0")
    screen = ScreenConfig(distance=distance, bin_delta=delta,
                          y_min=-halfwidth, y_max=halfwidth, n_bins=n_bins)

    seed = _get_int(data, "seed", required=True)
    if not (0 <= seed < 2**64):
        _fail("seed", "must fit in an unsigned 64-bit integer")
    n_pairs = _get_int(data, "n_pairs", default=100_000)
    if n_pairs < 1:
        _fail("n_pairs", "must be >= 1")

    integ_data = data.get("integrator", {})
    if not isinstance(integ_data, dict):
        _fail("integrator", "expected an object")
    _reject_unknown(integ_data, _INTEG_KEYS, "integrator.")
    method = integ_data.get("method", "rk45_adaptive")
    try:
        integ = IntegratorConfig(
            method=method,
            dt_initial=_get_number(integ_data, "dt_initial", default=1e-2),
            tol=_get_number(integ_data, "tol", default=1e-8),
            max_steps=_get_int(integ_data, "max_steps", default=20000),
        )
    except ValueError as exc:
        _fail("integrator", str(exc))

    conditioning = _build_conditioning(case, data.get("conditioning"), sigma0)
    sampler = SamplerConfig(n_pairs=n_pairs, seed=seed, conditioning=conditioning)

    scenario = ScenarioConfig(case=case, params=params, screen=screen,
                              sampler=sampler, integ=integ, target_st=target_st)
    try:
        scenario.validate()
    except ConstraintViolated as exc:
        raise ConfigError(str(exc)) from exc

    stride = _get_int(data, "trajectory_sample_stride", default=10)
    if stride < 1:
        _fail("trajectory_sample_stride", "must be >= 1")
    emit = _get_bool(data, "emit_trajectories", default=False)
    out_dir = data.get("out_dir", "pairslit_out")
    if not isinstance(out_dir, str):
        _fail("out_dir", "expected a string path")

    echo = {
        "case": case,
        "sigma0": sigma0,
        "Y": slit_offset,
        "kx": kx,
        "ky": ky,
        "hbar": hbar,
        "mass": mass,
        "amplitude_re": amplitude.real,
        "amplitude_im": amplitude.imag,
        "D": distance,
        "target_st": spreading * tof,
        "delta": delta,
        "n_bins": n_bins,
        "screen_halfwidth": halfwidth,
        "seed": seed,
        "n_pairs": n_pairs,
        "integrator": {
            "method": integ.method,
            "dt_initial": integ.dt_initial,
            "tol": integ.tol,
            "max_steps": integ.max_steps,
        },
        "conditioning": _conditioning_echo(conditioning),
        "out_dir": out_dir,
        "emit_trajectories": emit,
        "trajectory_sample_stride": stride,
    }
    return RunConfig(scenario=scenario, output_dir=Path(out_dir),
                     emit_trajectories=emit, trajectory_sample_stride=stride, echo=echo)


def _conditioning_echo(cond) -> dict[str, Any]:
    if isinstance(cond, NoConditioning):
        return {"kind": "none"}
    if isinstance(cond, OppositeSlits):
        return {"kind": "opposite_slits"}
    return {"kind": "com_offset", "target": cond.target, "window": cond.window,
            "opposite_sides": cond.opposite_sides}


def parse_config(text: str) -> RunConfig:
    """Parse and validate a JSON config document into a RunConfig."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    return _config_from_dict(data)


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _write_csv(path: Path, header: list[str], rows) -> None:
    with path.open("w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def execute(run: RunConfig) -> int:
    """Run the configured scenario and write all output files.

    Returns the process exit status: 0 on success, 3 when the rejected
    trajectory fraction breaches the budget.
    """
    run.output_dir.mkdir(parents=True, exist_ok=True)
    stride = run.trajectory_sample_stride if run.emit_trajectories else None
    report = run_scenario(run.scenario, record_stride=stride)
    rows = report.trajectory_rows

    edges = report.marginal_hist_y1.edges
    _write_csv(
        run.output_dir / "marginal_hist.csv",
        ["y_lo", "y_hi", "count_y1", "count_y2"],
        zip(edges[:-1], edges[1:], report.marginal_hist_y1.counts,
            report.marginal_hist_y2.counts),
    )
    _write_csv(
        run.output_dir / "com_hist.csv",
        ["y_lo", "y_hi", "count"],
        zip(edges[:-1], edges[1:], report.com_hist.counts),
    )
    _write_csv(
        run.output_dir / "sqm_marginal.csv",
        ["y_lo", "y_hi", "probability_mass"],
        zip(edges[:-1], edges[1:], report.sqm_marginal_masses),
    )
    if run.emit_trajectories and rows is not None:
        _write_csv(run.output_dir / "trajectories.csv",
                   ["pair", "t", "y1", "y2"], rows)

    rejected = report.n_rejected_node + report.n_rejected_condition
    breach = rejected > REJECTION_BUDGET * report.n_requested
    summary = {
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "versions": {
            "python": sys.version.split()[0],
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "pairslit": __version__,
        },
        "seed": run.echo["seed"],
        "config": run.echo,
        "report": report.to_dict(),
    }
    with (run.output_dir / "summary.json").open("w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return EXIT_RUNTIME if breach else EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="pairslit",
        description="Two-particle two-slit simulator: joint detection statistics "
                    "and pilot-wave trajectory ensembles.",
    )
    parser.add_argument("--config", required=True, help="path to a JSON config document")
    parser.add_argument("--out-dir", default=None, help="output directory (overrides config)")
    parser.add_argument("--seed", type=int, default=None, help="RNG seed (overrides config)")
    parser.add_argument("--pairs", type=int, default=None, help="ensemble size (overrides config)")
    parser.add_argument("--case", default=None,
                        choices=[SYMMETRIC_CASE, SELECTIVE_CASE],
                        help="scenario case (overrides config)")
    args = parser.parse_args(argv)

    try:
        data = json.loads(Path(args.config).read_text())
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except json.JSONDecodeError as exc:
        print(f"error: config is not valid JSON: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    if isinstance(data, dict):
        if args.out_dir is not None:
            data["out_dir"] = args.out_dir
        if args.seed is not None:
            data["seed"] = args.seed
        if args.pairs is not None:
            data["n_pairs"] = args.pairs
        if args.case is not None:
            data["case"] = args.case

    try:
        run = _config_from_dict(data)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        return execute(run)
    except (ConditioningStarved, ConstraintViolated) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
