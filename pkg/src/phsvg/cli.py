"""Experiment runner: named scenarios driven by a flat key = value config.

Outputs per run directory:
    trajectory_<label>.csv   one per simulated closed loop
    metrics.csv              one summary row per trajectory / study entry
    effective_config.txt     echo of the fully resolved configuration

The echo parses back to an identical configuration, and repeated runs of
the same configuration produce byte-identical numeric output.
"""

import argparse
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import signals as sig
from .control import IssParams
from .linalg import inf_norm
from .metrics import MetricsReport, build_report, observed_order
from .model import SystemParams
from .steppers import CONTROLLERS, STEPPERS, StepConfig, simulate
from .trajectory import Trajectory, format_float, write_csv

__all__ = ["ExperimentConfig", "ParseError", "MissingField", "parse_config",
           "config_text", "run", "main", "SCENARIOS"]

SCENARIOS = ("custom", "controller_compare_no_dist", "controller_compare_sinusoid",
             "algorithm_compare", "convergence_study")

CONVERGENCE_STEPS = (0.04, 0.02, 0.01, 0.005)

METRICS_HEADER = ("label,settling_time,steady_offset,control_effort,"
                  "energy_drift,iss_margin,observed_order,global_error")


class ParseError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        where = f"line {line}: " if line is not None else ""
        super().__init__(where + message)


class MissingField(ValueError):
    pass


@dataclass
class ExperimentConfig:
    scenario: str
    params: SystemParams
    controller: str
    stepper: str
    iss: IssParams
    h: float
    T: float
    initial: tuple[float, ...]
    disturbance: sig.SignalSpec
    stage_fixed_point: bool
    stage_tol: float
    max_stage_iters: int
    out: str
    seed: int

    def step_config(self) -> StepConfig:
        return StepConfig(h=self.h, stage_tol=self.stage_tol,
                          max_stage_iters=self.max_stage_iters,
                          stage_solver="fixed_point" if self.stage_fixed_point else "direct")


_BASE_DEFAULTS = {
    "scenario": "custom",
    "L": "1.0",
    "C": "1.0",
    "omega": "1.0",
    "controller": "iss",
    "stepper": "midpoint_dirac",
    "alpha": "2.0",
    "epsilon": "0.125",
    "ratio_cap": "5.0",
    "h": "0.01",
    "T": "20.0",
    "initial": "1.0,1.0,1.0,1.0,1.0",
    "disturbance": "zero",
    "disturbance_frequency": "2.0",
    "disturbance_amplitude": "1.0",
    "disturbance_phase": "0.0",
    "disturbance_value": None,  # required only for the constant kind
    "stage_fixed_point": "false",
    "stage_tol": "1e-13",
    "max_stage_iters": "100",
    "out": "out",
    "seed": "0",
}

# Per-scenario defaults for keys the user left unset.
_SCENARIO_DEFAULTS = {
    "controller_compare_no_dist": {"stepper": "exact_reference"},
    "controller_compare_sinusoid": {"stepper": "exact_reference",
                                    "disturbance": "sinusoid"},
    "convergence_study": {"T": "1.0"},
}


def _to_float(raw: str, key: str, line: int | None) -> float:
    try:
        v = float(raw)
    except ValueError:
        raise ParseError(f"{key} expects a number, got {raw!r}", line)
    if not np.isfinite(v):
        raise ParseError(f"{key} must be finite", line)
    return v


def _to_int(raw: str, key: str, line: int | None) -> int:
    try:
        return int(raw)
    except ValueError:
        raise ParseError(f"{key} expects an integer, got {raw!r}", line)


def _to_bool(raw: str, key: str, line: int | None) -> bool:
    low = raw.lower()
    if low in ("true", "false"):
        return low == "true"
    raise ParseError(f"{key} expects true or false, got {raw!r}", line)


def _to_vector(raw: str, key: str, line: int | None) -> tuple[float, ...]:
    try:
        return tuple(float(part) for part in raw.split(","))
    except ValueError:
        raise ParseError(f"{key} expects comma-separated numbers, got {raw!r}", line)


def parse_config(text: str, overrides: dict | None = None) -> ExperimentConfig:
    """Parse flat key = value text into a fully resolved configuration.

    Unknown keys are rejected with their line number; keys not present get
    documented defaults (a few of which depend on the scenario).  Overrides,
    when given, behave as if those keys had appeared in the text.
    """
    pairs: dict[str, tuple[str, int | None]] = {}
    for line_no, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ParseError(f"expected 'key = value', got {raw_line!r}", line_no)
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _BASE_DEFAULTS:
            raise ParseError(f"unknown key {key!r}", line_no)
        if not value:
            raise MissingField(f"line {line_no}: key {key!r} has no value")
        pairs[key] = (value, line_no)
    for key, value in (overrides or {}).items():
        if key not in _BASE_DEFAULTS:
            raise ParseError(f"unknown key {key!r}")
        pairs[key] = (str(value), None)

    scenario, sc_line = pairs.get("scenario", (_BASE_DEFAULTS["scenario"], None))
    if scenario not in SCENARIOS:
        raise ParseError(f"unknown scenario {scenario!r}", sc_line)

    def get(key: str) -> tuple[str | None, int | None]:
        if key in pairs:
            return pairs[key]
        scoped = _SCENARIO_DEFAULTS.get(scenario, {})
        return scoped.get(key, _BASE_DEFAULTS[key]), None

    def getf(key: str) -> float:
        raw, line = get(key)
        return _to_float(raw, key, line)

    controller, line = get("controller")
    if controller not in CONTROLLERS:
        raise ParseError(f"controller must be one of {CONTROLLERS}", line)
    stepper, line = get("stepper")
    if stepper not in STEPPERS:
        raise ParseError(f"stepper must be one of {STEPPERS}", line)

    try:
        params = SystemParams(inductance=getf("L"), capacitance=getf("C"),
                              angular_velocity=getf("omega"))
        iss = IssParams(alpha=getf("alpha"), epsilon=getf("epsilon"),
                        ratio_cap=getf("ratio_cap"))
    except ValueError as e:
        raise ParseError(str(e))

    h = getf("h")
    if h <= 0:
        raise ParseError("h must be > 0", pairs.get("h", (None, None))[1])
    T = getf("T")
    if T < h:
        raise ParseError("T must be at least h")

    raw, line = get("initial")
    initial = _to_vector(raw, "initial", line)
    if len(initial) not in (4, 5):
        raise ParseError("initial state must have 4 or 5 components", line)
    if not all(np.isfinite(v) for v in initial):
        raise ParseError("initial state must be finite", line)

    kind, line = get("disturbance")
    seed = _to_int(get("seed")[0], "seed", get("seed")[1])
    if kind == "zero":
        disturbance = sig.zero_signal()
    elif kind == "sinusoid":
        disturbance = sig.sinusoid(frequency=getf("disturbance_frequency"),
                                   amplitude=getf("disturbance_amplitude"),
                                   phase=getf("disturbance_phase"))
    elif kind == "constant":
        raw, vline = get("disturbance_value")
        if raw is None:
            raise MissingField("disturbance = constant requires disturbance_value")
        value = _to_vector(raw, "disturbance_value", vline)
        if len(value) != 2:
            raise ParseError("disturbance_value expects two components", vline)
        disturbance = sig.constant(*value)
    elif kind == "bounded_noise":
        disturbance = sig.bounded_noise(amplitude=getf("disturbance_amplitude"),
                                        seed=seed)
    else:
        raise ParseError(f"unknown disturbance kind {kind!r}", line)

    try:
        return ExperimentConfig(
            scenario=scenario,
            params=params,
            controller=controller,
            stepper=stepper,
            iss=iss,
            h=h,
            T=T,
            initial=initial,
            disturbance=disturbance,
            stage_fixed_point=_to_bool(get("stage_fixed_point")[0], "stage_fixed_point",
                                       get("stage_fixed_point")[1]),
            stage_tol=getf("stage_tol"),
            max_stage_iters=_to_int(get("max_stage_iters")[0], "max_stage_iters",
                                    get("max_stage_iters")[1]),
            out=get("out")[0],
            seed=seed,
        )
    except ValueError as e:
        if isinstance(e, (ParseError, MissingField)):
            raise
        raise ParseError(str(e))


def config_text(cfg: ExperimentConfig) -> str:
    """Canonical echo of a configuration; parses back to an equal config."""
    lines = [
        f"scenario = {cfg.scenario}",
        f"L = {cfg.params.inductance!r}",
        f"C = {cfg.params.capacitance!r}",
        f"omega = {cfg.params.angular_velocity!r}",
        f"controller = {cfg.controller}",
        f"stepper = {cfg.stepper}",
        f"alpha = {cfg.iss.alpha!r}",
        f"epsilon = {cfg.iss.epsilon!r}",
        f"ratio_cap = {cfg.iss.ratio_cap!r}",
        f"h = {cfg.h!r}",
        f"T = {cfg.T!r}",
        "initial = " + ",".join(repr(v) for v in cfg.initial),
        f"disturbance = {cfg.disturbance.kind}",
        f"disturbance_frequency = {cfg.disturbance.frequency!r}",
        f"disturbance_amplitude = {cfg.disturbance.amplitude!r}",
        f"disturbance_phase = {cfg.disturbance.phase!r}",
    ]
    if cfg.disturbance.kind == "constant":
        lines.append("disturbance_value = " + ",".join(repr(v) for v in cfg.disturbance.value))
    lines += [
        f"stage_fixed_point = {'true' if cfg.stage_fixed_point else 'false'}",
        f"stage_tol = {cfg.stage_tol!r}",
        f"max_stage_iters = {cfg.max_stage_iters}",
        f"out = {cfg.out}",
        f"seed = {cfg.seed}",
    ]
    return "\n".join(lines) + "\n"


def _metrics_row(label: str, report: MetricsReport | None,
                 global_error: float | None = None) -> str:
    def fmt(v):
        return "" if v is None else format_float(v)

    if report is None:
        vals = ["", "", "", "", "", ""]
    else:
        vals = [fmt(report.settling_time), fmt(report.offset_amplitude),
                fmt(report.control_effort), fmt(report.energy_drift_max),
                fmt(report.iss_margin_min), fmt(report.observed_order)]
    return ",".join([label] + vals + [fmt(global_error)])


def _simulate_labeled(cfg: ExperimentConfig, label: str, *, initial, controller,
                      stepper, disturbance, T, rows, out_dir) -> Trajectory:
    traj = simulate(initial, controller, stepper, disturbance, T,
                    cfg.step_config(), cfg.params, iss_params=cfg.iss)
    write_csv(traj, os.path.join(out_dir, f"trajectory_{label}.csv"))
    report = build_report(traj, iss_params=cfg.iss if traj.dim == 4 else None)
    rows.append(_metrics_row(label, report))
    return traj


def _run_custom(cfg: ExperimentConfig, rows: list, out_dir: str) -> None:
    _simulate_labeled(cfg, "run", initial=cfg.initial, controller=cfg.controller,
                      stepper=cfg.stepper, disturbance=cfg.disturbance, T=cfg.T,
                      rows=rows, out_dir=out_dir)


def _run_controller_compare(cfg: ExperimentConfig, rows: list, out_dir: str) -> None:
    initial = cfg.initial[:4]
    for label in ("iss", "pi"):
        _simulate_labeled(cfg, label, initial=initial, controller=label,
                          stepper=cfg.stepper, disturbance=cfg.disturbance,
                          T=cfg.T, rows=rows, out_dir=out_dir)


def _run_algorithm_compare(cfg: ExperimentConfig, rows: list, out_dir: str) -> None:
    for stepper, label in (("midpoint_dirac", "midpoint"), ("rk2_twostage", "rk2")):
        _simulate_labeled(cfg, label, initial=cfg.initial, controller="iss",
                          stepper=stepper, disturbance=cfg.disturbance, T=cfg.T,
                          rows=rows, out_dir=out_dir)


def _run_convergence_study(cfg: ExperimentConfig, rows: list, out_dir: str) -> None:
    # Per-h simulations are independent and could run in parallel workers;
    # they are cheap enough that a deterministic sequential loop is used.
    for stepper in ("midpoint_dirac", "rk2_twostage"):
        errors = []
        for h in CONVERGENCE_STEPS:
            step_cfg = StepConfig(h=h, stage_tol=cfg.stage_tol,
                                  max_stage_iters=cfg.max_stage_iters)
            kw = dict(controller="iss", disturbance=cfg.disturbance, T=cfg.T,
                      params=cfg.params, iss_params=cfg.iss)
            approx = simulate(cfg.initial, stepper=stepper, cfg=step_cfg, **kw)
            exact = simulate(cfg.initial, stepper="exact_reference", cfg=step_cfg, **kw)
            err = inf_norm(approx.states[-1] - exact.states[-1])
            errors.append((h, err))
            rows.append(_metrics_row(f"{stepper}:h={h:g}", None, global_error=err))
        rows.append(_metrics_row(stepper, MetricsReport(
            settling_time=None, offset_amplitude=0.0, control_effort=0.0,
            energy_drift_max=0.0, observed_order=observed_order(errors))))


def run(cfg: ExperimentConfig) -> int:
    """Execute the configured scenario and write its output files."""
    out_dir = cfg.out
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "effective_config.txt"), "w") as f:
        f.write(config_text(cfg))
    rows: list[str] = []
    if cfg.scenario == "custom":
        _run_custom(cfg, rows, out_dir)
    elif cfg.scenario in ("controller_compare_no_dist", "controller_compare_sinusoid"):
        _run_controller_compare(cfg, rows, out_dir)
    elif cfg.scenario == "algorithm_compare":
        _run_algorithm_compare(cfg, rows, out_dir)
    else:
        _run_convergence_study(cfg, rows, out_dir)
    with open(os.path.join(out_dir, "metrics.csv"), "w") as f:
        f.write(METRICS_HEADER + "\n")
        for row in rows:
            f.write(row + "\n")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="phsvg",
        description="Simulate the grid-forming SVG model and its controllers.")
    sub = parser.add_subparsers(dest="command", required=True)
    run_parser = sub.add_parser("run", help="run an experiment from a config file")
    run_parser.add_argument("config", nargs="?", default=None,
                            help="path to a key = value config file (defaults apply if omitted)")
    run_parser.add_argument("--scenario", choices=SCENARIOS)
    run_parser.add_argument("--h", type=float, dest="h")
    run_parser.add_argument("--T", type=float, dest="T")
    run_parser.add_argument("--out")
    run_parser.add_argument("--seed", type=int)
    args = parser.parse_args(argv)

    text = ""
    if args.config is not None:
        try:
            with open(args.config) as f:
                text = f.read()
        except OSError as e:
            print(f"error: cannot read config: {e}", file=sys.stderr)
            return 1
    overrides = {key: getattr(args, key)
                 for key in ("scenario", "h", "T", "out", "seed")
                 if getattr(args, key) is not None}
    try:
        cfg = parse_config(text, overrides)
        return run(cfg)
    except (ParseError, MissingField) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except (ValueError, ArithmeticError, RuntimeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
