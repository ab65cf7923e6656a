"""Command-line front end: ``swesat simulate | converge | verify``.

Configuration is resolved in three layers: per-command defaults, then an
optional ``--config`` file (flat ``key = value`` lines, or a ``manifest.json``
from an earlier run), then explicit flags.  Every value goes through the same
field parser, so a bad value names its field whichever layer it came from.

Exit codes: 0 success, 1 a verify check failed, 2 usage or configuration
error, 3 the time integration diverged.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import __version__
from .analysis import NORMS, convergence_table
from .errors import ConfigurationError, DivergenceError
from .model import FlowConfig, RegimeKind, alternative_reflection_coefficients, reflection_coefficients, spectral_data
from .sat import default_penalties
from .sbp import build_grid
from .scenarios import SCENARIOS, make_scenario
from .solver import DISSIPATION_SCALE, RunParams, build_system, integrate
from .verify import run_all

log = logging.getLogger("swesat")

EXIT_OK, EXIT_CHECK_FAILED, EXIT_USAGE, EXIT_DIVERGED = 0, 1, 2, 3

REGIME_MULTIPLES = {"sub": 0.5, "critical": 1.0, "super": 2.0}
TAU_NAMES = ("tau01", "tau02", "tauN1", "tauN2")


class UsageError(Exception):
    """Invalid configuration value; the message starts with the field name."""


# ---------------------------------------------------------------- field parsing


def _float(text) -> float:
    value = float(text)
    if not math.isfinite(value):
        raise ValueError("must be finite")
    return value


def _positive(text) -> float:
    value = _float(text)
    if value <= 0:
        raise ValueError("must be > 0")
    return value


def _nonneg(text) -> float:
    value = _float(text)
    if value < 0:
        raise ValueError("must be >= 0")
    return value


def _courant(text) -> float:
    value = _float(text)
    if not 0 < value <= 1:
        raise ValueError("must lie in (0, 1]")
    return value


def _cells(text) -> int:
    value = int(text)
    if value < 2:
        raise ValueError("must be >= 2")
    return value


def _int(text) -> int:
    return int(text)


def _interval(text) -> int:
    value = int(text)
    if value < 1:
        raise ValueError("must be >= 1")
    return value


def _float_list(text) -> tuple[float, ...]:
    if isinstance(text, (list, tuple)):
        return tuple(_nonneg(v) for v in text)
    return tuple(_nonneg(v) for v in str(text).split(",") if v.strip())


def _cells_list(text) -> tuple[int, ...]:
    if isinstance(text, (list, tuple)):
        values = tuple(_cells(v) for v in text)
    else:
        values = tuple(_cells(v) for v in str(text).split(",") if v.strip())
    if not values:
        raise ValueError("needs at least one resolution")
    return values


def _choice(options) -> Callable[[Any], str]:
    def parse(text) -> str:
        text = str(text)
        if text not in options:
            raise ValueError(f"must be one of {', '.join(options)}")
        return text

    return parse


@dataclass(frozen=True)
class Field:
    parse: Callable[[Any], Any]
    help: str
    metavar: str | None = None


FIELDS: dict[str, Field] = {
    "g": Field(_positive, "gravitational acceleration"),
    "H": Field(_positive, "mean water depth"),
    "U": Field(_float, "mean velocity (overrides --u-multiple and --regime)"),
    "u_multiple": Field(_float, "U as a multiple of sqrt(gH); negative values flip the flow", "R"),
    "regime": Field(_choice(tuple(REGIME_MULTIPLES)), "shorthand for --u-multiple 0.5 | 1 | 2"),
    "n": Field(_cells, "number of cells N (N + 1 nodes)"),
    "alpha": Field(_nonneg, "dissipation strength"),
    "alpha_scaled": Field(_nonneg, "dissipation as a multiple of |U| + sqrt(gH)", "C"),
    "cr": Field(_courant, "Courant number"),
    "t_final": Field(_nonneg, "final time"),
    "scenario": Field(_choice(tuple(SCENARIOS)), "initial/boundary data set"),
    "snapshots": Field(_float_list, "comma-separated output times", "T1,T2,..."),
    "resolutions": Field(_cells_list, "comma-separated cell counts for converge", "N1,N2,..."),
    "norm": Field(_choice(NORMS), "error norm for converge"),
    "gamma0": Field(_float, "reflection coefficient at x = 0 (sub-critical only)"),
    "gamma1": Field(_float, "reflection coefficient at x = L (sub-critical only)"),
    "tau01": Field(_float, "penalty override"),
    "tau02": Field(_float, "penalty override"),
    "tauN1": Field(_float, "penalty override"),
    "tauN2": Field(_float, "penalty override"),
    "dissipation_scale": Field(_nonneg, "multiplier on alpha A in the semi-discretization"),
    "seed": Field(_int, "seed for the zero-random scenario"),
    "amplitude": Field(_float, "amplitude for the zero-random scenario (0 gives the zero scenario)"),
    "record_interval": Field(_interval, "record the energy every this many steps"),
}

COMMON_DEFAULTS = {
    "g": 9.8,
    "H": 1.0,
    "cr": 0.25,
    "t_final": 0.1,
    "dissipation_scale": DISSIPATION_SCALE,
    "seed": 0,
    "amplitude": 1.0,
    "record_interval": 1,
    "snapshots": (),
}

COMMAND_DEFAULTS = {
    "simulate": {"scenario": "smooth-pulse", "n": 256},
    "converge": {"scenario": "mms", "norm": "uniform", "resolutions": (64, 128, 256, 512, 1024, 2048)},
    "verify": {"n": 64},
}


def parse_field(name: str, raw):
    try:
        spec = FIELDS[name]
    except KeyError:
        raise UsageError(f"{name}: unknown configuration key") from None
    try:
        return spec.parse(raw)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"{name}: invalid value {raw!r} ({exc})") from None


def _normalise_key(key: str) -> str:
    key = key.strip().lstrip("-").replace("-", "_")
    if key in FIELDS:
        return key
    lowered = {k.lower(): k for k in FIELDS}
    return lowered.get(key.lower(), key)


def read_config_file(path) -> dict:
    """Flat ``key = value`` file, or the ``config`` block of a run manifest."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise UsageError(f"config: cannot read {path} ({exc.strerror})") from None
    raw: dict[str, Any] = {}
    if path.suffix == ".json" or text.lstrip().startswith("{"):
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise UsageError(f"config: {path} is not valid JSON ({exc})") from None
        raw = doc.get("config", doc)
        raw = {k: v for k, v in raw.items() if v is not None}
    else:
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"config: {path}:{lineno}: expected key = value")
            key, value = line.split("=", 1)
            raw[key.strip()] = value.strip()
    return {_normalise_key(k): parse_field(_normalise_key(k), v) for k, v in raw.items()}


# --------------------------------------------------------------- config resolution


def resolve(command: str, file_values: dict, flag_values: dict) -> dict:
    """Merge the configuration layers and derive ``U`` and ``alpha``."""
    cfg: dict[str, Any] = {**COMMON_DEFAULTS, **COMMAND_DEFAULTS.get(command, {})}
    cfg.update(file_values)
    cfg.update(flag_values)

    if "alpha" in flag_values and "alpha_scaled" in flag_values:
        raise UsageError("alpha: give either --alpha or --alpha-scaled, not both")
    if "alpha" in flag_values:
        cfg.pop("alpha_scaled", None)
    elif "alpha_scaled" in flag_values:
        cfg.pop("alpha", None)
    elif "alpha" in cfg and "alpha_scaled" in cfg:
        raise UsageError("alpha: config sets both alpha and alpha_scaled")

    if "U" in flag_values:
        cfg.pop("u_multiple", None)
    elif "u_multiple" in flag_values:
        cfg.pop("U", None)
    elif "regime" in flag_values:
        cfg.pop("U", None)
        cfg.pop("u_multiple", None)

    for name in ("gamma0", "gamma1", *TAU_NAMES):
        cfg.setdefault(name, None)
    return cfg


def _velocity(cfg: dict, regime: str | None = None) -> float:
    g, H = cfg["g"], cfg["H"]
    if cfg.get("U") is not None:
        return cfg["U"]
    if cfg.get("u_multiple") is not None:
        return cfg["u_multiple"] * math.sqrt(g * H)
    regime = regime or cfg.get("regime") or "sub"
    return REGIME_MULTIPLES[regime] * math.sqrt(g * H)


def flow_config(cfg: dict, regime: str | None = None) -> FlowConfig:
    flow = FlowConfig(g=cfg["g"], H=cfg["H"], U=_velocity(cfg, regime))
    wanted = regime or cfg.get("regime")
    if wanted is not None and (cfg.get("U") is not None or cfg.get("u_multiple") is not None):
        got = spectral_data(flow).regime.kind.value
        if got != wanted:
            raise UsageError(f"regime: --regime {wanted} contradicts U = {flow.U!r}, which is {got}-critical")
    return flow


def _alpha(cfg: dict, flow: FlowConfig) -> float:
    if cfg.get("alpha_scaled") is not None:
        return cfg["alpha_scaled"] * flow.max_speed
    return cfg.get("alpha", 0.0) or 0.0


def _penalty_overrides(cfg: dict) -> dict:
    return {k: cfg[k] for k in TAU_NAMES if cfg.get(k) is not None}


def _gamma(cfg: dict, flow: FlowConfig):
    """Reflection coefficients with any overrides, or ``None`` outside sub-critical flow."""
    given = cfg.get("gamma0") is not None or cfg.get("gamma1") is not None
    if spectral_data(flow).regime.kind is not RegimeKind.SUBCRITICAL:
        if given:
            raise UsageError("gamma0: reflection coefficients apply to sub-critical flow only")
        return None
    g0, g1 = reflection_coefficients(flow)
    if cfg.get("gamma0") is not None:
        g0 = cfg["gamma0"]
    if cfg.get("gamma1") is not None:
        g1 = cfg["gamma1"]
    return (g0, g1)


def _scenario_kwargs(cfg: dict) -> dict:
    if cfg["scenario"] == "zero-random":
        return {"seed": cfg["seed"], "amplitude": cfg["amplitude"]}
    return {}


def regime_report(flow: FlowConfig, cfg: dict, validate: bool = True) -> dict:
    sd = spectral_data(flow)
    gamma = _gamma(cfg, flow)
    pen = default_penalties(sd, gamma, validate=validate, **_penalty_overrides(cfg))
    report = {
        "regime": str(sd.regime),
        "lambda1": float(sd.lambda1),
        "lambda2": float(sd.lambda2),
        **pen.as_dict(),
    }
    if sd.regime.kind is RegimeKind.SUBCRITICAL:
        report["alternative_gamma"] = [float(v) for v in alternative_reflection_coefficients(flow)]
    return report


# ---------------------------------------------------------------------- output


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    if isinstance(value, str):
        return value
    return "%.17g" % value


def write_csv(path: Path, header, rows) -> Path:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    return path


def _json_ready(value):
    if isinstance(value, tuple):
        return [_json_ready(v) for v in value]
    if isinstance(value, dict):
        return {k: _json_ready(v) for k, v in value.items()}
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    return value


def write_manifest(out_dir: Path, command: str, cfg: dict, report, outputs, started: float) -> Path:
    manifest = {
        "command": command,
        "version": __version__,
        "config": _json_ready(dict(sorted(cfg.items()))),
        "report": _json_ready(report),
        "outputs": sorted(outputs),
        "wall_time_s": time.perf_counter() - started,
    }
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def _pinned(cfg: dict, flow: FlowConfig, alpha: float) -> dict:
    """Config echo with the derived velocity and dissipation written out."""
    echo = {k: v for k, v in cfg.items() if k not in ("u_multiple", "alpha_scaled")}
    echo.update(U=flow.U, alpha=alpha)
    return echo


def _x_scale(flow: FlowConfig) -> float:
    speed = flow.U + flow.celerity
    return speed if speed > 0 else flow.max_speed


# --------------------------------------------------------------------- commands


def cmd_simulate(cfg: dict, out_dir: Path, figures: bool = True) -> int:
    started = time.perf_counter()
    flow = flow_config(cfg)
    alpha = _alpha(cfg, flow)
    scenario = make_scenario(cfg["scenario"], flow, **_scenario_kwargs(cfg))
    grid = build_grid(cfg["n"], scenario.domain_length)
    snapshots = tuple(cfg["snapshots"]) or (cfg["t_final"],)
    params = RunParams(
        cr=cfg["cr"],
        t_final=cfg["t_final"],
        alpha=alpha,
        record_interval=cfg["record_interval"],
        snapshots=snapshots,
        dissipation_scale=cfg["dissipation_scale"],
    )
    report = regime_report(flow, cfg)
    system = build_system(scenario, grid, flow, alpha, _penalty_overrides(cfg), _gamma(cfg, flow),
                          cfg["dissipation_scale"])
    result = integrate(system, scenario.initial_state(grid), params)

    out_dir.mkdir(parents=True, exist_ok=True)
    x_scale = _x_scale(flow)
    x_scaled = grid.x / x_scale
    rows, frames = [], []
    for t in params.snapshots:
        state = result.snapshots[t]
        if scenario.exact is not None:
            h_ex, u_ex = scenario.exact(grid.x, t)
        else:
            h_ex = u_ex = [None] * grid.n_nodes
        for i in range(grid.n_nodes):
            rows.append((t, grid.x[i], x_scaled[i], state.h[i], state.u[i], h_ex[i], u_ex[i]))
        frames.append({
            "t": t,
            "x_scaled": x_scaled,
            "h": state.h,
            "u": state.u,
            "h_exact": None if scenario.exact is None else h_ex,
            "u_exact": None if scenario.exact is None else u_ex,
        })
    outputs = [
        write_csv(out_dir / "solution.csv", ("t", "x", "x_scaled", "h", "u", "h_exact", "u_exact"), rows).name,
        write_csv(out_dir / "energy.csv", ("t", "energy"), zip(result.energy_t, result.energy)).name,
    ]
    if figures:
        from .plotting import plot_energy, plot_snapshots

        title = f"{scenario.name}, {report['regime']}, N={grid.N}, alpha={alpha:.4g}"
        outputs.append(plot_snapshots(out_dir / "solution.png", frames, title).name)
        outputs.append(plot_energy(out_dir / "energy.png", result.energy_t, result.energy, title).name)

    report.update({"N": grid.N, "L": grid.length, "alpha": alpha, "dt": result.dt, "steps": result.steps})
    write_manifest(out_dir, "simulate", _pinned(cfg, flow, alpha), report, outputs, started)
    print(f"simulate: {scenario.name} {report['regime']} N={grid.N} steps={result.steps} -> {out_dir}")
    return EXIT_OK


def _converge_cases(cfg: dict) -> list[tuple[FlowConfig, float]]:
    explicit_flow = any(cfg.get(k) is not None for k in ("U", "u_multiple", "regime"))
    if explicit_flow:
        flows = [flow_config(cfg)]
    else:
        flows = [flow_config(cfg, regime) for regime in REGIME_MULTIPLES]
    cases = []
    for flow in flows:
        if cfg.get("alpha") is not None or cfg.get("alpha_scaled") is not None:
            cases.append((flow, _alpha(cfg, flow)))
        else:
            cases.extend((flow, a) for a in (0.0, 0.05))
    return cases


def cmd_converge(cfg: dict, out_dir: Path, figures: bool = True) -> int:
    started = time.perf_counter()
    rows, tables, reports = [], {}, []
    for flow, alpha in _converge_cases(cfg):
        scenario = make_scenario(cfg["scenario"], flow, **_scenario_kwargs(cfg))
        params = RunParams(cr=cfg["cr"], t_final=cfg["t_final"], alpha=alpha, record_energy=False,
                           dissipation_scale=cfg["dissipation_scale"])
        report = regime_report(flow, cfg)
        table = convergence_table(scenario, flow, params, cfg["resolutions"], norm=cfg["norm"],
                                  penalties=_penalty_overrides(cfg), gamma=_gamma(cfg, flow))
        regime = report["regime"]
        tables[f"{regime}, alpha={alpha:g}"] = table
        reports.append({**report, "alpha": alpha, "U": flow.U})
        for r in table:
            rows.append((r.N, r.h_error, r.h_rate, r.u_error, r.u_rate, alpha, regime))
            print(f"{regime:>10} alpha={alpha:<6g} N={r.N:<6d} h={r.h_error:.4e} "
                  f"({'-' if r.h_rate is None else f'{r.h_rate:.2f}'})  u={r.u_error:.4e} "
                  f"({'-' if r.u_rate is None else f'{r.u_rate:.2f}'})")

    out_dir.mkdir(parents=True, exist_ok=True)
    header = ("N", "h_error", "h_rate", "u_error", "u_rate", "alpha", "regime")
    outputs = [write_csv(out_dir / "convergence.csv", header, rows).name]
    if figures:
        from .plotting import plot_convergence

        title = f"{cfg['scenario']}, t={cfg['t_final']:g}, {cfg['norm']} norm"
        outputs.append(plot_convergence(out_dir / "convergence.png", tables, title).name)
    write_manifest(out_dir, "converge", cfg, reports, outputs, started)
    return EXIT_OK


def cmd_verify(cfg: dict, out_dir: Path | None = None) -> int:
    started = time.perf_counter()
    flow = flow_config(cfg)
    alpha = _alpha(cfg, flow)
    gamma = _gamma(cfg, flow)
    results = run_all(flow, alpha, gamma=gamma, overrides=_penalty_overrides(cfg) or None,
                      dissipation_scale=cfg["dissipation_scale"])
    width = max(len(r.name) for r in results)
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name:<{width}}  {r.detail}")
    failed = [r.name for r in results if not r.passed]
    print(f"verify: {len(results) - len(failed)}/{len(results)} checks passed"
          + (f"; violated: {', '.join(failed)}" if failed else ""))
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        doc = {
            "passed": not failed,
            "failed": failed,
            "checks": [_json_ready(r.as_dict()) for r in results],
        }
        (out_dir / "verify.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
        try:
            report = regime_report(flow, cfg, validate=False)
        except ConfigurationError as exc:
            report = {"error": str(exc)}
        write_manifest(out_dir, "verify", _pinned(cfg, flow, alpha), report, ["verify.json"], started)
    return EXIT_CHECK_FAILED if failed else EXIT_OK


COMMANDS = {"simulate": cmd_simulate, "converge": cmd_converge, "verify": cmd_verify}


# ---------------------------------------------------------------------- parser


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _field_type(name: str):
    def convert(text):
        try:
            return parse_field(name, text)
        except UsageError as exc:
            raise argparse.ArgumentTypeError(str(exc)) from None

    convert.__name__ = name
    return convert


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="swesat", description="SBP-SAT solver for the linearized 1D shallow water equations.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    helps = {
        "simulate": "run one scenario and write solution.csv, energy.csv and figures",
        "converge": "grid-refinement study written to convergence.csv",
        "verify": "run the invariant suites and report pass/fail",
    }
    for command, text in helps.items():
        p = sub.add_parser(command, help=text, description=text)
        p.add_argument("--config", type=Path, help="key = value file or a manifest.json to rerun")
        p.add_argument("--out-dir", type=Path, default=None,
                       help="output directory (default: swesat-<command>)")
        p.add_argument("--no-figures", action="store_true", help="skip PNG output")
        p.add_argument("-v", "--verbose", action="store_true")
        for name, spec in FIELDS.items():
            flag = "--" + ("n" if name == "n" else name.replace("_", "-"))
            p.add_argument(flag, dest=name, type=_field_type(name), default=argparse.SUPPRESS,
                           help=spec.help, metavar=spec.metavar)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = vars(parser.parse_args(argv))
    command = args.pop("command")
    config_path = args.pop("config")
    out_dir = args.pop("out_dir") or Path(f"swesat-{command}")
    figures = not args.pop("no_figures")
    logging.basicConfig(level=logging.DEBUG if args.pop("verbose") else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        file_values = read_config_file(config_path) if config_path else {}
        cfg = resolve(command, file_values, args)
        if command == "verify":
            return cmd_verify(cfg, out_dir)
        return COMMANDS[command](cfg, out_dir, figures)
    except (UsageError, ConfigurationError) as exc:
        print(f"swesat {command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DivergenceError as exc:
        print(f"swesat {command}: diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
