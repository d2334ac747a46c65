"""Command-line experiment driver.

Configs are UTF-8 JSON objects with a ``schema_version``; unknown keys are
rejected.  Every run writes ``config.resolved.json`` (all defaults filled
in), NDJSON/CSV data files and ``summary.json`` into the output directory.
Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dispersion import InteractionKernel, kernel_from_dict, penrose_margin
from .equilibria import equilibrium_from_dict
from .errors import ConfigError, LandauKitError
from .gevrey import (
    GevreyParams,
    bootstrap_monitor,
    monitor_input_from_linear,
    monitor_input_from_trajectory,
    reference_bounds,
)
from .linear import (
    PhaseSpaceGrid,
    fit_exponential_rate,
    free_transport_density,
    linear_vp_density,
)
from .nonlinear import (
    InitialData,
    ModeSpec,
    SimConfig,
    Trajectory,
    echo_experiment,
    read_checkpoint,
    simulate,
    spectral_initial_data,
    write_checkpoint,
)

SCHEMA_VERSION = 1
EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3

# --- schema -------------------------------------------------------------------

_TOP_KEYS = ("schema_version", "experiment", "equilibrium", "interaction", "grid",
             "initial", "gevrey", "output", "filter", "options")

_EQ_KEYS = {
    "maxwellian": ("kind", "n0", "T", "v0", "d"),
    "double_maxwellian": ("kind", "n0", "T", "u", "d", "components"),
    "poisson": ("kind", "n0", "exponent", "d"),
    "custom": ("kind", "v", "values", "lambda0"),
}
_W_KEYS = ("kind", "sign", "gamma", "table")
_GRID_DEFAULTS = {"d": 1, "n_x": 16, "n_v": 512, "v_max": 8.0, "dt": 0.05, "t_final": 20.0}
_MODE_DEFAULTS = {"k": 1, "amplitude": 0.01, "eta0": 0.0, "phase": 0.0,
                  "envelope": "equilibrium", "T_env": 1.0}
_OUTPUT_DEFAULTS = {"dir": None, "cadence": 1, "snapshot_every": 0}

_OPTIONS = {
    "transport": {},
    "linear": {"fit_lower": 1e-10, "fit_upper": 1e-2},
    "simulate": {"field_off": False},
    "echo": {"eps_drv": 1e-3, "eps_seed": 1e-3, "k_seed": 1, "k_drv": 2, "eta0": 200.0, "T_env": 1.0},
    "penrose": {"k_range": [1, 2, 3], "delta": 0.0, "omega_max": 64.0, "n_omega": 4096},
    "diagnose": {"trajectory": None, "factor": 10.0},
}

_DESCRIPTIONS = {
    "transport": "free-transport density modes of the configured initial data",
    "linear": "linearized Vlasov density via the Volterra equation, with a damping-rate fit",
    "simulate": "nonlinear split-step Vlasov run with conserved-quantity tracking",
    "echo": "seed plus tilted driver; detect echo bursts on the seed mode",
    "penrose": "Penrose margin and dispersion roots over a set of modes",
    "diagnose": "bootstrap monitors on a stored simulate run against linear theory",
}

# experiments that need an equilibrium and a grid
_NEEDS_GRID = {"transport", "linear", "simulate", "echo"}


def list_experiments():
    """Registry as a list of (name, description), sorted by name."""
    return sorted(_DESCRIPTIONS.items())


def _is_num(x):
    return isinstance(x, (int, float)) and not isinstance(x, bool) and math.isfinite(x)


def _is_int(x):
    return isinstance(x, int) and not isinstance(x, bool)


def _unknown(section, data, allowed, problems):
    for key in sorted(set(data) - set(allowed)):
        problems.append(f"{section}.{key}: unknown key")


def _section(raw, name, problems):
    val = raw.get(name, {})
    if not isinstance(val, dict):
        problems.append(f"{name}: expected an object")
        return {}
    return val


def _resolve_positive(section, data, defaults, problems, ints=(), allow_zero=()):
    out = {}
    for key, default in defaults.items():
        val = data.get(key, default)
        if default is None and val is None:
            out[key] = None
            continue
        ok = _is_int(val) if key in ints else _is_num(val)
        if not ok:
            problems.append(f"{section}.{key}: expected {'an integer' if key in ints else 'a finite number'}")
        elif val < 0 or (val == 0 and key not in allow_zero):
            problems.append(f"{section}.{key}: must be positive")
        out[key] = val
    return out


def _resolve_equilibrium(raw, problems):
    if "equilibrium" not in raw:
        problems.append("equilibrium: required field missing")
        return None
    data = _section(raw, "equilibrium", problems)
    kind = data.get("kind")
    if kind not in _EQ_KEYS:
        problems.append(f"equilibrium.kind: expected one of {sorted(_EQ_KEYS)}")
        return None
    _unknown("equilibrium", data, _EQ_KEYS[kind], problems)
    bad = [key for key in ("n0", "T", "u") if key in data and not _is_num(data[key])]
    bad += [key for key in ("d", "exponent") if key in data and not _is_int(data[key])]
    if bad:
        problems.extend(f"equilibrium.{key}: expected a number" for key in bad)
        return None
    try:
        spec = equilibrium_from_dict(data)
    except (ValueError, TypeError, KeyError, LandauKitError) as exc:
        problems.append(f"equilibrium: {exc}")
        return None
    return spec


def _resolve_interaction(raw, problems):
    data = _section(raw, "interaction", problems)
    _unknown("interaction", data, _W_KEYS, problems)
    try:
        return kernel_from_dict(data) if data else InteractionKernel.coulomb()
    except (ValueError, TypeError, KeyError) as exc:
        problems.append(f"interaction: {exc}")
        return None


def _resolve_grid(raw, problems, required):
    if "grid" not in raw:
        if required:
            problems.append("grid: required field missing")
        return None
    before = len(problems)
    data = _section(raw, "grid", problems)
    _unknown("grid", data, _GRID_DEFAULTS, problems)
    vals = _resolve_positive("grid", data, _GRID_DEFAULTS, problems, ints=("d", "n_x", "n_v"))
    if len(problems) > before:
        return None
    try:
        return PhaseSpaceGrid(**vals)
    except ValueError as exc:
        problems.extend(f"grid: {p}" for p in str(exc).split("; "))
        return None


def _resolve_initial(raw, problems):
    data = _section(raw, "initial", problems)
    _unknown("initial", data, ("modes", "checkpoint"), problems)
    modes = data.get("modes", [])
    ckpt = data.get("checkpoint")
    if ckpt is not None and not isinstance(ckpt, str):
        problems.append("initial.checkpoint: expected a path string")
    if not isinstance(modes, list):
        problems.append("initial.modes: expected a list")
        return InitialData()
    out = []
    for i, m in enumerate(modes):
        sec = f"initial.modes[{i}]"
        if not isinstance(m, dict):
            problems.append(f"{sec}: expected an object")
            continue
        _unknown(sec, m, _MODE_DEFAULTS, problems)
        vals = {key: m.get(key, default) for key, default in _MODE_DEFAULTS.items()}
        if not _is_int(vals["k"]) or vals["k"] == 0:
            problems.append(f"{sec}.k: expected a non-zero integer")
        for key in ("amplitude", "eta0", "phase"):
            if not _is_num(vals[key]):
                problems.append(f"{sec}.{key}: expected a finite number")
        if not (_is_num(vals["T_env"]) and vals["T_env"] > 0):
            problems.append(f"{sec}.T_env: must be positive")
        if vals["envelope"] not in ("equilibrium", "gaussian"):
            problems.append(f"{sec}.envelope: expected 'equilibrium' or 'gaussian'")
        out.append(ModeSpec(**vals))
    return InitialData(tuple(out), ckpt)


def _resolve_gevrey(raw, problems):
    before = len(problems)
    data = _section(raw, "gevrey", problems)
    defaults = GevreyParams().to_dict()
    _unknown("gevrey", data, defaults, problems)
    vals = {}
    for key, default in defaults.items():
        val = data.get(key, default)
        if not (_is_int(val) if key in ("m", "d") else _is_num(val)):
            problems.append(f"gevrey.{key}: expected a number")
        vals[key] = val
    if len(problems) > before:
        return GevreyParams()
    p = GevreyParams(**vals)
    problems.extend(f"gevrey: {msg}" for msg in p.problems())
    return p


def _resolve_options(raw, experiment, problems):
    data = _section(raw, "options", problems)
    defaults = _OPTIONS[experiment]
    _unknown("options", data, defaults, problems)
    out = {key: data.get(key, default) for key, default in defaults.items()}
    for key, val in out.items():
        default = defaults[key]
        if isinstance(default, bool):
            if not isinstance(val, bool):
                problems.append(f"options.{key}: expected true or false")
        elif isinstance(default, list):
            if not (isinstance(val, list) and val and all(_is_int(v) and v > 0 for v in val)):
                problems.append(f"options.{key}: expected a non-empty list of positive integers")
        elif key == "delta":
            if val is not None and not (_is_num(val) and val >= 0):
                problems.append("options.delta: expected null or a non-negative number")
        elif key == "trajectory":
            if val is not None and not isinstance(val, str):
                problems.append("options.trajectory: expected a path string")
        elif _is_int(default):
            if not _is_int(val):
                problems.append(f"options.{key}: expected an integer")
        elif not _is_num(val):
            problems.append(f"options.{key}: expected a finite number")
    return out


@dataclass(frozen=True, eq=False)
class ExperimentConfig:
    experiment: str
    spec: object
    W: InteractionKernel
    grid: PhaseSpaceGrid | None
    initial: InitialData
    gevrey: GevreyParams
    output: dict
    use_filter: bool
    options: dict

    def to_dict(self):
        return {
            "schema_version": SCHEMA_VERSION,
            "experiment": self.experiment,
            "equilibrium": None if self.spec is None else self.spec.to_dict(),
            "interaction": self.W.to_dict(),
            "grid": None if self.grid is None else self.grid.to_dict(),
            "initial": {"modes": [m.to_dict() for m in self.initial.modes],
                        "checkpoint": self.initial.checkpoint},
            "gevrey": self.gevrey.to_dict(),
            "output": dict(self.output),
            "filter": self.use_filter,
            "options": dict(self.options),
        }


def parse_config(raw):
    """Validate a config mapping; raises ConfigError listing every problem."""
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    problems = []
    _unknown("config", raw, _TOP_KEYS, problems)
    if "schema_version" not in raw:
        problems.append("schema_version: required field missing")
    elif raw["schema_version"] != SCHEMA_VERSION:
        problems.append(f"schema_version: unsupported (expected {SCHEMA_VERSION})")
    experiment = raw.get("experiment")
    if experiment is None:
        problems.append("experiment: required field missing")
        raise ConfigError(problems)
    if experiment not in _DESCRIPTIONS:
        problems.append(f"experiment: unknown experiment {experiment!r}; see 'landau-kit list'")
        raise ConfigError(problems)
    spec = None if experiment == "diagnose" else _resolve_equilibrium(raw, problems)
    W = _resolve_interaction(raw, problems)
    grid = _resolve_grid(raw, problems, experiment in _NEEDS_GRID)
    initial = _resolve_initial(raw, problems)
    gevrey = _resolve_gevrey(raw, problems)
    out_raw = _section(raw, "output", problems)
    _unknown("output", out_raw, _OUTPUT_DEFAULTS, problems)
    output = _resolve_positive("output", {k: v for k, v in out_raw.items() if k != "dir"},
                               {"cadence": 1, "snapshot_every": 0}, problems,
                               ints=("cadence", "snapshot_every"), allow_zero=("snapshot_every",))
    out_dir = out_raw.get("dir")
    if out_dir is not None and not isinstance(out_dir, str):
        problems.append("output.dir: expected a path string")
    output = {"dir": out_dir, **output}
    use_filter = raw.get("filter", False)
    if not isinstance(use_filter, bool):
        problems.append("filter: expected true or false")
    options = _resolve_options(raw, experiment, problems)
    if experiment in ("linear", "transport") and not initial.modes and not initial.checkpoint:
        problems.append("initial.modes: at least one mode is required")
    if experiment == "diagnose" and options.get("trajectory") is None:
        problems.append("options.trajectory: required field missing")
    if grid is not None and grid.d != 1 and experiment in ("linear", "transport", "echo"):
        problems.append(f"grid.d: {experiment} runs in one dimension only")
    if problems:
        raise ConfigError(problems)
    return ExperimentConfig(experiment, spec, W, grid, initial, gevrey, output, use_filter, options)


def load_config(path):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}") from None
    return parse_config(raw)


# --- writers ------------------------------------------------------------------


def _clean(x):
    """JSON-safe scalars: numpy to Python, non-finite floats to None."""
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else None
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def _write_json(path, obj):
    path.write_text(json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _write_ndjson(path, records):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            fh.write(json.dumps(_clean(rec), sort_keys=True) + "\n")


def _write_csv(path, header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    path.write_text(buf.getvalue(), encoding="utf-8")


def _density_records(t, k, rho, E_norm=None):
    for i, tt in enumerate(t):
        for j, kk in enumerate(k):
            rec = {"t": float(tt), "k": int(kk), "re_rho": float(rho[i, j].real),
                   "im_rho": float(rho[i, j].imag)}
            if E_norm is not None:
                rec["E_norm"] = float(E_norm[i])
            yield rec


# --- experiments --------------------------------------------------------------


def _run_transport(cfg, out):
    g_in = spectral_initial_data(cfg.spec, cfg.grid, cfg.initial)
    stride = cfg.output["cadence"]
    t = cfg.grid.t[::stride]
    ks = g_in.k[g_in.k > 0]
    rho = np.stack([free_transport_density(g_in, int(k), t) for k in ks], axis=1)
    _write_ndjson(out / "density.ndjson", _density_records(t, ks, rho))
    peaks = {}
    for j, k in enumerate(ks):
        i = int(np.argmax(np.abs(rho[:, j])))
        peaks[int(k)] = {"t_peak": float(t[i]), "amplitude": float(abs(rho[i, j]))}
    return {"peaks": peaks}


def _run_linear(cfg, out):
    g_in = spectral_initial_data(cfg.spec, cfg.grid, cfg.initial)
    hist = linear_vp_density(g_in, cfg.spec, cfg.W, cfg.grid)
    stride = cfg.output["cadence"]
    keep = hist.k > 0
    _write_ndjson(out / "density.ndjson",
                  _density_records(hist.t[::stride], hist.k[keep], hist.rho[::stride][:, keep],
                                   hist.E_norm[::stride]))
    summary = {}
    try:
        fit = fit_exponential_rate(hist.t, hist.E_norm, cfg.options["fit_lower"], cfg.options["fit_upper"])
        summary["fit"] = {"rate": fit.rate, "intercept": fit.intercept, "r2": fit.r2,
                          "n_points": fit.n_points, "window": list(fit.window)}
    except (ValueError, LandauKitError) as exc:
        summary["fit"] = {"error": str(exc)}
    k_dom = int(min(abs(k) for k in hist.k[keep])) if np.any(keep) else 1
    rep = penrose_margin(cfg.spec, cfg.W, [k_dom])
    root = rep.roots[0]
    summary["dispersion_root"] = None if root is None else {"k": k_dom, "re": root.real, "im": root.imag}
    summary["E_norm_final"] = float(hist.E_norm[-1])
    return summary


def _sim_config(cfg):
    return SimConfig(cfg.grid, cfg.spec, cfg.W, cfg.initial, cfg.use_filter,
                     cfg.output["cadence"], cfg.output["snapshot_every"],
                     cfg.options.get("field_off", False))


def _run_simulate(cfg, out):
    traj = simulate(_sim_config(cfg))
    _write_ndjson(out / "density.ndjson", _density_records(traj.t, traj.k, traj.rho, traj.E_norm))
    names = ("mass", "L1", "L2", "energy", "entropy")
    _write_csv(out / "conserved.csv", ("t",) + names,
               zip(traj.t, *(traj.conserved[n] for n in names)))
    if traj.snapshots:
        snap_dir = out / "snapshots"
        snap_dir.mkdir(exist_ok=True)
        for i, (ts, F) in enumerate(traj.snapshots):
            write_checkpoint(snap_dir / f"snap_{i:05d}.ckpt", F, cfg.grid, ts)
    write_checkpoint(out / "final.ckpt", traj.final.F, cfg.grid, traj.final.t)
    drifts = {}
    for n in names:
        q0 = traj.conserved[n][0]
        drifts[n] = traj.drift(n) if q0 != 0 else float(np.max(np.abs(traj.conserved[n])))
    return {"drift": drifts, "t_final": float(traj.t[-1]), "n_records": int(traj.t.size),
            "E_norm_final": float(traj.E_norm[-1]), "n_snapshots": len(traj.snapshots)}


def _run_echo(cfg, out):
    o = cfg.options
    rep = echo_experiment(cfg.spec, cfg.W, cfg.grid, o["eps_drv"], o["eps_seed"], o["k_seed"],
                          o["k_drv"], o["eta0"], cfg.use_filter, o["T_env"], keep_trajectory=True)
    traj = rep.trajectory
    modes = sorted({rep.k_seed, rep.k_drv})
    cols = [int(np.nonzero(traj.k == k)[0][0]) for k in modes]
    stride = cfg.output["cadence"]
    _write_ndjson(out / "density.ndjson",
                  _density_records(traj.t[::stride], np.array(modes), traj.rho[::stride][:, cols],
                                   traj.E_norm[::stride]))
    rows = [(k, t, a) for k in modes for t, a in rep.bursts[k]]
    _write_csv(out / "bursts.csv", ("k", "t", "amplitude"), rows)
    primary = {}
    for k in modes:
        b = rep.primary_burst(k)
        primary[k] = None if b is None else {"t": b[0], "amplitude": b[1]}
    return {"primary_burst": primary, "predicted_time": rep.predicted,
            "amplification": rep.amplification, "noise_floor": rep.floor}


def _run_penrose(cfg, out):
    o = cfg.options
    rep = penrose_margin(cfg.spec, cfg.W, o["k_range"], o["delta"], o["omega_max"], o["n_omega"])
    _write_csv(out / "penrose.csv", ("k", "kappa_k", "root_re", "root_im"), rep.rows())
    return {"kappa": rep.kappa, "delta": rep.delta, "stable": rep.stable,
            "zero_count": list(rep.zero_count), "converged": rep.converged,
            "warnings": list(rep.warnings)}


def load_trajectory(path):
    """Rebuild (resolved config, Trajectory) from a simulate output directory."""
    path = Path(path)
    try:
        raw = json.loads((path / "config.resolved.json").read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"options.trajectory: cannot read run directory ({exc})") from None
    run_cfg = parse_config(raw)
    if run_cfg.experiment != "simulate":
        raise ConfigError("options.trajectory: not a simulate run")
    recs = [json.loads(line) for line in (path / "density.ndjson").read_text().splitlines() if line]
    times = sorted({r["t"] for r in recs})
    ks = sorted({r["k"] for r in recs})
    ti = {t: i for i, t in enumerate(times)}
    ki = {k: j for j, k in enumerate(ks)}
    rho = np.zeros((len(times), len(ks)), dtype=complex)
    E = np.zeros(len(times))
    for r in recs:
        rho[ti[r["t"]], ki[r["k"]]] = complex(r["re_rho"], r["im_rho"])
        E[ti[r["t"]]] = r["E_norm"]
    snaps = []
    for f in sorted((path / "snapshots").glob("snap_*.ckpt")) if (path / "snapshots").is_dir() else []:
        F, ts, _ = read_checkpoint(f)
        snaps.append((ts, F))
    traj = Trajectory(np.array(times), np.array(ks), rho, E, {}, snaps, None, run_cfg.grid)
    return run_cfg, traj


def _run_diagnose(cfg, out):
    run_cfg, traj = load_trajectory(cfg.options["trajectory"])
    if not traj.snapshots:
        raise ConfigError("options.trajectory: run has no profile snapshots "
                          "(set output.snapshot_every > 0)")
    p = cfg.gevrey
    g_in = spectral_initial_data(run_cfg.spec, run_cfg.grid, run_cfg.initial)
    hist = linear_vp_density(g_in, run_cfg.spec, run_cfg.W, run_cfg.grid)
    every = run_cfg.output["cadence"] * run_cfg.output["snapshot_every"]
    ref = bootstrap_monitor(monitor_input_from_linear(hist, g_in, run_cfg.spec, every), p)
    bounds = reference_bounds(ref)
    series = bootstrap_monitor(monitor_input_from_trajectory(traj, run_cfg.spec), p, bounds,
                               cfg.options["factor"])
    _write_csv(out / "monitor_density.csv", ("t", "density_norm"), zip(series.t, series.density_norm))
    _write_csv(out / "monitor_profile.csv", ("t", "profile_norm", "profile_sup"),
               zip(series.snap_t, series.profile_norm, series.profile_sup))
    sup_d, sup_p = series.sup()
    return {"density_sup": sup_d, "profile_sup": sup_p, "reference": list(bounds),
            "factor": cfg.options["factor"], "exceeded_at": series.exceeded_at,
            "flagged": series.exceeded_at is not None, "reliable": series.reliable,
            "notes": series.notes}


_RUNNERS = {
    "transport": _run_transport,
    "linear": _run_linear,
    "simulate": _run_simulate,
    "echo": _run_echo,
    "penrose": _run_penrose,
    "diagnose": _run_diagnose,
}


def run(cfg: ExperimentConfig, out_dir=None):
    """Execute a parsed config; returns (output directory, summary dict)."""
    target = out_dir or cfg.output["dir"] or f"out/{cfg.experiment}"
    out = Path(target)
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "config.resolved.json", cfg.to_dict())
    summary = {"experiment": cfg.experiment, **_RUNNERS[cfg.experiment](cfg, out)}
    _write_json(out / "summary.json", summary)
    return out, summary


# --- entry point --------------------------------------------------------------


def _parser():
    ap = argparse.ArgumentParser(prog="landau-kit", description="Vlasov stability and damping experiments")
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run the experiment named in a config file")
    r.add_argument("config")
    r.add_argument("--out", help="output directory (overrides output.dir)")
    ls = sub.add_parser("list", help="list available experiments")
    ls.add_argument("--json", action="store_true", help="machine-readable listing")
    pe = sub.add_parser("penrose", help="Penrose margin for the config's equilibrium")
    pe.add_argument("config")
    pe.add_argument("--out")
    dg = sub.add_parser("diagnose", help="bootstrap monitors on a simulate output directory")
    dg.add_argument("dir")
    dg.add_argument("--out")
    dg.add_argument("--factor", type=float, default=10.0)
    return ap


def _execute(cfg, out):
    try:
        out_dir, summary = run(cfg, out)
    except ConfigError as exc:
        for p in exc.problems:
            print(f"config error: {p}", file=sys.stderr)
        return EXIT_CONFIG
    except (LandauKitError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    print(json.dumps({"output": str(out_dir), "experiment": summary["experiment"]}, sort_keys=True))
    return EXIT_OK


def main(argv=None):
    args = _parser().parse_args(argv)
    if args.command == "list":
        items = list_experiments()
        if args.json:
            print(json.dumps([{"name": n, "description": d} for n, d in items], indent=2))
        else:
            for n, d in items:
                print(f"{n:10s} {d}")
        return EXIT_OK
    try:
        if args.command == "run":
            cfg = load_config(args.config)
        elif args.command == "penrose":
            raw = json.loads(Path(args.config).read_text(encoding="utf-8"))
            if isinstance(raw, dict):
                raw = {**raw, "experiment": "penrose"}
                raw.setdefault("options", {})
                if isinstance(raw["options"], dict):
                    raw["options"] = {k: v for k, v in raw["options"].items() if k in _OPTIONS["penrose"]}
            cfg = parse_config(raw)
        else:
            cfg = parse_config({"schema_version": SCHEMA_VERSION, "experiment": "diagnose",
                                "options": {"trajectory": args.dir, "factor": args.factor}})
    except (OSError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConfigError as exc:
        for p in exc.problems:
            print(f"config error: {p}", file=sys.stderr)
        return EXIT_CONFIG
    return _execute(cfg, args.out)


if __name__ == "__main__":
    sys.exit(main())
