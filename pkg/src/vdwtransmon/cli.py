"""Command-line front end: design -> simulation -> fit, one config file per run.

    vdwtransmon <command> --config PATH [--seed N] [--out DIR]
    vdwtransmon fit --table PATH --model {lorentzian,exp_decay,damped_sinusoid}

Exit codes: 0 success, 1 configuration error, 2 simulation error,
3 fit failure.  Tables are written even when the fit fails.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import analysis, design, dynamics, readout
from .analysis import FitResult, Trace
from .config import ExperimentConfig, load_config, qubit_model
from .errors import ConfigError, ConvergenceError, DomainError, FitError, NumericalError, StepSizeError
from .tables import OutputTable, TableFormatError, format_number, read_table, write_table

log = logging.getLogger("vdwtransmon")

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_SIMULATION = 2
EXIT_FIT = 3

EXPERIMENTS = ("rabi", "t1", "ramsey", "echo", "chevron", "flux-sweep")
SIMULATION_ERRORS = (NumericalError, StepSizeError, ConvergenceError, DomainError)


@dataclass
class RunOutput:
    tables: dict = field(default_factory=dict)
    fit: FitResult | None = None
    exit_code: int = EXIT_OK
    messages: list = field(default_factory=list)


def _param_meta(cfg: ExperimentConfig) -> dict:
    meta = {}
    for key, (val, unit) in cfg.resolved.items():
        text = format_number(val) if isinstance(val, float) else str(val)
        meta[f"param.{key}"] = f"{text} {unit}".rstrip()
    return meta


def _spectrum(cfg: ExperimentConfig, flux: float | None = None):
    return design.transmon_spectrum(
        cfg.transmon,
        cfg.flux if flux is None else flux,
        truncation=cfg.truncation,
        asymmetry_d=cfg.asymmetry_d,
    )


# ---------------------------------------------------------------------------
# design


def cmd_design(cfg: ExperimentConfig) -> OutputTable:
    """Device parameter table, one labelled row per quantity."""
    rows: list[tuple[str, float, str]] = []
    notes: list[str] = []

    def add(name, value, unit=""):
        rows.append((name, float(value), unit))

    if cfg.budget is not None:
        add("C_ppc", cfg.budget.c_ppc, "F")
        add("C_total", design.total_capacitance(cfg.budget), "F")
    else:
        add("C_total", design.capacitance_from_charging_energy(cfg.transmon.e_c), "F")
    e_c = cfg.transmon.e_c
    e_j = design.squid_ej(cfg.transmon.e_j_max, cfg.flux, cfg.asymmetry_d)
    add("E_C", e_c, "Hz")
    add("E_J_max", cfg.transmon.e_j_max, "Hz")
    add("flux", cfg.flux)
    add("E_J", e_j, "Hz")
    add("EJ_over_EC", e_j / e_c)
    nan = math.nan
    spectrum = None
    if e_j / e_c < 10:
        notes.append(f"E_J/E_C = {e_j / e_c:.4g} at flux {cfg.flux:g}: spectrum is out of the transmon regime")
    try:
        spectrum = _spectrum(cfg)
    except (DomainError, ConvergenceError) as exc:
        notes.append(f"spectrum unavailable: {exc}")
    add("f01", spectrum.f01 if spectrum else nan, "Hz")
    add("f02", spectrum.f02 if spectrum else nan, "Hz")
    add("f02_drive", spectrum.two_photon_drive if spectrum else nan, "Hz")
    add("anharmonicity", spectrum.anharmonicity if spectrum else nan, "Hz")

    if cfg.cavity is not None and cfg.g is not None:
        add("f_cavity_bare", cfg.cavity.f_bare, "Hz")
        add("kappa", cfg.cavity.kappa, "Hz")
        add("g", cfg.g, "Hz")
        if spectrum is not None:
            # detuning reported as cavity minus qubit, the magnitude convention of the measured device
            delta = cfg.cavity.f_bare - spectrum.f01
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always")
                cpl = readout.CouplingParams(cfg.g, delta)
            notes.extend(str(w.message) for w in caught)
            add("delta", delta, "Hz")
            add("chi_two_level", readout.dispersive_shift_two_level(cpl), "Hz")
            add("chi_transmon", readout.dispersive_shift_transmon(cpl, spectrum.anharmonicity), "Hz")
            add("f_cavity_dressed", readout.cavity_pull_vs_flux(cfg.cavity, cfg.g, spectrum.f01), "Hz")
            notes.append("chi_transmon differs from chi_two_level; the quoted coupling g follows the two-level relation")
        else:
            for name in ("delta", "chi_two_level", "chi_transmon", "f_cavity_dressed"):
                add(name, nan, "Hz")

    t1 = cfg.dynamics()["t1"]
    if spectrum is not None and math.isfinite(t1):
        add("tan_delta_bound", analysis.loss_tangent_bound(spectrum.f01, t1))
        if cfg.budget is not None and cfg.budget.participation_internal < 1:
            p = cfg.budget.participation_internal
            add("tan_delta_bound_ppc", 1.0 / (p * 2 * math.pi * spectrum.f01 * t1))

    meta = {"command": "design"}
    for i, note in enumerate(notes):
        meta[f"warning.{i}"] = note
    meta.update(_param_meta(cfg))
    return OutputTable(
        ["value"],
        [""],
        np.array([[r[1]] for r in rows]),
        labels=[r[0] for r in rows],
        row_units=[r[2] for r in rows],
        meta=meta,
    )


# ---------------------------------------------------------------------------
# experiments


def _fit_table(results: list[FitResult], extra_cols: dict | None = None, meta: dict | None = None) -> OutputTable:
    """One row per fit: values, sigmas, residual rms and iteration count."""
    first = results[0]
    names = list(first.params)
    cols, units = [], []
    for n in names:
        cols += [n, f"{n}_sigma"]
        units += [first.units.get(n, "")] * 2
    cols += ["residual_rms", "iterations"]
    units += ["", ""]
    extra_cols = extra_cols or {}
    for name, (unit, _) in extra_cols.items():
        cols.append(name)
        units.append(unit)
    rows = []
    for i, r in enumerate(results):
        row = []
        for n in names:
            row += [r.params[n], r.sigmas[n]]
        row += [r.residual_rms, r.iterations]
        row += [vals[i] for _, vals in extra_cols.values()]
        rows.append(row)
    return OutputTable(cols, units, np.array(rows, dtype=float), meta=dict(meta or {}))


def _noisy(p: np.ndarray, sigma: float, rng: np.random.Generator) -> np.ndarray:
    if sigma == 0:
        return p
    return p + rng.normal(0.0, sigma, p.shape)


def _grid_section(cfg: ExperimentConfig, name: str) -> dict:
    sec = cfg.experiment(name)
    if sec is None:
        raise ConfigError([f"missing section experiments.{name} needed by the {name} command"])
    return sec


def _pulse_duration(cfg: ExperimentConfig) -> float:
    dyn = cfg.dynamics()
    return 0.0 if dyn["ideal_pulses"] else dyn["pi_duration"]


def _oscillation_check(trace: Trace, decay: FitResult) -> tuple[float, bool]:
    """Largest spectral amplitude left in the residual of a pure-decay fit.

    Flagged as an oscillation when it exceeds 1 % of the decay contrast and
    sits clearly above the white-noise level.
    """
    resid = trace.y - (decay["offset"] + decay["amplitude"] * np.exp(-trace.x / decay["T"]))
    n = trace.x.size
    amp = float(2 * np.max(np.abs(np.fft.rfft(resid - resid.mean()))[1:]) / n)
    threshold = max(0.01 * abs(decay["amplitude"]), 5 * decay.residual_rms / math.sqrt(n))
    return amp, amp > threshold


def cmd_experiment(cfg: ExperimentConfig, which: str, seed: int | None = None) -> RunOutput:
    """Simulate one experiment, add measurement noise and fit it.

    The returned :class:`RunOutput` carries every table to be written, in a
    fixed order, and the exit code.  Simulation failures give no tables;
    fit failures keep the data table.
    """
    if which not in EXPERIMENTS:
        raise ValueError(f"unknown experiment {which!r}")
    run = cfg.run()
    seed = run["seed"] if seed is None else seed
    meta = {"command": which, "seed": str(seed)}
    meta.update(_param_meta(cfg))
    out = RunOutput()
    if which == "flux-sweep":
        return _flux_sweep(cfg, meta, out)
    try:
        spectrum = _spectrum(cfg)
    except (DomainError, ConvergenceError) as exc:
        out.exit_code = EXIT_SIMULATION
        out.messages.append(f"transmon_spectrum: {exc}")
        return out
    model = qubit_model(cfg, spectrum.f01, spectrum.anharmonicity)
    meta["model.f01"] = f"{format_number(model.f01)} Hz"
    meta["model.anharmonicity"] = f"{format_number(model.anharmonicity)} Hz"
    meta["model.t_phi"] = f"{format_number(model.t_phi)} s"
    dt = cfg.dynamics().get("dt")
    sigma = run["noise_sigma"]
    seeds = np.random.SeedSequence(seed).spawn(max(1, run["repeat"]))
    ratio = run["degeneracy_ratio"]
    runner = {
        "rabi": _rabi,
        "t1": _t1,
        "ramsey": _ramsey,
        "echo": _echo,
        "chevron": _chevron,
    }[which]
    try:
        runner(cfg, model, dt, sigma, seeds, ratio, meta, out)
    except SIMULATION_ERRORS as exc:
        if not out.tables:
            out.exit_code = EXIT_SIMULATION
            out.messages.append(f"{which} simulation: {exc}")
            return out
        out.exit_code = EXIT_FIT
        out.messages.append(f"{which} fit: {exc}")
    except FitError as exc:
        out.exit_code = EXIT_FIT
        out.messages.append(f"{which} fit: {exc}")
    return out


def _rabi(cfg, model, dt, sigma, seeds, ratio, meta, out):
    sec = _grid_section(cfg, "rabi")
    omega = 2 * math.pi * cfg.dynamics()["rabi_frequency"]
    detuning = sec["detuning"]
    res = dynamics.rabi_experiment(model, model.f01 - detuning, omega, sec["t_max"], sec["n_points"], dt=dt)
    rng = np.random.default_rng(seeds[0])
    y = _noisy(res.p_excited, sigma, rng)
    expected = math.hypot(omega, 2 * math.pi * detuning) / (2 * math.pi)
    meta = dict(meta, **{"expected.rabi_frequency": f"{format_number(expected)} Hz"})
    out.tables["rabi"] = OutputTable(["t_rabi", "p_excited"], ["s", ""], np.column_stack([res.sweep_values, y]), meta=meta)
    fit = analysis.fit_damped_sinusoid(Trace(res.sweep_values, y), degeneracy_ratio=ratio)
    out.fit = fit
    out.tables["rabi_fit"] = _fit_table([fit], {"expected_freq": ("Hz", [expected])}, {"command": "rabi", "model": fit.model})
    out.messages.append(f"rabi: f = {fit['freq']:.6g} Hz (expected {expected:.6g} Hz)")


def _t1(cfg, model, dt, sigma, seeds, ratio, meta, out):
    sec = _grid_section(cfg, "t1")
    run = cfg.run()
    repeat = run["repeat"]
    pi_duration = cfg.dynamics()["pi_duration"]
    series, t1_true = [], []
    grid = None
    for i in range(repeat):
        rng = np.random.default_rng(seeds[i])
        t1 = model.t1
        if repeat > 1 and run["t1_jitter"] > 0 and math.isfinite(t1):
            # per-repeat drift of T1, redrawn until positive
            while True:
                t1 = model.t1 * (1 + run["t1_jitter"] * rng.standard_normal())
                if t1 > 0:
                    break
        m = dynamics.QubitModel(model.f01, t1, model.t_phi, model.anharmonicity, model.levels)
        res = dynamics.t1_experiment(m, sec["t_max"], sec["n_points"], pi_duration=pi_duration, dt=dt)
        grid = res.sweep_values
        series.append(_noisy(res.p_excited, sigma, rng))
        t1_true.append(t1)
    cols = ["t_delay"] + (["p_excited"] if repeat == 1 else [f"p_excited_{i}" for i in range(repeat)])
    out.tables["t1"] = OutputTable(cols, ["s"] + [""] * repeat, np.column_stack([grid] + series), meta=meta)
    fits = [analysis.fit_exp_decay(Trace(grid, y), degeneracy_ratio=ratio) for y in series]
    out.fit = fits[0]
    fit_meta = {"command": "t1", "model": "exp_decay"}
    if repeat > 1:
        stats = analysis.run_statistics([f["T"] for f in fits])
        fit_meta["stats.T_mean"] = f"{format_number(stats.mean)} s"
        fit_meta["stats.T_std"] = f"{format_number(stats.std_dev)} s"
        fit_meta["stats.n"] = str(stats.n)
        edges, counts = stats.bin_edges, stats.counts
        out.tables["t1_hist"] = OutputTable(
            ["bin_left", "bin_right", "count"],
            ["s", "s", ""],
            np.column_stack([edges[:-1], edges[1:], counts]),
            meta={"command": "t1", "histogram": "Freedman-Diaconis"},
        )
        out.messages.append(f"t1: T1 = {stats.mean * 1e6:.4g} +- {stats.std_dev * 1e6:.3g} us over {stats.n} repeats")
    else:
        out.messages.append(f"t1: T1 = {fits[0]['T'] * 1e6:.6g} us")
    out.tables["t1_fit"] = _fit_table(fits, {"t1_model": ("s", t1_true)}, fit_meta)


def _ramsey(cfg, model, dt, sigma, seeds, ratio, meta, out):
    sec = _grid_section(cfg, "ramsey")
    res = dynamics.ramsey_experiment(
        model, sec["detuning"], sec["t_max"], sec["n_points"], pi_duration=_pulse_duration(cfg), dt=dt
    )
    y = _noisy(res.p_excited, sigma, np.random.default_rng(seeds[0]))
    out.tables["ramsey"] = OutputTable(["t_delay", "p_excited"], ["s", ""], np.column_stack([res.sweep_values, y]), meta=meta)
    trace = Trace(res.sweep_values, y)
    try:
        fit = analysis.fit_damped_sinusoid(trace, degeneracy_ratio=ratio)
    except analysis.DegenerateDataError:
        fit = analysis.fit_exp_decay(trace, degeneracy_ratio=ratio)
        out.messages.append("ramsey: no fringes resolved, fitted a pure decay")
    out.fit = fit
    out.tables["ramsey_fit"] = _fit_table([fit], None, {"command": "ramsey", "model": fit.model})
    out.messages.append(f"ramsey: T2* = {fit['T'] * 1e6:.6g} us")


def _echo(cfg, model, dt, sigma, seeds, ratio, meta, out):
    sec = _grid_section(cfg, "echo")
    res = dynamics.echo_experiment(
        model, sec["detuning"], sec["t_max"], sec["n_points"], pi_duration=_pulse_duration(cfg), dt=dt
    )
    y = _noisy(res.p_excited, sigma, np.random.default_rng(seeds[0]))
    out.tables["echo"] = OutputTable(["t_delay", "p_excited"], ["s", ""], np.column_stack([res.sweep_values, y]), meta=meta)
    trace = Trace(res.sweep_values, y)
    fit = analysis.fit_exp_decay(trace, degeneracy_ratio=ratio)
    amp, detected = _oscillation_check(trace, fit)
    fit.params["oscillation_amplitude"] = amp
    fit.sigmas["oscillation_amplitude"] = math.nan
    fit.units["oscillation_amplitude"] = ""
    out.fit = fit
    out.tables["echo_fit"] = _fit_table(
        [fit], {"oscillation_detected": ("", [float(detected)])}, {"command": "echo", "model": fit.model}
    )
    out.messages.append(f"echo: T2E = {fit['T'] * 1e6:.6g} us, residual oscillation amplitude {amp:.3g}")


def _chevron(cfg, model, dt, sigma, seeds, ratio, meta, out):
    sec = _grid_section(cfg, "chevron")
    omega = 2 * math.pi * cfg.dynamics()["rabi_frequency"]
    half = sec["detuning_span"] / 2
    detunings = np.linspace(-half, half, sec["n_detunings"])
    times = np.linspace(0.0, sec["t_max"], sec["n_points"])
    rows = dynamics.sweep_2d(model, "rabi", model.f01 - detunings, times, omega=omega, dt=dt)
    rng = np.random.default_rng(seeds[0])
    series = [_noisy(r.p_excited, sigma, rng) for r in rows]
    cols = ["t_rabi"] + [f"p_excited_det_{format_number(d)}" for d in detunings]
    out.tables["chevron"] = OutputTable(cols, ["s"] + [""] * len(rows), np.column_stack([times] + series), meta=meta)
    expected = np.hypot(omega, 2 * np.pi * detunings) / (2 * np.pi)
    fits = [analysis.fit_damped_sinusoid(Trace(times, y), degeneracy_ratio=ratio) for y in series]
    out.fit = fits[len(fits) // 2]
    out.tables["chevron_fit"] = _fit_table(
        fits,
        {"detuning": ("Hz", list(detunings)), "expected_freq": ("Hz", list(expected))},
        {"command": "chevron", "model": "damped_sinusoid"},
    )
    out.messages.append(f"chevron: {len(fits)} rows fitted")


def _flux_sweep(cfg: ExperimentConfig, meta: dict, out: RunOutput) -> RunOutput:
    try:
        sec = _grid_section(cfg, "flux_sweep")
        if cfg.flux_cal is None:
            raise ConfigError(["flux-sweep needs a device.flux calibration section"])
    except ConfigError as exc:
        out.exit_code = EXIT_CONFIG
        out.messages.extend(exc.errors)
        return out
    currents = np.linspace(sec["current_start"], sec["current_stop"], sec["n_points"])
    flux = np.array([design.flux_from_current(cfg.flux_cal, i) for i in currents])
    e_j = np.array([design.squid_ej(cfg.transmon.e_j_max, f, cfg.asymmetry_d) for f in flux])
    f01 = np.full(currents.size, np.nan)
    for k, f in enumerate(flux):
        try:
            f01[k] = _spectrum(cfg, f).f01
        except DomainError:
            pass  # no Josephson coupling at this bias
        except ConvergenceError as exc:
            out.exit_code = EXIT_SIMULATION
            out.messages.append(f"flux-sweep: {exc}")
            return out
    cols = ["current", "flux", "E_J", "f01"]
    units = ["A", "", "Hz", "Hz"]
    data = [currents, flux, e_j, f01]
    if cfg.cavity is not None and cfg.g is not None:
        cav = np.array(
            [readout.cavity_pull_vs_flux(cfg.cavity, cfg.g, f) if np.isfinite(f) else cfg.cavity.f_bare for f in f01]
        )
        cols.append("f_cavity_dressed")
        units.append("Hz")
        data.append(cav)
    out.tables["flux-sweep"] = OutputTable(cols, units, np.column_stack(data), meta=meta)
    peak_current, peak_f01 = _parabolic_max(currents, f01)
    out.tables["flux-sweep_fit"] = OutputTable(
        ["current_at_max", "f01_max"],
        ["A", "Hz"],
        np.array([[peak_current, peak_f01]]),
        meta={"command": "flux-sweep", "model": "parabolic maximum"},
    )
    out.messages.append(f"flux-sweep: f01 max {peak_f01 / 1e9:.6g} GHz at {peak_current * 1e3:.4g} mA")
    return out


def _parabolic_max(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """Vertex of the parabola through the largest sample and its neighbours."""
    k = int(np.nanargmax(y))
    if k == 0 or k == len(y) - 1 or not np.all(np.isfinite(y[k - 1 : k + 2])):
        return float(x[k]), float(y[k])
    c = np.polyfit(x[k - 1 : k + 2] - x[k], y[k - 1 : k + 2], 2)
    if c[0] >= 0:
        return float(x[k]), float(y[k])
    xv = -c[1] / (2 * c[0])
    return float(x[k] + xv), float(np.polyval(c, xv))


def cmd_fit(table: OutputTable, model: str, x: str | None = None, y: str | None = None, ratio: float = 3.0) -> FitResult:
    """Fit an imported trace; columns default to the first two."""
    xs = table.column(x) if x else table.rows[:, 0]
    ys = table.column(y) if y else table.rows[:, 1]
    return analysis.FITTERS[model](Trace(xs, ys), degeneracy_ratio=ratio)


def write_outputs(out: RunOutput, directory) -> list[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, table in out.tables.items():
        path = directory / f"{name}.csv"
        write_table(table, path)
        paths.append(path)
    return paths


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vdwtransmon", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("design",) + EXPERIMENTS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, type=Path)
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--out", type=Path, default=Path("out"))
    fp = sub.add_parser("fit", help="fit an imported table")
    fp.add_argument("--table", required=True, type=Path)
    fp.add_argument("--model", required=True, choices=sorted(analysis.FITTERS))
    fp.add_argument("--x", default=None, help="x column name (default: first column)")
    fp.add_argument("--y", default=None, help="y column name (default: second column)")
    fp.add_argument("--out", type=Path, default=Path("out"))
    return parser


def _run_fit(args) -> int:
    try:
        table = read_table(args.table)
    except (OSError, TableFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        fit = cmd_fit(table, args.model, args.x, args.y)
    except (FitError, DomainError) as exc:
        print(f"fit failed: {exc}", file=sys.stderr)
        return EXIT_FIT
    except (KeyError, ValueError, IndexError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = RunOutput({f"{args.table.stem}_fit": _fit_table([fit], None, {"command": "fit", "model": fit.model, "source": str(args.table)})}, fit)
    write_outputs(out, args.out)
    for name, value in fit.params.items():
        print(f"{name} = {value:.10g} +- {fit.sigmas[name]:.3g} {fit.units.get(name, '')}".rstrip())
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    if args.command == "fit":
        return _run_fit(args)
    try:
        cfg = load_config(args.config)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConfigError as exc:
        for err in exc.errors:
            print(f"{args.config}: {err}", file=sys.stderr)
        return EXIT_CONFIG
    if args.command == "design":
        table = cmd_design(cfg)
        write_outputs(RunOutput({"design": table}), args.out)
        for label, unit, value in zip(table.labels, table.row_units, table.rows[:, 0]):
            print(f"{label:>20s} = {value:.8g} {unit}".rstrip())
        for key, val in table.meta.items():
            if key.startswith("warning."):
                print(f"warning: {val}", file=sys.stderr)
        return EXIT_OK
    try:
        out = cmd_experiment(cfg, args.command, args.seed)
    except ConfigError as exc:
        for err in exc.errors:
            print(f"{args.config}: {err}", file=sys.stderr)
        return EXIT_CONFIG
    write_outputs(out, args.out)
    stream = sys.stdout if out.exit_code == EXIT_OK else sys.stderr
    for msg in out.messages:
        print(msg, file=stream)
    return out.exit_code


if __name__ == "__main__":
    sys.exit(main())
