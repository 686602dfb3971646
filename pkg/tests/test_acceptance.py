"""Acceptance criteria, one test each.

Every test records a PASS/FAIL line; the lines are printed together at the
end of the pytest run, and by running this file directly.
"""

import math
import re
import subprocess
import sys
import time
from pathlib import Path

import numpy as np

from vdwtransmon import cli, dynamics
from vdwtransmon.analysis import Trace, fit_damped_sinusoid, fit_exp_decay, loss_tangent_bound
from vdwtransmon.config import load_config, parse_config
from vdwtransmon.design import (
    CapacitanceBudget,
    PpcGeometry,
    TransmonParams,
    charging_energy,
    ppc_capacitance,
    total_capacitance,
    transmon_spectrum,
)
from vdwtransmon.readout import CouplingParams, dispersive_shift_transmon, dispersive_shift_two_level

ROOT = Path(__file__).resolve().parents[1]
DEVICE = ROOT / "configs" / "vdw_device.yaml"
CONVENTIONAL = ROOT / "configs" / "conventional_qubit.yaml"
F01 = 5.2815e9
TWO_PI = 2 * math.pi

RESULTS: dict[int, str] = {}


def record(number, title, checks):
    """``checks`` is a list of (description, ok); all must hold."""
    ok = all(c for _, c in checks)
    detail = "; ".join(f"{d} [{'ok' if c else 'FAIL'}]" for d, c in checks)
    RESULTS[number] = f"{'PASS' if ok else 'FAIL'}  criterion {number:2d}: {title}: {detail}"
    assert ok, RESULTS[number]


def rel(a, b):
    return abs(a / b - 1)


def with_run(text, **kw):
    """Override scalar entries of the run section."""
    for key, val in kw.items():
        text, n = re.subn(rf"(?m)^(  {key}:).*$", rf"\g<1> {val}", text)
        assert n == 1, key
    return text


def test_criterion_01_parameter_chain():
    t0 = time.perf_counter()
    s = transmon_spectrum(TransmonParams(131e6, 28.0e9))
    elapsed = time.perf_counter() - t0
    record(
        1,
        "parameter chain",
        [
            (f"f01 = {s.f01 / 1e9:.6f} GHz, {rel(s.f01, F01):.3%} from 5.2815 (tol 0.5%)", rel(s.f01, F01) < 0.005),
            (
                f"anharmonicity = {s.anharmonicity / 1e6:.3f} MHz, {rel(s.anharmonicity, -131e6):.2%} from -131 (tol 5%)",
                rel(s.anharmonicity, -131e6) < 0.05,
            ),
            (f"runtime {elapsed * 1e3:.1f} ms (< 1 s)", elapsed < 1.0),
        ],
    )


def test_criterion_02_ej_over_ec():
    table = cli.cmd_design(load_config(DEVICE))
    r = table.value("EJ_over_EC")
    record(2, "E_J/E_C from cmd_design", [(f"E_J/E_C = {r:.3f} (213.7 +- 0.5)", abs(r - 213.7) <= 0.5)])


def test_criterion_03_dispersive_shift():
    cpl = CouplingParams(40.3e6, 1.6258e9)
    chi = dispersive_shift_two_level(cpl)
    chi_t = dispersive_shift_transmon(cpl, -131e6)
    table = cli.cmd_design(load_config(DEVICE))
    flagged = any("chi_transmon differs" in v for k, v in table.meta.items() if k.startswith("warning."))
    record(
        3,
        "dispersive shift",
        [
            (f"two-level chi = {chi / 1e6:.5f} MHz vs 1.00 MHz (tol 1%)", rel(chi, 1.00e6) < 0.01),
            (f"transmon chi = {chi_t / 1e6:.5f} MHz vs -0.0875 MHz", rel(chi_t, -0.0875e6) < 0.01),
            ("design table reports chi_transmon with discrepancy flag", "chi_transmon" in table.labels and flagged),
        ],
    )


def test_criterion_04_ppc():
    c = ppc_capacitance(PpcGeometry.from_lab_units(109, 35, 4.4))
    e_c = charging_energy(total_capacitance(CapacitanceBudget(c)))
    record(
        4,
        "parallel-plate capacitor",
        [
            (f"C_ppc = {c * 1e15:.3f} fF (121.3 +- 0.1)", abs(c - 121.3e-15) <= 0.1e-15),
            (f"E_C = {e_c / 1e6:.3f} MHz with default c_stray (131 +- 0.5)", abs(e_c - 131e6) <= 0.5e6),
        ],
    )


def test_criterion_05_loss_bound():
    tan = loss_tangent_bound(F01, 1.06e-6)
    record(5, "loss tangent bound", [(f"tan delta = {tan:.4e} vs 2.83e-5 (tol 1%)", rel(tan, 2.83e-5) < 0.01)])


def test_criterion_06_t1_pipeline():
    text = DEVICE.read_text()
    t0 = time.perf_counter()
    quiet = cli.cmd_experiment(parse_config(with_run(text, noise_sigma=0)), "t1")
    t_quiet = quiet.fit["T"]
    noisy = cli.cmd_experiment(parse_config(with_run(text, repeat=100)), "t1")
    elapsed = time.perf_counter() - t0
    std = float(noisy.tables["t1_fit"].meta["stats.T_std"].split()[0])
    mean = float(noisy.tables["t1_fit"].meta["stats.T_mean"].split()[0])
    record(
        6,
        "T1 pipeline",
        [
            (f"noiseless T1 = {t_quiet * 1e6:.4f} us (1.06 +- 2%)", rel(t_quiet, 1.06e-6) < 0.02),
            (f"100 repeats: {mean * 1e6:.3f} +- {std * 1e6:.3f} us, std in [0.06, 0.12]", 0.06e-6 <= std <= 0.12e-6),
            (f"runtime {elapsed:.2f} s (< 30 s)", elapsed < 30),
        ],
    )


def test_criterion_07_ramsey_pipeline():
    text = with_run(DEVICE.read_text(), noise_sigma=0)
    cfg = parse_config(text)
    t_phi = cfg.dynamics()["t_phi"]
    t2 = cli.cmd_experiment(cfg, "ramsey").fit["T"]
    model = dynamics.QubitModel.from_t2_star(F01, 1.06e-6, 1.67e-6)
    checks = [
        (f"derived T_phi = {t_phi * 1e6:.3f} us (7.87)", abs(t_phi - 7.87e-6) < 0.01e-6),
        (f"fitted T2* = {t2 * 1e6:.4f} us (1.67 +- 2%)", rel(t2, 1.67e-6) < 0.02),
    ]
    for d in (0.5e6, 1e6, 2e6):
        r = dynamics.ramsey_experiment(model, d, 8e-6, 401)
        f = fit_damped_sinusoid(Trace(r.sweep_values, r.p_excited))["freq"]
        checks.append((f"fringe {f / 1e6:.5f} MHz at detuning {d / 1e6:g} MHz (tol 0.5%)", rel(f, d) < 0.005))
    record(7, "Ramsey pipeline", checks)


def test_criterion_08_echo():
    model = dynamics.QubitModel(F01, t1=1.06e-6)
    r = dynamics.echo_experiment(model, 1e6, 8e-6, 101)
    t2e = fit_exp_decay(Trace(r.sweep_values, r.p_excited))["T"]
    base = dynamics.QubitModel.from_t2_star(F01, 1.06e-6, 1.67e-6)
    traces = [dynamics.echo_experiment(base, d, 8e-6, 101).p_excited for d in (0.0, 1e6, 5e6)]
    dev = max(np.max(np.abs(t - traces[0])) for t in traces[1:])
    record(
        8,
        "Hahn echo",
        [
            (f"T2E = {t2e * 1e6:.4f} us vs 2 T1 = 2.12 us (tol 2%)", rel(t2e, 2.12e-6) < 0.02),
            (f"max pointwise change over detuning 0/1/5 MHz = {dev:.2e} (< 1e-4)", dev < 1e-4),
        ],
    )


def test_criterion_09_rabi_law():
    model = dynamics.QubitModel(F01)
    times = np.linspace(0, 2e-6, 801)
    worst = 0.0
    for om in (2e6, 4e6, 6.25e6, 8e6, 10e6):
        for de in (-10e6, -5e6, 0.0, 3e6, 7e6):
            r = dynamics.rabi_experiment(model, F01 - de, TWO_PI * om, times=times)
            f = fit_damped_sinusoid(Trace(r.sweep_values, r.p_excited))["freq"]
            worst = max(worst, rel(f, math.hypot(om, de)))
    record(9, "generalized Rabi frequency", [(f"worst relative error over 5x5 grid = {worst:.2e} (< 1e-3)", worst < 1e-3)])


def test_criterion_10_property_suites():
    t0 = time.perf_counter()
    proc = subprocess.run(
        [
            sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider",
            "tests/test_dynamics.py", "tests/test_design.py", "tests/test_analysis.py",
        ],
        cwd=ROOT,
        capture_output=True,
        text=True,
    )
    elapsed = time.perf_counter() - t0
    summary = proc.stdout.strip().splitlines()[-1] if proc.stdout.strip() else proc.stderr[-200:]
    record(
        10,
        "property suites",
        [(f"dynamics/design/analysis suites: {summary}", proc.returncode == 0), (f"runtime {elapsed:.1f} s (< 120 s)", elapsed < 120)],
    )


def test_criterion_11_conventional_qubit():
    cfg = load_config(CONVENTIONAL)
    t1 = cli.cmd_experiment(cfg, "t1").fit["T"]
    t2 = cli.cmd_experiment(cfg, "ramsey").fit["T"]
    t2e = cli.cmd_experiment(cfg, "echo").fit["T"]
    t2_model = 1 / (1 / (2 * 11.5e-6) + 1 / cfg.dynamics()["t_phi"])
    record(
        11,
        "conventional qubit",
        [
            (f"T1 = {t1 * 1e6:.4f} us (11.5 +- 2%)", rel(t1, 11.5e-6) < 0.02),
            (f"T2* = {t2 * 1e6:.4f} us (10.5 +- 2%)", rel(t2, 10.5e-6) < 0.02),
            (f"T2E = {t2e * 1e6:.4f} us (model {t2_model * 1e6:.4f} +- 2%)", rel(t2e, t2_model) < 0.02),
        ],
    )


if __name__ == "__main__":
    for name, fn in sorted(globals().items()):
        if name.startswith("test_criterion"):
            try:
                fn()
            except AssertionError:
                pass
    for n in sorted(RESULTS):
        print(RESULTS[n])
