"""Parameter extraction from spectroscopy and time-domain traces.

Three models are fitted by damped least squares with analytic Jacobians:

* Lorentzian peak      ``offset + A / (1 + 4 (x - f0)^2 / kappa^2)``
* exponential decay    ``offset + A exp(-t / T)``
* damped sinusoid      ``offset + A exp(-t / T) cos(2 pi f t + phase)``

Decays are fitted through the rate ``1/T`` so that undamped traces (Rabi
oscillations without decoherence) stay well posed; ``T`` is reported as
``inf`` when the fitted rate is zero to within the trace span.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import lm
from .errors import DegenerateDataError, DomainError, FitError

DEGENERACY_RATIO = 3.0
MIN_POINTS = 5


@dataclass
class Trace:
    x: np.ndarray
    y: np.ndarray
    y_sigma: np.ndarray | None = None

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        if self.x.ndim != 1 or self.x.shape != self.y.shape:
            raise DomainError("x and y must be 1-D and of equal length")
        if self.x.size < MIN_POINTS:
            raise DomainError(f"a fit needs at least {MIN_POINTS} points, got {self.x.size}")
        dx = np.diff(self.x)
        if not (np.all(dx > 0) or np.all(dx < 0)):
            raise DomainError("x must be strictly monotone")
        if self.y_sigma is not None:
            self.y_sigma = np.asarray(self.y_sigma, dtype=float)
            if self.y_sigma.shape != self.y.shape or np.any(self.y_sigma <= 0):
                raise DomainError("y_sigma must be positive and match y")


@dataclass
class FitResult:
    model: str
    params: dict
    sigmas: dict
    units: dict
    residual_rms: float
    converged: bool
    iterations: int
    notes: list = field(default_factory=list)

    def __getitem__(self, name):
        return self.params[name]


@dataclass
class RunStatistics:
    mean: float
    std_dev: float
    n: int
    bin_edges: np.ndarray
    counts: np.ndarray


def noise_estimate(y: np.ndarray) -> float:
    """Robust point-to-point noise level (MAD of first differences)."""
    d = np.diff(y)
    return float(np.median(np.abs(d - np.median(d))) / (0.6745 * math.sqrt(2)))


def _check_contrast(y, contrast, ratio, what):
    noise = noise_estimate(y)
    if not contrast > 0 or contrast < ratio * noise:
        raise DegenerateDataError(
            f"{what}: contrast {contrast:.3g} is below {ratio:g}x the noise estimate {noise:.3g}",
            {"contrast": contrast, "noise": noise},
        )


def _run(trace: Trace, model, jac, p0, scale, names, max_iterations):
    x, y = trace.x, trace.y
    w = 1.0 if trace.y_sigma is None else 1.0 / trace.y_sigma
    res = lm.levenberg_marquardt(
        lambda p: (model(x, p) - y) * w,
        lambda p: jac(x, p) * (w if np.ndim(w) == 0 else w[:, None]),
        p0,
        scale,
        max_iterations=max_iterations,
    )
    if not res.converged:
        raise FitError(
            f"fit did not converge after {res.iterations} iterations ({res.message})",
            {"params": dict(zip(names, res.p)), "iterations": res.iterations},
        )
    cov = lm.covariance(res.jacobian, res.residuals)
    sig = np.sqrt(np.abs(np.diag(cov)))
    rms = float(np.sqrt(np.mean((model(x, res.p) - y) ** 2)))
    return res, sig, rms


# ---------------------------------------------------------------------------
# Lorentzian


def _lor(x, p):
    f0, kappa, amp, off = p
    return off + amp / (1 + 4 * (x - f0) ** 2 / kappa**2)


def _lor_jac(x, p):
    f0, kappa, amp, off = p
    u = x - f0
    den = 1 + 4 * u**2 / kappa**2
    return np.column_stack(
        [
            amp * 8 * u / kappa**2 / den**2,
            amp * 8 * u**2 / kappa**3 / den**2,
            1 / den,
            np.ones_like(x),
        ]
    )


def lorentzian_guess(x, y) -> np.ndarray:
    """Centre at the extremum, width from the half-maximum crossings."""
    med = np.median(y)
    peak = (y.max() - med) >= (med - y.min())
    if peak:
        base, i = y.min(), int(np.argmax(y))
    else:
        base, i = y.max(), int(np.argmin(y))
    amp = y[i] - base
    above = np.nonzero(np.abs(y - base) >= 0.5 * abs(amp))[0] if amp else np.array([], dtype=int)
    width = abs(x[above[-1]] - x[above[0]]) if above.size > 1 else 0.0
    width = max(width, np.min(np.abs(np.diff(x))))
    return np.array([x[i], width, amp, base])


def fit_lorentzian(trace: Trace, p0: dict | None = None, *, degeneracy_ratio=DEGENERACY_RATIO, max_iterations=lm.MAX_ITERATIONS) -> FitResult:
    names = ["f0", "kappa", "amplitude", "offset"]
    x, y = trace.x, trace.y
    guess = lorentzian_guess(x, y)
    _check_contrast(y, abs(guess[2]), degeneracy_ratio, "lorentzian")
    if p0 is not None:
        guess = np.array([p0[n] for n in names], dtype=float)
    scale = [guess[1], guess[1], guess[2], guess[2]]
    res, sig, rms = _run(trace, _lor, _lor_jac, guess, scale, names, max_iterations)
    p = res.p.copy()
    p[1] = abs(p[1])
    notes = []
    if not min(x[0], x[-1]) <= p[0] <= max(x[0], x[-1]):
        raise FitError("fitted centre lies outside the trace", {"params": dict(zip(names, p))})
    if abs(x[-1] - x[0]) < 2 * p[1]:
        notes.append("trace spans less than 2 kappa")
    return FitResult(
        "lorentzian",
        dict(zip(names, map(float, p))),
        dict(zip(names, map(float, sig))),
        {"f0": "Hz", "kappa": "Hz", "amplitude": "", "offset": ""},
        rms,
        True,
        res.iterations,
        notes,
    )


# ---------------------------------------------------------------------------
# exponential decay


def _exp(x, p):
    rate, amp, off = p
    return off + amp * np.exp(-rate * x)


def _exp_jac(x, p):
    rate, amp, off = p
    e = np.exp(-rate * x)
    return np.column_stack([-amp * x * e, e, np.ones_like(x)])


def _linear_amp_offset(x, y, rate):
    basis = np.column_stack([np.exp(-rate * x), np.ones_like(x)])
    coef, *_ = np.linalg.lstsq(basis, y, rcond=None)
    r = basis @ coef - y
    return coef, float(r @ r)


def exp_guess(x, y) -> np.ndarray:
    """Baseline from the tail, rate and amplitude from a log-linear regression.

    The regression assumes a decay.  Its rate competes with a scan over
    signed rates (amplitude and offset solved linearly for each) so that
    growing data still yields a sensible start.
    """
    order = np.argsort(x)
    xs, ys = x[order], y[order]
    tail = max(2, xs.size // 10)
    base = float(np.mean(ys[-tail:]))
    z = ys - base
    sign = 1.0 if z[0] >= 0 else -1.0
    keep = sign * z > 0.05 * abs(z[0])
    span = abs(xs[-1] - xs[0])
    rate = 0.0
    if keep.sum() >= 2:
        coef = np.polyfit(xs[keep], np.log(sign * z[keep]), 1, w=np.abs(z[keep]))
        rate = -coef[0]
    if not rate > 0.1 / span:
        rate = 1.0 / span
    scan = np.logspace(-1, 2, 31) / span
    candidates = np.concatenate([[rate], scan, -scan])
    best = min(candidates, key=lambda k: _linear_amp_offset(xs, ys, k)[1])
    (amp, off), _ = _linear_amp_offset(xs, ys, best)
    return np.array([best, amp, off])


def _decay_time(rate, rate_sigma, span):
    # a rate indistinguishable from zero over the trace means no decay at all
    if abs(rate) * span < 1e-6:
        return math.inf, math.inf
    if rate > 0:
        return 1.0 / rate, rate_sigma / rate**2
    raise DomainError(f"fitted decay time is negative (rate {rate:.4g} 1/s)")


def fit_exp_decay(trace: Trace, p0: dict | None = None, *, degeneracy_ratio=DEGENERACY_RATIO, max_iterations=lm.MAX_ITERATIONS) -> FitResult:
    x, y = trace.x, trace.y
    span = abs(x[-1] - x[0])
    guess = exp_guess(x, y)
    _check_contrast(y, float(np.ptp(y)), degeneracy_ratio, "exponential")
    if p0 is not None:
        guess = np.array([1.0 / p0["T"], p0["amplitude"], p0["offset"]], dtype=float)
    scale = [guess[0], guess[1] if guess[1] else np.ptp(y), np.ptp(y)]
    res, sig, rms = _run(trace, _exp, _exp_jac, guess, scale, ["rate", "amplitude", "offset"], max_iterations)
    rate, amp, off = res.p
    t, t_sig = _decay_time(rate, sig[0], span)
    notes = []
    if span < 2 * t:
        notes.append("trace spans less than 2 T")
        warnings.warn("trace spans less than two decay times", stacklevel=2)
    return FitResult(
        "exp_decay",
        {"T": t, "amplitude": float(amp), "offset": float(off)},
        {"T": t_sig, "amplitude": float(sig[1]), "offset": float(sig[2])},
        {"T": "s", "amplitude": "", "offset": ""},
        rms,
        True,
        res.iterations,
        notes,
    )


# ---------------------------------------------------------------------------
# damped sinusoid


def _sin(x, p):
    rate, f, ph, amp, off = p
    return off + amp * np.exp(-rate * x) * np.cos(2 * np.pi * f * x + ph)


def _sin_jac(x, p):
    rate, f, ph, amp, off = p
    e = np.exp(-rate * x)
    theta = 2 * np.pi * f * x + ph
    c, s = np.cos(theta), np.sin(theta)
    return np.column_stack(
        [-x * amp * e * c, -2 * np.pi * x * amp * e * s, -amp * e * s, e * c, np.ones_like(x)]
    )


def spectral_peak(x, y, ratio=DEGENERACY_RATIO) -> float:
    """Dominant frequency of the mean-removed trace (uniform sampling assumed).

    Raises :class:`DegenerateDataError` when the strongest component completes
    less than one cycle over the trace or does not clear ``ratio`` times the
    median spectral level.
    """
    n = x.size
    span = abs(x[-1] - x[0])
    dx = span / (n - 1)
    z = y - np.mean(y)
    mag = np.abs(np.fft.rfft(z))
    k = int(np.argmax(mag[1:])) + 1
    floor = np.median(mag[1:])
    if k <= 1 or mag[k] < ratio * floor:
        raise DegenerateDataError(
            "no oscillation above the noise floor; fit an exponential decay instead",
            {"peak_bin": k, "peak": float(mag[k]), "floor": float(floor)},
        )
    pad = 16 * n
    fine = np.abs(np.fft.rfft(z, pad))
    freqs = np.fft.rfftfreq(pad, dx)
    lo = max(1, int((k - 1.5) * pad / n))
    hi = min(fine.size - 1, int((k + 1.5) * pad / n) + 1)
    j = lo + int(np.argmax(fine[lo:hi]))
    if 0 < j < fine.size - 1:
        a, b, c = fine[j - 1], fine[j], fine[j + 1]
        den = a - 2 * b + c
        shift = 0.5 * (a - c) / den if den != 0 else 0.0
    else:
        shift = 0.0
    return float((j + shift) * freqs[1])


def damped_sine_guess(x, y, freq) -> np.ndarray:
    """Given a frequency, scan decay rates and solve the remaining linear problem."""
    span = abs(x[-1] - x[0])
    best = None
    for rate in np.array([0.0, 0.1, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0]) / span:
        e = np.exp(-rate * x)
        basis = np.column_stack([np.ones_like(x), e * np.cos(2 * np.pi * freq * x), e * np.sin(2 * np.pi * freq * x)])
        coef, *_ = np.linalg.lstsq(basis, y, rcond=None)
        cost = np.sum((basis @ coef - y) ** 2)
        if best is None or cost < best[0]:
            best = (cost, rate, coef)
    _, rate, (off, a, b) = best
    return np.array([max(rate, 0.1 / span), freq, math.atan2(-b, a), math.hypot(a, b), off])


def fit_damped_sinusoid(trace: Trace, p0: dict | None = None, *, degeneracy_ratio=DEGENERACY_RATIO, max_iterations=lm.MAX_ITERATIONS) -> FitResult:
    x, y = trace.x, trace.y
    span = abs(x[-1] - x[0])
    if p0 is None:
        freq = spectral_peak(x, y, degeneracy_ratio)
        guess = damped_sine_guess(x, y, freq)
    else:
        rate0 = 0.0 if math.isinf(p0["T"]) else 1.0 / p0["T"]
        guess = np.array([rate0, p0["freq"], p0["phase"], p0["amplitude"], p0["offset"]], dtype=float)
    scale = [1.0 / span, 1.0 / span, 1.0, abs(guess[3]) or np.ptp(y), abs(guess[3]) or np.ptp(y)]
    res, sig, rms = _run(trace, _sin, _sin_jac, guess, scale, ["rate", "freq", "phase", "amplitude", "offset"], max_iterations)
    rate, f, ph, amp, off = res.p
    if f < 0:
        f, ph = -f, -ph
    if amp < 0:
        amp, ph = -amp, ph + math.pi
    ph = math.remainder(ph, 2 * math.pi)
    t, t_sig = _decay_time(rate, sig[0], span)
    return FitResult(
        "damped_sinusoid",
        {"T": t, "freq": float(f), "phase": float(ph), "amplitude": float(amp), "offset": float(off)},
        {"T": t_sig, "freq": float(sig[1]), "phase": float(sig[2]), "amplitude": float(sig[3]), "offset": float(sig[4])},
        {"T": "s", "freq": "Hz", "phase": "rad", "amplitude": "", "offset": ""},
        rms,
        True,
        res.iterations,
    )


FITTERS = {
    "lorentzian": fit_lorentzian,
    "exp_decay": fit_exp_decay,
    "damped_sinusoid": fit_damped_sinusoid,
}


def loss_tangent_bound(f01: float, t1: float) -> float:
    """Upper bound on tan(delta) if all relaxation is dielectric: 1 / (2 pi f01 T1)."""
    if not (f01 > 0 and t1 > 0):
        raise DomainError("f01 and t1 must be positive")
    return 1.0 / (2 * math.pi * f01 * t1)


def run_statistics(values, bins="fd") -> RunStatistics:
    """Sample mean, sample standard deviation (n - 1) and a histogram.

    Freedman-Diaconis binning by default.  A zero interquartile range
    collapses to a single bin; an interquartile range so narrow that the rule
    asks for more bins than values falls back to Sturges.
    """
    v = np.asarray(values, dtype=float)
    if v.size < 2:
        raise DomainError("run statistics need at least two values")
    if bins == "fd":
        iqr = np.subtract(*np.percentile(v, [75, 25]))
        if iqr == 0:
            bins = 1
        elif np.ptp(v) / (2 * iqr / np.cbrt(v.size)) > v.size:
            bins = "sturges"
    counts, edges = np.histogram(v, bins=bins)
    return RunStatistics(float(v.mean()), float(v.std(ddof=1)), int(v.size), edges, counts)
