"""Damped least squares (Levenberg-Marquardt) with user-supplied Jacobians."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

MAX_ITERATIONS = 200
XTOL = 1e-8


@dataclass
class LMResult:
    p: np.ndarray
    residuals: np.ndarray
    jacobian: np.ndarray
    iterations: int
    converged: bool
    message: str

    @property
    def cost(self) -> float:
        return float(self.residuals @ self.residuals)


def levenberg_marquardt(
    residual: Callable[[np.ndarray], np.ndarray],
    jacobian: Callable[[np.ndarray], np.ndarray],
    p0,
    scale,
    max_iterations: int = MAX_ITERATIONS,
    xtol: float = XTOL,
    lam0: float = 1e-3,
) -> LMResult:
    """Minimize ``sum(residual(p)**2)``.

    ``scale`` gives each parameter's natural magnitude.  The iteration stops
    when every component of a step is below ``xtol`` times its scale, which
    makes the criterion meaningful for parameters such as a 7 GHz centre
    frequency fitted to sub-MHz precision.  Damping uses Marquardt's diagonal
    so the trajectory does not depend on the units of ``p``.
    """
    p = np.array(p0, dtype=float)
    scale = np.abs(np.asarray(scale, dtype=float))
    if np.any(~np.isfinite(scale)) or np.any(scale == 0):
        raise ValueError("parameter scales must be finite and nonzero")
    r = residual(p)
    cost = r @ r
    jac = jacobian(p)
    lam = lam0
    for it in range(1, max_iterations + 1):
        js = jac * scale
        a = js.T @ js
        g = js.T @ r
        diag = np.diag(a).copy()
        diag[diag == 0] = 1.0
        try:
            step_s = np.linalg.solve(a + lam * np.diag(diag), -g)
        except np.linalg.LinAlgError:
            lam *= 10
            continue
        small = np.max(np.abs(step_s)) < xtol
        trial = p + step_s * scale
        r_trial = residual(trial)
        cost_trial = r_trial @ r_trial
        if np.isfinite(cost_trial) and cost_trial <= cost:
            p, r, cost = trial, r_trial, cost_trial
            jac = jacobian(p)
            lam = max(lam / 10, 1e-15)
            if small:
                return LMResult(p, r, jac, it, True, "step below tolerance")
        else:
            if small:
                # already at the minimum to within the tolerance
                return LMResult(p, r, jac, it, True, "step below tolerance")
            lam *= 10
            if lam > 1e20:
                return LMResult(p, r, jac, it, False, "damping diverged")
    return LMResult(p, r, jac, max_iterations, False, "maximum iterations reached")


def covariance(jac: np.ndarray, residuals: np.ndarray) -> np.ndarray:
    """Residual-variance-scaled covariance (J^T J)^-1 * SSR / (n - p).

    Columns are equilibrated before inversion; parameters a few GHz large sit
    next to MHz widths.  A singular system yields infinite variances.
    """
    n, k = jac.shape
    dof = n - k
    norms = np.linalg.norm(jac, axis=0)
    norms[norms == 0] = 1.0
    js = jac / norms
    try:
        inv = np.linalg.inv(js.T @ js)
    except np.linalg.LinAlgError:
        return np.full((k, k), np.inf)
    s2 = float(residuals @ residuals) / dof if dof > 0 else np.inf
    return s2 * inv / np.outer(norms, norms)
