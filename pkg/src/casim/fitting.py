"""Least-squares fits used by the studies: power law and saturating exponential."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import curve_fit, minimize_scalar


class FitError(RuntimeError):
    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


@dataclass
class FitResult:
    model: str  # "power_law": y = a x^b ; "exp_decay": y = f_inf - amp exp(-x / tau)
    params: dict[str, float]
    residual: float  # sum of squared residuals in the space the fit minimised
    rms_rel: float  # RMS of (fit - y) / y
    n: int
    diagnostics: dict = field(default_factory=dict)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.model == "power_law":
            return power_law(x, self.params["a"], self.params["b"])
        return exp_decay(x, self.params["f_inf"], self.params["amp"], self.params["tau"])


def power_law(x, a, b):
    return a * np.power(x, b)


def exp_decay(x, f_inf, amp, tau):
    return f_inf - amp * np.exp(-x / tau)


def _prepare(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise FitError("x and y must be 1-D arrays of equal length")
    if len(x) < 3:
        raise FitError(f"need at least 3 points, got {len(x)}")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise FitError("non-finite data")
    if np.ptp(x) == 0:
        raise FitError("all abscissae are equal")
    return x, y


def _rms_rel(model_y, y):
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = np.where(y != 0, (model_y - y) / y, model_y - y)
    return float(np.sqrt(np.mean(rel**2)))


def fit_power_law(x, y) -> FitResult:
    """Fit ``y = a x^b`` by linear least squares in log-log space."""
    x, y = _prepare(x, y)
    if np.any(x <= 0) or np.any(y <= 0):
        raise FitError("power-law fit needs positive data")
    lx, ly = np.log(x), np.log(y)
    design = np.column_stack([np.ones_like(lx), lx])
    coef, *_ = np.linalg.lstsq(design, ly, rcond=None)
    resid = ly - design @ coef
    a, b = math.exp(coef[0]), float(coef[1])
    return FitResult("power_law", {"a": a, "b": b}, float(resid @ resid),
                     _rms_rel(power_law(x, a, b), y), len(x))


def _linear_part(x, y, tau):
    design = np.column_stack([np.ones_like(x), -np.exp(-x / tau)])
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    r = y - design @ coef
    return coef, float(r @ r)


def fit_exp_decay(x, y) -> FitResult:
    """Fit ``y = f_inf - amp * exp(-x / tau)`` with ``tau > 0``.

    The decay length is located by a scan of the separable residual (for a
    fixed ``tau`` the other two parameters are linear), then all three are
    polished together.
    """
    x, y = _prepare(x, y)
    span = float(np.ptp(x))
    steps = np.diff(np.unique(x))
    lo, hi = math.log(steps.min() / 20), math.log(span * 50)
    grid = np.linspace(lo, hi, 241)
    ssr = np.array([_linear_part(x, y, math.exp(g))[1] for g in grid])
    k = int(np.argmin(ssr))
    bracket = (grid[max(k - 1, 0)], grid[min(k + 1, len(grid) - 1)])
    diagnostics = {"tau_scan_min": math.exp(grid[k])}
    if k in (0, len(grid) - 1):
        raise FitError("decay length not bracketed by the data", diagnostics)
    opt = minimize_scalar(lambda g: _linear_part(x, y, math.exp(g))[1], bounds=bracket,
                          method="bounded", options={"xatol": 1e-12})
    tau0 = math.exp(opt.x)
    (f0, a0), _ = _linear_part(x, y, tau0)
    scale = float(np.max(np.abs(y))) or 1.0
    try:
        popt, _ = curve_fit(lambda t, f, a, tau: exp_decay(t, f * scale, a * scale, tau) / scale,
                            x, y / scale, p0=(f0 / scale, a0 / scale, tau0),
                            xtol=1e-15, ftol=1e-15, gtol=1e-15, maxfev=20000)
    except (RuntimeError, ValueError) as exc:
        raise FitError(f"exponential fit did not converge: {exc}", diagnostics) from exc
    f_inf, amp, tau = popt[0] * scale, popt[1] * scale, float(popt[2])
    if not tau > 0:
        raise FitError("fitted decay length is not positive", {**diagnostics, "tau": tau})
    model_y = exp_decay(x, f_inf, amp, tau)
    r = y - model_y
    diagnostics["iterations_start_tau"] = tau0
    return FitResult("exp_decay", {"f_inf": float(f_inf), "amp": float(amp), "tau": tau},
                     float(r @ r), _rms_rel(model_y, y), len(x), diagnostics)
