"""Least-squares fits for sweep outputs."""

from __future__ import annotations

import numpy as np
from scipy.optimize import least_squares


def fit_per_cycle_phase(cycles, pops) -> float:
    """Best ``phi`` in ``P(N) = sin^2(N phi / 2)``, located on a grid then refined.

    The population fixes ``phi`` only up to sign and multiples of 2 pi; the
    value returned lies in ``[0, 2 pi]``.
    """
    cycles = np.asarray(cycles, dtype=float)
    pops = np.asarray(pops, dtype=float)
    grid = np.linspace(0, 2 * np.pi, 4001)
    cost = ((np.sin(np.outer(grid, cycles) / 2) ** 2 - pops) ** 2).sum(axis=1)
    start = grid[np.argmin(cost)]
    fit = least_squares(
        lambda p: np.sin(cycles * p[0] / 2) ** 2 - pops,
        [start],
        xtol=1e-15,
        ftol=1e-15,
        gtol=1e-15,
    )
    return float(fit.x[0])


def fit_fringe_period(taus, pops, guess: float) -> dict:
    """Fit ``a + b cos(2 pi t/T) + c sin(2 pi t/T)`` and return its parameters."""
    taus = np.asarray(taus, dtype=float)
    pops = np.asarray(pops, dtype=float)

    def resid(p):
        a, b, c, period = p
        arg = 2 * np.pi * taus / period
        return a + b * np.cos(arg) + c * np.sin(arg) - pops

    start = [pops.mean(), np.ptp(pops) / 2, 0.0, guess * 1.01]
    fit = least_squares(resid, start, x_scale="jac", xtol=1e-14, ftol=1e-14)
    a, b, c, period = fit.x
    return {
        "period": float(period),
        "offset": float(a),
        "amplitude": float(np.hypot(b, c)),
        "rms_residual": float(np.sqrt(np.mean(fit.fun**2))),
    }


def cone_phase(delta, rabi: float, subspace_shift: bool = True):
    """Per-cycle phase of a cone circuit: ``pi(1+x)``, or ``2 pi x`` when the C-pulse shares the Ramsey pair."""
    x = np.asarray(delta, dtype=float) / np.hypot(delta, rabi)
    return np.pi * (1 + x) if subspace_shift else 2 * np.pi * x


def fit_cone_fringes(delta, pops, n_cycles: float, rabi: float, same_pair: bool = False) -> dict:
    """Fit ``offset + amplitude sin^2(N phi(delta)/2)`` with the Rabi frequency free.

    ``phi`` is the per-cycle phase from :func:`cone_phase`; the analytic Rabi
    frequency is the starting point.
    """
    delta = np.asarray(delta, dtype=float)
    pops = np.asarray(pops, dtype=float)

    def model(p):
        offset, amplitude, w = p
        return offset + amplitude * np.sin(n_cycles * cone_phase(delta, w, not same_pair) / 2) ** 2

    fit = least_squares(lambda p: model(p) - pops, [0.0, 1.0, rabi], x_scale=[1.0, 1.0, rabi])
    offset, amplitude, w = fit.x
    return {
        "model": "offset + amplitude * sin^2(N * phi(delta) / 2)",
        "phi": "2 pi delta / W" if same_pair else "pi (1 + delta / W)",
        "n_cycles": float(n_cycles),
        "offset": float(offset),
        "amplitude": float(amplitude),
        "rabi": float(w),
        "rms_residual": float(np.sqrt(np.mean(fit.fun**2))),
    }


def fit_echo_fringes(delta, pops, tau_guess: float) -> dict:
    """Fit ``offset + amplitude cos^2(pi delta tau / 2)`` with ``tau`` free."""
    delta = np.asarray(delta, dtype=float)
    pops = np.asarray(pops, dtype=float)

    def resid(p):
        offset, amplitude, tau = p
        return offset + amplitude * np.cos(np.pi * delta * tau / 2) ** 2 - pops

    fit = least_squares(resid, [0.0, 1.0, tau_guess], x_scale=[1.0, 1.0, tau_guess])
    offset, amplitude, tau = fit.x
    return {
        "model": "offset + amplitude * cos^2(pi * delta * tau / 2)",
        "offset": float(offset),
        "amplitude": float(amplitude),
        "tau": float(tau),
        "rms_residual": float(np.sqrt(np.mean(fit.fun**2))),
    }
