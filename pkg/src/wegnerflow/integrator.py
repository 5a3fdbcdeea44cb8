"""
Adaptive Dormand-Prince 4(5) integrator for complex array-valued ODEs.

Integration always runs toward increasing ``t``; callers wanting the backward
direction integrate the negated right-hand side.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .core_model import ConvergenceError

# Butcher tableau (Dormand & Prince 1980), FSAL
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200,
                187 / 2100, 1 / 40])
_E = _B5 - _B4

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 5.0


@dataclass
class StepStats:
    accepted: int = 0
    rejected: int = 0
    final_step: float = 0.0


@dataclass
class Solution:
    t: np.ndarray
    y: np.ndarray  # shape (len(t),) + y0.shape
    status: str  # "converged", "stopped", "t_end"
    message: str
    stats: StepStats = field(default_factory=StepStats)


def _error_norm(err, y, y_new, rtol, atol):
    scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
    return float(np.sqrt(np.mean(np.abs(err / scale) ** 2)))


def _initial_step(fun, t0, y0, f0, rtol, atol):
    # Hairer, Norsett & Wanner, Solving ODEs I, II.4
    scale = atol + rtol * np.abs(y0)
    d0 = np.sqrt(np.mean(np.abs(y0 / scale) ** 2))
    d1 = np.sqrt(np.mean(np.abs(f0 / scale) ** 2))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    y1 = y0 + h0 * f0
    d2 = np.sqrt(np.mean(np.abs((fun(t0 + h0, y1) - f0) / scale) ** 2)) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / 5)
    return min(100 * h0, h1)


def dopri45(
    fun: Callable[[float, np.ndarray], np.ndarray],
    y0: np.ndarray,
    t0: float,
    t_end: float,
    *,
    rtol: float = 1e-10,
    atol: float = 1e-12,
    t_eval: Optional[Sequence[float]] = None,
    record_steps: bool = False,
    check: Optional[Callable[[float, np.ndarray, np.ndarray], Optional[tuple]]] = None,
    post_step: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    max_steps: int = 1_000_000,
) -> Solution:
    """Integrate ``dy/dt = fun(t, y)`` from ``t0`` to at most ``t_end``.

    Steps are clamped so that every point of ``t_eval`` inside the run is hit
    exactly (no interpolation). ``check(t, y, f)`` is called after each accepted
    step and may return ``(status, message)`` to stop the run; the stopping point
    is always recorded. ``post_step`` may project the accepted state (e.g.
    re-symmetrization).
    """
    if not t_end > t0:
        raise ValueError("t_end must exceed t0")
    y = np.array(y0, dtype=complex)
    t = float(t0)
    f = fun(t, y)
    stats = StepStats()

    targets = np.unique(np.asarray([] if t_eval is None else t_eval, dtype=float))
    targets = targets[(targets > t0) & (targets <= t_end)]
    ti = 0

    ts, ys = [t], [y.copy()]
    h = _initial_step(fun, t, y, f, rtol, atol)
    status, message = "t_end", "reached end of interval"
    K = np.empty((7, y.size), dtype=complex)
    shape = y.shape

    while True:
        if stats.accepted + stats.rejected >= max_steps:
            raise ConvergenceError(f"step budget of {max_steps} exhausted at t={t:.6g}")
        stop_at = targets[ti] if ti < len(targets) else t_end
        hit = h >= stop_at - t
        h_try = stop_at - t if hit else h

        K[0] = f.ravel()
        yf = y.ravel()
        for s in range(1, 6):
            K[s] = fun(t + _C[s] * h_try, (yf + h_try * (_A[s] @ K[:s])).reshape(shape)).ravel()
        y_new = (yf + h_try * (_A[6] @ K[:6])).reshape(shape)
        K[6] = fun(t + h_try, y_new).ravel()
        err = h_try * (_E @ K)
        err_norm = _error_norm(err, yf, y_new.ravel(), rtol, atol)

        if not np.isfinite(err_norm):
            stats.rejected += 1
            h = h_try * MIN_FACTOR
            continue
        if err_norm > 1.0:
            stats.rejected += 1
            h = h_try * max(MIN_FACTOR, SAFETY * err_norm ** -0.2)
            continue

        stats.accepted += 1
        t = stop_at if hit else t + h_try
        f_new = K[6].reshape(shape).copy()
        if post_step is not None:
            projected = post_step(y_new)
            if projected is not y_new:
                y_new = projected
                f_new = fun(t, y_new)
        y, f = y_new, f_new
        factor = MAX_FACTOR if err_norm == 0 else min(MAX_FACTOR, max(MIN_FACTOR, SAFETY * err_norm ** -0.2))
        # a clamped step says nothing about the natural step size
        h = max(h, h_try * factor) if hit else h_try * factor
        stats.final_step = float(h_try)

        on_target = hit and ti < len(targets)
        if on_target:
            ti += 1
        verdict = check(t, y, f) if check is not None else None
        if on_target or record_steps or verdict is not None or t >= t_end:
            ts.append(t)
            ys.append(y.copy())
        if verdict is not None:
            status, message = verdict
            break
        if t >= t_end:
            break

    return Solution(np.array(ts), np.array(ys), status, message, stats)
