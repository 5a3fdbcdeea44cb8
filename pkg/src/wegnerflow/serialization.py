"""
CSV / JSON encodings of trajectories, fixed points and spectra.

CSV floats use ``%.17g``; JSON floats use Python's shortest round-trip repr,
so both re-parse to the identical binary64 value. Complex numbers appear in
JSON as ``[re, im]`` pairs.
"""

from __future__ import annotations

import json
from typing import Any, Union

import numpy as np

from .core_model import (
    BranchLabel,
    DivergenceReport,
    FixedPoint,
    QuadraticCoefficients,
    Regime,
    Spectrum,
    Stability,
)
from .flow_engine import Direction, FlowTrajectory
from .integrator import StepStats

TRAJECTORY_COLUMNS = ("l", "re_omega", "im_omega", "re_lambda", "im_lambda", "re_v", "im_v",
                      "invariant_residual")


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def cpair(z: complex) -> list:
    z = complex(z)
    return [float(z.real), float(z.imag)]


def from_cpair(p) -> complex:
    return complex(float(p[0]), float(p[1]))


def trajectory_rows(traj: FlowTrajectory) -> list[list[str]]:
    rows = []
    for l, c, r in zip(traj.l, traj.coefficients, traj.invariant_residual):
        rows.append([fmt(l), fmt(c[0].real), fmt(c[0].imag), fmt(c[1].real), fmt(c[1].imag),
                     fmt(c[2].real), fmt(c[2].imag), fmt(r)])
    return rows


def trajectory_to_csv(traj: FlowTrajectory) -> str:
    lines = [",".join(TRAJECTORY_COLUMNS)]
    lines += [",".join(row) for row in trajectory_rows(traj)]
    return "\n".join(lines) + "\n"


def coefficients_to_dict(c: QuadraticCoefficients) -> dict:
    return {"omega": cpair(c.omega), "lambda": cpair(c.lam), "v": cpair(c.v)}


def coefficients_from_dict(d: dict) -> QuadraticCoefficients:
    return QuadraticCoefficients(from_cpair(d["omega"]), from_cpair(d["lambda"]),
                                 from_cpair(d["v"]))


def terminal_to_dict(t: Union[FixedPoint, DivergenceReport]) -> dict:
    if isinstance(t, FixedPoint):
        return {
            "type": "FixedPoint",
            "coefficients": coefficients_to_dict(t.coefficients),
            "stability": t.stability.value,
            "branch": t.branch.value,
            "snap_distance": t.snap_distance,
        }
    last = coefficients_to_dict(t.last) if isinstance(t.last, QuadraticCoefficients) else None
    return {"type": "DivergenceReport", "reason": t.reason, "last": last, "l": t.l}


def terminal_from_dict(d: dict) -> Union[FixedPoint, DivergenceReport]:
    if d["type"] == "FixedPoint":
        return FixedPoint(coefficients_from_dict(d["coefficients"]), Stability(d["stability"]),
                          BranchLabel(d["branch"]), d["snap_distance"])
    last = coefficients_from_dict(d["last"]) if d["last"] is not None else None
    return DivergenceReport(d["reason"], last, d["l"])


def trajectory_to_dict(traj: FlowTrajectory) -> dict:
    c = traj.coefficients
    return {
        "regime": traj.regime.value,
        "branch": traj.branch.value,
        "direction": traj.direction.value,
        "columns": list(TRAJECTORY_COLUMNS),
        "l": [float(x) for x in traj.l],
        "omega": [cpair(x) for x in c[:, 0]],
        "lambda": [cpair(x) for x in c[:, 1]],
        "v": [cpair(x) for x in c[:, 2]],
        "invariant_residual": [float(x) for x in traj.invariant_residual],
        "terminal": terminal_to_dict(traj.terminal),
        "integrator_stats": {"accepted": traj.stats.accepted, "rejected": traj.stats.rejected,
                             "final_step": float(traj.stats.final_step)},
    }


def trajectory_from_dict(d: dict) -> FlowTrajectory:
    coeffs = np.column_stack([
        np.array([from_cpair(p) for p in d[key]], dtype=complex)
        for key in ("omega", "lambda", "v")
    ])
    st = d["integrator_stats"]
    return FlowTrajectory(
        np.array(d["l"], dtype=float),
        coeffs,
        np.array(d["invariant_residual"], dtype=float),
        Regime(d["regime"]),
        BranchLabel(d["branch"]),
        terminal_from_dict(d["terminal"]),
        StepStats(st["accepted"], st["rejected"], st["final_step"]),
        Direction(d["direction"]),
    )


def spectrum_to_dict(s: Spectrum) -> dict:
    return {
        "kind": s.kind.value,
        "branch": s.branch.value,
        "generators": {k: float(v) for k, v in s.generators.items()},
        "levels": [cpair(e) for e in s.levels],
    }


def dumps(obj: Any) -> str:
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"
