"""
Closed-form diagonalization of the quadratic Hamiltonian.

Bounded case: a Bogoliubov rotation a = b cosh(theta) - b^dag sinh(theta) with
tanh(2 theta) = 2 lambda0 / omega0 gives H = Omega b^dag b + kappa + v0.
Unbounded case: the complex diagonal form +-i gamma (a^dag a + 1/2) + v_inf
with gamma = sqrt(4 lambda0^2 - omega0^2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

from .core_model import (
    BranchLabel,
    DivergenceReport,
    FixedPoint,
    QuadraticCoefficients,
    Regime,
    RegimeError,
    Spectrum,
    SpectrumKind,
    WegnerFlowError,
    classify_regime,
)


@dataclass(frozen=True)
class BogoliubovSolution:
    theta: float
    Omega: float
    kappa: float

    def endpoint(self, v0: float = 0.0) -> QuadraticCoefficients:
        """Where the unitary flow must end: (Omega, 0, kappa + v0)."""
        return QuadraticCoefficients(self.Omega, 0.0, self.kappa + v0)


def _physical(omega0, lambda0, v0=0.0) -> QuadraticCoefficients:
    return QuadraticCoefficients.physical(omega0, lambda0, v0)


def solve_theta(omega0: float, lambda0: float) -> float:
    """Rotation angle theta = arctanh(2 lambda0 / omega0) / 2."""
    if not (omega0 != 0 and abs(2 * lambda0) < abs(omega0)):
        raise RegimeError("Bogoliubov angle undefined outside bounded regime")
    return 0.5 * math.atanh(2 * lambda0 / omega0)


def theta_residual(omega0: float, lambda0: float, theta: float) -> float:
    """|lambda0/omega0 - sinh cosh / (sinh^2 + cosh^2)| at ``theta``."""
    sh, ch = math.sinh(theta), math.cosh(theta)
    return abs(lambda0 / omega0 - sh * ch / (sh * sh + ch * ch))


def bogoliubov_diagonal(omega0: float, lambda0: float, v0: float = 0.0) -> BogoliubovSolution:
    theta = solve_theta(omega0, lambda0)
    sh, ch = math.sinh(theta), math.cosh(theta)
    denom = sh * sh + ch * ch
    Omega = omega0 / denom
    kappa = -omega0 * sh * sh / denom
    return BogoliubovSolution(theta, Omega, kappa)


def omega_closed_form(omega0: float, lambda0: float) -> float:
    """sign(omega0) * sqrt(omega0^2 - 4 lambda0^2), the flow endpoint formula."""
    return math.copysign(math.sqrt(omega0 * omega0 - 4 * lambda0 * lambda0), omega0)


def bounded_spectrum(omega0: float, lambda0: float, v0: float, n_max: int) -> Spectrum:
    c = _physical(omega0, lambda0, v0)
    regime = classify_regime(c)
    if n_max < 0:
        raise WegnerFlowError("n_max must be >= 0")
    if regime is Regime.FREE:
        Omega, kappa = float(omega0), 0.0
    elif regime is Regime.BOUNDED:
        sol = bogoliubov_diagonal(omega0, lambda0, v0)
        Omega, kappa = sol.Omega, sol.kappa
    else:
        raise RegimeError(f"bounded spectrum requested for {regime.value} parameters")
    levels = tuple(complex(Omega * n + kappa + v0) for n in range(n_max + 1))
    return Spectrum(BranchLabel.ZERO, SpectrumKind.REAL,
                    {"Omega": Omega, "kappa": kappa, "v0": float(v0)}, levels)


def decay_width(omega0: float, lambda0: float) -> float:
    return math.sqrt(4 * lambda0 * lambda0 - omega0 * omega0)


def complex_spectrum(omega0: float, lambda0: float, v0: float, branch: BranchLabel,
                     n_max: int) -> Spectrum:
    """Levels E_n = +-i gamma (n + 1/2) + v_inf, sign taken from ``branch``."""
    regime = classify_regime(_physical(omega0, lambda0, v0))
    if regime is not Regime.UNBOUNDED:
        raise RegimeError(f"complex spectrum requested for {regime.value} parameters")
    if branch is BranchLabel.ZERO:
        raise WegnerFlowError("complex spectrum needs branch Plus or Minus")
    if n_max < 0:
        raise WegnerFlowError("n_max must be >= 0")
    gamma = decay_width(omega0, lambda0)
    v_inf = v0 - omega0 / 2
    s = branch.sign
    levels = tuple(complex(v_inf, s * gamma * (n + 0.5)) for n in range(n_max + 1))
    return Spectrum(branch, SpectrumKind.COMPLEX, {"gamma": gamma, "v_inf": v_inf}, levels)


def spectrum(omega0: float, lambda0: float, v0: float, n_max: int,
             branch: BranchLabel = BranchLabel.PLUS) -> Spectrum:
    """Regime-appropriate spectrum; ``branch`` only matters when unbounded."""
    regime = classify_regime(_physical(omega0, lambda0, v0))
    if regime is Regime.UNBOUNDED:
        return complex_spectrum(omega0, lambda0, v0, branch, n_max)
    return bounded_spectrum(omega0, lambda0, v0, n_max)


def levels_from_fixed_point(fp: FixedPoint, n_max: int) -> list[complex]:
    """Read E_n = omega* n + v* off a diagonal (lam* = 0) endpoint."""
    c = fp.coefficients
    return [c.omega * n + c.v for n in range(n_max + 1)]


@dataclass(frozen=True)
class Equivalence:
    omega_error: float
    v_error: float

    @property
    def max_error(self) -> float:
        return max(self.omega_error, self.v_error)


def bogoliubov_equivalence(c0: QuadraticCoefficients,
                           endpoint: Union[FixedPoint, DivergenceReport, QuadraticCoefficients]
                           ) -> Equivalence:
    """Distance of a flow endpoint from (Omega, kappa + v0)."""
    c = _endpoint(endpoint)
    w0, g0, v0 = c0.omega.real, c0.lam.real, c0.v.real
    sol = bogoliubov_diagonal(w0, g0, v0)
    return Equivalence(abs(c.omega - sol.Omega), abs(c.v - (sol.kappa + v0)))


def complex_equivalence(c0: QuadraticCoefficients,
                        endpoint: Union[FixedPoint, DivergenceReport, QuadraticCoefficients],
                        branch: BranchLabel) -> Equivalence:
    """Distance of an unstable endpoint from (+-i gamma, v_inf +- i gamma/2)."""
    c = _endpoint(endpoint)
    w0, g0, v0 = c0.omega.real, c0.lam.real, c0.v.real
    gamma = decay_width(w0, g0)
    s = branch.sign
    return Equivalence(abs(c.omega - 1j * s * gamma),
                       abs(c.v - complex(v0 - w0 / 2, s * gamma / 2)))


def _endpoint(e) -> QuadraticCoefficients:
    if isinstance(e, QuadraticCoefficients):
        return e
    if isinstance(e, FixedPoint):
        return e.coefficients
    return e.last
