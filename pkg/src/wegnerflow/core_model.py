"""
Shared value types for the quadratic bosonic Hamiltonian

    H = omega * a^dag a + lam * (a^dag^2 + a^2) + v

and the regime classification of its physical (real) initial conditions.
All energies are dimensionless (hbar = 1).
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from enum import Enum
from typing import Any, Optional, Sequence

import numpy as np


class WegnerFlowError(ValueError):
    """Base class for input/domain errors raised by this package."""


class RegimeError(WegnerFlowError):
    """An operation was requested outside the regime where it is defined."""


class ConvergenceError(RuntimeError):
    """The integrator exhausted its step budget."""


class Regime(Enum):
    BOUNDED = "Bounded"
    UNBOUNDED = "Unbounded"
    CRITICAL = "Critical"
    FREE = "Free"
    DEGENERATE = "Degenerate"


class BranchLabel(Enum):
    PLUS = "+"
    MINUS = "-"
    ZERO = "0"

    @property
    def sign(self) -> int:
        return {"+": 1, "-": -1, "0": 0}[self.value]

    @classmethod
    def parse(cls, text: str) -> "BranchLabel":
        aliases = {
            "+": cls.PLUS, "plus": cls.PLUS, "p": cls.PLUS,
            "-": cls.MINUS, "minus": cls.MINUS, "m": cls.MINUS,
            "0": cls.ZERO, "zero": cls.ZERO,
        }
        try:
            return aliases[text.strip().lower()]
        except KeyError:
            raise WegnerFlowError(f"unknown branch label {text!r}") from None


class Stability(Enum):
    ATTRACTOR = "Attractor"
    UNSTABLE = "Unstable"
    DEGENERATE = "Degenerate"


class SpectrumKind(Enum):
    REAL = "Real"
    COMPLEX = "Complex"


@dataclass(frozen=True)
class QuadraticCoefficients:
    """Point (omega, lam, v) of the quadratic Hamiltonian, complex in general."""

    omega: complex
    lam: complex
    v: complex = 0.0

    def __post_init__(self):
        for name in ("omega", "lam", "v"):
            value = complex(getattr(self, name))
            if not cmath.isfinite(value):
                raise WegnerFlowError(f"coefficient {name} is not finite: {value}")
            object.__setattr__(self, name, value)

    @classmethod
    def physical(cls, omega0: float, lambda0: float, v0: float = 0.0) -> "QuadraticCoefficients":
        """Real initial condition; rejects anything with an imaginary part."""
        for x in (omega0, lambda0, v0):
            if isinstance(x, complex) and x.imag != 0:
                raise WegnerFlowError("physical initial conditions must be real")
        return cls(complex(float(np.real(omega0))), complex(float(np.real(lambda0))),
                   complex(float(np.real(v0))))

    @classmethod
    def from_array(cls, arr: Sequence[complex]) -> "QuadraticCoefficients":
        return cls(complex(arr[0]), complex(arr[1]), complex(arr[2]))

    def as_array(self) -> np.ndarray:
        return np.array([self.omega, self.lam, self.v], dtype=complex)

    @property
    def is_real(self) -> bool:
        return self.omega.imag == 0 and self.lam.imag == 0 and self.v.imag == 0

    @property
    def invariant(self) -> complex:
        """omega^2 - (2 lam)^2, conserved along every flow."""
        return self.omega ** 2 - 4 * self.lam ** 2

    @property
    def energy_scale(self) -> float:
        return max(abs(self.omega), 2 * abs(self.lam))

    def conj(self) -> "QuadraticCoefficients":
        return QuadraticCoefficients(self.omega.conjugate(), self.lam.conjugate(),
                                     self.v.conjugate())

    def distance(self, other: "QuadraticCoefficients") -> float:
        return float(np.max(np.abs(self.as_array() - other.as_array())))


@dataclass(frozen=True)
class FixedPoint:
    coefficients: QuadraticCoefficients
    stability: Stability
    branch: BranchLabel = BranchLabel.ZERO
    # distance moved when a numerical endpoint was replaced by the analytic point
    snap_distance: Optional[float] = None

    def residual(self) -> float:
        """Norm of the coefficient flow at this point; zero for a true fixed point."""
        w, g = self.coefficients.omega, self.coefficients.lam
        return float(np.linalg.norm([16 * w * g * g, 4 * w * w * g, 8 * w * g * g]))


@dataclass(frozen=True)
class DivergenceReport:
    """Why a run stopped short of a fixed point, with its last state."""

    reason: str
    last: Any  # QuadraticCoefficients, or a matrix for the matrix flow
    l: float


@dataclass(frozen=True)
class Spectrum:
    """Equally spaced levels E_n, n = 0..n_max, with their generating parameters.

    For ``kind == REAL`` the generators are ``{"Omega", "kappa", "v0"}``; for
    ``kind == COMPLEX`` they are ``{"gamma", "v_inf"}`` with gamma > 0 and the sign
    of the imaginary spacing carried by ``branch``.
    """

    branch: BranchLabel
    kind: SpectrumKind
    generators: dict
    levels: tuple

    @property
    def spacing(self) -> complex:
        if self.kind is SpectrumKind.REAL:
            return complex(self.generators["Omega"])
        return complex(0.0, self.branch.sign * self.generators["gamma"])

    def as_array(self) -> np.ndarray:
        return np.array(self.levels, dtype=complex)


CRITICAL_RTOL = 1e-12


def classify_regime(c: QuadraticCoefficients, rtol: float = CRITICAL_RTOL) -> Regime:
    """Classify a physical initial condition by comparing |2 lambda0| with |omega0|.

    Points with ``| |2 lambda0| - |omega0| | <= rtol * max(|2 lambda0|, |omega0|)``
    are reported as ``Critical``; ``omega0 == 0, lambda0 != 0`` is ``Unbounded``.
    """
    if not c.is_real:
        raise WegnerFlowError("regime classification requires physical coefficients")
    w = abs(c.omega.real)
    g2 = 2 * abs(c.lam.real)
    if w == 0 and g2 == 0:
        return Regime.DEGENERATE
    if g2 == 0:
        return Regime.FREE
    if abs(g2 - w) <= rtol * max(g2, w):
        return Regime.CRITICAL
    return Regime.BOUNDED if g2 < w else Regime.UNBOUNDED


def sign(x: float) -> float:
    return math.copysign(1.0, x) if x != 0 else 1.0
