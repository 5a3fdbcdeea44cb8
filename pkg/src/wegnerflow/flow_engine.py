"""
Coefficient-level Wegner flow for the quadratic bosonic Hamiltonian.

The generator eta = [H_d, H] of the flow closes on the quadratic ansatz, and
the flow reduces to three coupled polynomial ODEs for (omega, lam, v). This
module integrates them in two charts:

* directly, for the unitary flow from a physical initial condition;
* in the hyperbolic chart ``omega = 2 L sinh z, lam = s L cosh z`` of an
  unbounded flow surface (``omega^2 - 4 lam^2 = -4 L^2``), where complex ``z``
  gives the generalized, non-unitary flows. Backward integration from a small
  complex shift of the attractor lands on the unstable points ``z = +-i pi/2``,
  whose coefficients carry the complex spectrum.

Internally the flow parameter is rescaled to ``tau = l * E**2`` with ``E`` the
initial energy scale; samples are always reported in physical ``l``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple, Optional, Sequence, Union

import numpy as np

from .core_model import (
    BranchLabel,
    ConvergenceError,
    DivergenceReport,
    FixedPoint,
    QuadraticCoefficients,
    Regime,
    RegimeError,
    Stability,
    WegnerFlowError,
    classify_regime,
    sign,
)
from .integrator import StepStats, dopri45


class Direction(Enum):
    FORWARD = "forward"
    BACKWARD = "backward"


@dataclass(frozen=True)
class IntegratorConfig:
    rtol: float = 1e-10
    atol: float = 1e-12
    l_max: Optional[float] = None  # None: chosen from the attractor's convergence rate
    convergence_tol: float = 1e-10
    divergence_z: float = 30.0
    divergence_coeff: float = 1e12
    max_steps: int = 1_000_000
    n_samples: int = 200
    record_steps: bool = False

    def __post_init__(self):
        for name in ("rtol", "atol", "convergence_tol", "divergence_z", "divergence_coeff"):
            if not getattr(self, name) > 0:
                raise WegnerFlowError(f"{name} must be positive")
        if self.rtol < 10 * np.finfo(float).eps:
            raise WegnerFlowError("rtol below 10 * machine epsilon")
        if self.l_max is not None and not self.l_max > 0:
            raise WegnerFlowError("l_max must be positive")
        if self.max_steps < 1 or self.n_samples < 0:
            raise WegnerFlowError("max_steps must be >= 1 and n_samples >= 0")


@dataclass(frozen=True)
class FlowSample:
    l: float
    coefficients: QuadraticCoefficients
    invariant_residual: float


@dataclass(frozen=True, eq=False)
class FlowTrajectory:
    """Samples of one integration run, stored column-wise.

    ``coefficients`` has shape ``(n, 3)`` holding (omega, lam, v) per row.
    """

    l: np.ndarray
    coefficients: np.ndarray
    invariant_residual: np.ndarray
    regime: Regime
    branch: BranchLabel
    terminal: Union[FixedPoint, DivergenceReport]
    stats: StepStats = field(default_factory=StepStats)
    direction: Direction = Direction.FORWARD

    def __len__(self):
        return len(self.l)

    def __eq__(self, other):
        if not isinstance(other, FlowTrajectory):
            return NotImplemented
        return (np.array_equal(self.l, other.l)
                and np.array_equal(self.coefficients, other.coefficients)
                and np.array_equal(self.invariant_residual, other.invariant_residual)
                and (self.regime, self.branch, self.terminal, self.stats, self.direction)
                == (other.regime, other.branch, other.terminal, other.stats, other.direction))

    @property
    def samples(self) -> list[FlowSample]:
        return [
            FlowSample(float(l), QuadraticCoefficients.from_array(c), float(r))
            for l, c, r in zip(self.l, self.coefficients, self.invariant_residual)
        ]

    @property
    def last(self) -> QuadraticCoefficients:
        return QuadraticCoefficients.from_array(self.coefficients[-1])

    @property
    def converged(self) -> bool:
        return isinstance(self.terminal, FixedPoint)

    @property
    def omega(self) -> np.ndarray:
        return self.coefficients[:, 0]

    @property
    def lam(self) -> np.ndarray:
        return self.coefficients[:, 1]

    @property
    def v(self) -> np.ndarray:
        return self.coefficients[:, 2]


def _rhs(omega, lam):
    lam2 = lam * lam
    return -16 * omega * lam2, -4 * omega * omega * lam, -8 * omega * lam2


def flow_rhs(c: QuadraticCoefficients) -> QuadraticCoefficients:
    """Derivative (d omega/dl, d lam/dl, d v/dl); valid for complex coefficients."""
    return QuadraticCoefficients(*_rhs(c.omega, c.lam))


def generator_coefficient(c: QuadraticCoefficients) -> complex:
    """Coefficient ``g`` in ``eta = g (a^dag^2 - a^2)``.

    From [omega a^dag a, lam (a^dag^2 + a^2)] = 2 omega lam (a^dag^2 - a^2).
    """
    return 2 * c.omega * c.lam


def invariant_residual(omega, lam, invariant0) -> np.ndarray:
    inv = omega * omega - 4 * lam * lam
    return np.abs(inv - invariant0) / max(1.0, abs(invariant0))


def predict_fixed_point(c0: QuadraticCoefficients) -> FixedPoint:
    """Analytic endpoint of the forward unitary flow from a physical point."""
    regime = classify_regime(c0)
    w, g, v = c0.omega.real, c0.lam.real, c0.v.real
    if regime is Regime.DEGENERATE:
        raise RegimeError("flow is identically zero")
    if regime is Regime.FREE:
        return FixedPoint(c0, Stability.DEGENERATE)
    if regime is Regime.CRITICAL:
        return FixedPoint(QuadraticCoefficients(0.0, 0.0, v - w / 2), Stability.DEGENERATE)
    if regime is Regime.BOUNDED:
        w_inf = sign(w) * math.sqrt(w * w - 4 * g * g)
        return FixedPoint(QuadraticCoefficients(w_inf, 0.0, v + (w_inf - w) / 2),
                          Stability.ATTRACTOR)
    g_inf = sign(g) * math.sqrt(g * g - w * w / 4)
    return FixedPoint(QuadraticCoefficients(0.0, g_inf, v - w / 2), Stability.ATTRACTOR)


def attractor_rate(c0: QuadraticCoefficients) -> float:
    """Linearized approach rate to the attractor, in units of 1/l.

    Bounded flows decay as exp(-4 Omega^2 l), unbounded ones as exp(-16 L^2 l);
    both equal 4 |omega0^2 - 4 lam0^2|.
    """
    return 4 * abs(c0.invariant)


def _tau_max(c0: QuadraticCoefficients, scale: float) -> float:
    rate = attractor_rate(c0) / scale ** 2
    if rate <= 0 or classify_regime(c0) is Regime.CRITICAL:
        return 50.0
    return 50.0 / min(1.0, rate)


def _sample_taus(tau_max: float, n: int) -> np.ndarray:
    if n <= 0:
        return np.empty(0)
    return np.geomspace(1e-3, tau_max, n) if tau_max > 1e-3 else np.array([tau_max])


def integrate_unitary(
    c0: QuadraticCoefficients,
    cfg: Optional[IntegratorConfig] = None,
    sample_l: Optional[Sequence[float]] = None,
) -> FlowTrajectory:
    """Integrate the real unitary flow forward from l = 0.

    Stops once the scaled flow velocity drops below ``cfg.convergence_tol`` and
    snaps to the analytic fixed point when within 10 * convergence_tol.
    ``sample_l`` adds extra sample points (physical l) that are hit exactly.
    """
    cfg = cfg or IntegratorConfig()
    if not c0.is_real:
        raise WegnerFlowError("unitary flow requires a physical (real) initial condition")
    regime = classify_regime(c0)
    E = c0.energy_scale or 1.0
    w0, g0, v0 = c0.omega, c0.lam, c0.v
    inv0 = c0.invariant

    tau_end = cfg.l_max * E * E if cfg.l_max is not None else _tau_max(c0, E)
    targets = list(_sample_taus(tau_end, cfg.n_samples))
    if sample_l is not None:
        targets += [float(l) * E * E for l in sample_l]

    # velocity ~ rate * distance near the attractor; scaling the threshold by the
    # (scaled) rate keeps the arrival point inside the snap band near the separatrix
    rate = attractor_rate(c0) / (E * E)
    arrive = cfg.convergence_tol * (min(1.0, rate) if rate > 0 else 1.0)

    def fun(_t, y):
        return np.array(_rhs(y[0], y[1]), dtype=complex)

    def check(_t, y, f):
        if max(abs(y[0]), abs(y[1])) * E > cfg.divergence_coeff:
            return "diverged", "coefficient magnitude exceeded divergence guard"
        if np.linalg.norm(f) <= arrive:
            return "converged", "flow velocity below convergence tolerance"
        return None

    y0 = np.array([w0 / E, g0 / E, 0.0], dtype=complex)
    sol = dopri45(fun, y0, 0.0, tau_end, rtol=cfg.rtol, atol=cfg.atol, t_eval=targets,
                  record_steps=cfg.record_steps, check=check, max_steps=cfg.max_steps)

    coeffs = sol.y * E
    coeffs[:, 2] += v0
    l = sol.t / (E * E)
    resid = invariant_residual(coeffs[:, 0], coeffs[:, 1], inv0)
    last = QuadraticCoefficients.from_array(coeffs[-1])

    if sol.status == "converged":
        if regime is Regime.DEGENERATE:
            terminal = FixedPoint(last, Stability.DEGENERATE)
        else:
            terminal = _snap(last, predict_fixed_point(c0), E, cfg)
    elif sol.status == "diverged":
        terminal = DivergenceReport(sol.message, last, float(l[-1]))
    elif regime is Regime.CRITICAL:
        terminal = DivergenceReport("algebraic convergence at separatrix", last, float(l[-1]))
    else:
        terminal = DivergenceReport("l_max reached before convergence", last, float(l[-1]))

    return FlowTrajectory(l, coeffs, resid, regime, BranchLabel.ZERO, terminal, sol.stats,
                          Direction.FORWARD)


def _snap(raw: QuadraticCoefficients, predicted: FixedPoint, scale: float,
          cfg: IntegratorConfig) -> FixedPoint:
    dist = raw.distance(predicted.coefficients)
    if dist <= 10 * cfg.convergence_tol * scale:
        return FixedPoint(predicted.coefficients, predicted.stability, predicted.branch, dist)
    return FixedPoint(raw, predicted.stability, predicted.branch, None)


# ---------------------------------------------------------------------------
# hyperbolic chart of the unbounded flow surface


@dataclass(frozen=True)
class HyperbolicState:
    """Point ``omega = 2 L sinh z, lam = s L cosh z`` with ``L = lambda_inf > 0``.

    ``lambda_sign`` (s = +-1) is the sign of the attractor amplitude, so negative
    lambda0 stays inside the principal strip ``|Im z| <= pi/2``.
    """

    z: complex
    lambda_inf: float
    lambda_sign: int = 1

    def __post_init__(self):
        object.__setattr__(self, "z", complex(self.z))
        if not self.lambda_inf > 0:
            raise WegnerFlowError("lambda_inf must be positive")
        if self.lambda_sign not in (1, -1):
            raise WegnerFlowError("lambda_sign must be +1 or -1")
        if abs(self.z.imag) > math.pi / 2 + 1e-12:
            raise WegnerFlowError("z outside the principal strip |Im z| <= pi/2")

    @property
    def xi(self) -> float:
        return self.z.real

    @property
    def phi(self) -> float:
        return self.z.imag

    def coefficients(self, v_anchor: tuple = (0.0, 0.0)) -> QuadraticCoefficients:
        """Coefficients at this point; ``v_anchor = (v0, omega0)`` slaves v to omega."""
        return from_hyperbolic(self, v_anchor)


def from_hyperbolic(s: HyperbolicState, v_anchor: tuple = (0.0, 0.0)) -> QuadraticCoefficients:
    v0, w0 = v_anchor
    L = s.lambda_inf
    omega = 2 * L * cmath.sinh(s.z)
    return QuadraticCoefficients(omega, s.lambda_sign * L * cmath.cosh(s.z),
                                 v0 + (omega - w0) / 2)


def to_hyperbolic(c: QuadraticCoefficients, rtol: float = 1e-9) -> HyperbolicState:
    """Chart coordinates of a point on an unbounded (negative-invariant) flow surface."""
    inv = c.invariant
    scale = max(abs(c.omega) ** 2, 4 * abs(c.lam) ** 2)
    if scale == 0 or not (inv.real < 0 and abs(inv.imag) <= rtol * scale):
        raise WegnerFlowError("not on a generalized-flow surface")
    L = math.sqrt(-inv.real / 4)
    s = -1 if c.lam.real < 0 else 1
    # e^z = sinh z + cosh z; Re(e^z) >= 0 exactly on the principal strip
    z = cmath.log((c.omega / 2 + s * c.lam) / L)
    if abs(z.imag) > math.pi / 2:
        z = complex(z.real, math.copysign(math.pi / 2, z.imag))
    return HyperbolicState(z, L, s)


def z_rhs(s: HyperbolicState) -> complex:
    """dz/dl = -8 L^2 sinh 2z (the chart image of the coefficient flow)."""
    return -8 * s.lambda_inf ** 2 * cmath.sinh(2 * s.z)


def closed_form_ratio(c0: QuadraticCoefficients, l: float) -> complex:
    """Exact ``omega(l) / (2 lam(l))`` along the flow from ``c0``.

    The ratio obeys r' = 4 r (omega^2 - 4 lam^2) with a conserved bracket, so
    r(l) = r(0) exp(4 (omega0^2 - 4 lam0^2) l). On an unbounded surface this is
    tanh z(l) = tanh z(0) exp(-16 L^2 l); on a bounded one the reciprocal
    2 lam/omega decays as exp(-4 Omega^2 l). With lam0 = 0 the ratio is a pole
    at every l and ``inf`` is returned.
    """
    if c0.omega == 0 and c0.lam == 0:
        raise RegimeError("flow is identically zero")
    if c0.lam == 0:
        return complex(math.inf, 0.0)
    return c0.omega / (2 * c0.lam) * cmath.exp(4 * c0.invariant * l)


_CHART_FIXED_POINTS = (
    (0j, Stability.ATTRACTOR, BranchLabel.ZERO),
    (1j * math.pi / 2, Stability.UNSTABLE, BranchLabel.PLUS),
    (-1j * math.pi / 2, Stability.UNSTABLE, BranchLabel.MINUS),
)


def chart_fixed_point(z: complex, lambda_inf: float, lambda_sign: int,
                      v_anchor: tuple) -> FixedPoint:
    """Exact fixed point of the chart flow nearest to ``z``."""
    z_star, stab, branch = min(_CHART_FIXED_POINTS, key=lambda p: abs(z - p[0]))
    v0, w0 = v_anchor
    L = lambda_inf
    if branch is BranchLabel.ZERO:
        coeffs = QuadraticCoefficients(0.0, lambda_sign * L, v0 - w0 / 2)
    else:
        omega = complex(0.0, branch.sign * 2 * L)
        coeffs = QuadraticCoefficients(omega, 0.0, v0 + (omega - w0) / 2)
    return FixedPoint(coeffs, stab, branch)


def integrate_generalized(
    s0: HyperbolicState,
    v_anchor: tuple,
    direction: Direction = Direction.FORWARD,
    cfg: Optional[IntegratorConfig] = None,
    sample_l: Optional[Sequence[float]] = None,
) -> FlowTrajectory:
    """Integrate the complex chart flow from ``s0`` (at l = 0) in ``direction``.

    Forward runs end on the attractor z = 0; backward runs from Im z != 0 end on
    z = +-i pi/2, and from real z escape along the real axis until the
    divergence guard trips. ``sample_l`` is in physical l (negative when
    backward).
    """
    cfg = cfg or IntegratorConfig()
    L, sgn = s0.lambda_inf, s0.lambda_sign
    E = 2 * L
    k = (8 * L * L / (E * E)) * (1 if direction is Direction.BACKWARD else -1)
    dirn = -1.0 if direction is Direction.BACKWARD else 1.0

    if cfg.l_max is not None:
        tau_end = cfg.l_max * E * E
    else:
        # linear rate 16 L^2 at every chart fixed point, i.e. 4 in tau units
        tau_end = 50.0
    targets = list(_sample_taus(tau_end, cfg.n_samples))
    if sample_l is not None:
        targets += [dirn * float(l) * E * E for l in sample_l]

    def fun(_t, y):
        return k * np.sinh(2 * y)

    def check(_t, y, f):
        z = complex(y[0])
        if abs(z) > cfg.divergence_z or 2 * L * np.cosh(abs(z.real)) > cfg.divergence_coeff:
            return "diverged", "divergence guard tripped"
        if abs(f[0]) < cfg.convergence_tol:
            return "converged", "flow velocity below convergence tolerance"
        return None

    sol = dopri45(fun, np.array([s0.z], dtype=complex), 0.0, tau_end, rtol=cfg.rtol,
                  atol=cfg.atol, t_eval=targets, record_steps=cfg.record_steps, check=check,
                  max_steps=cfg.max_steps)

    z = sol.y[:, 0]
    v0, w0 = v_anchor
    omega = 2 * L * np.sinh(z)
    coeffs = np.column_stack([omega, sgn * L * np.cosh(z), v0 + (omega - w0) / 2])
    l = dirn * sol.t / (E * E)
    resid = invariant_residual(coeffs[:, 0], coeffs[:, 1], -4 * L * L)
    last = QuadraticCoefficients.from_array(coeffs[-1])

    if s0.z.imag > 0:
        branch = BranchLabel.PLUS
    elif s0.z.imag < 0:
        branch = BranchLabel.MINUS
    else:
        branch = BranchLabel.ZERO

    if sol.status == "converged":
        fp = chart_fixed_point(complex(z[-1]), L, sgn, v_anchor)
        terminal = _snap(last, fp, E, cfg)
    else:
        reason = sol.message if sol.status == "diverged" else "l_max reached before convergence"
        terminal = DivergenceReport(reason, last, float(l[-1]))

    return FlowTrajectory(l, coeffs, resid, Regime.UNBOUNDED, branch, terminal, sol.stats,
                          direction)


class UnstablePoints(NamedTuple):
    plus: FixedPoint
    minus: FixedPoint
    plus_trajectory: FlowTrajectory
    minus_trajectory: FlowTrajectory


def _is_real_direction(alpha: float) -> bool:
    return abs(math.remainder(alpha, math.pi)) < 1e-15


def find_unstable_points(
    c0: QuadraticCoefficients,
    epsilon: float = 1e-6,
    alpha: float = math.pi / 2,
    cfg: Optional[IntegratorConfig] = None,
) -> UnstablePoints:
    """Locate the two unstable fixed points of an unbounded Hamiltonian.

    First the unitary flow is run forward to its attractor (0, L, v_inf). Then
    the chart points z = epsilon * exp(+-i alpha) next to the attractor are
    integrated backward; they are drawn to +-i pi/2, i.e. to
    (omega, lam, v) = (+-2iL, 0, v_inf +- iL). ``tan(alpha)`` plays the role of
    the direction number Im z / Re z of the shift.
    """
    cfg = cfg or IntegratorConfig()
    regime = classify_regime(c0)
    if regime is not Regime.UNBOUNDED:
        raise RegimeError("no unstable fixed points on this flow surface")
    if not epsilon > 0:
        raise WegnerFlowError("epsilon must be positive")
    if _is_real_direction(alpha):
        raise WegnerFlowError("real shift recovers H^(0), backward flow diverges")

    forward = integrate_unitary(c0, cfg)
    if not forward.converged:
        raise ConvergenceError(f"unitary flow did not reach its attractor: {forward.terminal.reason}")
    lam_inf = forward.terminal.coefficients.lam.real
    L, sgn = abs(lam_inf), -1 if lam_inf < 0 else 1
    anchor = (c0.v.real, c0.omega.real)

    runs = []
    for a in (alpha, -alpha):
        seed = HyperbolicState(epsilon * cmath.exp(1j * a), L, sgn)
        traj = integrate_generalized(seed, anchor, Direction.BACKWARD, cfg)
        if not traj.converged:
            raise ConvergenceError(f"backward flow did not settle: {traj.terminal.reason}")
        runs.append(traj)
    runs.sort(key=lambda t: -t.terminal.coefficients.omega.imag)
    plus, minus = runs
    return UnstablePoints(plus.terminal, minus.terminal, plus, minus)
