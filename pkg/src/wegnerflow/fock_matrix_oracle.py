"""
Independent matrix route: the Hamiltonian in a truncated number basis, its
dense eigenvalues, and the generic Wegner double-bracket flow
dH/dl = [[H_d, H], H] on Hermitian matrices.

Truncated matrices of unbounded Hamiltonians are accepted but their
eigenvalues do not approach the complex resonance spectrum; the cutoff turns
the inverted potential into a box.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .core_model import DivergenceReport, WegnerFlowError
from .flow_engine import IntegratorConfig
from .integrator import StepStats, dopri45

HERMITIAN_TOL = 1e-14
STALL_RATE = 1e-12
FLUSH_TINY = 1e-150


@dataclass(frozen=True, eq=False)
class DenseHermitianMatrix:
    entries: np.ndarray

    def __post_init__(self):
        a = np.array(self.entries, dtype=complex)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
            raise WegnerFlowError("matrix must be square with dim >= 1")
        if not np.all(np.isfinite(a)):
            raise WegnerFlowError("matrix entries must be finite")
        if hermiticity_defect(a) > HERMITIAN_TOL * max(1.0, np.linalg.norm(a)):
            raise WegnerFlowError("matrix is not Hermitian")
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.entries))

    def __eq__(self, other):
        return isinstance(other, DenseHermitianMatrix) and np.array_equal(self.entries, other.entries)

    def diagonal(self) -> np.ndarray:
        return np.real(np.diag(self.entries))

    def offdiag_norm(self) -> float:
        return offdiag_norm(self.entries)

    def sector(self, parity: int) -> "DenseHermitianMatrix":
        """Block on even (parity 0) or odd (parity 1) number states."""
        if parity not in (0, 1):
            raise WegnerFlowError("parity must be 0 or 1")
        idx = np.arange(parity, self.dim, 2)
        return DenseHermitianMatrix(self.entries[np.ix_(idx, idx)])


def hermiticity_defect(a: np.ndarray) -> float:
    return float(np.max(np.abs(a - a.conj().T))) if a.size else 0.0


def offdiag_norm(a: np.ndarray) -> float:
    return float(np.linalg.norm(a - np.diag(np.diag(a))))


def build_fock_matrix(omega0: float, lambda0: float, v0: float, N: int) -> DenseHermitianMatrix:
    """H on number states |0>..|N>, squeezing terms leaving the space dropped."""
    if N < 2:
        raise WegnerFlowError("Fock truncation needs N >= 2")
    n = np.arange(N + 1, dtype=float)
    h = np.diag(omega0 * n + v0).astype(complex)
    k = np.arange(N - 1, dtype=float)
    pair = lambda0 * np.sqrt((k + 1) * (k + 2))
    h[np.arange(2, N + 1), np.arange(N - 1)] = pair
    h[np.arange(N - 1), np.arange(2, N + 1)] = pair
    return DenseHermitianMatrix(h)


def hermitian_eigenvalues(m: DenseHermitianMatrix) -> np.ndarray:
    """Ascending eigenvalues (LAPACK ``heevd`` via numpy), residual-checked."""
    if not isinstance(m, DenseHermitianMatrix):
        m = DenseHermitianMatrix(m)
    w, vecs = np.linalg.eigh(m.entries)
    scale = max(np.linalg.norm(m.entries, 2), np.finfo(float).tiny)
    resid = np.linalg.norm(m.entries @ vecs - vecs * w, axis=0)
    if np.any(resid > 1e-10 * scale):
        raise ArithmeticError("eigenpair residual above 1e-10 ||M||")
    return w


def matrix_flow_rhs(m: Union[DenseHermitianMatrix, np.ndarray]) -> np.ndarray:
    """[[H_d, H], H]; since eta_ij = (h_ii - h_jj) h_ij no matrix product is needed for eta."""
    h = m.entries if isinstance(m, DenseHermitianMatrix) else m
    d = np.diag(h)
    eta = (d[:, None] - d[None, :]) * h
    return eta @ h - h @ eta


@dataclass(frozen=True)
class MatrixFlowDiagnostics:
    offdiag_norm: float
    spectrum_drift: float
    max_hermiticity_correction: float = 0.0


@dataclass(frozen=True, eq=False)
class MatrixTrajectory:
    l: np.ndarray
    matrices: np.ndarray  # (n_samples, dim, dim)
    step_l: np.ndarray  # every accepted step
    step_offdiag: np.ndarray
    step_drift: np.ndarray
    terminal: Union[DenseHermitianMatrix, DivergenceReport]
    stats: StepStats = field(default_factory=StepStats)

    @property
    def converged(self) -> bool:
        return isinstance(self.terminal, DenseHermitianMatrix)

    @property
    def final(self) -> DenseHermitianMatrix:
        return DenseHermitianMatrix(self.matrices[-1])


def integrate_matrix_flow(
    m0: DenseHermitianMatrix, cfg: Optional[IntegratorConfig] = None
) -> tuple[MatrixTrajectory, MatrixFlowDiagnostics]:
    """Run the double-bracket flow until the off-diagonal part is negligible.

    Convergence: ``offdiag_norm < convergence_tol * ||m0||_F``. Off-diagonal
    norm and spectral drift are tracked at every accepted step; the state is
    re-symmetrized after each step.
    """
    # atol 1e-12 lets truncation error outgrow the late, tiny off-diagonal decrements
    cfg = cfg or IntegratorConfig(atol=1e-13)
    if m0.dim > 64:
        raise WegnerFlowError("matrix flow is limited to dim <= 64")
    S = m0.norm
    eig0 = hermitian_eigenvalues(m0)
    dim = m0.dim
    if S == 0 or offdiag_norm(m0.entries) == 0:
        diag = MatrixFlowDiagnostics(0.0, 0.0)
        mats = np.array([m0.entries, m0.entries])
        return MatrixTrajectory(np.array([0.0, 0.0]), mats, np.array([0.0]), np.array([0.0]),
                                np.array([0.0]), m0), diag

    if cfg.l_max is not None:
        tau_end = cfg.l_max * S * S
    else:
        gap = np.min(np.diff(eig0)) / S if dim > 1 else 1.0
        tau_end = min(50.0 / min(1.0, gap * gap), 1e8) if gap > 0 else 1e8

    step_l, step_off, step_drift = [0.0], [offdiag_norm(m0.entries) / S], [0.0]
    corrections = [0.0]

    def fun(_t, y):
        return matrix_flow_rhs(y.reshape(dim, dim)).ravel()

    def project(y):
        a = y.reshape(dim, dim)
        corrections.append(hermiticity_defect(a) / 2)
        a = 0.5 * (a + a.conj().T)
        # fast-decaying entries would otherwise sink into subnormal arithmetic
        a[np.abs(a) < FLUSH_TINY] = 0.0
        return a.ravel()

    def check(t, y, f):
        a = y.reshape(dim, dim)
        off = offdiag_norm(a)
        step_l.append(t / (S * S))
        step_off.append(off)
        step_drift.append(float(np.max(np.abs(np.linalg.eigvalsh(a) * S - eig0))))
        if off < cfg.convergence_tol:
            return "converged", "off-diagonal norm below tolerance"
        if np.linalg.norm(f) < STALL_RATE * off:
            return "stalled", "degenerate stall"
        return None

    sol = dopri45(fun, (m0.entries / S).ravel(), 0.0, tau_end, rtol=cfg.rtol, atol=cfg.atol,
                  t_eval=np.geomspace(1e-3, tau_end, max(cfg.n_samples, 2)),
                  record_steps=cfg.record_steps, check=check, post_step=project,
                  max_steps=cfg.max_steps)

    mats = sol.y.reshape(-1, dim, dim) * S
    l = sol.t / (S * S)
    last = DenseHermitianMatrix(mats[-1])
    if sol.status == "converged":
        terminal = last
    elif sol.status == "stalled":
        terminal = DivergenceReport("degenerate stall", last, float(l[-1]))
    else:
        terminal = DivergenceReport("l_max reached before convergence", last, float(l[-1]))

    traj = MatrixTrajectory(l, mats, np.array(step_l), np.array(step_off) * S,
                            np.array(step_drift), terminal, sol.stats)
    diag = MatrixFlowDiagnostics(float(step_off[-1] * S), float(np.max(step_drift)),
                                 float(max(corrections) * S))
    return traj, diag


def format_entry(x: complex) -> str:
    x = complex(x)
    if x.imag == 0:
        return format(x.real, ".17g")
    return f"{x.real:.17g}{x.imag:+.17g}J"


def write_matrix_text(m: DenseHermitianMatrix) -> str:
    """First line ``dim``, then one whitespace-separated row per line."""
    rows = [str(m.dim)]
    rows += [" ".join(format_entry(x) for x in row) for row in m.entries]
    return "\n".join(rows) + "\n"


def read_matrix_text(text: str) -> DenseHermitianMatrix:
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise WegnerFlowError("empty matrix file")
    try:
        dim = int(lines[0])
        rows = [[complex(tok) for tok in ln.split()] for ln in lines[1:]]
    except ValueError as exc:
        raise WegnerFlowError(f"malformed matrix file: {exc}") from None
    if len(rows) != dim or any(len(r) != dim for r in rows):
        raise WegnerFlowError(f"expected {dim} rows of {dim} entries")
    return DenseHermitianMatrix(np.array(rows, dtype=complex))


def eigenvalue_error_vs_truncation(omega0: float, lambda0: float, v0: float, exact,
                                   sizes=(25, 50, 100, 200)) -> dict:
    """Max |E_k(N) - exact_k| over the supplied exact levels, per truncation N."""
    exact = np.asarray(exact, dtype=float)
    out = {}
    for N in sizes:
        w = hermitian_eigenvalues(build_fock_matrix(omega0, lambda0, v0, N))[: len(exact)]
        out[N] = float(np.max(np.abs(w - exact)))
    return out


def roundoff_floor(omega0: float, lambda0: float, v0: float, N: int) -> float:
    """100 eps ||H_N||_2, below which eigenvalue errors are rounding noise."""
    h = build_fock_matrix(omega0, lambda0, v0, N).entries
    return 100 * np.finfo(float).eps * float(np.linalg.norm(h, 2))

