"""Saddle-point and Schur-complement solvers.

The block system is

    [ A   B^T ] [x]   [f]
    [ B   -D  ] [y] = [g]

with A symmetric positive semidefinite and D either absent (zero) or a
positive diagonal.  ``direct`` factorises the whole block matrix with
SuperLU; ``minres`` runs preconditioned MINRES with the block diagonal
preconditioner diag(A + B^T M^-1 B, M), where M is a positive diagonal
(the given D, or a caller-provided stand-in) and the first block is
approximated by algebraic multigrid.  ``schur_pcg`` eliminates y and runs
CG on A + B^T D^-1 B.
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

log = logging.getLogger(__name__)

METHODS = ("direct", "minres", "schur_pcg")


class SolverError(RuntimeError):
    """Iteration limit exceeded or factorisation breakdown."""


@dataclass
class SolverConfig:
    method: str = "direct"
    tol: float = 1e-10
    maxiter: int = 20000
    preconditioner: str = "amg"  # "amg" | "jacobi"

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        if not self.tol > 0:
            raise ValueError("tolerance must be positive")
        if self.preconditioner not in ("amg", "jacobi"):
            raise ValueError(f"unknown preconditioner {self.preconditioner!r}")


@dataclass
class SaddleSystem:
    A: sp.spmatrix
    B: sp.spmatrix
    f: np.ndarray
    g: np.ndarray | None = None
    D: np.ndarray | None = None  # diagonal entries of the (2,2) block, sign: -D
    #: positive diagonal used by the iterative path when D is absent
    M: np.ndarray | None = None

    def __post_init__(self):
        self.A = sp.csr_matrix(self.A)
        self.B = sp.csr_matrix(self.B)
        n, m = self.A.shape[0], self.B.shape[0]
        if self.A.shape != (n, n) or self.B.shape[1] != n:
            raise ValueError("inconsistent block shapes")
        if self.g is None:
            self.g = np.zeros(m)
        if self.D is not None and np.any(np.asarray(self.D) <= 0):
            raise ValueError("D must be a strictly positive diagonal")

    @property
    def shape(self) -> tuple[int, int]:
        return self.A.shape[0], self.B.shape[0]

    def matrix(self) -> sp.csr_matrix:
        m = self.B.shape[0]
        C = -sp.diags(self.D) if self.D is not None else sp.csr_matrix((m, m))
        return sp.bmat([[self.A, self.B.T], [self.B, C]], format="csr")

    def rhs(self) -> np.ndarray:
        return np.concatenate([self.f, self.g])

    def residual(self, x: np.ndarray, y: np.ndarray) -> float:
        """Relative residual of the block system."""
        r = self.matrix() @ np.concatenate([x, y]) - self.rhs()
        return float(np.linalg.norm(r) / max(np.linalg.norm(self.rhs()), 1e-300))


@dataclass
class SolveInfo:
    method: str
    iterations: int = 0
    residual: float = 0.0
    extra: dict = field(default_factory=dict)


def _amg_or_jacobi(S: sp.csr_matrix, kind: str):
    if kind == "amg":
        try:
            import pyamg

            ml = pyamg.smoothed_aggregation_solver(S.tocsr(), symmetry="hermitian", max_coarse=500)
            return ml.aspreconditioner(cycle="V")
        except Exception as exc:  # pragma: no cover - fallback path
            log.warning("AMG setup failed (%s); using Jacobi", exc)
    d = S.diagonal()
    if np.any(d <= 0):
        raise SolverError("non-positive diagonal in preconditioner block")
    inv = 1.0 / d
    return spla.LinearOperator(S.shape, matvec=lambda v: inv * v, dtype=float)


def solve_saddle(system: SaddleSystem, config: SolverConfig | None = None):
    """Solve the block system; returns (x, y, SolveInfo)."""
    config = config or SolverConfig()
    n, m = system.shape
    if config.method == "schur_pcg":
        if system.D is None:
            raise ValueError("schur_pcg needs a positive diagonal D block")
        x, info = schur_pcg_solve(system.A, system.B, system.D, system.f, config, g=system.g)
        y = (system.B @ x - system.g) / system.D
        info.residual = system.residual(x, y)
        return x, y, info
    if config.method == "direct":
        K = system.matrix().tocsc()
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("error", spla.MatrixRankWarning)
                sol = spla.spsolve(K, system.rhs())
        except (RuntimeError, spla.MatrixRankWarning) as exc:
            raise SolverError(f"factorisation failed: {exc}") from exc
        if not np.all(np.isfinite(sol)):
            raise SolverError("direct solve produced non-finite values (singular system?)")
        x, y = sol[:n], sol[n:]
        res = system.residual(x, y)
        if res > max(config.tol, 1e-8) * 1e2:
            raise SolverError(f"direct solve residual {res:.2e} too large")
        return x, y, SolveInfo("direct", 1, res)
    return _minres(system, config)


def _minres(system: SaddleSystem, config: SolverConfig):
    n, m = system.shape
    Mdiag = system.D if system.D is not None else system.M
    if Mdiag is None:
        raise ValueError("minres needs a positive diagonal (D or M) for the second block")
    Mdiag = np.asarray(Mdiag, dtype=float)
    S = (system.A + system.B.T @ sp.diags(1.0 / Mdiag) @ system.B).tocsr()
    P1 = _amg_or_jacobi(S, config.preconditioner)
    inv2 = 1.0 / Mdiag

    def prec(v):
        return np.concatenate([P1 @ v[:n], inv2 * v[n:]])

    P = spla.LinearOperator((n + m, n + m), matvec=prec, dtype=float)
    return _restarted_minres(system, P, config, "MINRES")


def _restarted_minres(system: SaddleSystem, P, config: SolverConfig, label: str, restarts: int = 5):
    """MINRES stopped on the true (unpreconditioned) relative residual.

    MINRES monitors the preconditioned residual, which can sit slightly
    above or below the true one; restarting from the current iterate with a
    tighter inner tolerance closes the gap.
    """
    n, _ = system.shape
    K = system.matrix()
    rhs = system.rhs()
    count = [0]

    def cb(_):
        count[0] += 1

    sol = np.zeros_like(rhs)
    rtol, res = config.tol, np.inf
    for _ in range(restarts + 1):
        sol, _flag = spla.minres(K, rhs, x0=sol, M=P, rtol=rtol, maxiter=config.maxiter, callback=cb)
        res = system.residual(sol[:n], sol[n:])
        if res <= config.tol or count[0] >= config.maxiter:
            break
        rtol *= 0.1
    if res > config.tol:
        raise SolverError(f"{label} did not converge (residual {res:.2e} after {count[0]} iterations)")
    return sol[:n], sol[n:], SolveInfo("minres", count[0], res)


def schur_operator(A, B, D) -> sp.csr_matrix:
    D = np.asarray(D, dtype=float)
    if np.any(D <= 0):
        raise ValueError("D must be a strictly positive diagonal")
    return (sp.csr_matrix(A) + B.T @ sp.diags(1.0 / D) @ B).tocsr()


def schur_pcg_solve(A, B, D, f, config: SolverConfig | None = None, g=None):
    """Solve (A + B^T D^-1 B) x = f + B^T D^-1 g by preconditioned CG.

    Returns (x, SolveInfo).  The preconditioner is smoothed-aggregation AMG
    (or Jacobi) built from the Schur operator itself.
    """
    config = config or SolverConfig(method="schur_pcg")
    S = schur_operator(A, sp.csr_matrix(B), D)
    rhs = np.asarray(f, dtype=float).copy()
    if g is not None:
        rhs += B.T @ (np.asarray(g) / D)
    if not np.any(rhs):
        return np.zeros_like(rhs), SolveInfo("schur_pcg", 0, 0.0)
    P = _amg_or_jacobi(S, config.preconditioner)
    count = [0]

    def cb(_):
        count[0] += 1

    x = np.zeros_like(rhs)
    rtol, res = config.tol, np.inf
    for _ in range(6):
        x, _flag = spla.cg(S, rhs, x0=x, M=P, rtol=rtol, maxiter=config.maxiter, callback=cb)
        res = float(np.linalg.norm(S @ x - rhs) / np.linalg.norm(rhs))
        if res <= config.tol or count[0] >= config.maxiter:
            break
        rtol *= 0.1
    if res > config.tol:
        raise SolverError(f"CG did not converge (residual {res:.2e} after {count[0]} iterations)")
    return x, SolveInfo("schur_pcg", count[0], res)


def solve_stokes(L, Bd, rhs, config: SolverConfig | None = None, volumes=None, mass=None):
    """Nonconforming P1-P0 Stokes system with zero-mean pressure.

    ``L`` is the vector Laplacian, ``Bd`` the (div_h psi, q) matrix with one
    row per cell.  The direct path pins the last pressure DOF and re-centres;
    the MINRES path uses diag(AMG(L), pressure mass).  Either way the
    pressure mean is removed afterwards.  Returns (phi, p, SolveInfo).
    """
    config = config or SolverConfig()
    nT = Bd.shape[0]
    vol = np.ones(nT) if volumes is None else np.asarray(volumes)
    if config.method == "direct":
        sysm = SaddleSystem(L, Bd[:-1], rhs)
        x, y, info = solve_saddle(sysm, config)
        p = np.append(y, 0.0)
    else:
        mdiag = vol if mass is None else mass
        sysm = SaddleSystem(L, Bd, rhs, M=mdiag)
        cfg = SolverConfig("minres", config.tol, config.maxiter, config.preconditioner)
        x, p, info = _minres_stokes(sysm, cfg)
    p = p - np.dot(p, vol) / vol.sum()
    return x, p, info


def _minres_stokes(system: SaddleSystem, config: SolverConfig):
    n, m = system.shape
    P1 = _amg_or_jacobi(system.A, config.preconditioner)
    inv2 = 1.0 / np.asarray(system.M, dtype=float)

    # the constant pressure mode is a consistent null direction; MINRES
    # converges to a solution and the caller removes the mean
    def prec(v):
        return np.concatenate([P1 @ v[:n], inv2 * v[n:]])

    P = spla.LinearOperator((n + m, n + m), matvec=prec, dtype=float)
    return _restarted_minres(system, P, config, "MINRES (Stokes)")
