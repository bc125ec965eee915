"""PSD feasibility with affine constraints, solved by Dykstra projections.

Problems have the form: find a Hermitian ``C = V Z V^*`` with ``Z >= 0`` and
``<L_m, C> = b_m`` for all ``m``, where ``<L, C> = sum_ij L_ij C_ij`` and the
columns of ``V`` are orthonormal.  Writing ``C`` through ``Z`` enforces the
range constraint ``C = P C P`` exactly.  ``Z`` is parametrized by ``k^2``
real numbers (see :func:`qhyper._kernels.hermitian_pack`), so the affine set
becomes ``{z : Q (z - zp) = 0}`` with orthonormal rows ``Q``.
"""
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from ._config import DEFAULT_EPS, DEFAULT_MAX_ITERS

_STATUS_NAMES = {
    _kernels.STATUS_CONVERGED: "converged",
    _kernels.STATUS_MAX_ITERS: "max_iters",
    _kernels.STATUS_STALLED: "stalled",
}


@dataclass
class SolverConfig:
    eps: float = DEFAULT_EPS
    max_iters: int = DEFAULT_MAX_ITERS
    check_every: int = 100
    stall_ratio: float = 0.999
    seed: int | None = None

    @classmethod
    def from_dict(cls, d):
        d = dict(d or {})
        known = {k: d[k] for k in ("eps", "max_iters", "check_every", "stall_ratio", "seed") if k in d}
        return cls(**known)


@dataclass
class FeasibilityResult:
    status: str  # "feasible", "infeasible" or "unknown"
    C: np.ndarray | None
    Z: np.ndarray | None
    gap: float
    iters: int
    solver_status: str
    certificate: str | None = None
    trace: list = field(default_factory=list)


def _hermitian_rows(Mz):
    """Real-parameter rows ``a[p] = <Mz, G_p>`` for the packed Hermitian basis ``G_p``."""
    m, k, _ = Mz.shape
    iu, ju = np.triu_indices(k, 1)
    s = np.sqrt(2.0)
    rows = np.empty((m, k * k), dtype=np.complex128)
    idx = np.arange(k)
    rows[:, :k] = Mz[:, idx, idx]
    a = Mz[:, iu, ju]
    b = Mz[:, ju, iu]
    rows[:, k::2] = (a + b) / s
    rows[:, k + 1::2] = 1j * (a - b) / s
    return rows


class FeasibilityProblem:
    """``C = V Z V^*``, ``Z >= 0``, ``<L_m, C> = b_m``.

    ``L`` has shape ``(m, D, D)``, ``V`` has shape ``(D, k)``.
    """

    def __init__(self, V, L, b, rank_tol=1e-10):
        V = np.asarray(V, dtype=np.complex128)
        L = np.asarray(L, dtype=np.complex128)
        b = np.asarray(b, dtype=np.complex128).reshape(-1)
        self.V = V
        self.D, self.k = V.shape
        k = self.k
        if L.shape[0] != b.shape[0]:
            raise ValueError("need one target per constraint")
        if k == 0:
            self.Q = np.zeros((0, 0))
            self.zp = np.zeros(0)
            self.consistency = float(np.max(np.abs(b), initial=0.0))
            return
        Mz = np.einsum("ik,mij,jl->mkl", V, L, V.conj(), optimize=True)
        rows = _hermitian_rows(Mz)
        A = np.vstack([rows.real, rows.imag])
        t = np.concatenate([b.real, b.imag])
        U, S, Wt = np.linalg.svd(A, full_matrices=False)
        r = int(np.sum(S > rank_tol * max(S[0], 1.0))) if S.size else 0
        self.Q = Wt[:r]
        self.zp = Wt[:r].T @ ((U[:, :r].T @ t) / S[:r])
        self.consistency = float(np.linalg.norm(A @ self.zp - t))
        self.A = A
        self.t = t

    @property
    def affine_consistent(self):
        return self.consistency <= 1e-8

    def to_matrix(self, z):
        Z = _kernels.hermitian_unpack(z, self.k)
        return Z, self.V @ Z @ self.V.conj().T

    def solve(self, cfg=None, z0=None):
        cfg = cfg or SolverConfig()
        if self.k == 0 or not self.affine_consistent:
            return FeasibilityResult("infeasible", None, None, self.consistency, 0, "linear", certificate="linear")
        if z0 is None:
            z0 = _kernels.hermitian_pack(np.eye(self.k) / self.k)
        x, y, it, gap, status = _kernels.dykstra(
            z0, self.Q, self.zp, self.k, cfg.max_iters, cfg.eps, cfg.check_every, cfg.stall_ratio
        )
        name = _STATUS_NAMES[status]
        if status != _kernels.STATUS_CONVERGED:
            return FeasibilityResult("unknown", None, None, gap, it, name)
        # the affine projection of the PSD iterate satisfies the equalities exactly
        z = x - self.Q.T @ (self.Q @ (x - self.zp))
        Z, C = self.to_matrix(z)
        return FeasibilityResult("feasible", C, Z, gap, it, name)
