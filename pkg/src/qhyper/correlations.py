"""Quantum no-signalling correlations, their witnesses, composition and simulation.

A correlation ``Gamma : M_{XY} -> M_{AB}`` is held as a :class:`Channel` with
``in_dims = (X, Y)`` and ``out_dims = (A, B)``.  Most formulas are written in
terms of the entry tensor

    P[x, x', y, y', a, a', b, b'] = <Gamma(eps_xx' (x) eps_yy'), eps_aa' (x) eps_bb'>,

which is a fixed axis permutation of the Choi matrix (see :func:`entries`).
"""
from dataclasses import dataclass, field
from math import prod

import numpy as np

from . import _kernels
from ._config import resolve_tol
from .channels import Channel, ChannelError, gamma_of_classical
from .tensor import eig_hermitian

WITNESS_ORDER = {"loc": 0, "q": 1, "qa": 2, "qc": 3, "ns": 4}


class CorrelationError(ValueError):
    pass


# ---------------------------------------------------------------------------
# entry tensors
# ---------------------------------------------------------------------------


def entries(choi, quad):
    """Choi matrix -> ``P[x, x', y, y', a, a', b, b']``."""
    nx, ny, na, nb = quad
    return np.asarray(choi).reshape(nx, ny, na, nb, nx, ny, na, nb).transpose(0, 4, 1, 5, 2, 6, 3, 7)


def choi_from_entries(P):
    nx, ny, na, nb = P.shape[0], P.shape[2], P.shape[4], P.shape[6]
    d = nx * ny * na * nb
    return np.ascontiguousarray(P.transpose(0, 2, 4, 6, 1, 3, 5, 7)).reshape(d, d)


def map_entries(ch):
    """Entry tensor ``E[x, x', y, y']`` of a map ``M_X -> M_Y``."""
    return ch.choi_tensor().transpose(0, 2, 1, 3)


def channel_from_map_entries(E, check=False):
    nx, ny = E.shape[0], E.shape[2]
    C = np.ascontiguousarray(E.transpose(0, 2, 1, 3)).reshape(nx * ny, nx * ny)
    return Channel(C, nx, ny, check=check)


# ---------------------------------------------------------------------------
# witnesses
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LocWitness:
    """Convex combination ``sum_i w_i Phi_i (x) Psi_i``."""

    terms: tuple

    def __post_init__(self):
        terms = tuple((float(w), phi, psi) for w, phi, psi in self.terms)
        if not terms:
            raise CorrelationError("a local witness needs at least one term")
        ws = np.array([t[0] for t in terms])
        if np.any(ws < 0) or abs(ws.sum() - 1.0) > 1e-9:
            raise CorrelationError("local weights must be non-negative and sum to one")
        shape = (terms[0][1].din, terms[0][2].din, terms[0][1].dout, terms[0][2].dout)
        for _, phi, psi in terms:
            if (phi.din, psi.din, phi.dout, psi.dout) != shape:
                raise CorrelationError("local terms have inconsistent dimensions")
            if not (phi.trace_preserving and psi.trace_preserving):
                raise CorrelationError("local terms must be channels")
        object.__setattr__(self, "terms", terms)

    kind = "loc"

    @property
    def quad(self):
        _, phi, psi = self.terms[0]
        return (phi.din, psi.din, phi.dout, psi.dout)

    def entries(self):
        P = 0
        for w, phi, psi in self.terms:
            P = P + w * np.einsum("xXaA,yYbB->xXyYaAbB", map_entries(phi), map_entries(psi))
        return P


class StochasticOperatorMatrix:
    """Positive block matrix ``E = (E_{x,x',a,a'})`` with ``sum_a E_{x,x',a,a} = delta_{x,x'} I_H``.

    ``blocks`` has shape ``(X, X, A, A, H, H)``; :meth:`matrix` returns the
    big matrix on ``C^X (x) C^A (x) H``.
    """

    def __init__(self, blocks, tol=None, check=True):
        B = np.array(blocks, dtype=np.complex128)
        if B.ndim != 6 or B.shape[0] != B.shape[1] or B.shape[2] != B.shape[3] or B.shape[4] != B.shape[5]:
            raise ValueError(f"blocks must have shape (X, X, A, A, H, H), got {B.shape}")
        B.flags.writeable = False
        self.blocks = B
        if check:
            self.validate(tol)

    @classmethod
    def from_matrix(cls, M, nx, na, dh, tol=None, check=True):
        M = np.asarray(M).reshape(nx, na, dh, nx, na, dh)
        return cls(M.transpose(0, 3, 1, 4, 2, 5), tol, check)

    @classmethod
    def from_channel(cls, ch):
        """Scalar (``H = C``) stochastic operator matrix of a channel."""
        return cls(map_entries(ch)[..., None, None])

    @property
    def nx(self):
        return self.blocks.shape[0]

    @property
    def na(self):
        return self.blocks.shape[2]

    @property
    def dh(self):
        return self.blocks.shape[4]

    def matrix(self):
        nx, na, dh = self.nx, self.na, self.dh
        d = nx * na * dh
        return np.ascontiguousarray(self.blocks.transpose(0, 2, 4, 1, 3, 5)).reshape(d, d)

    def trace_out(self):
        """``Tr_A E`` as a matrix on ``C^X (x) H``."""
        T = np.einsum("xXaahH->xhXH", self.blocks)
        d = self.nx * self.dh
        return T.reshape(d, d)

    def residuals(self):
        w, _ = eig_hermitian(self.matrix(), 1e-6)
        tr = float(np.max(np.abs(self.trace_out() - np.eye(self.nx * self.dh))))
        return float(w[0]), tr

    def validate(self, tol=None):
        tol = resolve_tol(tol)
        min_eig, tr = self.residuals()
        scale = max(1.0, float(np.linalg.norm(self.matrix(), 2)))
        if min_eig < -tol * scale:
            raise CorrelationError(f"stochastic operator matrix is not positive (min eigenvalue {min_eig:.3e})")
        if tr > tol * 10 * scale:
            raise CorrelationError(f"Tr_A E differs from the identity by {tr:.3e}")
        return True

    def __repr__(self):
        return f"StochasticOperatorMatrix(X={self.nx}, A={self.na}, H={self.dh})"


def compose_som(E, F, twisted=False, tol=None, check=True):
    """Composition of ``E`` over ``(X, Y)`` on ``H`` with ``F`` over ``(Y, Z)`` on ``K``.

    ``G_{x,x',z,z'} = sum_{y,y'} F_{y,y',z,z'} (x) E_{x,x',y,y'}`` on ``K (x) H``;
    the twisted version uses ``E (x) F`` on ``H (x) K``.
    """
    if E.na != F.nx:
        raise ValueError(f"middle index sets differ: {E.na} vs {F.nx}")
    if twisted:
        G = np.einsum("xXyYhH,yYzZkK->xXzZhkHK", E.blocks, F.blocks, optimize=True)
    else:
        G = np.einsum("yYzZkK,xXyYhH->xXzZkhKH", F.blocks, E.blocks, optimize=True)
    d = E.dh * F.dh
    return StochasticOperatorMatrix(G.reshape(E.nx, E.nx, F.na, F.na, d, d), tol, check)


def _commutator_check(E, F, tol):
    nE = float(np.max(np.linalg.norm(E.blocks, axis=(4, 5))))
    nF = float(np.max(np.linalg.norm(F.blocks, axis=(4, 5))))
    Eb = E.blocks.reshape(-1, E.dh, E.dh)
    Fb = F.blocks.reshape(-1, F.dh, F.dh)
    worst = 0.0
    for A in Eb:
        c = np.einsum("ij,njk->nik", A, Fb) - np.einsum("nij,jk->nik", Fb, A)
        worst = max(worst, float(np.max(np.linalg.norm(c, axis=(1, 2)))))
    return worst, tol * max(nE * nF, 1e-300)


def _unit(xi, tol):
    xi = np.array(xi, dtype=np.complex128)
    if abs(np.linalg.norm(xi) - 1.0) > max(tol, 1e-12) * 10:
        raise CorrelationError(f"state has norm {np.linalg.norm(xi):.6f}, expected 1")
    return xi


@dataclass(frozen=True)
class CommutingPairWitness:
    """Commuting stochastic operator matrices ``E``, ``F`` on ``H`` with a unit vector."""

    E: StochasticOperatorMatrix
    F: StochasticOperatorMatrix
    xi: np.ndarray
    tol: float = 1e-9

    kind = "qc"

    def __post_init__(self):
        if self.E.dh != self.F.dh:
            raise CorrelationError("E and F must act on the same space")
        xi = _unit(self.xi, self.tol).reshape(self.E.dh)
        object.__setattr__(self, "xi", xi)
        worst, thresh = _commutator_check(self.E, self.F, self.tol)
        if worst > thresh:
            raise CorrelationError(f"E and F do not commute (max commutator norm {worst:.3e})")

    @property
    def quad(self):
        return (self.E.nx, self.F.nx, self.E.na, self.F.na)

    def entries(self):
        # <E F xi, xi> = xi^* E (F xi)
        Fx = np.einsum("yYbBhk,k->yYbBh", self.F.blocks, self.xi)
        xE = np.einsum("h,xXaAhk->xXaAk", self.xi.conj(), self.E.blocks)
        return np.einsum("xXaAk,yYbBk->xXyYaAbB", xE, Fx, optimize=True)


@dataclass(frozen=True)
class TensorPairWitness:
    """``E`` on ``H_A``, ``F`` on ``H_B`` and a unit vector ``xi`` in ``H_A (x) H_B``.

    ``xi`` is stored as a ``dim H_A x dim H_B`` coefficient matrix.
    """

    E: StochasticOperatorMatrix
    F: StochasticOperatorMatrix
    xi: np.ndarray
    tol: float = 1e-9

    kind = "q"

    def __post_init__(self):
        xi = _unit(self.xi, self.tol).reshape(self.E.dh, self.F.dh)
        object.__setattr__(self, "xi", xi)

    @property
    def quad(self):
        return (self.E.nx, self.F.nx, self.E.na, self.F.na)

    def entries(self):
        xi = self.xi
        Ex = np.einsum("xXaAhH,Hk->xXaAhk", self.E.blocks, xi, optimize=True)
        Ex = np.einsum("xXaAhk,hl->xXaAlk", Ex, xi.conj(), optimize=True)
        # Ex[.., l, k] = sum_{h,H} conj(xi[h,l]) E[h,H] xi[H,k]
        return np.einsum("xXaAlk,yYbBlk->xXyYaAbB", Ex, self.F.blocks, optimize=True)

    def to_commuting(self):
        dA, dB = self.E.dh, self.F.dh
        IA, IB = np.eye(dA), np.eye(dB)
        Eb = np.einsum("xXaAhH,kK->xXaAhkHK", self.E.blocks, IB).reshape(self.E.blocks.shape[:4] + (dA * dB, dA * dB))
        Fb = np.einsum("hH,yYbBkK->yYbBhkHK", IA, self.F.blocks).reshape(self.F.blocks.shape[:4] + (dA * dB, dA * dB))
        return CommutingPairWitness(
            StochasticOperatorMatrix(Eb, check=False), StochasticOperatorMatrix(Fb, check=False), self.xi.reshape(-1), self.tol
        )


@dataclass(frozen=True)
class QaTag:
    """Bookkeeping marker for a sequence of quantum witnesses; never verified."""

    witnesses: tuple = field(default_factory=tuple)

    kind = "qa"


# ---------------------------------------------------------------------------
# verification
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class QnsReport:
    is_qns: bool
    min_eigenvalue: float
    tp_residual: float
    b_residual: float
    c_residual: float

    @property
    def residual(self):
        return max(self.tp_residual, self.b_residual, self.c_residual, max(0.0, -self.min_eigenvalue))

    def as_dict(self):
        return {
            "is_qns": self.is_qns,
            "min_eigenvalue": self.min_eigenvalue,
            "tp_residual": self.tp_residual,
            "b_residual": self.b_residual,
            "c_residual": self.c_residual,
        }


def _marginal_residual(S):
    """Residual of ``S[x, x', ...] = delta_{x,x'} c(...)``."""
    n = S.shape[0]
    off = S.copy()
    idx = np.arange(n)
    off[idx, idx] = 0
    r = float(np.max(np.abs(off), initial=0.0))
    diag = S[idx, idx]
    r = max(r, float(np.max(np.abs(diag - diag.mean(axis=0)), initial=0.0)))
    return r


def ns_residuals(P):
    """Residuals of the two no-signalling conditions on an entry tensor."""
    Sa = np.einsum("xXyYaabB->xXyYbB", P)
    Sb = np.einsum("xXyYaAbb->yYxXaA", P)
    return _marginal_residual(Sa), _marginal_residual(Sb)


def verify_qns(ch, quad=None, tol=None):
    """Check complete positivity, trace preservation and the two marginal conditions."""
    tol = resolve_tol(tol)
    if quad is None:
        if len(ch.in_dims) != 2 or len(ch.out_dims) != 2:
            raise ValueError("quad is required unless the channel has two input and two output factors")
        quad = ch.in_dims + ch.out_dims
    quad = tuple(int(q) for q in quad)
    nx, ny, na, nb = quad
    if ch.din != nx * ny or ch.dout != na * nb:
        raise ValueError(f"channel M_{ch.din} -> M_{ch.dout} does not match quad {quad}")
    w, _ = eig_hermitian(ch.choi, max(tol, 1e-6))
    min_eig = float(w[0])
    scale = max(1.0, float(w[-1]))
    tp = ch.tp_residual()
    b, c = ns_residuals(entries(ch.choi, quad))
    ok = min_eig >= -tol * scale and tp <= tol and b <= tol and c <= tol
    return QnsReport(bool(ok), min_eig, tp, b, c)


class QnsCorrelation:
    """A verified no-signalling correlation with an optional type witness."""

    def __init__(self, channel, quad=None, witness=None, tol=None, check=True):
        if quad is None:
            quad = channel.in_dims + channel.out_dims
        self.quad = tuple(int(q) for q in quad)
        nx, ny, na, nb = self.quad
        if channel.in_dims != (nx, ny) or channel.out_dims != (na, nb):
            channel = Channel(channel.choi, (nx, ny), (na, nb), check=False)
        self.channel = channel
        self.witness = witness
        if witness is not None and tuple(witness.quad) != self.quad and witness.kind != "qa":
            raise CorrelationError("witness dimensions do not match the correlation")
        if check:
            rep = verify_qns(channel, self.quad, tol)
            if not rep.is_qns:
                raise CorrelationError(f"not a QNS correlation (residual {rep.residual:.3e})")

    @classmethod
    def from_entries(cls, P, witness=None, tol=None, check=True):
        quad = (P.shape[0], P.shape[2], P.shape[4], P.shape[6])
        ch = Channel(choi_from_entries(P), quad[:2], quad[2:], check=False)
        return cls(ch, quad, witness, tol, check)

    @classmethod
    def identity(cls, nx, ny):
        return from_loc(LocWitness(((1.0, Channel.identity(nx), Channel.identity(ny)),)))

    @property
    def choi(self):
        return self.channel.choi

    @property
    def witness_kind(self):
        return None if self.witness is None else self.witness.kind

    def entries(self):
        return entries(self.channel.choi, self.quad)

    def verify(self, tol=None):
        return verify_qns(self.channel, self.quad, tol)

    def apply(self, T):
        return self.channel.apply(T)

    def kraus(self, tol=None):
        return self.channel.kraus(tol)

    def __repr__(self):
        kind = self.witness_kind or "ns"
        return f"QnsCorrelation(quad={self.quad}, witness={kind})"


def from_loc(w, tol=None):
    return QnsCorrelation.from_entries(w.entries(), witness=w, tol=tol)


def from_tensor_pair(w, tol=None):
    return QnsCorrelation.from_entries(w.entries(), witness=w, tol=tol)


def from_commuting_pair(w, tol=None):
    return QnsCorrelation.from_entries(w.entries(), witness=w, tol=tol)


def from_witness(w, tol=None):
    return QnsCorrelation.from_entries(w.entries(), witness=w, tol=tol)


# ---------------------------------------------------------------------------
# composition and simulation
# ---------------------------------------------------------------------------


def _compose_witness(w2, w1):
    if w1 is None or w2 is None:
        return None
    if w1.kind == "loc" and w2.kind == "loc":
        terms = []
        for l1, phi1, psi1 in w1.terms:
            for l2, phi2, psi2 in w2.terms:
                terms.append((l1 * l2, phi1.compose(phi2), psi2.compose(psi1)))
        # renormalize rounding in the weights
        s = sum(t[0] for t in terms)
        return LocWitness(tuple((t[0] / s, t[1], t[2]) for t in terms))
    if w1.kind == "q" and w2.kind == "q":
        E = compose_som(w2.E, w1.E, twisted=False, check=False)
        F = compose_som(w1.F, w2.F, twisted=True, check=False)
        xi = np.einsum("ab,cd->acbd", w1.xi, w2.xi).reshape(E.dh, F.dh)
        return TensorPairWitness(E, F, xi)
    if w1.kind in ("q", "qc") and w2.kind in ("q", "qc"):
        c1 = w1 if w1.kind == "qc" else w1.to_commuting()
        c2 = w2 if w2.kind == "qc" else w2.to_commuting()
        E = compose_som(c2.E, c1.E, twisted=False, check=False)
        F = compose_som(c1.F, c2.F, twisted=True, check=False)
        return CommutingPairWitness(E, F, np.kron(c1.xi, c2.xi))
    return None


def star_compose(g2, g1, tol=None, check=True):
    """``Gamma_2 * Gamma_1`` for ``Gamma_1`` over ``(X2, Y1, X1, Y2)`` and ``Gamma_2`` over ``(X3, Y2, X2, Y3)``.

    The result, over ``(X3, Y1, X1, Y3)``, is computed from the Choi entries;
    witnesses of matching kinds are composed alongside.
    """
    nx2, ny1, nx1, ny2 = g1.quad
    nx3, ny2b, nx2b, ny3 = g2.quad
    if (nx2, ny2) != (nx2b, ny2b):
        raise ValueError(f"interface mismatch: Gamma_1 {g1.quad} vs Gamma_2 {g2.quad}")
    if check:
        for g in (g1, g2):
            rep = g.verify(tol)
            if not rep.is_qns:
                raise CorrelationError(f"input is not a QNS correlation (residual {rep.residual:.3e})")
    P = _kernels.star_contract(g1.entries(), g2.entries())
    return QnsCorrelation.from_entries(P, witness=_compose_witness(g2.witness, g1.witness), tol=tol, check=check)


def simulate(g, E, tol=None, check=True):
    """``Gamma[E]`` for ``Gamma`` over ``(X2, Y1, X1, Y2)`` and a channel ``E : M_X1 -> M_Y1``."""
    nx2, ny1, nx1, ny2 = g.quad
    if (E.din, E.dout) != (nx1, ny1):
        raise ValueError(f"channel M_{E.din} -> M_{E.dout} does not match M_{nx1} -> M_{ny1}")
    R = _kernels.simulate_contract(g.entries(), map_entries(E))
    out = channel_from_map_entries(R)
    if check:
        out.validate(tol)
    return out


def simulate_decomposed(terms, E):
    """``sum_i w_i Psi_i o E o Phi_i`` for a local decomposition."""
    C = 0
    for w, phi, psi in terms:
        C = C + w * psi.compose(E.compose(phi)).choi
    return Channel(C, terms[0][1].in_dims, terms[0][2].out_dims, check=False)


def phi_contract(M, d=None):
    """``phi(P (x) Q) = Tr(P Q^t)`` extended linearly to ``M_d (x) M_d``."""
    M = np.asarray(M)
    n = M.shape[0]
    if d is None:
        d = int(round(np.sqrt(n)))
    if M.shape != (d * d, d * d):
        raise ValueError(f"expected a {(d * d, d * d)} matrix, got {M.shape}")
    T = M.reshape(d, d, d, d)
    return complex(np.einsum("iijj->", T))


def classical_ns(n, quad, tol=None):
    """Is ``Gamma_N`` a QNS correlation, for ``N`` with rows ``(a, b)`` and columns ``(x, y)``."""
    nx, ny, na, nb = quad
    if n.matrix.shape != (na * nb, nx * ny):
        raise ValueError("stochastic matrix does not match quad")
    g = gamma_of_classical(n, (nx, ny), (na, nb))
    return verify_qns(g, quad, tol).is_qns


def correlation_gamma_of_identity(g):
    """``Gamma(I)`` for the full-homomorphism test."""
    return g.channel.apply(np.eye(g.channel.din))


__all__ = [
    "ChannelError",
    "CommutingPairWitness",
    "CorrelationError",
    "LocWitness",
    "QaTag",
    "QnsCorrelation",
    "QnsReport",
    "StochasticOperatorMatrix",
    "TensorPairWitness",
    "WITNESS_ORDER",
    "classical_ns",
    "compose_som",
    "entries",
    "from_commuting_pair",
    "from_loc",
    "from_tensor_pair",
    "from_witness",
    "phi_contract",
    "simulate",
    "simulate_decomposed",
    "star_compose",
    "verify_qns",
]
