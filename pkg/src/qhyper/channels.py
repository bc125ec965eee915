"""Quantum channels and the classical-channel bridge.

A channel ``Gamma : M_X -> M_Y`` is stored through its Choi matrix

    choi[(x, y), (x', y')] = Gamma(eps_{x,x'})[y, y']

on ``X (x) Y``.  ``X`` and ``Y`` may be products of several factors
(``in_dims``/``out_dims``), flattened row-major.  Kraus operators are
extracted lazily from the Choi spectrum.
"""
from math import prod

import numpy as np

from ._config import resolve_tol
from .tensor import OperatorSubspace, eig_hermitian, is_psd


class ChannelError(ValueError):
    """Raised when a map fails the channel axioms."""


def _dims(d):
    if isinstance(d, (int, np.integer)):
        return (int(d),)
    d = tuple(int(v) for v in d)
    if not d or min(d) < 1:
        raise ValueError(f"invalid dimensions {d}")
    return d


def choi_from_kraus(kraus, din, dout):
    Z = np.array([np.asarray(A, dtype=np.complex128).T.reshape(-1) for A in kraus])
    if Z.size == 0:
        return np.zeros((din * dout, din * dout), dtype=np.complex128)
    return Z.T @ Z.conj()


def kraus_from_choi(choi, din, dout, tol=None):
    """Kraus operators ``sqrt(l) * theta(v)`` for eigenpairs with ``l > tol * Tr``."""
    tol = resolve_tol(tol)
    w, V = eig_hermitian(choi, tol)
    tr = float(np.real(np.trace(choi)))
    scale = tr if tr > 0 else float(np.max(np.abs(w), initial=0.0))
    if w.size and w[0] < -max(tol * scale, 1e-14):
        raise ChannelError(f"Choi matrix has negative eigenvalue {w[0]:.3e}")
    keep = np.nonzero(w > tol * scale)[0][::-1]
    return [np.sqrt(w[i]) * V[:, i].reshape(din, dout).T for i in keep]


class Channel:
    """A linear map ``M_X -> M_Y`` given by Kraus operators or a Choi matrix.

    Construction validates complete positivity and trace preservation.
    ``Channel.assume_valid`` builds a CP (not necessarily trace-preserving)
    map, or skips checks entirely with ``check=False``.
    """

    def __init__(self, choi, in_dims, out_dims, tol=None, trace_preserving=True, check=True, kraus=None, label=None):
        self.in_dims = _dims(in_dims)
        self.out_dims = _dims(out_dims)
        self.label = label
        din, dout = self.din, self.dout
        C = np.array(choi, dtype=np.complex128)
        if C.shape != (din * dout, din * dout):
            raise ValueError(f"Choi matrix has shape {C.shape}, expected {(din * dout, din * dout)}")
        C.flags.writeable = False
        self.choi = C
        self._kraus = None if kraus is None else [np.array(A, dtype=np.complex128) for A in kraus]
        self.trace_preserving = trace_preserving
        if check:
            self.validate(tol, trace_preserving)

    # construction -------------------------------------------------------

    @classmethod
    def from_kraus(cls, kraus, in_dims=None, out_dims=None, tol=None, check=True, trace_preserving=True, label=None):
        kraus = [np.asarray(A, dtype=np.complex128) for A in kraus]
        if not kraus:
            raise ValueError("need at least one Kraus operator")
        shape = kraus[0].shape
        if any(A.shape != shape for A in kraus):
            raise ValueError("Kraus operators have different shapes")
        in_dims = _dims(shape[1] if in_dims is None else in_dims)
        out_dims = _dims(shape[0] if out_dims is None else out_dims)
        if (prod(out_dims), prod(in_dims)) != shape:
            raise ValueError("Kraus shape does not match the given dimensions")
        C = choi_from_kraus(kraus, prod(in_dims), prod(out_dims))
        return cls(C, in_dims, out_dims, tol, trace_preserving, check, kraus=kraus, label=label)

    @classmethod
    def from_choi(cls, choi, in_dims, out_dims, tol=None, check=True, trace_preserving=True, label=None):
        return cls(choi, in_dims, out_dims, tol, trace_preserving, check, label=label)

    @classmethod
    def assume_valid(cls, kraus=None, choi=None, in_dims=None, out_dims=None, check_cp=False, tol=None):
        """CP map for intermediate computations; only positivity is optionally checked."""
        if kraus is not None:
            return cls.from_kraus(kraus, in_dims, out_dims, tol, check=check_cp, trace_preserving=False)
        return cls(choi, in_dims, out_dims, tol, trace_preserving=False, check=check_cp)

    @classmethod
    def identity(cls, dims):
        dims = _dims(dims)
        return cls.from_kraus([np.eye(prod(dims))], dims, dims, label="id")

    @classmethod
    def unitary(cls, U, in_dims=None, out_dims=None):
        return cls.from_kraus([U], in_dims, out_dims)

    @classmethod
    def depolarizing(cls, d, d_out=None):
        """Completely depolarizing ``T -> Tr(T) I / d_out``."""
        d_out = d if d_out is None else d_out
        C = np.eye(d * d_out, dtype=np.complex128) / d_out
        return cls(C, d, d_out, label="depolarizing")

    # properties ---------------------------------------------------------

    @property
    def din(self):
        return prod(self.in_dims)

    @property
    def dout(self):
        return prod(self.out_dims)

    def choi_tensor(self):
        """Choi matrix as a 4-index array ``[x, y, x', y']``."""
        return self.choi.reshape(self.din, self.dout, self.din, self.dout)

    def kraus(self, tol=None):
        if self._kraus is None:
            self._kraus = kraus_from_choi(self.choi, self.din, self.dout, tol)
        return list(self._kraus)

    def tp_residual(self):
        pt = np.einsum("iaja->ij", self.choi_tensor())
        return float(np.max(np.abs(pt - np.eye(self.din)))) if pt.size else 0.0

    def validate(self, tol=None, trace_preserving=True):
        tol = resolve_tol(tol)
        C = self.choi
        if np.linalg.norm(C - C.conj().T) > 10 * tol * max(1.0, np.linalg.norm(C)):
            raise ChannelError("Choi matrix is not Hermitian")
        if not is_psd(C, tol):
            raise ChannelError("map is not completely positive (Choi matrix not PSD)")
        if trace_preserving:
            res = self.tp_residual()
            if res > max(tol, 1e-12) * 10 * max(1.0, self.din):
                raise ChannelError(f"map is not trace preserving (residual {res:.3e})")
        return True

    # action -------------------------------------------------------------

    def apply(self, T):
        T = np.asarray(T, dtype=np.complex128)
        if T.shape != (self.din, self.din):
            raise ValueError(f"input has shape {T.shape}, expected {(self.din, self.din)}")
        return np.einsum("ij,iajb->ab", T, self.choi_tensor())

    __call__ = apply

    def compose(self, inner):
        """``self o inner``."""
        if inner.dout != self.din:
            raise ValueError("cannot compose: dimension mismatch")
        C = np.einsum("imjn,mano->iajo", inner.choi_tensor(), self.choi_tensor())
        d = inner.din * self.dout
        tp = self.trace_preserving and inner.trace_preserving
        return Channel(C.reshape(d, d), inner.in_dims, self.out_dims, trace_preserving=tp, check=False)

    def tensor(self, other):
        """``self (x) other`` acting on ``M_{X1 X2} -> M_{Y1 Y2}``."""
        A = self.choi_tensor()
        B = other.choi_tensor()
        C = np.einsum("iajb,kcld->ikacjlbd", A, B)
        d = self.din * other.din * self.dout * other.dout
        tp = self.trace_preserving and other.trace_preserving
        return Channel(C.reshape(d, d), self.in_dims + other.in_dims, self.out_dims + other.out_dims, trace_preserving=tp, check=False)

    def allclose(self, other, atol=1e-10):
        return self.choi.shape == other.choi.shape and np.allclose(self.choi, other.choi, atol=atol, rtol=0)

    def __repr__(self):
        return f"Channel(M_{self.in_dims} -> M_{self.out_dims})"


def choi_of(ch):
    return ch.choi


def kraus_of(ch, tol=None):
    return kraus_from_choi(ch.choi, ch.din, ch.dout, tol)


def twisted_choi(ch):
    """Twisted Choi matrix on ``X_bar (x) Y``.

    ``eps_bar_{x',x}`` has coordinates ``eps_{x,x'}`` in the barred basis, so
    the coordinate matrix coincides with the Choi matrix; only the first leg
    is read as barred.
    """
    return ch.choi


def kraus_space(ch, tol=None):
    """Kraus space as an :class:`OperatorSubspace` of ``L(C^X, C^Y)``.

    Obtained from the range of the twisted Choi matrix via ``theta``; it does
    not depend on the Kraus family used to build the channel.
    """
    tol = resolve_tol(tol)
    C = twisted_choi(ch)
    w, V = eig_hermitian(C, tol)
    scale = float(np.max(np.abs(w), initial=0.0))
    keep = np.abs(w) > tol * scale if scale > 0 else np.zeros(w.shape, bool)
    mats = [V[:, i].reshape(ch.din, ch.dout).T for i in np.nonzero(keep)[0]]
    return OperatorSubspace((ch.dout, ch.din), np.array(mats).reshape(-1, ch.dout, ch.din), check=False)


class ClassicalChannel:
    """Column-stochastic matrix ``N[y, x] = N(y|x)``."""

    def __init__(self, matrix, tol=None):
        tol = resolve_tol(tol)
        N = np.array(matrix, dtype=np.float64)
        if N.ndim != 2:
            raise ValueError("stochastic matrix must be 2-d")
        if np.any(N < -tol):
            raise ChannelError("stochastic matrix has negative entries")
        if not np.allclose(N.sum(axis=0), 1.0, atol=max(tol, 1e-12) * 10):
            raise ChannelError("columns of a stochastic matrix must sum to one")
        N.flags.writeable = False
        self.matrix = N

    @property
    def nx(self):
        return self.matrix.shape[1]

    @property
    def ny(self):
        return self.matrix.shape[0]

    def support(self, tol=0.0):
        """``{(x, y) : N(y|x) > tol}``."""
        ys, xs = np.nonzero(self.matrix > tol)
        return {(int(x), int(y)) for x, y in zip(xs, ys)}

    def __repr__(self):
        return f"ClassicalChannel({self.ny}x{self.nx})"


def gamma_of_classical(n, in_dims=None, out_dims=None):
    """``Gamma_N = N o Delta_X``, with Kraus ``sqrt(N(y|x)) eps_{y,x}``."""
    nx, ny = n.nx, n.ny
    in_dims = _dims(nx if in_dims is None else in_dims)
    out_dims = _dims(ny if out_dims is None else out_dims)
    d = nx * ny
    C = np.zeros((d, d), dtype=np.complex128)
    idx = (np.arange(nx)[:, None] * ny + np.arange(ny)[None, :]).reshape(-1)
    C[idx, idx] = n.matrix.T.reshape(-1)
    return Channel(C, in_dims, out_dims, check=False)


def classical_of(ch):
    """``N_Gamma = Delta_Y o Gamma`` restricted to diagonal inputs."""
    diag = np.real(np.diagonal(ch.choi)).reshape(ch.din, ch.dout)
    return ClassicalChannel(diag.T)
