"""Dense complex tensors with explicit leg bookkeeping.

Coordinate conventions used throughout the package:

* A vector of the conjugate space (a *barred* leg) is stored by its
  coordinates in the basis ``(e_x bar)``.  Conjugating a tensor conjugates
  every coordinate and flips every bar flag.
* ``theta`` sends ``xi_bar (x) eta`` to the rank-one operator ``eta xi^*``.
  In coordinates this is a transpose: ``theta(t)[k, h] = t[h, k]``.
* For an operator ``A : H -> K`` the dual ``A_bar : K_bar -> H_bar`` has
  coordinate matrix ``A.T`` (see :func:`dual_operator`).
* Matrices act on row-major flattened multi-indices, so the leg listed
  first is the most significant.
"""
from dataclasses import dataclass
from math import prod
from typing import Sequence

import numpy as np
import scipy.linalg

from ._config import resolve_tol


class LegError(ValueError):
    """Raised when tensor legs do not have the required signature."""


@dataclass(frozen=True)
class IndexSet:
    name: str
    size: int

    def __post_init__(self):
        if int(self.size) < 1:
            raise ValueError(f"index set {self.name!r} must have size >= 1, got {self.size}")


@dataclass(frozen=True)
class Leg:
    index_set: IndexSet
    barred: bool = False

    @property
    def name(self):
        return self.index_set.name

    @property
    def size(self):
        return self.index_set.size

    def flipped(self):
        return Leg(self.index_set, not self.barred)

    def renamed(self, name):
        return Leg(IndexSet(name, self.size), self.barred)

    def __str__(self):
        return f"{self.name}bar" if self.barred else self.name


def leg(name, size, barred=False):
    """Shorthand constructor: ``leg("X", 2, barred=True)``."""
    return Leg(IndexSet(name, int(size)), bool(barred))


def _legs_tuple(legs):
    legs = tuple(legs)
    for lg in legs:
        if not isinstance(lg, Leg):
            raise TypeError(f"expected Leg, got {type(lg).__name__}")
    return legs


def _leg_keys(legs):
    return [(lg.name, lg.barred) for lg in legs]


def check_disjoint(legs_a, legs_b):
    clash = set(_leg_keys(legs_a)) & set(_leg_keys(legs_b))
    if clash:
        names = ", ".join(sorted(f"{n}{'bar' if b else ''}" for n, b in clash))
        raise LegError(f"leg-name collision: {names}")


def disambiguate(legs_a, legs_b, suffixes=("1", "2")):
    """Rename colliding legs by appending suffixes; returns both leg tuples."""
    keys_a = set(_leg_keys(legs_a))
    keys_b = set(_leg_keys(legs_b))
    if not keys_a & keys_b:
        return tuple(legs_a), tuple(legs_b)
    clash_names = {n for n, _ in keys_a & keys_b}
    ra = tuple(lg.renamed(lg.name + suffixes[0]) if lg.name in clash_names else lg for lg in legs_a)
    rb = tuple(lg.renamed(lg.name + suffixes[1]) if lg.name in clash_names else lg for lg in legs_b)
    return ra, rb


@dataclass(frozen=True, eq=False)
class ComplexTensor:
    """A dense complex array with one axis per leg."""

    legs: tuple
    data: np.ndarray

    def __post_init__(self):
        legs = _legs_tuple(self.legs)
        data = np.array(self.data, dtype=np.complex128)
        shape = tuple(lg.size for lg in legs)
        if data.size != prod(shape):
            raise LegError(f"data has {data.size} entries, legs require {prod(shape)}")
        data = data.reshape(shape)
        if not np.all(np.isfinite(data)):
            raise ValueError("tensor entries must be finite")
        data.flags.writeable = False
        object.__setattr__(self, "legs", legs)
        object.__setattr__(self, "data", data)

    @property
    def shape(self):
        return self.data.shape

    @property
    def flat(self):
        return self.data.reshape(-1)

    @property
    def dim(self):
        return self.data.size

    def norm(self):
        return float(np.linalg.norm(self.flat))

    def inner(self, other):
        """Hilbert space inner product ``<self, other>``, linear in ``self``."""
        if tuple(self.legs) != tuple(other.legs):
            raise LegError("inner product needs identical legs")
        return complex(np.vdot(other.flat, self.flat))

    def allclose(self, other, atol=1e-12):
        return tuple(self.legs) == tuple(other.legs) and np.allclose(self.data, other.data, atol=atol, rtol=0)

    def __add__(self, other):
        if tuple(self.legs) != tuple(other.legs):
            raise LegError("cannot add tensors with different legs")
        return ComplexTensor(self.legs, self.data + other.data)

    def __sub__(self, other):
        return self + (-1.0) * other

    def __mul__(self, scalar):
        return ComplexTensor(self.legs, self.data * scalar)

    __rmul__ = __mul__

    def __repr__(self):
        return f"ComplexTensor(legs=({', '.join(map(str, self.legs))}), shape={self.shape})"


def basis_vector(legs, index):
    legs = _legs_tuple(legs)
    data = np.zeros(tuple(lg.size for lg in legs), dtype=np.complex128)
    data[tuple(index)] = 1.0
    return ComplexTensor(legs, data)


def rename_legs(t, mapping):
    """Rename legs by name; bar flags are kept."""
    return ComplexTensor(tuple(lg.renamed(mapping.get(lg.name, lg.name)) for lg in t.legs), t.data)


def tensor_product(a, b):
    check_disjoint(a.legs, b.legs)
    return ComplexTensor(a.legs + b.legs, np.multiply.outer(a.data, b.data))


def conjugate(t):
    return ComplexTensor(tuple(lg.flipped() for lg in t.legs), np.conj(t.data))


def permute(t, order):
    order = tuple(order)
    return ComplexTensor(tuple(t.legs[i] for i in order), np.transpose(t.data, order))


def _split(legs, n_in):
    if n_in is None:
        n_in = len(legs) // 2
    return legs[:n_in], legs[n_in:]


def theta(t, n_in=None):
    """``theta: H_bar (x) K -> L(H, K)`` as a coordinate matrix.

    The first ``n_in`` legs (default: half) must be barred and form the
    domain; the remaining legs must be unbarred.
    """
    dom, cod = _split(t.legs, n_in)
    if not dom or not cod or not all(lg.barred for lg in dom) or any(lg.barred for lg in cod):
        raise LegError(f"theta expects (barred..., unbarred...) legs, got ({', '.join(map(str, t.legs))})")
    return theta_coords(t.data.reshape(prod(lg.size for lg in dom), -1))


def theta_coords(flat_pair):
    """Coordinate form of theta on a (domain, codomain)-shaped array."""
    return np.asarray(flat_pair).T


def theta_inv(A, legs):
    """Inverse of :func:`theta`; ``legs`` are the legs of the result."""
    A = np.asarray(A)
    legs = _legs_tuple(legs)
    return ComplexTensor(legs, A.T.reshape(tuple(lg.size for lg in legs)))


def dual_operator(A):
    """Coordinate matrix of the dual operator ``A_bar``.

    From ``A_bar(xi_bar) = conj(A^* xi)`` the matrix of ``A_bar`` in the
    bases ``(e bar)`` is ``A.T``.
    """
    return np.asarray(A).T


def _sigma_check(t):
    if len(t.legs) != 4:
        raise LegError("sigma_flip needs a 4-leg tensor")
    bars = tuple(lg.barred for lg in t.legs)
    return bars


def sigma_flip(t):
    """Flip ``xi1 (x) eta1_bar (x) xi2_bar (x) eta2 -> xi2_bar (x) eta1_bar (x) xi1 (x) eta2``."""
    if _sigma_check(t) != (False, True, True, False):
        raise LegError(f"sigma_flip expects (X1, Y1bar, X2bar, Y2), got ({', '.join(map(str, t.legs))})")
    return permute(t, (2, 1, 0, 3))


def sigma_inv(t):
    if _sigma_check(t) != (True, True, False, False):
        raise LegError(f"sigma_inv expects (X2bar, Y1bar, X1, Y2), got ({', '.join(map(str, t.legs))})")
    return permute(t, (2, 1, 0, 3))


def slice_map(functional, target, legs_to_contract=None):
    """Slice ``L_f`` of ``target`` by a functional on some of its legs.

    ``functional`` pairs bilinearly against the contracted legs, which must
    carry the opposite bar flags: ``u_bar`` pairs with ``u``-type legs via
    ``<h, u> = sum_i h_i conj(u_i)`` and ``conj(u)`` are exactly the stored
    coordinates of ``u_bar``.  By default the leading legs are contracted.
    """
    nf = len(functional.legs)
    if legs_to_contract is None:
        legs_to_contract = tuple(range(nf))
    legs_to_contract = tuple(legs_to_contract)
    if len(legs_to_contract) != nf:
        raise LegError("functional arity does not match the contracted legs")
    for fl, i in zip(functional.legs, legs_to_contract):
        tl = target.legs[i]
        if fl.size != tl.size or fl.barred == tl.barred:
            raise LegError(f"functional leg {fl} cannot pair with target leg {tl}")
    rest = tuple(i for i in range(len(target.legs)) if i not in legs_to_contract)
    data = np.tensordot(functional.data, target.data, axes=(tuple(range(nf)), legs_to_contract))
    return ComplexTensor(tuple(target.legs[i] for i in rest), data)


def pairing(S, T):
    """``<S, T> = Tr(S T^t)``, the bilinear pairing of matrices."""
    return complex(np.sum(np.asarray(S) * np.asarray(T)))


def slice_operator(omega, T, dims, keep):
    """Operator slice map ``L_omega`` on ``M_{X_1 ... X_n}``.

    ``dims`` lists the factor sizes, ``keep`` the indices of kept factors;
    ``omega`` is a matrix on the remaining factors (in order), paired via
    ``Tr(S T^t)``.  ``L_omega(T_1 (x) T_2) = <omega, T_2> T_1``.
    """
    dims = tuple(int(d) for d in dims)
    keep = tuple(keep)
    drop = tuple(i for i in range(len(dims)) if i not in keep)
    n = len(dims)
    T = np.asarray(T).reshape(dims + dims)
    order = keep + drop
    T = np.transpose(T, order + tuple(n + i for i in order))
    dk = prod(dims[i] for i in keep)
    dd = prod(dims[i] for i in drop)
    T = T.reshape(dk, dd, dk, dd)
    omega = np.asarray(omega).reshape(dd, dd)
    return np.einsum("abcd,bd->ac", T, omega)


def partial_trace(T, dims, keep):
    dd = prod(int(dims[i]) for i in range(len(dims)) if i not in tuple(keep))
    return slice_operator(np.eye(dd), T, dims, keep)


# ---------------------------------------------------------------------------
# orthonormal bases
# ---------------------------------------------------------------------------


def orthonormal_rows(vectors, tol=None):
    """Modified Gram-Schmidt (twice) on the rows of ``vectors``.

    A vector is dropped when its residual after projection has norm below
    ``tol`` times the largest input norm.
    """
    tol = resolve_tol(tol)
    V = np.asarray(vectors, dtype=np.complex128)
    if V.ndim == 1:
        V = V[None, :]
    n, D = V.shape
    if n == 0:
        return np.zeros((0, D), dtype=np.complex128)
    scale = float(np.max(np.linalg.norm(V, axis=1)))
    if scale == 0.0:
        return np.zeros((0, D), dtype=np.complex128)
    thresh = tol * scale
    basis = np.zeros((min(n, D), D), dtype=np.complex128)
    r = 0
    for v in V:
        w = v.copy()
        for _ in range(2):
            if r:
                B = basis[:r]
                w = w - B.T @ (B.conj() @ w)
        nw = np.linalg.norm(w)
        if nw > thresh:
            basis[r] = w / nw
            r += 1
            if r == D:
                break
    return basis[:r].copy()


class Subspace:
    """A linear subspace of a tensor space, stored as orthonormal rows."""

    def __init__(self, legs, basis, check=True):
        self.legs = _legs_tuple(legs)
        D = prod(lg.size for lg in self.legs)
        B = np.array(basis, dtype=np.complex128).reshape(-1, D) if np.size(basis) else np.zeros((0, D), np.complex128)
        if check and B.shape[0]:
            G = B.conj() @ B.T
            if not np.allclose(G, np.eye(B.shape[0]), atol=1e-8):
                raise ValueError("basis is not orthonormal")
        B.flags.writeable = False
        self.basis = B

    @classmethod
    def span(cls, legs, vectors, tol=None):
        legs = _legs_tuple(legs)
        D = prod(lg.size for lg in legs)
        rows = []
        for v in vectors:
            if isinstance(v, ComplexTensor):
                if tuple(v.legs) != legs:
                    raise LegError("vector legs differ from the ambient legs")
                rows.append(v.flat)
            else:
                rows.append(np.asarray(v, dtype=np.complex128).reshape(D))
        if not rows:
            return cls(legs, np.zeros((0, D)), check=False)
        return cls(legs, orthonormal_rows(np.array(rows), tol), check=False)

    @classmethod
    def zero(cls, legs):
        legs = _legs_tuple(legs)
        return cls(legs, np.zeros((0, prod(lg.size for lg in legs))), check=False)

    @classmethod
    def full(cls, legs):
        legs = _legs_tuple(legs)
        return cls(legs, np.eye(prod(lg.size for lg in legs)), check=False)

    @property
    def rank(self):
        return self.basis.shape[0]

    @property
    def dim(self):
        """Dimension of the ambient space."""
        return self.basis.shape[1]

    @property
    def shape(self):
        return tuple(lg.size for lg in self.legs)

    def vectors(self):
        return [ComplexTensor(self.legs, b) for b in self.basis]

    def projector(self):
        return self.basis.T @ self.basis.conj()

    def _flat(self, v):
        if isinstance(v, ComplexTensor):
            if tuple(v.legs) != self.legs:
                raise LegError("vector legs differ from the ambient legs")
            return v.flat
        return np.asarray(v, dtype=np.complex128).reshape(self.dim)

    def residual(self, v):
        w = self._flat(v)
        if self.rank:
            w = w - self.basis.T @ (self.basis.conj() @ w)
        return float(np.linalg.norm(w))

    def contains(self, v, tol=None):
        tol = resolve_tol(tol)
        w = self._flat(v)
        return self.residual(w) <= tol * float(np.linalg.norm(w))

    def contains_subspace(self, other, tol=None):
        tol = resolve_tol(tol)
        return all(self.residual(b) <= tol for b in other.basis)

    def same_span(self, other, tol=None):
        if self.dim != other.dim or self.rank != other.rank:
            return False
        return self.contains_subspace(other, tol) and other.contains_subspace(self, tol)

    def complement(self):
        if self.rank == 0:
            return Subspace.full(self.legs)
        N = scipy.linalg.null_space(self.basis.conj())
        return Subspace(self.legs, N.T, check=False)

    def conjugate(self):
        return Subspace(tuple(lg.flipped() for lg in self.legs), self.basis.conj(), check=False)

    def permute(self, order):
        order = tuple(order)
        B = self.basis.reshape((self.rank,) + self.shape)
        B = np.transpose(B, (0,) + tuple(i + 1 for i in order)).reshape(self.rank, self.dim)
        return Subspace(tuple(self.legs[i] for i in order), B, check=False)

    def with_legs(self, legs):
        legs = _legs_tuple(legs)
        if prod(lg.size for lg in legs) != self.dim:
            raise LegError("new legs change the ambient dimension")
        return Subspace(legs, self.basis, check=False)

    def __repr__(self):
        return f"Subspace(legs=({', '.join(map(str, self.legs))}), rank={self.rank})"


def _check_ambient(s1, s2):
    if s1.legs != s2.legs:
        raise LegError("subspaces live in different ambient spaces")


def orthonormalize(vectors, legs, tol=None):
    return Subspace.span(legs, vectors, tol)


def complement(S):
    return S.complement()


def subspace_sum(S1, S2, tol=None):
    _check_ambient(S1, S2)
    return Subspace(S1.legs, orthonormal_rows(np.vstack([S1.basis, S2.basis]), tol), check=False)


def subspace_tensor(S1, S2):
    check_disjoint(S1.legs, S2.legs)
    B = np.einsum("ia,jb->ijab", S1.basis, S2.basis).reshape(S1.rank * S2.rank, S1.dim * S2.dim)
    return Subspace(S1.legs + S2.legs, B, check=False)


def contains(S, v, tol=None):
    return S.contains(v, tol)


def image(S, linear_map, out_legs=None, tol=None):
    """Image of ``S`` under a matrix acting on flattened vectors."""
    M = np.asarray(linear_map, dtype=np.complex128)
    out_legs = S.legs if out_legs is None else _legs_tuple(out_legs)
    vecs = (M @ S.basis.T).T if S.rank else np.zeros((0, M.shape[0]))
    if S.rank == 0:
        return Subspace.zero(out_legs)
    return Subspace(out_legs, orthonormal_rows(vecs, tol), check=False)


# ---------------------------------------------------------------------------
# operator subspaces
# ---------------------------------------------------------------------------


class OperatorSubspace:
    """A subspace of ``L(C^n, C^m)`` with a Hilbert-Schmidt orthonormal basis.

    ``basis`` has shape ``(r, m, n)``.
    """

    def __init__(self, shape, basis, check=True):
        m, n = (int(shape[0]), int(shape[1]))
        B = np.array(basis, dtype=np.complex128).reshape(-1, m, n) if np.size(basis) else np.zeros((0, m, n), np.complex128)
        if check and B.shape[0]:
            F = B.reshape(B.shape[0], -1)
            if not np.allclose(F.conj() @ F.T, np.eye(B.shape[0]), atol=1e-8):
                raise ValueError("basis is not orthonormal")
        B.flags.writeable = False
        self.shape = (m, n)
        self.basis = B
        self._tags = {}

    @classmethod
    def span(cls, matrices, shape=None, tol=None):
        mats = [np.asarray(A, dtype=np.complex128) for A in matrices]
        if shape is None:
            if not mats:
                raise ValueError("shape is required for an empty span")
            shape = mats[0].shape
        m, n = shape
        if not mats:
            return cls(shape, np.zeros((0, m, n)), check=False)
        F = np.array([A.reshape(m * n) for A in mats])
        return cls(shape, orthonormal_rows(F, tol).reshape(-1, m, n), check=False)

    @classmethod
    def full(cls, shape):
        m, n = shape
        return cls(shape, np.eye(m * n).reshape(m * n, m, n), check=False)

    @classmethod
    def zero(cls, shape):
        return cls(shape, np.zeros((0,) + tuple(shape)), check=False)

    @property
    def rank(self):
        return self.basis.shape[0]

    @property
    def flat_basis(self):
        return self.basis.reshape(self.rank, self.shape[0] * self.shape[1])

    def __iter__(self):
        return iter(self.basis)

    def __len__(self):
        return self.rank

    def residual(self, A):
        a = np.asarray(A, dtype=np.complex128).reshape(-1)
        F = self.flat_basis
        if self.rank:
            a = a - F.T @ (F.conj() @ a)
        return float(np.linalg.norm(a))

    def contains(self, A, tol=None, scale=None):
        """``||A - P A|| <= tol * scale`` with ``scale`` defaulting to ``||A||``."""
        tol = resolve_tol(tol)
        A = np.asarray(A)
        if A.shape != self.shape:
            raise ValueError(f"operator of shape {A.shape} does not live in L(C^{self.shape[1]}, C^{self.shape[0]})")
        s = float(np.linalg.norm(A)) if scale is None else float(scale)
        return self.residual(A) <= tol * s

    def contains_space(self, other, tol=None):
        tol = resolve_tol(tol)
        return all(self.residual(B) <= tol for B in other.basis)

    def same_span(self, other, tol=None):
        return (
            self.shape == other.shape
            and self.rank == other.rank
            and self.contains_space(other, tol)
            and other.contains_space(self, tol)
        )

    def adjoint(self):
        return OperatorSubspace((self.shape[1], self.shape[0]), np.conj(np.transpose(self.basis, (0, 2, 1))), check=False)

    def conjugate(self):
        return OperatorSubspace(self.shape, np.conj(self.basis), check=False)

    def complement(self):
        m, n = self.shape
        if self.rank == 0:
            return OperatorSubspace.full(self.shape)
        N = scipy.linalg.null_space(self.flat_basis.conj())
        return OperatorSubspace(self.shape, N.T.reshape(-1, m, n), check=False)

    def sum(self, other, tol=None):
        if self.shape != other.shape:
            raise ValueError("operator spaces of different shapes")
        F = np.vstack([self.flat_basis, other.flat_basis])
        m, n = self.shape
        return OperatorSubspace(self.shape, orthonormal_rows(F, tol).reshape(-1, m, n), check=False)

    def __repr__(self):
        return f"OperatorSubspace(L(C^{self.shape[1]}, C^{self.shape[0]}), rank={self.rank})"


def product_space(*spaces, tol=None):
    """``span{A_1 A_2 ... A_n}`` over basis elements of the given spaces."""
    mats = [np.eye(spaces[-1].shape[1])]
    for S in reversed(spaces):
        mats = [B @ M for B in S.basis for M in mats]
    shape = (spaces[0].shape[0], spaces[-1].shape[1])
    return OperatorSubspace.span(mats, shape=shape, tol=tol)


# ---------------------------------------------------------------------------
# Hermitian spectral helpers
# ---------------------------------------------------------------------------


def _as_matrix(M):
    if isinstance(M, ComplexTensor):
        n = len(M.legs) // 2
        rows = prod(lg.size for lg in M.legs[:n])
        return M.data.reshape(rows, -1)
    return np.asarray(M, dtype=np.complex128)


def _hermitian(M, tol):
    M = _as_matrix(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("matrix must be square")
    scale = max(float(np.linalg.norm(M, 2)), 1.0) if M.size else 1.0
    if np.linalg.norm(M - M.conj().T, 2) > tol * scale * 10:
        raise ValueError("matrix is not Hermitian within tolerance")
    return (M + M.conj().T) / 2


def eig_hermitian(M, tol=None):
    """Eigenvalues (ascending) and eigenvectors (as columns) of a Hermitian matrix."""
    tol = resolve_tol(tol)
    w, V = np.linalg.eigh(_hermitian(M, tol))
    return w, V


def psd_project(M, tol=None):
    w, V = eig_hermitian(M, tol)
    return (V * np.maximum(w, 0.0)) @ V.conj().T


def is_psd(M, tol=None):
    tol = resolve_tol(tol)
    w, _ = eig_hermitian(M, tol)
    if w.size == 0:
        return True
    scale = max(float(np.max(np.abs(w))), 1.0)
    return bool(w[0] >= -tol * scale)


def operator_range(M, tol=None, legs=None):
    """Span of eigenvectors with ``|lambda| > tol * ||M||``.

    Returns an orthonormal row basis, or a :class:`Subspace` when ``legs``
    are supplied.
    """
    tol = resolve_tol(tol)
    w, V = eig_hermitian(M, tol)
    norm = float(np.max(np.abs(w))) if w.size else 0.0
    keep = np.abs(w) > tol * norm if norm > 0 else np.zeros(w.shape, bool)
    B = V[:, keep].T
    if legs is None:
        return B
    return Subspace(legs, B, check=False)
