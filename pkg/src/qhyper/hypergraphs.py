"""Quantum hypergraphs, classical hypergraphs, arrow spaces and the fits relation.

A quantum hypergraph over ``(X, Y)`` is a subspace of ``C_bar^X (x) C^Y``
(legs ``(Xbar, Y)``); its conjugate lives on ``(X, Ybar)``.  For a pair
``U1`` on ``(X1, Y1bar)`` and ``U2`` on ``(X2bar, Y2)`` the arrow spaces are
built on ``(X1, Y1bar, X2bar, Y2)`` and the shuffled view on
``(X2bar, Y1bar, X1, Y2)`` matches the twisted Choi matrix of a channel
``M_{X2 Y1} -> M_{X1 Y2}``.
"""
from dataclasses import dataclass
from itertools import product

import numpy as np

from ._config import resolve_tol
from .channels import kraus_space
from .tensor import (
    ComplexTensor,
    LegError,
    OperatorSubspace,
    Subspace,
    conjugate,
    disambiguate,
    leg,
    orthonormal_rows,
    sigma_flip,
    slice_map,
    subspace_tensor,
)


class QuantumHypergraph:
    """A subspace of a two-leg tensor space with one barred and one unbarred leg."""

    def __init__(self, subspace):
        if not isinstance(subspace, Subspace):
            raise TypeError("expected a Subspace")
        if len(subspace.legs) != 2 or subspace.legs[0].barred == subspace.legs[1].barred:
            raise LegError("a quantum hypergraph needs legs (Xbar, Y) or (X, Ybar)")
        self.subspace = subspace

    @classmethod
    def span(cls, X, Y, vectors, barred_first=True, tol=None):
        """Span of coordinate arrays of shape ``(|X|, |Y|)`` (or flat)."""
        legs = _two_legs(X, Y, barred_first)
        return cls(Subspace.span(legs, vectors, tol))

    @classmethod
    def full(cls, X, Y, barred_first=True):
        return cls(Subspace.full(_two_legs(X, Y, barred_first)))

    @classmethod
    def zero(cls, X, Y, barred_first=True):
        return cls(Subspace.zero(_two_legs(X, Y, barred_first)))

    @property
    def legs(self):
        return self.subspace.legs

    @property
    def nx(self):
        return self.legs[0].size

    @property
    def ny(self):
        return self.legs[1].size

    @property
    def rank(self):
        return self.subspace.rank

    @property
    def dim(self):
        return self.subspace.dim

    @property
    def barred_first(self):
        return self.legs[0].barred

    @property
    def basis(self):
        return self.subspace.basis

    def bar(self):
        return QuantumHypergraph(self.subspace.conjugate())

    def complement(self):
        return QuantumHypergraph(self.subspace.complement())

    def tilde(self):
        """``theta(U)`` as an operator space in ``L(C^X, C^Y)``; needs legs ``(Xbar, Y)``."""
        if not self.barred_first:
            raise LegError("tilde needs the signature (Xbar, Y)")
        B = self.basis.reshape(-1, self.nx, self.ny).transpose(0, 2, 1)
        return OperatorSubspace((self.ny, self.nx), B, check=False)

    def contains(self, v, tol=None):
        return self.subspace.contains(v, tol)

    def same_span(self, other, tol=None):
        return self.legs == other.legs and self.subspace.same_span(other.subspace, tol)

    def __repr__(self):
        return f"QuantumHypergraph(legs=({', '.join(map(str, self.legs))}), rank={self.rank})"


def _two_legs(X, Y, barred_first):
    X = ("X", X) if isinstance(X, (int, np.integer)) else X
    Y = ("Y", Y) if isinstance(Y, (int, np.integer)) else Y
    return (leg(X[0], X[1], barred_first), leg(Y[0], Y[1], not barred_first))


@dataclass(frozen=True)
class ClassicalHypergraph:
    nx: int
    ny: int
    edges: frozenset

    def __post_init__(self):
        edges = frozenset((int(x), int(y)) for x, y in self.edges)
        for x, y in edges:
            if not (0 <= x < self.nx and 0 <= y < self.ny):
                raise ValueError(f"edge {(x, y)} outside {self.nx} x {self.ny}")
        object.__setattr__(self, "edges", edges)

    @classmethod
    def diagonal(cls, n):
        return cls(n, n, frozenset((z, z) for z in range(n)))

    @classmethod
    def complete(cls, nx, ny):
        return cls(nx, ny, frozenset(product(range(nx), range(ny))))

    @classmethod
    def from_mask(cls, mask):
        mask = np.asarray(mask, dtype=bool)
        xs, ys = np.nonzero(mask)
        return cls(mask.shape[0], mask.shape[1], frozenset(zip(xs.tolist(), ys.tolist())))

    @property
    def full(self):
        return {x for x, _ in self.edges} == set(range(self.nx))

    def hyperedges(self):
        """``E_y = {x : (x, y) in E}``."""
        return {y: frozenset(x for x, yy in self.edges if yy == y) for y in range(self.ny)}

    def mask(self):
        m = np.zeros((self.nx, self.ny), dtype=bool)
        for x, y in self.edges:
            m[x, y] = True
        return m


def embed_classical(E, names=("X", "Y"), barred_first=True):
    """``U_E = span{e_x_bar (x) e_y : (x, y) in E}``."""
    legs = _two_legs((names[0], E.nx), (names[1], E.ny), barred_first)
    rows = np.zeros((len(E.edges), E.nx * E.ny), dtype=np.complex128)
    for i, (x, y) in enumerate(sorted(E.edges)):
        rows[i, x * E.ny + y] = 1.0
    return QuantumHypergraph(Subspace(legs, rows, check=False))


def is_classical(U, tol=None):
    """``(True, E)`` when ``U`` is spanned by elementary tensors over a set ``E``.

    The candidate set is the coordinate support of an orthonormal basis
    (entries above ``tol``); ``U`` is classical exactly when its rank equals
    the size of that support.
    """
    tol = resolve_tol(tol)
    B = U.basis.reshape(-1, U.nx, U.ny)
    mask = np.any(np.abs(B) > tol, axis=0) if U.rank else np.zeros((U.nx, U.ny), bool)
    E = ClassicalHypergraph.from_mask(mask)
    if len(E.edges) != U.rank:
        return False, None
    return True, E


# ---------------------------------------------------------------------------
# arrow spaces
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ArrowSpace:
    """An arrow space on ``(X1, Y1bar, X2bar, Y2)`` with its shuffled view."""

    pre: Subspace
    kind: str

    @property
    def shuffled(self):
        return self.pre.permute((2, 1, 0, 3))

    @property
    def rank(self):
        return self.pre.rank

    def operator_space(self):
        """``theta`` of the shuffled view in ``L(C^{X2 Y1}, C^{X1 Y2})``."""
        return shuffled_operator_space(self.shuffled)


def shuffled_operator_space(K):
    x2, y1, x1, y2 = (lg.size for lg in K.legs)
    B = K.basis.reshape(-1, x2 * y1, x1 * y2).transpose(0, 2, 1)
    return OperatorSubspace((x1 * y2, x2 * y1), B, check=False)


def _check_pair(U1, U2):
    if U1.barred_first or not U2.barred_first:
        raise LegError("arrow spaces need U1 on (X1, Y1bar) and U2 on (X2bar, Y2)")
    return disambiguate(U1.legs, U2.legs)


def arrow_forward(U1, U2):
    """``(U1 (x) U2) + (U1^perp (x) full)``."""
    l1, l2 = _check_pair(U1, U2)
    S1 = U1.subspace.with_legs(l1)
    S2 = U2.subspace.with_legs(l2)
    a = subspace_tensor(S1, S2)
    b = subspace_tensor(S1.complement(), Subspace.full(l2))
    return ArrowSpace(Subspace(a.legs, np.vstack([a.basis, b.basis]), check=False), "forward")


def arrow_iff(U1, U2):
    """``(U1 (x) U2) + (U1^perp (x) U2^perp)``."""
    l1, l2 = _check_pair(U1, U2)
    S1 = U1.subspace.with_legs(l1)
    S2 = U2.subspace.with_legs(l2)
    a = subspace_tensor(S1, S2)
    b = subspace_tensor(S1.complement(), S2.complement())
    return ArrowSpace(Subspace(a.legs, np.vstack([a.basis, b.basis]), check=False), "iff")


def arrow(U1, U2, mode):
    return arrow_forward(U1, U2) if mode == "quasi" else arrow_iff(U1, U2)


def classical_arrow(E1, E2, iff=False):
    """Classical arrow over ``(X2 x Y1) x (X1 x Y2)``; vertices are flattened row-major."""
    edges = set()
    for x2, y1, x1, y2 in product(range(E2.nx), range(E1.ny), range(E1.nx), range(E2.ny)):
        a = (x1, y1) in E1.edges
        b = (x2, y2) in E2.edges
        if (a == b) if iff else ((not a) or b):
            edges.add((x2 * E1.ny + y1, x1 * E2.ny + y2))
    return ClassicalHypergraph(E2.nx * E1.ny, E1.nx * E2.ny, frozenset(edges))


def embed_classical_arrow(E1, E2, iff=False):
    """Embedding of the classical arrow as a 4-leg subspace on ``(X2bar, Y1bar, X1, Y2)``."""
    A = classical_arrow(E1, E2, iff)
    U = embed_classical(A)
    legs = (leg("X2", E2.nx, True), leg("Y1", E1.ny, True), leg("X1", E1.nx), leg("Y2", E2.ny))
    return U.subspace.with_legs(legs)


# ---------------------------------------------------------------------------
# fits
# ---------------------------------------------------------------------------


def _target(K):
    if isinstance(K, ArrowSpace):
        return K.shuffled
    if isinstance(K, QuantumHypergraph):
        return K.subspace
    return K


def _check_channel_legs(ch, K):
    if K.dim != ch.din * ch.dout:
        raise LegError(f"subspace of dimension {K.dim} does not match a channel M_{ch.din} -> M_{ch.dout}")
    if len(K.legs) == 4 and len(ch.in_dims) == 2 and len(ch.out_dims) == 2:
        if tuple(lg.size for lg in K.legs) != ch.in_dims + ch.out_dims:
            raise LegError("subspace legs do not match the channel factors (X2, Y1, X1, Y2)")


def range_vectors(ch, tol=None):
    """Orthonormal range of the twisted Choi matrix (rows), flattened over ``(in, out)``."""
    ks = kraus_space(ch, tol)
    return ks.basis.transpose(0, 2, 1).reshape(ks.rank, -1)


def fits(ch, K, tol=None):
    """Does every range vector of the twisted Choi matrix lie in ``K``?"""
    tol = resolve_tol(tol)
    K = _target(K)
    _check_channel_legs(ch, K)
    return all(K.contains(v, tol) for v in range_vectors(ch, tol))


def fits_via_kraus(ch, K, tol=None):
    """Same question via the channel's own Kraus family and the operator space ``theta(K)``."""
    tol = resolve_tol(tol)
    K = _target(K)
    _check_channel_legs(ch, K)
    Kt = shuffled_operator_space(K) if len(K.legs) == 4 else _operator_space_two(K)
    kraus = ch._kraus if ch._kraus is not None else ch.kraus(tol)
    F = orthonormal_rows(np.array([A.reshape(-1) for A in kraus]), tol)
    return all(Kt.contains(A.reshape(Kt.shape), tol) for A in F)


def _operator_space_two(K):
    n, m = K.legs[0].size, K.legs[1].size
    return OperatorSubspace((m, n), K.basis.reshape(-1, n, m).transpose(0, 2, 1), check=False)


def slice_membership_check(zeta, U1, U2, tol=None):
    """Slice criteria for ``zeta`` on ``(X1, Y1bar, X2bar, Y2)``.

    ``forward``: ``L_{u1_bar}(zeta) in U2`` for every basis vector ``u1`` of ``U1``.
    ``iff``: additionally ``L_{u2_bar}(zeta) in U1`` for every basis vector ``u2`` of ``U2``.
    """
    tol = resolve_tol(tol)
    if isinstance(zeta, ComplexTensor):
        data = zeta.data
    else:
        data = np.asarray(zeta)
    l1, l2 = _check_pair(U1, U2)
    data = np.asarray(data, dtype=np.complex128).reshape(tuple(lg.size for lg in l1 + l2))
    zt = ComplexTensor(l1 + l2, data)
    scale = max(zt.norm(), 1e-300)
    forward = True
    for u in U1.basis:
        f = conjugate(ComplexTensor(l1, u))
        s = slice_map(f, zt, (0, 1))
        if U2.subspace.residual(s.flat) > tol * scale:
            forward = False
            break
    back = True
    for u in U2.basis:
        f = conjugate(ComplexTensor(l2, u))
        s = slice_map(f, zt, (2, 3))
        if U1.subspace.residual(s.flat) > tol * scale:
            back = False
            break
    return {"forward": forward, "iff": forward and back}
