"""Hot numeric kernels.

Every kernel exists twice: a numba ``@njit`` version and a pure-numpy
version.  The numba path is used when numba imports and the environment
variable ``QHYPER_DISABLE_NUMBA`` is unset (or ``0``).  Call
:func:`set_backend` to switch at runtime, e.g. for benchmarking.
"""
import os

import numpy as np

try:
    import numba
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    numba = None
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]):
            return args[0]

        def decorator(func):
            return func

        return decorator


def _env_disabled():
    return os.environ.get("QHYPER_DISABLE_NUMBA", "0").strip().lower() not in ("", "0", "false", "no")


_USE_NUMBA = HAVE_NUMBA and not _env_disabled()

STATUS_CONVERGED = 0
STATUS_MAX_ITERS = 1
STATUS_STALLED = 2


# ---------------------------------------------------------------------------
# Hermitian <-> real parameter vectors
#
# The ordering is: k diagonal entries, then for each pair i < j (row-major)
# the symmetric coordinate sqrt(2) Re Z_ij followed by the antisymmetric
# coordinate sqrt(2) Im Z_ij.  The map is an isometry from the Frobenius
# inner product to the Euclidean one.
# ---------------------------------------------------------------------------

_SQRT2 = np.sqrt(2.0)


def _unpack_np(z, k):
    Z = np.zeros((k, k), dtype=np.complex128)
    idx = np.arange(k)
    Z[idx, idx] = z[:k]
    iu, ju = np.triu_indices(k, 1)
    re = z[k::2][: len(iu)] / _SQRT2
    im = z[k + 1::2][: len(iu)] / _SQRT2
    Z[iu, ju] = re + 1j * im
    Z[ju, iu] = re - 1j * im
    return Z


def _pack_np(Z):
    k = Z.shape[0]
    iu, ju = np.triu_indices(k, 1)
    z = np.empty(k * k)
    z[:k] = np.real(np.diagonal(Z))
    off = Z[iu, ju] * _SQRT2
    z[k::2] = off.real
    z[k + 1::2] = off.imag
    return z


@njit(cache=True)
def _unpack_nb(z, k):
    Z = np.zeros((k, k), dtype=np.complex128)
    s = np.sqrt(2.0)
    for i in range(k):
        Z[i, i] = z[i]
    p = k
    for i in range(k):
        for j in range(i + 1, k):
            v = (z[p] + 1j * z[p + 1]) / s
            Z[i, j] = v
            Z[j, i] = np.conj(v)
            p += 2
    return Z


@njit(cache=True)
def _pack_nb(Z):
    k = Z.shape[0]
    z = np.empty(k * k)
    s = np.sqrt(2.0)
    for i in range(k):
        z[i] = Z[i, i].real
    p = k
    for i in range(k):
        for j in range(i + 1, k):
            z[p] = Z[i, j].real * s
            z[p + 1] = Z[i, j].imag * s
            p += 2
    return z


def _psd_project_np(z, k):
    Z = _unpack_np(z, k)
    w, U = np.linalg.eigh(Z)
    w = np.maximum(w, 0.0)
    return _pack_np((U * w) @ U.conj().T)


@njit(cache=True)
def _psd_project_nb(z, k):
    Z = _unpack_nb(z, k)
    w, U = np.linalg.eigh(Z)
    for i in range(k):
        if w[i] < 0.0:
            w[i] = 0.0
    Zp = (U * w) @ U.conj().T
    return _pack_nb(Zp)


def _dykstra_np(z0, Q, zp, k, max_iters, eps, check_every, stall_ratio):
    x = z0.copy()
    p = np.zeros_like(x)
    q = np.zeros_like(x)
    y = x.copy()
    gap = np.inf
    last_gap = np.inf
    it = 0
    while it < max_iters:
        it += 1
        v = x + p
        y = v - Q.T @ (Q @ (v - zp))
        p = v - y
        v = y + q
        x = _psd_project_np(v, k)
        q = v - x
        if it % check_every == 0 or it == max_iters:
            gap = np.linalg.norm(Q @ (x - zp))
            if gap <= eps:
                return x, y, it, gap, STATUS_CONVERGED
            if gap > 1e3 * eps and gap > stall_ratio * last_gap:
                return x, y, it, gap, STATUS_STALLED
            last_gap = gap
    gap = np.linalg.norm(Q @ (x - zp))
    if gap <= eps:
        return x, y, it, gap, STATUS_CONVERGED
    return x, y, it, gap, STATUS_MAX_ITERS


@njit(cache=True)
def _dykstra_nb(z0, Q, zp, k, max_iters, eps, check_every, stall_ratio):
    x = z0.copy()
    p = np.zeros_like(x)
    q = np.zeros_like(x)
    y = x.copy()
    QT = np.ascontiguousarray(Q.T)
    gap = np.inf
    last_gap = np.inf
    it = 0
    while it < max_iters:
        it += 1
        v = x + p
        y = v - QT @ (Q @ (v - zp))
        p = v - y
        v = y + q
        x = _psd_project_nb(v, k)
        q = v - x
        if it % check_every == 0 or it == max_iters:
            gap = np.linalg.norm(Q @ (x - zp))
            if gap <= eps:
                return x, y, it, gap, STATUS_CONVERGED
            if gap > 1e3 * eps and gap > stall_ratio * last_gap:
                return x, y, it, gap, STATUS_STALLED
            last_gap = gap
    gap = np.linalg.norm(Q @ (x - zp))
    if gap <= eps:
        return x, y, it, gap, STATUS_CONVERGED
    return x, y, it, gap, STATUS_MAX_ITERS


# ---------------------------------------------------------------------------
# Choi-tensor contractions.  Entry tensors use the index order
# P[x, x', y, y', a, a', b, b'] = <Gamma(e_xx' (x) e_yy'), e_aa' (x) e_bb'>.
# ---------------------------------------------------------------------------


def _star_np(P1, P2):
    # P1 over (X2, Y1, X1, Y2), P2 over (X3, Y2, X2, Y3)
    return np.einsum("abcdefgh,ijghabkl->ijcdefkl", P1, P2, optimize=True)


@njit(cache=True)
def _star_nb(P1, P2):
    nx2, _, ny1, _, nx1, _, ny2, _ = P1.shape
    nx3 = P2.shape[0]
    ny3 = P2.shape[6]
    out = np.zeros((nx3, nx3, ny1, ny1, nx1, nx1, ny3, ny3), dtype=np.complex128)
    for i in range(nx3):
        for j in range(nx3):
            for k in range(ny3):
                for l in range(ny3):
                    for g in range(ny2):
                        for h in range(ny2):
                            for a in range(nx2):
                                for b in range(nx2):
                                    w = P2[i, j, g, h, a, b, k, l]
                                    if w == 0:
                                        continue
                                    for c in range(ny1):
                                        for d in range(ny1):
                                            for e in range(nx1):
                                                for f in range(nx1):
                                                    out[i, j, c, d, e, f, k, l] += P1[a, b, c, d, e, f, g, h] * w
    return out


def _simulate_np(P, E):
    # P over (X2, Y1, X1, Y2); E[x1, x1', y1, y1'] for a map M_X1 -> M_Y1
    return np.einsum("abcdefgh,efcd->abgh", P, E, optimize=True)


@njit(cache=True)
def _simulate_nb(P, E):
    nx2, _, ny1, _, nx1, _, ny2, _ = P.shape
    out = np.zeros((nx2, nx2, ny2, ny2), dtype=np.complex128)
    for a in range(nx2):
        for b in range(nx2):
            for c in range(ny1):
                for d in range(ny1):
                    for e in range(nx1):
                        for f in range(nx1):
                            w = E[e, f, c, d]
                            if w == 0:
                                continue
                            for g in range(ny2):
                                for h in range(ny2):
                                    out[a, b, g, h] += P[a, b, c, d, e, f, g, h] * w
    return out


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------


def using_numba():
    return _USE_NUMBA


def set_backend(name):
    """Select ``"numba"`` or ``"numpy"`` kernels."""
    global _USE_NUMBA
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba is not installed")
    _USE_NUMBA = name == "numba"


def hermitian_unpack(z, k):
    z = np.ascontiguousarray(z, dtype=np.float64)
    return _unpack_nb(z, k) if _USE_NUMBA else _unpack_np(z, k)


def hermitian_pack(Z):
    Z = np.ascontiguousarray(Z, dtype=np.complex128)
    return _pack_nb(Z) if _USE_NUMBA else _pack_np(Z)


def dykstra(z0, Q, zp, k, max_iters, eps, check_every=200, stall_ratio=0.999):
    """Dykstra alternating projections between the PSD cone and an affine set.

    The affine set is ``{z : Q (z - zp) = 0}`` with ``Q`` having orthonormal
    rows.  Returns ``(x, y, iters, gap, status)`` where ``x`` is the last PSD
    iterate, ``y`` the last affine iterate and ``gap`` the affine residual of
    ``x``.
    """
    args = (
        np.ascontiguousarray(z0, dtype=np.float64),
        np.ascontiguousarray(Q, dtype=np.float64),
        np.ascontiguousarray(zp, dtype=np.float64),
        int(k),
        int(max_iters),
        float(eps),
        int(check_every),
        float(stall_ratio),
    )
    fn = _dykstra_nb if _USE_NUMBA else _dykstra_np
    x, y, it, gap, status = fn(*args)
    return x, y, int(it), float(gap), int(status)


def star_contract(P1, P2):
    P1 = np.ascontiguousarray(P1, dtype=np.complex128)
    P2 = np.ascontiguousarray(P2, dtype=np.complex128)
    return _star_nb(P1, P2) if _USE_NUMBA else _star_np(P1, P2)


def simulate_contract(P, E):
    P = np.ascontiguousarray(P, dtype=np.complex128)
    E = np.ascontiguousarray(E, dtype=np.complex128)
    return _simulate_nb(P, E) if _USE_NUMBA else _simulate_np(P, E)
