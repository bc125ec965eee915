"""Quasi-homomorphisms and homomorphisms of quantum hypergraphs.

Conventions: ``U1`` lives on ``(X1, Y1bar)`` and ``U2`` on ``(X2bar, Y2)``.
A candidate correlation is a channel ``Gamma : M_{X2 Y1} -> M_{X1 Y2}`` with
quad ``(X2, Y1, X1, Y2)``.  Operator spaces:

* ``U2~ = theta(U2)`` in ``L(C^X2, C^Y2)``;
* ``U1^*`` (hat-star) ``= {conj(u)^T}`` in ``L(C^X1, C^Y1)``;
* ``L`` in ``L(C^Y1, C^Y2)`` and ``R`` in ``L(C^X2, C^X1)``.
"""
from dataclasses import dataclass, field
from itertools import product

import numpy as np
import scipy.linalg
from scipy.optimize import linprog

from . import _kernels
from ._config import resolve_tol
from .channels import Channel, ClassicalChannel, gamma_of_classical, kraus_space
from .correlations import WITNESS_ORDER, LocWitness, QnsCorrelation, from_loc, verify_qns
from .feasibility import FeasibilityProblem, SolverConfig
from .hypergraphs import QuantumHypergraph, arrow, fits, is_classical
from .tensor import LegError, OperatorSubspace, eig_hermitian, product_space

MODES = ("quasi", "hom", "full_hom")
TYPES = ("loc", "q", "qc", "ns")


class HomError(ValueError):
    pass


@dataclass(frozen=True)
class HomInstance:
    U1: QuantumHypergraph
    U2: QuantumHypergraph
    mode: str = "hom"
    type: str = "ns"

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.type not in TYPES:
            raise ValueError(f"type must be one of {TYPES}")
        if self.U1.barred_first or not self.U2.barred_first:
            raise LegError("U1 must live on (X1, Y1bar) and U2 on (X2bar, Y2)")

    @property
    def quad(self):
        """``(X2, Y1, X1, Y2)``."""
        return (self.U2.nx, self.U1.ny, self.U1.nx, self.U2.ny)

    @property
    def arrow_mode(self):
        return "quasi" if self.mode == "quasi" else "hom"

    def arrow(self):
        return arrow(self.U1, self.U2, self.arrow_mode)


# ---------------------------------------------------------------------------
# operator spaces attached to an instance
# ---------------------------------------------------------------------------


def hat_star(U1):
    """``U1^*`` in ``L(C^X1, C^Y1)``: entrywise conjugates, transposed, of the coordinate arrays."""
    if U1.barred_first:
        raise LegError("hat_star needs the signature (X1, Y1bar)")
    B = np.conj(U1.basis.reshape(-1, U1.nx, U1.ny)).transpose(0, 2, 1)
    return OperatorSubspace((U1.ny, U1.nx), B, check=False)


def n_bracket(N, M, dims):
    """``N[M]_{y2,x2} = sum N_{(x1,y2),(x2,y1)} M_{y1,x1}`` with ``dims = (X2, Y1, X1, Y2)``."""
    x2, y1, x1, y2 = dims
    N = np.asarray(N).reshape(x1, y2, x2, y1)
    M = np.asarray(M)
    if M.shape != (y1, x1):
        raise ValueError(f"M must have shape {(y1, x1)}, got {M.shape}")
    return np.einsum("abcd,da->bc", N, M)


def n_bracket_adjoint(N, W, dims):
    """``N^*[W]_{y1,x1} = sum conj(N_{(x1,y2),(x2,y1)}) W_{y2,x2}``."""
    x2, y1, x1, y2 = dims
    N = np.asarray(N).reshape(x1, y2, x2, y1)
    W = np.asarray(W)
    if W.shape != (y2, x2):
        raise ValueError(f"W must have shape {(y2, x2)}, got {W.shape}")
    return np.einsum("abcd,bc->da", N.conj(), W)


def bracket_condition(ch, inst, tol=None):
    """Kraus-wise test ``N[U1^*] in U2~`` and ``N^*[U2~] in U1^*``.

    The Kraus family is the orthonormal basis of the Kraus space, so every
    operator has unit norm and residuals are compared to ``tol`` directly.
    Returns ``(ok, failure)`` where ``failure`` names the offending pair.
    """
    tol = resolve_tol(tol)
    dims = inst.quad
    Hs = hat_star(inst.U1)
    Ut = inst.U2.tilde()
    for i, N in enumerate(kraus_space(ch, tol).basis):
        for j, U in enumerate(Hs.basis):
            if Ut.residual(n_bracket(N, U, dims)) > tol:
                return False, {"side": "N[U1]", "kraus_index": i, "basis_index": j}
        for j, W in enumerate(Ut.basis):
            if Hs.residual(n_bracket_adjoint(N, W, dims)) > tol:
                return False, {"side": "N*[U2]", "kraus_index": i, "basis_index": j}
    return True, None


# ---------------------------------------------------------------------------
# verification
# ---------------------------------------------------------------------------


@dataclass
class HomReport:
    verdict: str  # pass | fail | witness-required
    checks: dict = field(default_factory=dict)
    failure: dict | None = None

    @property
    def passed(self):
        return self.verdict == "pass"

    def as_dict(self):
        return {"verdict": self.verdict, "checks": self.checks, "failure": self.failure}


def _witness_matches(g, tol):
    P = g.witness.entries()
    return float(np.max(np.abs(P - g.entries()))) <= max(tol, 1e-12) * 10


def verify_hom(g, inst, tol=None):
    tol = resolve_tol(tol)
    if tuple(g.quad) != inst.quad:
        raise ValueError(f"correlation quad {g.quad} does not match instance {inst.quad}")
    checks = {}
    verdict = "pass"
    failure = None

    if inst.type != "ns":
        kind = g.witness_kind
        if kind is None or kind == "qa" or WITNESS_ORDER[kind] > WITNESS_ORDER[inst.type]:
            checks["type"] = "witness-required"
            verdict = "witness-required"
        elif not _witness_matches(g, tol):
            checks["type"] = "fail"
            verdict, failure = "fail", {"check": "type", "reason": "witness does not reproduce the correlation"}
        else:
            checks["type"] = "pass"

    rep = verify_qns(g.channel, g.quad, tol)
    checks["qns"] = "pass" if rep.is_qns else "fail"
    checks["qns_residual"] = rep.residual
    if not rep.is_qns and verdict != "fail":
        verdict, failure = "fail", {"check": "qns", "residual": rep.residual}

    ok = fits(g.channel, inst.arrow(), tol)
    checks["fits"] = "pass" if ok else "fail"
    if not ok and verdict != "fail":
        verdict, failure = "fail", {"check": "fits", "arrow": inst.arrow_mode}

    if inst.mode in ("hom", "full_hom"):
        bok, where = bracket_condition(g.channel, inst, tol)
        checks["bracket"] = "pass" if bok else "fail"
        if bok != ok:
            checks["bracket_disagrees_with_fits"] = True
        if not bok and verdict != "fail":
            verdict, failure = "fail", dict(check="bracket", **where)

    if inst.mode == "full_hom":
        GI = g.channel.apply(np.eye(g.channel.din))
        w, _ = eig_hermitian(GI, 1e-6)
        checks["gamma_I_min_eigenvalue"] = float(w[0])
        if not w[0] > tol:
            checks["full"] = "fail"
            if verdict != "fail":
                verdict, failure = "fail", {"check": "full", "min_eigenvalue": float(w[0])}
        else:
            checks["full"] = "pass"
    return HomReport(verdict, checks, failure)


# ---------------------------------------------------------------------------
# ns decision
# ---------------------------------------------------------------------------


def ns_constraints(quad):
    """Trace preservation and both marginal conditions as functionals on the Choi matrix.

    Returns ``(L, b)`` with ``L`` of shape ``(m, D, D)``, acting on the Choi
    matrix indexed by ``(x2, y1, x1, y2)``.
    """
    nx, ny, na, nb = quad
    shape = (nx, ny, na, nb)
    D = nx * ny * na * nb
    rows, targets = [], []

    def zero():
        return np.zeros(shape + shape)

    # trace preservation
    for x, y, xp, yp in product(range(nx), range(ny), range(nx), range(ny)):
        L = zero()
        for a, b in product(range(na), range(nb)):
            L[x, y, a, b, xp, yp, a, b] = 1.0
        rows.append(L)
        targets.append(1.0 if (x, y) == (xp, yp) else 0.0)
    # sum_a P = delta_{x,x'} c(y, y', b, b')
    for y, yp, b, bp in product(range(ny), range(ny), range(nb), range(nb)):
        for x, xp in product(range(nx), range(nx)):
            if x == xp and x == 0:
                continue
            L = zero()
            for a in range(na):
                L[x, y, a, b, xp, yp, a, bp] += 1.0
                if x == xp:
                    L[0, y, a, b, 0, yp, a, bp] -= 1.0
            rows.append(L)
            targets.append(0.0)
    # sum_b P = delta_{y,y'} d(x, x', a, a')
    for x, xp, a, ap in product(range(nx), range(nx), range(na), range(na)):
        for y, yp in product(range(ny), range(ny)):
            if y == yp and y == 0:
                continue
            L = zero()
            for b in range(nb):
                L[x, y, a, b, xp, yp, ap, b] += 1.0
                if y == yp:
                    L[x, 0, a, b, xp, 0, ap, b] -= 1.0
            rows.append(L)
            targets.append(0.0)
    return np.array(rows).reshape(-1, D, D), np.array(targets)


@dataclass
class NsDecision:
    feasible: object  # True, False or "unknown"
    correlation: QnsCorrelation | None
    residual: float
    source: str | None = None  # projection | LP
    certificate: str | None = None  # LP | linear
    iters: int = 0
    solver_status: str | None = None

    @property
    def verdict(self):
        return {True: "feasible", False: "infeasible"}.get(self.feasible, "unknown")

    def as_dict(self):
        return {
            "verdict": self.verdict,
            "residual": self.residual,
            "source": self.source,
            "certificate": self.certificate,
            "iterations": self.iters,
            "solver_status": self.solver_status,
        }


def classical_pair(inst, tol=None):
    """``(E1, E2)`` when both hypergraphs of the instance are classical, else ``None``."""
    ok1, E1 = is_classical(inst.U1, tol)
    ok2, E2 = is_classical(inst.U2, tol)
    return (E1, E2) if ok1 and ok2 else None


def classical_ns_lp(E1, E2, iff=False):
    """Is there a no-signalling ``p(x1, y2 | x2, y1)`` supported on the classical arrow?

    Returns ``(feasible, table)`` with ``table[x2, y1, x1, y2]``.
    """
    nx1, ny1 = E1.nx, E1.ny
    nx2, ny2 = E2.nx, E2.ny
    allowed = []
    for x2, y1, x1, y2 in product(range(nx2), range(ny1), range(nx1), range(ny2)):
        a = (x1, y1) in E1.edges
        b = (x2, y2) in E2.edges
        if (a == b) if iff else ((not a) or b):
            allowed.append((x2, y1, x1, y2))
    col = {t: i for i, t in enumerate(allowed)}
    n = len(allowed)
    A, rhs = [], []

    def row(coeffs):
        r = np.zeros(n)
        for t, c in coeffs:
            if t in col:
                r[col[t]] += c
        return r

    for x2, y1 in product(range(nx2), range(ny1)):
        A.append(row([((x2, y1, x1, y2), 1.0) for x1, y2 in product(range(nx1), range(ny2))]))
        rhs.append(1.0)
    for y1, y2, x2 in product(range(ny1), range(ny2), range(1, nx2)):
        A.append(row([((x2, y1, x1, y2), 1.0) for x1 in range(nx1)] + [((0, y1, x1, y2), -1.0) for x1 in range(nx1)]))
        rhs.append(0.0)
    for x2, x1, y1 in product(range(nx2), range(nx1), range(1, ny1)):
        A.append(row([((x2, y1, x1, y2), 1.0) for y2 in range(ny2)] + [((x2, 0, x1, y2), -1.0) for y2 in range(ny2)]))
        rhs.append(0.0)
    if n == 0:
        return False, None
    res = linprog(np.zeros(n), A_eq=np.array(A), b_eq=np.array(rhs), bounds=[(0, None)] * n, method="highs")
    if res.status != 0:
        return False, None
    table = np.zeros((nx2, ny1, nx1, ny2))
    for t, v in zip(allowed, res.x):
        table[t] = max(v, 0.0)
    return True, table


def _correlation_from_table(table):
    nx2, ny1, nx1, ny2 = table.shape
    N = table.reshape(nx2 * ny1, nx1 * ny2).T
    N = N / N.sum(axis=0)
    ch = gamma_of_classical(ClassicalChannel(N), (nx2, ny1), (nx1, ny2))
    return QnsCorrelation(ch, (nx2, ny1, nx1, ny2), check=False)


def decide_ns(inst, cfg=None, use_lp=True, tol=None):
    """Three-valued decision of ns-(quasi-)homomorphism for an instance.

    Feasibility is certified by projections (or, on classical instances, by
    the LP solution); infeasibility only by the LP or by a linear obstruction.
    """
    cfg = cfg if isinstance(cfg, SolverConfig) else SolverConfig.from_dict(cfg)
    quad = inst.quad
    K = inst.arrow().shuffled
    lp_table = None
    pair = classical_pair(inst, tol) if use_lp else None
    if pair is not None:
        ok, lp_table = classical_ns_lp(pair[0], pair[1], iff=inst.arrow_mode == "hom")
        if not ok:
            return NsDecision(False, None, float("inf"), certificate="LP")
    if K.rank == 0:
        return NsDecision(False, None, float("inf"), certificate="rank")
    L, b = ns_constraints(quad)
    prob = FeasibilityProblem(K.basis.T, L, b)
    if not prob.affine_consistent:
        return NsDecision(False, None, prob.consistency, certificate="linear")

    z0 = _kernels.hermitian_pack(np.eye(prob.k) / (quad[2] * quad[3]))
    res = prob.solve(cfg, z0)
    vtol = max(10 * cfg.eps, resolve_tol(tol))
    if res.status == "feasible":
        ch = Channel(res.C, quad[:2], quad[2:], check=False)
        g = QnsCorrelation(ch, quad, check=False)
        if verify_qns(ch, quad, vtol).is_qns:
            return NsDecision(True, g, res.gap, source="projection", iters=res.iters, solver_status=res.solver_status)
    if lp_table is not None:
        return NsDecision(True, _correlation_from_table(lp_table), 0.0, source="LP", iters=res.iters, solver_status=res.solver_status)
    return NsDecision("unknown", None, res.gap, iters=res.iters, solver_status=res.solver_status)


# ---------------------------------------------------------------------------
# column isometries
# ---------------------------------------------------------------------------


def column_isometry_exists(M, cfg=None):
    """Look for ``A_i in M`` with ``sum A_i^* A_i = I`` via a PSD Gram matrix.

    Returns ``{"exists": True|False|"unknown", "gram": G, "operators": [...],
    "residual": r}``.
    """
    cfg = cfg if isinstance(cfg, SolverConfig) else SolverConfig.from_dict(cfg or {"eps": 1e-11})
    r = M.rank
    n = M.shape[1]
    if r == 0:
        return {"exists": False, "gram": None, "operators": [], "residual": float("inf"), "certificate": "linear"}
    B = M.basis
    # L[(i, j)][k, l] = (B_k^* B_l)[i, j]
    BB = np.einsum("kai,laj->ijkl", B.conj(), B).reshape(n * n, r, r)
    targets = np.eye(n).reshape(-1)
    prob = FeasibilityProblem(np.eye(r), BB, targets)
    if not prob.affine_consistent:
        return {"exists": False, "gram": None, "operators": [], "residual": prob.consistency, "certificate": "linear"}
    res = prob.solve(cfg)
    if res.status != "feasible":
        return {"exists": "unknown", "gram": None, "operators": [], "residual": res.gap, "certificate": None}
    G = res.Z
    w, V = np.linalg.eigh((G + G.conj().T) / 2)
    ops = []
    for lam, v in zip(w, V.T):
        if lam > 1e-14 * max(w[-1], 1.0):
            g = np.sqrt(lam) * v.conj()
            ops.append(np.einsum("k,kab->ab", g, B))
    S = sum(A.conj().T @ A for A in ops)
    resid = float(np.max(np.abs(S - np.eye(n))))
    return {"exists": True, "gram": G, "operators": ops, "residual": resid, "certificate": None}


# ---------------------------------------------------------------------------
# TROs
# ---------------------------------------------------------------------------


def left_nondegenerate(M, tol=None):
    """``span(M^* K) = H``: the stacked basis has trivial kernel."""
    tol = resolve_tol(tol)
    if M.rank == 0:
        return False
    S = np.vstack(list(M.basis))
    return int(np.linalg.matrix_rank(S, tol=tol * max(np.linalg.norm(S, 2), 1e-300))) == M.shape[1]


def right_nondegenerate(M, tol=None):
    """``span(M H) = K``: the side-by-side basis has full row rank."""
    tol = resolve_tol(tol)
    if M.rank == 0:
        return False
    S = np.hstack(list(M.basis))
    return int(np.linalg.matrix_rank(S, tol=tol * max(np.linalg.norm(S, 2), 1e-300))) == M.shape[0]


def tro_check(M, tol=None):
    tol = resolve_tol(tol)
    is_tro = True
    for S in M.basis:
        for T in M.basis:
            ST = S @ T.conj().T
            for R in M.basis:
                if M.residual(ST @ R) > tol:
                    is_tro = False
                    break
            if not is_tro:
                break
        if not is_tro:
            break
    out = {"is_tro": is_tro, "left_nondeg": left_nondegenerate(M, tol), "right_nondeg": right_nondegenerate(M, tol)}
    M._tags.update(out)
    return out


def tro_generate(M0, tol=None):
    """Smallest TRO containing ``M0``: iterate ``M <- span(M + M M^* M)``."""
    tol = resolve_tol(tol)
    M = M0
    cap = (M0.shape[0] * M0.shape[1]) ** 2
    for _ in range(cap):
        prods = [S @ T.conj().T @ R for S in M.basis for T in M.basis for R in M.basis]
        N = M.sum(OperatorSubspace.span(prods, shape=M.shape, tol=tol), tol) if prods else M
        if N.rank == M.rank:
            return M
        M = N
    raise RuntimeError("TRO closure did not stabilize")


def kernel_cover(M, adjoint=False, tol=None):
    """Operators from the basis of ``M`` (or their adjoints) with trivial common kernel.

    Greedy: walk the basis in order and keep an element whenever it does not
    vanish on the current common kernel.
    """
    tol = resolve_tol(tol)
    ops = [B.conj().T if adjoint else B for B in M.basis]
    if not ops:
        raise HomError("the zero space has a nonzero common kernel")
    n = ops[0].shape[1]
    stacked = np.vstack(ops)
    if np.linalg.matrix_rank(stacked, tol=tol * max(np.linalg.norm(stacked, 2), 1e-300)) < n:
        raise HomError("common kernel is nonzero; no cover exists")
    chosen = []
    kern = np.eye(n, dtype=np.complex128)
    for T in ops:
        if kern.shape[1] == 0:
            break
        if np.linalg.norm(T @ kern, 2) > tol:
            chosen.append(T)
            kern = scipy.linalg.null_space(np.vstack(chosen), rcond=tol)
    if kern.shape[1] != 0:  # pragma: no cover - excluded by the rank test above
        raise HomError("greedy cover did not reach a trivial kernel")
    return chosen


def inverse_sqrt(K, tol=None):
    """``K^{-1/2}`` for positive definite ``K``; rejects numerically singular input."""
    tol = resolve_tol(tol)
    w, V = eig_hermitian(K, tol)
    floor = tol * max(float(np.max(np.abs(w))), 1e-300)
    if w[0] <= floor:
        raise HomError(f"operator is not invertible (smallest eigenvalue {w[0]:.3e})")
    return (V / np.sqrt(w)) @ V.conj().T


def _inclusion(left, mid, right, target, tol):
    """First basis triple with ``l m r`` outside ``target``, or ``None``."""
    for i, B in enumerate(left.basis):
        for j, U in enumerate(mid.basis):
            BU = B @ U
            for k, A in enumerate(right.basis):
                if target.residual(BU @ A) > tol:
                    return (i, j, k)
    return None


def _check_shapes(L, R, inst):
    x2, y1, x1, y2 = inst.quad
    if L.shape != (y2, y1):
        raise ValueError(f"L must live in L(C^{y1}, C^{y2})")
    if R.shape != (x1, x2):
        raise ValueError(f"R must live in L(C^{x2}, C^{x1})")


def loc_quasi_from_spaces(L, R, inst, cfg=None, tol=None):
    """Build ``Phi (x) Psi`` from column isometries in ``R`` and ``L`` when ``L U1^* R`` sits in ``U2~``."""
    tol = resolve_tol(tol)
    _check_shapes(L, R, inst)
    Hs, Ut = hat_star(inst.U1), inst.U2.tilde()
    bad = _inclusion(L, Hs, R, Ut, tol)
    if bad is not None:
        return {"holds": False, "correlation": None, "failure": {"check": "inclusion", "triple": bad}}
    ciL = column_isometry_exists(L, cfg)
    ciR = column_isometry_exists(R, cfg)
    for name, ci in (("L", ciL), ("R", ciR)):
        if ci["exists"] is not True:
            return {"holds": ci["exists"], "correlation": None, "failure": {"check": "column_isometry", "space": name}}
    phi = Channel.from_kraus(ciR["operators"], tol=1e-7)
    psi = Channel.from_kraus(ciL["operators"], tol=1e-7)
    g = from_loc(LocWitness(((1.0, phi, psi),)), tol=1e-7)
    rep = verify_hom(g, HomInstance(inst.U1, inst.U2, "quasi", "loc"), tol=1e-7)
    return {"holds": rep.passed, "correlation": g, "failure": rep.failure, "report": rep}


def _normalized_cover(M, full, tol):
    ops = kernel_cover(M, False, tol)
    if full:
        ops = ops + [T.conj().T for T in kernel_cover(M, True, tol)]
    K = sum(A.conj().T @ A for A in ops)
    Kih = inverse_sqrt(K, tol)
    return [A @ Kih for A in ops]


def loc_hom_from_tros(L, R, inst, full=False, tol=None):
    """Constructive direction of the TRO characterization of (fully) local homomorphism."""
    tol = resolve_tol(tol)
    _check_shapes(L, R, inst)
    Hs, Ut = hat_star(inst.U1), inst.U2.tilde()
    bad = _inclusion(L, Hs, R, Ut, tol)
    if bad is not None:
        return {"holds": False, "correlation": None, "failure": {"check": "L U1* R in U2~", "triple": bad}}
    bad = _inclusion(L.adjoint(), Ut, R.adjoint(), Hs, tol)
    if bad is not None:
        return {"holds": False, "correlation": None, "failure": {"check": "L* U2~ R* in U1*", "triple": bad}}
    for name, M in (("L", L), ("R", R)):
        t = tro_check(M, tol)
        if not t["is_tro"]:
            return {"holds": False, "correlation": None, "failure": {"check": "tro", "space": name}}
        if not t["left_nondeg"] or (full and not t["right_nondeg"]):
            return {"holds": False, "correlation": None, "failure": {"check": "non-degenerate", "space": name}}
    try:
        A = _normalized_cover(R, full, tol)
        B = _normalized_cover(L, full, tol)
    except HomError as exc:
        return {"holds": False, "correlation": None, "failure": {"check": "cover", "reason": str(exc)}}
    for name, M, ops in (("R", R, A), ("L", L, B)):
        for T in ops:
            if not M.contains(T, tol=1e-7):
                return {"holds": "unknown", "correlation": None, "failure": {"check": "normalized operator outside TRO", "space": name}}
    phi = Channel.from_kraus(A, tol=1e-7)
    psi = Channel.from_kraus(B, tol=1e-7)
    g = from_loc(LocWitness(((1.0, phi, psi),)), tol=1e-7)
    mode = "full_hom" if full else "hom"
    rep = verify_hom(g, HomInstance(inst.U1, inst.U2, mode, "loc"), tol=1e-7)
    return {"holds": rep.passed, "correlation": g, "failure": rep.failure, "report": rep, "phi": phi, "psi": psi}


__all__ = [
    "HomError",
    "HomInstance",
    "HomReport",
    "NsDecision",
    "OperatorSubspace",
    "bracket_condition",
    "classical_ns_lp",
    "classical_pair",
    "column_isometry_exists",
    "decide_ns",
    "hat_star",
    "kernel_cover",
    "left_nondegenerate",
    "loc_hom_from_tros",
    "loc_quasi_from_spaces",
    "n_bracket",
    "n_bracket_adjoint",
    "ns_constraints",
    "product_space",
    "right_nondegenerate",
    "tro_check",
    "tro_generate",
    "verify_hom",
]
