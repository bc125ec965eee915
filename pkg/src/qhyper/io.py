"""JSON (de)serialization of tensors, channels, correlations and hypergraphs.

Complex numbers are ``[re, im]`` pairs; arrays are row-major.  Loaders raise
:class:`FormatError` carrying a dotted field path.  The formats are
described in ``docs/formats.md``.
"""
import hashlib
import json

import numpy as np

from .channels import Channel, ClassicalChannel
from .correlations import (
    CommutingPairWitness,
    LocWitness,
    QnsCorrelation,
    StochasticOperatorMatrix,
    TensorPairWitness,
)
from .hypergraphs import ArrowSpace, ClassicalHypergraph, QuantumHypergraph, embed_classical
from .tensor import ComplexTensor, Leg, IndexSet, Subspace


class FormatError(ValueError):
    def __init__(self, path, message):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


def _need(d, key, path):
    if not isinstance(d, dict):
        raise FormatError(path, "expected an object")
    if key not in d:
        raise FormatError(f"{path}.{key}" if path else key, "missing field")
    return d[key]


def _sub(path, key):
    return f"{path}.{key}" if path else str(key)


# ---------------------------------------------------------------------------
# numbers and arrays
# ---------------------------------------------------------------------------


def encode_array(a):
    """Nested lists mirroring the array shape, with ``[re, im]`` leaves."""
    a = np.asarray(a, dtype=np.complex128)
    return np.stack([a.real, a.imag], axis=-1).tolist()


def decode_array(obj, path="", ndim=None):
    """Inverse of :func:`encode_array`; real scalars are accepted in place of pairs."""
    try:
        arr = np.asarray(obj, dtype=np.float64)
    except (TypeError, ValueError):
        raise FormatError(path, "array must be rectangular and numeric") from None
    if ndim is not None and arr.ndim == ndim:
        out = arr.astype(np.complex128)
    elif arr.ndim >= 1 and arr.shape[-1] == 2 and (ndim is None or arr.ndim == ndim + 1):
        out = arr[..., 0] + 1j * arr[..., 1]
    else:
        raise FormatError(path, f"unexpected array shape {arr.shape}")
    if not np.all(np.isfinite(out)):
        raise FormatError(path, "entries must be finite")
    return out


def encode_matrix(M):
    return encode_array(np.asarray(M))


def decode_matrix(obj, path=""):
    return decode_array(obj, path, ndim=2)


def encode_vector(v):
    return encode_array(np.asarray(v).reshape(-1))


def decode_vector(obj, path=""):
    return decode_array(obj, path, ndim=1)


# ---------------------------------------------------------------------------
# tensors
# ---------------------------------------------------------------------------


def encode_leg(lg):
    return {"set": lg.name, "size": lg.size, "barred": lg.barred}


def decode_leg(obj, path=""):
    name = _need(obj, "set", path)
    size = _need(obj, "size", path)
    if not isinstance(size, int) or size < 1:
        raise FormatError(_sub(path, "size"), "must be a positive integer")
    return Leg(IndexSet(str(name), size), bool(obj.get("barred", False)))


def encode_tensor(t):
    return {"legs": [encode_leg(lg) for lg in t.legs], "data": encode_vector(t.flat)}


def decode_tensor(obj, path=""):
    legs = tuple(decode_leg(lg, f"{_sub(path, 'legs')}[{i}]") for i, lg in enumerate(_need(obj, "legs", path)))
    data = decode_vector(_need(obj, "data", path), _sub(path, "data"))
    try:
        return ComplexTensor(legs, data)
    except ValueError as exc:
        raise FormatError(_sub(path, "data"), str(exc)) from None


# ---------------------------------------------------------------------------
# channels
# ---------------------------------------------------------------------------


def _dims_field(obj, key, default):
    v = obj.get(key, default)
    return [v] if isinstance(v, int) else list(v)


def encode_channel(ch, in_name="X", out_name="Y", with_kraus=True):
    out = {"in": in_name, "out": out_name, "in_dims": list(ch.in_dims), "out_dims": list(ch.out_dims)}
    if with_kraus and ch.trace_preserving:
        out["kraus"] = [encode_matrix(A) for A in ch.kraus()]
    else:
        out["choi"] = encode_matrix(ch.choi)
    return out


def decode_channel(obj, path="", tol=None, check=True):
    if not isinstance(obj, dict):
        raise FormatError(path, "expected an object")
    try:
        if "stochastic" in obj:
            from .channels import gamma_of_classical

            n = ClassicalChannel(np.asarray(obj["stochastic"], dtype=float), tol)
            in_dims = _dims_field(obj, "in_dims", n.nx)
            out_dims = _dims_field(obj, "out_dims", n.ny)
            return gamma_of_classical(n, in_dims, out_dims)
        if "kraus" in obj:
            kraus = [decode_matrix(A, f"{_sub(path, 'kraus')}[{i}]") for i, A in enumerate(obj["kraus"])]
            if not kraus:
                raise FormatError(_sub(path, "kraus"), "needs at least one operator")
            in_dims = _dims_field(obj, "in_dims", kraus[0].shape[1])
            out_dims = _dims_field(obj, "out_dims", kraus[0].shape[0])
            return Channel.from_kraus(kraus, in_dims, out_dims, tol=tol, check=check)
        if "choi" in obj:
            C = decode_matrix(obj["choi"], _sub(path, "choi"))
            in_dims = _dims_field(obj, "in_dims", None) if "in_dims" in obj else None
            out_dims = _dims_field(obj, "out_dims", None) if "out_dims" in obj else None
            if in_dims is None or out_dims is None:
                raise FormatError(path, "a Choi payload needs in_dims and out_dims")
            return Channel.from_choi(C, in_dims, out_dims, tol=tol, check=check)
    except FormatError:
        raise
    except ValueError as exc:
        raise FormatError(path, str(exc)) from None
    raise FormatError(path, "channel needs one of 'kraus', 'choi' or 'stochastic'")


# ---------------------------------------------------------------------------
# correlations
# ---------------------------------------------------------------------------


def encode_som(E):
    return {"X": E.nx, "A": E.na, "H": E.dh, "matrix": encode_matrix(E.matrix())}


def decode_som(obj, path=""):
    nx, na, dh = (_need(obj, k, path) for k in ("X", "A", "H"))
    M = decode_matrix(_need(obj, "matrix", path), _sub(path, "matrix"))
    if M.shape != (nx * na * dh,) * 2:
        raise FormatError(_sub(path, "matrix"), f"expected shape {(nx * na * dh,) * 2}")
    try:
        return StochasticOperatorMatrix.from_matrix(M, nx, na, dh)
    except ValueError as exc:
        raise FormatError(path, str(exc)) from None


def encode_witness(w):
    if w is None:
        return None
    if w.kind == "loc":
        return {"loc": [{"w": lam, "phi": encode_channel(phi), "psi": encode_channel(psi)} for lam, phi, psi in w.terms]}
    if w.kind == "qc":
        return {"commuting": {"E": encode_som(w.E), "F": encode_som(w.F), "xi": encode_vector(w.xi)}}
    if w.kind == "q":
        return {"tensor": {"E": encode_som(w.E), "F": encode_som(w.F), "xi": encode_matrix(w.xi)}}
    return None


def decode_witness(obj, path=""):
    try:
        if "loc" in obj:
            terms = []
            for i, t in enumerate(obj["loc"]):
                p = f"{_sub(path, 'loc')}[{i}]"
                terms.append((float(_need(t, "w", p)), decode_channel(_need(t, "phi", p), _sub(p, "phi")), decode_channel(_need(t, "psi", p), _sub(p, "psi"))))
            return LocWitness(tuple(terms))
        if "commuting" in obj:
            c = obj["commuting"]
            p = _sub(path, "commuting")
            return CommutingPairWitness(
                decode_som(_need(c, "E", p), _sub(p, "E")), decode_som(_need(c, "F", p), _sub(p, "F")), decode_vector(_need(c, "xi", p), _sub(p, "xi"))
            )
        if "tensor" in obj:
            c = obj["tensor"]
            p = _sub(path, "tensor")
            return TensorPairWitness(
                decode_som(_need(c, "E", p), _sub(p, "E")), decode_som(_need(c, "F", p), _sub(p, "F")), decode_matrix(_need(c, "xi", p), _sub(p, "xi"))
            )
    except FormatError:
        raise
    except ValueError as exc:
        raise FormatError(path, str(exc)) from None
    raise FormatError(path, "witness needs one of 'loc', 'commuting' or 'tensor'")


def encode_correlation(g):
    out = {"quad": list(g.quad), "channel": encode_channel(g.channel, "XY", "AB")}
    w = encode_witness(g.witness)
    if w is not None:
        out["witness"] = w
    return out


def decode_correlation(obj, path="", tol=None, check=True):
    quad = _need(obj, "quad", path)
    if not (isinstance(quad, list) and len(quad) == 4 and all(isinstance(q, int) and q >= 1 for q in quad)):
        raise FormatError(_sub(path, "quad"), "must be four positive integers [X, Y, A, B]")
    chobj = dict(_need(obj, "channel", path))
    chobj.setdefault("in_dims", quad[:2])
    chobj.setdefault("out_dims", quad[2:])
    ch = decode_channel(chobj, _sub(path, "channel"), tol=tol, check=False)
    w = decode_witness(obj["witness"], _sub(path, "witness")) if obj.get("witness") else None
    return QnsCorrelation(ch, tuple(quad), witness=w, tol=tol, check=check)


# ---------------------------------------------------------------------------
# hypergraphs and instances
# ---------------------------------------------------------------------------


def encode_classical(E):
    return {"X": E.nx, "Y": E.ny, "edges": [list(e) for e in sorted(E.edges)]}


def decode_classical(obj, path=""):
    nx, ny = _need(obj, "X", path), _need(obj, "Y", path)
    edges = _need(obj, "edges", path)
    try:
        return ClassicalHypergraph(int(nx), int(ny), frozenset(tuple(e) for e in edges))
    except (TypeError, ValueError) as exc:
        raise FormatError(_sub(path, "edges"), str(exc)) from None


def encode_subspace(S):
    return {"signature": [encode_leg(lg) for lg in S.legs], "basis": [encode_vector(b) for b in S.basis]}


def decode_subspace(obj, path="", tol=None):
    legs = tuple(decode_leg(lg, f"{_sub(path, 'signature')}[{i}]") for i, lg in enumerate(_need(obj, "signature", path)))
    vecs = []
    for i, b in enumerate(_need(obj, "basis", path)):
        p = f"{_sub(path, 'basis')}[{i}]"
        if isinstance(b, dict):
            t = decode_tensor(b, p)
            if tuple((lg.size, lg.barred) for lg in t.legs) != tuple((lg.size, lg.barred) for lg in legs):
                raise FormatError(p, "basis tensor legs differ from the signature")
            vecs.append(t.flat)
        else:
            v = decode_vector(b, p)
            if v.size != int(np.prod([lg.size for lg in legs])):
                raise FormatError(p, "basis vector has the wrong length")
            vecs.append(v)
    return Subspace.span(legs, vecs, tol)


def encode_hypergraph(U):
    return encode_subspace(U.subspace)


def decode_hypergraph(obj, path="", tol=None, side=None):
    """Quantum hypergraph; ``{"classical": ...}`` payloads are embedded.

    ``side="U1"`` conjugates an embedded classical hypergraph so that it lives
    on ``(X, Ybar)``.
    """
    if isinstance(obj, dict) and "classical" in obj:
        U = embed_classical(decode_classical(obj["classical"], _sub(path, "classical")))
        return U.bar() if side == "U1" else U
    S = decode_subspace(obj, path, tol)
    try:
        return QuantumHypergraph(S)
    except ValueError as exc:
        raise FormatError(_sub(path, "signature"), str(exc)) from None


def decode_instance(obj, path="", tol=None):
    from .homomorphisms import HomInstance

    U1 = decode_hypergraph(_need(obj, "U1", path), _sub(path, "U1"), tol, side="U1")
    U2 = decode_hypergraph(_need(obj, "U2", path), _sub(path, "U2"), tol, side="U2")
    try:
        return HomInstance(U1, U2, obj.get("mode", "hom"), obj.get("type", "ns"))
    except ValueError as exc:
        raise FormatError(path, str(exc)) from None


def encode_instance(inst):
    return {"U1": encode_hypergraph(inst.U1), "U2": encode_hypergraph(inst.U2), "mode": inst.mode, "type": inst.type}


def decode_target(obj, path="", tol=None):
    """A 4-leg subspace for ``fits``: either explicit or ``{"arrow": ..., "U1": ..., "U2": ...}``."""
    from .hypergraphs import arrow_forward, arrow_iff

    if isinstance(obj, dict) and "arrow" in obj:
        U1 = decode_hypergraph(_need(obj, "U1", path), _sub(path, "U1"), tol, side="U1")
        U2 = decode_hypergraph(_need(obj, "U2", path), _sub(path, "U2"), tol, side="U2")
        kind = obj["arrow"]
        if kind not in ("forward", "iff"):
            raise FormatError(_sub(path, "arrow"), "must be 'forward' or 'iff'")
        try:
            A = arrow_forward(U1, U2) if kind == "forward" else arrow_iff(U1, U2)
        except ValueError as exc:
            raise FormatError(path, str(exc)) from None
        return A.shuffled
    return decode_subspace(obj, path, tol)


# ---------------------------------------------------------------------------
# files
# ---------------------------------------------------------------------------


def load_json(path):
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise FormatError(str(path), exc.strerror or str(exc)) from None
    try:
        return json.loads(raw.decode("utf-8")), hashlib.sha256(raw).hexdigest()
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}:{exc.lineno}:{exc.colno}", exc.msg) from None
    except UnicodeDecodeError:
        raise FormatError(str(path), "file is not UTF-8 text") from None


def dump_json(obj, path=None):
    text = json.dumps(obj, indent=2, sort_keys=False, default=_default)
    if path is None:
        return text
    with open(path, "w") as fh:
        fh.write(text + "\n")
    return text


def _default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, ArrowSpace):
        return encode_subspace(o.shuffled)
    raise TypeError(f"cannot serialize {type(o).__name__}")
