"""Random instance generators used by tests, benchmarks and the CLI."""
import numpy as np

from .channels import Channel, ClassicalChannel


def as_rng(seed=None):
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def ginibre(rng, m, n):
    return (rng.standard_normal((m, n)) + 1j * rng.standard_normal((m, n))) / np.sqrt(2)


def random_unitary(d, rng=None):
    rng = as_rng(rng)
    Q, R = np.linalg.qr(ginibre(rng, d, d))
    return Q * (np.diagonal(R) / np.abs(np.diagonal(R)))


def random_isometry(m, n, rng=None):
    """``V : C^n -> C^m`` with ``V^* V = I`` (needs ``m >= n``)."""
    if m < n:
        raise ValueError("an isometry C^n -> C^m needs m >= n")
    return random_unitary(m, rng)[:, :n]


def random_psd(d, rank=None, rng=None):
    rng = as_rng(rng)
    G = ginibre(rng, d, d if rank is None else rank)
    return G @ G.conj().T


def random_vector(d, rng=None):
    rng = as_rng(rng)
    v = ginibre(rng, d, 1)[:, 0]
    return v / np.linalg.norm(v)


def normalize_kraus(kraus):
    """Rescale ``A_k -> A_k S^{-1/2}`` with ``S = sum A_k^* A_k``."""
    S = sum(A.conj().T @ A for A in kraus)
    w, V = np.linalg.eigh(S)
    Sinv = (V / np.sqrt(w)) @ V.conj().T
    return [A @ Sinv for A in kraus]


def random_kraus(din, dout, n_kraus=None, rng=None):
    rng = as_rng(rng)
    lo = -(-din // dout)  # fewer Kraus operators cannot satisfy sum A^*A = I
    n_kraus = int(rng.integers(lo, din * dout + 1)) if n_kraus is None else max(n_kraus, lo)
    return normalize_kraus([ginibre(rng, dout, din) for _ in range(n_kraus)])


def random_channel(in_dims, out_dims, n_kraus=None, rng=None):
    in_dims = (in_dims,) if np.isscalar(in_dims) else tuple(in_dims)
    out_dims = (out_dims,) if np.isscalar(out_dims) else tuple(out_dims)
    din, dout = int(np.prod(in_dims)), int(np.prod(out_dims))
    return Channel.from_kraus(random_kraus(din, dout, n_kraus, rng), in_dims, out_dims)


def random_stochastic(ny, nx, rng=None, sparsity=0.0):
    """Random column-stochastic matrix; entries are zeroed with probability ``sparsity``."""
    rng = as_rng(rng)
    N = rng.random((ny, nx))
    if sparsity:
        mask = rng.random((ny, nx)) >= sparsity
        mask[rng.integers(ny, size=nx), np.arange(nx)] = True
        N = N * mask
    return ClassicalChannel(N / N.sum(axis=0))


def random_rows(rng, r, D):
    """``r`` random complex row vectors in ``C^D``."""
    return ginibre(rng, r, D)


def random_som(nx, na, dh, rng=None, extra=1):
    """Random stochastic operator matrix ``E_{x,x',a,a'} = V_{a,x}^* V_{a',x'}``.

    ``V`` is the block form of a random isometry ``C^X (x) H -> C^A (x) K``.
    """
    from .correlations import StochasticOperatorMatrix

    rng = as_rng(rng)
    dk = -(-nx * dh // na) + extra - 1
    dk = max(dk, 1)
    W = random_isometry(na * dk, nx * dh, rng).reshape(na, dk, nx, dh)
    blocks = np.einsum("akxh,bkyH->xyabhH", W.conj(), W)
    return StochasticOperatorMatrix(blocks)


def random_loc_witness(quad, n_terms=2, rng=None):
    from .correlations import LocWitness

    rng = as_rng(rng)
    nx, ny, na, nb = quad
    w = rng.random(n_terms)
    w = w / w.sum()
    return LocWitness(tuple((wi, random_channel(nx, na, rng=rng), random_channel(ny, nb, rng=rng)) for wi in w))


def random_tensor_pair_witness(quad, dA=2, dB=2, rng=None):
    from .correlations import TensorPairWitness

    rng = as_rng(rng)
    nx, ny, na, nb = quad
    xi = random_vector(dA * dB, rng).reshape(dA, dB)
    return TensorPairWitness(random_som(nx, na, dA, rng), random_som(ny, nb, dB, rng), xi)


def random_ns_correlation(quad, rng=None, n_terms=3):
    """Mixture of local and quantum correlations; always no-signalling."""
    from .correlations import QnsCorrelation, from_loc, from_tensor_pair

    rng = as_rng(rng)
    g1 = from_loc(random_loc_witness(quad, n_terms, rng))
    g2 = from_tensor_pair(random_tensor_pair_witness(quad, 2, 2, rng))
    t = rng.random()
    return QnsCorrelation.from_entries(t * g1.entries() + (1 - t) * g2.entries())
