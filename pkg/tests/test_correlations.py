import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qhyper.channels import Channel, ClassicalChannel, gamma_of_classical
from qhyper.correlations import (
    CommutingPairWitness,
    CorrelationError,
    LocWitness,
    QnsCorrelation,
    StochasticOperatorMatrix,
    classical_ns,
    compose_som,
    entries,
    choi_from_entries,
    from_commuting_pair,
    from_loc,
    from_tensor_pair,
    phi_contract,
    simulate,
    simulate_decomposed,
    star_compose,
    verify_qns,
)
from qhyper.randgen import (
    random_channel,
    random_loc_witness,
    random_ns_correlation,
    random_som,
    random_stochastic,
    random_tensor_pair_witness,
)

seeds = st.integers(0, 2**32 - 1)
small = st.integers(1, 3)


def signalling_channel():
    """``(x, y) -> (a, b) = (0, x)`` on bits: Bob's output copies Alice's input."""
    N = np.zeros((4, 4))
    for x in range(2):
        for y in range(2):
            N[0 * 2 + x, x * 2 + y] = 1.0
    return gamma_of_classical(ClassicalChannel(N), (2, 2), (2, 2))


def pr_box():
    N = np.zeros((4, 4))
    for x in range(2):
        for y in range(2):
            for a in range(2):
                b = a ^ (x & y)
                N[a * 2 + b, x * 2 + y] = 0.5
    return ClassicalChannel(N)


def test_entry_round_trip():
    rng = np.random.default_rng(0)
    g = random_ns_correlation((2, 3, 2, 2), rng)
    assert np.array_equal(choi_from_entries(entries(g.choi, g.quad)), g.choi)


def test_product_is_qns():
    rng = np.random.default_rng(1)
    ch = random_channel(2, 3, rng=rng).tensor(random_channel(2, 2, rng=rng))
    assert verify_qns(ch, (2, 2, 3, 2)).is_qns


def test_signalling_is_rejected():
    rep = verify_qns(signalling_channel(), (2, 2, 2, 2))
    assert not rep.is_qns
    assert rep.b_residual > 0.1
    assert rep.c_residual < 1e-12


def test_classical_examples():
    rng = np.random.default_rng(2)
    A, B = random_stochastic(2, 3, rng), random_stochastic(3, 2, rng)
    prod_n = ClassicalChannel(np.einsum("ax,by->abxy", A.matrix, B.matrix).reshape(6, 6))
    assert classical_ns(prod_n, (3, 2, 2, 3))
    assert classical_ns(pr_box(), (2, 2, 2, 2))


def test_identity_correlation():
    g = QnsCorrelation.identity(2, 3)
    assert np.allclose(g.choi, Channel.identity((2, 3)).choi)
    assert g.witness_kind == "loc"


def test_scalar_commuting_pair_is_product():
    rng = np.random.default_rng(3)
    phi, psi = random_channel(2, 3, rng=rng), random_channel(3, 2, rng=rng)
    w = CommutingPairWitness(StochasticOperatorMatrix.from_channel(phi), StochasticOperatorMatrix.from_channel(psi), [1.0])
    assert np.allclose(from_commuting_pair(w).choi, phi.tensor(psi).choi, atol=1e-12)


@settings(max_examples=20, deadline=None)
@given(seeds, small, small, small, small)
def test_tensor_pair_matches_commuting_embedding(seed, nx, ny, na, nb):
    w = random_tensor_pair_witness((nx, ny, na, nb), 2, 2, np.random.default_rng(seed))
    assert np.allclose(w.entries(), w.to_commuting().entries(), atol=1e-12)
    assert from_tensor_pair(w).verify().is_qns


def test_noncommuting_pair_rejected():
    rng = np.random.default_rng(4)
    E, F = random_som(2, 2, 2, rng), random_som(2, 2, 2, rng)
    with pytest.raises(CorrelationError):
        CommutingPairWitness(E, F, [1.0, 0.0])


def test_trivial_som_composition():
    I = StochasticOperatorMatrix(np.ones((1, 1, 1, 1, 1, 1)))
    G = compose_som(I, I)
    assert np.array_equal(G.blocks, np.ones((1, 1, 1, 1, 1, 1)))


def test_som_validation():
    with pytest.raises(CorrelationError):
        StochasticOperatorMatrix(2 * np.ones((1, 1, 1, 1, 1, 1)))


def test_identity_star_identity():
    g = QnsCorrelation.identity(2, 2)
    h = star_compose(g, g)
    assert np.allclose(h.choi, g.choi, atol=1e-14)
    assert h.witness_kind == "loc"


@settings(max_examples=15, deadline=None)
@given(seeds)
def test_composed_witnesses_reproduce_star(seed):
    rng = np.random.default_rng(seed)
    q1, q2 = (2, 2, 1, 2), (2, 2, 2, 1)
    for make in (
        lambda q: from_loc(random_loc_witness(q, 2, rng)),
        lambda q: from_tensor_pair(random_tensor_pair_witness(q, 2, 1, rng)),
        lambda q: from_commuting_pair(random_tensor_pair_witness(q, 1, 2, rng).to_commuting()),
    ):
        g = star_compose(make(q2), make(q1))
        assert g.witness is not None
        assert np.allclose(g.witness.entries(), g.entries(), atol=1e-12)


@settings(max_examples=15, deadline=None)
@given(seeds)
def test_star_is_associative(seed):
    rng = np.random.default_rng(seed)
    g1 = random_ns_correlation((2, 1, 2, 2), rng, 2)
    g2 = random_ns_correlation((1, 2, 2, 2), rng, 2)
    g3 = random_ns_correlation((2, 2, 1, 1), rng, 2)
    left = star_compose(g3, star_compose(g2, g1))
    right = star_compose(star_compose(g3, g2), g1)
    assert np.allclose(left.choi, right.choi, atol=1e-12)


def test_interface_mismatch():
    with pytest.raises(ValueError):
        star_compose(QnsCorrelation.identity(2, 2), QnsCorrelation.identity(3, 2))


def test_simulate_local_matches_decomposition():
    rng = np.random.default_rng(7)
    w = random_loc_witness((2, 3, 2, 2), 3, rng)
    E = random_channel(2, 3, rng=rng)
    assert simulate(from_loc(w), E).allclose(simulate_decomposed(w.terms, E), atol=1e-12)


def test_simulate_identity_is_identity():
    rng = np.random.default_rng(8)
    E = random_channel(2, 3, rng=rng)
    assert simulate(QnsCorrelation.identity(2, 3), E).allclose(E, atol=1e-12)


def test_phi_examples():
    e00 = np.zeros((2, 2))
    e00[0, 0] = 1.0
    assert phi_contract(np.kron(e00, e00)) == pytest.approx(1.0)
    rng = np.random.default_rng(9)
    P, Q = rng.standard_normal((2, 3, 3)) + 1j * rng.standard_normal((2, 3, 3))
    assert phi_contract(np.kron(P, Q)) == pytest.approx(np.trace(P @ Q.T))
