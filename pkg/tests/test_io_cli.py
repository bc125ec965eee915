import json
from pathlib import Path

import numpy as np
import pytest

from qhyper import io as qio
from qhyper.cli import main
from qhyper.correlations import QnsCorrelation, from_loc, from_tensor_pair
from qhyper.hypergraphs import QuantumHypergraph
from qhyper.randgen import ginibre, random_channel, random_loc_witness, random_tensor_pair_witness

SAMPLES = Path(__file__).resolve().parents[1] / "docs" / "samples"


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr().out
    return code, json.loads(out)


def write(tmp_path, name, obj):
    p = tmp_path / name
    p.write_text(json.dumps(obj))
    return p


# ---------------------------------------------------------------------------
# formats
# ---------------------------------------------------------------------------


def test_array_accepts_real_and_pairs():
    assert np.array_equal(qio.decode_matrix([[1, 2], [3, 4]]), np.array([[1, 2], [3, 4]]))
    assert qio.decode_vector([[0, 1], [2, 0]])[0] == 1j
    with pytest.raises(qio.FormatError):
        qio.decode_matrix([[1, 2], [3]])


def test_channel_round_trip():
    ch = random_channel((2, 2), 3, rng=np.random.default_rng(0))
    back = qio.decode_channel(json.loads(json.dumps(qio.encode_channel(ch))))
    assert back.allclose(ch, atol=1e-12)
    assert back.in_dims == (2, 2)


@pytest.mark.parametrize("kind", ["loc", "tensor", "commuting"])
def test_correlation_round_trip(kind):
    rng = np.random.default_rng(1)
    quad = (2, 2, 2, 1)
    if kind == "loc":
        g = from_loc(random_loc_witness(quad, 2, rng))
    else:
        w = random_tensor_pair_witness(quad, 2, 1, rng)
        g = from_tensor_pair(w if kind == "tensor" else w.to_commuting())
    back = qio.decode_correlation(json.loads(qio.dump_json(qio.encode_correlation(g))))
    assert np.allclose(back.choi, g.choi, atol=1e-12)
    assert back.witness_kind == g.witness_kind
    assert np.allclose(back.witness.entries(), g.entries(), atol=1e-12)


def test_hypergraph_round_trip():
    U = QuantumHypergraph.span(2, 3, ginibre(np.random.default_rng(2), 2, 6))
    back = qio.decode_hypergraph(json.loads(qio.dump_json(qio.encode_hypergraph(U))))
    assert back.same_span(U)


def test_field_paths_in_errors():
    with pytest.raises(qio.FormatError) as e:
        qio.decode_correlation({"quad": [2, 2, 2], "channel": {}})
    assert e.value.path == "quad"
    with pytest.raises(qio.FormatError) as e:
        qio.decode_instance({"U1": {"classical": {"X": 2, "Y": 2, "edges": [[0, 5]]}}, "U2": {"classical": {"X": 2, "Y": 2, "edges": []}}})
    assert e.value.path == "U1.classical.edges"
    with pytest.raises(qio.FormatError) as e:
        qio.decode_subspace({"signature": [{"set": "X", "size": 2}], "basis": [[1, 2, 3]]})
    assert e.value.path == "basis[0]"
    with pytest.raises(qio.FormatError) as e:
        qio.decode_witness({"loc": [{"w": 1.0, "phi": {"kraus": []}, "psi": {}}]})
    assert e.value.path == "loc[0].phi.kraus"


# ---------------------------------------------------------------------------
# command line
# ---------------------------------------------------------------------------


def test_fits_sample(capsys):
    code, rep = run(capsys, "fits", SAMPLES / "identity-channel.json", SAMPLES / "u-iff-u.json")
    assert code == 0 and rep["verdict"] == "pass"
    assert set(rep["inputs"]) == {str(SAMPLES / "identity-channel.json"), str(SAMPLES / "u-iff-u.json")}


def test_decide_ns_sample(capsys):
    code, rep = run(capsys, "decide-ns", SAMPLES / "delta2-delta2.json")
    assert code == 0 and rep["verdict"] == "feasible"
    g = qio.decode_correlation(rep["correlation"], tol=1e-6)
    assert g.quad == (2, 2, 2, 2)


def test_signalling_sample(capsys):
    code, rep = run(capsys, "check-correlation", SAMPLES / "signalling.json")
    assert code == 1 and rep["verdict"] == "fail"
    assert rep["failed_conditions"] == ["b"]
    assert rep["residuals"]["b_residual"] == pytest.approx(0.5)


def test_batch_worst_code_wins(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"quad": [2, 2, 2, 2]')
    code, rep = run(capsys, "check-correlation", SAMPLES / "identity-correlation.json", SAMPLES / "signalling.json", bad, "--jobs", 2)
    assert code == 3
    assert [r["verdict"] for r in rep["results"]] == ["pass", "fail", "error"]
    assert rep["results"][2]["field"].startswith(str(bad))


def test_compose_to_file_and_check(capsys, tmp_path):
    out = tmp_path / "composed.json"
    code, rep = run(capsys, "compose", SAMPLES / "identity-correlation.json", SAMPLES / "identity-correlation.json", "-o", out)
    assert code == 0 and rep["output"] == str(out)
    code, rep = run(capsys, "check-correlation", out)
    assert code == 0


def test_simulate_identity(capsys, tmp_path):
    ch = random_channel(2, 2, rng=np.random.default_rng(3))
    p = write(tmp_path, "ch.json", qio.encode_channel(ch))
    code = main(["simulate", str(SAMPLES / "identity-correlation.json"), str(p)])
    out = qio.decode_channel(json.loads(capsys.readouterr().out))
    assert code == 0 and out.allclose(ch, atol=1e-10)


def test_hom_with_and_without_correlation(capsys, tmp_path):
    code, rep = run(capsys, "hom", SAMPLES / "delta2-delta2.json", SAMPLES / "identity-correlation.json")
    assert code == 0 and rep["checks"]["fits"] == "pass"
    inst = json.loads((SAMPLES / "delta2-delta2.json").read_text())
    inst["type"] = "q"
    p = write(tmp_path, "q.json", inst)
    code, rep = run(capsys, "hom", p)
    assert code == 2 and rep["verdict"] == "witness-required"


def test_embed(capsys):
    code = main(["embed", str(SAMPLES / "delta2.json")])
    U = qio.decode_hypergraph(json.loads(capsys.readouterr().out))
    assert code == 0 and U.rank == 2


def test_unknown_exit_code(capsys, tmp_path):
    # a 2x3 quantum quasi instance that needs far more than 50 projection rounds
    rng = np.random.default_rng(4)
    U = QuantumHypergraph.span(2, 3, ginibre(rng, 3, 6))
    p = write(tmp_path, "inst.json", {"U1": qio.encode_hypergraph(U.bar()), "U2": qio.encode_hypergraph(U), "mode": "quasi"})
    code, rep = run(capsys, "decide-ns", p, "--max-iters", 50)
    assert code == 2 and rep["verdict"] == "unknown"
    assert rep["settings"]["max_iters"] == 50


def test_config_file(capsys, tmp_path):
    cfg = write(tmp_path, "cfg.json", {"tol": 1e-6, "eps": 1e-6})
    code, rep = run(capsys, "check-correlation", SAMPLES / "identity-correlation.json", "--config", cfg)
    assert code == 0 and rep["settings"]["tol"] == 1e-6
    cfg = write(tmp_path, "bad-cfg.json", {"tolerance": 1})
    code, rep = run(capsys, "check-correlation", SAMPLES / "identity-correlation.json", "--config", cfg)
    assert code == 3


def test_missing_file(capsys, tmp_path):
    code, rep = run(capsys, "check-channel", tmp_path / "nope.json")
    assert code == 3 and rep["verdict"] == "error"


def test_invalid_channel_fails(capsys, tmp_path):
    p = write(tmp_path, "half.json", {"kraus": [[[0.5, 0], [0, 0.5]]]})
    code, rep = run(capsys, "check-channel", p)
    assert code == 1 and rep["tp_residual"] == pytest.approx(0.75)
