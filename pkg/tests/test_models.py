import numpy as np
import pytest

from ignn import autodiff as ad
from ignn.errors import DataError, ParameterError, UsageError
from ignn.graph import Graph
from ignn.models import (
    ModelConfig,
    ModelWeights,
    build_adjacency,
    build_gcn_adjacency,
    build_mean_adjacency,
    build_sum_adjacency,
    embed,
    forward,
    init_weights,
    load_checkpoint,
    save_checkpoint,
    weight_shapes,
)

from gradcheck import LOSS_TERMS, model_gradient_check
from oracles import power_iteration_radius, random_graph_edges, spectrum_within_unit_interval

ARCHS = ("GCN", "SAGE", "GIN")


def star():
    return Graph(4, [(0, 1), (0, 2), (0, 3)])


def test_gcn_adjacency_examples():
    assert build_gcn_adjacency(Graph(1)).toarray().tolist() == [[1.0]]
    np.testing.assert_allclose(build_gcn_adjacency(Graph(2, [(0, 1)])).toarray(), [[0.5, 0.5], [0.5, 0.5]])


def test_gcn_adjacency_symmetric_and_bounded_spectrum():
    rng = np.random.default_rng(3)
    for _ in range(15):
        n = int(rng.integers(2, 33))
        g = Graph(n, random_graph_edges(rng, n, float(rng.uniform(0.05, 0.6))))
        a = build_gcn_adjacency(g).toarray()
        assert np.array_equal(a, a.T)
        assert spectrum_within_unit_interval(a)
        # the top eigenvalue is exactly 1 (eigenvector D^1/2 1)
        assert abs(power_iteration_radius(a) - 1.0) < 1e-6


def test_mean_adjacency():
    m = build_mean_adjacency(star()).toarray()
    np.testing.assert_allclose(m[0], [0, 1 / 3, 1 / 3, 1 / 3])
    m = build_mean_adjacency(Graph(3, [(0, 1)])).toarray()
    assert m[2].tolist() == [0, 0, 0]
    assert set(np.round(m.sum(axis=1), 12)) <= {0.0, 1.0}


def test_sum_adjacency():
    k3 = Graph(3, [(0, 1), (0, 2), (1, 2)])
    assert build_sum_adjacency(k3).toarray().sum(axis=1).tolist() == [2, 2, 2]
    assert build_sum_adjacency(Graph(3)).nnz == 0
    assert np.array_equal(build_sum_adjacency(star()).toarray(), star().adjacency_matrix().toarray())


def test_build_adjacency_dispatch():
    g = star()
    assert np.array_equal(build_adjacency("gcn", g).toarray(), build_gcn_adjacency(g).toarray())
    with pytest.raises(ParameterError):
        build_adjacency("GAT", g)


def test_model_config_validation():
    assert ModelConfig(arch="sage").arch == "SAGE"
    with pytest.raises(ParameterError):
        ModelConfig(arch="GAT")
    with pytest.raises(ParameterError):
        ModelConfig(num_layers=0)
    with pytest.raises(ParameterError):
        ModelConfig(hidden_dim=0)


def test_init_weights():
    cfg = ModelConfig(seed=4)
    w1, w2 = init_weights(cfg, 10), init_weights(cfg, 10)
    assert all(np.array_equal(w1[k], w2[k]) for k in w1.names())
    w3 = init_weights(ModelConfig(seed=5), 10)
    assert not np.array_equal(w1["W0"], w3["W0"])
    for name, shape in weight_shapes(cfg, 10).items():
        assert w1[name].shape == shape
        if name.startswith("W"):
            bound = np.sqrt(6.0 / sum(shape))
            assert np.all(np.abs(w1[name]) <= bound)
        else:
            assert np.all(w1[name] == 0)


def test_weight_shapes_per_arch():
    assert weight_shapes(ModelConfig("GCN", 2, 4, 3), 5) == {"W0": (5, 4), "b0": (1, 4), "W1": (4, 3), "b1": (1, 3)}
    assert weight_shapes(ModelConfig("SAGE", 1, 4, 3), 5) == {"W0": (10, 3), "b0": (1, 3)}
    assert weight_shapes(ModelConfig("GIN", 1, 4, 3), 5) == {"W0a": (5, 4), "b0a": (1, 4), "W0b": (4, 3), "b0b": (1, 3)}


def test_single_node_gcn_identity():
    cfg = ModelConfig("GCN", num_layers=1, hidden_dim=3, output_dim=3)
    w = ModelWeights({"W0": np.eye(3), "b0": np.zeros((1, 3))})
    x = np.array([[1.0, 0.0, 0.0]])
    adj = build_gcn_adjacency(Graph(1))
    raw = forward(cfg, w, adj, x, normalize=False).value
    assert raw.tolist() == [[1.0, 0.0, 0.0]]


@pytest.mark.parametrize("arch", ARCHS)
def test_zero_weights_give_zero_embeddings(arch):
    cfg = ModelConfig(arch, num_layers=2, hidden_dim=4, output_dim=3)
    w = ModelWeights({k: np.zeros(s) for k, s in weight_shapes(cfg, 5).items()})
    g = star()
    raw = forward(cfg, w, build_adjacency(arch, g), np.ones((4, 5)), normalize=False).value
    assert np.all(raw == 0)


@pytest.mark.parametrize("arch", ARCHS)
def test_unit_norm_embeddings(arch):
    rng = np.random.default_rng(1)
    g = Graph(10, random_graph_edges(rng, 10, 0.4))
    cfg = ModelConfig(arch, seed=2)
    z, raw = embed(cfg, init_weights(cfg, 6), build_adjacency(arch, g), rng.standard_normal((10, 6)))
    nonzero = np.linalg.norm(raw, axis=1) > 1e-3
    np.testing.assert_allclose(np.linalg.norm(z[nonzero], axis=1), 1.0, atol=1e-9)


@pytest.mark.parametrize("arch", ARCHS)
def test_permutation_equivariance(arch):
    rng = np.random.default_rng(7)
    for trial in range(5):
        n = 10
        g = Graph(n, random_graph_edges(rng, n, 0.35))
        x = rng.standard_normal((n, 4))
        perm = rng.permutation(n)
        cfg = ModelConfig(arch, seed=trial)
        w = init_weights(cfg, 4)
        z = embed(cfg, w, build_adjacency(arch, g), x)[0]
        xp = np.empty_like(x)
        xp[perm] = x
        zp = embed(cfg, w, build_adjacency(arch, g.relabel(perm)), xp)[0]
        np.testing.assert_allclose(zp[perm], z, atol=1e-9, rtol=0)


def test_forward_shape_errors():
    cfg = ModelConfig("GCN", num_layers=1, hidden_dim=2, output_dim=2)
    adj = build_gcn_adjacency(star())
    with pytest.raises(UsageError):
        forward(cfg, init_weights(cfg, 3), adj, np.ones((3, 3)))
    with pytest.raises(UsageError):
        forward(cfg, init_weights(cfg, 5), adj, np.ones((4, 3)))


def test_forward_on_tape_matches_inference():
    cfg = ModelConfig("SAGE", seed=1)
    g = star()
    x = np.eye(4)
    w = init_weights(cfg, 4)
    adj = build_adjacency("SAGE", g)
    tape = ad.Tape()
    z_tape = forward(cfg, w.on_tape(tape), adj, x).value
    assert np.array_equal(z_tape, forward(cfg, w, adj, x).value)


@pytest.mark.parametrize("arch", ARCHS)
@pytest.mark.parametrize("term", LOSS_TERMS)
def test_full_model_gradients(arch, term):
    err, count = model_gradient_check(arch, term)
    assert count > 50
    assert err < 1e-4


def test_checkpoint_round_trip(tmp_path):
    cfg = ModelConfig("GIN", num_layers=2, hidden_dim=3, output_dim=2, seed=9)
    w = init_weights(cfg, 4)
    path = tmp_path / "ck.json"
    save_checkpoint(path, cfg, w, extra={"note": "x"})
    cfg2, w2, extra = load_checkpoint(path)
    assert cfg2 == cfg and extra == {"note": "x"}
    assert w2.names() == w.names()
    assert all(np.array_equal(w[k], w2[k]) for k in w.names())
    assert not list(tmp_path.glob("*.tmp*"))


def test_checkpoint_rejects_foreign_file(tmp_path):
    path = tmp_path / "ck.json"
    path.write_text('{"format": "other"}')
    with pytest.raises(DataError):
        load_checkpoint(path)
