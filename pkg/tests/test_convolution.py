import numpy as np
import pytest

from hyperconv.convolution import (
    E2ECache,
    LayerParams,
    bilinear_flat,
    e2e_backward,
    e2e_forward,
    e2n,
    init_layer,
    n2e,
    omega,
)
from hyperconv.hypergraph import build_hypergraph

from helpers import (
    gradcheck_max_error,
    naive_e2n,
    naive_n2e,
    numeric_grad,
    random_hypergraph,
)


class TestOmega:
    def test_minmax_by_hand(self):
        got = omega("minmax", [[1, 4, 2], [3, 2, 2], [2, 0, 2]])
        np.testing.assert_array_equal(got, [2, 4, 0])

    def test_population_variance(self):
        np.testing.assert_allclose(omega("var", [[1.0], [3.0]]), [1.0])

    def test_singletons(self):
        np.testing.assert_array_equal(omega("mean", [[2.0, 5.0]]), [2.0, 5.0])
        np.testing.assert_array_equal(omega("minmax", [[2.0, 5.0]]), [0.0, 0.0])
        np.testing.assert_array_equal(omega("var", [[2.0, 5.0]]), [0.0, 0.0])

    def test_identical_vectors_collapse(self):
        rows = [[1.5, -2.0, 0.25]] * 4
        np.testing.assert_array_equal(omega("mean", rows), rows[0])
        np.testing.assert_array_equal(omega("var", rows), [0, 0, 0])
        np.testing.assert_array_equal(omega("minmax", rows), [0, 0, 0])

    def test_empty_set_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            omega("mean", np.zeros((0, 3)))

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValueError, match="kind"):
            omega("median", [[1.0]])


class TestBilinearFlat:
    def test_by_hand(self):
        np.testing.assert_array_equal(bilinear_flat(np.array([1.0, 2.0])), [1, 2, 2, 4])

    def test_zero_vector(self):
        np.testing.assert_array_equal(bilinear_flat(np.zeros(3)), np.zeros(9))

    def test_row_major_symmetry(self):
        rng = np.random.default_rng(0)
        for _ in range(10):
            d = int(rng.integers(1, 6))
            v = rng.normal(size=d)
            flat = bilinear_flat(v)
            assert flat.shape == (d * d,)
            for i in range(d):
                for j in range(d):
                    assert flat[i * d + j] == flat[j * d + i]
                    assert flat[i * d + j] == v[i] * v[j]


def test_layer_params_validation():
    LayerParams(np.zeros((2, 3)))
    with pytest.raises(ValueError, match="2-d"):
        LayerParams(np.zeros(3))
    with pytest.raises(ValueError, match="NaN"):
        LayerParams(np.full((1, 2), np.nan))
    with pytest.raises(ValueError, match="activation"):
        LayerParams(np.zeros((1, 2)), activation="tanh")


def test_init_layer_shape_and_range():
    rng = np.random.default_rng(4)
    lp = init_layer(3, 5, rng, bilinear=True)
    assert lp.weight.shape == (3, 25)
    bound = np.sqrt(6.0 / (25 + 3))
    assert np.abs(lp.weight).max() <= bound
    assert init_layer(3, 5, rng, bilinear=False).weight.shape == (3, 5)


class TestE2N:
    def test_mean_of_two_edges_with_tag(self):
        h = build_hypergraph([[0], [0]])
        out = e2n(h, np.array([[1.0, 0.0], [0.0, 1.0]]), np.array([[1.0, 0.0]]))
        np.testing.assert_array_equal(out, [[0.5, 0.5, 1.0, 0.0]])

    def test_single_incident_edge_passes_through(self):
        h = build_hypergraph([[0, 1]])
        ef = np.array([[0.2, 0.7, 0.1]])
        out = e2n(h, ef, np.zeros((2, 1)))
        np.testing.assert_array_equal(out[0, :3], ef[0])
        np.testing.assert_array_equal(out[1, :3], ef[0])

    def test_isolated_node_gets_zero_aggregate(self):
        h = build_hypergraph([[0, 1]], num_nodes=3)
        out = e2n(h, np.ones((1, 2)), np.full((3, 1), 9.0))
        np.testing.assert_array_equal(out[2], [0.0, 0.0, 9.0])

    def test_matches_naive_loop(self):
        rng = np.random.default_rng(8)
        for _ in range(25):
            h = random_hypergraph(rng, max_nodes=12, max_edges=10)
            ef = rng.normal(size=(h.num_edges, int(rng.integers(1, 5))))
            nx = rng.normal(size=(h.num_nodes, int(rng.integers(1, 4))))
            np.testing.assert_allclose(e2n(h, ef, nx), naive_e2n(h, ef, nx), atol=1e-12)

    def test_row_count_mismatch_rejected(self):
        h = build_hypergraph([[0, 1]])
        with pytest.raises(ValueError, match="edge feature"):
            e2n(h, np.ones((3, 2)), np.ones((2, 1)))
        with pytest.raises(ValueError, match="node tag"):
            e2n(h, np.ones((1, 2)), np.ones((5, 1)))

    def test_harmonic_aggregation_by_hand(self):
        h = build_hypergraph([[0], [0]])
        ef = np.array([[1.0], [3.0]])
        out = e2n(h, ef, np.zeros((1, 1)), agg="harmonic")
        eps = 1e-6
        expected = 2.0 / (1.0 / (1.0 + eps) + 1.0 / (3.0 + eps))
        np.testing.assert_allclose(out[0, 0], expected, rtol=1e-12)


class TestN2E:
    def test_matches_scalar_reference(self):
        rng = np.random.default_rng(15)
        for kind in ("mean", "var", "minmax"):
            for bilinear in (False, True):
                for _ in range(5):
                    n, d = 8, 3
                    feats = rng.normal(size=(n, d))
                    in_dim = d * d if bilinear else d
                    lp = LayerParams(rng.normal(size=(4, in_dim)), "relu")
                    sets = [
                        sorted(rng.choice(n, size=int(rng.integers(1, 5)), replace=False).tolist())
                        for _ in range(6)
                    ]
                    got = n2e(lp, kind, feats, sets, bilinear=bilinear)
                    want = naive_n2e(lp.weight, "relu", kind, feats, sets, bilinear)
                    np.testing.assert_allclose(got, want, rtol=1e-12, atol=1e-12)

    def test_relu_clamps_negative_preactivations(self):
        lp = LayerParams(np.array([[-1.0]]), "relu")
        out = n2e(lp, "mean", np.array([[2.0]]), [[0]], bilinear=False)
        np.testing.assert_array_equal(out, [[0.0]])

    def test_empty_set_rejected(self):
        lp = LayerParams(np.ones((1, 1)))
        with pytest.raises(ValueError, match="empty"):
            n2e(lp, "mean", np.ones((2, 1)), [[0], []], bilinear=False)


def tiny_model(rng, h, k=2, d_e=2, bilinear=True):
    node_x = rng.normal(size=(h.num_nodes, k))
    edge_init = rng.normal(size=(h.num_edges, d_e))
    layer1 = init_layer(3, d_e + k, rng, bilinear, "relu")
    layer2 = init_layer(2, 3 + k, rng, bilinear, "identity")
    return (layer1, layer2), edge_init, node_x


class TestE2EForward:
    def test_smallest_pipeline_shape(self):
        rng = np.random.default_rng(1)
        h = build_hypergraph([[0]])
        layers, edge_init, node_x = tiny_model(rng, h, k=1, d_e=1)
        out, cache = e2e_forward(layers, "mean", h, edge_init, node_x, [[0]])
        assert out.shape == (1, 2)
        assert isinstance(cache, E2ECache)

    def test_exactly_two_layers_required(self):
        rng = np.random.default_rng(1)
        h = build_hypergraph([[0]])
        layers, edge_init, node_x = tiny_model(rng, h, k=1, d_e=1)
        with pytest.raises(ValueError, match="two layers"):
            e2e_forward(layers[:1], "mean", h, edge_init, node_x, [[0]])

    def test_dimension_mismatch_rejected(self):
        rng = np.random.default_rng(1)
        h = build_hypergraph([[0, 1]])
        layers, edge_init, node_x = tiny_model(rng, h)
        with pytest.raises(ValueError, match="row counts"):
            e2e_forward(layers, "mean", h, edge_init[:0], node_x, [[0]])

    def test_member_order_never_matters(self):
        rng = np.random.default_rng(44)
        for _ in range(30):
            h = random_hypergraph(rng, max_nodes=10, max_edges=8)
            layers, edge_init, node_x = tiny_model(rng, h)
            kind = ("mean", "var", "minmax")[int(rng.integers(3))]
            targets = [list(h.edge_members[int(e)]) for e in rng.integers(0, h.num_edges, size=3)]
            base, _ = e2e_forward(layers, kind, h, edge_init, node_x, targets)
            shuffled = [list(rng.permutation(t)) for t in targets]
            again, _ = e2e_forward(layers, kind, h, edge_init, node_x, shuffled)
            np.testing.assert_array_equal(base, again)

    def test_restriction_to_reachable_edges_changes_nothing(self):
        # scoring one target must agree with that target's row in a full pass
        rng = np.random.default_rng(31)
        h = random_hypergraph(rng, max_nodes=10, max_edges=8)
        layers, edge_init, node_x = tiny_model(rng, h)
        targets = [list(m) for m in h.edge_members]
        full, _ = e2e_forward(layers, "mean", h, edge_init, node_x, targets)
        single, _ = e2e_forward(layers, "mean", h, edge_init, node_x, [targets[0]])
        np.testing.assert_allclose(single[0], full[0], rtol=1e-12)


class TestE2EBackward:
    def test_zero_upstream_gives_zero_gradients(self):
        rng = np.random.default_rng(2)
        h = build_hypergraph([[0, 1], [1, 2]])
        layers, edge_init, node_x = tiny_model(rng, h)
        out, cache = e2e_forward(layers, "var", h, edge_init, node_x, [[0, 1]])
        grads = e2e_backward(cache, np.zeros_like(out))
        assert not grads["W1"].any()
        assert not grads["W2"].any()

    def test_stale_cache_rejected(self):
        rng = np.random.default_rng(2)
        h = build_hypergraph([[0, 1]])
        layers, edge_init, node_x = tiny_model(rng, h)
        out, cache = e2e_forward(layers, "mean", h, edge_init, node_x, [[0]])
        with pytest.raises(ValueError, match="stale"):
            e2e_backward(cache, np.zeros((out.shape[0] + 1, out.shape[1])))

    def test_bilinear_gradient_numerically(self):
        # d/dv of sum(v v^T) against all-ones upstream is 2 * sum(v) per entry
        v = np.array([1.0, 2.0])

        def f():
            return float(bilinear_flat(v).sum())

        np.testing.assert_allclose(numeric_grad(f, v), [6.0, 6.0], rtol=1e-6)

    def test_weight_gradients_match_finite_differences(self):
        rng = np.random.default_rng(99)
        worst = gradcheck_max_error(rng, trials=4, kinds=("mean", "var", "minmax"),
                                    bilinears=(False, True))
        assert worst < 1e-5
