import numpy as np
import pytest

from akgnn import (
    ConfigError,
    ContractError,
    DimensionError,
    Tape,
    Variant,
    backward,
    build_graph,
    collect_grads,
    finite_diff_check,
    forward,
    init_params,
    lambda_trace,
    predict,
    readout,
    replace_tensors,
)
from synthgen import ring_edges


def small_graph(n=12, seed=0):
    return build_graph(n, ring_edges(n, chords=n // 2, seed=seed))


class TestInit:
    def test_shapes_full(self):
        p = init_params(7, 5, 3, 4, Variant.FULL, np.random.default_rng(0))
        assert p.w_star.shape == (7, 5)
        assert p.phi.shape == (4,)
        assert np.all(p.phi == 1.0)
        assert len(p.layer_w) == 0
        assert [w.shape for w in p.head_w] == [(5, 3)]
        assert [b.shape for b in p.head_b] == [(1, 3)]
        assert np.all(p.head_b[0] == 0.0)

    def test_shapes_no_pt(self):
        p = init_params(7, 5, 3, 4, Variant.NO_PT, np.random.default_rng(0))
        assert p.w_star is None
        assert [w.shape for w in p.layer_w] == [(7, 5), (5, 5), (5, 5), (5, 5)]

    def test_head_depth(self):
        p = init_params(7, 5, 3, 2, Variant.FULL, np.random.default_rng(0),
                        head_depth=3)
        assert [w.shape for w in p.head_w] == [(5, 5), (5, 5), (5, 3)]

    def test_glorot_scale(self):
        rng = np.random.default_rng(1)
        p = init_params(400, 300, 2, 1, Variant.FULL, rng)
        sample_std = p.w_star.std()
        expected = np.sqrt(2.0 / 700.0)
        assert abs(sample_std - expected) / expected < 0.02

    def test_same_seed_same_params_and_depth_does_not_shift_draws(self):
        p1 = init_params(6, 4, 3, 2, Variant.FULL, np.random.default_rng(7))
        p2 = init_params(6, 4, 3, 2, Variant.FULL, np.random.default_rng(7))
        p3 = init_params(6, 4, 3, 5, Variant.FULL, np.random.default_rng(7))
        assert np.array_equal(p1.w_star, p2.w_star)
        assert np.array_equal(p1.head_w[0], p2.head_w[0])
        # full variant draws no per-layer weights, so depth changes nothing
        assert np.array_equal(p1.w_star, p3.w_star)
        assert np.array_equal(p1.head_w[0], p3.head_w[0])

    def test_domain_checks(self):
        rng = np.random.default_rng(0)
        with pytest.raises(ConfigError):
            init_params(5, 4, 1, 2, Variant.FULL, rng)
        with pytest.raises(ConfigError):
            init_params(5, 4, 3, 0, Variant.FULL, rng)
        with pytest.raises(ConfigError):
            init_params(5, 4, 3, 2, Variant.FULL, rng, head_depth=0)
        with pytest.raises(ConfigError):
            init_params(0, 4, 3, 2, Variant.FULL, rng)

    def test_flat_and_copy_are_consistent(self):
        p = init_params(6, 4, 3, 2, Variant.NO_PT, np.random.default_rng(2))
        flat = p.flat()
        assert set(flat) == {"phi", "layer_w_0", "layer_w_1", "head_w_0", "head_b_0"}
        assert flat["layer_w_0"] is p.layer_w[0]  # shared, not copied
        q = p.copy()
        q.phi[0] = 99.0
        assert p.phi[0] == 1.0


class TestForward:
    def test_hand_computed_two_node_case(self):
        # X=I, W*=I, phi=1 on a 2-node path: every propagated state is
        # the kernel itself; sum readout doubles it; identity head
        g = build_graph(2, [(0, 1)])
        p = init_params(2, 2, 2, 2, Variant.FULL, np.random.default_rng(0))
        p.w_star[:] = np.eye(2)
        p.head_w[0][:] = np.eye(2)
        out = forward(p, g, np.eye(2))
        half = np.full((2, 2), 0.5)
        assert np.array_equal(out.hidden[0].value, half)
        assert np.array_equal(out.hidden[1].value, half)
        assert np.array_equal(out.readout.value, np.ones((2, 2)))
        assert np.array_equal(out.logits.value, np.ones((2, 2)))

    def test_shapes_and_hidden_count(self):
        g = small_graph()
        for variant in Variant:
            p = init_params(5, 6, 3, 4, variant, np.random.default_rng(1))
            out = forward(p, g, np.random.default_rng(2).random((12, 5)))
            assert out.logits.value.shape == (12, 3)
            assert len(out.hidden) == 4
            for h in out.hidden:
                assert h.value.shape == (12, 6)

    def test_no_readout_uses_last_state(self):
        g = small_graph()
        p = init_params(5, 6, 3, 3, Variant.NO_READOUT, np.random.default_rng(3))
        out = forward(p, g, np.random.default_rng(4).random((12, 5)))
        assert out.readout is out.hidden[-1]

    def test_readout_excludes_pre_propagation_state(self):
        # K=1: readout must be exactly the single propagated state
        g = small_graph()
        p = init_params(5, 6, 3, 1, Variant.FULL, np.random.default_rng(5))
        out = forward(p, g, np.random.default_rng(6).random((12, 5)))
        assert out.readout is out.hidden[0]

    def test_no_lambda_detaches_phi(self):
        g = small_graph()
        x = np.random.default_rng(7).random((12, 5))
        labels = np.random.default_rng(8).integers(0, 3, 12)
        p = init_params(5, 6, 3, 2, Variant.NO_LAMBDA, np.random.default_rng(9))
        out = forward(p, g, x, labels=labels, loss_mask=np.arange(12))
        grads = collect_grads(p, out, backward(out.tape, out.loss))
        assert np.all(grads["phi"] == 0.0)

        p_full = init_params(5, 6, 3, 2, Variant.FULL, np.random.default_rng(9))
        out = forward(p_full, g, x, labels=labels, loss_mask=np.arange(12))
        grads = collect_grads(p_full, out, backward(out.tape, out.loss))
        assert np.any(grads["phi"] != 0.0)

    def test_eval_forward_deterministic_and_train_mode_differs(self):
        g = small_graph()
        x = np.random.default_rng(10).random((12, 5))
        p = init_params(5, 6, 3, 2, Variant.FULL, np.random.default_rng(11))
        e1 = forward(p, g, x)
        e2 = forward(p, g, x)
        assert np.array_equal(e1.logits.value, e2.logits.value)
        t1 = forward(p, g, x, mode="train", dropout_rate=0.5,
                     rng=np.random.default_rng(12))
        t2 = forward(p, g, x, mode="train", dropout_rate=0.5,
                     rng=np.random.default_rng(12))
        t3 = forward(p, g, x, mode="train", dropout_rate=0.5,
                     rng=np.random.default_rng(13))
        assert np.array_equal(t1.logits.value, t2.logits.value)
        assert not np.array_equal(t1.logits.value, t3.logits.value)

    def test_dimension_errors(self):
        g = small_graph()
        p = init_params(5, 6, 3, 2, Variant.FULL, np.random.default_rng(14))
        with pytest.raises(DimensionError, match="nodes"):
            forward(p, g, np.ones((5, 5)))
        with pytest.raises(DimensionError, match="columns"):
            forward(p, g, np.ones((12, 4)))

    def test_labels_and_mask_must_pair(self):
        g = small_graph()
        p = init_params(5, 6, 3, 2, Variant.FULL, np.random.default_rng(15))
        with pytest.raises(ContractError):
            forward(p, g, np.ones((12, 5)), labels=np.zeros(12, dtype=int))

    def test_gradcheck_all_variants(self):
        g = small_graph()
        rng = np.random.default_rng(16)
        x = rng.random((12, 4))
        labels = rng.integers(0, 3, 12)
        mask = np.arange(12)
        for variant in Variant:
            tpl = init_params(4, 5, 3, 3, variant, np.random.default_rng(17))
            tpl.phi[:] = np.random.default_rng(18).uniform(0.3, 2.0, 3)

            def closure(tensors, _tpl=tpl):
                p = replace_tensors(_tpl, tensors)
                out = forward(p, g, x, labels=labels, loss_mask=mask)
                grads = collect_grads(p, out, backward(out.tape, out.loss))
                return float(out.loss.value[0, 0]), grads

            skip = None
            if variant is Variant.NO_LAMBDA:
                skip = lambda name, idx: name == "phi"  # noqa: E731
            worst, _ = finite_diff_check(closure, tpl.flat(), skip=skip)
            assert worst < 1e-4, f"{variant.value}: {worst}"


def test_readout_chains_adds():
    t = Tape()
    nodes = [t.leaf(np.full((2, 2), float(i))) for i in range(1, 4)]
    out = readout(t, nodes)
    assert np.array_equal(out.value, np.full((2, 2), 6.0))
    with pytest.raises(ContractError):
        readout(t, [])


def test_lambda_trace():
    p = init_params(4, 3, 2, 3, Variant.FULL, np.random.default_rng(19))
    p.phi[:] = [-1.0, 0.0, 2.0]
    assert np.array_equal(lambda_trace(p), [1.0, 1.0, 3.0])


def test_predict_breaks_ties_low():
    z = np.array([[0.5, 0.5], [0.1, 0.9], [2.0, -1.0]])
    assert np.array_equal(predict(z), [0, 1, 0])
