import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from simrep.nn import (
    Activation,
    AdamState,
    Conv1D,
    Conv2D,
    Dense,
    EncoderSpec,
    Flatten,
    GlobalAvgPool,
    MaxPool,
    ShapeError,
    adam_step,
    backward,
    forward,
    grad_check,
    init_encoder,
    standard_check_specs,
)
from simrep.nn.network import LayerParams

RELU = Activation("relu")


def small_dense_spec(n_in=4, out=3):
    return EncoderSpec((n_in,), (Dense(8), RELU, Dense(out)), output_dim=out)


class TestSpec:
    def test_shape_inference(self):
        spec = EncoderSpec(
            (20, 3),
            (Conv1D(4, kernel=5), RELU, MaxPool(2), GlobalAvgPool(), Dense(2)),
            output_dim=2,
        )
        assert spec.layer_shapes() == [(20, 3), (16, 4), (16, 4), (8, 4), (4,), (2,)]

    def test_inconsistent_dense_raises_naming_layer(self):
        with pytest.raises(ShapeError, match="layer 0"):
            EncoderSpec((8,), (Conv1D(2, kernel=3), Dense(2)), output_dim=2)

    def test_wrong_output_dim(self):
        with pytest.raises(ShapeError, match="expected"):
            EncoderSpec((4,), (Dense(5),), output_dim=3)

    def test_final_relu_rejected(self):
        with pytest.raises(ShapeError, match="linear"):
            EncoderSpec((4,), (Dense(3), RELU), output_dim=3)

    def test_final_linear_activation_allowed(self):
        EncoderSpec((4,), (Dense(3), Activation("linear")), output_dim=3)

    def test_json_round_trip(self):
        spec = EncoderSpec(
            (10, 10, 2),
            (Conv2D(3, kernel=3), RELU, MaxPool(2), Flatten(), Dense(4)),
            output_dim=4,
        )
        assert EncoderSpec.from_json(spec.to_json()) == spec


class TestInit:
    def test_same_seed_bit_identical(self):
        spec = small_dense_spec()
        a, b = init_encoder(spec, 5), init_encoder(spec, 5)
        for pa, pb in zip(a.params, b.params):
            if pa is not None:
                assert np.array_equal(pa.w, pb.w) and np.array_equal(pa.b, pb.b)

    def test_different_seed_differs(self):
        spec = small_dense_spec()
        a, b = init_encoder(spec, 5), init_encoder(spec, 6)
        assert not np.array_equal(a.to_flat(), b.to_flat())

    def test_finite_and_shaped(self):
        spec = EncoderSpec(
            (12, 12, 2), (Conv2D(3, kernel=3), RELU, Flatten(), Dense(4)), output_dim=4
        )
        w = init_encoder(spec, 0)
        assert w.params[0].w.shape == (3, 3, 2, 3)
        assert np.all(np.isfinite(w.to_flat()))

    def test_flat_round_trip(self):
        spec = small_dense_spec()
        w = init_encoder(spec, 1)
        flat = w.to_flat()
        again = w.with_flat(flat * 2.0)
        assert np.allclose(again.to_flat(), flat * 2.0)


class TestForward:
    def test_hand_matmul(self):
        # row-vector convention: out = x @ W + b
        spec = EncoderSpec((2,), (Dense(2),), output_dim=2)
        w = init_encoder(spec, 0, dtype=np.float64)
        w.params[0].w[:] = [[1.0, 2.0], [3.0, 4.0]]
        w.params[0].b[:] = 0.0
        emb, _ = forward(w, np.array([[1.0, 1.0]]))
        assert np.allclose(emb, [[4.0, 6.0]])

    def test_zero_weights_zero_embeddings(self):
        spec = small_dense_spec()
        w = init_encoder(spec, 0)
        w = w.with_flat(np.zeros(w.n_params()))
        emb, _ = forward(w, np.random.default_rng(0).normal(size=(3, 4)))
        assert np.array_equal(emb, np.zeros((3, 3)))

    def test_conv1d_identity_kernel_shifts(self):
        # kernel [1, 0, 0] copies the input; identity dense reads the conv out
        spec = EncoderSpec((6, 1), (Conv1D(1, kernel=3), Flatten(), Dense(4)), output_dim=4)
        w = init_encoder(spec, 0, dtype=np.float64)
        w.params[0].w[:] = 0.0
        w.params[0].w[0, 0, 0] = 1.0
        w.params[0].b[:] = 0.0
        w.params[2].w[:] = np.eye(4)
        w.params[2].b[:] = 0.0
        x = np.arange(6.0).reshape(1, 6, 1)
        emb, _ = forward(w, x)
        assert np.allclose(emb[0], [0.0, 1.0, 2.0, 3.0])

    def test_batch_independence(self):
        # BLAS may round differently per batch shape; agreement is to dtype
        # precision, not bitwise
        spec = EncoderSpec(
            (8, 8, 2),
            (Conv2D(3, kernel=3), RELU, MaxPool(2), Flatten(), Dense(5)),
            output_dim=5,
        )
        w = init_encoder(spec, 3)
        batch = np.random.default_rng(1).normal(size=(6, 8, 8, 2)).astype(np.float32)
        full, _ = forward(w, batch)
        singles = np.concatenate([forward(w, batch[i : i + 1])[0] for i in range(6)])
        assert np.allclose(full, singles, rtol=1e-4, atol=1e-5)

    def test_forward_deterministic(self):
        spec = small_dense_spec()
        w = init_encoder(spec, 2)
        x = np.random.default_rng(2).normal(size=(4, 4))
        assert np.array_equal(forward(w, x)[0], forward(w, x)[0])

    def test_nonfinite_input_rejected(self):
        spec = small_dense_spec()
        w = init_encoder(spec, 0)
        bad = np.ones((2, 4))
        bad[0, 0] = np.nan
        with pytest.raises(ValueError, match="non-finite"):
            forward(w, bad)

    def test_shape_mismatch_rejected(self):
        spec = small_dense_spec(n_in=9)
        w = init_encoder(spec, 0)
        with pytest.raises(ValueError, match="does not match"):
            forward(w, np.ones((2, 8)))


class TestBackward:
    def test_zero_grad_out_gives_zero_grads(self):
        spec = small_dense_spec()
        w = init_encoder(spec, 1)
        emb, cache = forward(w, np.random.default_rng(0).normal(size=(3, 4)))
        grads = backward(cache, np.zeros_like(emb))
        for g in grads:
            if g is not None:
                assert not g.w.any() and not g.b.any()

    def test_linear_dense_grad_is_input_outer_grad(self):
        spec = EncoderSpec((3,), (Dense(2),), output_dim=2)
        w = init_encoder(spec, 0, dtype=np.float64)
        x = np.random.default_rng(1).normal(size=(4, 3))
        g = np.random.default_rng(2).normal(size=(4, 2))
        _, cache = forward(w, x)
        grads = backward(cache, g)
        assert np.allclose(grads[0].w, x.T @ g)
        assert np.allclose(grads[0].b, g.sum(axis=0))

    def test_grad_shape_mismatch_raises(self):
        spec = small_dense_spec()
        w = init_encoder(spec, 0)
        _, cache = forward(w, np.ones((2, 4)))
        with pytest.raises(ValueError, match="gradient shape"):
            backward(cache, np.ones((2, 7)))

    def test_maxpool_tie_routes_to_first(self):
        spec = EncoderSpec((4, 1), (MaxPool(2), Flatten(), Dense(2)), output_dim=2)
        w = init_encoder(spec, 0, dtype=np.float64)
        x = np.array([[[1.0], [1.0], [0.5], [0.2]]])  # first window is a tie
        _, cache = forward(w, x)
        kind, shape, win, idx, _vals = cache[0][1]
        assert idx[0, 0, 0] == 0


@pytest.mark.parametrize("family", ["dense", "conv1d", "conv2d"])
def test_grad_check_families(family):
    spec = standard_check_specs()[family]
    for seed in (0, 1):
        assert grad_check(spec, seed) <= 1e-4


def test_grad_check_linear_only_is_exact():
    spec = EncoderSpec((5,), (Dense(4), Dense(3)), output_dim=3)
    assert grad_check(spec, 0) <= 1e-8


def test_grad_check_param_cap():
    spec = EncoderSpec((200,), (Dense(200), RELU, Dense(4)), output_dim=4)
    with pytest.raises(ValueError, match="caps"):
        grad_check(spec, 0)


class TestAdam:
    def test_zero_grad_fresh_state_no_move(self):
        spec = small_dense_spec()
        w = init_encoder(spec, 0)
        zero = [None if p is None else LayerParams(np.zeros_like(p.w), np.zeros_like(p.b))
                for p in w.params]
        w2, state = adam_step(w, zero, AdamState())
        assert np.array_equal(w.to_flat(), w2.to_flat())
        assert state.t == 1

    def test_first_step_moves_by_about_lr(self):
        spec = EncoderSpec((2,), (Dense(2),), output_dim=2)
        w = init_encoder(spec, 0, dtype=np.float64)
        rng = np.random.default_rng(3)
        grads = [LayerParams(rng.normal(size=(2, 2)) + 0.5, rng.normal(size=2) + 0.5)]
        lr = 1e-3
        w2, _ = adam_step(w, grads, AdamState(lr=lr))
        delta = np.abs(w2.to_flat() - w.to_flat())
        assert np.all(delta >= 0.999 * lr) and np.all(delta <= lr)

    def test_quadratic_descent_matches_scalar_reference(self):
        # independent scalar Adam on f(w) = w^2 from w = 1
        lr, b1, b2, eps = 0.1, 0.9, 0.999, 1e-8
        w_ref, m, v = 1.0, 0.0, 0.0
        for t in range(1, 101):
            g = 2 * w_ref
            m = b1 * m + (1 - b1) * g
            v = b2 * v + (1 - b2) * g * g
            w_ref -= lr * (m / (1 - b1**t)) / ((v / (1 - b2**t)) ** 0.5 + eps)

        spec = EncoderSpec((1,), (Dense(1),), output_dim=1)
        w = init_encoder(spec, 0, dtype=np.float64)
        w.params[0].w[:] = 1.0
        w.params[0].b[:] = 0.0
        state = AdamState(lr=lr)
        for _ in range(100):
            grads = [LayerParams(2 * w.params[0].w.copy(), np.zeros(1))]
            w, state = adam_step(w, grads, state)
        got = float(w.params[0].w[0, 0])
        assert abs(got - w_ref) < 1e-12
        assert abs(got) < 0.5
        assert state.t == 100


@settings(max_examples=20, deadline=None)
@given(st.integers(min_value=0, max_value=10_000))
def test_init_pure_function_of_seed(seed):
    spec = EncoderSpec((3,), (Dense(4), RELU, Dense(2)), output_dim=2)
    assert np.array_equal(init_encoder(spec, seed).to_flat(),
                          init_encoder(spec, seed).to_flat())
