"""Tensor ops: forward values against hand-worked oracles, gradients
against central finite differences."""

import math

import numpy as np
import pytest

from laco.autograd import (
    DimensionError,
    Tensor,
    as_tensor,
    binary_cross_entropy,
    clip,
    concat,
    conv1d,
    exp,
    gather_rows,
    log,
    matmul,
    relu,
    reshape,
    sigmoid,
    softmax,
    sqrt,
    stop_gradient,
    tanh,
    tape,
    tensor_max,
    tensor_mean,
    tensor_sum,
    transpose,
)

from helpers import check_gradients, fd_gradient, relative_error


class TestMatmul:
    def test_identity(self):
        b = np.array([[1.0, 2.0], [3.0, 4.0]])
        out = matmul(Tensor(np.eye(2)), Tensor(b))
        assert np.array_equal(out.data, b)

    def test_hand_expanded_product(self):
        a = Tensor([[1.0, 0.0], [0.0, 0.0]])
        b = Tensor([[0.0, 1.0], [1.0, 0.0]])
        out = matmul(a, b)
        assert np.array_equal(out.data, [[0.0, 1.0], [0.0, 0.0]])

    def test_shape_mismatch_names_both_shapes(self):
        with pytest.raises(DimensionError) as err:
            matmul(Tensor(np.zeros((2, 3))), Tensor(np.zeros((2, 3))))
        assert "(2, 3)" in str(err.value)

    def test_grad_of_sum_equals_ones_times_bt(self):
        rng = np.random.default_rng(0)
        a = Tensor(rng.normal(size=(3, 4)), requires_grad=True)
        b = Tensor(rng.normal(size=(4, 2)), requires_grad=True)
        with tape() as tp:
            loss = tensor_sum(matmul(a, b))
        tp.backward(loss)
        expected = np.ones((3, 2)) @ b.data.T
        assert np.array_equal(a.grad, expected)

    def test_grad_matches_finite_differences(self):
        rng = np.random.default_rng(1)
        arrays = {"a": rng.normal(size=(3, 4)), "b": rng.normal(size=(4, 2))}
        check_gradients(lambda t: tensor_sum(tanh(matmul(t["a"], t["b"]))), arrays)

    def test_batched_grad(self):
        rng = np.random.default_rng(2)
        arrays = {"a": rng.normal(size=(2, 3, 4)), "b": rng.normal(size=(2, 4, 3))}
        check_gradients(lambda t: tensor_sum(tanh(matmul(t["a"], t["b"]))), arrays)


class TestElementwise:
    def test_sigmoid_at_zero(self):
        assert sigmoid(Tensor(0.0)).item() == 0.5

    def test_tanh_and_relu_trivia(self):
        assert tanh(Tensor(0.0)).item() == 0.0
        assert relu(Tensor(-3.0)).item() == 0.0

    def test_sigmoid_gradient_at_zero(self):
        x = Tensor(0.0, requires_grad=True)
        with tape() as tp:
            y = sigmoid(x)
        tp.backward(y)
        assert x.grad == pytest.approx(0.25, abs=1e-15)

    def test_sigmoid_extreme_values_stable(self):
        out = sigmoid(Tensor([-800.0, 800.0]))
        assert np.all(np.isfinite(out.data))
        assert out.data[0] == 0.0 and out.data[1] == 1.0

    def test_log_clamps_nonpositive(self):
        out = log(Tensor([-1.0, 0.0, 1.0]))
        assert np.all(np.isfinite(out.data))
        assert out.data[0] == math.log(1e-12)
        assert out.data[2] == 0.0

    def test_log_clamped_region_zero_grad(self):
        x = Tensor([-1.0, 2.0], requires_grad=True)
        with tape() as tp:
            y = tensor_sum(log(x))
        tp.backward(y)
        assert x.grad[0] == 0.0
        assert x.grad[1] == pytest.approx(0.5)

    def test_broadcast_add_grad(self):
        rng = np.random.default_rng(3)
        arrays = {"x": rng.normal(size=(4, 3)), "b": rng.normal(size=(3,))}
        check_gradients(lambda t: tensor_sum(tanh(t["x"] + t["b"])), arrays)

    def test_incompatible_broadcast_raises(self):
        with pytest.raises(DimensionError):
            Tensor(np.zeros(3)) + Tensor(np.zeros(4))

    def test_mul_div_grads(self):
        rng = np.random.default_rng(4)
        arrays = {"a": rng.normal(size=(3, 3)), "b": rng.uniform(1.0, 2.0, (3, 3))}
        check_gradients(lambda t: tensor_sum(t["a"] * t["b"] / (t["b"] + 1.0)),
                        arrays)

    def test_clip_grad_masked_outside(self):
        x = Tensor([-2.0, 0.5, 2.0], requires_grad=True)
        with tape() as tp:
            y = tensor_sum(clip(x, 0.0, 1.0))
        tp.backward(y)
        assert list(x.grad) == [0.0, 1.0, 0.0]


class TestReductions:
    def test_sum_axis_keepdims_grad(self):
        rng = np.random.default_rng(5)
        arrays = {"x": rng.normal(size=(3, 4))}
        check_gradients(
            lambda t: tensor_sum(tanh(tensor_sum(t["x"], axis=1, keepdims=True))),
            arrays,
        )

    def test_mean_grad(self):
        rng = np.random.default_rng(6)
        arrays = {"x": rng.normal(size=(4, 5))}
        check_gradients(lambda t: tensor_sum(tanh(tensor_mean(t["x"], axis=0))),
                        arrays)

    def test_max_forward(self):
        out = tensor_max(Tensor([[1.0, 5.0], [7.0, 2.0]]), axis=1)
        assert list(out.data) == [5.0, 7.0]

    def test_max_tie_routes_to_first_index(self):
        x = Tensor([3.0, 3.0], requires_grad=True)
        with tape() as tp:
            y = tensor_max(x, axis=0)
        tp.backward(y)
        assert list(x.grad) == [1.0, 0.0]

    def test_max_grad_away_from_ties(self):
        rng = np.random.default_rng(7)
        base = rng.normal(size=(5, 4))
        base += np.arange(20).reshape(5, 4) * 1e-3  # separate any near-ties
        check_gradients(lambda t: tensor_sum(tanh(tensor_max(t["x"], axis=0))),
                        {"x": base})

    def test_max_empty_axis_errors(self):
        with pytest.raises(DimensionError):
            tensor_max(Tensor(np.zeros((0, 2))), axis=0)


class TestShapeOps:
    def test_reshape_transpose_grads(self):
        rng = np.random.default_rng(8)
        arrays = {"x": rng.normal(size=(2, 6))}
        check_gradients(
            lambda t: tensor_sum(tanh(transpose(reshape(t["x"], (3, 4))))),
            arrays,
        )

    def test_index_slice_grad(self):
        rng = np.random.default_rng(9)
        arrays = {"x": rng.normal(size=(5, 3))}
        check_gradients(lambda t: tensor_sum(tanh(t["x"][1:4])), arrays)

    def test_gather_duplicate_rows_accumulates(self):
        x = Tensor(np.ones((3, 2)), requires_grad=True)
        with tape() as tp:
            y = tensor_sum(gather_rows(x, [0, 0, 2]))
        tp.backward(y)
        assert np.array_equal(x.grad, [[2.0, 2.0], [0.0, 0.0], [1.0, 1.0]])

    def test_concat_grads(self):
        rng = np.random.default_rng(10)
        arrays = {"a": rng.normal(size=(2, 3)), "b": rng.normal(size=(2, 2))}
        check_gradients(
            lambda t: tensor_sum(tanh(concat([t["a"], t["b"]], axis=1))),
            arrays,
        )


class TestConv1d:
    def test_scaling_filter(self):
        x = Tensor(np.ones((4, 1)))
        w = Tensor(np.full((1, 1, 1), 2.0))
        out = conv1d(x, w)
        assert np.array_equal(out.data, np.full((4, 1), 2.0))

    def test_averaging_filter_hand_computed(self):
        x = Tensor(np.array([[1.0], [2.0], [3.0], [4.0]]))
        w = Tensor(np.full((3, 1, 1), 1.0 / 3.0))
        out = conv1d(x, w, pad_left=1, pad_right=1)
        expected = np.array([[1.0], [2.0], [3.0], [7.0 / 3.0]])
        assert np.allclose(out.data, expected, atol=1e-15)

    def test_window_larger_than_padded_input_errors(self):
        with pytest.raises(DimensionError):
            conv1d(Tensor(np.zeros((2, 1))), Tensor(np.zeros((5, 1, 1))))

    def test_grad_check_random(self):
        rng = np.random.default_rng(11)
        arrays = {
            "x": rng.normal(size=(6, 3)),
            "w": rng.normal(size=(3, 3, 2)),
            "b": rng.normal(size=(2,)),
        }
        check_gradients(
            lambda t: tensor_sum(
                tanh(conv1d(t["x"], t["w"], t["b"], pad_left=1, pad_right=1))
            ),
            arrays,
        )

    def test_same_padding_output_length(self):
        out = conv1d(Tensor(np.zeros((7, 2))), Tensor(np.zeros((4, 2, 3))),
                     pad_left=2, pad_right=1)
        assert out.shape == (7, 3)


class TestSoftmaxAndComposites:
    def test_uniform_for_constant_input(self):
        out = softmax(Tensor([2.0, 2.0, 2.0]))
        assert np.allclose(out.data, 1.0 / 3.0, atol=1e-15)

    def test_rows_sum_to_one(self):
        rng = np.random.default_rng(12)
        out = softmax(Tensor(rng.normal(size=(4, 6))), axis=-1)
        assert np.allclose(out.data.sum(axis=-1), 1.0, atol=1e-12)

    def test_softmax_grad(self):
        rng = np.random.default_rng(13)
        arrays = {"x": rng.normal(size=(3, 5)), "w": rng.normal(size=(3, 5))}
        check_gradients(
            lambda t: tensor_sum(t["w"] * softmax(t["x"], axis=-1)), arrays
        )

    def test_stop_gradient_blocks(self):
        x = Tensor([1.0, 2.0], requires_grad=True)
        with tape() as tp:
            y = tensor_sum(stop_gradient(x) * x)
        tp.backward(y)
        assert np.array_equal(x.grad, x.data)  # only the live branch

    def test_bce_matches_hand_formula(self):
        probs = Tensor([0.9, 0.2])
        gold = np.array([1.0, 0.0])
        out = binary_cross_entropy(probs, gold, reduction="sum")
        assert out.item() == pytest.approx(-(math.log(0.9) + math.log(0.8)),
                                           abs=1e-12)

    def test_bce_never_nan(self):
        out = binary_cross_entropy(Tensor([0.0, 1.0]), np.array([1.0, 0.0]))
        assert math.isfinite(out.item())


class TestTapeMechanics:
    def test_backward_requires_scalar_root(self):
        x = Tensor(np.ones(3), requires_grad=True)
        with tape() as tp:
            y = x * 2.0
        with pytest.raises(DimensionError):
            tp.backward(y)

    def test_fanout_accumulates(self):
        x = Tensor(2.0, requires_grad=True)
        with tape() as tp:
            y = x * x + x
        tp.backward(y)
        assert x.grad == pytest.approx(5.0, abs=1e-15)

    def test_no_tape_no_tracking(self):
        x = Tensor(1.0, requires_grad=True)
        y = x * 3.0
        assert not y.requires_grad

    def test_reverse_pass_deterministic(self):
        def run():
            rng = np.random.default_rng(42)
            a = Tensor(rng.normal(size=(4, 4)), requires_grad=True)
            b = Tensor(rng.normal(size=(4, 4)), requires_grad=True)
            with tape() as tp:
                loss = tensor_sum(sigmoid(matmul(a, b)) * tanh(a))
            tp.backward(loss)
            return a.grad.copy(), b.grad.copy()

        ga1, gb1 = run()
        ga2, gb2 = run()
        assert np.array_equal(ga1, ga2) and np.array_equal(gb1, gb2)

    def test_fd_oracle_agrees_on_composite(self):
        # sanity-check the harness itself on a known analytic gradient
        x = np.array([0.3, -0.7, 1.2])

        def f():
            return tensor_sum(exp(Tensor(x) * 0.5)).item()

        numeric = fd_gradient(f, x)
        analytic = 0.5 * np.exp(x * 0.5)
        assert relative_error(analytic, numeric) < 1e-8

    def test_sqrt_grad(self):
        rng = np.random.default_rng(14)
        arrays = {"x": rng.uniform(0.5, 2.0, size=(3, 3))}
        check_gradients(lambda t: tensor_sum(sqrt(t["x"])), arrays)
