"""Cross attention head: compatibility, attention pipeline, classifier, loss."""

import math

import numpy as np
import pytest

from laco.autograd import Tensor, tape, tensor_sum
from laco.config import ConfigError
from laco.heads import (
    classifier_probs,
    compatibility,
    cross_attention,
    mlc_loss,
    predict,
)

from helpers import check_gradients


class TestCompatibility:
    def test_orthogonal_vectors_give_zeros(self):
        h_doc = Tensor([[1.0, 0.0], [0.0, 0.0]])
        h_labels = Tensor([[0.0, 1.0], [0.0, 2.0]])
        out = compatibility(h_doc, h_labels)
        assert np.array_equal(out.data, np.zeros((2, 2)))

    def test_identical_unit_vectors_give_one(self):
        v = np.array([0.6, 0.8])
        out = compatibility(Tensor([v]), Tensor([v, [1.0, 0.0]]))
        assert out.data[0, 0] == pytest.approx(1.0, abs=1e-15)

    def test_matches_entrywise_dot_oracle(self):
        rng = np.random.default_rng(0)
        h_doc = rng.normal(size=(3, 4))
        h_labels = rng.normal(size=(2, 4))
        out = compatibility(Tensor(h_doc), Tensor(h_labels))
        for i in range(3):
            for j in range(2):
                assert out.data[i, j] == pytest.approx(
                    float(np.dot(h_doc[i], h_labels[j])), abs=0.0
                )


def _ca_inputs(m=6, n=3, k=8, filters=4, window=3, seed=0, scale=1.0):
    rng = np.random.default_rng(seed)
    return {
        "h_doc": rng.normal(size=(m, k)) * scale,
        "h_labels": rng.normal(size=(n, k)) * scale,
        "conv_w": rng.normal(size=(window, n, filters)) * scale,
        "conv_b": rng.normal(size=(filters,)) * scale,
    }


class TestCrossAttention:
    def test_uniform_compatibility_gives_column_mean(self):
        rng = np.random.default_rng(1)
        h_doc = Tensor(rng.normal(size=(5, 4)))
        compat = Tensor(np.full((5, 2), 0.7))
        conv_w = Tensor(np.full((3, 2, 2), 0.3))
        conv_b = Tensor(np.zeros(2))
        c, beta = cross_attention(compat, h_doc, conv_w, conv_b, window=3)
        # identical rows after conv would break only at the boundary pads;
        # a window of 1 removes the boundary effect entirely
        c1, beta1 = cross_attention(compat, h_doc, Tensor(np.full((1, 2, 2), 0.3)),
                                    conv_b, window=1)
        assert np.allclose(beta1.data, 0.2, atol=1e-12)
        assert np.allclose(c1.data, h_doc.data.mean(axis=0), atol=1e-12)

    def test_single_word_gets_full_attention(self):
        arrays = _ca_inputs(m=1)
        c, beta = cross_attention(Tensor(arrays["h_doc"][:, :3] @ np.ones((3, 3))),
                                  Tensor(arrays["h_doc"]),
                                  Tensor(arrays["conv_w"]), Tensor(arrays["conv_b"]),
                                  window=3)
        assert beta.data.shape == (1,)
        assert beta.data[0] == 1.0
        assert np.array_equal(c.data, arrays["h_doc"][0])

    def test_beta_is_a_distribution(self):
        for seed in range(5):
            arrays = _ca_inputs(seed=seed)
            compat = compatibility(Tensor(arrays["h_doc"]), Tensor(arrays["h_labels"]))
            _, beta = cross_attention(compat, Tensor(arrays["h_doc"]),
                                      Tensor(arrays["conv_w"]),
                                      Tensor(arrays["conv_b"]), window=3)
            assert np.all(beta.data >= 0.0)
            assert abs(beta.data.sum() - 1.0) < 1e-9

    def test_c_in_convex_hull_of_word_vectors(self):
        arrays = _ca_inputs(seed=3)
        compat = compatibility(Tensor(arrays["h_doc"]), Tensor(arrays["h_labels"]))
        c, beta = cross_attention(compat, Tensor(arrays["h_doc"]),
                                  Tensor(arrays["conv_w"]), Tensor(arrays["conv_b"]),
                                  window=3)
        assert np.array_equal(c.data, beta.data @ arrays["h_doc"])
        assert np.all(c.data >= arrays["h_doc"].min(axis=0) - 1e-12)
        assert np.all(c.data <= arrays["h_doc"].max(axis=0) + 1e-12)

    def test_empty_document_degenerates_to_zero(self):
        c, beta = cross_attention(Tensor(np.zeros((0, 3))), Tensor(np.zeros((0, 8))),
                                  Tensor(np.zeros((3, 3, 4))), Tensor(np.zeros(4)),
                                  window=3)
        assert beta is None
        assert np.array_equal(c.data, np.zeros(8))

    def test_even_window_pads_asymmetrically(self):
        arrays = _ca_inputs(m=5, window=4)
        compat = compatibility(Tensor(arrays["h_doc"]), Tensor(arrays["h_labels"]))
        c, beta = cross_attention(compat, Tensor(arrays["h_doc"]),
                                  Tensor(arrays["conv_w"]), Tensor(arrays["conv_b"]),
                                  window=4)
        assert beta.data.shape == (5,)  # same-length output

    def test_gradient_through_pipeline(self):
        arrays = _ca_inputs(m=6, n=3, k=8, seed=4)
        gold = np.zeros(6)
        gold[1] = 1.0

        def build(t):
            compat = compatibility(t["h_doc"], t["h_labels"])
            c, _ = cross_attention(compat, t["h_doc"], t["conv_w"], t["conv_b"],
                                   window=3)
            return tensor_sum(c * c)

        check_gradients(build, arrays)


class TestPredict:
    def test_zero_params_give_half_everywhere(self):
        rep = Tensor(np.zeros(4))
        pred = predict(rep, Tensor(np.zeros((3, 4))), Tensor(np.zeros(3)), 0.5)
        assert np.allclose(pred.probs, 0.5)
        assert pred.predicted == (0, 1, 2)  # >= rule predicts everything

    def test_saturated_bias_selects_single_label(self):
        rep = Tensor(np.zeros(4))
        bias = np.full(5, -10.0)
        bias[3] = 10.0
        pred = predict(rep, Tensor(np.zeros((5, 4))), Tensor(bias), 0.5)
        assert pred.predicted == (3,)

    def test_matches_manual_linear_algebra(self):
        rng = np.random.default_rng(5)
        rep = rng.normal(size=6)
        w = rng.normal(size=(4, 6))
        b = rng.normal(size=4)
        pred = predict(Tensor(rep), Tensor(w), Tensor(b), 0.5)
        manual = 1.0 / (1.0 + np.exp(-(w @ rep + b)))
        assert np.allclose(pred.probs, manual, atol=1e-15)

    def test_threshold_validation(self):
        with pytest.raises(ConfigError):
            predict(Tensor(np.zeros(2)), Tensor(np.zeros((2, 2))),
                    Tensor(np.zeros(2)), 1.5)

    def test_empty_prediction_allowed(self):
        pred = predict(Tensor(np.zeros(2)), Tensor(np.zeros((2, 2))),
                       Tensor(np.full(2, -5.0)), 0.5)
        assert pred.predicted == ()


class TestMlcLoss:
    def test_all_half_gives_n_ln2(self):
        n = 54
        probs = Tensor(np.full(n, 0.5))
        gold = np.zeros(n)
        gold[:3] = 1.0
        loss = mlc_loss(probs, gold)
        assert loss.item() == pytest.approx(n * math.log(2.0), abs=1e-9)

    def test_perfect_predictions_near_zero(self):
        probs = Tensor(np.array([1.0, 0.0, 1.0]))
        gold = np.array([1.0, 0.0, 1.0])
        assert mlc_loss(probs, gold).item() < 1e-9

    def test_hand_computed_example(self):
        loss = mlc_loss(Tensor([0.9, 0.2]), np.array([1.0, 0.0]))
        assert loss.item() == pytest.approx(-(math.log(0.9) + math.log(0.8)),
                                            abs=1e-12)

    def test_permutation_equivariance(self):
        rng = np.random.default_rng(6)
        probs = rng.uniform(0.05, 0.95, size=8)
        gold = (rng.random(8) < 0.4).astype(float)
        perm = rng.permutation(8)
        a = mlc_loss(Tensor(probs), gold).item()
        b = mlc_loss(Tensor(probs[perm]), gold[perm]).item()
        assert a == pytest.approx(b, abs=1e-12)

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(7)
        arrays = {"p": rng.uniform(0.1, 0.9, size=6)}
        gold = (rng.random(6) < 0.5).astype(float)
        check_gradients(lambda t: mlc_loss(t["p"], gold), arrays)

    def test_classifier_probs_gradient(self):
        rng = np.random.default_rng(8)
        arrays = {
            "rep": rng.normal(size=5),
            "w": rng.normal(size=(3, 5)),
            "b": rng.normal(size=3),
        }
        gold = np.array([1.0, 0.0, 1.0])
        check_gradients(
            lambda t: mlc_loss(classifier_probs(t["rep"], t["w"], t["b"]), gold),
            arrays,
        )
