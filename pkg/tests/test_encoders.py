import numpy as np
import pytest

from trendguard.encoders import (
    MultiModalParams,
    SingleModalParams,
    encode_multimodal,
    encode_single,
    multimodal_backward,
    multimodal_forward,
    param_arrays,
    single_backward,
    single_forward,
)
from trendguard.errors import EmptyTokens, ZeroEmbedding
from trendguard.scl import scl_loss, scl_loss_grad

from oracles import central_difference_grad, grad_max_relative_error


def check_param_grads(loss_of_params, params, analytic: dict, tol=1e-4, h=1e-5):
    """Compare every parameter's analytic gradient with central differences."""
    arrays = param_arrays(params)
    for name, arr in arrays.items():
        def f(values, _name=name, _arr=arr):
            saved = _arr.copy()
            _arr[...] = values
            out = loss_of_params()
            _arr[...] = saved
            return out

        numeric = central_difference_grad(f, arr.copy(), h=h)
        err = grad_max_relative_error(analytic[name], numeric)
        assert err < tol, f"param {name}: rel err {err:.2e}"


class TestSingleModal:
    def test_constant_output_with_zero_hidden_weights(self, rng):
        params = SingleModalParams.create(5, 8, 6, rng)
        params.w1[...] = 0
        params.w2[...] = 0
        params.b1[...] = 0
        params.b2[...] = 0
        params.bp[...] = rng.normal(size=6)
        a = encode_single(rng.normal(size=5), params)
        b = encode_single(rng.normal(size=5), params)
        np.testing.assert_array_equal(a, b)
        assert abs(np.linalg.norm(a.astype(np.float64)) - 1.0) < 1e-6

    def test_output_always_unit_norm(self, rng):
        params = SingleModalParams.create(10, 12, 8, rng)
        for _ in range(1000):
            z = encode_single(rng.normal(size=10), params)
            assert abs(np.linalg.norm(z.astype(np.float64)) - 1.0) < 1e-5

    def test_zero_embedding_error(self, rng):
        params = SingleModalParams.create(4, 6, 5, rng)
        params.wp[...] = 0
        params.bp[...] = 0
        with pytest.raises(ZeroEmbedding):
            encode_single(rng.normal(size=4), params)

    def test_loss_gradient_through_encoder(self, rng):
        params = SingleModalParams.create(6, 7, 5, rng)
        x = rng.normal(size=(8, 6))
        labels = np.tile(np.arange(4), 2)
        tau = 0.2

        def loss():
            z, _ = single_forward(x, params)
            return scl_loss(z, labels, tau)

        z, cache = single_forward(x, params)
        dz = scl_loss_grad(z, labels, tau)
        analytic = single_backward(dz, cache, params)
        check_param_grads(loss, params, analytic)


class TestMultiModal:
    def test_single_text_token_equals_residual_with_value(self, rng):
        params = MultiModalParams.create(4, 3, 6, 5, rng)
        visual = rng.normal(size=(2, 4))
        text = rng.normal(size=(1, 3))
        z = encode_multimodal(visual, text, params)
        # with one key the attention weight is exactly 1, so the context is
        # the single value vector at every visual position
        ve = visual @ params.wv.T + params.bv
        te = text @ params.wt.T + params.bt
        val = te @ params.wval.T
        fused = ve + np.tile(val @ params.wo.T, (2, 1))
        pre = fused.mean(axis=0) @ params.wp.T + params.bp
        expected = (pre / np.linalg.norm(pre)).astype(np.float32)
        np.testing.assert_allclose(z, expected, atol=1e-6)

    def test_text_permutation_invariance(self, rng):
        params = MultiModalParams.create(5, 4, 8, 6, rng)
        visual = rng.normal(size=(4, 5))
        text = rng.normal(size=(6, 4))
        base = encode_multimodal(visual, text, params)
        for _ in range(5):
            perm = rng.permutation(6)
            np.testing.assert_allclose(encode_multimodal(visual, text[perm], params), base, atol=1e-6)

    def test_empty_tokens_rejected(self, rng):
        params = MultiModalParams.create(4, 3, 6, 5, rng)
        with pytest.raises(EmptyTokens):
            encode_multimodal(np.zeros((0, 4)), rng.normal(size=(2, 3)), params)
        with pytest.raises(EmptyTokens):
            encode_multimodal(rng.normal(size=(2, 4)), np.zeros((0, 3)), params)

    def test_unit_norm_output(self, rng):
        params = MultiModalParams.create(4, 4, 8, 16, rng)
        for _ in range(200):
            z = encode_multimodal(rng.normal(size=(4, 4)), rng.normal(size=(4, 4)), params)
            assert abs(np.linalg.norm(z.astype(np.float64)) - 1.0) < 1e-5

    def test_loss_gradient_through_encoder(self, rng):
        params = MultiModalParams.create(4, 3, 5, 6, rng)
        visual = rng.normal(size=(6, 3, 4))
        text = rng.normal(size=(6, 2, 3))
        labels = np.tile(np.arange(3), 2)
        tau = 0.3

        def loss():
            z, _ = multimodal_forward(visual, text, params)
            return scl_loss(z, labels, tau)

        z, cache = multimodal_forward(visual, text, params)
        dz = scl_loss_grad(z, labels, tau)
        analytic = multimodal_backward(dz, cache, params)
        check_param_grads(loss, params, analytic)

    def test_batched_matches_single(self, rng):
        params = MultiModalParams.create(4, 3, 6, 8, rng)
        visual = rng.normal(size=(5, 3, 4))
        text = rng.normal(size=(5, 2, 3))
        z, _ = multimodal_forward(visual, text, params)
        for i in range(5):
            np.testing.assert_allclose(
                z[i].astype(np.float32), encode_multimodal(visual[i], text[i], params), atol=1e-7
            )
