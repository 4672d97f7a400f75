"""MLP forward/backward/optimizer tests, with finite-difference gradient gates."""

import numpy as np
import pytest

from labo.model import MlpModel, SgdOptimizer, load_checkpoint, save_checkpoint
from labo.numerics import softmax
from labo.objectives import grad_wrt_logits, smoothed_ce
from labo.smoothing import uniform_smooth

# regression pin: first correct run of seed 42, [2, 8, 3], input (1, -1)
GOLDEN_LOGITS = [1.8784433810835854, -2.2070295031015386, 1.8294297133292632]


def fd_param_grads(model, f, h=1e-5):
    """Central finite differences of f() with respect to every parameter."""
    theta = model.params_flat()
    g = np.empty_like(theta)
    for i in range(theta.size):
        e = np.zeros_like(theta)
        e[i] = h
        model.set_params_flat(theta + e)
        up = f()
        model.set_params_flat(theta - e)
        down = f()
        g[i] = (up - down) / (2 * h)
    model.set_params_flat(theta)
    return g


def flatten_grads(grads):
    return np.concatenate([np.concatenate([gW.ravel(), gb]) for gW, gb in grads])


class TestForward:
    def test_zero_parameters_give_uniform_softmax(self):
        m = MlpModel([4, 6, 3], seed=0, init=False)
        z = m.forward(np.ones(4))
        np.testing.assert_array_equal(z, np.zeros(3))
        np.testing.assert_allclose(softmax(z), [1 / 3] * 3, atol=1e-15)

    def test_identity_single_layer(self):
        m = MlpModel([3, 3], seed=0, init=False)
        m.weights[0] = np.eye(3)
        x = np.array([0.3, -1.2, 2.0])
        np.testing.assert_array_equal(m.forward(x), x)

    def test_golden_logits(self):
        m = MlpModel([2, 8, 3], seed=42)
        np.testing.assert_array_equal(m.forward(np.array([1.0, -1.0])), GOLDEN_LOGITS)

    def test_batch_rows_match_single_inputs(self):
        # matrix-matrix and vector-matrix BLAS kernels may differ by an ulp
        m = MlpModel([3, 5, 4], seed=1)
        rng = np.random.default_rng(42)
        X = rng.normal(size=(6, 3))
        Z = m.forward(X)
        for i in range(6):
            np.testing.assert_allclose(m.forward(X[i]), Z[i], rtol=0, atol=1e-12)

    def test_rejects_shape_mismatch(self):
        m = MlpModel([3, 4], seed=0)
        with pytest.raises(ValueError):
            m.forward(np.ones(5))

    def test_rejects_bad_architecture(self):
        with pytest.raises(ValueError):
            MlpModel([4], seed=0)
        with pytest.raises(ValueError):
            MlpModel([4, 1], seed=0)


class TestBackward:
    def test_zero_gradient_propagates_to_zero(self):
        m = MlpModel([2, 8, 3], seed=3)
        m.forward(np.array([0.5, -0.5]))
        grads = m.backward(np.zeros(3))
        for gW, gb in grads:
            assert not gW.any() and not gb.any()

    def test_requires_forward_cache(self):
        m = MlpModel([2, 4, 3], seed=0)
        with pytest.raises(RuntimeError, match="forward"):
            m.backward(np.zeros(3))

    def test_linearity(self):
        m = MlpModel([2, 8, 3], seed=5)
        rng = np.random.default_rng(42)
        x = rng.normal(size=2)
        g1, g2 = rng.normal(size=3), rng.normal(size=3)
        m.forward(x)
        combined = m.backward(g1 + g2)
        m.forward(x)
        first = m.backward(g1)
        m.forward(x)
        second = m.backward(g2)
        for (cW, cb), (aW, ab), (bW, bb) in zip(combined, first, second):
            np.testing.assert_allclose(cW, aW + bW, atol=1e-10)
            np.testing.assert_allclose(cb, ab + bb, atol=1e-10)

    @pytest.mark.parametrize("arch", [[2, 8, 3], [4, 6, 6, 5]])
    def test_finite_difference_gate(self, arch):
        """Every parameter tensor's gradient matches central differences."""
        rng = np.random.default_rng(42)
        m = MlpModel(arch, seed=7)
        x = rng.normal(size=arch[0])
        k = int(rng.integers(arch[-1]))
        label = uniform_smooth(k, arch[-1], 0.1)

        fd = fd_param_grads(m, lambda: smoothed_ce(label, m.forward(x)))
        z = m.forward(x)
        analytic = flatten_grads(m.backward(grad_wrt_logits(label, z)))
        offset = 0
        for W, b in zip(m.weights, m.biases):
            for size in (W.size, b.size):
                fd_t = fd[offset : offset + size]
                an_t = analytic[offset : offset + size]
                rel = np.linalg.norm(fd_t - an_t) / max(np.linalg.norm(fd_t), 1e-12)
                assert rel <= 1e-5
                offset += size

    def test_batch_gradient_is_mean_of_instance_gradients(self):
        m = MlpModel([3, 6, 4], seed=11)
        rng = np.random.default_rng(42)
        X = rng.normal(size=(5, 3))
        G = rng.normal(size=(5, 4)) / 5.0
        Z = m.forward(X)
        batch = m.backward(G)
        acc = None
        for i in range(5):
            m.forward(X[i])
            inst = m.backward(G[i])
            if acc is None:
                acc = [[gW.copy(), gb.copy()] for gW, gb in inst]
            else:
                for a, (gW, gb) in zip(acc, inst):
                    a[0] += gW
                    a[1] += gb
        for (bW, bb), (aW, ab) in zip(batch, acc):
            np.testing.assert_allclose(bW, aW, atol=1e-12)
            np.testing.assert_allclose(bb, ab, atol=1e-12)


class TestSgdStep:
    def test_vanilla_step(self):
        m = MlpModel([2, 2], seed=0, init=False)
        opt = SgdOptimizer(m, lr=0.5, momentum=0.0, weight_decay=0.0)
        grads = [(np.ones((2, 2)), np.ones(2))]
        opt.step(m, grads)
        np.testing.assert_allclose(m.weights[0], -0.5 * np.ones((2, 2)), atol=1e-15)
        np.testing.assert_allclose(m.biases[0], -0.5 * np.ones(2), atol=1e-15)

    def test_zero_gradient_is_identity_without_decay(self):
        m = MlpModel([2, 3], seed=9)
        before = m.params_flat()
        opt = SgdOptimizer(m, lr=0.1, momentum=0.9, weight_decay=0.0)
        opt.step(m, [(np.zeros((2, 3)), np.zeros(3))])
        np.testing.assert_array_equal(m.params_flat(), before)

    def test_momentum_recursion(self):
        """Unit gradient twice at momentum 0.9: steps of 0.1 then 0.19."""
        m = MlpModel([1, 2], seed=0, init=False)
        opt = SgdOptimizer(m, lr=0.1, momentum=0.9, weight_decay=0.0)
        g = [(np.ones((1, 2)), np.zeros(2))]
        opt.step(m, g)
        np.testing.assert_allclose(m.weights[0], -0.1 * np.ones((1, 2)), atol=1e-15)
        opt.step(m, g)
        np.testing.assert_allclose(m.weights[0], -0.29 * np.ones((1, 2)), atol=1e-15)

    def test_weight_decay_enters_gradient(self):
        m = MlpModel([1, 2], seed=0, init=False)
        m.weights[0][:] = 2.0
        opt = SgdOptimizer(m, lr=0.1, momentum=0.0, weight_decay=0.5)
        opt.step(m, [(np.zeros((1, 2)), np.zeros(2))])
        np.testing.assert_allclose(m.weights[0], 2.0 - 0.1 * (0.5 * 2.0), atol=1e-15)

    def test_rejects_bad_hyperparameters(self):
        m = MlpModel([2, 2], seed=0)
        with pytest.raises(ValueError):
            SgdOptimizer(m, lr=0.0)
        with pytest.raises(ValueError):
            SgdOptimizer(m, lr=0.1, momentum=1.0)
        with pytest.raises(ValueError):
            SgdOptimizer(m, lr=0.1, weight_decay=-0.1)


class TestCheckpoint:
    def test_round_trip_is_value_exact(self, tmp_path):
        m = MlpModel([3, 7, 4], seed=123)
        # make values awkward on purpose
        m.weights[0] *= np.pi
        m.biases[1] += 1e-17
        path = tmp_path / "model.json"
        save_checkpoint(m, str(path))
        loaded = load_checkpoint(str(path))
        assert loaded.layer_sizes == m.layer_sizes
        assert loaded.seed == m.seed
        for a, b in zip(loaded.weights, m.weights):
            np.testing.assert_array_equal(a, b)
        for a, b in zip(loaded.biases, m.biases):
            np.testing.assert_array_equal(a, b)

    def test_rejects_non_checkpoint_documents(self, tmp_path):
        path = tmp_path / "junk.json"
        path.write_text('{"hello": 1}')
        with pytest.raises(ValueError, match="checkpoint"):
            load_checkpoint(str(path))

    def test_rejects_tampered_shapes(self, tmp_path):
        import json

        m = MlpModel([2, 3], seed=0)
        path = tmp_path / "model.json"
        save_checkpoint(m, str(path))
        doc = json.loads(path.read_text())
        doc["layers"][0]["weight_shape"] = [3, 3]
        path.write_text(json.dumps(doc))
        with pytest.raises(ValueError, match="shape"):
            load_checkpoint(str(path))


class TestDeterminism:
    def test_same_seed_same_parameters(self):
        a = MlpModel([4, 16, 3], seed=77)
        b = MlpModel([4, 16, 3], seed=77)
        np.testing.assert_array_equal(a.params_flat(), b.params_flat())

    def test_copy_is_deep(self):
        a = MlpModel([2, 3], seed=1)
        b = a.copy()
        b.weights[0][0, 0] += 1.0
        assert a.weights[0][0, 0] != b.weights[0][0, 0]
