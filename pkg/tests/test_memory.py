import math

import numpy as np
import pytest

from memtag import memory as em
from memtag.tensor_ops import EPS_COS, sigmoid, softplus


def make_params(p, m, n, rng=None, scale=0.5):
    rng = rng or np.random.default_rng(0)
    return em.AddressingParams(
        W_k=rng.normal(scale=scale, size=(m, p)), b_k=rng.normal(scale=scale, size=m),
        W_beta=rng.normal(scale=scale, size=(1, p)), b_beta=rng.normal(scale=scale, size=1),
        W_g=rng.normal(scale=scale, size=(1, p)), b_g=rng.normal(scale=scale, size=1),
        W_v=rng.normal(scale=scale, size=(m, p)), b_v=rng.normal(scale=scale, size=m),
        W_he=rng.normal(scale=scale, size=(n, p)), b_he=rng.normal(scale=scale, size=n))


class TestAddress:
    def test_identical_columns_give_uniform_weights(self):
        mem = em.ExternalMemory(3, 4)  # constant init -> identical columns
        params = make_params(p=5, m=3, n=4)
        w_hat, beta, k = em.address(mem, params, np.ones(5))
        assert np.allclose(w_hat, 0.25)
        assert beta > 0
        assert k.shape == (3,)

    def test_small_beta_flattens_weights(self):
        rng = np.random.default_rng(1)
        mem = em.ExternalMemory(3, 4, M=rng.normal(size=(3, 4)))
        params = make_params(p=5, m=3, n=4, rng=rng)
        # force beta ~ softplus(-40) ~ 0
        params.W_beta[:] = 0.0
        params.b_beta[:] = -40.0
        w_hat, beta, _ = em.address(mem, params, rng.normal(size=5))
        assert beta < 1e-15
        assert np.allclose(w_hat, 0.25, atol=1e-12)

    def test_matches_scalar_loop_oracle(self):
        rng = np.random.default_rng(2)
        p, m, n = 4, 3, 4
        mem = em.ExternalMemory(m, n, M=rng.normal(size=(m, n)))
        params = make_params(p, m, n, rng=rng)
        h = rng.normal(size=p)
        w_hat, beta, k = em.address(mem, params, h)

        # independent straight-line evaluation
        k_ref = params.W_k @ h + params.b_k
        beta_ref = math.log1p(math.exp(float((params.W_beta @ h + params.b_beta)[0])))
        sims = []
        for c in range(n):
            col = mem.M[:, c]
            sims.append(float(k_ref @ col) /
                        (np.linalg.norm(k_ref) * np.linalg.norm(col) + EPS_COS))
        exps = [math.exp(beta_ref * s) for s in sims]
        ref = np.array(exps) / sum(exps)
        assert np.allclose(k, k_ref, rtol=1e-12)
        assert beta == pytest.approx(beta_ref, rel=1e-12)
        assert np.allclose(w_hat, ref, rtol=1e-12, atol=1e-14)

    def test_beta_positive_for_any_input(self):
        assert np.all(softplus(np.array([-1e6, -30.0, 0.0, 30.0, 1e6])) > 0)


class TestInterpolate:
    def test_g_zero_keeps_previous(self):
        wp = np.array([0.2, 0.8])
        assert np.array_equal(em.interpolate_weight(wp, np.array([1.0, 0.0]), 0.0), wp)

    def test_g_one_takes_new(self):
        wh = np.array([1.0, 0.0])
        assert np.array_equal(em.interpolate_weight(np.array([0.2, 0.8]), wh, 1.0), wh)

    def test_convex_combination(self):
        out = em.interpolate_weight(np.array([1.0, 0.0]), np.array([0.0, 1.0]), 0.3)
        assert np.allclose(out, [0.7, 0.3])

    def test_gate_out_of_range(self):
        with pytest.raises(ValueError):
            em.interpolate_weight(np.array([1.0]), np.array([1.0]), 1.5)


class TestRead:
    def test_single_slot(self):
        M = np.array([[1.0], [2.0], [3.0]])
        mem = em.ExternalMemory(3, 1, M=M, w_prev=np.array([1.0]))
        assert np.array_equal(em.read(mem), M[:, 0])

    def test_one_hot_selects_column(self):
        rng = np.random.default_rng(3)
        M = rng.normal(size=(4, 5))
        w = np.zeros(5)
        w[2] = 1.0
        mem = em.ExternalMemory(4, 5, M=M, w_prev=w)
        assert np.array_equal(em.read(mem), M[:, 2])

    def test_matches_scalar_loop(self):
        rng = np.random.default_rng(4)
        M = rng.normal(size=(3, 4))
        w = np.abs(rng.normal(size=4))
        w /= w.sum()
        mem = em.ExternalMemory(3, 4, M=M, w_prev=w)
        ref = np.array([sum(M[i, j] * w[j] for j in range(4)) for i in range(3)])
        assert np.allclose(em.read(mem), ref, rtol=1e-12)


class TestWrite:
    def test_open_forget_gate_is_additive(self):
        # e ~ 0 (large negative erase bias) -> f ~ 1 -> purely additive write
        rng = np.random.default_rng(5)
        p, m, n = 4, 3, 4
        params = make_params(p, m, n, rng=rng)
        params.W_he[:] = 0.0
        params.b_he[:] = -50.0
        M0 = rng.normal(size=(m, n))
        mem = em.ExternalMemory(m, n, M=M0.copy())
        h = rng.normal(size=p)
        w = np.full(n, 0.25)
        v = params.W_v @ h + params.b_v
        out = em.write(mem, params, h, w)
        assert np.allclose(out.M, M0 + np.outer(v, w), atol=1e-12)

    def test_one_hot_full_erase_replaces_slot(self):
        rng = np.random.default_rng(6)
        p, m, n = 4, 3, 4
        params = make_params(p, m, n, rng=rng)
        params.W_he[:] = 0.0
        params.b_he[:] = 50.0  # e ~ 1
        M0 = rng.normal(size=(m, n))
        mem = em.ExternalMemory(m, n, M=M0.copy())
        h = rng.normal(size=p)
        w = np.zeros(n)
        w[1] = 1.0
        v = params.W_v @ h + params.b_v
        out = em.write(mem, params, h, w)
        assert np.allclose(out.M[:, 1], v, atol=1e-12)
        for c in (0, 2, 3):
            assert np.array_equal(out.M[:, c], M0[:, c])

    def test_single_slot_scalar_recurrence(self):
        rng = np.random.default_rng(7)
        p, m, n = 3, 2, 1
        params = make_params(p, m, n, rng=rng)
        M0 = rng.normal(size=(m, 1))
        mem = em.ExternalMemory(m, 1, M=M0.copy())
        h = rng.normal(size=p)
        w = np.array([1.0])  # forced at n=1
        e = sigmoid(params.W_he @ h + params.b_he)[0]
        v = params.W_v @ h + params.b_v
        out = em.write(mem, params, h, w)
        assert np.allclose(out.M[:, 0], (1 - e) * M0[:, 0] + v, rtol=1e-12)

    def test_write_locality_bit_identical(self):
        rng = np.random.default_rng(8)
        p, m, n = 4, 3, 5
        params = make_params(p, m, n, rng=rng)
        M0 = rng.normal(size=(m, n))
        mem = em.ExternalMemory(m, n, M=M0.copy())
        w = np.array([0.5, 0.5, 0.0, 0.0, 0.0])
        out = em.write(mem, params, rng.normal(size=p), w)
        for c in (2, 3, 4):
            assert np.array_equal(out.M[:, c], M0[:, c])

    def test_input_memory_unchanged(self):
        rng = np.random.default_rng(9)
        params = make_params(3, 2, 2, rng=rng)
        mem = em.ExternalMemory(2, 2)
        before = mem.M.copy()
        em.write(mem, params, rng.normal(size=3), np.array([0.5, 0.5]))
        assert np.array_equal(mem.M, before)


class TestReset:
    def test_reset_then_read_gives_constant(self):
        mem = em.ExternalMemory(3, 4, M=np.random.default_rng(0).normal(size=(3, 4)),
                                w_prev=np.array([0.1, 0.2, 0.3, 0.4]))
        fresh = em.reset(mem)
        assert np.allclose(em.read(fresh), fresh.init_value)

    def test_idempotent(self):
        mem = em.ExternalMemory(2, 3)
        once = em.reset(mem)
        twice = em.reset(once)
        assert np.array_equal(once.M, twice.M)
        assert np.array_equal(once.w_prev, twice.w_prev)

    def test_address_after_reset_uniform(self):
        mem = em.reset(em.ExternalMemory(3, 4))
        params = make_params(5, 3, 4)
        w_hat, _, _ = em.address(mem, params, np.ones(5))
        assert np.allclose(w_hat, 0.25)


class TestSimplexPreservation:
    def test_random_address_interpolate_write_chain(self):
        rng = np.random.default_rng(10)
        p, m, n = 4, 3, 5
        params = make_params(p, m, n, rng=rng)
        mem = em.ExternalMemory(m, n)
        for _ in range(50):
            h = rng.normal(size=p)
            w_hat, _, _ = em.address(mem, params, h)
            g = float(sigmoid(params.W_g @ h + params.b_g)[0])
            w = em.interpolate_weight(mem.w_prev, w_hat, g)
            mem = em.write(mem, params, h, w)
            assert np.all(mem.w_prev >= 0)
            assert abs(mem.w_prev.sum() - 1.0) < 1e-9

    def test_forget_gate_range(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            w = rng.dirichlet(np.ones(6))
            e = rng.random(6)
            f = 1.0 - w * e
            assert np.all(f > 0)
            assert np.all(f <= 1)
