"""MMSE weights, decision statistics, and the SINR identities."""

import numpy as np
import pytest

from cogsense.channel import (
    SystemConfig,
    link_budgets,
    sample_channel,
    substream,
)
from cogsense.mmse import (
    batch_stream_sinr,
    covariance_A,
    decode,
    leave_one_out_form,
    mmse_weights,
    sinr_per_stream,
)


def make_config(N=4, mc=2, mp=1, alpha=0.35, noise=0.01, d=None):
    M = mc + mp
    if d is None:
        d = tuple(0.8 + 0.05 * (i + 1) for i in range(M))
    return SystemConfig(
        n_antennas=N,
        n_secondary=mc,
        n_primary=mp,
        power_w=(0.1,) * M,
        distance_km=d,
        pathloss_exp=(4.0,) * M,
        noise_w=noise,
        aging=alpha,
    )


def perfect_csi_config(N=3, mc=2, mp=1, noise=0.05):
    cfg = make_config(N=N, mc=mc, mp=mp, alpha=1.0, noise=noise)
    return SystemConfig(
        **{**{f: getattr(cfg, f) for f in cfg.__dataclass_fields__},
           "perfect_estimation": True}
    )


class TestCovariance:
    def test_zero_channel(self):
        cfg = make_config()
        budgets = link_budgets(cfg)
        C = np.zeros((4, 3), dtype=complex)
        np.testing.assert_allclose(covariance_A(budgets, C, 0.7), 0.7 * np.eye(4))

    def test_hermitian(self):
        cfg = make_config()
        budgets = link_budgets(cfg)
        rng = substream(1, 0)
        C = (rng.standard_normal((4, 3)) + 1j * rng.standard_normal((4, 3))) / np.sqrt(2)
        A = covariance_A(budgets, C, cfg.noise_w)
        np.testing.assert_allclose(A, A.conj().T, atol=1e-15)
        assert np.all(np.linalg.eigvalsh(A) > 0)

    def test_hand_case_rank_one(self):
        cfg = make_config(N=2, mc=1, mp=1, d=(0.9, 0.9))
        budgets = link_budgets(cfg)
        rng = substream(2, 0)
        C = (rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))) / np.sqrt(2)
        A = covariance_A(budgets, C, cfg.noise_w)
        want = sum(
            budgets[j].beta * np.outer(C[:, j], C[:, j].conj()) for j in range(2)
        ) + cfg.noise_w * np.eye(2)
        np.testing.assert_allclose(A, want, atol=1e-14)


class TestWeights:
    def test_scalar_reduction(self):
        beta, n0 = 0.7, 0.3
        c = np.array([0.9 - 0.4j])
        A = np.array([[beta * abs(c[0]) ** 2 + n0]], dtype=complex)
        w = mmse_weights(A, c, beta)
        want = np.sqrt(beta) * c / (beta * abs(c[0]) ** 2 + n0)
        np.testing.assert_allclose(w, want, rtol=1e-14)

    def test_matches_dense_solve_oracle(self):
        cfg = make_config(N=4, mc=2, mp=1)
        budgets = link_budgets(cfg)
        rng = substream(3, 0)
        C = (rng.standard_normal((4, 3)) + 1j * rng.standard_normal((4, 3))) / np.sqrt(2)
        A = covariance_A(budgets, C, cfg.noise_w)
        i = 1
        w = mmse_weights(A, C[:, i], budgets[i].beta)
        oracle = np.sqrt(budgets[i].beta) * np.linalg.inv(A) @ C[:, i]
        np.testing.assert_allclose(w, oracle, rtol=1e-10)

    def test_mse_local_minimum(self):
        # empirical MSE at the weight is below every perturbed weight
        cfg = make_config(N=3, mc=2, mp=1, alpha=0.9)
        budgets = link_budgets(cfg)
        betas = np.array([b.beta for b in budgets])
        rng = substream(4, 0)
        C = (rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))) / np.sqrt(2)
        A = covariance_A(budgets, C, cfg.noise_w)
        i = 0  # first stream of the whole set
        c_i = C[:, i]
        w = mmse_weights(A, c_i, betas[i])

        def mse(wv):
            # E |s_i - w^H y|^2 with y = C diag(sqrt beta) s + n
            h = C * np.sqrt(betas)
            cross = (wv.conj() @ h[:, i]).real
            return float((1.0 + wv.conj() @ A @ wv).real - 2 * cross)

        base = mse(w)
        for k in range(100):
            d = rng.standard_normal(3) + 1j * rng.standard_normal(3)
            d *= 1e-3 / np.linalg.norm(d)
            assert mse(w + d) >= base - 1e-15


class TestSinr:
    def test_identity_with_leave_one_out(self):
        # exact and approximate figures equal their rational reductions
        for N, mc, mp in [(2, 2, 1), (4, 2, 2), (8, 4, 4)]:
            cfg = make_config(N=N, mc=mc, mp=mp)
            budgets = link_budgets(cfg)
            betas = [b.beta for b in budgets]
            for t in range(5):
                real = sample_channel(cfg, budgets, substream(10 + t, N, mc))
                C = real.unit_columns(betas)
                exact, approx = sinr_per_stream(cfg, budgets, real)
                for k in range(mc):
                    i = mp + k
                    phi = leave_one_out_form(C, betas, i, cfg.noise_w)
                    rho = budgets[i].rho
                    want_exact = rho**2 * phi / (1 + (1 - rho) * phi)
                    want_approx = rho**2 * phi / (1 + phi)
                    assert exact[k] == pytest.approx(want_exact, rel=1e-9)
                    assert approx[k] == pytest.approx(want_approx, rel=1e-9)

    def test_exact_approx_gap_bounded(self):
        # ratio lies in [1, 1/(1-rho)]; they coincide as rho -> 0
        cfg = make_config(alpha=0.1)
        budgets = link_budgets(cfg)
        rho = max(b.rho for b in budgets)
        for t in range(10):
            real = sample_channel(cfg, budgets, substream(77, t))
            exact, approx = sinr_per_stream(cfg, budgets, real)
            ratio = exact / approx
            assert np.all(ratio >= 1.0 - 1e-12)
            assert np.all(ratio <= 1.0 / (1.0 - rho) + 1e-12)

    def test_perfect_csi_recovers_classical_sinr(self):
        # rho -> 1: the exact figure equals the leave-one-out form itself
        cfg = perfect_csi_config(noise=0.05)
        budgets = link_budgets(cfg)
        betas = [b.beta for b in budgets]
        real = sample_channel(cfg, budgets, substream(12, 0))
        C = real.unit_columns(betas)
        exact, _ = sinr_per_stream(cfg, budgets, real)
        for k in range(cfg.n_secondary):
            i = cfg.n_primary + k
            phi = leave_one_out_form(C, betas, i, cfg.noise_w)
            assert exact[k] == pytest.approx(phi, rel=1e-6)

    def test_approx_strictly_below_cap(self):
        cfg = make_config(alpha=0.5)
        budgets = link_budgets(cfg)
        for t in range(20):
            real = sample_channel(cfg, budgets, substream(13, t))
            _, approx = sinr_per_stream(cfg, budgets, real)
            for k in range(cfg.n_secondary):
                assert approx[k] < budgets[cfg.n_primary + k].rho ** 2

    def test_batch_matches_scalar_path(self):
        cfg = make_config(N=4, mc=2, mp=2, alpha=0.4)
        budgets = link_budgets(cfg)
        betas = [b.beta for b in budgets]
        real = sample_channel(cfg, budgets, substream(14, 0), size=64)
        i = cfg.stream_index
        rho = budgets[i].rho
        C = real.H_hat / np.sqrt(betas)
        got = batch_stream_sinr(C, betas, rho, i, cfg.noise_w, form="exact")
        for t in range(0, 64, 7):
            single = sample_channel(cfg, budgets, substream(0, 0))
            # reuse the batched draw instead of a fresh one
            object.__setattr__(single, "G", real.G[t])
            object.__setattr__(single, "E", real.E[t])
            object.__setattr__(single, "H_hat", real.H_hat[t])
            exact, _ = sinr_per_stream(cfg, budgets, single)
            assert got[t] == pytest.approx(exact[cfg.stream - 1], rel=1e-9)


class TestDecode:
    def test_qpsk_statistics_shape(self):
        cfg = make_config(N=4, mc=2, mp=1)
        budgets = link_budgets(cfg)
        real = sample_channel(cfg, budgets, substream(15, 0))
        rng = substream(15, 1)
        qpsk = (rng.integers(0, 2, 3) * 2 - 1 + 1j * (rng.integers(0, 2, 3) * 2 - 1)) / np.sqrt(2)
        noise = np.sqrt(cfg.noise_w / 2) * (
            rng.standard_normal(4) + 1j * rng.standard_normal(4)
        )
        out = decode(cfg, budgets, real, qpsk, noise)
        assert out.z.shape == (2,)
        assert np.all(out.sinr_exact >= 0) and np.all(out.sinr_approx >= 0)
