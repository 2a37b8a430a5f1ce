"""Closed forms vs quadrature references and Monte-Carlo oracles."""

import math
import warnings

import numpy as np
import pytest
from scipy import integrate, stats

from cogsense.analytics import (
    AnalyticsDiscrepancyWarning,
    auc_conditional,
    auc_unconditional,
    cdf_phi,
    cdf_sinr,
    min_gain_cdf,
    min_gain_pdf,
    min_gain_pdf_expanded,
    outage_probability,
    pd_conditional,
    pd_unconditional,
    pf,
    sinr_cap,
    threshold_for_target_pf,
)
from cogsense.channel import SystemConfig, link_budgets, substream
from cogsense.mmse import batch_stream_sinr
from cogsense.specfun import upper_gamma_reg


def fig6_config(N=4, M=3, alpha=0.1, perfect=False):
    mc, mp = M - 1, 1
    return SystemConfig(
        n_antennas=N,
        n_secondary=mc,
        n_primary=mp,
        power_w=(0.1,) * M,
        distance_km=tuple(0.8 + 0.05 * (i + 1) for i in range(M)),
        pathloss_exp=(4.0,) * M,
        noise_w=0.01,
        aging=1.0 if perfect else alpha,
        perfect_estimation=perfect,
    )


class TestCdfPhi:
    def test_zero(self):
        assert cdf_phi(0.0, [0.2, 0.3], 0, 4, 0.01) == 0.0

    def test_limit_one(self):
        assert cdf_phi(1e6 * 0.3 / 0.01, [0.2, 0.3], 1, 4, 0.01) > 1 - 1e-6

    def test_single_transmitter_is_gamma(self):
        # no interferers: Phi ~ Gamma(N, beta/N0)
        beta, n0, N = 0.25, 0.02, 3
        for y in (0.5, 3.0, 20.0):
            want = float(stats.gamma(N, scale=beta / n0).cdf(y))
            assert cdf_phi(y, [beta], 0, N, n0) == pytest.approx(want, abs=1e-12)

    def test_one_antenna_closed_form(self):
        # N=1: survival e^{-N0 y/b_i} / prod (1 + b_n y / b_i)
        betas, n0, i = [0.4, 0.9, 0.2], 0.05, 1
        for y in (0.1, 1.0, 5.0):
            surv = math.exp(-n0 * y / betas[i])
            for n, b in enumerate(betas):
                if n != i:
                    surv /= 1 + b * y / betas[i]
            assert cdf_phi(y, betas, i, 1, n0) == pytest.approx(1 - surv, rel=1e-12)

    def test_iid_equals_inid_at_equal_gains(self):
        for N, M in [(3, 3), (4, 3), (4, 4), (2, 5)]:
            betas_eq = [0.37] * M
            betas_jit = [0.37 * (1 + 1e-13 * k) for k in range(M)]
            for y in (0.2, 1.0, 4.0, 30.0):
                a = cdf_phi(y, betas_eq, 0, N, 0.01)
                b = cdf_phi(y, betas_jit, 0, N, 0.01)
                assert abs(a - b) < 1e-9

    def test_monotone_on_grid(self):
        betas = [0.19, 0.15, 0.12, 0.25]
        ys = np.linspace(0, 300, 200)
        vals = [cdf_phi(float(y), betas, 2, 4, 0.01) for y in ys]
        assert all(0 <= v <= 1 for v in vals)
        assert all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))

    def test_against_monte_carlo(self):
        # leave-one-out quadratic form of the simulated channel
        rng = substream(31, 0)
        N, M, n0 = 4, 3, 0.01
        betas = [0.19, 0.15, 0.12]
        i = 1
        n = 100_000
        C = (rng.standard_normal((n, N, M)) + 1j * rng.standard_normal((n, N, M))) / np.sqrt(2)
        keep = [j for j in range(M) if j != i]
        Ck = C[:, :, keep]
        bk = np.array([betas[j] for j in keep])
        A = np.einsum("tnm,m,tkm->tnk", Ck, bk, Ck.conj()) + n0 * np.eye(N)
        ci = C[:, :, i]
        x = np.linalg.solve(A, ci[..., None])[..., 0]
        phi = betas[i] * np.einsum("tn,tn->t", ci.conj(), x).real
        for q in (0.1, 0.3, 0.5, 0.8, 0.95):
            y = float(np.quantile(phi, q))
            ana = cdf_phi(y, betas, i, N, n0)
            se = math.sqrt(q * (1 - q) / n)
            assert abs(ana - q) < 4 * se


class TestCdfSinr:
    def test_zero_and_cap(self):
        betas = [0.2, 0.3, 0.25]
        rho = 0.01
        assert cdf_sinr(0.0, betas, 0, rho, 4, 0.01) == 0.0
        cap = sinr_cap(rho, "exact")
        assert cdf_sinr(cap * 1.0001, betas, 0, rho, 4, 0.01) == 1.0
        assert sinr_cap(rho, "approx") == pytest.approx(rho * rho)
        assert sinr_cap(1.0, "exact") == math.inf

    def test_matches_empirical_exact_sinr(self):
        for perfect in (False, True):
            cfg = fig6_config(N=3, M=3, perfect=perfect)
            budgets = link_budgets(cfg)
            betas = [b.beta for b in budgets]
            i = cfg.stream_index
            rho = budgets[i].rho
            n = 60_000
            rng = substream(32, int(perfect))
            C = (
                rng.standard_normal((n, 3, 3)) + 1j * rng.standard_normal((n, 3, 3))
            ) / np.sqrt(2)
            s = batch_stream_sinr(C, betas, rho, i, cfg.noise_w, form="exact")
            for q in (0.2, 0.5, 0.8):
                x = float(np.quantile(s, q))
                ana = cdf_sinr(x, betas, i, rho, 3, cfg.noise_w, form="exact")
                assert abs(ana - q) < 4 * math.sqrt(q * (1 - q) / n)

    def test_approx_form_matches_its_own_empirical(self):
        cfg = fig6_config(N=4, M=3)
        budgets = link_budgets(cfg)
        betas = [b.beta for b in budgets]
        i = cfg.stream_index
        rho = budgets[i].rho
        n = 60_000
        rng = substream(33, 0)
        C = (
            rng.standard_normal((n, 4, 3)) + 1j * rng.standard_normal((n, 4, 3))
        ) / np.sqrt(2)
        s = batch_stream_sinr(C, betas, rho, i, cfg.noise_w, form="approx")
        assert np.max(s) < rho * rho
        for q in (0.3, 0.7):
            x = float(np.quantile(s, q))
            ana = cdf_sinr(x, betas, i, rho, 4, cfg.noise_w, form="approx")
            assert abs(ana - q) < 4 * math.sqrt(q * (1 - q) / n)


class TestMinGain:
    def test_exponential_case(self):
        b = 0.8
        for x in (0.1, 0.5, 2.0):
            assert min_gain_cdf(x, [b], 1) == pytest.approx(1 - math.exp(-x / b))
            assert min_gain_pdf(x, [b], 1) == pytest.approx(math.exp(-x / b) / b)

    def test_normalization(self):
        betas, N = [1.0, 2.0], 2
        val, _ = integrate.quad(lambda x: min_gain_pdf(x, betas, N), 0, 80, limit=200)
        assert val == pytest.approx(1.0, abs=1e-8)

    def test_golden_product_form(self):
        # m_p=2, N=2, beta=(1,2) at x=1: direct finite-sum substitution
        want = 1 - upper_gamma_reg(2, 1.0) * upper_gamma_reg(2, 0.5)
        assert min_gain_cdf(1.0, [1.0, 2.0], 2) == pytest.approx(want, rel=1e-14)
        assert min_gain_cdf(1.0, [1.0, 2.0], 2) == pytest.approx(
            0.3306095195547105, rel=1e-12
        )

    def test_expanded_cross_check(self):
        for betas, N in [([0.5, 1.5], 3), ([0.3, 0.8, 1.1], 2), ([2.0], 4)]:
            for x in (0.2, 1.0, 3.5):
                a = min_gain_pdf(x, betas, N)
                b = min_gain_pdf_expanded(x, betas, N)
                assert b == pytest.approx(a, rel=1e-10)

    def test_derivative_of_cdf(self):
        betas, N = [0.6, 1.2, 0.9], 3
        for x in (0.5, 1.5):
            h = 1e-6
            num = (min_gain_cdf(x + h, betas, N) - min_gain_cdf(x - h, betas, N)) / (2 * h)
            assert min_gain_pdf(x, betas, N) == pytest.approx(num, rel=1e-6)


class TestFalseAlarm:
    def test_threshold_zero(self):
        assert pf(0.0, 2, 5, 1.0) == 1.0

    def test_single_sample_exponential(self):
        lam = 2 * math.log(100)
        assert pf(lam, 1, 1, 1.0) == pytest.approx(0.01, rel=1e-12)

    def test_golden_finite_sum(self):
        # NL=10, lambda=25, N0=1: e^{-12.5} sum_{k<10} 12.5^k/k!
        assert pf(25.0, 2, 5, 1.0) == pytest.approx(0.2014311049455358, rel=1e-12)

    def test_round_trip(self):
        for tau in (1e-4, 1e-3, 0.01, 0.1, 0.5):
            for nl in (1, 4, 17, 40):
                lam = threshold_for_target_pf(tau, nl, 1, 0.7)
                assert pf(lam, nl, 1, 0.7) == pytest.approx(tau, abs=1e-10)

    def test_tau_one_gives_zero(self):
        assert threshold_for_target_pf(1.0, 4, 10, 1.0) == 0.0


class TestDetection:
    def test_no_signal_collapses_to_pf(self):
        for lam in (0.5, 3.0, 20.0):
            assert pd_conditional(0.0, lam, 2, 5, 1.0, 1.0) == pytest.approx(
                pf(lam, 2, 5, 1.0), abs=1e-12
            )

    def test_lambda_zero(self):
        assert pd_conditional(1.0, 0.0, 2, 5, 1.0, 1.0) == 1.0
        assert pd_unconditional(0.0, [0.5], 2, 5, 1.0, 1.0) == 1.0

    def test_lambda_large(self):
        assert pd_unconditional(1e4, [0.5, 0.8], 2, 5, 1.0, 1.0) < 1e-9

    def test_closed_vs_quadrature(self):
        cases = [
            ([0.8, 1.3], 2, 5, 1.0, 1.0, 30.0),
            ([12.35, 12.35], 4, 5, 5.0, 1.0, 120.0),
            ([0.5, 0.9, 1.7], 3, 4, 2.0, 0.7, 55.0),
            ([2.0], 2, 10, 1.0, 1.0, 60.0),
        ]
        for betas, N, L, n0, sp2, lam in cases:
            fast = pd_unconditional(lam, betas, N, L, n0, sp2)
            ref = pd_unconditional(lam, betas, N, L, n0, sp2, method="quadrature")
            assert fast == pytest.approx(ref, abs=1e-9)

    def test_golden_conditional_quadrature(self):
        # N=2, L=5, y=1, lambda at the tau=0.1 design point, N0=1
        lam = threshold_for_target_pf(0.1, 2, 5, 1.0)
        got = pd_conditional(1.0, lam, 2, 5, 1.0, 1.0)
        assert got == pytest.approx(0.5343220185971056, abs=1e-9)

    def test_monte_carlo_agreement(self):
        # informative low-SNR point: closed form vs windowed simulation
        betas, N, L, n0, sp2 = [12.35, 12.35], 2, 5, 5.0, 1.0
        lam = threshold_for_target_pf(0.01, N, L, n0)
        fast = pd_unconditional(lam, betas, N, L, n0, sp2)
        n = 200_000
        rng = substream(34, 0)
        cols = (
            rng.standard_normal((n, N, 2)) + 1j * rng.standard_normal((n, N, 2))
        ) / np.sqrt(2)
        gains = np.array(betas) * np.sum(np.abs(cols) ** 2, axis=1)
        idx = np.argmin(gains, axis=1)
        y = gains[np.arange(n), idx]
        h = np.sqrt(betas[0]) * cols[np.arange(n), :, idx]  # betas equal here
        s = np.sqrt(2 * sp2) * np.exp(2j * np.pi * rng.random((n, L)))
        w = np.sqrt(n0) * (
            rng.standard_normal((n, N, L)) + 1j * rng.standard_normal((n, N, L))
        )
        r = h[:, :, None] * s[:, None, :] + w
        t = np.sum(np.abs(r) ** 2, axis=(1, 2))
        emp = float(np.mean(t > lam))
        se = math.sqrt(fast * (1 - fast) / n)
        assert abs(emp - fast) < 3.5 * se
        assert 0.2 < fast < 0.9  # genuinely informative operating point

    def test_pd_dominates_pf(self):
        betas, N, L, n0 = [0.9, 1.4], 2, 5, 1.0
        for lam in np.linspace(0.1, 80, 15):
            assert pd_unconditional(float(lam), betas, N, L, n0, 1.0) >= pf(
                float(lam), N, L, n0
            ) - 1e-12


class TestAuc:
    def test_chance_level_at_zero_gain(self):
        for nl in range(1, 21):
            assert auc_conditional(0.0, nl, 1, 1.0, 1.0) == pytest.approx(
                0.5, abs=1e-12
            )

    def test_perfect_at_large_gain(self):
        assert auc_conditional(1e4, 2, 5, 1.0, 1.0) > 1 - 1e-6

    def test_conditional_closed_vs_quadrature(self):
        for (N, L, y, n0, sp2) in [
            (4, 5, 0.5, 1.0, 1.0),
            (2, 3, 2.0, 0.7, 1.3),
            (3, 10, 0.1, 2.0, 1.0),
        ]:
            fast = auc_conditional(y, N, L, n0, sp2)
            ref = auc_conditional(y, N, L, n0, sp2, method="quadrature")
            assert fast == pytest.approx(ref, abs=1e-9)

    def test_golden_conditional(self):
        assert auc_conditional(0.5, 4, 5, 1.0, 1.0) == pytest.approx(
            0.6450655870613381, abs=1e-9
        )

    def test_unconditional_closed_vs_quadrature(self):
        cases = [
            ([0.8, 1.3], 2, 5, 1.0, 1.0),
            ([0.5, 0.5, 0.5], 4, 2, 1.0, 1.0),
            ([2.4], 4, 5, 0.6, 1.0),
            ([0.3, 0.7, 1.1, 1.9], 2, 3, 1.5, 0.8),
        ]
        for betas, N, L, n0, sp2 in cases:
            fast = auc_unconditional(betas, N, L, n0, sp2)
            ref = auc_unconditional(betas, N, L, n0, sp2, method="quadrature")
            assert fast == pytest.approx(ref, abs=1e-8)

    def test_published_variant_reported_not_silently_used(self):
        betas, N, L, n0, sp2 = [0.8, 1.3], 2, 5, 1.0, 1.0
        lit = auc_unconditional(betas, N, L, n0, sp2, method="paper-literal")
        ref = auc_unconditional(betas, N, L, n0, sp2, method="quadrature")
        assert abs(lit - ref) > 1e-3  # the printed reduction really deviates
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            val = auc_unconditional(betas, N, L, n0, sp2, check=True)
        assert val == pytest.approx(ref, abs=1e-8)

    def test_no_signal_power_is_chance(self):
        assert auc_unconditional([0.9, 1.1], 2, 5, 1.0, 1e-9) == pytest.approx(
            0.5, abs=1e-6
        )

    def test_many_samples_approach_one(self):
        vals = [
            auc_unconditional([0.9], 2, L, 1.0, 1.0) for L in (5, 20, 80, 200)
        ]
        assert all(b > a for a, b in zip(vals, vals[1:]))
        assert vals[-1] > 0.99


def fig7_config(tau=0.01):
    return SystemConfig(
        n_antennas=4,
        n_secondary=2,
        n_primary=2,
        power_w=(0.1,) * 4,
        distance_km=(0.8,) * 4,
        pathloss_exp=(4.0,) * 4,
        noise_w=0.1,
        aging=0.1,
        n_samples=5,
        pf_target=tau,
        activity_prob=0.5,
    )


class TestOutage:
    def test_zero_threshold(self):
        cfg = fig7_config()
        budgets = link_budgets(cfg)
        assert outage_probability(cfg, budgets, 0.0) == 0.0

    def test_collapses_without_primaries(self):
        # P_A = 0: only the idle branch survives
        cfg = SystemConfig(
            **{
                **{f: getattr(fig7_config(), f) for f in fig7_config().__dataclass_fields__},
                "activity_prob": 0.0,
            }
        )
        budgets = link_budgets(cfg)
        g = 2e-5
        lam = threshold_for_target_pf(cfg.pf_target, 4, 5, cfg.noise_eff_w)
        betas_sec = [budgets[i].beta for i in range(2, 4)]
        want = (1 - cfg.pf_target) * cdf_sinr(
            g, betas_sec, cfg.stream - 1 + 0, budgets[cfg.stream_index].rho, 4, cfg.noise_w
        )
        assert outage_probability(cfg, budgets, g, lam=lam) == pytest.approx(
            want, rel=1e-10
        )

    def test_nondecreasing_in_threshold(self):
        cfg = fig7_config()
        budgets = link_budgets(cfg)
        grid = np.geomspace(1e-6, 1e-3, 10)
        vals = [outage_probability(cfg, budgets, float(g)) for g in grid]
        assert all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))
        assert all(0 <= v <= 1 for v in vals)

    def test_nonincreasing_in_antennas(self):
        g = 5e-5
        vals = []
        for N in (4, 5, 6):
            cfg = SystemConfig(
                **{
                    **{f: getattr(fig7_config(), f) for f in fig7_config().__dataclass_fields__},
                    "n_antennas": N,
                }
            )
            budgets = link_budgets(cfg)
            vals.append(outage_probability(cfg, budgets, g))
        assert vals[0] > vals[1] > vals[2]

    def test_paper_literal_underweights(self):
        cfg = fig7_config()
        budgets = link_budgets(cfg)
        g = 5e-5
        exact = outage_probability(cfg, budgets, g, mode="subset-exact")
        literal = outage_probability(cfg, budgets, g, mode="paper-literal")
        assert literal < exact  # missing subset multiplicity at m_p = 2
