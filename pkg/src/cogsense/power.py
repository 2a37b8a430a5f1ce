"""Secondary transmit-power ceilings and primary-side interference risk.

Each potential secondary emitter (the receiver's probe plus every
transmitter) caps its power so that, across the worst of the m_p links
toward the primary nodes, the expected interference stays under the
primary outage power w_th.  The governing statistic is
Q = E[max_t ||g_t||^2] with ||g_t||^2 ~ Gamma(N, b_t); the soft
(harmonic) combination p = (1/p_max + Q/w_th)^{-1} is the default rule,
the hard minimum min(p_max, w_th/Q) is exposed alongside.

The aggregate interference simultaneously received by primary j is an
incoherent sum of m_c + 1 exponential powers with scales p_i * qbar_{j,i};
its tail has a partial-fraction closed form when the scales are pairwise
distinct and a phase-type (matrix-exponential) evaluation otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations, product as _iterproduct
from typing import Sequence

import numpy as np
from scipy import integrate
from scipy.linalg import expm

from .analytics import _gamma_tail_cutoff
from .channel import LinkBudget, SystemConfig, compute_beta_hat
from .specfun import upper_gamma_reg

__all__ = [
    "DegenerateScalesError",
    "PowerPlan",
    "q_max_expectation",
    "node_power",
    "interference_exceed_prob",
    "hypoexponential_tail",
    "secondary_link_scales",
    "power_plan",
]

_MAX_NODES = 16


class DegenerateScalesError(ValueError):
    """Two exponential scales coincide; the partial-fraction form is singular."""


@dataclass(frozen=True)
class PowerPlan:
    """Probe power, per-transmitter powers, and the Q statistics behind them."""

    p_r: float
    p_nodes: tuple
    q_r: float
    q_nodes: tuple

    def __post_init__(self):
        if not self.p_r > 0 or any(not p > 0 for p in self.p_nodes):
            raise ValueError("powers must be strictly positive")


def _max_gain_pdf(x: float, b: Sequence[float], n: int) -> float:
    """Density of max_t Gamma(N, b_t) via the differentiated product form."""
    if x <= 0:
        return 0.0
    total = 0.0
    for i, b_i in enumerate(b):
        lg = (n - 1) * math.log(x) - x / b_i - n * math.log(b_i) - math.lgamma(n)
        prod = 1.0
        for l, b_l in enumerate(b):
            if l != i:
                prod *= 1.0 - upper_gamma_reg(n, x / b_l)
        total += math.exp(lg) * prod
    return total


def q_max_expectation(
    b_values: Sequence[float], n_antennas: int, method: str = "quadrature"
) -> float:
    """E[max_t ||g_t||^2] over independent Gamma(N, b_t) squared norms.

    ``quadrature`` (authoritative) integrates x times the product-form
    density; ``closed-form`` evaluates the inclusion-exclusion expansion of
    the same expectation, exact and cheap for small m_p, and the tests pin
    the two to ~1e-10 relative.
    """
    b = [float(v) for v in b_values]
    if not b or any(not v > 0 for v in b):
        raise ValueError("all b values must be strictly positive")
    n = int(n_antennas)
    if method == "quadrature":
        # Pr[max > x] <= m * Q(N, x/b_max): same cutoff law as the minimum
        hi = 1.5 * _gamma_tail_cutoff(b, n, 1e-15)
        val, _ = integrate.quad(
            lambda x: x * _max_gain_pdf(x, b, n), 0.0, hi, limit=400
        )
        return val
    if method != "closed-form":
        raise ValueError(f"unknown method {method!r}")
    if len(b) > _MAX_NODES:
        raise ValueError(f"closed form limited to {_MAX_NODES} links")
    total = 0.0
    for i, b_i in enumerate(b):
        rest = [b[l] for l in range(len(b)) if l != i]
        for r in range(len(rest) + 1):
            for subset in combinations(range(len(rest)), r):
                scales = [rest[t] for t in subset]
                rate = 1.0 / b_i + sum(1.0 / v for v in scales)
                poly = np.array([1.0])
                for v in scales:
                    coeffs = np.array(
                        [
                            math.exp(-k * math.log(v) - math.lgamma(k + 1))
                            for k in range(n)
                        ]
                    )
                    poly = np.convolve(poly, coeffs)
                sign = -1.0 if r % 2 else 1.0
                for K, c in enumerate(poly):
                    if c == 0.0:
                        continue
                    total += sign * c * math.exp(
                        -n * math.log(b_i)
                        - math.lgamma(n)
                        + math.lgamma(n + K + 1)
                        - (n + K + 1) * math.log(rate)
                    )
    return total


def node_power(q: float, w_th: float, p_max: float, rule: str = "harmonic") -> float:
    """Transmit-power ceiling from the worst-link statistic Q.

    ``harmonic`` (default): (1/p_max + Q/w_th)^{-1}, the soft combination
    arising from the product of the two complementary constraints;
    ``hard-min``: min(p_max, w_th/Q).
    """
    if not (q >= 0 and w_th > 0 and p_max > 0):
        raise ValueError("inputs must be positive (q nonnegative)")
    if rule == "harmonic":
        return 1.0 / (1.0 / p_max + q / w_th)
    if rule == "hard-min":
        return min(p_max, w_th / q) if q > 0 else p_max
    raise ValueError(f"unknown rule {rule!r}")


def hypoexponential_tail(scales: Sequence[float], w: float) -> float:
    """Pr[sum of independent Exp(scale_i) > w] via the phase-type form.

    Handles coincident scales exactly (matrix exponential of the
    bidiagonal generator); used as the fallback when the partial-fraction
    evaluation is singular.
    """
    k = len(scales)
    rates = [1.0 / s for s in scales]
    Q = np.zeros((k, k))
    for i, r in enumerate(rates):
        Q[i, i] = -r
        if i + 1 < k:
            Q[i, i + 1] = r
    alpha = np.zeros(k)
    alpha[0] = 1.0
    return float(np.clip(alpha @ expm(Q * w) @ np.ones(k), 0.0, 1.0))


def interference_exceed_prob(
    powers: Sequence[float],
    gains: Sequence[float],
    w_th: float,
    degenerate_fallback: bool = False,
) -> float:
    """Probability the incoherent power sum at a primary node exceeds w_th.

    ``powers`` and ``gains`` pair up into the m_c + 1 exponential scales
    p_i * q_i.  Raises :class:`DegenerateScalesError` when two scales agree
    within 1e-9 relative, unless ``degenerate_fallback`` routes the call to
    the phase-type evaluation.
    """
    if w_th < 0:
        raise ValueError("w_th must be nonnegative")
    scales = [float(p) * float(g) for p, g in zip(powers, gains)]
    if len(scales) != len(powers) or len(powers) != len(gains):
        raise ValueError("powers and gains must pair up")
    if any(not s > 0 for s in scales):
        raise ValueError("scales must be strictly positive")
    if w_th == 0.0:
        return 1.0
    for a, b in combinations(scales, 2):
        if abs(a - b) <= 1e-9 * max(a, b):
            if degenerate_fallback:
                return hypoexponential_tail(scales, w_th)
            raise DegenerateScalesError(
                f"coincident exponential scales {a!r} and {b!r}; perturb the "
                "geometry or set degenerate_fallback=True"
            )
    total = 0.0
    for i, s_i in enumerate(scales):
        weight = 1.0
        for k, s_k in enumerate(scales):
            if k != i:
                weight *= s_i / (s_i - s_k)
        total += weight * math.exp(-w_th / s_i)
    return min(1.0, max(0.0, total))


def secondary_link_scales(config: SystemConfig) -> list:
    """Per-emitter b-vectors toward the primaries, from the qbar geometry.

    Entry j (1-based secondary transmitters, then the receiver) is the list
    over primaries t of (beta - beta_hat) alpha^2 for the link between
    emitter j and primary t, with beta = p_t * qbar_{t,j} (training pilots
    come from the primaries; channel reciprocity) and the estimation share
    computed from that emitter's own m_p pilot observations.
    """
    if config.qbar is None:
        raise ValueError("config.qbar is required for secondary link budgets")
    mp, mc = config.n_primary, config.n_secondary
    a2 = config.aging**2
    out = []
    for j in range(mc + 1):
        betas = [config.power_w[t] * config.qbar[t][j] for t in range(mp)]
        hats = compute_beta_hat(betas, config.noise_w)
        out.append([(b - h) * a2 for b, h in zip(betas, hats)])
    return out


def power_plan(
    config: SystemConfig,
    budgets: Sequence[LinkBudget],
    method: str = "quadrature",
    rule: str = "harmonic",
) -> PowerPlan:
    """Powers for the receiver probe and every secondary transmitter.

    The receiver's Q uses the primary-to-receiver budgets (N antennas);
    each transmitter's Q uses its own single-antenna links toward the
    primaries derived from the qbar geometry.
    """
    mp = config.n_primary
    b_r = [budgets[t].b_r for t in range(mp)]
    q_r = q_max_expectation(b_r, config.n_antennas, method)
    p_r = node_power(q_r, config.outage_power_w, config.max_power_w, rule)
    q_nodes = []
    p_nodes = []
    for b_vec in secondary_link_scales(config)[:-1]:
        q_j = q_max_expectation(b_vec, 1, method)
        q_nodes.append(q_j)
        p_nodes.append(node_power(q_j, config.outage_power_w, config.max_power_w, rule))
    return PowerPlan(p_r=p_r, p_nodes=tuple(p_nodes), q_r=q_r, q_nodes=tuple(q_nodes))
