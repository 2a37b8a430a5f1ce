"""Energy detection on the post-cancellation residual.

After the secondary streams are decoded and cancelled, the receiver holds
L residual samples r(l) = sum_{active i} sqrt(beta_i) c_{p,i} s_i(l) + w'(l)
and tests T = sum_l ||r(l)||^2 against a threshold.

Variance convention (differs from the channel/SINR path; both are
documented): the sensing-path noise has variance ``noise_eff`` per REAL
dimension, i.e. 2*(N0 + sigma_eps^2) per complex sample, and a primary
symbol carries sigma_p^2 per real dimension (per-sample energy
2 sigma_p^2).  Under this convention the idle-spectrum statistic satisfies
T ~ Gamma(N L, scale 2 N0_eff), matching the threshold design
pf = Q(N L, lambda / (2 N0)) exactly, and a fixed-energy signal makes
T / N0_eff a noncentral chi-square with 2 N L degrees of freedom and
noncentrality 2 L sigma_p^2 Y / N0_eff -- the Marcum-Q detection law.

Two symbol models are provided.  ``gaussian`` draws s(l) ~ CN(0, 2 sigma_p^2)
(window energy is then itself random, and the Marcum-Q law holds only on
average over it); ``constant_envelope`` fixes |s(l)|^2 = 2 sigma_p^2 with
uniform random phases, for which the Marcum-Q law is exact and which the
closed-form validation experiments therefore use.

The channel columns are held fixed across the L samples of one sensing
window and redrawn across windows.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .channel import LinkBudget, SystemConfig

__all__ = [
    "ResidualSignal",
    "residual_signal",
    "energy_statistic",
    "ed_decide",
    "draw_primary_symbols",
]

H0 = "H0"
H1 = "H1"


@dataclass(frozen=True)
class ResidualSignal:
    """Residual samples (N x L) and the noise variance used to build them."""

    r: np.ndarray
    noise_var_used: float

    def __post_init__(self):
        if self.r.ndim != 2:
            raise ValueError("residual must be an N x L matrix")
        if self.noise_var_used < 0:
            raise ValueError("noise variance must be nonnegative")


def draw_primary_symbols(
    rng: np.random.Generator,
    shape: tuple,
    sigma_p2: float,
    model: str = "gaussian",
) -> np.ndarray:
    """Primary symbols with per-sample energy 2 sigma_p^2 (on average or exactly)."""
    if model == "gaussian":
        sd = np.sqrt(sigma_p2)
        return sd * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
    if model == "constant_envelope":
        amp = np.sqrt(2.0 * sigma_p2)
        return amp * np.exp(2j * np.pi * rng.random(shape))
    raise ValueError(f"unknown symbol model {model!r}")


def residual_signal(
    config: SystemConfig,
    budgets: Sequence[LinkBudget],
    active_primary_set: Iterable[int],
    rng: np.random.Generator,
    signal_model: str = "gaussian",
) -> ResidualSignal:
    """One sensing window; empty active set gives the idle-spectrum case.

    ``active_primary_set`` holds 1-based primary indices.  The channel
    column of each active primary is drawn once per window.
    """
    active = sorted(set(int(i) for i in active_primary_set))
    if any(i < 1 or i > config.n_primary for i in active):
        raise ValueError(f"primary indices must be in 1..{config.n_primary}")
    N, L = config.n_antennas, config.n_samples
    n_eff = config.noise_eff_w
    # noise: noise_eff per real dimension
    sd = np.sqrt(n_eff)
    r = sd * (rng.standard_normal((N, L)) + 1j * rng.standard_normal((N, L)))
    for i in active:
        beta = budgets[i - 1].beta
        col = np.sqrt(0.5) * (
            rng.standard_normal(N) + 1j * rng.standard_normal(N)
        )  # unit-variance entries, fixed over the window
        s = draw_primary_symbols(rng, (L,), config.primary_signal_var_w, signal_model)
        r += np.sqrt(beta) * col[:, None] * s[None, :]
    return ResidualSignal(r=r, noise_var_used=n_eff)


def energy_statistic(residual: ResidualSignal | np.ndarray) -> float:
    """T = sum over samples and antennas of |r|^2."""
    r = residual.r if isinstance(residual, ResidualSignal) else residual
    return float(np.sum(np.abs(r) ** 2))


def ed_decide(T: float, lam: float) -> str:
    """Busy/idle decision: H1 iff T > lambda (ties decide H0)."""
    if lam < 0:
        raise ValueError("threshold must be nonnegative")
    return H1 if T > lam else H0
