"""Bundled experiment presets and the curve evaluators behind the CLI.

Every preset freezes a complete scenario: common constants omega = 4,
activity probability 0.5, aging alpha = 0.1, unit primary signal variance,
20 dBm power cap (all transmitters at the cap), plus per-preset geometry.
Noise floors were calibrated once so each curve sweeps an informative
range, and are frozen here.

    fig2  ROC, four primaries at distinct distances, (N, L) sweep
    fig3  ROC, identical close-in primaries, primary-count sweep
    fig4  ROC area vs SNR, identical distances
    fig5  detection probability vs SNR at a fixed false-alarm target
    fig6  per-stream SINR CDF, aged and near-perfect CSI variants
    fig7  outage probability vs the stream SINR threshold
    fig8  primary-side interference exceedance vs its power tolerance
          (fig8-distance reads the same shorthand as distances instead of
          gains; the gains reading is the one whose probabilities are
          negligible below unit base distance)

SNR means max-power-to-noise p_max / N0 throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .analytics import (
    AnalyticCurve,
    auc_unconditional,
    cdf_sinr,
    outage_probability,
    pd_unconditional,
    pf,
    threshold_for_target_pf,
)
from .channel import SystemConfig, config_digest, link_budgets
from .montecarlo import (
    ExperimentSpec,
    McEstimate,
    SimCurve,
    interference_geometry,
    interference_powers_at,
    run_experiment,
)
from .power import interference_exceed_prob

__all__ = [
    "CurveSpec",
    "PRESETS",
    "preset_curves",
    "analytic_curve",
    "simulate_curves",
    "ANALYTIC_METRICS",
]

ANALYTIC_METRICS = (
    "pf",
    "roc",
    "pd_vs_snr",
    "auc_vs_snr",
    "sinr_cdf",
    "outage",
    "interference",
)

_TAU_GRID = (0.01, 0.02, 0.05, 0.1, 0.15, 0.2, 0.3, 0.4, 0.5)


@dataclass(frozen=True)
class CurveSpec:
    """One labeled curve: scenario + metric + grid + simulation options."""

    label: str
    config: SystemConfig
    metric: str
    grid: tuple
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.metric not in ANALYTIC_METRICS:
            raise ValueError(f"metric must be one of {ANALYTIC_METRICS}")
        object.__setattr__(self, "grid", tuple(float(g) for g in self.grid))


def _base_config(**kw) -> SystemConfig:
    m = kw["n_primary"] + kw["n_secondary"]
    defaults = dict(
        power_w=(0.1,) * m,
        pathloss_exp=(4.0,) * m,
        aging=0.1,
        primary_signal_var_w=1.0,
        activity_prob=0.5,
        max_power_w=0.1,
    )
    defaults.update(kw)
    return SystemConfig(**defaults)


def _with(config: SystemConfig, **kw) -> SystemConfig:
    return replace(config, **kw)


def _snr_to_noise(config: SystemConfig, snr_db: float) -> SystemConfig:
    return _with(config, noise_w=config.max_power_w / 10.0 ** (snr_db / 10.0))


# ---------------------------------------------------------------------------
# preset definitions


def _fig2() -> list:
    out = []
    for n in (2, 3, 4):
        for L in (5, 10):
            cfg = _base_config(
                n_antennas=n,
                n_secondary=1,
                n_primary=4,
                distance_km=(0.31, 0.1, 0.15, 0.2, 0.5),
                noise_w=5.0,
                n_samples=L,
                pf_target=0.1,
            )
            out.append(CurveSpec(f"roc:N={n},L={L}", cfg, "roc", _TAU_GRID))
    return out


def _fig3() -> list:
    out = []
    for mp in (1, 2, 4):
        for L in (5, 10):
            cfg = _base_config(
                n_antennas=2,
                n_secondary=1,
                n_primary=mp,
                distance_km=(0.1,) * mp + (0.5,),
                noise_w=400.0,
                n_samples=L,
                pf_target=0.1,
            )
            out.append(CurveSpec(f"roc:mp={mp},L={L}", cfg, "roc", _TAU_GRID))
    return out


def _fig4() -> list:
    snr_grid = tuple(np.arange(-10.0, 10.5, 2.5))
    out = []
    for L in (5, 10):
        cfg = _base_config(
            n_antennas=4,
            n_secondary=2,
            n_primary=2,
            distance_km=(1.0,) * 4,
            noise_w=0.1,
            n_samples=L,
            pf_target=0.1,
        )
        out.append(CurveSpec(f"auc:L={L}", cfg, "auc_vs_snr", snr_grid))
    return out


def _fig5() -> list:
    snr_grid = tuple(np.arange(-25.0, 10.5, 2.5))
    out = []
    for n in (2, 4):
        cfg = _base_config(
            n_antennas=n,
            n_secondary=1,
            n_primary=2,
            distance_km=(0.3, 0.3, 0.5),
            noise_w=0.1,
            n_samples=5,
            pf_target=0.01,
        )
        out.append(CurveSpec(f"pd:N={n},L=5", cfg, "pd_vs_snr", snr_grid))
    return out


def _fig6_grid(cfg: SystemConfig, lo_q=0.02, hi_q=0.98, points=25) -> tuple:
    """Quantile-spanning threshold grid from the analytic CDF (bisection)."""
    budgets = link_budgets(cfg)
    betas = [b.beta for b in budgets]
    i = cfg.stream_index
    rho = budgets[i].rho

    def invert(q: float) -> float:
        lo, hi = 0.0, 1.0
        while cdf_sinr(hi, betas, i, rho, cfg.n_antennas, cfg.noise_w) < q:
            hi *= 2.0
            if hi > 1e12:
                break
        for _ in range(120):
            mid = 0.5 * (lo + hi)
            if cdf_sinr(mid, betas, i, rho, cfg.n_antennas, cfg.noise_w) < q:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)

    return tuple(invert(q) for q in np.linspace(lo_q, hi_q, points))


def _fig6() -> list:
    out = []
    for n, m in ((3, 3), (4, 3), (4, 4)):
        for perfect in (False, True):
            cfg = _base_config(
                n_antennas=n,
                n_secondary=m - 1,
                n_primary=1,
                distance_km=tuple(0.8 + 0.05 * (i + 1) for i in range(m)),
                noise_w=0.01,
                n_samples=5,
                pf_target=0.1,
            )
            if perfect:
                cfg = _with(cfg, aging=1.0, perfect_estimation=True)
            csi = "perfect" if perfect else "aged"
            out.append(
                CurveSpec(
                    f"sinr_cdf:{n}x{m},{csi}", cfg, "sinr_cdf", _fig6_grid(cfg)
                )
            )
    return out


def _fig7() -> list:
    grid = tuple(np.geomspace(1.2e-5, 1.2e-4, 14))
    out = []
    for tau in (0.01, 0.1):
        cfg = _base_config(
            n_antennas=4,
            n_secondary=2,
            n_primary=2,
            distance_km=(0.8,) * 4,
            noise_w=0.1,
            n_samples=5,
            pf_target=tau,
        )
        out.append(CurveSpec(f"outage:tau={tau}", cfg, "outage", grid))
    return out


def _fig8_config(d1: float, kind: str = "gain") -> SystemConfig:
    mc = mp = 4
    rows = []
    for j in range(1, mp + 1):
        row = []
        for i in range(1, mc + 2):
            v = d1 * (0.01 * i + 0.01 * j)
            row.append(v if kind == "gain" else v**-4.0)
        rows.append(tuple(row))
    return _base_config(
        n_antennas=4,
        n_secondary=mc,
        n_primary=mp,
        distance_km=(0.3,) * (mc + mp),
        noise_w=0.01,
        n_samples=5,
        pf_target=0.1,
        outage_power_w=0.01,
        qbar=tuple(rows),
    )


def _fig8(kind: str = "gain") -> list:
    grid = tuple(np.geomspace(1e-3, 0.1, 13))
    return [
        CurveSpec(
            f"interference:d1={d1}", _fig8_config(d1, kind), "interference", grid
        )
        for d1 in (0.5, 0.6, 0.8, 1.0, 1.2)
    ]


PRESETS = {
    "fig2": _fig2,
    "fig3": _fig3,
    "fig4": _fig4,
    "fig5": _fig5,
    "fig6": _fig6,
    "fig7": _fig7,
    "fig8": _fig8,
    "fig8-distance": lambda: _fig8("distance"),
}


def preset_curves(name: str) -> list:
    try:
        builder = PRESETS[name]
    except KeyError:
        raise ValueError(
            f"unknown preset {name!r}; available: {', '.join(sorted(PRESETS))}"
        ) from None
    return builder()


# ---------------------------------------------------------------------------
# curve evaluation


def analytic_curve(spec: CurveSpec) -> AnalyticCurve:
    """Evaluate the spec's metric closed form over its grid."""
    cfg = spec.config
    digest = config_digest(cfg)
    y = []
    if spec.metric == "pf":
        y = [pf(x, cfg.n_antennas, cfg.n_samples, cfg.noise_eff_w) for x in spec.grid]
    elif spec.metric == "roc":
        budgets = link_budgets(cfg)
        betas = [budgets[t].beta for t in range(cfg.n_primary)]
        for tau in spec.grid:
            lam = threshold_for_target_pf(
                tau, cfg.n_antennas, cfg.n_samples, cfg.noise_eff_w
            )
            y.append(
                pd_unconditional(
                    lam,
                    betas,
                    cfg.n_antennas,
                    cfg.n_samples,
                    cfg.noise_eff_w,
                    cfg.primary_signal_var_w,
                )
            )
    elif spec.metric == "pd_vs_snr":
        for snr in spec.grid:
            c = _snr_to_noise(cfg, snr)
            budgets = link_budgets(c)
            betas = [budgets[t].beta for t in range(c.n_primary)]
            lam = threshold_for_target_pf(
                c.pf_target, c.n_antennas, c.n_samples, c.noise_eff_w
            )
            y.append(
                pd_unconditional(
                    lam,
                    betas,
                    c.n_antennas,
                    c.n_samples,
                    c.noise_eff_w,
                    c.primary_signal_var_w,
                )
            )
    elif spec.metric == "auc_vs_snr":
        for snr in spec.grid:
            c = _snr_to_noise(cfg, snr)
            budgets = link_budgets(c)
            betas = [budgets[t].beta for t in range(c.n_primary)]
            y.append(
                auc_unconditional(
                    betas,
                    c.n_antennas,
                    c.n_samples,
                    c.noise_eff_w,
                    c.primary_signal_var_w,
                )
            )
    elif spec.metric == "sinr_cdf":
        budgets = link_budgets(cfg)
        betas = [b.beta for b in budgets]
        i = cfg.stream_index
        rho = budgets[i].rho
        form = spec.options.get("sinr_form", "exact")
        y = [
            cdf_sinr(x, betas, i, rho, cfg.n_antennas, cfg.noise_w, form)
            for x in spec.grid
        ]
    elif spec.metric == "outage":
        budgets = link_budgets(cfg)
        mode = spec.options.get("mode", "subset-exact")
        y = [outage_probability(cfg, budgets, x, mode=mode) for x in spec.grid]
    elif spec.metric == "interference":
        qs, gains, _ = interference_geometry(
            cfg, spec.options.get("primary_index")
        )
        for w in spec.grid:
            powers = interference_powers_at(cfg, qs, w)
            y.append(interference_exceed_prob(powers, gains, w))
    else:  # pragma: no cover - guarded by CurveSpec
        raise ValueError(spec.metric)
    return AnalyticCurve(
        x_grid=np.asarray(spec.grid),
        y=np.asarray(y),
        metric_name=spec.label,
        config_digest=digest,
    )


def _sim_label(spec: CurveSpec, suffix: str) -> str:
    return f"{spec.label}[{suffix}]"


def simulate_curves(spec: CurveSpec, n_trials: int, seed: int) -> list:
    """Monte-Carlo counterparts of the spec's curve (one or two SimCurves)."""
    cfg = spec.config
    opts = dict(
        h1_model=spec.options.get("h1_model", "weakest"),
        signal_model=spec.options.get("signal_model", "constant_envelope"),
        sinr_form=spec.options.get("sinr_form", "exact"),
    )
    if spec.metric in ("pf", "roc"):
        grid = spec.grid if spec.metric == "roc" else None
        if grid is None:
            # pf metric sweeps raw thresholds; map to their tail targets
            grid = tuple(
                pf(x, cfg.n_antennas, cfg.n_samples, cfg.noise_eff_w)
                for x in reversed(spec.grid)
            )
        ex = ExperimentSpec(
            config=cfg, metric="roc", grid=grid, n_trials=n_trials, seed=seed, **opts
        )
        pf_curve, pd_curve = run_experiment(ex)
        pf_curve = replace(pf_curve, metric=_sim_label(spec, "pf_mc"))
        pd_curve = replace(pd_curve, metric=_sim_label(spec, "pd_mc"))
        return [pf_curve, pd_curve]
    if spec.metric in ("pd_vs_snr", "auc_vs_snr"):
        values, errs = [], []
        for k, snr in enumerate(spec.grid):
            c = _snr_to_noise(cfg, snr)
            if spec.metric == "pd_vs_snr":
                ex = ExperimentSpec(
                    config=c,
                    metric="roc",
                    grid=(c.pf_target,),
                    n_trials=n_trials,
                    seed=seed + k,
                    **opts,
                )
                _, pd_curve = run_experiment(ex)
                values.append(pd_curve.values[0])
                errs.append(pd_curve.std_errs[0])
            else:
                ex = ExperimentSpec(
                    config=c,
                    metric="auc",
                    grid=(0.0,),
                    n_trials=n_trials,
                    seed=seed + k,
                    **opts,
                )
                est: McEstimate = run_experiment(ex)
                values.append(est.value)
                errs.append(est.std_err)
        return [
            SimCurve(
                x=spec.grid,
                values=tuple(values),
                std_errs=tuple(errs),
                n_trials=n_trials,
                seed=seed,
                metric=_sim_label(spec, "mc"),
                digest=config_digest(cfg),
            )
        ]
    if spec.metric in ("sinr_cdf", "outage", "interference"):
        ex = ExperimentSpec(
            config=cfg,
            metric=spec.metric,
            grid=spec.grid,
            n_trials=n_trials,
            seed=seed,
            primary_index=spec.options.get("primary_index"),
            **opts,
        )
        curve = run_experiment(ex)
        return [replace(curve, metric=_sim_label(spec, "mc"))]
    raise ValueError(f"metric {spec.metric!r} has no simulation counterpart")
