"""Scenario description, per-link budgets, and joint channel sampling.

A scenario has M = m_p + m_c single-antenna transmitters (primaries first,
then secondaries) and one N-antenna receiver.  Each link i carries a
large-scale gain beta_i = p_i / d_i^omega_i.  Training-phase estimation
leaves an error share beta_hat_i = beta_i^2 / (sum_j beta_j + N0), and
first-order autoregressive aging with coefficient ``alpha`` splits the
estimated column into a useful part g_i ~ CN(0, (beta_i-beta_hat_i) alpha^2 I)
and a combined error part eps_i ~ CN(0, (alpha^2 beta_hat_i +
(1-alpha^2) beta_i) I); the two variances always add back to beta_i.

Complex Gaussian vectors here use variance v per complex entry (v/2 per real
component), so a column of H_hat has squared norm ~ Gamma(N, beta_i).  The
*sensing* sample path uses a different, documented convention (see
:mod:`cogsense.sensing`).

Config files are flat ``key = value`` text; see :func:`parse_config_text`
for the key list.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np

from .specfun import bessel_j0

__all__ = [
    "ConfigError",
    "SystemConfig",
    "LinkBudget",
    "ChannelRealization",
    "compute_beta",
    "compute_beta_hat",
    "aging_alpha",
    "link_budgets",
    "sample_channel",
    "substream",
    "parse_config_text",
    "load_config",
    "config_digest",
    "dbm_to_watts",
]


class ConfigError(ValueError):
    """Scenario description violates a documented invariant."""


def dbm_to_watts(p_dbm: float) -> float:
    """Convert dBm to watts (20 dBm = 0.1 W)."""
    return 10.0 ** ((p_dbm - 30.0) / 10.0)


@dataclass(frozen=True)
class SystemConfig:
    """Full scenario description.

    Transmitter-indexed tuples run over all M = n_primary + n_secondary
    nodes, primaries first.  ``qbar`` (optional) holds the dimensionless
    secondary-to-primary link gains used by the interference analysis:
    row j (one per primary) has m_c + 1 entries, the last one for the
    secondary receiver's probe transmission.
    """

    n_antennas: int
    n_secondary: int
    n_primary: int
    power_w: tuple
    distance_km: tuple
    pathloss_exp: tuple
    noise_w: float
    aging: float
    residual_var_w: float = 0.0
    primary_signal_var_w: float = 1.0
    n_samples: int = 10
    pf_target: float = 0.1
    activity_prob: float = 0.5
    outage_power_w: float = 0.01
    max_power_w: float = 0.1
    stream: int = 1
    qbar: tuple | None = None
    perfect_estimation: bool = False

    def __post_init__(self):
        N, mc, mp = self.n_antennas, self.n_secondary, self.n_primary
        if N < 1 or mc < 1 or mp < 1:
            raise ConfigError("n_antennas, n_secondary and n_primary must be >= 1")
        if N < mc:
            raise ConfigError(
                f"n_antennas must be >= n_secondary to separate the streams "
                f"(got N={N} < m_c={mc})"
            )
        M = mp + mc
        for name in ("power_w", "distance_km", "pathloss_exp"):
            vals = getattr(self, name)
            if len(vals) != M:
                raise ConfigError(f"{name} must have one entry per transmitter ({M})")
            if any(not v > 0 for v in vals):
                raise ConfigError(f"{name} entries must be strictly positive")
        if not self.noise_w > 0:
            raise ConfigError("noise_w must be strictly positive")
        if self.residual_var_w < 0:
            raise ConfigError("residual_var_w must be nonnegative")
        if not 0.0 <= self.aging <= 1.0:
            raise ConfigError(
                f"aging coefficient must lie in [0, 1], got {self.aging}; "
                "a Doppler-symbol product past the first Bessel zero is not "
                "supported"
            )
        if not self.primary_signal_var_w > 0:
            raise ConfigError("primary_signal_var_w must be strictly positive")
        if self.n_samples < 1:
            raise ConfigError("n_samples must be >= 1")
        for name in ("pf_target", "activity_prob"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1], got {v}")
        if not self.pf_target > 0:
            raise ConfigError("pf_target must be strictly positive")
        for name in ("outage_power_w", "max_power_w"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be strictly positive")
        if not 1 <= self.stream <= mc:
            raise ConfigError(f"stream must be in 1..{mc}, got {self.stream}")
        if self.qbar is not None:
            if len(self.qbar) != mp or any(len(r) != mc + 1 for r in self.qbar):
                raise ConfigError(
                    f"qbar must be {mp} rows of {mc + 1} gains (secondaries + receiver)"
                )
            if any(not g > 0 for r in self.qbar for g in r):
                raise ConfigError("qbar gains must be strictly positive")

    @property
    def n_transmitters(self) -> int:
        return self.n_primary + self.n_secondary

    @property
    def noise_eff_w(self) -> float:
        """Sensing-path noise variance including residual cancellation noise."""
        return self.noise_w + self.residual_var_w

    @property
    def stream_index(self) -> int:
        """Global (0-based) column index of the configured secondary stream."""
        return self.n_primary + self.stream - 1


@dataclass(frozen=True)
class LinkBudget:
    """Derived per-transmitter quantities."""

    beta: float
    beta_hat: float
    g_var: float
    eps_var: float

    def __post_init__(self):
        if not 0.0 < self.beta_hat < self.beta:
            raise ConfigError("beta_hat must satisfy 0 < beta_hat < beta")

    @property
    def b_r(self) -> float:
        """Scale of the squared useful-channel norm (equals g_var)."""
        return self.g_var

    @property
    def rho(self) -> float:
        """Useful share of the link variance, g_var / beta, in [0, 1]."""
        return self.g_var / self.beta


@dataclass(frozen=True)
class ChannelRealization:
    """One joint draw: useful part G, error part E, their sum H_hat."""

    G: np.ndarray
    E: np.ndarray
    H_hat: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if self.H_hat is None:
            object.__setattr__(self, "H_hat", self.G + self.E)

    def unit_columns(self, betas: Sequence[float]) -> np.ndarray:
        """H_hat rescaled to unit per-entry variance columns."""
        return self.H_hat / np.sqrt(np.asarray(betas))


def compute_beta(p: float, d: float, omega: float) -> float:
    """Large-scale link gain p / d^omega."""
    if not (p > 0 and d > 0 and omega > 0):
        raise ConfigError("power, distance and path-loss exponent must be positive")
    return p / d**omega


def compute_beta_hat(betas: Sequence[float], n0: float) -> list:
    """Estimation-error share beta_i^2 / (sum_j beta_j + N0) for each link."""
    total = float(sum(betas)) + n0
    return [b * b / total for b in betas]


def aging_alpha(fd_ts: float) -> float:
    """Aging coefficient from the Doppler-symbol product: J0(2 pi fD Ts)."""
    if fd_ts < 0:
        raise ConfigError("Doppler-symbol product must be nonnegative")
    return bessel_j0(2.0 * math.pi * fd_ts)


_PERFECT_ESTIMATION_SHARE = 1e-12


def link_budgets(config: SystemConfig) -> list:
    """Budgets for all M transmitters, primaries first.

    With ``perfect_estimation`` the pilot-phase error share is forced to a
    numerically negligible fraction of beta (the type requires it strictly
    positive), so together with aging = 1 the useful part carries the whole
    link variance.
    """
    betas = [
        compute_beta(p, d, w)
        for p, d, w in zip(config.power_w, config.distance_km, config.pathloss_exp)
    ]
    if config.perfect_estimation:
        hats = [b * _PERFECT_ESTIMATION_SHARE for b in betas]
    else:
        hats = compute_beta_hat(betas, config.noise_w)
    a2 = config.aging**2
    return [
        LinkBudget(
            beta=b,
            beta_hat=bh,
            g_var=(b - bh) * a2,
            eps_var=a2 * bh + (1.0 - a2) * b,
        )
        for b, bh in zip(betas, hats)
    ]


def substream(seed: int, *key: int) -> np.random.Generator:
    """Independent counter-based stream derived from a master seed.

    Streams are Philox generators keyed by ``SeedSequence([seed, *key])``;
    distinct key tuples give statistically independent streams and the
    derivation is stable across platforms and worker counts.
    """
    ss = np.random.SeedSequence([int(seed)] + [int(k) for k in key])
    return np.random.Generator(np.random.Philox(ss))


def sample_channel(
    config: SystemConfig,
    budgets: Sequence[LinkBudget],
    rng: np.random.Generator,
    size: int | None = None,
) -> ChannelRealization:
    """Draw G and E jointly; columns scale by each link's variance split.

    With ``size`` given, leading axis holds that many independent draws.
    Each complex entry of column i has variance ``g_var_i`` (respectively
    ``eps_var_i``), i.e. v/2 per real component.
    """
    N, M = config.n_antennas, config.n_transmitters
    shape = (N, M) if size is None else (size, N, M)
    g_sd = np.sqrt([b.g_var / 2.0 for b in budgets])
    e_sd = np.sqrt([b.eps_var / 2.0 for b in budgets])
    zg = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    ze = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    return ChannelRealization(G=zg * g_sd, E=ze * e_sd)


# ---------------------------------------------------------------------------
# config file handling

_CONFIG_KEYS = {
    "n_antennas",
    "n_secondary",
    "n_primary",
    "power_w",
    "power_dbm",
    "distance_km",
    "distance_base_km",
    "distance_step_km",
    "pathloss_exp",
    "noise_w",
    "snr_db",
    "residual_var_w",
    "alpha",
    "doppler_symbol_product",
    "primary_signal_var_w",
    "n_samples",
    "pf_target",
    "activity_prob",
    "outage_power_w",
    "outage_power_dbm",
    "max_power_w",
    "max_power_dbm",
    "stream",
    "perfect_estimation",
    "qbar",
    "qbar_base",
    "qbar_kind",
}


def _parse_value(text: str):
    text = text.strip()
    if text.startswith("[") and text.endswith("]"):
        inner = text[1:-1].strip()
        if not inner:
            return []
        return [_parse_value(t) for t in inner.split(",")]
    if text.lower() in ("true", "false"):
        return text.lower() == "true"
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text.strip("\"'")


def parse_config_text(text: str) -> dict:
    """Parse flat ``key = value`` lines ('#' comments, lists in brackets).

    Raises :class:`ConfigError` with a line number on malformed input or an
    unknown key.
    """
    out: dict = {}
    pending_key = None
    pending_buf = ""
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if pending_key is not None:
            pending_buf += " " + line
            if pending_buf.count("[") == pending_buf.count("]"):
                out[pending_key] = _parse_value(pending_buf)
                pending_key, pending_buf = None, ""
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, val = line.partition("=")
        key = key.strip()
        if key not in _CONFIG_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        val = val.strip()
        if val.count("[") != val.count("]"):
            pending_key, pending_buf = key, val
            continue
        out[key] = _parse_value(val)
    if pending_key is not None:
        raise ConfigError(f"unterminated list for key {pending_key!r}")
    return build_config(out)


def _broadcast(val, m: int, name: str) -> tuple:
    if isinstance(val, (int, float)):
        return (float(val),) * m
    if len(val) != m:
        raise ConfigError(f"{name} needs 1 or {m} entries, got {len(val)}")
    return tuple(float(v) for v in val)


def build_config(raw: Mapping) -> SystemConfig:
    """Resolve shorthand keys (dBm, SNR, distance rules) into a SystemConfig."""
    raw = dict(raw)
    try:
        mc = int(raw["n_secondary"])
        mp = int(raw["n_primary"])
        n = int(raw["n_antennas"])
    except KeyError as e:
        raise ConfigError(f"missing required key {e.args[0]!r}") from None
    m = mp + mc

    if "max_power_dbm" in raw:
        p_max = dbm_to_watts(float(raw.pop("max_power_dbm")))
    else:
        p_max = float(raw.get("max_power_w", 0.1))

    if "power_dbm" in raw:
        v = raw.pop("power_dbm")
        if isinstance(v, (int, float)):
            powers = (dbm_to_watts(float(v)),) * m
        else:
            powers = tuple(dbm_to_watts(float(x)) for x in v)
            if len(powers) != m:
                raise ConfigError(f"power_dbm needs 1 or {m} entries")
    elif "power_w" in raw:
        powers = _broadcast(raw.pop("power_w"), m, "power_w")
    else:
        powers = (p_max,) * m

    if "distance_km" in raw:
        dists = _broadcast(raw.pop("distance_km"), m, "distance_km")
    elif "distance_base_km" in raw:
        base = float(raw.pop("distance_base_km"))
        step = float(raw.pop("distance_step_km", 0.0))
        dists = tuple(base + step * (i + 1) for i in range(m))
    else:
        raise ConfigError("distance_km or distance_base_km is required")

    omegas = _broadcast(raw.pop("pathloss_exp", 4.0), m, "pathloss_exp")

    if "snr_db" in raw and "noise_w" in raw:
        raise ConfigError("give exactly one of snr_db and noise_w")
    if "snr_db" in raw:
        n0 = p_max / 10.0 ** (float(raw.pop("snr_db")) / 10.0)
    elif "noise_w" in raw:
        n0 = float(raw.pop("noise_w"))
    else:
        raise ConfigError("noise_w or snr_db is required")

    if "alpha" in raw and "doppler_symbol_product" in raw:
        raise ConfigError("give exactly one of alpha and doppler_symbol_product")
    if "alpha" in raw:
        alpha = float(raw.pop("alpha"))
    elif "doppler_symbol_product" in raw:
        alpha = aging_alpha(float(raw.pop("doppler_symbol_product")))
        if not 0.0 <= alpha <= 1.0:
            raise ConfigError(
                f"doppler_symbol_product maps to alpha={alpha:.4f} outside [0, 1]"
            )
    else:
        raise ConfigError("alpha or doppler_symbol_product is required")

    if "outage_power_dbm" in raw:
        w_th = dbm_to_watts(float(raw.pop("outage_power_dbm")))
    else:
        w_th = float(raw.get("outage_power_w", 0.01))

    qbar = None
    if "qbar" in raw:
        rows = raw.pop("qbar")
        qbar = tuple(tuple(float(g) for g in row) for row in rows)
        raw.pop("qbar_base", None)
        raw.pop("qbar_kind", None)
    elif "qbar_base" in raw:
        base = float(raw.pop("qbar_base"))
        kind = str(raw.pop("qbar_kind", "gain"))
        rows = []
        for j in range(1, mp + 1):
            row = []
            for i in range(1, mc + 2):
                v = base * (0.01 * i + 0.01 * j)
                if kind == "gain":
                    row.append(v)
                elif kind == "distance":
                    row.append(v ** (-omegas[0]))
                else:
                    raise ConfigError("qbar_kind must be 'gain' or 'distance'")
            rows.append(tuple(row))
        qbar = tuple(rows)

    return SystemConfig(
        n_antennas=n,
        n_secondary=mc,
        n_primary=mp,
        power_w=powers,
        distance_km=dists,
        pathloss_exp=omegas,
        noise_w=n0,
        aging=alpha,
        residual_var_w=float(raw.get("residual_var_w", 0.0)),
        primary_signal_var_w=float(raw.get("primary_signal_var_w", 1.0)),
        n_samples=int(raw.get("n_samples", 10)),
        pf_target=float(raw.get("pf_target", 0.1)),
        activity_prob=float(raw.get("activity_prob", 0.5)),
        outage_power_w=w_th,
        max_power_w=p_max,
        stream=int(raw.get("stream", 1)),
        qbar=qbar,
        perfect_estimation=bool(raw.get("perfect_estimation", False)),
    )


def load_config(path: str) -> SystemConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config_text(fh.read())


def config_digest(config: SystemConfig) -> str:
    """Stable 16-hex digest of the resolved scenario."""
    parts = []
    for name in sorted(config.__dataclass_fields__):
        parts.append(f"{name}={getattr(config, name)!r}")
    blob = "\n".join(parts).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()[:16]
