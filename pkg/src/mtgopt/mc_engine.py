"""Seeded Monte Carlo reference pricer.

Reproducibility contract: the sample index space is split into fixed shards of
SHARD_SIZE; shard j draws from an independent Philox stream keyed by
(seed, j), uniforms come from raw 64-bit words via u = ((raw >> 11) + 0.5) *
2^-53 (strictly inside (0,1)), and normals are the inverse CDF of u. Workers
fill disjoint shard slices of one preallocated array, so every value is
bit-identical regardless of worker count or scheduling, and all reductions run
on the assembled array afterwards. Inverse-CDF sampling also preserves the
monotone rate/price coupling that common-random-number finite differences
rely on.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from .errors import ValidationError
from .model import MarketState, ModelSpec, OptionContract, RateDynamics
from .model import price as model_price
from .model import terminal_rate_law

SHARD_SIZE = 16384

_MASK64 = (1 << 64) - 1
# domain tag for the independent bumped leg when CRN is disabled
_NONCRN_LEG_TAG = 0xD17F


def mix64(*parts: int) -> int:
    """Deterministic 64-bit mix (splitmix64 finalizer folded over the parts).

    Used wherever a derived seed is needed (sweep cells, fit-vs-reference
    split, non-CRN legs); the builtin hash() is salted per process and cannot
    serve here.
    """
    h = 0x9E3779B97F4A7C15
    for p in parts:
        h = (h + (p & _MASK64)) & _MASK64
        h ^= h >> 30
        h = (h * 0xBF58476D1CE4E5B9) & _MASK64
        h ^= h >> 27
        h = (h * 0x94D049BB133111EB) & _MASK64
        h ^= h >> 31
    return h


@dataclass(frozen=True)
class McConfig:
    """Simulation size n, stream seed, and the absolute P0 bump for delta."""

    n: int = 70000
    seed: int = 0
    bump: float = 0.0001

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValidationError(f"sample count n must be >= 1, got {self.n}")
        if not self.bump > 0.0:
            raise ValidationError(f"bump must be > 0, got {self.bump}")


@dataclass(frozen=True)
class McResult:
    """Point estimate with its standard error and sample count."""

    price: float
    std_error: float
    n: int


def _standard_normals(seed: int, n: int, workers: int = 1) -> np.ndarray:
    out = np.empty(n, dtype=float)
    n_shards = (n + SHARD_SIZE - 1) // SHARD_SIZE

    def fill(j: int) -> None:
        lo = j * SHARD_SIZE
        hi = min(n, lo + SHARD_SIZE)
        key = np.array([seed & _MASK64, j], dtype=np.uint64)
        raw = np.random.Philox(key=key).random_raw(hi - lo)
        out[lo:hi] = ndtri(((raw >> np.uint64(11)) + 0.5) * 2.0**-53)

    if workers > 1 and n_shards > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(fill, range(n_shards)))
    else:
        for j in range(n_shards):
            fill(j)
    return out


def simulate_terminal_rates(
    m: MarketState, dyn: RateDynamics, T: float, cfg: McConfig, workers: int = 1
) -> np.ndarray:
    """n draws of r_T ~ N(r0 + mu T, sigma^2 T), fully determined by cfg.seed."""
    law = terminal_rate_law(m, dyn, T)
    return law.mean + law.std * _standard_normals(cfg.seed, cfg.n, workers)


def simulate_terminal_prices(
    spec: ModelSpec, dyn: RateDynamics, T: float, cfg: McConfig, workers: int = 1
) -> np.ndarray:
    """Terminal prices P(r_T) for the simulated rates."""
    rates = simulate_terminal_rates(spec.market, dyn, T, cfg, workers)
    return model_price(spec, rates)


def _discounted_call_mean(
    spec: ModelSpec, c: OptionContract, rates: np.ndarray
) -> float:
    payoff = np.maximum(model_price(spec, rates) - c.K, 0.0)
    return math.exp(-c.r_f * c.T) * float(np.mean(payoff))


def price_mc(
    spec: ModelSpec,
    dyn: RateDynamics,
    c: OptionContract,
    cfg: McConfig,
    workers: int = 1,
) -> McResult:
    """Discounted mean of (P(r_T) - K)+ with its standard error."""
    rates = simulate_terminal_rates(spec.market, dyn, c.T, cfg, workers)
    disc = math.exp(-c.r_f * c.T) * np.maximum(model_price(spec, rates) - c.K, 0.0)
    se = float(np.std(disc, ddof=1)) / math.sqrt(cfg.n) if cfg.n > 1 else 0.0
    return McResult(price=float(np.mean(disc)), std_error=se, n=cfg.n)


def delta_mc(
    spec: ModelSpec,
    dyn: RateDynamics,
    c: OptionContract,
    cfg: McConfig,
    workers: int = 1,
    central: bool = False,
    crn: bool = True,
) -> float:
    """Finite-difference delta: (C_MC(P0 + bump) - C_MC(P0)) / bump.

    Forward difference with an absolute bump on P0 and both legs on the same
    rate sample (CRN); the bumped model recalibrates its level k. central=True
    and crn=False are diagnostics only.
    """
    h = cfg.bump
    m = spec.market
    rates = simulate_terminal_rates(m, dyn, c.T, cfg, workers)
    if crn:
        rates_bumped = rates
    else:
        leg_cfg = McConfig(cfg.n, mix64(cfg.seed, _NONCRN_LEG_TAG), cfg.bump)
        rates_bumped = simulate_terminal_rates(m, dyn, c.T, leg_cfg, workers)

    def leg(p0: float, leg_rates: np.ndarray) -> float:
        bumped = ModelSpec.calibrate(spec.duration, MarketState(p0, m.r0))
        return _discounted_call_mean(bumped, c, leg_rates)

    if central:
        return (leg(m.P0 + h, rates_bumped) - leg(m.P0 - h, rates)) / (2.0 * h)
    return (leg(m.P0 + h, rates_bumped) - leg(m.P0, rates)) / h
