"""Shared builders for the default parameter set used across test modules."""
from mtgopt.model import (
    DurationParams,
    MarketState,
    ModelSpec,
    OptionContract,
    RateDynamics,
)

# default bundle: T=90/360, r_f=0.0209, K=100, P0=100, r0=0.01, mu=0,
# L=1, U=9, sigma=0.02, x0=0.055; curvature C is the sweep variable
DEFAULT_MARKET = MarketState(P0=100.0, r0=0.01)
DEFAULT_DYNAMICS = RateDynamics(mu=0.0, sigma=0.02)
DEFAULT_CONTRACT = OptionContract(K=100.0, T=90.0 / 360.0, r_f=0.0209)


def default_duration(C: float) -> DurationParams:
    return DurationParams(L=1.0, U=9.0, C=C, x0=0.055)


def default_spec(C: float) -> ModelSpec:
    return ModelSpec.calibrate(default_duration(C), DEFAULT_MARKET)
