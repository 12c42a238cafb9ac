"""Closed-form pricing engines.

Three pieces: a shifted Black-Scholes kernel over a lognormal underlier with
an effective strike; sample-fit pricing, which fits a shifted lognormal to a
simulated terminal-price sample and prices through the kernel (positive skew
as a call on Z with K_eff = K - theta, negative skew as a put with
K_eff = theta - K); and the parametric lognormal, which matches the terminal
price in closed form by writing e^{-log P / scale} as a sum of two perfectly
correlated lognormals, so price and Greeks need no sample at all.

The parametric route assumes positively skewed terminal prices (low
curvature); results outside that regime carry a warning rather than an error.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .distfit import (
    ShiftedLognormalFit,
    TwoLognormalSpec,
    central_moments,
    fit_shifted_lognormal,
    lognormal_mean,
    match_two_lognormal_sum,
)
from .mc_engine import McConfig, simulate_terminal_prices
from .model import (
    ModelSpec,
    OptionContract,
    RateDynamics,
    price as model_price,
    terminal_rate_law,
)

_SQRT_TWO_PI = math.sqrt(2.0 * math.pi)

# fixed quadrature for the regime proxy: enough nodes to sign the third
# central moment of the smooth terminal-price curve
_PROXY_NODES, _PROXY_WEIGHTS = np.polynomial.hermite.hermgauss(21)


@dataclass(frozen=True)
class BsKernelInputs:
    """Lognormal forward mean M1, log-std W, effective strike, discount factor."""

    M1: float
    W: float
    K_eff: float
    df: float


@dataclass(frozen=True)
class TerminalLognormalLaw:
    """Matched lognormal law of the terminal price: LogN(mu_P, sigma_P^2)."""

    mu_P: float
    sigma_P: float


@dataclass(frozen=True)
class PriceResult:
    """Price with its method tag, MC error bars, and fit diagnostics."""

    price: float
    method: str
    std_error: float | None = None
    n: int | None = None
    diagnostics: object | None = None
    warning: str | None = None


def bs_call(inp: BsKernelInputs) -> float:
    """df (M1 N(d1) - K_eff N(d2)); certain exercise for K_eff <= 0 (Z > 0)."""
    if inp.K_eff <= 0.0:
        return inp.df * (inp.M1 - inp.K_eff)
    if inp.W <= 0.0:
        return inp.df * max(inp.M1 - inp.K_eff, 0.0)
    d1 = (math.log(inp.M1 / inp.K_eff) + 0.5 * inp.W * inp.W) / inp.W
    d2 = d1 - inp.W
    return inp.df * (inp.M1 * ndtr(d1) - inp.K_eff * ndtr(d2))


def bs_put(inp: BsKernelInputs) -> float:
    """df (K_eff N(-d2) - M1 N(-d1)); worthless for K_eff <= 0 (Z > 0)."""
    if inp.K_eff <= 0.0:
        return 0.0
    if inp.W <= 0.0:
        return inp.df * max(inp.K_eff - inp.M1, 0.0)
    d1 = (math.log(inp.M1 / inp.K_eff) + 0.5 * inp.W * inp.W) / inp.W
    d2 = d1 - inp.W
    return inp.df * (inp.K_eff * ndtr(-d2) - inp.M1 * ndtr(-d1))


def kernel_for_fit(fit: ShiftedLognormalFit, c: OptionContract) -> BsKernelInputs:
    """Kernel inputs for pricing a call on theta +- Z against strike K."""
    k_eff = c.K - fit.theta if fit.orientation > 0 else fit.theta - c.K
    return BsKernelInputs(
        M1=lognormal_mean(fit.log_params),
        W=fit.log_params.sigma_X,
        K_eff=k_eff,
        df=math.exp(-c.r_f * c.T),
    )


def price_from_fit(fit: ShiftedLognormalFit, c: OptionContract) -> float:
    """Call price under a fitted shifted-lognormal terminal law."""
    inp = kernel_for_fit(fit, c)
    return bs_call(inp) if fit.orientation > 0 else bs_put(inp)


def price_sln(
    spec: ModelSpec,
    dyn: RateDynamics,
    c: OptionContract,
    sample_cfg: McConfig,
    workers: int = 1,
) -> PriceResult:
    """Sample, fit a shifted lognormal, and price through the kernel.

    The sample is the caller's own (seeded) draw, independent of any MC
    reference run; the near-zero-skew fallback prices as a plain lognormal
    call (theta = 0).
    """
    prices = simulate_terminal_prices(spec, dyn, c.T, sample_cfg, workers)
    fit = fit_shifted_lognormal(central_moments(prices))
    return PriceResult(price=price_from_fit(fit, c), method="SLN", diagnostics=fit)


def ln_terminal_params(
    spec: ModelSpec, dyn: RateDynamics, T: float
) -> TerminalLognormalLaw:
    """Matched lognormal terminal law.

    P(r_T)^{-C/U} = e^{X1} + e^{X2} with X1 = (LC/U) r_T - (C/U) log k and
    X2 = C(L/U+1) r_T - C x0 - (C/U) log k; both are affine in the same normal
    r_T, hence perfectly correlated (cov = sigma1 sigma2). Matching the sum by
    one lognormal and raising to -U/C gives mu_P = -(U/C) mu_X + log k,
    sigma_P = (U/C) sigma_X.
    """
    p = spec.duration
    law = terminal_rate_law(spec.market, dyn, T)
    a1 = p.L * p.C / p.U
    a2 = p.C * (p.L / p.U + 1.0)
    v = law.std * law.std
    two = TwoLognormalSpec(
        mu1=a1 * law.mean,
        sigma1_sq=a1 * a1 * v,
        mu2=a2 * law.mean - p.C * p.x0,
        sigma2_sq=a2 * a2 * v,
        cov=a1 * a2 * v,
    )
    matched = match_two_lognormal_sum(two)
    return TerminalLognormalLaw(
        mu_P=-(p.U / p.C) * matched.mu_X + spec.log_k,
        sigma_P=(p.U / p.C) * matched.sigma_X,
    )


def _skew_sign_proxy(spec: ModelSpec, dyn: RateDynamics, T: float) -> float:
    # sign of the terminal-price third central moment by fixed quadrature
    law = terminal_rate_law(spec.market, dyn, T)
    r = law.mean + math.sqrt(2.0) * law.std * _PROXY_NODES
    w = _PROXY_WEIGHTS / math.sqrt(math.pi)
    p = model_price(spec, r)
    centered = p - float(np.sum(w * p))
    return float(np.sum(w * centered**3))


def _regime_warning(spec: ModelSpec, dyn: RateDynamics, T: float) -> str | None:
    if _skew_sign_proxy(spec, dyn, T) < 0.0:
        return (
            "parametric lognormal assumes positively skewed terminal prices; "
            "the terminal law at these parameters is negatively skewed "
            "(high curvature), so treat this value as out of regime"
        )
    return None


def price_ln(spec: ModelSpec, dyn: RateDynamics, c: OptionContract) -> PriceResult:
    """Closed-form call under the matched lognormal terminal law."""
    law = ln_terminal_params(spec, dyn, c.T)
    m1 = math.exp(law.mu_P + 0.5 * law.sigma_P * law.sigma_P)
    px = bs_call(BsKernelInputs(m1, law.sigma_P, c.K, math.exp(-c.r_f * c.T)))
    return PriceResult(
        price=px,
        method="LN",
        diagnostics=law,
        warning=_regime_warning(spec, dyn, c.T),
    )


def _ln_d1(law: TerminalLognormalLaw, m1: float, K: float) -> float:
    return (math.log(m1 / K) + 0.5 * law.sigma_P * law.sigma_P) / law.sigma_P


def delta_ln(spec: ModelSpec, dyn: RateDynamics, c: OptionContract) -> float:
    """Exact dC_LN/dP0 = df e^{mu_P + sigma_P^2/2} N(d1) / P0.

    Exact because mu_P depends on P0 only through log k (k is linear in P0)
    while mu_X and sigma_X do not depend on P0 at all.
    """
    law = ln_terminal_params(spec, dyn, c.T)
    m1 = math.exp(law.mu_P + 0.5 * law.sigma_P * law.sigma_P)
    df = math.exp(-c.r_f * c.T)
    if law.sigma_P == 0.0:
        return df * m1 / spec.market.P0 if m1 > c.K else 0.0
    return df * m1 * ndtr(_ln_d1(law, m1, c.K)) / spec.market.P0


def gamma_ln(spec: ModelSpec, dyn: RateDynamics, c: OptionContract) -> float:
    """Exact d2C_LN/dP0^2 = df e^{mu_P + sigma_P^2/2} phi(d1) / (P0^2 sigma_P)."""
    law = ln_terminal_params(spec, dyn, c.T)
    m1 = math.exp(law.mu_P + 0.5 * law.sigma_P * law.sigma_P)
    df = math.exp(-c.r_f * c.T)
    if law.sigma_P == 0.0:
        return 0.0
    d1 = _ln_d1(law, m1, c.K)
    phi = math.exp(-0.5 * d1 * d1) / _SQRT_TWO_PI
    return df * m1 * phi / (spec.market.P0**2 * law.sigma_P)
