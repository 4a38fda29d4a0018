"""Black-Scholes forward pricing, implied volatility and smile generation."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .chf import bond_price
from .errors import ArbitrageBoundsError, ConvergenceError, RatevolError, ValidationError
from .models import MarketState, Model, check_state
from .pricing import ContourConfig, price_call

__all__ = [
    "norm_cdf",
    "bs_call_forward",
    "implied_vol",
    "SmileRequest",
    "SmilePoint",
    "SmileResult",
    "smile",
    "atm_slope",
    "SIGMA_MIN",
    "SIGMA_MAX",
]

SIGMA_MIN = 1e-6
SIGMA_MAX = 5.0
PRICE_TOL = 1e-10  # relative to F


def norm_cdf(x: float) -> float:
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def bs_call_forward(F: float, K: float, tau: float, sigma: float) -> float:
    """Undiscounted Black-Scholes call ``F N(d+) - K N(d-)``; intrinsic value at ``sigma = 0``."""
    if not (F > 0 and K > 0 and tau > 0 and sigma >= 0):
        raise ValidationError(f"need F, K, tau > 0 and sigma >= 0, got F={F}, K={K}, tau={tau}, sigma={sigma}")
    if sigma == 0:
        return max(F - K, 0.0)
    sd = sigma * math.sqrt(tau)
    d1 = math.log(F / K) / sd + 0.5 * sd
    return F * norm_cdf(d1) - K * norm_cdf(d1 - sd)


def implied_vol(forward_price: float, F: float, K: float, tau: float) -> float:
    """Black volatility reproducing ``forward_price`` on ``[SIGMA_MIN, SIGMA_MAX]``.

    Brent's method on a monotone bracket; the answer is accepted only if it
    reprices to within ``1e-10 F``.
    """
    if not (F > 0 and K > 0 and tau > 0):
        raise ValidationError(f"need F, K, tau > 0, got F={F}, K={K}, tau={tau}")
    intrinsic = max(F - K, 0.0)
    if not intrinsic < forward_price < F:
        raise ArbitrageBoundsError(
            f"forward price {forward_price!r} outside the open interval ({intrinsic!r}, {F!r})"
        )

    def excess(s):
        return bs_call_forward(F, K, tau, s) - forward_price

    lo, hi = excess(SIGMA_MIN), excess(SIGMA_MAX)
    if lo > 0 or hi < 0:
        raise ConvergenceError(f"implied vol not bracketed by [{SIGMA_MIN}, {SIGMA_MAX}]")
    if lo == 0:
        return SIGMA_MIN
    sigma = brentq(excess, SIGMA_MIN, SIGMA_MAX, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=100)
    if abs(excess(sigma)) > PRICE_TOL * F:
        raise ConvergenceError(f"implied vol reprices with error {abs(excess(sigma)):.3e}")
    return sigma


@dataclass(frozen=True)
class SmileRequest:
    model: Model
    state: MarketState
    T: float
    L_grid: tuple
    contour: ContourConfig = field(default_factory=ContourConfig)

    def __post_init__(self):
        grid = tuple(float(v) for v in self.L_grid)
        object.__setattr__(self, "L_grid", grid)
        if not self.T > self.state.t:
            raise ValidationError(f"smile requires T > t, got t={self.state.t}, T={self.T}")
        if not grid:
            raise ValidationError("empty log-moneyness grid")
        if not all(math.isfinite(v) for v in grid):
            raise ValidationError("log-moneyness grid must be finite")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValidationError("log-moneyness grid must be strictly increasing")
        check_state(self.model, self.state.y)


@dataclass(frozen=True)
class SmilePoint:
    L: float
    K: float
    price: float  # spot call price
    forward_price: float  # price / bond
    implied_vol: float  # nan unless status == "ok"
    status: str


@dataclass(frozen=True)
class SmileResult:
    points: tuple
    bond: float
    forward: float
    T: float

    @property
    def L(self) -> np.ndarray:
        return np.array([p.L for p in self.points])

    @property
    def implied_vols(self) -> np.ndarray:
        return np.array([p.implied_vol for p in self.points])

    @property
    def n_failed(self) -> int:
        return sum(p.status != "ok" for p in self.points)


def smile(request: SmileRequest) -> SmileResult:
    """Implied volatility across log-moneyness ``L = log(K / F)``.

    Failures at single grid points are reported in the point's ``status``;
    only a failing bond price aborts the whole smile.
    """
    st = request.state
    B = bond_price(request.model, st.t, st.y, request.T)
    F = st.spot / B
    tau = request.T - st.t
    points = []
    for L in request.L_grid:
        K = math.exp(L) * F
        price = fwd = sigma = math.nan
        try:
            price = price_call(request.model, st, request.T, K, request.contour)
            fwd = price / B
            sigma = implied_vol(fwd, F, K, tau)
            status = "ok"
        except RatevolError as exc:
            status = type(exc).__name__
        points.append(SmilePoint(L=L, K=K, price=price, forward_price=fwd, implied_vol=sigma, status=status))
    return SmileResult(points=tuple(points), bond=B, forward=F, T=request.T)


def atm_slope(model: Model, state: MarketState, T: float, h: float = 0.01,
              contour: ContourConfig = ContourConfig()) -> float:
    """Central difference ``d sigma / d L`` at ``L = 0``."""
    res = smile(SmileRequest(model, state, T, (-h, h), contour))
    if res.n_failed:
        raise ConvergenceError("implied vol failed next to the money")
    s = res.implied_vols
    return (s[1] - s[0]) / (2.0 * h)
