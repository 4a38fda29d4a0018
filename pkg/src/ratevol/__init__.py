"""Fourier pricing of European options when asset volatility depends on the short rate.

The short rate is driven by a CIR or a Jacobi diffusion ``Y``; the asset's
volatility ``c(Y)`` falls as the rate rises. Prices come from a contour
integral of explicit transforms, cross-checked by Euler Monte Carlo.
"""
from .chf import GArgs, bond_price, g_cir, g_function, g_jacobi
from .errors import (
    ArbitrageBoundsError,
    BranchError,
    BranchWarning,
    ConvergenceError,
    DomainError,
    HeavyTailWarning,
    ImaginaryResidueError,
    PoleError,
    RatevolError,
    StripError,
    ValidationError,
)
from .mc import McConfig, mc_chf, mc_price, simulate, simulate_t_forward_cir
from .models import CirParams, JacobiParams, MarketState, reference_params
from .pricing import ContourConfig, moment_strip, price_call, price_european, price_put
from .vol import SmileRequest, bs_call_forward, implied_vol, smile

__version__ = "0.1.0"

__all__ = [
    "ArbitrageBoundsError", "BranchError", "BranchWarning", "CirParams", "ContourConfig",
    "ConvergenceError", "DomainError", "GArgs", "HeavyTailWarning", "ImaginaryResidueError",
    "JacobiParams", "MarketState", "McConfig", "PoleError", "RatevolError", "SmileRequest",
    "StripError", "ValidationError", "bond_price", "bs_call_forward", "reference_params", "g_cir",
    "g_function", "g_jacobi", "implied_vol", "mc_chf", "mc_price", "moment_strip", "price_call",
    "price_european", "price_put", "simulate", "simulate_t_forward_cir", "smile",
]
