"""Parameter sets and coefficient functions for the two short-rate drivers.

Both models share the structure

    R = r(Y),   dY = b(Y) dt + a(Y) dW,
    dX = (r(Y) - c(Y)^2 / 2) dt + c(Y) (rho dW + sqrt(1 - rho^2) dB),

with ``S = exp(X)``. Volatility ``c`` falls as the short rate rises.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import DomainError, ValidationError

__all__ = [
    "CirParams",
    "JacobiParams",
    "Model",
    "MarketState",
    "validate_cir",
    "validate_jacobi",
    "coefficients",
    "check_state",
    "reference_params",
]


def _finite(name, value):
    if not math.isfinite(value):
        raise ValidationError(f"{name} must be finite, got {value!r}")


@dataclass(frozen=True)
class CirParams:
    """CIR driver: r(y) = y, b = kappa (theta - y), a = delta sqrt(y), c = gamma / sqrt(y)."""

    kappa: float
    theta: float
    delta: float
    gamma: float
    rho: float

    name = "cir"

    def __post_init__(self):
        validate_cir(self)

    @property
    def rho_bar(self) -> float:
        return math.sqrt(1.0 - self.rho * self.rho)


@dataclass(frozen=True)
class JacobiParams:
    """Jacobi driver on (0, 1): r(y) = eta y / (1 - y), c = gamma sqrt((1 - y) / y)."""

    kappa: float
    theta: float
    delta: float
    gamma: float
    eta: float
    rho: float

    name = "jacobi"

    def __post_init__(self):
        validate_jacobi(self)

    @property
    def rho_bar(self) -> float:
        return math.sqrt(1.0 - self.rho * self.rho)


Model = Union[CirParams, JacobiParams]


def _check_common(p):
    for field in ("kappa", "theta", "delta", "gamma", "rho"):
        _finite(field, getattr(p, field))
    if p.delta <= 0:
        raise ValidationError(f"delta must be > 0, got {p.delta}")
    if p.gamma < 0:
        raise ValidationError(f"gamma must be >= 0, got {p.gamma}")
    if abs(p.rho) > 1:
        raise ValidationError(f"|rho| must be <= 1, got {p.rho}")


def validate_cir(p: CirParams) -> CirParams:
    """Check positivity and the strict Feller condition ``2 kappa theta > delta^2``."""
    _check_common(p)
    if p.kappa <= 0:
        raise ValidationError(f"kappa must be > 0, got {p.kappa}")
    if p.theta <= 0:
        raise ValidationError(f"theta must be > 0, got {p.theta}")
    if not 2.0 * p.kappa * p.theta > p.delta**2:
        raise ValidationError(
            f"Feller condition violated: 2*kappa*theta={2 * p.kappa * p.theta!r} "
            f"must exceed delta^2={p.delta**2!r}"
        )
    return p


def validate_jacobi(p: JacobiParams) -> JacobiParams:
    """Check the boundary non-attainment conditions of the Jacobi driver."""
    _check_common(p)
    _finite("eta", p.eta)
    if p.eta <= 0:
        raise ValidationError(f"eta must be > 0, got {p.eta}")
    half_d2 = 0.5 * p.delta**2
    if not p.kappa > half_d2:
        raise ValidationError(f"kappa={p.kappa!r} must exceed delta^2/2={half_d2!r} (boundary 0 attainable)")
    if not p.theta - p.kappa > half_d2:
        raise ValidationError(
            f"theta-kappa={p.theta - p.kappa!r} must exceed delta^2/2={half_d2!r} (boundary 1 attainable)"
        )
    return p


@dataclass(frozen=True)
class MarketState:
    """Time ``t``, log price ``x`` and driver level ``y``."""

    t: float
    x: float
    y: float

    @property
    def spot(self) -> float:
        return math.exp(self.x)

    @classmethod
    def from_spot(cls, t: float, spot: float, y: float) -> "MarketState":
        if spot <= 0:
            raise ValidationError(f"spot must be > 0, got {spot}")
        return cls(t=t, x=math.log(spot), y=y)


def check_state(model: Model, y) -> None:
    """Raise :class:`DomainError` when ``y`` is outside the open state space."""
    y = np.asarray(y, dtype=float)
    if isinstance(model, CirParams):
        if not np.all(y > 0):
            raise DomainError(f"CIR driver requires y > 0, got {y}")
    elif isinstance(model, JacobiParams):
        if not np.all((y > 0) & (y < 1)):
            raise DomainError(f"Jacobi driver requires 0 < y < 1, got {y}")
    else:
        raise TypeError(f"unknown model type {type(model).__name__}")


def coefficients(model: Model, y):
    """Return ``(r, b, a, c)`` evaluated at driver level ``y``."""
    check_state(model, y)
    y = np.asarray(y, dtype=float)
    if isinstance(model, CirParams):
        r = y
        b = model.kappa * (model.theta - y)
        a = model.delta * np.sqrt(y)
        c = model.gamma / np.sqrt(y)
    else:
        one_m = 1.0 - y
        r = model.eta * y / one_m
        b = model.kappa - model.theta * y
        a = model.delta * np.sqrt(y * one_m)
        c = model.gamma * np.sqrt(one_m / y)
    if y.ndim == 0:
        return float(r), float(b), float(a), float(c)
    return r, b, a, c


def reference_params(rho: float = 0.5) -> CirParams:
    """Reference CIR configuration: kappa=0.5, theta=0.05, delta=0.95 sqrt(2 kappa theta), gamma=0.2 sqrt(theta)."""
    kappa, theta = 0.5, 0.05
    return CirParams(
        kappa=kappa,
        theta=theta,
        delta=0.95 * math.sqrt(2.0 * kappa * theta),
        gamma=0.2 * math.sqrt(theta),
        rho=rho,
    )
