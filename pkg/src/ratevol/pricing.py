"""Fourier pricing of European claims along a horizontal contour.

A claim paying ``phi(X_T)`` is priced as

    V = (1/pi) int_0^inf Re[ phi_hat(omega) e^{i omega x} G(omega) ] d omega_r,

with ``omega = omega_r + i omega_i`` and G evaluated at the pricing arguments
``(1 - i omega, omega^2/2 + i omega/2)``. Conjugate symmetry of the integrand
is what allows the half line.

The contour must sit where both the payoff transform and the moment
``E[exp(-int r) S_T^p]`` (with ``p = -omega_i``) exist. The second condition
is model dependent: for the CIR driver with low correlation the asset has
moment explosions just above ``p = 1``, so a call contour at ``omega_i = -1.5``
can be out of bounds. :func:`moment_strip` computes the admissible range and
:func:`price_call` falls back to the strip ``-1 < omega_i < 0`` (adding back
the spot from the residue at ``omega = -i``) when asked to.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .chf import GArgs, assert_continuous, bond_price, g_function, pricing_wz
from .errors import ArbitrageBoundsError, ConvergenceError, StripError, ValidationError
from .models import CirParams, JacobiParams, MarketState, Model, check_state

__all__ = [
    "ContourConfig",
    "PayoffTransform",
    "call_transform",
    "put_transform",
    "integrate_contour",
    "moment_strip",
    "price_european",
    "price_call",
    "price_put",
]

log = logging.getLogger(__name__)

# 15-point Kronrod nodes on [-1, 1] (nonnegative half) and the weights of the
# Kronrod rule and of the embedded 7-point Gauss rule.
_XK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])
_NODES = np.concatenate([-_XK[:-1], _XK[::-1]])
_KWEIGHTS = np.concatenate([_WK[:-1], _WK[::-1]])
_GWEIGHTS = np.zeros(15)
_GWEIGHTS[1:14:2] = np.concatenate([_WG[:-1], _WG[::-1]])

_STRIP_POLICIES = ("residue", "shift", "raise")


@dataclass(frozen=True)
class ContourConfig:
    """Contour offset and quadrature controls.

    ``strip_policy`` decides what a call pricer does when ``omega_i`` lies
    beyond the model's moment bound: ``"residue"`` prices on ``omega_i = -1/2``
    and adds the spot back, ``"shift"`` moves the contour to the middle of the
    admissible part of the call strip, ``"raise"`` raises :class:`StripError`.
    """

    omega_i: float = -1.5
    abs_tol: float = 1e-10
    rel_tol: float = 1e-10
    omega_max_init: float = 32.0
    max_doublings: int = 12
    max_panels: int = 4000
    strip_policy: str = "residue"

    def __post_init__(self):
        if not math.isfinite(self.omega_i):
            raise ValidationError("omega_i must be finite")
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValidationError("quadrature tolerances must be positive")
        if not self.omega_max_init > 0:
            raise ValidationError("omega_max_init must be positive")
        if self.max_doublings < 0 or self.max_panels < 1:
            raise ValidationError("max_doublings must be >= 0 and max_panels >= 1")
        if self.strip_policy not in _STRIP_POLICIES:
            raise ValidationError(f"strip_policy must be one of {_STRIP_POLICIES}")

    def require_call_strip(self) -> None:
        if not self.omega_i < -1.0:
            raise ValidationError(f"call pricing needs omega_i < -1, got {self.omega_i}")


@dataclass(frozen=True)
class PayoffTransform:
    """Generalized Fourier transform of a payoff, valid for ``lo < omega_i < hi``."""

    evaluate: Callable
    lo: float
    hi: float
    label: str = ""

    def in_strip(self, omega_i: float) -> bool:
        return self.lo < omega_i < self.hi

    def __call__(self, omega):
        omega = np.asarray(omega, dtype=complex)
        im = omega.imag
        if not np.all((im > self.lo) & (im < self.hi)):
            raise StripError(f"{self.label or 'transform'} evaluated outside its strip ({self.lo}, {self.hi})")
        return self.evaluate(omega)


def _rational(K):
    log_k = math.log(K)

    def phi_hat(omega):
        return -np.exp((1.0 - 1j * omega) * log_k) / (omega * omega + 1j * omega)

    return phi_hat


def call_transform(K: float) -> PayoffTransform:
    """``-K^(1 - i omega) / (omega^2 + i omega)`` on ``omega_i < -1``."""
    if not K > 0:
        raise ValidationError(f"strike must be > 0, got {K}")
    return PayoffTransform(_rational(K), -math.inf, -1.0, label=f"call(K={K:g})")


def put_transform(K: float) -> PayoffTransform:
    """Same rational expression on ``omega_i > 0``, where it transforms ``(K - e^x)^+``."""
    if not K > 0:
        raise ValidationError(f"strike must be > 0, got {K}")
    return PayoffTransform(_rational(K), 0.0, math.inf, label=f"put(K={K:g})")


def _covered_call_transform(K: float) -> PayoffTransform:
    # On -1 < omega_i < 0 the rational expression transforms (e^x - K)^+ - e^x.
    return PayoffTransform(_rational(K), -1.0, 0.0, label=f"call-minus-spot(K={K:g})")


# ---------------------------------------------------------------- quadrature


_ROUNDOFF = 50.0 * np.finfo(float).eps


def _gk_panels(f, a, b):
    """Kronrod estimate, error estimate and nodes for each panel ``[a_j, b_j]``.

    The error estimate is floored at the rounding level of the panel sum, so
    panels whose integrand is large compared with the result still terminate.
    """
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    x = mid[:, None] + half[:, None] * _NODES[None, :]
    vals = np.asarray(f(x.ravel())).reshape(x.shape)
    re = vals.real
    k = half * (re @ _KWEIGHTS)
    g = half * (re @ _GWEIGHTS)
    noise = _ROUNDOFF * half * (np.abs(re) @ _KWEIGHTS)
    err = np.abs(k - g)
    return k, np.where(err <= noise, 0.0, err), x, vals


def _adaptive(f, lo, hi, n_init, tol, max_panels, record):
    a = np.linspace(lo, hi, n_init + 1)
    todo = (a[:-1], a[1:])
    done_val = []
    done_err = 0.0
    n_panels = n_init
    total_est = 0.0
    while True:
        k, err, x, vals = _gk_panels(f, *todo)
        if record is not None:
            record.append((x.ravel(), vals.ravel()))
        total_est = float(np.sum(done_val) + np.sum(k)) if done_val or k.size else 0.0
        budget = max(tol[0], tol[1] * abs(total_est))
        width = todo[1] - todo[0]
        span = hi - lo
        # a panel is accepted when its error is within its share of the budget
        ok = err <= budget * width / span
        done_val.extend(k[ok].tolist())
        done_err += float(np.sum(err[ok]))
        bad = ~ok
        if not np.any(bad):
            break
        n_panels += int(np.count_nonzero(bad))
        if n_panels > max_panels:
            raise ConvergenceError(f"quadrature exceeded {max_panels} panels on [{lo:g}, {hi:g}]")
        la, lb = todo[0][bad], todo[1][bad]
        m = 0.5 * (la + lb)
        todo = (np.concatenate([la, m]), np.concatenate([m, lb]))
    # fixed-order reduction so results do not depend on refinement history
    return math.fsum(done_val), done_err


def integrate_contour(integrand, config: ContourConfig = ContourConfig(), record=None) -> float:
    """``(1/pi) int_0^inf Re[integrand(omega_r)] d omega_r``.

    ``integrand`` must accept a float array and return complex values. The
    range ``[0, Omega]`` is integrated adaptively with 15-point Gauss-Kronrod
    panels; then ``[Omega, 2 Omega]`` is added, and so on, until the newest
    piece contributes less than ``abs_tol``. When ``record`` is a list the
    ``(nodes, values)`` of every evaluation are appended to it.
    """
    tol = (config.abs_tol, config.rel_tol)
    lo, hi = 0.0, config.omega_max_init
    total, _ = _adaptive(integrand, lo, hi, 16, tol, config.max_panels, record)
    for _ in range(config.max_doublings):
        piece, _ = _adaptive(integrand, hi, 2.0 * hi, 16, tol, config.max_panels, record)
        total += piece
        if abs(piece) < config.abs_tol * math.pi:
            return total / math.pi
        hi *= 2.0
    raise ConvergenceError(
        f"contour integral tail still {abs(piece) / math.pi:.3e} after {config.max_doublings} doublings"
    )


# ---------------------------------------------------------------- moments


def _quad_upper_root(c2, c1, c0, start):
    """Smallest root above ``start`` of ``c2 p^2 + c1 p + c0`` (inf when none)."""
    roots = np.roots([c2, c1, c0]) if c2 != 0 else (np.array([-c0 / c1]) if c1 != 0 else np.array([]))
    real = [r.real for r in np.atleast_1d(roots) if abs(r.imag) < 1e-14 and r.real > start]
    return min(real) if real else math.inf


def _quad_lower_root(c2, c1, c0, start):
    roots = np.roots([c2, c1, c0]) if c2 != 0 else (np.array([-c0 / c1]) if c1 != 0 else np.array([]))
    real = [r.real for r in np.atleast_1d(roots) if abs(r.imag) < 1e-14 and r.real < start]
    return max(real) if real else -math.inf


def moment_strip(model: Model) -> tuple[float, float]:
    """Open interval of ``p`` on which ``E[exp(-int r) S_T^p]`` is finite.

    Evaluating G at ``omega = -i p`` makes both square-root radicands real;
    the interval is where they are nonnegative. The asset condition

        (alpha + 2 p rho gamma / delta)^2 - 4 gamma^2 p (p - 1) / delta^2 >= 0

    holds for every maturity (it is the exponential-moment threshold of the
    integrated variance), and the rate condition bounds the moments the
    discount factor can absorb. The interval always contains ``[0, 1]``.
    """
    d2 = model.delta**2
    g, rho = model.gamma, model.rho
    if isinstance(model, CirParams):
        alpha = 2.0 * model.kappa * model.theta / d2 - 1.0
        beta = 2.0 * model.kappa / d2
        lam = 1.0
    elif isinstance(model, JacobiParams):
        alpha = 2.0 * model.kappa / d2 - 1.0
        beta = 2.0 * (model.theta - model.kappa) / d2 - 1.0
        lam = model.eta
    else:
        raise TypeError(f"unknown model type {type(model).__name__}")
    s = g / model.delta
    c2 = 4.0 * s * s * (rho * rho - 1.0)
    c1 = 4.0 * alpha * rho * s + 4.0 * s * s
    c0 = alpha * alpha
    hi = min(_quad_upper_root(c2, c1, c0, 1.0), 1.0 + beta * beta * d2 / (8.0 * lam))
    lo = _quad_lower_root(c2, c1, c0, 0.0)
    return max(lo, -math.inf), hi


# ---------------------------------------------------------------- pricing


def _integrand_factory(model, state, T, transform, omega_i, record_g):
    x = state.x

    def integrand(omega_r):
        omega = np.asarray(omega_r, dtype=float) + 1j * omega_i
        w, z = pricing_wz(omega)
        g = np.asarray(g_function(model, GArgs(state.t, T, state.y, w, z, omega)))
        if record_g is not None:
            record_g.append((np.asarray(omega_r, dtype=float).copy(), g))
        return transform(omega) * np.exp(1j * omega * x) * g

    return integrand


def _check_continuity(record_g):
    x = np.concatenate([r[0] for r in record_g])
    g = np.concatenate([r[1] for r in record_g])
    order = np.argsort(x, kind="stable")
    xs, gs = x[order], g[order]
    keep = np.concatenate([[True], np.diff(xs) > 0])
    assert_continuous(xs[keep], gs[keep])


def price_european(model: Model, state: MarketState, T: float, transform: PayoffTransform,
                   config: ContourConfig = ContourConfig(), check_branch: bool = True,
                   nonnegative: bool = True) -> float:
    """Fourier price of the claim whose transform is ``transform`` on the line ``omega_i``.

    Negative results down to ``-max(abs_tol, 1e-10 S_t)`` are quadrature
    noise and are clamped to zero; anything lower raises
    :class:`ArbitrageBoundsError`. Pass ``nonnegative=False`` for claims that
    can legitimately be negative.
    """
    if not T > state.t:
        raise ValidationError(f"pricing requires T > t, got t={state.t}, T={T}")
    check_state(model, state.y)
    if not transform.in_strip(config.omega_i):
        raise StripError(f"omega_i={config.omega_i} outside the strip ({transform.lo}, {transform.hi}) of {transform.label}")
    p = -config.omega_i
    lo, hi = moment_strip(model)
    if not lo < p < hi:
        raise StripError(f"omega_i={config.omega_i}: the moment of order {p:g} is infinite "
                         f"(finite for {lo:.6g} < p < {hi:.6g})")
    record_g = [] if check_branch else None
    f = _integrand_factory(model, state, T, transform, config.omega_i, record_g)
    value = integrate_contour(f, config)
    if check_branch:
        _check_continuity(record_g)
    if nonnegative and value < 0:
        floor = max(config.abs_tol, 1e-10 * state.spot)
        if value < -floor:
            raise ArbitrageBoundsError(f"negative price {value:.3e} below the noise floor {floor:.1e}")
        log.debug("clamped negative price %.3e to zero", value)
        value = 0.0
    return value


def _call_strip(model, config):
    lo, hi = moment_strip(model)
    if -config.omega_i < hi:
        return config, False
    policy = config.strip_policy
    if policy == "raise":
        raise StripError(f"omega_i={config.omega_i} beyond the moment bound p*={hi:.6g}")
    if policy == "shift":
        return replace(config, omega_i=-0.5 * (1.0 + hi)), False
    return replace(config, omega_i=-0.5), True


def price_call(model: Model, state: MarketState, T: float, K: float,
               config: ContourConfig = ContourConfig(), check_branch: bool = True) -> float:
    """European call ``E[exp(-int r) (S_T - K)^+]``."""
    config.require_call_strip()
    cfg, residue = _call_strip(model, config)
    if residue:
        log.debug("omega_i=%g inadmissible; pricing on omega_i=-0.5 with the spot residue", config.omega_i)
        value = state.spot + price_european(model, state, T, _covered_call_transform(K), cfg,
                                            check_branch=check_branch, nonnegative=False)
        floor = max(config.abs_tol, 1e-10 * state.spot)
        if value < -floor:
            raise ArbitrageBoundsError(f"negative call price {value:.3e}")
        return max(value, 0.0)
    return price_european(model, state, T, call_transform(K), cfg, check_branch=check_branch)


def price_put(model: Model, state: MarketState, T: float, K: float,
              config: ContourConfig | None = None, check_branch: bool = True) -> float:
    """European put on the strip ``omega_i > 0``.

    Without an explicit config the contour sits halfway into the admissible
    part of the strip (capped at ``omega_i = 0.5``).
    """
    if config is None:
        lo, _ = moment_strip(model)
        config = ContourConfig(omega_i=min(0.5, -0.5 * lo))
    return price_european(model, state, T, put_transform(K), config, check_branch=check_branch)


def bond(model: Model, state: MarketState, T: float) -> float:
    return bond_price(model, state.t, state.y, T)
