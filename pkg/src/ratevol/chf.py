"""Closed-form transforms G and zero-coupon bonds for the CIR and Jacobi drivers.

``G(t, y; T, w, z)`` is the conditional expectation, under the measure tilted
by the contour variable ``omega``, of

    exp(-w * int_t^T r(Y) ds - z * int_t^T c(Y)^2 ds).

The tilt enters only through shifted drift parameters (``theta`` for CIR,
``kappa`` and ``theta`` for Jacobi). All functions broadcast over array-valued
``w``, ``z`` and ``omega`` so that a whole quadrature panel is evaluated at once.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import specfun
from .errors import BranchError, BranchWarning, ConvergenceError, ImaginaryResidueError, ValidationError
from .models import CirParams, JacobiParams, Model, check_state

__all__ = [
    "GArgs",
    "ShiftedCirParams",
    "ShiftedJacobiParams",
    "shift_cir",
    "shift_jacobi",
    "g_cir",
    "g_jacobi",
    "g_function",
    "bond_cir",
    "bond_jacobi",
    "bond_price",
    "cir_pq",
    "pricing_wz",
    "detect_discontinuity",
    "JACOBI_NMAX",
    "JACOBI_TAIL_TOL",
]

JACOBI_NMAX = 250
JACOBI_TAIL_TOL = 1e-12
# Distance (radians) from the negative real axis below which a principal
# logarithm is reported as branch-ambiguous.
_BRANCH_EPS = 1e-6


@dataclass(frozen=True)
class GArgs:
    """Arguments of G. ``w``, ``z`` and ``omega`` may be complex arrays."""

    t: float
    T: float
    y: float
    w: complex
    z: complex
    omega: complex = 0j

    def __post_init__(self):
        if not self.T > self.t:
            raise ValidationError(f"G requires T > t, got t={self.t}, T={self.T}")

    @property
    def tau(self) -> float:
        return self.T - self.t


@dataclass(frozen=True)
class ShiftedCirParams:
    theta_tilde: complex
    kappa: float
    delta: float


@dataclass(frozen=True)
class ShiftedJacobiParams:
    kappa_tilde: complex
    theta_tilde: complex
    delta: float


def pricing_wz(omega):
    """The ``(w, z)`` pair at which G enters the Fourier pricing integral."""
    omega = np.asarray(omega, dtype=complex)
    return 1.0 - 1j * omega, 0.5 * omega**2 + 0.5j * omega


def shift_cir(params: CirParams, omega) -> ShiftedCirParams:
    """Long-run level under the tilted measure: ``theta + i omega rho delta gamma / kappa``."""
    omega = np.asarray(omega, dtype=complex)
    tt = params.theta + 1j * omega * params.rho * params.delta * params.gamma / params.kappa
    return ShiftedCirParams(theta_tilde=_scalar(tt), kappa=params.kappa, delta=params.delta)


def shift_jacobi(params: JacobiParams, omega) -> ShiftedJacobiParams:
    omega = np.asarray(omega, dtype=complex)
    shift = 1j * omega * params.rho * params.delta * params.gamma
    return ShiftedJacobiParams(
        kappa_tilde=_scalar(params.kappa + shift),
        theta_tilde=_scalar(params.theta + shift),
        delta=params.delta,
    )


def _scalar(x):
    return complex(x) if np.ndim(x) == 0 else x


def _warn_near_cut(name, *values):
    for v in values:
        v = np.asarray(v)
        if np.any((v.real < 0) & (np.abs(np.angle(v)) > np.pi - _BRANCH_EPS)):
            warnings.warn(f"{name}: principal logarithm evaluated next to its branch cut", BranchWarning, stacklevel=3)
            return


def _sqrt_root(lin, const):
    """Root ``(-lin + sqrt(lin^2 + const)) / 2`` of ``v^2 + lin v - const/4 = 0``."""
    rad = lin * lin + const
    _warn_near_cut("square root", rad)
    return 0.5 * (-lin + np.sqrt(rad)), rad


# ---------------------------------------------------------------- CIR


def cir_pq(params: CirParams, tau):
    """``(P, Q)`` of the CIR bond ``exp(-P - Q y)`` for time to maturity ``tau``."""
    k, d = params.kappa, params.delta
    zeta = math.sqrt(k * k + 2.0 * d * d)
    tau = np.asarray(tau, dtype=float)
    em1 = np.expm1(zeta * tau)
    den = 2.0 * zeta + (k + zeta) * em1
    Q = 2.0 * em1 / den
    P = -(2.0 * k * params.theta / d**2) * (np.log(2.0 * zeta) + 0.5 * (k + zeta) * tau - np.log(den))
    if tau.ndim == 0:
        return float(P), float(Q)
    return P, Q


def bond_cir(params: CirParams, t: float, y: float, T: float) -> float:
    """Zero-coupon bond ``E_t exp(-int_t^T Y ds)`` in closed form."""
    if T < t:
        raise ValidationError(f"bond requires T >= t, got t={t}, T={T}")
    check_state(params, y)
    P, Q = cir_pq(params, T - t)
    return math.exp(-P - Q * y)


def g_cir(params: CirParams, args: GArgs):
    """G for the CIR driver (Laplace transform of ``(int Y, int 1/Y)``).

    Obtained by the exponential change of measure ``y^v2 exp(-v1 y)``, which
    turns the problem into a fractional moment of a CIR variable with a
    Poisson-Gamma law; the Poisson sum is the ``1F1`` factor.
    """
    check_state(params, args.y)
    y, tau = args.y, args.tau
    w, z, omega = np.broadcast_arrays(*(np.asarray(v, dtype=complex) for v in (args.w, args.z, args.omega)))
    c2 = params.delta**2
    a = params.kappa * shift_cir(params, omega).theta_tilde
    alpha = 2.0 * a / c2 - 1.0
    beta = 2.0 * params.kappa / c2
    v1, _ = _sqrt_root(beta + 0 * alpha, 8.0 * w / c2)
    v2, _ = _sqrt_root(alpha, 8.0 * params.gamma**2 * z / c2)
    decay = np.exp(-(beta / 2.0 + v1) * c2 * tau)
    k = (beta + 2.0 * v1) / (-np.expm1(-(beta / 2.0 + v1) * c2 * tau))
    kmv = k - v1
    _warn_near_cut("CIR power base", k, kmv)
    log_pre = (
        -(a * v1 + params.kappa * v2 + c2 * v1 * v2) * tau
        + v2 * math.log(y)
        - (alpha + v2 + 1.0) * np.log(kmv)
        + (alpha + 2.0 * v2 + 1.0) * np.log(k)
        - y * (v1 - k * v1 * decay / kmv)
        + specfun.log_gamma(alpha + v2 + 1.0)
        - specfun.log_gamma(alpha + 2.0 * v2 + 1.0)
    )
    z_arg = -(k * k) * y * decay / kmv
    out = np.exp(log_pre) * specfun.hyp1f1(v2, alpha + 2.0 * v2 + 1.0, z_arg)
    return _scalar(np.asarray(out))


# ---------------------------------------------------------------- Jacobi


def _jacobi_series(prefactor_log, A, ap, bp, hahn, y, tau, delta, nmax=JACOBI_NMAX, tol=JACOBI_TAIL_TOL):
    """Sum ``exp(prefactor) * sum_n e^{-lambda_n tau} (A)_n/(ap+1)_n (2n+A) F_n P_n^{(bp,ap)}(2y-1)``.

    ``hahn(m)`` must return the array ``F_0..F_m``. The series is truncated at
    the first ``n`` where two consecutive terms fall below ``tol * |partial sum|``.
    """
    half_d2 = 0.5 * delta**2
    m = 32
    while True:
        m = min(m, nmax)
        n = np.arange(m + 1).reshape((-1,) + (1,) * np.ndim(A))
        F = hahn(m)
        P = specfun.jacobi_p_sequence(m, bp, ap, 2.0 * y - 1.0)
        steps = np.log((A + n[:-1]) / (ap + 1.0 + n[:-1]))
        log_poch = np.concatenate([np.zeros((1,) + np.shape(A), dtype=complex), np.cumsum(steps, axis=0)])
        log_scale = log_poch - n * (n + A) * half_d2 * tau + np.log(2.0 * n + A)
        prod = F * P
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            terms = np.where(prod == 0, 0j, np.exp(log_scale + np.log(prod)))
        if not np.all(np.isfinite(terms)):
            raise ConvergenceError("Jacobi series term overflowed")
        partial = np.cumsum(terms, axis=0)
        mag = np.abs(terms)
        small = mag <= tol * np.abs(partial)
        done = small[1:] & small[:-1]
        found = np.any(done, axis=0)
        if np.all(found):
            stop = np.argmax(done, axis=0) + 1
            total = np.take_along_axis(partial, np.expand_dims(stop, 0), axis=0)[0]
            return np.exp(prefactor_log) * total
        if m >= nmax:
            raise ConvergenceError(f"Jacobi series not converged within {nmax} terms (tau={tau})")
        m *= 2


def g_jacobi(params: JacobiParams, args: GArgs, nmax: int = JACOBI_NMAX):
    """G for the Jacobi driver as an eigenfunction series in Jacobi polynomials.

    The polynomial index pairs ``(beta', alpha')`` because the eigenfunctions
    of the generator are orthogonal for the weight ``y^alpha' (1-y)^beta'``.
    """
    check_state(params, args.y)
    y, tau = args.y, args.tau
    w, z, omega = np.broadcast_arrays(*(np.asarray(v, dtype=complex) for v in (args.w, args.z, args.omega)))
    d2 = params.delta**2
    sh = shift_jacobi(params, omega)
    kt = np.asarray(sh.kappa_tilde, dtype=complex) + 0 * w
    tt = np.asarray(sh.theta_tilde, dtype=complex) + 0 * w
    alpha = 2.0 * kt / d2 - 1.0
    beta = 2.0 * (tt - kt) / d2 - 1.0
    v1, _ = _sqrt_root(alpha, 8.0 * z * params.gamma**2 / d2)
    v2, _ = _sqrt_root(beta, 8.0 * w * params.eta / d2)
    ap = alpha + 2.0 * v1
    bp = beta + 2.0 * v2
    A = ap + bp + 1.0
    lg = specfun.log_gamma
    prefactor_log = (
        -((tt - kt) * v1 + kt * v2 + d2 * v1 * v2) * tau
        + v1 * math.log(y)
        + v2 * math.log1p(-y)
        + lg(alpha + v1 + 1.0)
        + lg(beta + v2 + 1.0)
        + lg(A)
        - lg(alpha + v1 + beta + v2 + 2.0)
        - lg(ap + 1.0)
        - lg(bp + 1.0)
    )
    B = beta + v2 + 1.0
    D = alpha + beta + v1 + v2 + 2.0
    E = bp + 1.0

    def hahn(m):
        return specfun.hyp3f2_hahn_sequence(m, A, B, D, E)

    out = _jacobi_series(prefactor_log, A, ap, bp, hahn, y, tau, params.delta, nmax=nmax)
    return _scalar(np.asarray(out))


def bond_jacobi(params: JacobiParams, t: float, y: float, T: float, nmax: int = JACOBI_NMAX) -> float:
    """Zero-coupon bond ``E_t exp(-eta int Y/(1-Y) ds)``.

    Untilted series; its 3F2 factor is balanced, so Pfaff-Saalschutz gives it
    in closed form and no recurrence is needed.
    """
    if T < t:
        raise ValidationError(f"bond requires T >= t, got t={t}, T={T}")
    check_state(params, y)
    if T == t:
        return 1.0
    tau = T - t
    d2 = params.delta**2
    alpha = 2.0 * params.kappa / d2 - 1.0
    beta = 2.0 * (params.theta - params.kappa) / d2 - 1.0
    v2 = 0.5 * (-beta + math.sqrt(beta * beta + 8.0 * params.eta / d2))
    bp = beta + 2.0 * v2
    A = alpha + bp + 1.0
    prefactor_log = (
        -params.kappa * v2 * tau
        + v2 * math.log1p(-y)
        + math.lgamma(beta + v2 + 1.0)
        + math.lgamma(A)
        - math.lgamma(alpha + beta + v2 + 2.0)
        - math.lgamma(bp + 1.0)
    )

    def saalschutz(m):
        n = np.arange(m + 1)
        # 3F2 = (alpha+1)_n (v2)_n / ((bp+1)_n (alpha+beta+v2+2)_n)
        ratio = (alpha + 1.0 + n[:-1]) * (v2 + n[:-1]) / ((bp + 1.0 + n[:-1]) * (alpha + beta + v2 + 2.0 + n[:-1]))
        return np.concatenate([[1.0], np.cumprod(ratio)]).astype(complex)

    val = _jacobi_series(prefactor_log, np.complex128(A), np.complex128(alpha), np.complex128(bp),
                         saalschutz, y, tau, params.delta, nmax=nmax)
    val = complex(val)
    if abs(val.imag) > 1e-10:
        raise ImaginaryResidueError(f"bond has imaginary residue {val.imag:.3e}")
    return val.real


# ---------------------------------------------------------------- dispatch


def g_function(model: Model, args: GArgs):
    if isinstance(model, CirParams):
        return g_cir(model, args)
    if isinstance(model, JacobiParams):
        return g_jacobi(model, args)
    raise TypeError(f"unknown model type {type(model).__name__}")


def bond_price(model: Model, t: float, y: float, T: float) -> float:
    if isinstance(model, CirParams):
        return bond_cir(model, t, y, T)
    if isinstance(model, JacobiParams):
        return bond_jacobi(model, t, y, T)
    raise TypeError(f"unknown model type {type(model).__name__}")


def detect_discontinuity(x, values, factor: float = 10.0, floor: float = 1e-12) -> int | None:
    """Index ``j`` of a jump between ``x[j]`` and ``x[j+1]``, or ``None``.

    A jump is a first difference more than ``factor`` times what the secant
    slopes of both neighbouring intervals predict. ``floor`` (relative to
    ``max |values|``) keeps flat stretches from tripping the test.
    """
    x = np.asarray(x, dtype=float)
    v = np.asarray(values)
    if x.size < 4:
        return None
    h = np.diff(x)
    dv = np.abs(np.diff(v))
    slope = dv / h
    scale = floor * max(float(np.max(np.abs(v))), 1e-300)
    for j in range(1, dv.size - 1):
        expected = max(slope[j - 1], slope[j + 1]) * h[j]
        if dv[j] > factor * expected + scale:
            return j
    return None


def assert_continuous(x, values, what: str = "G") -> None:
    j = detect_discontinuity(x, values)
    if j is not None:
        raise BranchError(f"{what} jumps between omega_r={x[j]:.6g} and {x[j + 1]:.6g}")

