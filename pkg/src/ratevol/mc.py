"""Euler Monte Carlo for the short-rate-dependent volatility models.

Used as an independent oracle for the closed-form transforms and the Fourier
prices. Paths are generated in fixed-size blocks; block ``b`` draws from a
Philox stream keyed by ``(seed, b)``, so path ``i`` is the same whatever the
thread count. Gaussian increments are always paired antithetically and the
standard errors are computed from pair averages.
"""
from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .chf import bond_cir, cir_pq
from .errors import HeavyTailWarning, ValidationError
from .models import CirParams, JacobiParams, MarketState, Model, check_state

__all__ = [
    "McConfig",
    "PathEnsemble",
    "TForwardEnsemble",
    "simulate",
    "mc_price",
    "mc_chf",
    "simulate_t_forward_cir",
    "BLOCK_SIZE",
]

BLOCK_SIZE = 8192  # paths per RNG block; must stay even
_SEED_MASK = (1 << 64) - 1


@dataclass(frozen=True)
class McConfig:
    n_paths: int = 100_000
    steps_per_year: int = 250
    seed: int = 20240601
    scheme: str = "full_truncation"
    jacobi_eps: float = 1e-8
    cir_eps: float = 1e-10
    n_threads: int = 1

    def __post_init__(self):
        if self.n_paths <= 0:
            raise ValidationError("n_paths must be positive")
        if self.steps_per_year <= 0:
            raise ValidationError("steps_per_year must be positive")
        if self.scheme not in ("full_truncation", "reflection"):
            raise ValidationError(f"unknown CIR scheme {self.scheme!r}")
        if not 0 < self.jacobi_eps < 0.5:
            raise ValidationError("jacobi_eps must lie in (0, 0.5)")
        if self.n_threads < 1:
            raise ValidationError("n_threads must be >= 1")

    def n_steps(self, tau: float) -> int:
        return max(1, math.ceil(self.steps_per_year * tau - 1e-9))


@dataclass
class PathEnsemble:
    """Terminal samples per path.

    ``a_T`` is the integrated short rate and ``c_T`` the integrated variance
    ``int c(Y)^2 ds``, both accumulated with the left-point rule.
    """

    x_T: np.ndarray
    y_T: np.ndarray
    a_T: np.ndarray
    c_T: np.ndarray
    config: McConfig
    model: Model
    state: MarketState
    T: float
    n_steps: int
    boundary_fraction: float = 0.0  # CIR: truncated/reflected steps; Jacobi: clamped steps
    clip_count: int = 0  # CIR: steps where c() was evaluated at the floor eps

    @property
    def n_paths(self) -> int:
        return self.x_T.size


@dataclass
class TForwardEnsemble:
    f_T: np.ndarray
    y_T: np.ndarray
    covariation: np.ndarray  # sum over steps of the product of the martingale increments of Z and Y
    predicted_covariation: np.ndarray  # sum of (a^2 Q + rho a c) ds, i.e. a^2 Q ds when rho = 0
    config: McConfig
    n_steps: int
    forward_0: float = field(default=float("nan"))
    clip_count: int = 0

    def mean_and_stderr(self):
        return _pair_stats(self.f_T)


def _block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=[seed & _SEED_MASK, block]))


def _block_layout(n_paths: int):
    n_blocks = -(-n_paths // BLOCK_SIZE)
    sizes = [min(BLOCK_SIZE, n_paths - b * BLOCK_SIZE) for b in range(n_blocks)]
    return sizes


def _antithetic_normals(rng, n_pairs):
    z = rng.standard_normal((2, n_pairs))
    # adjacent columns (2j, 2j+1) form an antithetic pair
    return np.stack([z, -z], axis=-1).reshape(2, 2 * n_pairs)


def _run_blocks(fn, n_paths: int, n_threads: int):
    sizes = _block_layout(n_paths)
    if n_threads == 1 or len(sizes) == 1:
        results = [fn(b, m) for b, m in enumerate(sizes)]
    else:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            results = list(pool.map(fn, range(len(sizes)), sizes))
    return results


def _cir_block(params: CirParams, state, tau, cfg, n_steps, block, m):
    rng = _block_rng(cfg.seed, block)
    n_pairs = -(-m // 2)
    n = 2 * n_pairs
    dt = tau / n_steps
    sdt = math.sqrt(dt)
    x = np.full(n, state.x)
    y = np.full(n, state.y)
    acc_r = np.zeros(n)
    acc_c = np.zeros(n)
    k, th, d, g, rho, rb = params.kappa, params.theta, params.delta, params.gamma, params.rho, params.rho_bar
    boundary = 0
    clipped = 0
    for _ in range(n_steps):
        zw, zb = _antithetic_normals(rng, n_pairs)
        yp = np.maximum(y, 0.0)
        ys = np.maximum(y, cfg.cir_eps)
        clipped += int(np.count_nonzero(y < cfg.cir_eps))
        c = g / np.sqrt(ys)
        dw = sdt * zw
        acc_r += yp * dt
        acc_c += c * c * dt
        x += (yp - 0.5 * c * c) * dt + c * (rho * dw + rb * sdt * zb)
        if cfg.scheme == "full_truncation":
            y = y + k * (th - yp) * dt + d * np.sqrt(yp) * dw
            boundary += int(np.count_nonzero(y < 0))
        else:
            y = y + k * (th - y) * dt + d * np.sqrt(yp) * dw
            neg = y < 0
            boundary += int(np.count_nonzero(neg))
            y = np.abs(y)
    return x[:m], y[:m], acc_r[:m], acc_c[:m], boundary, clipped


def _jacobi_block(params: JacobiParams, state, tau, cfg, n_steps, block, m):
    rng = _block_rng(cfg.seed, block)
    n_pairs = -(-m // 2)
    n = 2 * n_pairs
    dt = tau / n_steps
    sdt = math.sqrt(dt)
    eps = cfg.jacobi_eps
    x = np.full(n, state.x)
    y = np.full(n, state.y)
    acc_r = np.zeros(n)
    acc_c = np.zeros(n)
    k, th, d, g, eta, rho, rb = (params.kappa, params.theta, params.delta, params.gamma,
                                 params.eta, params.rho, params.rho_bar)
    clamped = 0
    for _ in range(n_steps):
        zw, zb = _antithetic_normals(rng, n_pairs)
        one_m = 1.0 - y
        r = eta * y / one_m
        c2 = g * g * one_m / y
        c = np.sqrt(c2)
        dw = sdt * zw
        acc_r += r * dt
        acc_c += c2 * dt
        x += (r - 0.5 * c2) * dt + c * (rho * dw + rb * sdt * zb)
        y = y + (k - th * y) * dt + d * np.sqrt(y * one_m) * dw
        out = (y < eps) | (y > 1.0 - eps)
        clamped += int(np.count_nonzero(out))
        y = np.clip(y, eps, 1.0 - eps)
    return x[:m], y[:m], acc_r[:m], acc_c[:m], clamped, 0


def simulate(model: Model, state: MarketState, T: float, config: McConfig = McConfig()) -> PathEnsemble:
    """Simulate ``(X_T, Y_T, int r, int c^2)`` with an Euler scheme."""
    if not T > state.t:
        raise ValidationError(f"simulate requires T > t, got t={state.t}, T={T}")
    check_state(model, state.y)
    tau = T - state.t
    n_steps = config.n_steps(tau)
    if isinstance(model, CirParams):
        kernel = _cir_block
    elif isinstance(model, JacobiParams):
        kernel = _jacobi_block
    else:
        raise TypeError(f"unknown model type {type(model).__name__}")

    def run(block, m):
        return kernel(model, state, tau, config, n_steps, block, m)

    parts = _run_blocks(run, config.n_paths, config.n_threads)
    x, y, a, c = (np.concatenate([p[i] for p in parts]) for i in range(4))
    boundary = sum(p[4] for p in parts)
    clipped = sum(p[5] for p in parts)
    total_steps = config.n_paths * n_steps
    return PathEnsemble(
        x_T=x, y_T=y, a_T=a, c_T=c, config=config, model=model, state=state, T=T,
        n_steps=n_steps, boundary_fraction=boundary / total_steps, clip_count=clipped,
    )


def _pair_stats(samples: np.ndarray):
    """Mean and standard error, treating adjacent samples as antithetic pairs."""
    n = samples.size
    est = samples.sum() / n
    n_pairs = n // 2
    if n_pairs < 2:
        return est, float("nan")
    pairs = 0.5 * (samples[0:2 * n_pairs:2] + samples[1:2 * n_pairs:2])
    dev = pairs - pairs.mean()
    var = float(np.sum((dev * np.conj(dev)).real)) / (n_pairs - 1)
    return est, math.sqrt(var / n_pairs)


def mc_price(ensemble: PathEnsemble, payoff):
    """Discounted payoff estimate ``mean(exp(-A_T) payoff(X_T))`` and its standard error."""
    if ensemble.n_paths == 0:
        raise ValidationError("empty ensemble")
    vals = np.exp(-ensemble.a_T) * np.broadcast_to(np.asarray(payoff(ensemble.x_T), dtype=float), ensemble.x_T.shape)
    est, se = _pair_stats(vals)
    return float(est), se


def mc_chf(ensemble: PathEnsemble, omega: complex, x_t: float):
    """Estimate of ``E[exp(-A_T + i omega (X_T - x_t))]``, i.e. G at the pricing ``(w, z)``.

    The standard error is that of the complex mean, ``sqrt(E|s - mean|^2 / n)``.
    """
    omega = complex(omega)
    s = np.exp(-ensemble.a_T + 1j * omega * (ensemble.x_T - x_t))
    est, se = _pair_stats(s)
    n = s.size
    top = max(1, n // 100)
    mags = np.abs(s)
    idx = np.argpartition(mags, n - top)[n - top:]
    if abs(est) > 0 and abs(s[idx].sum()) > 0.2 * abs(est) * n:
        warnings.warn(
            f"top 1% of samples carry {abs(s[idx].sum()) / (abs(est) * n):.0%} of the chf estimate",
            HeavyTailWarning, stacklevel=2,
        )
    return complex(est), se


def _tforward_block(params: CirParams, state, tau, cfg, n_steps, block, m):
    rng = _block_rng(cfg.seed, block)
    n_pairs = -(-m // 2)
    n = 2 * n_pairs
    dt = tau / n_steps
    sdt = math.sqrt(dt)
    P0, Q0 = cir_pq(params, tau)
    zf = np.full(n, state.x + P0 + Q0 * state.y)
    y = np.full(n, state.y)
    cov = np.zeros(n)
    pred = np.zeros(n)
    k, th, d, g, rho, rb = params.kappa, params.theta, params.delta, params.gamma, params.rho, params.rho_bar
    clipped = 0
    for i in range(n_steps):
        _, q = cir_pq(params, tau - i * dt)
        zw, zb = _antithetic_normals(rng, n_pairs)
        yp = np.maximum(y, 0.0)
        clipped += int(np.count_nonzero(y < cfg.cir_eps))
        c = g / np.sqrt(np.maximum(y, cfg.cir_eps))
        a = d * np.sqrt(yp)
        dw = sdt * zw
        aq = a * q
        # martingale parts of the two increments
        mz = (aq + rho * c) * dw + rb * c * sdt * zb
        my = a * dw
        zf += -0.5 * (aq * aq + c * c + 2.0 * rho * aq * c) * dt + mz
        cov += mz * my
        pred += (a * aq + rho * a * c) * dt
        drift = k * (th - (yp if cfg.scheme == "full_truncation" else y)) - a * aq
        y = y + drift * dt + my
        if cfg.scheme == "reflection":
            y = np.abs(y)
    return np.exp(zf[:m]), y[:m], cov[:m], pred[:m], clipped


def simulate_t_forward_cir(params: CirParams, state: MarketState, T: float,
                           config: McConfig = McConfig()) -> TForwardEnsemble:
    """Euler paths of ``(log F^T, Y)`` under the T-forward measure; returns ``F_T^T`` samples."""
    if not isinstance(params, CirParams):
        raise TypeError("T-forward simulation is implemented for the CIR driver only")
    if not T > state.t:
        raise ValidationError(f"simulate requires T > t, got t={state.t}, T={T}")
    check_state(params, state.y)
    tau = T - state.t
    n_steps = config.n_steps(tau)

    def run(block, m):
        return _tforward_block(params, state, tau, config, n_steps, block, m)

    parts = _run_blocks(run, config.n_paths, config.n_threads)
    f, y, cov, pred = (np.concatenate([p[i] for p in parts]) for i in range(4))
    fwd0 = math.exp(state.x) / bond_cir(params, state.t, state.y, T)
    return TForwardEnsemble(f_T=f, y_T=y, covariation=cov, predicted_covariation=pred,
                            config=config, n_steps=n_steps, forward_0=fwd0,
                            clip_count=sum(p[4] for p in parts))
