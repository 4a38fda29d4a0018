"""Complex special functions used by the closed-form transforms.

Everything here accepts numpy scalars or arrays (broadcast elementwise) and
returns complex results. Powers are always ``exp(s * Log w)`` with the
principal logarithm; callers that sweep a contour are responsible for
detecting branch crossings.
"""
from __future__ import annotations

import numpy as np

from .errors import ConvergenceError, PoleError

__all__ = [
    "pochhammer",
    "log_gamma",
    "gamma_ratio",
    "hyp1f1",
    "hyp3f2_terminating",
    "hyp3f2_hahn_sequence",
    "jacobi_p",
    "jacobi_p_explicit",
    "jacobi_p_sequence",
    "cpow",
]

# Lanczos approximation, g = 7, nine coefficients.
_LANCZOS_G = 7.0
_LANCZOS_COEF = np.array([
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
])
_HALF_LOG_2PI = 0.5 * np.log(2.0 * np.pi)
_LOG_PI = np.log(np.pi)


def _as_complex(x):
    return np.asarray(x, dtype=complex)


def _unwrap(x):
    """Return a Python complex for 0-d input, the array otherwise."""
    return complex(x) if np.ndim(x) == 0 else x


def cpow(w, s):
    """Principal power ``w**s = exp(s Log w)``."""
    w = _as_complex(w)
    s = _as_complex(s)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.exp(s * np.log(w))
    out = np.where((w == 0) & (s == 0), 1.0 + 0j, out)
    return _unwrap(out)


def pochhammer(x, n: int):
    """Rising factorial ``x (x+1) ... (x+n-1)``; equals 1 for ``n == 0``."""
    if n < 0:
        raise ValueError("pochhammer order must be nonnegative")
    x = _as_complex(x)
    out = np.ones_like(x)
    for k in range(n):
        out = out * (x + k)
    return _unwrap(out)


def _is_nonpositive_integer(z):
    return (z.imag == 0) & (z.real <= 0) & (z.real == np.round(z.real))


def _log_sin_pi(z):
    # log(sin(pi z)) without overflow for large |Im z|; only exp() of the
    # result is meaningful, the branch is whatever falls out.
    out = np.empty_like(z)
    up = z.imag > 0
    down = z.imag < 0
    flat = ~(up | down)
    if np.any(up):
        zu = z[up]
        out[up] = -1j * np.pi * zu + np.log(0.5j) + np.log1p(-np.exp(2j * np.pi * zu))
    if np.any(down):
        zd = np.conj(z[down])
        out[down] = np.conj(-1j * np.pi * zd + np.log(0.5j) + np.log1p(-np.exp(2j * np.pi * zd)))
    if np.any(flat):
        out[flat] = np.log(np.sin(np.pi * z[flat].real) + 0j)
    return out


def _log_gamma_lanczos(z):
    zm = z - 1.0
    acc = np.full_like(zm, _LANCZOS_COEF[0])
    for k in range(1, _LANCZOS_COEF.size):
        acc = acc + _LANCZOS_COEF[k] / (zm + k)
    t = zm + _LANCZOS_G + 0.5
    return _HALF_LOG_2PI + (zm + 0.5) * np.log(t) - t + np.log(acc)


def log_gamma(z):
    """Log-Gamma for complex arguments.

    Lanczos approximation for ``Re z >= 0.5`` and the reflection formula
    elsewhere. On the right half-plane this is the analytic ``loggamma``
    branch; on the left only ``exp(log_gamma(z)) == Gamma(z)`` is promised.
    Raises :class:`PoleError` at nonpositive integers.
    """
    z = _as_complex(z)
    if np.any(_is_nonpositive_integer(z)):
        raise PoleError("log_gamma evaluated at a nonpositive integer")
    zz = np.atleast_1d(z)
    out = np.empty_like(zz)
    right = zz.real >= 0.5
    if np.any(right):
        out[right] = _log_gamma_lanczos(zz[right])
    left = ~right
    if np.any(left):
        zl = zz[left]
        out[left] = _LOG_PI - _log_sin_pi(zl) - _log_gamma_lanczos(1.0 - zl)
    return _unwrap(out.reshape(z.shape))


def gamma_ratio(num, den):
    """``prod Gamma(num_i) / prod Gamma(den_j)`` computed in log space."""
    acc = 0j
    for a in num:
        acc = acc + log_gamma(a)
    for b in den:
        acc = acc - log_gamma(b)
    return _unwrap(np.exp(acc))


def _hyp1f1_series(a, b, z, tol, max_terms):
    term = np.ones(np.broadcast(a, b, z).shape, dtype=complex)
    total = term.copy()
    quiet = np.zeros(term.shape, dtype=int)
    for k in range(max_terms):
        term = term * (a + k) / (b + k) * z / (k + 1)
        total = total + term
        small = np.abs(term) <= tol * np.abs(total)
        quiet = np.where(small, quiet + 1, 0)
        if np.all(quiet >= 3):
            return total
        if not np.all(np.isfinite(total)):
            raise ConvergenceError("1F1 series overflowed")
    raise ConvergenceError(f"1F1 series did not converge within {max_terms} terms")


def hyp1f1(a, b, z, tol: float = 1e-12, max_terms: int = 10_000):
    """Confluent hypergeometric function ``1F1(a; b; z)``.

    Taylor series with a term-ratio update. Where ``Re z < 0`` the Kummer
    transformation ``e^z 1F1(b-a; b; -z)`` is applied first so that the
    series is summed on the non-cancelling side. Convergence requires three
    consecutive terms below ``tol * |partial sum|``.
    """
    a, b, z = np.broadcast_arrays(_as_complex(a), _as_complex(b), _as_complex(z))
    if np.any(_is_nonpositive_integer(b)):
        raise PoleError("1F1 lower parameter is a nonpositive integer")
    flip = z.real < 0
    aa = np.where(flip, b - a, a)
    zz = np.where(flip, -z, z)
    out = _hyp1f1_series(aa, b, zz, tol, max_terms)
    out = np.where(flip, np.exp(z) * out, out)
    if not np.all(np.isfinite(out)):
        raise ConvergenceError("1F1 result is not finite")
    return _unwrap(out)


def hyp3f2_terminating(n: int, p2, p3, q1, q2):
    """Finite sum ``3F2(-n, p2, p3; q1, q2; 1)`` with ``n + 1`` terms.

    Raises :class:`PoleError` when a denominator Pochhammer vanishes inside
    the summation range.
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    p2, p3, q1, q2 = np.broadcast_arrays(*(_as_complex(v) for v in (p2, p3, q1, q2)))
    term = np.ones(p2.shape, dtype=complex)
    total = term.copy()
    for k in range(n):
        den = (q1 + k) * (q2 + k)
        if np.any(den == 0):
            raise PoleError("3F2 denominator Pochhammer vanishes")
        term = term * (k - n) * (p2 + k) * (p3 + k) / (den * (k + 1))
        total = total + term
    return _unwrap(total)


def hyp3f2_hahn_sequence(nmax: int, A, B, D, E):
    """Values ``F_n = 3F2(-n, n+A, B; D, E; 1)`` for ``n = 0..nmax``.

    The F_n are Hahn polynomials in the parameter ``B`` and obey a
    three-term recurrence in ``n``. Running it forward keeps near machine
    precision where the explicit sum loses every digit to cancellation.
    Output has shape ``(nmax + 1,) + broadcast shape``.
    """
    A, B, D, E = np.broadcast_arrays(*(_as_complex(v) for v in (A, B, D, E)))
    if np.any(D * E == 0):
        raise PoleError("3F2 denominator parameter is zero")
    out = np.empty((nmax + 1,) + A.shape, dtype=complex)
    out[0] = 1.0
    if nmax == 0:
        return out
    out[1] = 1.0 - (A + 1.0) * B / (D * E)
    for n in range(1, nmax):
        den_a = (2 * n + A) * (2 * n + A + 1)
        an = (n + A) * (n + D) * (-E - n) / den_a
        cn = n * (n + A - E) * (n + A - D) / ((2 * n + A - 1) * (2 * n + A))
        if np.any(an == 0) or not np.all(np.isfinite(an)) or not np.all(np.isfinite(cn)):
            raise PoleError(f"degenerate Hahn recurrence at n={n}")
        out[n + 1] = ((an + cn + B) * out[n] - cn * out[n - 1]) / an
    return out


def jacobi_p_explicit(n: int, alpha, beta, x):
    """Jacobi polynomial from the explicit finite sum (no recurrence)."""
    alpha, beta, x = np.broadcast_arrays(_as_complex(alpha), _as_complex(beta), _as_complex(x))
    xm = (x - 1.0) / 2.0
    xp = (x + 1.0) / 2.0
    total = np.zeros(alpha.shape, dtype=complex)
    fact = [1.0]
    for k in range(1, n + 1):
        fact.append(fact[-1] * k)
    for s in range(n + 1):
        # binom(n+alpha, n-s) * binom(n+beta, s)
        c1 = pochhammer(alpha + s + 1, n - s) / fact[n - s]
        c2 = pochhammer(beta + n - s + 1, s) / fact[s]
        total = total + c1 * c2 * xm**s * xp ** (n - s)
    return _unwrap(total)


def jacobi_p_sequence(nmax: int, alpha, beta, x):
    """``P_n^{(alpha, beta)}(x)`` for ``n = 0..nmax`` by the three-term recurrence.

    Shape of the result is ``(nmax + 1,) + broadcast shape``.
    """
    a, b, x = np.broadcast_arrays(_as_complex(alpha), _as_complex(beta), _as_complex(x))
    out = np.empty((nmax + 1,) + a.shape, dtype=complex)
    out[0] = 1.0
    if nmax == 0:
        return out
    out[1] = (a + 1.0) + (a + b + 2.0) * (x - 1.0) / 2.0
    ab = a + b
    for n in range(1, nmax):
        c0 = 2.0 * (n + 1) * (n + ab + 1) * (2 * n + ab)
        if np.any(c0 == 0):
            out[n + 1] = jacobi_p_explicit(n + 1, a, b, x)
            continue
        c1 = (2 * n + ab + 1) * ((2 * n + ab + 2) * (2 * n + ab) * x + a * a - b * b)
        c2 = 2.0 * (n + a) * (n + b) * (2 * n + ab + 2)
        out[n + 1] = (c1 * out[n] - c2 * out[n - 1]) / c0
    return out


def jacobi_p(n: int, alpha, beta, x):
    """Jacobi polynomial ``P_n^{(alpha, beta)}(x)`` with complex parameters."""
    if n < 0:
        raise ValueError("degree must be nonnegative")
    return _unwrap(jacobi_p_sequence(n, alpha, beta, x)[n])
