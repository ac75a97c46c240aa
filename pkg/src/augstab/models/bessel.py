r"""The Bessel coordinate of the stability manifold of the projective line.

The function evaluated here is

.. math::

    \tau \mapsto \log\frac{K_0(e^\tau) + i\pi I_0(e^\tau)}{K_0(e^\tau)},

the difference of log central charges of ``O(1)`` and ``O``.  Writing
``u = e^tau`` and ``u' = u e^{-i pi}`` the numerator equals ``K_0(u')``,
so with ``K_0(z) = sqrt(pi/2z) e^{-z} S(z)`` the value is
``i pi/2 + 2u + log(S(u')/S(u))``.

Two independent routes are implemented:

* a convergent power series for ``I_0`` and ``K_0`` (used for ``|u| <= 8``);
* Olver's exponentially improved asymptotic expansion of ``S`` (used for
  ``|u| > 8``), whose remainder is re-expanded in terms of the terminant
  ``G_p(x) = e^x Gamma(p) Gamma(1-p, x) / 2pi``, obtained from the
  exponential integral by recurrence.

Both are evaluated in multiprecision arithmetic; ``mpmath`` supplies the
arithmetic, ``Gamma`` and ``E_1``, not the Bessel functions.
The branch of the logarithm is the one continuous along horizontal lines
coming in from ``x = -inf``, where the value tends to 0.
"""
from __future__ import annotations

import cmath
import math

import mpmath as mp
import numpy as np

__all__ = [
    "BesselDomainError",
    "U_MAX",
    "SERIES_RADIUS",
    "bessel_series",
    "bessel_k0_asymptotic",
    "log_s_ratio_asymptotic",
    "value_series",
    "value_asymptotic",
    "p1_bessel_coordinate",
]

U_MAX = 1e8
SERIES_RADIUS = 8.0
_DPS = 40
_PLAIN_RADIUS = 40.0
_IM_LO = -math.pi / 2
_IM_HI = math.pi
# below this real part |u|^2 |log u| is under 1e-33, so I_0 = 1 and
# K_0 = -log(u/2) - gamma hold to double precision
_SMALL_X = -40.0


class BesselDomainError(ValueError):
    """Raised outside the validated evaluation band."""


def _check_tau(tau: complex) -> complex:
    tau = complex(tau)
    if not (math.isfinite(tau.real) and math.isfinite(tau.imag)):
        raise BesselDomainError("tau must be finite")
    if not (_IM_LO < tau.imag <= _IM_HI):
        raise BesselDomainError(f"Im tau = {tau.imag} outside (-pi/2, pi]")
    if tau.real > math.log(U_MAX):
        raise BesselDomainError(f"|e^tau| = e^{tau.real:.3g} exceeds the validated band {U_MAX:g}")
    return tau


# ----------------------------------------------------------------------
# power series
# ----------------------------------------------------------------------
def bessel_series(u: complex, dps: int = _DPS, max_terms: int = 400) -> tuple[mp.mpc, mp.mpc]:
    """``(I_0(u), K_0(u))`` from the ascending series, principal branch of ``log``.

    ``K_0(u) = -(log(u/2) + gamma) I_0(u) + sum_{k>=1} H_k (u^2/4)^k / (k!)^2``.
    """
    with mp.workdps(dps):
        z = mp.mpc(u)
        q = z * z / 4
        term = mp.mpc(1)
        i0 = mp.mpc(1)
        har_sum = mp.mpc(0)
        h = mp.mpf(0)
        eps = mp.mpf(10) ** (-dps + 2)
        for k in range(1, max_terms):
            term = term * q / (k * k)
            h += mp.mpf(1) / k
            i0 += term
            har_sum += h * term
            if abs(term) * (1 + h) < eps * (abs(i0) + abs(har_sum)):
                break
        k0 = -(mp.log(z / 2) + mp.euler) * i0 + har_sum
        return +i0, +k0


def value_series(u: complex, dps: int = _DPS) -> complex:
    """Principal-branch value ``Log(1 + i pi I_0/K_0)`` from the series."""
    with mp.workdps(dps):
        i0, k0 = bessel_series(u, dps)
        return complex(mp.log(1 + mp.mpc(0, mp.pi) * i0 / k0))


# ----------------------------------------------------------------------
# asymptotic expansion with exponentially improved remainder
# ----------------------------------------------------------------------
def _a_coeffs(n: int) -> list[mp.mpf]:
    """``a_k(0) = prod_{j<=k} (-(2j-1)^2) / (k! 8^k)``."""
    out = [mp.mpf(1)]
    for k in range(1, n):
        out.append(out[-1] * (-(2 * k - 1) ** 2) / (8 * k))
    return out


def _terminants(p_max: int, count: int, x: mp.mpc) -> dict[int, mp.mpc]:
    """``G_p(x) = e^x Gamma(p) Gamma(1-p, x) / (2 pi)`` for ``p_max - count < p <= p_max``.

    ``Gamma(-j, x)`` comes from ``Gamma(0, x) = E_1(x)`` by the downward
    recurrence ``Gamma(a, x) = (Gamma(a+1, x) - x^a e^{-x}) / a``, which
    loses at most ``|x| / ln 10`` digits; the extra precision covers that.
    """
    out: dict[int, mp.mpc] = {}
    with mp.workdps(mp.mp.dps + int(abs(x) / 2.3) + 10):
        x = +x
        ex = mp.exp(-x)
        g = mp.e1(x)
        for j in range(0, p_max):
            p = j + 1
            if p > p_max - count:
                out[p] = g * mp.gamma(p) / (ex * 2 * mp.pi)
            g = (g - x ** (-(j + 1)) * ex) / (-(j + 1))
    return {p: +v for p, v in out.items()}


def _point(r: mp.mpf, arg: float) -> mp.mpc:
    """``r e^{i arg}`` with ``arg = pi`` landing exactly on the negative axis."""
    if arg == math.pi:
        return mp.mpc(-r, 0)
    return r * mp.expj(arg)


def _s_olver(r, arg: float, ell: int | None = None, m: int = 6) -> mp.mpc:
    """``S(z) = K_0(z) / (sqrt(pi/2z) e^{-z})`` at ``z = r e^{i arg}``, ``|arg| <= pi``.

    Olver's expansion with ``ell`` terms and the first ``m`` terms of the
    re-expanded remainder.
    """
    if not -math.pi < arg <= math.pi:
        raise ValueError("S is evaluated on the principal sheet only")
    r = mp.mpf(r)
    z = _point(r, arg)
    if ell is None:
        ell = int(2 * r) + 6
    if r > _PLAIN_RADIUS:
        # the terminant terms are below e^{-2r}; a short plain sum is exact to working precision
        ell, m = min(ell, 40), 0
    m = min(m, ell - 1)
    a = _a_coeffs(ell)
    head = mp.fsum(a[k] / z ** k for k in range(ell))
    x = _point(2 * r, arg)
    g = _terminants(ell, m, x) if m else {}
    tail = mp.fsum(a[k] / z ** k * g[ell - k] for k in range(m))
    return head + (-1) ** ell * 2 * tail


def bessel_k0_asymptotic(z: complex, dps: int = _DPS) -> mp.mpc:
    """``K_0(z)`` on the principal sheet from the improved expansion (``|z|`` about 5 or more)."""
    with mp.workdps(dps):
        r = mp.mpf(abs(complex(z)))
        arg = cmath.phase(complex(z))
        s = _s_olver(r, arg)
        return mp.sqrt(mp.pi / (2 * r)) * mp.expj(-arg / 2) * mp.exp(-_point(r, arg)) * s


def log_s_ratio_asymptotic(u: complex, dps: int = _DPS) -> complex:
    """``log(S(u')/S(u))`` with ``u' = u e^{-i pi}``.

    For ``arg u > 0`` the point ``u'`` lies on the principal sheet.  Otherwise
    ``K_0(u e^{i pi}) = K_0(u) - i pi I_0(u)`` gives
    ``S(u') = S(u e^{i pi}) - 2i e^{-2u} S(u)``, again principal-sheet data.
    """
    with mp.workdps(dps):
        r = mp.mpf(abs(complex(u)))
        arg = cmath.phase(complex(u))
        if arg - math.pi == -math.pi:
            # arg below one ulp of pi: u' would round onto the excluded ray
            arg = 0.0
        s_u = _s_olver(r, arg)
        if arg > 0:
            s_up = _s_olver(r, arg - math.pi)
        else:
            s_up = _s_olver(r, arg + math.pi) - 2j * mp.exp(-2 * _point(r, arg)) * s_u
        return complex(mp.log(s_up / s_u))


def value_asymptotic(u: complex, dps: int = _DPS) -> complex:
    """``i pi/2 + 2u + log(S(u')/S(u))`` from the asymptotic route."""
    return complex(0.5j * math.pi + 2 * complex(u)) + log_s_ratio_asymptotic(u, dps)


# ----------------------------------------------------------------------
# branch tracking
# ----------------------------------------------------------------------
def _float_ratio(u: np.ndarray) -> np.ndarray:
    """``1 + i pi I_0/K_0`` in double precision (branch tracking only)."""
    q = u * u / 4
    term = np.ones_like(u)
    i0 = np.ones_like(u)
    hs = np.zeros_like(u)
    h = 0.0
    for k in range(1, 80):
        term = term * q / (k * k)
        h += 1.0 / k
        i0 = i0 + term
        hs = hs + h * term
    k0 = -(np.log(u / 2) + np.euler_gamma) * i0 + hs
    return 1 + 1j * np.pi * i0 / k0


def _continued_imag(u: complex, samples: int = 400) -> float:
    """Imaginary part of the value continued radially from ``|u| = 1e-4``."""
    r = abs(u)
    arg = cmath.phase(u)
    radii = np.geomspace(1e-4, r, samples) if r > 1e-4 else np.array([r])
    vals = _float_ratio(radii * np.exp(1j * arg))
    return float(np.unwrap(np.angle(vals))[-1])


def _fix_branch(principal: complex, reference_imag: float) -> complex:
    k = round((reference_imag - principal.imag) / (2 * math.pi))
    return principal + 2j * math.pi * k


def p1_bessel_coordinate(tau: complex, method: str = "auto", dps: int = _DPS) -> complex:
    """``log((K_0(e^tau) + i pi I_0(e^tau)) / K_0(e^tau))`` on ``-pi/2 < Im tau <= pi``.

    ``method`` is ``"series"``, ``"asymptotic"`` or ``"auto"`` (series for
    ``|e^tau| <= 8``).  Both routes return the same branch.
    """
    tau = _check_tau(tau)
    if tau.real < _SMALL_X and method != "asymptotic":
        return complex(cmath.log(1 + 1j * math.pi / (math.log(2) - float(np.euler_gamma) - tau)))
    u = cmath.exp(tau)
    if tau.imag == math.pi:
        u = complex(-abs(u), 0.0)
    if method == "auto":
        method = "series" if abs(u) <= SERIES_RADIUS else "asymptotic"
    if method == "asymptotic":
        return value_asymptotic(u, dps)
    if method != "series":
        raise ValueError(f"unknown method {method!r}")
    principal = value_series(u, dps)
    if abs(u) <= 2.0:
        ref = _continued_imag(u)
    else:
        ref = (0.5j * math.pi + 2 * u).imag
    return _fix_branch(principal, ref)
