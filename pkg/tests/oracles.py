"""Independent high-precision oracles used by the test suite.

Everything here is deliberately built on different machinery than the library
under test: mpmath arbitrary-precision quadrature and exact-rational series.
"""

from fractions import Fraction
from functools import lru_cache

import mpmath as mp


@lru_cache(maxsize=256)
def stable_density_mp(alpha: float, x: float, dps: int = 40) -> float:
    """Unit-scale stable density by 40-digit quadrature over cosine-zero panels."""
    with mp.workdps(dps):
        a = mp.mpf(alpha)
        xx = mp.mpf(x)
        T = (mp.mpf(40)) ** (1 / a) * 2
        if xx == 0:
            val = mp.quad(lambda t: mp.e ** (-(t**a)), [0, T]) / mp.pi
            return float(val)
        zeros = []
        k = 0
        while True:
            z = mp.pi * (k + mp.mpf(1) / 2) / xx
            if z >= T or k > 5000:
                break
            zeros.append(z)
            k += 1
        pts = [mp.mpf(0)] + zeros + [T]
        val = mp.quad(lambda t: mp.e ** (-(t**a)) * mp.cos(t * xx), pts) / mp.pi
        return float(val)


@lru_cache(maxsize=256)
def stable_logdensity_grad_mp(alpha: float, sigma: float, v: float) -> float:
    """-psi'/psi at scale sigma, from 40-digit quadrature (or its tail series)."""
    with mp.workdps(40):
        a = mp.mpf(alpha)
        s = mp.mpf(sigma)
        x = mp.mpf(v) / s
        if x > 30:
            # termwise-differentiated tail series, converging fast at large x
            psi = mp.mpf(0)
            dpsi = mp.mpf(0)
            for n in range(1, 60):
                coef = (
                    (-1) ** (n + 1)
                    / mp.factorial(n)
                    * mp.gamma(1 + a * n)
                    * mp.sin(mp.pi * a * n / 2)
                    / mp.pi
                )
                psi += coef * x ** (-a * n - 1)
                dpsi += coef * -(a * n + 1) * x ** (-a * n - 2)
            return float(-dpsi / psi / s)
        T = (mp.mpf(40)) ** (1 / a) * 2
        zeros_cos, zeros_sin = [], []
        k = 0
        while x > 0:
            z = mp.pi * (k + mp.mpf(1) / 2) / x
            if z >= T or k > 5000:
                break
            zeros_cos.append(z)
            k += 1
        k = 1
        while x > 0:
            z = mp.pi * k / x
            if z >= T or k > 5000:
                break
            zeros_sin.append(z)
            k += 1
        psi = mp.quad(
            lambda t: mp.e ** (-(t**a)) * mp.cos(t * x), [mp.mpf(0)] + zeros_cos + [T]
        )
        dpsi = -mp.quad(
            lambda t: t * mp.e ** (-(t**a)) * mp.sin(t * x), [mp.mpf(0)] + zeros_sin + [T]
        )
        return float(-dpsi / psi / s)


def kummer_series_rational(a: Fraction, b: Fraction, z: Fraction, terms: int = 200) -> float:
    """1F1 partial sum in exact rational arithmetic."""
    total = Fraction(1)
    term = Fraction(1)
    for n in range(terms):
        term *= (a + n) * z / ((b + n) * (n + 1))
        total += term
    return float(total)


def kummer_mp(a: float, b: float, z: float) -> float:
    """mpmath's own confluent hypergeometric implementation."""
    with mp.workdps(40):
        return float(mp.hyp1f1(a, b, z))
