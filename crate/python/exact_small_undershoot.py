"""Exact P(X_{T(s)-} <= c s) for the log-corrected tail used in the A7 experiment.

Pi(x, inf) = x^{-1/2} (1 + log(1 + x)) / Gamma(1/2), with c(s) = s^{-0.4}.

    P = int_0^{cs} Pi(s - y, inf) U(dy)
      = U(cs) Pi(s - cs, inf) - int_0^{cs} U(y) pi(s - y) dy

where pi = -dPi/dx and the renewal function U has Laplace transform
1 / (lambda Phi(lambda)).  U is recovered by 14-term Stehfest inversion in
double precision on a log grid and interpolated with a cubic spline in
log-log coordinates.  Independent of the Rust crate: numpy/scipy only.

    python3 python/exact_small_undershoot.py 1e2 1e3 1e4
"""

import sys
from math import factorial, gamma, log

import numpy as np
from scipy import integrate, interpolate

ALPHA = 0.5
G = gamma(1 - ALPHA)


def ell(x):
    return 1 + np.log1p(x)


def tail(x):
    return x ** (-ALPHA) * ell(x) / G


def density(x):
    return (ALPHA * x ** (-ALPHA - 1) * ell(x) - x ** (-ALPHA) / (1 + x)) / G


def phi(lam):
    f = lambda x: np.exp(-lam * x) * tail(x)
    pts = [0, 1 / lam, 10 / lam, 100 / lam]
    v = sum(integrate.quad(f, pts[i], pts[i + 1], limit=200, epsabs=0, epsrel=1e-13)[0] for i in range(3))
    return lam * (v + integrate.quad(f, pts[-1], np.inf, limit=200)[0])


def stehfest(n):
    h = n // 2
    out = []
    for k in range(1, n + 1):
        s = 0.0
        for j in range((k + 1) // 2, min(k, h) + 1):
            s += j**h * factorial(2 * j) / (
                factorial(h - j) * factorial(j) * factorial(j - 1) * factorial(k - j) * factorial(2 * j - k)
            )
        out.append((-1) ** (k + h) * s)
    return out


V = stehfest(14)


def renewal(y):
    a = log(2) / y
    return a * sum(V[k] / ((k + 1) * a * phi((k + 1) * a)) for k in range(14))


def main(levels):
    top = max(s ** 0.6 for s in levels)
    ys = np.logspace(-8, np.log10(top) + 0.3, 100)
    us = np.array([renewal(y) for y in ys])
    spline = interpolate.CubicSpline(np.log(ys), np.log(us))
    u = lambda y: float(np.exp(spline(np.log(y)))) if y > ys[0] else us[0] * (y / ys[0]) ** ALPHA
    print("s,c,exact_p,target,exact_ratio")
    for s in levels:
        c = s**-0.4
        y0 = c * s
        parts = [(0, 1e-8), (1e-8, y0 / 100), (y0 / 100, y0 / 10), (y0 / 10, y0)]
        inner = sum(integrate.quad(lambda y: u(y) * density(s - y), lo, hi, limit=200)[0] for lo, hi in parts)
        p = u(y0) * tail(s - y0) - inner
        target = np.sin(np.pi * ALPHA) / (np.pi * ALPHA) * ell(s) / ell(y0) * c**ALPHA
        print(f"{s:g},{c:.6g},{p:.6f},{target:.6f},{p / target:.4f}")


if __name__ == "__main__":
    import warnings

    warnings.simplefilter("ignore")
    main([float(a) for a in sys.argv[1:]] or [1e2, 1e3, 1e4])
