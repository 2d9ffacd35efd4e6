"""Reference values frozen in the C++ tests. Run with python3; needs scipy and mpmath."""
import math

import mpmath as mp
import numpy as np
from scipy import special, stats

mp.mp.dps = 30

TABLE3 = [
    (30, 75, 3), (210, 90, 3.2), (300, 30, 3.2), (330, 30, 2.5), (450, 75, 9), (540, 60, 6.3),
    (690, 60, 4.6), (810, 75, 9), (870, 60, 9), (1020, 60, 5), (1170, 45, 1.8), (1230, 30, 2.2),
    (1350, 75, 5.8), (1470, 45, 3.8), (1530, 60, 5.7), (1650, 21, 1.5), (1740, 60, 7), (1800, 45, 6),
    (1890, 75, 7.5), (1950, 45, 3.7), (2070, 60, 5.5), (2220, 75, 4.5), (2430, 60, 1.7), (2580, 60, 1.4),
    (2640, 60, 4.9), (2760, 60, 9.8), (2940, 90, 12), (3120, 30, 1.7), (3210, 45, 4.2), (3300, 30, 2.5),
    (3390, 30, 1.5), (3450, 60, 5.8),
]


def table3():
    t0 = [r[0] for r in TABLE3]
    w = [r[1] for r in TABLE3]
    sp = [b - a for a, b in zip(t0, t0[1:])]
    mean_d = sum(sp) / len(sp)
    mean_w = sum(w) / len(w)
    print(f"table3 mean_spacing {mean_d!r} mean_width {mean_w!r} ratio {mean_w / mean_d!r}")
    x = sorted(s / mean_d for s in sp)
    d = stats.kstest(x, lambda v: 1 - np.exp(-np.pi * v * v / 4)).statistic
    n = len(x)
    en = math.sqrt(n)
    print(f"table3 wigner ks D {float(d)!r} p(stephens) {float(special.kolmogorov((en + 0.12 + 0.11 / en) * d))!r}")


def kolmogorov():
    for lam in (0.3, 0.8, 1.0, 1.5, 2.5):
        print(f"kolmogorov_q({lam}) = {float(special.kolmogorov(lam))!r}")


def cdfs():
    for x in (0.25, 1.0, 2.0):
        print(f"wigner_cdf({x}) = {1 - math.exp(-math.pi * x * x / 4)!r}")
        print(f"weibull_cdf({x}, 1.5, 3) = {float(stats.weibull_min.cdf(x, 3, scale=1.5))!r}")
        for nu in (1, 2, 4, 10):
            print(f"chisq_cdf({x}, {nu}, 1) = {float(stats.chi2.cdf(x * nu, nu))!r}")
            print(f"chisq_pdf({x}, {nu}, 1) = {float(stats.chi2.pdf(x * nu, nu) * nu)!r}")


def interval_means():
    for (t0, dt, m, lo, hi) in ((100.0, 60.0, 5.0, 90.0, 120.0), (0.0, 21.0, 1.5, 30.0, 60.0),
                                (1800.0, 300.0, -2.0, 1500.0, 1530.0)):
        f = lambda t: m / (1 + (2 * (t - t0) / dt) ** 2)
        print(f"interval_mean({t0},{dt},{m},[{lo},{hi}]) = {float(mp.quad(f, [lo, t0, hi] if lo < t0 < hi else [lo, hi]) / (hi - lo))!r}")


MASK = (1 << 64) - 1


class MT64:
    def __init__(self, seed):
        self.mt = [0] * 312
        self.mt[0] = seed & MASK
        for i in range(1, 312):
            self.mt[i] = (6364136223846793005 * (self.mt[i - 1] ^ (self.mt[i - 1] >> 62)) + i) & MASK
        self.i = 312

    def next(self):
        if self.i >= 312:
            for k in range(312):
                y = (self.mt[k] & 0xFFFFFFFF80000000) | (self.mt[(k + 1) % 312] & 0x7FFFFFFF)
                v = self.mt[(k + 156) % 312] ^ (y >> 1)
                if y & 1:
                    v ^= 0xB5026F5AA96619E9
                self.mt[k] = v
            self.i = 0
        y = self.mt[self.i]
        self.i += 1
        y ^= (y >> 29) & 0x5555555555555555
        y ^= (y << 17) & 0x71D67FFFEDA60000
        y ^= (y << 37) & 0xFFF7EEE000000000
        y ^= y >> 43
        return y & MASK


def rng():
    g = MT64(5489)
    for _ in range(9999):
        g.next()
    print(f"mt19937_64 default 10000th = {g.next()}")
    g = MT64(1)
    u = [((g.next() >> 11) + 0.5) * 2.0 ** -53 for _ in range(4)]
    print(f"seed 1 uniforms {u!r}")
    g = MT64(1)
    u1 = ((g.next() >> 11) + 0.5) * 2.0 ** -53
    u2 = ((g.next() >> 11) + 0.5) * 2.0 ** -53
    print(f"seed 1 first normal {math.sqrt(-2 * math.log(u1)) * math.cos(2 * math.pi * u2)!r}")
    print(f"seed 1 first wigner {math.sqrt(-4 / math.pi * math.log1p(-u1))!r}")


def table3_model_values():
    f = lambda t: sum(m / (1 + (2 * (t - t0) / w) ** 2) for t0, w, m in TABLE3)
    print(f"table3 eval_model(2940) = {f(2940.0)!r}")
    exact = float(mp.quad(f, [0] + [r[0] for r in TABLE3] + [3600]) / 3600)
    n = len(TABLE3)
    est = math.pi / 2 * (sum(r[2] for r in TABLE3) / n) * (sum(r[1] for r in TABLE3) / n) / (3600 / n)
    print(f"table3 window mean (quadrature) = {exact!r} analytic estimate = {est!r}")


if __name__ == "__main__":
    table3()
    kolmogorov()
    cdfs()
    interval_means()
    rng()
    table3_model_values()
