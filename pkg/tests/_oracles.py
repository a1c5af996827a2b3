"""Independent reference evaluations used to freeze expected test values.

Everything here runs in mpmath arbitrary precision and shares no code with
the package: the series oracle scales its working precision with the
cancellation size, and the large-argument oracle truncates the negative-axis
expansion at its smallest term, asserting the certified remainder is far
below any tolerance the tests use.
"""

import mpmath as mp

_W_SERIES = 300.0  # series precision grows like 0.44 * w digits


def mp_ml(alpha, sigma, z):
    """Two-parameter Mittag-Leffler reference value as a float."""
    x = abs(z)
    w = x ** (1.0 / alpha) if x > 0 else 0.0
    if z >= 0 or w <= _W_SERIES:
        dps = int(0.4343 * w) + 40
        with mp.workdps(dps):
            a, s, zz = mp.mpf(alpha), mp.mpf(sigma), mp.mpf(z)
            total = mp.mpf(0)
            tiny = mp.mpf(10) ** (-dps + 8)
            k = 0
            while True:
                term = zz**k * mp.rgamma(a * k + s)
                total += term
                nxt = abs(zz) ** (k + 1) * abs(mp.rgamma(a * (k + 1) + s))
                if k > 4 and abs(term) < tiny and nxt < tiny:
                    return float(total)
                k += 1
                if k > 200000:
                    raise RuntimeError("series oracle did not converge")
    with mp.workdps(60):
        a, s, xx = mp.mpf(alpha), mp.mpf(sigma), mp.mpf(x)
        total = mp.mpf(0)
        kept = mp.mpf(0)
        best_env = mp.inf
        for m in range(1, 20001):
            u = s - a * m
            term = (-1) ** (m - 1) * xx ** (-m) * mp.rgamma(u)
            # sine-free magnitude envelope: near-pole terms are genuinely
            # tiny but say nothing about the tail, so truncation decisions
            # must ignore the sine modulation of the reflection formula
            env = xx ** (-m) * (abs(mp.rgamma(u)) if u >= 0.5 else mp.gamma(1 - u) / mp.pi)
            total += term
            if env < best_env:
                best_env = env
                kept = total
            elif m >= 3 and env > 100 * best_env:
                break
            if m >= 2 and env < abs(total) * mp.mpf(1e-40):
                kept = total
                best_env = env
                break
        assert best_env < abs(kept) * mp.mpf(1e-18), f"oracle not certified at z={z}"
        return float(kept)


def mp_ml_kernel_antiderivative(alpha, lam, t):
    """Term-by-term integral of the singular kernel: the series of
    t^(alpha-1) E_{alpha,alpha}(-lam t^alpha) integrated on [0, t]."""
    with mp.workdps(50):
        a, L, tt = mp.mpf(alpha), mp.mpf(lam), mp.mpf(t)
        total = mp.mpf(0)
        for k in range(0, 4000):
            term = (-L) ** k * tt ** (a * (k + 1)) * mp.rgamma(a * (k + 1) + 1)
            total += term
            if k > 4 and abs(term) < mp.mpf(1e-45) * max(abs(total), mp.mpf(1e-30)):
                return float(total)
        raise RuntimeError("kernel integral oracle did not converge")


def mp_caputo_of_power(alpha, power, t):
    """Caputo derivative of t^power (power > 0):
    Gamma(power+1)/Gamma(power+1-alpha) * t^(power-alpha)."""
    with mp.workdps(40):
        a, p, tt = mp.mpf(alpha), mp.mpf(power), mp.mpf(t)
        return float(mp.gamma(p + 1) / mp.gamma(p + 1 - a) * tt ** (p - a))
