"""Brute-force reference implementations used only by the tests.

Everything here is written with plain Python loops and ``math.fsum`` so it
shares no code path with the package.
"""

from __future__ import annotations

import math
from datetime import timedelta

import numpy as np


def mean(x):
    return math.fsum(x) / len(x)


def pstd(x):
    m = mean(x)
    return math.sqrt(math.fsum((v - m) ** 2 for v in x) / len(x))


def pearson(x, y):
    mx, my = mean(x), mean(y)
    num = math.fsum((a - mx) * (b - my) for a, b in zip(x, y))
    sx = math.fsum((a - mx) ** 2 for a in x)
    sy = math.fsum((b - my) ** 2 for b in y)
    return num / math.sqrt(sx * sy)


def skewness(x):
    n = len(x)
    m = mean(x)
    m2 = math.fsum((v - m) ** 2 for v in x) / n
    m3 = math.fsum((v - m) ** 3 for v in x) / n
    return math.sqrt(n * (n - 1)) / (n - 2) * m3 / m2**1.5


def acf(x, max_lag):
    out = [1.0]
    for lag in range(1, max_lag + 1):
        out.append(pearson(x[:-lag], x[lag:]))
    return out


def fft_peak_freqs(x, rate, count, pad=16):
    """Frequencies of the ``count`` largest local maxima of a zero-padded spectrum."""
    x = np.asarray(x, dtype=float) - np.mean(x)
    n = x.size * pad
    amp = np.abs(np.fft.rfft(x, n=n))
    freqs = np.fft.rfftfreq(n, 1.0 / rate)
    peaks = [i for i in range(1, amp.size - 1) if amp[i] > amp[i - 1] and amp[i] >= amp[i + 1]]
    peaks.sort(key=lambda i: -amp[i])
    return sorted(freqs[i] for i in peaks[:count])


def critical_week_start(records, region):
    """Try every calendar start date; skip windows with a missing hour."""
    pen = {}
    for r in records:
        if r.region is region:
            pen[(r.date, r.hour)] = (r.wind_mw + r.solar_mw + r.der_mw) / r.demand_mw * 100.0
    best, best_day = -math.inf, None
    for start in sorted({d for d, _ in pen}):
        keys = [(start + timedelta(days=k), h) for k in range(7) for h in range(24)]
        if all(k in pen for k in keys):
            m = math.fsum(pen[k] for k in keys) / len(keys)
            if m > best:
                best, best_day = m, start
    return best_day, best


def reference_vmd(x, alpha, n_modes, tol=1e-7, max_iters=500):
    """Textbook VMD on the two-sided spectrum of the mirrored signal.

    Uniform centre initialisation, no dual ascent, no mean removal. Returns
    ``(modes, centres)`` with centres in cycles per sample.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    half = n // 2
    f = np.concatenate([x[:half][::-1], x, x[n - (n - half):][::-1]])
    size = f.size
    freqs = np.arange(size) / size - 0.5 - 1.0 / size
    f_hat = np.fft.fftshift(np.fft.fft(f))
    f_hat_plus = f_hat.copy()
    f_hat_plus[: size // 2] = 0
    u_hat = np.zeros((n_modes, size), dtype=complex)
    omega = np.array([0.5 / n_modes * k for k in range(n_modes)])
    for _ in range(max_iters):
        prev = u_hat.copy()
        for k in range(n_modes):
            others = u_hat.sum(axis=0) - u_hat[k]
            u_hat[k] = (f_hat_plus - others) / (1 + 2 * alpha * (freqs - omega[k]) ** 2)
            pos = slice(size // 2, size)
            power = np.abs(u_hat[k, pos]) ** 2
            omega[k] = np.dot(freqs[pos], power) / power.sum()
        diff = np.sum(np.abs(u_hat - prev) ** 2) / size
        if diff < tol:
            break
    full = np.zeros_like(u_hat)
    full[:, size // 2:] = u_hat[:, size // 2:]
    full[:, 1: size // 2 + 1] = np.conj(u_hat[:, size // 2:][:, ::-1])[:, : size // 2]
    full[:, 0] = np.conj(full[:, -1])
    modes = np.real(np.fft.ifft(np.fft.ifftshift(full, axes=-1), axis=-1))
    return modes[:, half: half + n], omega
