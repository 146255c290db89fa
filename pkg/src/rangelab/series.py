"""Truncated power series arithmetic used by the renewal computations."""

import numpy as np

_DIRECT_LIMIT = 256


def _fft_len(n: int) -> int:
    return 1 << max(1, int(np.ceil(np.log2(max(n, 1)))))


def series_mul(a, b, n: int) -> np.ndarray:
    """First ``n`` coefficients of ``a(s) * b(s)``."""
    a = np.asarray(a, dtype=np.float64)[:n]
    b = np.asarray(b, dtype=np.float64)[:n]
    if min(a.size, b.size) <= _DIRECT_LIMIT:
        out = np.convolve(a, b)[:n]
    else:
        L = _fft_len(a.size + b.size - 1)
        out = np.fft.irfft(np.fft.rfft(a, L) * np.fft.rfft(b, L), L)[:n]
    if out.size < n:
        out = np.concatenate([out, np.zeros(n - out.size)])
    return out


def series_inverse(a, n: int) -> np.ndarray:
    """First ``n`` coefficients of ``1 / a(s)`` by Newton iteration (needs ``a[0] != 0``)."""
    a = np.asarray(a, dtype=np.float64)
    if a[0] == 0:
        raise ZeroDivisionError("constant term is zero")
    b = np.array([1.0 / a[0]])
    m = 1
    while m < n:
        m = min(2 * m, n)
        ab = series_mul(a[:m], b, m)
        ab = -ab
        ab[0] += 2.0
        b = series_mul(b, ab, m)
    return b[:n]


def renewal_first_passage(p, u) -> np.ndarray:
    """Solve ``p_k = sum_{j=1..k} f_j u_{k-j}`` for ``f`` by forward substitution.

    ``u[0]`` must be 1.  This is the quadratic-time reference path.
    """
    p = np.asarray(p, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    n = p.size
    f = np.zeros(n)
    for k in range(1, n):
        # u[k-1:0:-1] pairs f_1..f_{k-1} with u_{k-1}..u_1
        f[k] = p[k] - (np.dot(f[1:k], u[k - 1:0:-1]) if k > 1 else 0.0)
    return f
