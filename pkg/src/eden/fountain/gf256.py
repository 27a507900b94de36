"""Table-driven GF(2^8) arithmetic modulo x^8 + x^4 + x^3 + x^2 + 1 (0x11D)."""

from __future__ import annotations

import numpy as np

POLY = 0x11D


def _build_tables():
    exp = np.zeros(512, dtype=np.uint8)
    log = np.zeros(256, dtype=np.int32)
    x = 1
    for i in range(255):
        exp[i] = x
        log[x] = i
        x <<= 1
        if x & 0x100:
            x ^= POLY
    exp[255:510] = exp[:255]
    a = np.arange(256)
    mul = exp[(log[a][:, None] + log[a][None, :]) % 255].astype(np.uint8)
    mul[0, :] = 0
    mul[:, 0] = 0
    inv = np.zeros(256, dtype=np.uint8)
    inv[1:] = exp[(255 - log[1:]) % 255]
    return exp, log, mul, inv


EXP, LOG, MUL, INV = _build_tables()
_CHUNK = 1 << 22


def combine(coefficients: np.ndarray, rows: np.ndarray) -> np.ndarray:
    """Linear combinations ``coefficients @ rows`` over GF(256).

    ``coefficients`` is (m, k), ``rows`` is (k, n); the result is (m, n).
    """
    coefficients = np.asarray(coefficients, dtype=np.uint8)
    rows = np.asarray(rows, dtype=np.uint8)
    m, k = coefficients.shape
    n = rows.shape[1]
    out = np.empty((m, n), dtype=np.uint8)
    # bound the (chunk, k, n) product table to a few megabytes
    step = max(1, _CHUNK // max(1, k * n))
    for lo in range(0, m, step):
        products = MUL[coefficients[lo : lo + step, :, None], rows[None, :, :]]
        out[lo : lo + step] = np.bitwise_xor.reduce(products, axis=1)
    return out


def solve(matrix: np.ndarray, rhs: np.ndarray) -> np.ndarray | None:
    """Solve ``matrix @ x = rhs`` for x when the (n, k) matrix has rank k.

    Returns the (k, width) solution or None when the rank is short.  Inputs
    are copied; overdetermined consistent systems are fine.
    """
    a = np.array(matrix, dtype=np.uint8, copy=True)
    b = np.array(rhs, dtype=np.uint8, copy=True)
    n, k = a.shape
    if n < k:
        return None
    # forward elimination to unit upper-triangular form
    for col in range(k):
        nonzero = np.flatnonzero(a[col:, col])
        if nonzero.size == 0:
            return None
        pr = col + int(nonzero[0])
        if pr != col:
            a[[col, pr]] = a[[pr, col]]
            b[[col, pr]] = b[[pr, col]]
        f = INV[a[col, col]]
        a[col, col:] = MUL[f][a[col, col:]]
        b[col] = MUL[f][b[col]]
        below = col + 1 + np.flatnonzero(a[col + 1 :, col])
        if below.size:
            fh = a[below, col][:, None]
            a[below, col:] ^= MUL[fh, a[col, col:][None, :]]
            b[below] ^= MUL[fh, b[col][None, :]]
    for col in range(k - 1, 0, -1):
        above = np.flatnonzero(a[:col, col])
        if above.size:
            b[above] ^= MUL[a[above, col][:, None], b[col][None, :]]
    return b[:k]
