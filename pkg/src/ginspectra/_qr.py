"""Numba kernels for the native complex Schur decomposition.

Pipeline: diagonal balancing -> Householder reduction to upper Hessenberg form
-> implicitly shifted single-shift QR with Givens bulge chasing and deflation.
Schur vectors are accumulated so that ``B = Q T Q^H`` for the balanced ``B``.
"""

import numpy as np
from numba import njit

EPS = np.finfo(np.float64).eps
SAFMIN = np.finfo(np.float64).tiny

STATUS_OK = 0
STATUS_NO_CONVERGENCE = 1

EXCEPTIONAL_EVERY = 10
SWEEPS_PER_DIM = 30


@njit(cache=True)
def balance_scaling(A):
    """Parlett-Reinsch scaling by powers of two, in place.

    Returns ``d`` with ``A_out = diag(d)^-1 A_in diag(d)``; the transformation is exact.
    """
    n = A.shape[0]
    d = np.ones(n)
    radix = 2.0
    sqrdx = radix * radix
    done = False
    while not done:
        done = True
        for i in range(n):
            c = 0.0
            r = 0.0
            for j in range(n):
                if j != i:
                    c += abs(A[j, i])
                    r += abs(A[i, j])
            if c == 0.0 or r == 0.0:
                continue
            g = r / radix
            f = 1.0
            s = c + r
            while c < g:
                f *= radix
                c *= sqrdx
            g = r * radix
            while c > g:
                f /= radix
                c /= sqrdx
            if (c + r) / f < 0.95 * s:
                done = False
                d[i] *= f
                for j in range(n):
                    A[i, j] /= f
                    A[j, i] *= f
    return d


@njit(cache=True)
def hessenberg(H, Q):
    """Householder reduction of ``H`` to upper Hessenberg form, in place; ``Q <- Q P``."""
    n = H.shape[0]
    for k in range(n - 2):
        m = n - k - 1
        v = np.empty(m, dtype=np.complex128)
        xnorm = 0.0
        for i in range(m):
            v[i] = H[k + 1 + i, k]
            xnorm += v[i].real ** 2 + v[i].imag ** 2
        xnorm = np.sqrt(xnorm)
        if xnorm == 0.0:
            continue
        x0 = v[0]
        a0 = abs(x0)
        phase = x0 / a0 if a0 != 0.0 else 1.0 + 0.0j
        alpha = -phase * xnorm
        v[0] = x0 - alpha
        vnorm = 0.0
        for i in range(m):
            vnorm += v[i].real ** 2 + v[i].imag ** 2
        vnorm = np.sqrt(vnorm)
        if vnorm == 0.0:
            continue
        for i in range(m):
            v[i] /= vnorm
        # H <- P H on rows k+1.., P = I - 2 v v^H
        for j in range(k, n):
            s = 0.0j
            for i in range(m):
                s += v[i].conjugate() * H[k + 1 + i, j]
            s *= 2.0
            for i in range(m):
                H[k + 1 + i, j] -= v[i] * s
        # H <- H P on columns k+1..
        for i in range(n):
            s = 0.0j
            for jj in range(m):
                s += H[i, k + 1 + jj] * v[jj]
            s *= 2.0
            for jj in range(m):
                H[i, k + 1 + jj] -= s * v[jj].conjugate()
        for i in range(n):
            s = 0.0j
            for jj in range(m):
                s += Q[i, k + 1 + jj] * v[jj]
            s *= 2.0
            for jj in range(m):
                Q[i, k + 1 + jj] -= s * v[jj].conjugate()
        H[k + 1, k] = alpha
        for i in range(k + 2, n):
            H[i, k] = 0.0j


@njit(cache=True)
def _givens(x, y):
    # c real, s complex with [c s; -conj(s) c] [x; y] = [r; 0]
    ax = abs(x)
    ay = abs(y)
    if ay == 0.0:
        return 1.0, 0.0j, x
    if ax == 0.0:
        return 0.0, y.conjugate() / ay, ay + 0.0j
    nu = np.hypot(ax, ay)
    c = ax / nu
    ph = x / ax
    s = ph * y.conjugate() / nu
    return c, s, ph * nu


@njit(cache=True)
def _wilkinson(a, b, c, d):
    p = 0.5 * (a - d)
    disc = np.sqrt(p * p + b * c)
    if abs(p + disc) < abs(p - disc):
        disc = -disc
    den = p + disc
    if den == 0.0:
        return d
    return d - b * c / den


@njit(cache=True)
def schur_qr(H, Q):
    """Reduce upper Hessenberg ``H`` to upper triangular form in place.

    Returns ``(status, sweeps)``; ``Q`` accumulates the unitary similarity.
    """
    n = H.shape[0]
    if n == 0:
        return STATUS_OK, 0
    smlnum = SAFMIN * (n / EPS)
    hi = n - 1
    its = 0
    total = 0
    max_sweeps = SWEEPS_PER_DIM * max(n, 1)
    while hi >= 0:
        l = hi
        while l > 0:
            h = abs(H[l, l - 1])
            tst = abs(H[l - 1, l - 1]) + abs(H[l, l])
            if tst == 0.0:
                if l - 2 >= 0:
                    tst += abs(H[l - 1, l - 2])
                if l + 1 <= hi:
                    tst += abs(H[l + 1, l])
            if h <= EPS * tst or h <= smlnum:
                H[l, l - 1] = 0.0j
                break
            l -= 1
        if l == hi:
            hi -= 1
            its = 0
            continue
        if total >= max_sweeps:
            return STATUS_NO_CONVERGENCE, total
        its += 1
        total += 1
        if its % EXCEPTIONAL_EVERY == 0:
            mu = H[hi, hi] + 0.75 * abs(H[hi, hi - 1])
        else:
            mu = _wilkinson(H[hi - 1, hi - 1], H[hi - 1, hi], H[hi, hi - 1], H[hi, hi])
        for k in range(l, hi):
            if k == l:
                x = H[l, l] - mu
                y = H[l + 1, l]
                c, s, r = _givens(x, y)
                jstart = l
            else:
                c, s, r = _givens(H[k, k - 1], H[k + 1, k - 1])
                H[k, k - 1] = r
                H[k + 1, k - 1] = 0.0j
                jstart = k
            sc = s.conjugate()
            for j in range(jstart, n):
                t1 = H[k, j]
                t2 = H[k + 1, j]
                H[k, j] = c * t1 + s * t2
                H[k + 1, j] = -sc * t1 + c * t2
            iend = min(k + 2, hi)
            for i in range(iend + 1):
                t1 = H[i, k]
                t2 = H[i, k + 1]
                H[i, k] = c * t1 + sc * t2
                H[i, k + 1] = -s * t1 + c * t2
            for i in range(n):
                t1 = Q[i, k]
                t2 = Q[i, k + 1]
                Q[i, k] = c * t1 + sc * t2
                Q[i, k + 1] = -s * t1 + c * t2
    return STATUS_OK, total


def native_schur(A, balance=True):
    """Complex Schur form of ``A`` by the native kernels.

    Returns ``(T, Q, d, status)`` with ``diag(d)^-1 A diag(d) = Q T Q^H``.
    """
    H = np.array(A, dtype=np.complex128, order="C", copy=True)
    n = H.shape[0]
    d = balance_scaling(H) if balance else np.ones(n)
    Q = np.eye(n, dtype=np.complex128)
    hessenberg(H, Q)
    status, _ = schur_qr(H, Q)
    return np.triu(H), Q, d, status
