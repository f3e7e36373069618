"""Hot numeric loops.

Every function here is written in the numpy subset numba understands and is
compiled with ``@jit`` unless ``DTPH_DISABLE_NUMBA`` is set, in which case the
same source runs under CPython. Callers always go through these names, so the
two paths share one implementation (except ``cholesky_flagged``, whose numpy
path delegates to LAPACK).
"""
import numpy as np

from ._accel import USE_NUMBA, jit

# ---------------------------------------------------------------------------
# eigenvalues: Householder-Hessenberg + shifted QR
# ---------------------------------------------------------------------------


@jit
def hessenberg(a):
    """Unitary similarity reduction of ``a`` to upper Hessenberg form."""
    h = a.copy()
    n = h.shape[0]
    for k in range(n - 2):
        x = h[k + 1:, k].copy()
        alpha = np.sqrt(np.sum(np.abs(x) ** 2))
        if alpha == 0.0:
            continue
        x0 = x[0]
        ax0 = np.abs(x0)
        if ax0 == 0.0:
            phase = x0 * 0.0 + 1.0
        else:
            phase = x0 / ax0
        v = x
        v[0] = x0 + phase * alpha
        v = v / np.sqrt(np.sum(np.abs(v) ** 2))
        vc = np.conj(v)
        sub = np.ascontiguousarray(h[k + 1:, k:])
        h[k + 1:, k:] = sub - 2.0 * np.outer(v, vc @ sub)
        sub = np.ascontiguousarray(h[:, k + 1:])
        h[:, k + 1:] = sub - 2.0 * np.outer(sub @ v, vc)
        h[k + 2:, k] = 0.0
    return h


@jit
def hqr_real(h_in, max_sweeps):
    """Eigenvalues of a real upper Hessenberg matrix (Francis double shift).

    Returns ``(wr, wi, ok)``; ``ok`` is False when an eigenvalue failed to
    deflate within ``max_sweeps`` iterations.
    """
    a = h_in.copy()
    n = a.shape[0]
    wr = np.zeros(n)
    wi = np.zeros(n)
    anorm = 0.0
    for i in range(n):
        for j in range(max(i - 1, 0), n):
            anorm += abs(a[i, j])
    nn = n - 1
    t = 0.0
    p = q = r = s = w = x = y = z = 0.0
    while nn >= 0:
        its = 0
        while True:
            l = nn
            while l >= 1:
                s = abs(a[l - 1, l - 1]) + abs(a[l, l])
                if s == 0.0:
                    s = anorm
                if abs(a[l, l - 1]) + s == s:
                    a[l, l - 1] = 0.0
                    break
                l -= 1
            x = a[nn, nn]
            if l == nn:
                wr[nn] = x + t
                wi[nn] = 0.0
                nn -= 1
                break
            y = a[nn - 1, nn - 1]
            w = a[nn, nn - 1] * a[nn - 1, nn]
            if l == nn - 1:
                p = 0.5 * (y - x)
                q = p * p + w
                z = np.sqrt(abs(q))
                x += t
                if q >= 0.0:
                    z = p + (z if p >= 0.0 else -z)
                    wr[nn - 1] = x + z
                    wr[nn] = x + z
                    if z != 0.0:
                        wr[nn] = x - w / z
                    wi[nn - 1] = 0.0
                    wi[nn] = 0.0
                else:
                    wr[nn - 1] = x + p
                    wr[nn] = x + p
                    wi[nn - 1] = -z
                    wi[nn] = z
                nn -= 2
                break
            if its >= max_sweeps:
                return wr, wi, False
            if its == 10 or its == 20:
                t += x
                for i in range(nn + 1):
                    a[i, i] -= x
                s = abs(a[nn, nn - 1]) + abs(a[nn - 1, nn - 2])
                x = 0.75 * s
                y = x
                w = -0.4375 * s * s
            its += 1
            m = nn - 2
            while m >= l:
                z = a[m, m]
                r = x - z
                s = y - z
                p = (r * s - w) / a[m + 1, m] + a[m, m + 1]
                q = a[m + 1, m + 1] - z - r - s
                r = a[m + 2, m + 1]
                s = abs(p) + abs(q) + abs(r)
                p /= s
                q /= s
                r /= s
                if m == l:
                    break
                u = abs(a[m, m - 1]) * (abs(q) + abs(r))
                v = abs(p) * (abs(a[m - 1, m - 1]) + abs(z) + abs(a[m + 1, m + 1]))
                if u + v == v:
                    break
                m -= 1
            for i in range(m + 2, nn + 1):
                a[i, i - 2] = 0.0
                if i != m + 2:
                    a[i, i - 3] = 0.0
            k = m
            while k <= nn - 1:
                if k != m:
                    p = a[k, k - 1]
                    q = a[k + 1, k - 1]
                    r = 0.0
                    if k != nn - 1:
                        r = a[k + 2, k - 1]
                    x = abs(p) + abs(q) + abs(r)
                    if x != 0.0:
                        p /= x
                        q /= x
                        r /= x
                s = np.sqrt(p * p + q * q + r * r)
                if p < 0.0:
                    s = -s
                if s != 0.0:
                    if k == m:
                        if l != m:
                            a[k, k - 1] = -a[k, k - 1]
                    else:
                        a[k, k - 1] = -s * x
                    p += s
                    x = p / s
                    y = q / s
                    z = r / s
                    q /= p
                    r /= p
                    for j in range(k, nn + 1):
                        p = a[k, j] + q * a[k + 1, j]
                        if k != nn - 1:
                            p += r * a[k + 2, j]
                            a[k + 2, j] -= p * z
                        a[k + 1, j] -= p * y
                        a[k, j] -= p * x
                    mmin = nn if nn < k + 3 else k + 3
                    for i in range(l, mmin + 1):
                        p = x * a[i, k] + y * a[i, k + 1]
                        if k != nn - 1:
                            p += z * a[i, k + 2]
                            a[i, k + 2] -= p * r
                        a[i, k + 1] -= p * q
                        a[i, k] -= p
                k += 1
    return wr, wi, True


@jit
def qr_complex(h_in, max_sweeps):
    """Eigenvalues of a complex upper Hessenberg matrix.

    Explicit single-shift QR with Wilkinson shifts and Givens rotations,
    restricted to the active unreduced block. Returns ``(w, ok)``.
    """
    h = h_in.copy()
    n = h.shape[0]
    w = np.zeros(n, dtype=np.complex128)
    eps = 2.220446049250313e-16
    anorm = 0.0
    for i in range(n):
        for j in range(n):
            anorm += abs(h[i, j])
    if anorm == 0.0:
        return w, True
    cs = np.zeros(n, dtype=np.complex128)
    sn = np.zeros(n, dtype=np.complex128)
    hi = n - 1
    its = 0
    while hi >= 0:
        if hi == 0:
            w[0] = h[0, 0]
            break
        l = hi
        while l >= 1:
            s = abs(h[l - 1, l - 1]) + abs(h[l, l])
            if s == 0.0:
                s = anorm
            if abs(h[l, l - 1]) <= eps * s:
                h[l, l - 1] = 0.0
                break
            l -= 1
        if l == hi:
            w[hi] = h[hi, hi]
            hi -= 1
            its = 0
            continue
        if its >= max_sweeps:
            return w, False
        a = h[hi - 1, hi - 1]
        b = h[hi - 1, hi]
        c = h[hi, hi - 1]
        d = h[hi, hi]
        half_tr = 0.5 * (a + d)
        disc = np.sqrt(half_tr * half_tr - (a * d - b * c))
        mu1 = half_tr + disc
        mu2 = half_tr - disc
        mu = mu1 if abs(mu1 - d) < abs(mu2 - d) else mu2
        if its == 10 or its == 20:
            mu = d + 0.75 * abs(c) * (1.0 + 0.5j)
        its += 1
        for i in range(l, hi + 1):
            h[i, i] -= mu
        for k in range(l, hi):
            x = h[k, k]
            y = h[k + 1, k]
            rr = np.sqrt(abs(x) ** 2 + abs(y) ** 2)
            if rr == 0.0:
                ck = 1.0 + 0.0j
                sk = 0.0 + 0.0j
            else:
                ck = x / rr
                sk = y / rr
            cs[k] = ck
            sn[k] = sk
            for j in range(k, hi + 1):
                t1 = h[k, j]
                t2 = h[k + 1, j]
                h[k, j] = np.conj(ck) * t1 + np.conj(sk) * t2
                h[k + 1, j] = -sk * t1 + ck * t2
        for k in range(l, hi):
            ck = cs[k]
            sk = sn[k]
            top = min(k + 2, hi)
            for i in range(l, top + 1):
                t1 = h[i, k]
                t2 = h[i, k + 1]
                h[i, k] = ck * t1 + sk * t2
                h[i, k + 1] = -np.conj(sk) * t1 + np.conj(ck) * t2
        for i in range(l, hi + 1):
            h[i, i] += mu
    return w, True


# ---------------------------------------------------------------------------
# Cholesky with a success flag
# ---------------------------------------------------------------------------


def _cholesky_loop(a):
    n = a.shape[0]
    L = np.zeros((n, n))
    for j in range(n):
        d = a[j, j]
        for k in range(j):
            d -= L[j, k] * L[j, k]
        if not d > 0.0:
            return L, False
        ljj = np.sqrt(d)
        L[j, j] = ljj
        for i in range(j + 1, n):
            acc = a[i, j]
            for k in range(j):
                acc -= L[i, k] * L[j, k]
            L[i, j] = acc / ljj
    return L, True


def _cholesky_lapack(a):
    try:
        return np.linalg.cholesky(a), True
    except np.linalg.LinAlgError:
        return np.zeros_like(a), False


cholesky_flagged = jit(_cholesky_loop) if USE_NUMBA else _cholesky_lapack


@jit
def _lower_inverse(L):
    n = L.shape[0]
    inv = np.zeros((n, n))
    for j in range(n):
        inv[j, j] = 1.0 / L[j, j]
        for i in range(j + 1, n):
            acc = 0.0
            for k in range(j, i):
                acc -= L[i, k] * inv[k, j]
            inv[i, j] = acc / L[i, i]
    return inv


# ---------------------------------------------------------------------------
# log-det barrier path following for  max c'y  s.t.  F0 + sum y_i F_i > 0
# ---------------------------------------------------------------------------


@jit
def _block_values(F0, Fi, offsets, y, j):
    lo = offsets[j]
    hi = offsets[j + 1]
    F = F0[lo:hi, lo:hi].copy()
    for i in range(y.shape[0]):
        if y[i] != 0.0:
            F += y[i] * Fi[i, lo:hi, lo:hi]
    return F


@jit
def _barrier_value(F0, Fi, offsets, y, c, s):
    """Return (value, ok) of  -s c'y - log det F(y)."""
    val = -s * np.dot(c, y)
    for j in range(offsets.shape[0] - 1):
        F = _block_values(F0, Fi, offsets, y, j)
        L, ok = cholesky_flagged(F)
        if not ok:
            return np.inf, False
        for i in range(L.shape[0]):
            val -= 2.0 * np.log(L[i, i])
    return val, True


@jit
def barrier_maximize(F0, Fi, offsets, c, y0, gap_tol, max_newton):
    """Maximise ``c'y`` over the interior of a block-diagonal LMI.

    ``F0`` and ``Fi[i]`` are real symmetric and block diagonal with block
    boundaries ``offsets``; ``y0`` must be strictly feasible. Returns
    ``(y, status, gap)`` with status 0 converged, 1 Newton budget exhausted,
    2 infeasible start.
    """
    p = y0.shape[0]
    nblocks = offsets.shape[0] - 1
    theta = float(offsets[nblocks] - offsets[0])
    y = y0.copy()
    f, ok = _barrier_value(F0, Fi, offsets, y, c, 1.0)
    if not ok:
        return y, 2, np.inf
    s = 1.0
    newton = 0
    while True:
        # centering
        for _inner in range(60):
            grad = -s * c
            H = np.zeros((p, p))
            for j in range(nblocks):
                lo = offsets[j]
                hi = offsets[j + 1]
                b = hi - lo
                F = _block_values(F0, Fi, offsets, y, j)
                L, ok = cholesky_flagged(F)
                Li = _lower_inverse(L)
                LiT = Li.T.copy()
                G = np.empty((p, b * b))
                for i in range(p):
                    Gi = Li @ np.ascontiguousarray(Fi[i, lo:hi, lo:hi]) @ LiT
                    tr = 0.0
                    for a in range(b):
                        tr += Gi[a, a]
                    grad[i] -= tr
                    G[i, :] = Gi.ravel()
                H += G @ G.T
            # Jacobi scaling keeps the Newton system usable near the boundary
            d = np.empty(p)
            for i in range(p):
                d[i] = 1.0 / np.sqrt(H[i, i] + 1e-300)
            Hs = H * np.outer(d, d)
            for i in range(p):
                Hs[i, i] += 1e-13
            step = d * np.linalg.solve(Hs, -grad * d)
            dec = -np.dot(grad, step)
            newton += 1
            if dec <= 1e-9:
                break
            alpha = 1.0
            accepted = False
            y_new = y.copy()
            f_cur, ok = _barrier_value(F0, Fi, offsets, y, c, s)
            slack = 1e-13 * (1.0 + abs(f_cur))
            for _ in range(60):
                y_new = y + alpha * step
                f_new, ok = _barrier_value(F0, Fi, offsets, y_new, c, s)
                if ok and f_new <= f_cur - 0.25 * alpha * dec + slack:
                    accepted = True
                    break
                alpha *= 0.5
            if not accepted:
                break
            y = y_new
            if newton >= max_newton:
                return y, 1, theta / s
            if alpha * dec < 1e-12 * (1.0 + abs(f_cur)):
                break
        if theta / s <= gap_tol:
            return y, 0, theta / s
        if newton >= max_newton:
            return y, 1, theta / s
        s *= 8.0


# ---------------------------------------------------------------------------
# linear recursions
# ---------------------------------------------------------------------------


@jit
def affine_recursion(M, x0, forcing):
    """States of ``x_{k+1} = M x_k + forcing[k]`` for k = 0..K-1."""
    K = forcing.shape[0]
    out = np.empty((K + 1, x0.shape[0]), dtype=forcing.dtype)
    x = x0.copy()
    out[0] = x
    for k in range(K):
        x = M @ x + forcing[k]
        out[k + 1] = x
    return out

